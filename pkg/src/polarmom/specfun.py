"""Cylinder functions, Struve series and ring integrals of rho * G_n(k rho).

The polar operator needs, for every ring ``[lower, upper]`` and every
harmonic order ``n``, the integrals

    int rho' J_n(k rho') d rho'      and      int rho' H_n^(2)(k rho') d rho'.

Orders 0 and 1 have closed forms in terms of Bessel and Struve functions.
Higher orders follow from the three-term Bessel recurrences.  For small
arguments and large orders the raw values leave the double-precision range,
so the table builder works with *log-scaled* quantities:

    l_n(rho) = n * log(|k| rho / 2) - log(n!)

    J-type integrals are stored as  I_n * exp(-l_n(upper))
    Y/H-type integrals are stored as I_n * exp(+l_n(lower))

Both scaled forms stay O(1)-ish in the regimes where the unscaled ones under-
or overflow.
"""

from __future__ import annotations

import enum
import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy import integrate, special

__all__ = [
    "CylKind",
    "RingInterval",
    "SpecfunRangeError",
    "cyl_fn",
    "struve",
    "log_scale",
    "scaled_j",
    "scaled_y",
    "scaled_h2",
    "integral_rho_g0",
    "integral_g0",
    "integral_g1",
    "integral_rho_g1",
    "ring_integral",
    "ring_integral_plain",
    "asymptotic_ring_integral",
    "in_asymptotic_regime",
    "ring_integrals_scaled",
    "quad_ring_integral",
    "Diagnostics",
    "h0_addition_series",
    "addition_terms",
]

STRUVE_BOUND = 60.0
# digits we accept to lose to cancellation before switching method
_MAX_LOSS = 1e6
_CANCEL_RATIO = 1e-8
_TINY = 1e-280


class SpecfunRangeError(ValueError):
    """Argument outside the range where a series is usable."""


class CylKind(enum.Enum):
    BESSEL_J = "J"
    HANKEL2 = "H2"


@dataclass(frozen=True)
class RingInterval:
    lower: float
    upper: float
    k: complex

    def __post_init__(self):
        if not (0.0 <= self.lower <= self.upper):
            raise ValueError(f"invalid ring interval [{self.lower}, {self.upper}]")


@dataclass
class Diagnostics:
    """Counters for the method actually used while filling tables."""

    quadrature_fallbacks: int = 0
    asymptotic_used: int = 0
    log_branch: int = 0

    def merge(self, other: "Diagnostics") -> None:
        self.quadrature_fallbacks += other.quadrature_fallbacks
        self.asymptotic_used += other.asymptotic_used
        self.log_branch += other.log_branch


def _check_finite(x):
    if not np.all(np.isfinite(np.asarray(x))):
        raise ValueError("cylinder function argument must be finite")


def cyl_fn(kind: CylKind, n, x):
    """J_n(x) or H_n^(2)(x) = J_n(x) - j Y_n(x) for integer n (any sign)."""
    _check_finite(x)
    n = np.asarray(n)
    x = np.asarray(x, dtype=complex)
    na = np.abs(n)
    sign = np.where(na % 2 == 1, np.where(n < 0, -1.0, 1.0), 1.0)
    if kind is CylKind.BESSEL_J:
        out = special.jv(na, x)
    else:
        if np.any(x == 0):
            raise ValueError("H_n^(2) is singular at zero argument")
        if np.all(x.imag == 0):
            # keeps the tiny real part (J_n) accurate where |Y_n| is huge
            xr = x.real
            out = special.jv(na, xr) - 1j * special.yv(na, xr)
        else:
            out = special.hankel2(na, x)
    out = sign * out
    return out[()] if out.ndim == 0 else out


def _struve_series(order: int, u):
    """Partial sums of the alternating Struve series; returns (value, max_term)."""
    u = np.asarray(u, dtype=complex)
    u2 = u * u
    if order == 0:
        term = u.copy()
        denom = lambda k: (2 * k + 3) ** 2  # noqa: E731
    else:
        term = u2 / 3.0
        denom = lambda k: (2 * k + 3) * (2 * k + 5)  # noqa: E731
    total = term.copy()
    biggest = np.abs(term)
    k = 0
    while True:
        term = -term * u2 / denom(k)
        total = total + term
        at = np.abs(term)
        biggest = np.maximum(biggest, at)
        k += 1
        past_peak = (2 * k + 3) ** 2 > np.abs(u2).max() if u2.size else True
        if past_peak and np.all(at <= 1e-15 * np.abs(total)):
            break
        if k > 2000:
            break
    return 2.0 / np.pi * total, 2.0 / np.pi * biggest


def struve(order: int, u, bound: float = STRUVE_BOUND):
    """Struve function H_0 or H_1 from its power series.

    Raises SpecfunRangeError for ``|u| > bound``, and also when the series
    cancels more than six digits (from about ``|u| > 18`` on); large
    arguments need an asymptotic treatment which is not provided here.
    """
    if order not in (0, 1):
        raise ValueError("only Struve orders 0 and 1 are supported")
    _check_finite(u)
    if np.any(np.abs(u) > bound):
        raise SpecfunRangeError(
            f"|u| > {bound}: Struve series impractical, use an asymptotic form"
        )
    val, biggest = _struve_series(order, u)
    _check_struve_loss(biggest, val)
    if np.isrealobj(u):
        val = val.real
    return val[()] if np.ndim(val) == 0 else val


# ---------------------------------------------------------------------------
# closed forms for orders 0 and 1


def _g(kind_char, n, x):
    if kind_char == "J":
        return special.jv(n, x)
    return special.yv(n, x)


def _check_struve_loss(biggest, total):
    # the alternating series cancels about log10(biggest term) digits
    if np.any(biggest > _MAX_LOSS * np.maximum(np.abs(total), 1.0)):
        raise SpecfunRangeError(
            "Struve series cancellation exceeds 6 digits at this argument, use an asymptotic form"
        )


def _struve_loss(u):
    """Struve H0/H1 at u plus the cancellation factor of the series."""
    h0, m0 = _struve_series(0, u)
    h1, m1 = _struve_series(1, u)
    loss = np.maximum(m0 / np.maximum(np.abs(h0), _TINY), m1 / np.maximum(np.abs(h1), _TINY))
    return h0, h1, loss


def _antideriv_g0(kind_char, rho, k):
    """rho G0 + pi/2 rho (H0 G1 - H1 G0), the antiderivative of G0(k rho)."""
    rho = np.asarray(rho, dtype=float)
    x = k * rho
    out = np.zeros(np.shape(rho), dtype=complex)
    loss = np.ones(np.shape(rho))
    nz = rho > 0
    if np.any(nz):
        xs = x[nz]
        h0, h1, ls = _struve_loss(xs)
        g0, g1 = _g(kind_char, 0, xs), _g(kind_char, 1, xs)
        out[nz] = rho[nz] * g0 + 0.5 * np.pi * rho[nz] * (h0 * g1 - h1 * g0)
        loss[nz] = ls
    return out, loss


def _antideriv_rho_g1(kind_char, rho, k):
    rho = np.asarray(rho, dtype=float)
    x = k * rho
    out = np.zeros(np.shape(rho), dtype=complex)
    loss = np.ones(np.shape(rho))
    nz = rho > 0
    if np.any(nz):
        xs = x[nz]
        h0, h1, ls = _struve_loss(xs)
        g0, g1 = _g(kind_char, 0, xs), _g(kind_char, 1, xs)
        out[nz] = np.pi / (2 * k) * rho[nz] * (h0 * g1 - h1 * g0)
        loss[nz] = ls
    return out, loss


def _antideriv_rho_g0(kind_char, rho, k):
    rho = np.asarray(rho, dtype=float)
    out = np.zeros(np.shape(rho), dtype=complex)
    nz = rho > 0
    out[nz] = rho[nz] / k * _g(kind_char, 1, k * rho[nz])
    if kind_char == "Y":
        # rho Y_1(k rho) -> -2 / (pi k) as rho -> 0
        out[~nz] = -2.0 / (np.pi * k * k)
    return out


def _check_struve_args(iv: RingInterval):
    if abs(iv.k) * iv.upper > STRUVE_BOUND:
        raise SpecfunRangeError(
            f"|k| * upper = {abs(iv.k) * iv.upper:.3g} exceeds the Struve series bound"
        )
    for order in (0, 1):
        _check_struve_loss(*_struve_series(order, iv.k * iv.upper)[::-1])


def _by_kind(kind, fn_j, fn_y):
    """Combine J and Y parts: H2 = J - jY."""
    if kind is CylKind.BESSEL_J:
        return fn_j()
    return fn_j() - 1j * fn_y()


def integral_rho_g0(kind: CylKind, iv: RingInterval) -> complex:
    """int rho' G_0(k rho') over the interval, via (rho/k) G_1."""
    if iv.lower == iv.upper:
        return 0j

    def part(c):
        v = _antideriv_rho_g0(c, np.array([iv.lower, iv.upper]), iv.k)
        return complex(v[1] - v[0])

    return _by_kind(kind, lambda: part("J"), lambda: part("Y"))


def integral_g0(kind: CylKind, iv: RingInterval) -> complex:
    """int G_0(k rho') over the interval (Struve closed form)."""
    if iv.lower == iv.upper:
        return 0j
    _check_struve_args(iv)

    def part(c):
        v, _ = _antideriv_g0(c, np.array([iv.lower, iv.upper]), iv.k)
        return complex(v[1] - v[0])

    return _by_kind(kind, lambda: part("J"), lambda: part("Y"))


def integral_g1(kind: CylKind, iv: RingInterval) -> complex:
    """int G_1(k rho') over the interval = -[G_0(k rho')]/k."""
    if iv.lower == iv.upper:
        return 0j
    k = iv.k
    if kind is CylKind.HANKEL2 and iv.lower == 0:
        raise ValueError("int H_1^(2) diverges at rho = 0")
    g = lambda r: cyl_fn(kind, 0, k * r) if r > 0 else 1.0  # noqa: E731
    return complex(-(g(iv.upper) - g(iv.lower)) / k)


def integral_rho_g1(kind: CylKind, iv: RingInterval) -> complex:
    """int rho' G_1(k rho') over the interval (Struve closed form)."""
    if iv.lower == iv.upper:
        return 0j
    _check_struve_args(iv)

    def part(c):
        v, _ = _antideriv_rho_g1(c, np.array([iv.lower, iv.upper]), iv.k)
        return complex(v[1] - v[0])

    return _by_kind(kind, lambda: part("J"), lambda: part("Y"))


# ---------------------------------------------------------------------------
# log-scaled Bessel functions


def log_scale(n, rho, k):
    """l_n(rho) = n log(|k| rho / 2) - log n!, broadcasting n against rho."""
    n = np.asarray(n, dtype=float)
    rho = np.asarray(rho, dtype=float)
    with np.errstate(divide="ignore"):
        lr = np.log(abs(k) * rho / 2.0)
    out = n * lr - special.gammaln(n + 1)
    # n = 0 gives 0 even at rho = 0
    return np.where(n == 0, 0.0, out)


def scaled_j(n_max: int, x):
    """J_n(x) * n! / (|x|/2)^n for n = 0..n_max; shape (len(x), n_max+1)."""
    x = np.atleast_1d(np.asarray(x, dtype=complex))
    n = np.arange(n_max + 1)
    ax = np.abs(x)[:, None]
    with np.errstate(all="ignore"):
        raw = special.jv(n[None, :], x[:, None])
        ls = n[None, :] * np.log(ax / 2.0) - special.gammaln(n + 1)[None, :]
        out = raw * np.exp(-ls)
    out[:, 0] = raw[:, 0]
    bad = ~np.isfinite(out) | (np.abs(raw) < _TINY)
    bad[:, 0] = False
    if np.any(bad):
        rows, cols = np.nonzero(bad)
        xs = x[rows]
        ns = cols.astype(float)
        phase = np.where(np.abs(xs) > 0, xs / np.where(np.abs(xs) > 0, np.abs(xs), 1.0), 1.0)
        q = -(xs / 2.0) ** 2
        term = np.ones_like(xs)
        total = term.copy()
        m = 0
        while True:
            m += 1
            term = term * q / (m * (ns + m))
            total += term
            if np.all(np.abs(term) <= 1e-17 * np.abs(total)) or m > 500:
                break
        out[rows, cols] = total * phase ** cols
    return out


def scaled_y(n_max: int, x):
    """Y_n(x) * (|x|/2)^n / n! for n = 0..n_max by upward recurrence."""
    x = np.atleast_1d(np.asarray(x, dtype=complex))
    s = np.abs(x) / 2.0
    out = np.empty((x.size, n_max + 1), dtype=complex)
    out[:, 0] = special.yv(0, x)
    if n_max >= 1:
        out[:, 1] = special.yv(1, x) * s
    unit = np.abs(x) / x
    for n in range(1, n_max):
        out[:, n + 1] = (n / (n + 1)) * unit * out[:, n] - (s * s / (n * (n + 1))) * out[:, n - 1]
    return out


def scaled_h2(n_max: int, x):
    """H_n^(2)(x) * exp(l_n); the J part is folded in with its own scale."""
    x = np.atleast_1d(np.asarray(x, dtype=complex))
    y = scaled_y(n_max, x)
    n = np.arange(n_max + 1)
    ls = n[None, :] * np.log(np.abs(x)[:, None] / 2.0) - special.gammaln(n + 1)[None, :]
    j = scaled_j(n_max, x) * np.exp(2 * ls)
    return j - 1j * y


# ---------------------------------------------------------------------------
# quadrature fallback and oracle-style reference


def quad_ring_integral(kind: CylKind, n: int, iv: RingInterval, weight_rho: bool = True) -> complex:
    """Adaptive Gauss-Kronrod value of int (rho') G_n(k rho') over the interval."""
    if iv.lower == iv.upper:
        return 0j
    k = iv.k

    def f(r):
        if r == 0.0:
            if kind is CylKind.HANKEL2:
                # only reached for n <= 1 with the rho weight
                return 2j / (np.pi * k) if (n == 1 and weight_rho) else 0j
            return (1.0 if n == 0 else 0.0) * (r if weight_rho else 1.0)
        v = complex(cyl_fn(kind, n, k * r))
        return v * r if weight_rho else v

    probes = np.linspace(iv.lower, iv.upper, 7)[1:]
    scale = max(abs(f(p)) for p in probes) or 1.0
    length = iv.upper - iv.lower
    pts = None
    if kind is CylKind.HANKEL2 and iv.lower == 0:
        pts = [iv.upper * 1e-6, iv.upper * 1e-3]
    val, _ = integrate.quad(
        f,
        iv.lower,
        iv.upper,
        complex_func=True,
        epsabs=1e-12 * length * scale,
        epsrel=1e-13,
        limit=400,
        points=pts,
    )
    return complex(val)


def _quad_part(kind_char: str, n: int, a: float, b: float, k: complex, weight_rho: bool) -> complex:
    """Quadrature of the J or Y part alone (a > 0 for Y)."""
    def f(r):
        v = complex(special.jv(n, k * r) if kind_char == "J" else special.yv(n, k * r))
        return v * r if weight_rho else v

    probes = np.linspace(a, b, 7)[1:]
    scale = max(abs(f(p)) for p in probes) or 1.0
    val, _ = integrate.quad(f, a, b, complex_func=True, epsabs=1e-13 * (b - a) * scale,
                            epsrel=1e-13, limit=400)
    return complex(val)


def _fix_seeds(kind_char, a, b, k, K, I, seed_loss):
    """Replace Struve-based seeds that lost too many digits by quadrature."""
    for p in np.nonzero(seed_loss > _MAX_LOSS)[0]:
        if a[p] == b[p]:
            continue
        K[p, 0] = _quad_part(kind_char, 0, a[p], b[p], k, False)
        if I.shape[1] > 1:
            I[p, 1] = _quad_part(kind_char, 1, a[p], b[p], k, True)
        seed_loss[p] = 1.0


# ---------------------------------------------------------------------------
# asymptotic (small argument / large order) forms


def in_asymptotic_regime(n: int, iv: RingInterval) -> bool:
    return n >= 12 and math.e * abs(iv.k) * iv.upper / (2 * n) < 0.25


def _log_power_diff(p: float, a: float, b: float):
    """log|b^p - a^p| (p may be negative, a may be 0) and its sign."""
    if a == 0.0:
        if p <= 0:
            raise ValueError("divergent endpoint")
        return p * math.log(b), 1.0
    la, lb = p * math.log(a), p * math.log(b)
    hi, lo = max(la, lb), min(la, lb)
    mag = hi + math.log(-math.expm1(lo - hi)) if hi != lo else -math.inf
    return mag, (1.0 if lb >= la else -1.0)


def asymptotic_ring_integral(kind: CylKind, n: int, iv: RingInterval, diagnostics: Diagnostics | None = None) -> complex:
    """Leading-order small-argument form of int rho' G_n(k rho') d rho'.

    Uses J_n(x) ~ (e x / 2n)^n / sqrt(2 pi n) and the matching Y_n form; all
    powers are combined as complex logarithms so the intermediate a_n and
    rho^(n+2) factors never over- or underflow on their own.
    """
    if n < 1:
        raise ValueError("asymptotic forms need n >= 1")
    if iv.lower == iv.upper:
        return 0j
    k = iv.k
    log_an = n * (1.0 + np.log(k / (2.0 * n)))  # complex log of a_n
    pref = -0.5 * math.log(2 * math.pi * n)
    lmag, sgn = _log_power_diff(n + 2, iv.lower, iv.upper)
    j_part = sgn * np.exp(pref + log_an + lmag - math.log(n + 2))
    if kind is CylKind.BESSEL_J:
        return complex(j_part)
    if iv.lower == 0:
        raise ValueError("int rho' H_n^(2) diverges at rho = 0 for n >= 2")
    if n == 2:
        if diagnostics is not None:
            diagnostics.log_branch += 1
        # rho * rho^-2 integrates to a logarithm
        y_part = 2j * np.exp(pref - log_an) * math.log(iv.upper / iv.lower)
    else:
        lmag2, sgn2 = _log_power_diff(2 - n, iv.lower, iv.upper)
        y_part = 2j * sgn2 * np.exp(pref - log_an + lmag2) / (2 - n)
    return complex(j_part + y_part)


# ---------------------------------------------------------------------------
# table builder: all orders for many intervals at once


def _j_series_scaled(n_max, a, b, k):
    """J-type integrals scaled by exp(-l_n(b)) by term-wise integration.

    Returns (values, loss) with shape (len(b), n_max+1).
    """
    n = np.arange(n_max + 1, dtype=float)[None, :]
    a = a[:, None]
    b = b[:, None]
    xb = k * b
    q = -(xb / 2.0) ** 2
    with np.errstate(divide="ignore"):
        lr = np.where(a > 0, np.log(np.where(a > 0, a, 1.0) / b), -np.inf)
    phase = (k / abs(k)) ** n

    def weight(p):
        # b^2 (1 - (a/b)^p) / p
        return b * b * (-np.expm1(p * lr)) / p

    coef = np.ones(np.broadcast_shapes(b.shape, n.shape), dtype=complex)
    term = coef * weight(n + 2)
    total = term.copy()
    biggest = np.abs(term)
    m = 0
    while True:
        m += 1
        coef = coef * q / (m * (n + m))
        term = coef * weight(n + 2 * m + 2)
        total += term
        at = np.abs(term)
        biggest = np.maximum(biggest, at)
        if (m * m > np.abs(q).max() and np.all(at <= 1e-17 * np.abs(total))) or m > 4000:
            break
    loss = biggest / np.maximum(np.abs(total), _TINY)
    return total * phase, loss


def _recursion_raw(kind_char, n_max, a, b, k):
    """Unscaled upward recursion for I_n = int rho G_n and K_n = int G_n.

    Returns I, K (shape (len(b), n_max+1)), the largest magnitude seen in each
    step (for cancellation checks) and the Struve loss of the seeds.
    """
    P = b.size
    I = np.zeros((P, n_max + 1), dtype=complex)
    K = np.zeros((P, n_max + 1), dtype=complex)
    big = np.zeros((P, n_max + 1))
    ends = np.stack([a, b], axis=1)
    ga0, la0 = _antideriv_g0(kind_char, ends, k)
    K[:, 0] = ga0[:, 1] - ga0[:, 0]
    rg0 = _antideriv_rho_g0(kind_char, ends, k)
    I[:, 0] = rg0[:, 1] - rg0[:, 0]
    seed_loss = la0.max(axis=1)
    big[:, 0] = np.maximum(np.abs(ga0).max(axis=1), np.abs(rg0).max(axis=1))
    if n_max >= 1:
        g0 = np.where(ends > 0, _g(kind_char, 0, k * np.where(ends > 0, ends, 1.0)), 1.0 if kind_char == "J" else np.nan)
        K[:, 1] = -(g0[:, 1] - g0[:, 0]) / k
        rg1, la1 = _antideriv_rho_g1(kind_char, ends, k)
        I[:, 1] = rg1[:, 1] - rg1[:, 0]
        seed_loss = np.maximum(seed_loss, la1.max(axis=1))
        big[:, 1] = np.maximum(np.abs(g0 / k).max(axis=1), np.abs(rg1).max(axis=1))
    _fix_seeds(kind_char, a, b, k, K, I, seed_loss)
    for nn in range(2, n_max + 1):
        with np.errstate(all="ignore"):
            ga = _g(kind_char, nn - 1, k * ends)
            ga = np.where(ends > 0, ga, 0.0)
            bterm = (2.0 / k) * (ga[:, 1] - ga[:, 0])
            K[:, nn] = K[:, nn - 2] - bterm
            cterm = 2.0 * (nn - 1) / k * K[:, nn - 1]
            I[:, nn] = cterm - I[:, nn - 2]
        big[:, nn] = np.maximum.reduce(
            [np.abs(K[:, nn - 2]), np.abs(bterm), np.abs(cterm), np.abs(I[:, nn - 2]), big[:, nn - 1]]
        )
    return I, K, big, seed_loss


def _y_recursion_scaled(n_max, a, b, k):
    """Y-type integrals I_n scaled by exp(+l_n(a)), a > 0, upward recursion."""
    P = b.size
    sa = abs(k) * a / 2.0
    ends = np.stack([a, b], axis=1)
    ya = scaled_y(n_max, k * a)
    yb = scaled_y(n_max, k * b)
    ratio_log = np.log(a / b)
    I = np.zeros((P, n_max + 1), dtype=complex)
    K = np.zeros((P, n_max + 1), dtype=complex)
    big = np.zeros((P, n_max + 1))
    ga0, la0 = _antideriv_g0("Y", ends, k)
    K[:, 0] = ga0[:, 1] - ga0[:, 0]
    rg0 = _antideriv_rho_g0("Y", ends, k)
    I[:, 0] = rg0[:, 1] - rg0[:, 0]
    seed_loss = la0.max(axis=1)
    big[:, 0] = np.maximum(np.abs(ga0).max(axis=1), np.abs(rg0).max(axis=1))
    if n_max >= 1:
        K[:, 1] = -(special.yv(0, k * b) - special.yv(0, k * a)) / k * sa
        rg1, la1 = _antideriv_rho_g1("Y", ends, k)
        I[:, 1] = (rg1[:, 1] - rg1[:, 0]) * sa
        seed_loss = np.maximum(seed_loss, la1.max(axis=1))
        big[:, 1] = np.maximum(np.abs(K[:, 1]), np.abs(I[:, 1]))
        bad = seed_loss > _MAX_LOSS
        if np.any(bad):
            Kr = np.zeros((P, 2), dtype=complex)
            Ir = np.zeros((P, 2), dtype=complex)
            _fix_seeds("Y", a, b, k, Kr, Ir, seed_loss)
            K[bad, 0] = Kr[bad, 0]
            I[bad, 1] = Ir[bad, 1] * sa[bad]
    for nn in range(2, n_max + 1):
        with np.errstate(under="ignore"):
            yb_s = yb[:, nn - 1] * np.exp((nn - 1) * ratio_log)
        bterm = (2.0 / k) * (sa / nn) * (yb_s - ya[:, nn - 1])
        kprev = (sa * sa / (nn * (nn - 1))) * K[:, nn - 2]
        K[:, nn] = kprev - bterm
        cterm = (2.0 * (nn - 1) / k) * (sa / nn) * K[:, nn - 1]
        iprev = (sa * sa / (nn * (nn - 1))) * I[:, nn - 2]
        I[:, nn] = cterm - iprev
        big[:, nn] = np.maximum.reduce([np.abs(kprev), np.abs(bterm), np.abs(cterm), np.abs(iprev)])
    return I, big, seed_loss


def ring_integrals_scaled(kind: CylKind, n_max: int, lower, upper, k, diagnostics: Diagnostics | None = None):
    """Scaled ring integrals int rho' G_n(k rho') for n = 0..n_max.

    Parameters
    ----------
    kind : CylKind
    n_max : int
    lower, upper : array_like
        Interval end points, one interval per row.
    k : complex
        Background wavenumber.

    Returns
    -------
    values : ndarray, shape (P, n_max + 1)
        For ``BESSEL_J`` the integral times ``exp(-l_n(upper))``; for
        ``HANKEL2`` the integral times ``exp(+l_n(lower))``.  Hankel rows with
        ``lower == 0`` are unscaled and hold NaN for ``n >= 2`` (divergent).
    """
    diag = diagnostics if diagnostics is not None else Diagnostics()
    a = np.atleast_1d(np.asarray(lower, dtype=float))
    b = np.atleast_1d(np.asarray(upper, dtype=float))
    k = complex(k)
    if np.any(a > b) or np.any(a < 0):
        raise ValueError("invalid ring intervals")
    P = b.size
    n = np.arange(n_max + 1)
    empty = b == 0
    bb = np.where(empty, 1.0, b)
    aa = np.where(empty, 0.0, a)

    # J part, scaled by exp(-l_n(b))
    series, sloss = _j_series_scaled(n_max, aa, bb, k)
    jvals = series.copy()
    xb = np.abs(k) * bb
    use_rec = n[None, :] < xb[:, None]
    if np.any(use_rec):
        n_rec = int(min(n_max, np.ceil(xb.max())))
        I, K, big, seed_loss = _recursion_raw("J", n_rec, aa, bb, k)
        ls_b = log_scale(np.arange(n_rec + 1)[None, :], bb[:, None], k)
        with np.errstate(all="ignore"):
            rec_scaled = I * np.exp(-ls_b)
        cols = slice(0, n_rec + 1)
        mask = use_rec[:, cols]
        jvals[:, cols] = np.where(mask, rec_scaled, jvals[:, cols])
        bad = mask & ((np.abs(I) < _CANCEL_RATIO * big) | (seed_loss[:, None] > _MAX_LOSS) | ~np.isfinite(rec_scaled))
        for p, nn in zip(*np.nonzero(bad)):
            v = quad_ring_integral(CylKind.BESSEL_J, int(nn), RingInterval(aa[p], bb[p], k))
            jvals[p, nn] = v * np.exp(-log_scale(nn, bb[p], k))
            diag.quadrature_fallbacks += 1
    bad = (~use_rec) & (sloss > _MAX_LOSS)
    for p, nn in zip(*np.nonzero(bad)):
        v = quad_ring_integral(CylKind.BESSEL_J, int(nn), RingInterval(aa[p], bb[p], k))
        jvals[p, nn] = v * np.exp(-log_scale(nn, bb[p], k))
        diag.quadrature_fallbacks += 1
    jvals[empty] = 0.0
    zero_len = a == b
    jvals[zero_len] = 0.0
    if kind is CylKind.BESSEL_J:
        return jvals

    # Hankel: H = J - jY, scaled by exp(+l_n(a))
    out = np.full((P, n_max + 1), np.nan + 0j)
    pos = (aa > 0) & ~zero_len
    if np.any(pos):
        ap, bp = aa[pos], bb[pos]
        yI, ybig, yloss = _y_recursion_scaled(n_max, ap, bp, k)
        ls_sum = log_scale(n[None, :], ap[:, None], k) + log_scale(n[None, :], bp[:, None], k)
        with np.errstate(under="ignore"):
            jpart = jvals[pos] * np.exp(ls_sum)
        out[pos] = jpart - 1j * yI
        bad = (np.abs(yI) < _CANCEL_RATIO * ybig) | (yloss[:, None] > _MAX_LOSS)
        idx = np.nonzero(pos)[0]
        for p, nn in zip(*np.nonzero(bad)):
            pp = idx[p]
            v = quad_ring_integral(CylKind.HANKEL2, int(nn), RingInterval(aa[pp], bb[pp], k))
            out[pp, nn] = v * np.exp(log_scale(nn, aa[pp], k))
            diag.quadrature_fallbacks += 1
    origin = (aa == 0) & ~zero_len & ~empty
    for p in np.nonzero(origin)[0]:
        iv = RingInterval(0.0, bb[p], k)
        out[p, 0] = integral_rho_g0(CylKind.HANKEL2, iv)
        if n_max >= 1:
            out[p, 1] = integral_rho_g1(CylKind.HANKEL2, iv)
    out[zero_len | empty] = 0.0
    return out


# ---------------------------------------------------------------------------
# scalar entry points


def ring_integral(kind: CylKind, n: int, iv: RingInterval, use_asymptotic: bool = False,
                  diagnostics: Diagnostics | None = None) -> complex:
    """int rho' G_n(k rho') d rho' over the interval, n >= 0.

    With ``use_asymptotic`` the leading-order small-argument form replaces the
    exact evaluation whenever :func:`in_asymptotic_regime` holds.  The default
    exact path may overflow to ``inf`` (or underflow to 0) for extreme orders;
    use :func:`ring_integrals_scaled` there.
    """
    if n < 0:
        raise ValueError("use the reflection J_-n = (-1)^n J_n at the caller")
    if iv.lower == iv.upper:
        return 0j
    if kind is CylKind.HANKEL2 and iv.lower == 0 and n >= 2:
        raise ValueError("int rho' H_n^(2) diverges at rho = 0 for n >= 2")
    if use_asymptotic and in_asymptotic_regime(n, iv):
        if diagnostics is not None:
            diagnostics.asymptotic_used += 1
        return asymptotic_ring_integral(kind, n, iv, diagnostics)
    v = ring_integrals_scaled(kind, n, [iv.lower], [iv.upper], iv.k, diagnostics)[0, n]
    if kind is CylKind.BESSEL_J:
        ls = log_scale(n, iv.upper, iv.k)
        with np.errstate(over="ignore", under="ignore"):
            return complex(v * np.exp(ls))
    if iv.lower == 0:
        return complex(v)
    ls = log_scale(n, iv.lower, iv.k)
    with np.errstate(over="ignore", under="ignore"):
        return complex(v * np.exp(-ls))


def ring_integral_plain(kind: CylKind, n: int, iv: RingInterval) -> complex:
    """int G_n(k rho') d rho' (no rho' weight) by the two-step recurrence."""
    if n < 0:
        raise ValueError("n must be >= 0")
    if iv.lower == iv.upper:
        return 0j
    if kind is CylKind.HANKEL2 and iv.lower == 0 and n >= 1:
        raise ValueError("int H_n^(2) diverges at rho = 0 for n >= 1")
    a = np.array([iv.lower])
    b = np.array([iv.upper])

    def part(c):
        _, K, big, _ = _recursion_raw(c, max(n, 1), a, b, iv.k)
        if abs(K[0, n]) < _CANCEL_RATIO * big[0, n]:
            kk = CylKind.BESSEL_J if c == "J" else None
            if kk is None:
                return (quad_ring_integral(CylKind.BESSEL_J, n, iv, weight_rho=False)
                        - quad_ring_integral(CylKind.HANKEL2, n, iv, weight_rho=False)) / 1j
            return quad_ring_integral(kk, n, iv, weight_rho=False)
        return K[0, n]

    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        return complex(_by_kind(kind, lambda: part("J"), lambda: part("Y")))


def addition_terms(k: complex, rho_small: float, rho_big: float, tol: float | None = None) -> int:
    """Truncation order for the addition series.

    Without ``tol`` this is ceil(|k| rho_>) + 20.  With ``tol`` the count also
    covers the geometric tail (rho_< / rho_>)^n, which dominates when the two
    radii are close.
    """
    n = int(math.ceil(abs(k) * rho_big)) + 20
    if tol is not None and 0 < rho_small < rho_big:
        n += int(math.ceil(math.log(tol) / math.log(rho_small / rho_big)))
    return n


def h0_addition_series(k: complex, rho, rho_src, dphi, n_terms: int | None = None, tol: float | None = None):
    """H_0^(2)(k |r - r'|) from the cylindrical addition theorem.

    sum_n J_n(k rho_<) H_n^(2)(k rho_>) e^{j n dphi} over |n| <= n_terms.
    ``n_terms`` defaults to :func:`addition_terms` per point.  Products are
    formed from log-scaled factors so high orders neither under- nor overflow.
    """
    rho, rho_src, dphi = (np.atleast_1d(np.asarray(v, dtype=float)) for v in
                          np.broadcast_arrays(rho, rho_src, dphi))
    small = np.minimum(rho, rho_src).ravel()
    big = np.maximum(rho, rho_src).ravel()
    dp = dphi.ravel()
    out = np.empty(small.size, dtype=complex)
    for i in range(small.size):
        N = n_terms if n_terms is not None else addition_terms(k, small[i], big[i], tol)
        h = scaled_h2(N, k * big[i])[0]
        if small[i] == 0:
            out[i] = h[0]
            continue
        j = scaled_j(N, k * small[i])[0]
        n = np.arange(N + 1)
        # J_n(a) H_n(b) = Jhat(a) Hhat(b) (a/b)^n; J_{-n} H_{-n} = J_n H_n
        with np.errstate(under="ignore"):
            prod = j * h * np.exp(n * math.log(small[i] / big[i]))
        w = np.where(n == 0, 1.0, 2.0)
        out[i] = np.sum(w * prod * np.cos(n * dp[i]))
    return out.reshape(rho.shape)
