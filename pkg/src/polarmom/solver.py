"""Bi-CGSTAB solution of the discretised field equation with either backend.

The unknown is the total field E on the cell centres; the equation is

    L(E) = E - k_b^2 A(chi * E) = E^i
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from .cartesian_op import CartesianOperator, build_kernel
from .model import (Discretization, ObservationCircle, Scenario, incident_field,
                    sample_contrast_cartesian, sample_contrast_polar)
from .polar_op import PolarOperator, precompute_tables

__all__ = [
    "ForwardOperator",
    "SolveReport",
    "apply_L",
    "bcgs_solve",
    "scattered_on_circle",
    "build_forward",
]

RECOMPUTE_EVERY = 25
MAX_RESTARTS = 3
BREAKDOWN = 1e-30


@dataclass
class ForwardOperator:
    """Field operator for one object on one grid.

    ``backend`` is a :class:`PolarOperator` or :class:`CartesianOperator`;
    both expose ``apply``, ``points``, ``scattered`` and a multiply counter.
    """

    backend: object
    chi: np.ndarray
    k_b: complex

    def __post_init__(self):
        self.chi = np.asarray(self.chi, dtype=complex)
        if self.chi.shape != tuple(self.backend.shape):
            raise ValueError(f"contrast shape {self.chi.shape} does not match grid {self.backend.shape}")
        self.k_b = complex(self.k_b)

    @property
    def method(self) -> str:
        return self.backend.name

    def incident(self) -> np.ndarray:
        x, _ = self.backend.points()
        return incident_field(self.k_b, x)


def apply_L(op: ForwardOperator, E: np.ndarray) -> np.ndarray:
    """E - k_b^2 A(chi E)."""
    return E - op.k_b ** 2 * op.backend.apply(op.chi * E)


@dataclass
class SolveReport:
    method: str
    iterations: int
    residuals: list[float]
    converged: bool
    wall_time: float
    mvps: int
    model_mults: int
    empirical_mults: int
    field: np.ndarray
    restarts: int = 0
    tol: float = 1e-4
    max_iter: int = 500
    precompute_time: float = 0.0
    true_residual: float = 0.0
    scattered: np.ndarray | None = None
    extra: dict = field(default_factory=dict)

    @property
    def empirical_per_mvp(self) -> float:
        return self.empirical_mults / self.mvps if self.mvps else 0.0


def bcgs_solve(op: ForwardOperator, rhs: np.ndarray | None = None, tol: float = 1e-4,
               max_iter: int = 500) -> SolveReport:
    """Bi-CGSTAB on :func:`apply_L` starting from the incident field.

    Stops when ||rhs - L(E)|| / ||rhs|| <= tol.  The recursive residual is
    replaced by the true one every 25 iterations and is confirmed against it
    before convergence is declared.  A breakdown restarts the iteration from
    the current iterate, at most three times.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    b = op.incident() if rhs is None else np.asarray(rhs, dtype=complex)
    if not np.all(np.isfinite(b)):
        raise ValueError("right-hand side is not finite")
    counter = op.backend.counter
    counter.reset()
    t0 = time.perf_counter()
    mvps = 0

    def L(v):
        nonlocal mvps
        mvps += 1
        return apply_L(op, v)

    bnorm = np.linalg.norm(b)
    x = b.copy()
    history: list[float] = []
    if bnorm == 0:
        x[:] = 0
        return _report(op, 0, [0.0], True, t0, mvps, x, 0, tol, max_iter, 0.0)

    def true_res(v):
        return b - L(v)

    r = true_res(x)
    res = np.linalg.norm(r) / bnorm
    history.append(res)
    if res <= tol:
        return _report(op, 0, history, True, t0, mvps, x, 0, tol, max_iter, res)

    it = 0
    restarts = 0
    converged = False
    while it < max_iter:
        r_hat = r.copy()
        rho = alpha = omega = 1.0 + 0j
        v = np.zeros_like(b)
        p = np.zeros_like(b)
        broke = False
        while it < max_iter:
            rho_new = np.vdot(r_hat, r)
            if abs(rho_new) < BREAKDOWN * np.linalg.norm(r_hat) * np.linalg.norm(r):
                broke = True
                break
            beta = (rho_new / rho) * (alpha / omega)
            rho = rho_new
            p = r + beta * (p - omega * v)
            v = L(p)
            den = np.vdot(r_hat, v)
            if abs(den) < BREAKDOWN * np.linalg.norm(r_hat) * np.linalg.norm(v):
                broke = True
                break
            alpha = rho / den
            s = r - alpha * v
            it += 1
            if np.linalg.norm(s) / bnorm <= tol:
                x = x + alpha * p
                r = true_res(x)
                res = np.linalg.norm(r) / bnorm
                history.append(res)
                if res <= tol:
                    converged = True
                    break
                broke = True  # recursive residual drifted; restart from x
                break
            t = L(s)
            tt = np.vdot(t, t).real
            if tt == 0:
                x = x + alpha * p
                broke = True
                break
            omega = np.vdot(t, s) / tt
            x = x + alpha * p + omega * s
            r = s - omega * t
            if it % RECOMPUTE_EVERY == 0:
                r = true_res(x)
            res = np.linalg.norm(r) / bnorm
            history.append(res)
            if res <= tol:
                r = true_res(x)
                res = np.linalg.norm(r) / bnorm
                history[-1] = res
                if res <= tol:
                    converged = True
                    break
            if omega == 0:
                broke = True
                break
        if converged or not broke:
            break
        if restarts >= MAX_RESTARTS:
            break
        restarts += 1
        r = true_res(x)
    final = res if converged else np.linalg.norm(true_res(x)) / bnorm
    return _report(op, it, history, converged, t0, mvps, x, restarts, tol, max_iter, final)


def _report(op, it, history, converged, t0, mvps, x, restarts, tol, max_iter, true_res):
    wall = time.perf_counter() - t0
    return SolveReport(
        method=op.method,
        iterations=it,
        residuals=list(map(float, history)),
        converged=converged,
        wall_time=wall,
        mvps=mvps,
        model_mults=op.backend.model_mults(),
        empirical_mults=op.backend.counter.total,
        field=x,
        restarts=restarts,
        tol=tol,
        max_iter=max_iter,
        true_residual=float(true_res),
    )


def scattered_on_circle(op: ForwardOperator, E: np.ndarray, circle: ObservationCircle) -> np.ndarray:
    """Scattered field k_b^2 A(chi E) on an exterior circle."""
    return op.backend.scattered(op.chi * E, circle.radius, circle.angles)


def build_forward(scenario: Scenario, method: str, disc: Discretization | None = None,
                  subsamples: int | None = None):
    """Backend, contrast and precompute time for one scenario.

    ``subsamples`` overrides the scenario's per-axis contrast averaging
    count.  Returns ``(ForwardOperator, precompute_seconds)``.
    """
    disc = scenario.discretize() if disc is None else disc
    subsamples = scenario.subsamples if subsamples is None else subsamples
    k_b = scenario.k_b
    t0 = time.perf_counter()
    if method == "polar":
        backend = PolarOperator(disc.polar, k_b, precompute_tables(disc.polar, k_b))
        chi = sample_contrast_polar(scenario.material, disc.polar, scenario.background, scenario.frequency,
                                   subsamples)
    elif method == "cartesian":
        backend = CartesianOperator(disc.cartesian, k_b, build_kernel(disc.cartesian, k_b))
        chi = sample_contrast_cartesian(scenario.material, disc.cartesian, scenario.background, scenario.frequency,
                                       subsamples)
    else:
        raise ValueError(f"unknown method {method!r}")
    # first call pays for JIT compilation / cache loading; keep it out of solves
    backend.apply(np.zeros(backend.shape, dtype=complex))
    backend.counter.reset()
    pre = time.perf_counter() - t0
    return ForwardOperator(backend, chi, k_b), pre
