"""Method comparisons and cell-size sweeps shared by the CLI and the tests."""

from __future__ import annotations

import dataclasses
import time
from dataclasses import dataclass

import numpy as np

from . import oracle
from .model import Circle, Discretization, Layered, ObservationCircle, Scenario
from .solver import SolveReport, bcgs_solve, build_forward, scattered_on_circle

__all__ = [
    "MethodRun",
    "run_method",
    "reference_field",
    "field_error",
    "CompareResult",
    "compare",
    "SweepRow",
    "benchmark",
]


@dataclass
class MethodRun:
    method: str
    report: SolveReport
    scattered: np.ndarray
    shape: tuple[int, int]
    precompute_time: float
    wall_time: float

    @property
    def cells(self) -> int:
        return int(self.shape[0] * self.shape[1])


def run_method(scenario: Scenario, method: str, disc: Discretization, circle: ObservationCircle,
               tol: float | None = None, max_iter: int | None = None,
               include_precompute: bool = False, repeat: int = 1) -> MethodRun:
    """Build, solve and evaluate the exterior field for one backend.

    ``wall_time`` is the best of ``repeat`` solves, plus the table or kernel
    build time when ``include_precompute`` is set.
    """
    tol = scenario.solver.tol if tol is None else tol
    max_iter = scenario.solver.max_iter if max_iter is None else max_iter
    op, pre = build_forward(scenario, method, disc)
    best = None
    for _ in range(max(1, repeat)):
        rep = bcgs_solve(op, tol=tol, max_iter=max_iter)
        if best is None or rep.wall_time < best.wall_time:
            best = rep
    t0 = time.perf_counter()
    es = scattered_on_circle(op, best.field, circle)
    best.scattered = es
    best.precompute_time = pre
    best.extra["exterior_time"] = time.perf_counter() - t0
    wall = best.wall_time + (pre if include_precompute else 0.0)
    return MethodRun(method, best, es, tuple(op.backend.shape), pre, wall)


def _analytic_cylinder(scenario: Scenario):
    shapes = scenario.material.shapes
    if len(shapes) != 1:
        return None
    s = shapes[0]
    if tuple(s.center) != (0.0, 0.0):
        return None
    if isinstance(s, Layered):
        return oracle.LayeredCylinder(tuple(s.radii), tuple(s.eps_r), tuple(s.sigma), scenario.background)
    if isinstance(s, Circle):
        return oracle.LayeredCylinder((s.radius,), (s.eps_r,), (s.sigma,), scenario.background)
    return None


def reference_field(scenario: Scenario, circle: ObservationCircle, cell_size: float,
                    tol: float | None = None, max_iter: int | None = None):
    """Reference scattered field on ``circle`` and a label saying what it is.

    * no scatterer: zeros (``"zero"``)
    * a single centred circle or layered cylinder: the exact series
      (``"analytic"``)
    * anything else: a polar solve with half the cell size and twice the
      angular samples (``"refined-polar"``)
    """
    if not scenario.material.shapes:
        return "zero", np.zeros(circle.n_samples, dtype=complex)
    cyl = _analytic_cylinder(scenario)
    if cyl is not None:
        return "analytic", oracle.analytic_scattered(cyl, scenario.k_b, scenario.frequency, circle)
    coarse = scenario.discretize(cell_size)
    fine_sc = dataclasses.replace(scenario, n_phi=2 * coarse.polar.n_phi)
    fine = fine_sc.discretize(cell_size / 2)
    run = run_method(fine_sc, "polar", fine, circle, tol, max_iter)
    return "refined-polar", run.scattered


def field_error(reference: np.ndarray, computed: np.ndarray) -> float:
    """Relative L2 error; zero when both fields vanish identically."""
    if not np.any(reference) and not np.any(computed):
        return 0.0
    return oracle.relative_error(reference, computed)


@dataclass
class CompareResult:
    scenario: str
    reference: str
    delta: float
    runs: tuple[MethodRun, MethodRun]
    errors: tuple[float, float]
    time_ratio: float
    efficiency_gain: float
    violates_bound: bool

    @property
    def metrics(self) -> oracle.ComparisonMetrics:
        a, b = self.runs
        return oracle.ComparisonMetrics(self.errors[1], self.errors[0], self.time_ratio,
                                        self.efficiency_gain, b.report.iterations, a.report.iterations)


def _gain(cart: MethodRun, polar: MethodRun) -> float:
    n2, n1 = cart.report.iterations, polar.report.iterations
    if n2 == 0 or n1 == 0 or cart.method != "cartesian" or polar.method != "polar":
        return float("nan")
    nx, ny = cart.shape
    m, n = polar.shape
    return oracle.efficiency_gain(n2, nx, ny, n1, m, n)


def compare(scenario: Scenario, methods=("cartesian", "polar"), cell_size: float | None = None,
            tol: float | None = None, max_iter: int | None = None,
            include_precompute: bool = False, repeat: int = 1, reference=None) -> CompareResult:
    """Solve with two backends (first in the time-ratio numerator) and score both.

    ``reference`` may be a ``(label, field)`` pair computed beforehand.
    """
    disc = scenario.discretize(cell_size)
    circle = scenario.observation(disc)
    runs = tuple(run_method(scenario, m, disc, circle, tol, max_iter, include_precompute, repeat)
                 for m in methods)
    label, ref = reference if reference is not None else reference_field(scenario, circle, disc.delta, tol, max_iter)
    errors = tuple(field_error(ref, r.scattered) for r in runs)
    ratio = runs[0].wall_time / runs[1].wall_time if runs[1].wall_time > 0 else float("nan")
    return CompareResult(scenario.name, label, disc.delta, runs, errors, ratio,
                         _gain(runs[0], runs[1]), disc.violates_bound)


@dataclass
class SweepRow:
    delta: float
    result: CompareResult

    @property
    def cartesian(self) -> MethodRun:
        return self.result.runs[0]

    @property
    def polar(self) -> MethodRun:
        return self.result.runs[1]


def benchmark(scenario: Scenario, cell_sizes, tol: float | None = None, max_iter: int | None = None,
              include_precompute: bool = False, repeat: int = 1):
    """Cartesian and polar runs for each cell size, scored against one reference.

    ``cell_sizes`` must be strictly decreasing.  The reference is computed once
    at half the smallest cell size (see :func:`reference_field`) on the
    observation circle of the first grid.

    Returns ``(reference_label, rows)``.
    """
    sizes = [float(c) for c in cell_sizes]
    if not sizes or any(b >= a for a, b in zip(sizes, sizes[1:])) or sizes[-1] <= 0:
        raise ValueError("cell sizes must be positive and strictly decreasing")
    circle = scenario.observation(scenario.discretize(sizes[0]))
    ref = reference_field(scenario, circle, sizes[-1], tol, max_iter)
    rows = [SweepRow(d, compare(scenario, ("cartesian", "polar"), d, tol, max_iter,
                                include_precompute, repeat, ref)) for d in sizes]
    return ref[0], rows
