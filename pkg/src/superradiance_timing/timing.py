"""Extremal times, their ordering, the ln(N)/N^alpha fit and the entanglement onset."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

log = logging.getLogger(__name__)

# which extremum marks each quantity
EXTREMUM_KIND = {"c_rel": "max", "c0_re": "max", "W": "min", "czz": "min"}
# expected order of the extremal times
HIERARCHY = ("c_rel", "c0_re", "W", "czz")
TIE_STEPS = 2


class AnalysisError(RuntimeError):
    pass


class NoExtremumError(AnalysisError):
    def __init__(self, message: str, boundary_index: int):
        super().__init__(message)
        self.boundary_index = boundary_index


class DegenerateExtremumError(AnalysisError):
    pass


class NoThresholdError(AnalysisError):
    pass


@dataclass(frozen=True)
class ExtremumRecord:
    quantity: str
    kind: str
    tau: float
    value: float
    grid_index: int


@dataclass(frozen=True)
class ScalingFit:
    alpha: float
    prefactor: float
    residual: float
    n_values: tuple[int, ...]


@dataclass(frozen=True)
class GapRecord:
    g: float
    tau_cw: float
    tau_ew: float
    taus: dict = field(default_factory=dict, compare=False)
    missing: tuple[str, ...] = ()


@dataclass(frozen=True)
class PairCheck:
    first: str
    second: str
    gap: float
    holds: bool
    tie: bool


@dataclass(frozen=True)
class OrderingReport:
    order: list[str]
    checks: list[PairCheck]

    @property
    def violations(self) -> list[PairCheck]:
        return [c for c in self.checks if not c.holds]

    @property
    def ok(self) -> bool:
        return not self.violations


def _parabola_vertex(x, y):
    """Vertex of the parabola through three points."""
    (x0, x1, x2), (y0, y1, y2) = x, y
    d0, d2 = x0 - x1, x2 - x1
    denom = d0 * d2 * (d0 - d2)
    a = (d2 * (y0 - y1) - d0 * (y2 - y1)) / denom
    b = (d0 * d0 * (y2 - y1) - d2 * d2 * (y0 - y1)) / denom
    if a == 0:
        return x1, y1
    shift = -b / (2 * a)
    return x1 + shift, y1 + b * shift + a * shift * shift


def find_extremum(times, values, kind: str, quantity: str = "") -> ExtremumRecord:
    """First interior grid extremum of ``kind``, refined by a parabola.

    A grid point qualifies when it is at least as extreme as its left
    neighbour and strictly more extreme than its right one, both up to a
    relative noise tolerance of 1e-12.
    """
    if kind not in ("max", "min"):
        raise ValueError(f"kind must be 'max' or 'min', got {kind!r}")
    t = np.asarray(times, dtype=float)
    v = np.asarray(values, dtype=float)
    if t.size < 3 or t.size != v.size:
        raise ValueError("need at least 3 points and equal lengths")
    span = float(np.max(v) - np.min(v))
    scale = max(float(np.max(np.abs(v))), 1e-300)
    if span <= 1e-14 * scale or span == 0:
        raise DegenerateExtremumError(f"{quantity or 'series'} is flat")
    s = v if kind == "max" else -v
    tol = 1e-12 * scale
    hits = np.nonzero((s[1:-1] >= s[:-2] - tol) & (s[1:-1] > s[2:] + tol))[0]
    if hits.size == 0:
        boundary = int(np.argmax(s))
        raise NoExtremumError(
            f"{quantity or 'series'}: no interior {kind} (extreme at index {boundary})", boundary
        )
    i = int(hits[0]) + 1
    tau, val = _parabola_vertex(t[i - 1 : i + 2], v[i - 1 : i + 2])
    lo, hi = t[i - 1], t[i + 1]
    if not lo <= tau <= hi:
        tau, val = t[i], v[i]
    return ExtremumRecord(quantity, kind, float(tau), float(val), i)


def trajectory_extrema(result, quantities=HIERARCHY) -> dict[str, ExtremumRecord]:
    return {q: find_extremum(result.times, result.series[q], EXTREMUM_KIND[q], q) for q in quantities}


def has_extrema(result, quantities=HIERARCHY) -> bool:
    try:
        trajectory_extrema(result, quantities)
    except NoExtremumError:
        return False
    return True


def extremum_ordering(records: dict[str, ExtremumRecord], tie_tol: float, expected=HIERARCHY) -> OrderingReport:
    """Sort by time and test ``tau_a <= tau_b`` (within ``tie_tol``) along ``expected``."""
    missing = [q for q in expected if q not in records]
    if missing:
        raise NoExtremumError(f"missing extremum records for {missing}", -1)
    order = sorted(expected, key=lambda q: (records[q].tau, expected.index(q)))
    checks = []
    for a, b in zip(expected[:-1], expected[1:]):
        gap = records[b].tau - records[a].tau
        checks.append(PairCheck(a, b, gap, holds=gap >= -tie_tol, tie=abs(gap) <= tie_tol))
    return OrderingReport(order, checks)


def fit_alpha(ns: Sequence[int], taus: Sequence[float]) -> ScalingFit:
    """Least-squares fit of tau = prefactor * ln(N) / N^alpha in log space."""
    ns = np.asarray(ns, dtype=float)
    taus = np.asarray(taus, dtype=float)
    if ns.shape != taus.shape:
        raise ValueError("ns and taus differ in length")
    if np.any(ns < 2):
        raise ValueError("N must be >= 2 (ln ln N undefined)")
    if np.any(taus <= 0):
        raise ValueError("all taus must be positive")
    if len(set(ns.tolist())) < 3:
        raise ValueError("need at least 3 distinct N")
    x = np.log(ns)
    y = np.log(taus) - np.log(np.log(ns))
    design = np.column_stack([x, np.ones_like(x)])
    (slope, intercept), *_ = np.linalg.lstsq(design, y, rcond=None)
    resid = y - design @ np.array([slope, intercept])
    return ScalingFit(
        alpha=float(-slope),
        prefactor=float(math.exp(intercept)),
        residual=float(np.sqrt(np.mean(resid**2))),
        n_values=tuple(int(n) for n in ns),
    )


def bisect_threshold(predicate: Callable[[float], bool], lo: float, hi: float, tol: float = 1e-3):
    """Smallest x in [lo, hi] where ``predicate`` turns true, to ``tol``.

    Returns ``(threshold, n_midpoint_evaluations)``. The predicate must be
    false at ``lo`` and true at ``hi``.
    """
    if not lo < hi:
        raise ValueError("need lo < hi")
    p_lo, p_hi = predicate(lo), predicate(hi)
    if p_lo == p_hi:
        raise NoThresholdError(
            f"predicate is {p_lo} at both ends of [{lo:g}, {hi:g}]; no threshold inside"
        )
    if p_lo and not p_hi:
        raise NoThresholdError("predicate is true below and false above; expected the opposite")
    n_eval = 0
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        n_eval += 1
        if predicate(mid):
            hi = mid
        else:
            lo = mid
    return 0.5 * (lo + hi), n_eval


def max_bisection_steps(width: float, tol: float) -> int:
    return max(0, math.ceil(math.log2(width / tol)))


def _parallel_map(fn, items, workers: int):
    items = list(items)
    if workers <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    from concurrent.futures import ProcessPoolExecutor

    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


def min_witness(params, grid, backend: str = "auto") -> float:
    """Smallest <W> over the horizon, with the grid taken in units of 1/g."""
    from .backends import scaled_grid, simulate

    result = simulate(params, scaled_grid(grid, params.g), backend)
    return float(np.min(result.series["W"]))


def find_gw(params, g_range: tuple[float, float], grid=None, backend: str = "auto", tol: float = 1e-3) -> float:
    """Coupling above which the witness dips below zero, by bisection on g.

    The lower end of ``g_range`` may be 0.
    """
    from .propagator import TimeGrid

    grid = grid or TimeGrid()

    def entangled(g: float) -> bool:
        if g == 0:
            # uncoupled emitters stay in the all-ground product state, W = 2
            return False
        w = min_witness(params.with_(g=g), grid, backend)
        log.debug("g=%.6g min W=%.6g", g, w)
        return w < 0

    g_w, _ = bisect_threshold(entangled, g_range[0], g_range[1], tol)
    return g_w


def _gap_point(args) -> GapRecord:
    from .backends import scaled_grid, simulate_until

    params, grid, backend = args
    quantities = ("c_rel", "c0_re", "W")
    result, _ = simulate_until(
        params, scaled_grid(grid, params.g), lambda r: has_extrema(r, quantities), backend
    )
    taus, missing = {}, []
    for q in quantities:
        try:
            taus[q] = find_extremum(result.times, result.series[q], EXTREMUM_KIND[q], q).tau
        except (NoExtremumError, DegenerateExtremumError):
            missing.append(q)
            taus[q] = float("nan")
    return GapRecord(
        g=params.g,
        tau_cw=taus["c0_re"] - taus["c_rel"],
        tau_ew=taus["W"] - taus["c_rel"],
        taus=taus,
        missing=tuple(missing),
    )


def gap_sweep(params, g_values, grid=None, backend: str = "auto", workers: int = 1) -> list[GapRecord]:
    """Time gaps relative to the coherence peak for each coupling in ``g_values``.

    Each grid is fixed in g*t, so every point has the same relative resolution.
    Points without an extremum come back with NaN gaps and ``missing`` set.
    """
    from .propagator import TimeGrid

    grid = grid or TimeGrid()
    jobs = [(params.with_(g=float(g)), grid, backend) for g in g_values]
    return _parallel_map(_gap_point, jobs, workers)
