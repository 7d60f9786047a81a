"""Backend selection and trajectory runs with an adaptive horizon."""

from __future__ import annotations

import logging


from .dicke import build_dicke_generator, dicke_initial_state, dicke_observables, evolve_dicke
from .liouvillian import ConfigError, ModelParams, build_generator
from .propagator import ATOL, RTOL, TimeGrid, TrajectoryResult, evolve, excitation_support, initial_state, pair_observer
from .states import StateCorruptionError

log = logging.getLogger(__name__)

BACKENDS = ("exact", "dicke", "auto")
EXACT_AUTO_MAX_N = 9
EXACT_HARD_MAX_N = 12
MAX_HORIZON_DOUBLINGS = 6
ESCALATION_FACTOR = 10.0
MAX_ESCALATIONS = 2


def resolve_backend(backend: str, n_emitters: int) -> str:
    if backend not in BACKENDS:
        raise ConfigError(f"unknown backend {backend!r}; choose from {BACKENDS}")
    if backend == "auto":
        return "exact" if n_emitters <= EXACT_AUTO_MAX_N else "dicke"
    if backend == "exact" and n_emitters > EXACT_HARD_MAX_N:
        raise ConfigError(f"exact backend refuses N={n_emitters} > {EXACT_HARD_MAX_N} (memory guard)")
    return backend


def _run(which, params, grid, global_entropy, rtol, atol) -> TrajectoryResult:
    if which == "exact":
        gen = build_generator(params)
        rho0 = initial_state(params)
        observer = None
        if global_entropy:
            observer = pair_observer(gen.dims, excitation_support(gen, rho0), global_entropy=True)
        return evolve(gen, rho0, grid, observer, rtol=rtol, atol=atol)
    gen = build_dicke_generator(params)
    observer = (lambda t, s: dicke_observables(s, global_entropy=True)) if global_entropy else None
    return evolve_dicke(gen, dicke_initial_state(params, gen.blocks), grid, observer, rtol=rtol, atol=atol)


def simulate(
    params: ModelParams,
    grid: TimeGrid,
    backend: str = "auto",
    global_entropy: bool = False,
    rtol: float | None = None,
    atol: float | None = None,
) -> TrajectoryResult:
    """One trajectory from the all-ground, N/2-photon initial state.

    A run whose state checks fail is repeated with both tolerances divided
    by ``ESCALATION_FACTOR``, at most ``MAX_ESCALATIONS`` times. Weakly damped
    runs need this: their nearly pure states accumulate integration error in
    the null space, seen as negative eigenvalues growing ~ rtol * t.
    """
    which = resolve_backend(backend, params.n_emitters)
    rtol = RTOL if rtol is None else rtol
    atol = ATOL if atol is None else atol
    for attempt in range(MAX_ESCALATIONS + 1):
        try:
            result = _run(which, params, grid, global_entropy, rtol, atol)
            break
        except StateCorruptionError as exc:
            if attempt == MAX_ESCALATIONS:
                raise
            log.info("N=%d rtol=%g: %s; retrying with tighter tolerances", params.n_emitters, rtol, exc)
            rtol /= ESCALATION_FACTOR
            atol /= ESCALATION_FACTOR
    result.diagnostics.update(backend=which, rtol=rtol, atol=atol, tolerance_escalations=attempt)
    return result


def simulate_until(
    params: ModelParams,
    grid: TimeGrid,
    has_everything,
    backend: str = "auto",
    **kwargs,
) -> tuple[TrajectoryResult, TimeGrid]:
    """Run, doubling the horizon (same step) until ``has_everything(result)``.

    The first interior extremum found on [0, T] is also the first on [0, 2T],
    so extending the horizon never changes an extremum already found.
    """
    for _ in range(MAX_HORIZON_DOUBLINGS + 1):
        result = simulate(params, grid, backend, **kwargs)
        if has_everything(result):
            return result, grid
        log.info("extending horizon beyond t_max=%g", grid.t_max)
        grid = TimeGrid(2 * grid.t_max, 2 * grid.n_points - 1)
    return result, grid


def scaled_grid(grid: TimeGrid, g: float) -> TimeGrid:
    """Grid fixed in dimensionless g*t, expressed in absolute time."""
    return TimeGrid(grid.t_max / g, grid.n_points)
