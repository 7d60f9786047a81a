"""Time evolution of the exact (computational-basis) density matrix."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .integrate import integrate
from .liouvillian import ConfigError, Generator, ModelParams
from .observables import PartialTracer, pair_observables, relative_coherence, von_neumann_entropy
from .operators import HilbertDims, excitation_counts
from .states import DensityMatrix, StateCorruptionError, basis_index

log = logging.getLogger(__name__)

RTOL = 1e-8
ATOL = 1e-10
EIG_CHECK_EVERY = 10

Observer = Callable[[float, DensityMatrix], dict]


@dataclass(frozen=True)
class TimeGrid:
    t_max: float = 10.0
    n_points: int = 2001

    def __post_init__(self):
        if self.n_points < 2 or self.t_max <= 0:
            raise ConfigError("time grid needs t_max > 0 and n_points >= 2")

    @property
    def times(self) -> np.ndarray:
        return np.linspace(0.0, self.t_max, self.n_points)

    @property
    def step(self) -> float:
        return self.t_max / (self.n_points - 1)


@dataclass
class TrajectoryResult:
    times: np.ndarray
    series: dict[str, np.ndarray]
    diagnostics: dict[str, float] = field(default_factory=dict)
    final_state: object = None
    snapshots: list | None = None

    def __getitem__(self, key: str) -> np.ndarray:
        return self.series[key]


def initial_state(params: ModelParams, dims: HilbertDims | None = None) -> DensityMatrix:
    """All emitters in |g>, cavity in the Fock state |n_p>."""
    dims = params.dims() if dims is None else dims
    n_p = params.n_photons
    if n_p >= dims.fock_dim:
        raise ConfigError(f"n_p={n_p} exceeds Fock cutoff {dims.fock_dim - 1}")
    rho = np.zeros((dims.total_dim,) * 2, dtype=complex)
    k = basis_index("g" * dims.n_emitters, n_p, dims)
    rho[k, k] = 1.0
    return DensityMatrix(rho, dims)


def pair_observer(dims: HilbertDims, support=None, sites=(0, 1), global_entropy=False) -> Observer:
    """Observer producing the six pair quantities on ``sites``.

    With ``global_entropy`` S and C_rel are taken on the full emitter+cavity
    state instead of the pair.
    """
    if dims.n_emitters < 2:
        raise ValueError("pair observables need at least two emitters")
    tracer = PartialTracer(dims, list(sites), support=support)

    def observe(t: float, rho: DensityMatrix) -> dict:
        obs = pair_observables(tracer(rho))
        row = obs.as_row()
        if global_entropy:
            row["S"] = von_neumann_entropy(rho.matrix)
            row["c_rel"] = relative_coherence(rho.matrix)
        return row

    return observe


def excitation_support(gen: Generator, rho0: DensityMatrix) -> np.ndarray | None:
    """Basis states with excitation number <= that of rho0, if invariant.

    Returns None when the generator can raise the excitation number, in which
    case no restriction is exact.
    """
    exc = excitation_counts(gen.dims)
    h = gen.hamiltonian.matrix
    rows, cols = np.nonzero(np.abs(h) > 0)
    if np.any(exc[rows] != exc[cols]):
        return None
    for op, _ in gen.collapse_set:
        rows, cols = np.nonzero(np.abs(op.matrix) > 0)
        if np.any(exc[rows] > exc[cols]):
            return None
    diag = np.abs(np.diag(rho0.full()))
    occupied = np.nonzero(diag > 0)[0]
    top = exc[occupied].max() if occupied.size else 0
    return np.nonzero(exc <= top)[0]


def _symmetrizer(diag: dict):
    def post(y):
        herm = 0.5 * (y + y.conj().T)
        corr = float(np.max(np.abs(herm - y)))
        diag["max_hermitian_correction"] = max(diag["max_hermitian_correction"], corr)
        if corr > 1e-10:
            raise StateCorruptionError(f"hermiticity correction {corr:.3e} exceeds 1e-10")
        return herm

    return post


def evolve(
    gen: Generator,
    rho0: DensityMatrix,
    grid: TimeGrid,
    observer: Observer | None = None,
    rtol: float = RTOL,
    atol: float = ATOL,
    restrict: bool = True,
    snapshots: bool = False,
) -> TrajectoryResult:
    """Integrate the master equation and sample ``observer`` on the grid.

    When the generator never raises the excitation number the evolution is
    carried out on the subspace reachable from ``rho0``, which is exact.
    """
    rho0.check()
    dims = gen.dims
    support = excitation_support(gen, rho0) if restrict else None
    if support is not None and support.size == dims.total_dim:
        support = None
    if support is None:
        rhs = gen._compiled
        y0 = rho0.full().copy()
    else:
        rhs = gen.restricted(support)
        y0 = rho0.full()[np.ix_(support, support)].copy()
    if observer is None:
        observer = pair_observer(dims, support=support)

    times = grid.times
    rows: list[dict] = [None] * len(times)
    kept: list | None = [] if snapshots else None
    diag = {
        "max_trace_drift": 0.0,
        "max_hermitian_drift": 0.0,
        "max_hermitian_correction": 0.0,
        "min_eigenvalue": np.inf,
    }

    def on_output(i, t, y):
        state = DensityMatrix(y, dims, support)
        drift = abs(np.trace(y) - 1)
        herm = state.hermiticity_error()
        diag["max_trace_drift"] = max(diag["max_trace_drift"], drift)
        diag["max_hermitian_drift"] = max(diag["max_hermitian_drift"], herm)
        if drift > 1e-9 or herm > 1e-10:
            raise StateCorruptionError(f"t={t:.6g}: trace drift {drift:.3e}, hermiticity {herm:.3e}")
        if i % EIG_CHECK_EVERY == 0 or i == len(times) - 1:
            lam = state.min_eigenvalue()
            diag["min_eigenvalue"] = min(diag["min_eigenvalue"], lam)
            if lam < -1e-8:
                raise StateCorruptionError(f"t={t:.6g}: min eigenvalue {lam:.3e}")
        rows[i] = observer(t, state)
        if kept is not None:
            kept.append(state)

    final, stats = integrate(
        lambda t, y: rhs(y), y0, times, on_output, rtol=rtol, atol=atol, post_step=_symmetrizer(diag)
    )
    diag.update(n_steps=stats.n_steps, n_rejected=stats.n_rejected, n_rhs=stats.n_rhs)
    log.debug("evolve: %s", diag)
    keys = list(rows[0].keys())
    series = {k: np.array([r[k] for r in rows], dtype=float) for k in keys}
    return TrajectoryResult(times, series, diag, DensityMatrix(final, dims, support), kept)
