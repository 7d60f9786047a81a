"""Tavis-Cummings Hamiltonian, local Lindblad dissipators and the master-equation RHS.

Units: hbar = 1, frequencies and rates in units of g unless stated otherwise.
The dephasing jump operator is sigma_z itself: a single-qubit coherence
decays at 2 * gamma_phi and the inter-emitter element <s+_i s-_j> at 4 * gamma_phi.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from functools import cached_property

import numpy as np
from scipy import sparse

from .operators import (
    SIGMA_MINUS,
    SIGMA_PLUS,
    SIGMA_Z,
    DimensionError,
    HilbertDims,
    Operator,
    annihilation,
    embed_mode,
    embed_site,
)


class ConfigError(ValueError):
    """Invalid physical or numerical configuration."""


@dataclass(frozen=True)
class ModelParams:
    n_emitters: int = 2
    n_photons_initial: int | None = None
    omega_q: float = 0.0
    omega_c: float = 0.0
    g: float = 1.0
    gamma: float = 0.1
    kappa: float = 0.1
    gamma_phi: float = 0.0225

    def __post_init__(self):
        if self.n_emitters < 1:
            raise ConfigError(f"n_emitters must be >= 1, got {self.n_emitters}")
        if self.g <= 0:
            raise ConfigError(f"g must be > 0, got {self.g}")
        for name in ("gamma", "kappa", "gamma_phi"):
            if getattr(self, name) < 0:
                raise ConfigError(f"{name} must be >= 0, got {getattr(self, name)}")
        if self.n_photons_initial is not None and self.n_photons_initial < 0:
            raise ConfigError("n_photons_initial must be >= 0")

    @property
    def n_photons(self) -> int:
        """Initial photon number; defaults to N/2 for even N."""
        if self.n_photons_initial is not None:
            return int(self.n_photons_initial)
        if self.n_emitters % 2:
            raise ConfigError(
                f"odd N={self.n_emitters} requires an explicit n_photons_initial"
            )
        return self.n_emitters // 2

    @property
    def fock_dim(self) -> int:
        # emitters start in |g>, so n_p bounds the photon number forever
        return self.n_photons + 1

    def dims(self) -> HilbertDims:
        return HilbertDims(self.n_emitters, self.fock_dim)

    def with_(self, **changes) -> "ModelParams":
        return replace(self, **changes)


@dataclass(frozen=True)
class Generator:
    """Hamiltonian plus a list of ``(jump operator, rate)`` pairs."""

    hamiltonian: Operator
    collapse_set: tuple[tuple[Operator, float], ...]

    def __post_init__(self):
        h = self.hamiltonian.matrix
        if np.max(np.abs(h - h.conj().T), initial=0.0) > 1e-12:
            raise ValueError("hamiltonian is not Hermitian")
        for op, rate in self.collapse_set:
            if rate < 0:
                raise ValueError(f"negative rate {rate}")
            if op.dims != self.hamiltonian.dims:
                raise DimensionError("collapse operator dims differ from hamiltonian dims")
        object.__setattr__(self, "collapse_set", tuple(self.collapse_set))

    @property
    def dims(self) -> HilbertDims:
        return self.hamiltonian.dims

    @cached_property
    def _compiled(self) -> "CompiledGenerator":
        return CompiledGenerator.from_matrices(
            self.hamiltonian.matrix,
            [op.matrix for op, _ in self.collapse_set],
            [rate for _, rate in self.collapse_set],
        )

    def restricted(self, indices: np.ndarray) -> "CompiledGenerator":
        """Generator projected onto the basis states ``indices``.

        Exact only when the subspace is invariant under H and under every
        jump operator.
        """
        ix = np.ix_(indices, indices)
        return CompiledGenerator.from_matrices(
            self.hamiltonian.matrix[ix],
            [op.matrix[ix] for op, _ in self.collapse_set],
            [rate for _, rate in self.collapse_set],
        )


class CompiledGenerator:
    """Precomputed operators for the matrix-free RHS.

    ``rhs = -i (H_eff rho - rho H_eff^dag) + sum_k rate_k L_k rho L_k^dag`` with
    ``H_eff = H - (i/2) sum_k rate_k L_k^dag L_k``. The operators are held in
    CSR form (rho stays dense); every product costs nnz * dim.
    """

    def __init__(self, h_eff, jumps):
        self.h_eff = sparse.csr_array(h_eff)
        dim = self.h_eff.shape[0]
        # diagonal jumps collapse into one elementwise weight; jumps with at
        # most one entry per row and column become gather/scatter
        self.diag_weight = None
        self.monomial: list[tuple[np.ndarray, np.ndarray, np.ndarray]] = []
        self.general_jumps: list[sparse.csr_array] = []
        for l in jumps:
            l = sparse.coo_array(l)
            l.sum_duplicates()
            l.eliminate_zeros()
            r, c, v = l.row, l.col, l.data
            if np.array_equal(r, c):
                d = np.zeros(dim, dtype=complex)
                d[r] = v
                w = np.outer(d, d.conj())
                self.diag_weight = w if self.diag_weight is None else self.diag_weight + w
            elif len(np.unique(r)) == len(r) and len(np.unique(c)) == len(c):
                self.monomial.append((r, c, np.outer(v, v.conj())))
            else:
                self.general_jumps.append(sparse.csr_array(l))
        self.jumps = tuple(sparse.csr_array(l) for l in jumps)

    @classmethod
    def from_matrices(cls, h, ops, rates):
        h_eff = np.array(h, dtype=complex)
        jumps = []
        for op, rate in zip(ops, rates):
            if rate == 0:
                continue
            h_eff = h_eff - 0.5j * rate * (op.conj().T @ op)
            jumps.append(np.sqrt(rate) * op)
        return cls(h_eff, jumps)

    @property
    def dim(self) -> int:
        return self.h_eff.shape[0]

    def __call__(self, rho: np.ndarray) -> np.ndarray:
        """RHS for Hermitian ``rho``."""
        a = self.h_eff @ rho
        out = -1j * (a - a.conj().T)
        self._add_jumps(rho, out)
        return out

    def _add_jumps(self, rho, out):
        if self.diag_weight is not None:
            out += self.diag_weight * rho
        for r, c, w in self.monomial:
            out[np.ix_(r, r)] += w * rho[np.ix_(c, c)]
        for l in self.general_jumps:
            out += l @ (l @ rho.conj().T).conj().T

    def general(self, rho: np.ndarray) -> np.ndarray:
        """Same as calling, without assuming rho is Hermitian."""
        out = -1j * (self.h_eff @ rho - (self.h_eff @ rho.conj().T).conj().T)
        self._add_jumps(rho, out)
        return out


def _check_dims(params: ModelParams, dims: HilbertDims) -> None:
    if dims.n_emitters != params.n_emitters:
        raise DimensionError(
            f"dims has {dims.n_emitters} emitters, params has {params.n_emitters}"
        )


def build_hamiltonian(params: ModelParams, dims: HilbertDims) -> Operator:
    """H = (w_q/2) sum sz_i + g sum (s+_i a + s-_i a^dag) + w_c a^dag a."""
    _check_dims(params, dims)
    a = embed_mode(annihilation(dims.fock_dim), dims).matrix
    ad = a.conj().T
    h = params.omega_c * (ad @ a)
    for i in range(dims.n_emitters):
        sp = embed_site(SIGMA_PLUS, i, dims).matrix
        sz = embed_site(SIGMA_Z, i, dims).matrix
        coupling = sp @ a
        h = h + 0.5 * params.omega_q * sz + params.g * (coupling + coupling.conj().T)
    return Operator(h, dims)


def build_collapse_set(params: ModelParams, dims: HilbertDims) -> list[tuple[Operator, float]]:
    """Local decay on every emitter, cavity loss, local sigma_z dephasing.

    Zero-rate channels are left out.
    """
    _check_dims(params, dims)
    out: list[tuple[Operator, float]] = []
    if params.gamma > 0:
        out += [(embed_site(SIGMA_MINUS, i, dims), params.gamma) for i in range(dims.n_emitters)]
    if params.kappa > 0:
        out.append((embed_mode(annihilation(dims.fock_dim), dims), params.kappa))
    if params.gamma_phi > 0:
        out += [(embed_site(SIGMA_Z, i, dims), params.gamma_phi) for i in range(dims.n_emitters)]
    return out


def build_generator(params: ModelParams, dims: HilbertDims | None = None) -> Generator:
    dims = params.dims() if dims is None else dims
    return Generator(build_hamiltonian(params, dims), tuple(build_collapse_set(params, dims)))


def apply_rhs(gen: Generator, rho) -> np.ndarray:
    """d rho / dt for the master equation with generator ``gen``."""
    mat = getattr(rho, "matrix", rho)
    if mat.shape != (gen.dims.total_dim, gen.dims.total_dim):
        raise DimensionError(
            f"rho has shape {mat.shape}, generator acts on dim {gen.dims.total_dim}"
        )
    return gen._compiled.general(np.asarray(mat, dtype=complex))
