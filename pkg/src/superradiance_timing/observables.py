"""Pair observables: correlated emission and dephasing, entropies, witness.

All pair quantities act on the two-qubit state with site ``i`` as the first
(most significant) factor. The incoherent basis for the relative entropy
of coherence is the computational basis.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .operators import SIGMA_MINUS, SIGMA_PLUS, SIGMA_Z, DimensionError, HilbertDims
from .states import DensityMatrix

EIG_CLAMP = 1e-12
HERMITIAN_TOL = 1e-8
DIAGONAL_TOL = 1e-10

QUANTITY_IDS = ("c_rel", "c0_re", "c0_im", "czz", "W", "S")

_EMISSION_OP = np.kron(SIGMA_PLUS, SIGMA_MINUS)
_ZZ_OP = np.kron(SIGMA_Z, SIGMA_Z)


@dataclass(frozen=True)
class ObservableSet:
    c0: complex
    czz: float
    entropy: float
    c_rel: float

    @property
    def witness(self) -> float:
        return witness(self.c0, self.czz)

    def as_row(self) -> dict[str, float]:
        return {
            "c_rel": self.c_rel,
            "c0_re": self.c0.real,
            "c0_im": self.c0.imag,
            "czz": self.czz,
            "W": self.witness,
            "S": self.entropy,
        }


class PartialTracer:
    """Precomputed index bookkeeping for repeated partial traces.

    Keeps the qubits ``keep_sites`` (in the given order) and, optionally,
    the photon mode as the last factor. Works for full states and for
    states stored on a ``support`` subset of basis indices.
    """

    def __init__(self, dims: HilbertDims, keep_sites, keep_mode=False, support=None):
        keep_sites = [int(s) for s in keep_sites]
        if not keep_sites:
            raise ValueError("keep_sites is empty")
        if len(set(keep_sites)) != len(keep_sites):
            raise ValueError(f"duplicate sites in {keep_sites}")
        for s in keep_sites:
            if not 0 <= s < dims.n_emitters:
                raise IndexError(f"site {s} out of range")
        self.dims = dims
        self.keep_sites = keep_sites
        self.keep_mode = keep_mode
        self.support = None if support is None else np.asarray(support)
        n = dims.n_emitters
        self.kept_shape = tuple([2] * len(keep_sites) + ([dims.fock_dim] if keep_mode else []))
        self.kept_dim = int(np.prod(self.kept_shape))

        if self.support is None:
            self._axes = keep_sites + ([n] if keep_mode else [])
            return

        idx = self.support
        photon = idx % dims.fock_dim
        qbits = idx // dims.fock_dim
        bit = lambda s: (qbits >> (n - 1 - s)) & 1
        kept = np.zeros_like(idx)
        for s in keep_sites:
            kept = 2 * kept + bit(s)
        rest = np.zeros_like(idx)
        for s in range(n):
            if s not in keep_sites:
                rest = 2 * rest + bit(s)
        if keep_mode:
            kept = kept * dims.fock_dim + photon
        else:
            rest = rest * dims.fock_dim + photon
        a, b = np.nonzero(rest[:, None] == rest[None, :])
        self._rows, self._cols = a, b
        self._flat = kept[a] * self.kept_dim + kept[b]

    def __call__(self, rho: DensityMatrix) -> DensityMatrix:
        if rho.dims != self.dims:
            raise DimensionError("state dims do not match tracer dims")
        kept_dims = HilbertDims(len(self.keep_sites), self.dims.fock_dim if self.keep_mode else 1)
        if self.support is None:
            if rho.support is not None:
                return PartialTracer(self.dims, self.keep_sites, self.keep_mode, rho.support)(rho)
            out = _reshape_trace(rho.matrix, self.dims, self._axes, self.kept_dim)
        else:
            if rho.support is None or not np.array_equal(rho.support, self.support):
                raise DimensionError("state support does not match tracer support")
            vals = rho.matrix[self._rows, self._cols]
            out = np.bincount(self._flat, weights=vals.real, minlength=self.kept_dim**2) + 1j * np.bincount(
                self._flat, weights=vals.imag, minlength=self.kept_dim**2
            )
            out = out.reshape(self.kept_dim, self.kept_dim)
        return DensityMatrix(out, kept_dims)


def _reshape_trace(mat, dims, keep_axes, kept_dim):
    shape = dims.shape
    n_sub = len(shape)
    t = mat.reshape(shape + shape)
    rest = [ax for ax in range(n_sub) if ax not in keep_axes]
    perm = keep_axes + rest + [n_sub + ax for ax in keep_axes] + [n_sub + ax for ax in rest]
    rest_dim = dims.total_dim // kept_dim
    t = t.transpose(perm).reshape(kept_dim, rest_dim, kept_dim, rest_dim)
    return np.einsum("arbr->ab", t)


def partial_trace(rho: DensityMatrix, keep_sites, keep_mode: bool = False) -> DensityMatrix:
    """Reduced state on ``keep_sites`` (photon mode traced out unless kept)."""
    return PartialTracer(rho.dims, keep_sites, keep_mode, rho.support)(rho)


def _as_matrix(rho) -> np.ndarray:
    return np.asarray(getattr(rho, "matrix", rho))


def _pair_matrix(rho) -> np.ndarray:
    m = _as_matrix(rho)
    if m.shape != (4, 4):
        raise DimensionError(f"expected a two-qubit state, got shape {m.shape}")
    return m


def correlated_emission(rho_pair) -> complex:
    """<sigma^+_i sigma^-_j> on a two-qubit state."""
    return complex(np.trace(_pair_matrix(rho_pair) @ _EMISSION_OP))


def correlated_dephasing(rho_pair) -> float:
    """<sigma^z_i sigma^z_j> on a two-qubit state."""
    return float(np.real(np.trace(_pair_matrix(rho_pair) @ _ZZ_OP)))


def _entropy_of(probs: np.ndarray) -> float:
    p = np.where(probs < EIG_CLAMP, 0.0, probs)
    nz = p[p > 0]
    return float(-np.sum(nz * np.log(nz)))


def von_neumann_entropy(rho) -> float:
    """-tr(rho ln rho) in nats, eigenvalues below 1e-12 clamped to zero."""
    m = _as_matrix(rho)
    if np.max(np.abs(m - m.conj().T), initial=0.0) > HERMITIAN_TOL:
        raise ValueError("density matrix is not Hermitian")
    return _entropy_of(np.linalg.eigvalsh(0.5 * (m + m.conj().T)))


def relative_coherence(rho) -> float:
    """S(diag rho) - S(rho) in the computational basis."""
    m = _as_matrix(rho)
    if np.max(np.abs(m - np.diag(np.diag(m))), initial=0.0) <= DIAGONAL_TOL:
        return 0.0
    s = von_neumann_entropy(m)
    s_diag = _entropy_of(np.real(np.diag(m)))
    return max(s_diag - s, 0.0)


def witness(c0: complex, czz: float) -> float:
    """<W> = 1 - 4 Re(C0) + Czz; negative means entanglement detected."""
    return 1.0 - 4.0 * complex(c0).real + float(czz)


def pair_observables(rho_pair) -> ObservableSet:
    m = _pair_matrix(rho_pair)
    return ObservableSet(
        c0=correlated_emission(m),
        czz=correlated_dephasing(m),
        entropy=von_neumann_entropy(m),
        c_rel=relative_coherence(m),
    )
