"""Density matrices on the emitter + cavity space."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .operators import DimensionError, HilbertDims


class StateCorruptionError(RuntimeError):
    """A density matrix drifted outside its invariants."""


@dataclass(frozen=True)
class DensityMatrix:
    """Dense density matrix.

    If ``support`` is given, ``matrix`` is the block of the full matrix on
    those computational basis indices and every other entry is zero.
    """

    matrix: np.ndarray
    dims: HilbertDims
    support: np.ndarray | None = None

    def __post_init__(self):
        side = self.dims.total_dim if self.support is None else len(self.support)
        if self.matrix.shape != (side, side):
            raise DimensionError(f"matrix shape {self.matrix.shape}, expected side {side}")

    @property
    def trace(self) -> complex:
        return complex(np.trace(self.matrix))

    def full(self) -> np.ndarray:
        if self.support is None:
            return self.matrix
        out = np.zeros((self.dims.total_dim,) * 2, dtype=complex)
        out[np.ix_(self.support, self.support)] = self.matrix
        return out

    def purity(self) -> float:
        m = self.matrix
        return float(np.real(np.vdot(m.conj().T, m)))

    def hermiticity_error(self) -> float:
        m = self.matrix
        return float(np.max(np.abs(m - m.conj().T), initial=0.0))

    def min_eigenvalue(self) -> float:
        m = self.matrix
        return float(np.linalg.eigvalsh(0.5 * (m + m.conj().T))[0])

    def check(self, herm_tol=1e-10, trace_tol=1e-9, eig_tol=1e-8, check_eigs=True) -> None:
        """Raise :class:`StateCorruptionError` if an invariant is violated."""
        herm = self.hermiticity_error()
        if herm > herm_tol:
            raise StateCorruptionError(f"hermiticity error {herm:.3e} > {herm_tol:g}")
        drift = abs(self.trace - 1)
        if drift > trace_tol:
            raise StateCorruptionError(f"trace drift {drift:.3e} > {trace_tol:g}")
        if check_eigs:
            lam = self.min_eigenvalue()
            if lam < -eig_tol:
                raise StateCorruptionError(f"min eigenvalue {lam:.3e} < -{eig_tol:g}")


def pure(vector: np.ndarray, dims: HilbertDims) -> DensityMatrix:
    v = np.asarray(vector, dtype=complex)
    return DensityMatrix(np.outer(v, v.conj()), dims)


def basis_index(qubits: str | list[int], photons: int, dims: HilbertDims) -> int:
    """Index of ``|q_0 ... q_{N-1}> |photons>``; qubits given as 'g'/'e' or 0/1."""
    bits = [1 if q in ("e", 1) else 0 for q in qubits]
    if len(bits) != dims.n_emitters:
        raise DimensionError(f"expected {dims.n_emitters} qubit labels")
    if not 0 <= photons < dims.fock_dim:
        raise DimensionError(f"photon number {photons} outside Fock space")
    q = 0
    for b in bits:
        q = 2 * q + b
    return q * dims.fock_dim + photons
