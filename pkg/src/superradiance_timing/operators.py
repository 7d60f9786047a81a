"""Operators on N qubits tensored with a truncated Fock space.

Basis ordering: qubit 0 is the most significant tensor factor, the photon
mode is the last (least significant) one. Qubit convention is
``|g> = (1, 0)``, ``|e> = (0, 1)`` so that ``sigma_z |g> = -|g>``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

SIGMA_Z = np.array([[-1, 0], [0, 1]], dtype=complex)
SIGMA_X = np.array([[0, 1], [1, 0]], dtype=complex)
SIGMA_Y = np.array([[0, 1j], [-1j, 0]], dtype=complex)
# sigma_plus |g> = |e>
SIGMA_PLUS = np.array([[0, 0], [1, 0]], dtype=complex)
SIGMA_MINUS = SIGMA_PLUS.T.copy()
IDENTITY_2 = np.eye(2, dtype=complex)


class DimensionError(ValueError):
    """Raised when operator shapes are inconsistent."""


@dataclass(frozen=True)
class HilbertDims:
    n_emitters: int
    fock_dim: int
    total_dim: int = field(init=False)

    def __post_init__(self):
        if int(self.n_emitters) < 1:
            raise DimensionError(f"n_emitters must be >= 1, got {self.n_emitters}")
        if int(self.fock_dim) < 1:
            raise DimensionError(f"fock_dim must be >= 1, got {self.fock_dim}")
        object.__setattr__(self, "total_dim", 2 ** int(self.n_emitters) * int(self.fock_dim))

    @property
    def shape(self) -> tuple[int, ...]:
        """Subsystem dimensions in tensor order."""
        return (2,) * self.n_emitters + (self.fock_dim,)


@dataclass(frozen=True)
class Operator:
    """Dense matrix tagged with the dimensions of the space it acts on."""

    matrix: np.ndarray
    dims: HilbertDims

    def __post_init__(self):
        m = self.matrix
        if m.ndim != 2 or m.shape[0] != m.shape[1] or m.shape[0] != self.dims.total_dim:
            raise DimensionError(
                f"matrix of shape {m.shape} does not match total_dim {self.dims.total_dim}"
            )

    @property
    def dag(self) -> "Operator":
        return Operator(self.matrix.conj().T, self.dims)

    def __matmul__(self, other: "Operator") -> "Operator":
        return Operator(self.matrix @ other.matrix, self.dims)

    def __add__(self, other: "Operator") -> "Operator":
        return Operator(self.matrix + other.matrix, self.dims)

    def __sub__(self, other: "Operator") -> "Operator":
        return Operator(self.matrix - other.matrix, self.dims)

    def __mul__(self, scalar) -> "Operator":
        return Operator(self.matrix * scalar, self.dims)

    __rmul__ = __mul__


def _check_square(a: np.ndarray, name: str) -> None:
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise DimensionError(f"{name} must be a square matrix, got shape {a.shape}")


def kron(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Kronecker product of two square matrices."""
    a = np.asarray(a)
    b = np.asarray(b)
    _check_square(a, "a")
    _check_square(b, "b")
    return np.kron(a, b)


def identity(dim: int) -> np.ndarray:
    return np.eye(dim, dtype=complex)


def embed_site(op2x2: np.ndarray, site: int, dims: HilbertDims) -> Operator:
    """Place a single-qubit operator on ``site`` with identities elsewhere."""
    op2x2 = np.asarray(op2x2, dtype=complex)
    if op2x2.shape != (2, 2):
        raise DimensionError(f"single-site operator must be 2x2, got {op2x2.shape}")
    if not 0 <= site < dims.n_emitters:
        raise IndexError(f"site {site} out of range for {dims.n_emitters} emitters")
    left = identity(2**site)
    right = identity(2 ** (dims.n_emitters - site - 1) * dims.fock_dim)
    return Operator(np.kron(np.kron(left, op2x2), right), dims)


def annihilation(fock_dim: int) -> np.ndarray:
    """Truncated bosonic lowering operator, ``a[n-1, n] = sqrt(n)``."""
    if fock_dim < 1:
        raise DimensionError(f"fock_dim must be >= 1, got {fock_dim}")
    return np.diag(np.sqrt(np.arange(1, fock_dim, dtype=float)), k=1).astype(complex)


def embed_mode(op: np.ndarray, dims: HilbertDims) -> Operator:
    """Place a Fock-space operator on the photon mode."""
    op = np.asarray(op, dtype=complex)
    if op.shape != (dims.fock_dim, dims.fock_dim):
        raise DimensionError(f"mode operator must be {dims.fock_dim}x{dims.fock_dim}")
    return Operator(np.kron(identity(2**dims.n_emitters), op), dims)


def cavity_lowering(dims: HilbertDims) -> Operator:
    return embed_mode(annihilation(dims.fock_dim), dims)


def collective_lowering(dims: HilbertDims) -> Operator:
    """J^- = sum_i sigma^-_i on the full space."""
    total = np.zeros((dims.total_dim, dims.total_dim), dtype=complex)
    for i in range(dims.n_emitters):
        total += embed_site(SIGMA_MINUS, i, dims).matrix
    return Operator(total, dims)


def excitation_number(dims: HilbertDims) -> Operator:
    """Total excitations sum_i (sigma^z_i + 1)/2 + a^dag a (diagonal)."""
    return Operator(np.diag(excitation_counts(dims)).astype(complex), dims)


def excitation_counts(dims: HilbertDims) -> np.ndarray:
    """Excitation number of every computational basis state, as integers."""
    idx = np.arange(dims.total_dim)
    photons = idx % dims.fock_dim
    qubit_bits = idx // dims.fock_dim
    excited = np.zeros_like(idx)
    for i in range(dims.n_emitters):
        excited += (qubit_bits >> i) & 1
    return excited + photons


def commutator(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return a @ b - b @ a
