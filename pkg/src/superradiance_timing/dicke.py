"""Permutation-invariant evolution in the Dicke basis.

A permutation-invariant state of N qubits has the form
``rho = (+)_j rho_j (x) 1_{d_N(j)}``: one (2j+1)x(2j+1) block per total
angular momentum j, repeated over the d_N(j)-fold multiplicity space.
Each block here is additionally tensored with the cavity Fock space, with
spin index major and photon index minor (index ``i`` of a block is
``m = -j + i``, so index 0 is the all-ground state in the top sector).

The collective Tavis-Cummings coupling acts inside each j block. Local
decay and dephasing sum to maps that move weight from sector j to
j' in {j-1, j, j+1}; their reduced form is obtained by splitting one spin
off: N spins = (N-1 spins) (x) spin-1/2, with Clebsch-Gordan isometries
``V_{k,j}: H_j -> H_k (x) C^2``. For a single-site map X -> A X A^dag,

    Y_{j'} = N / d_N(j') * sum_k d_{N-1}(k) * V_{k,j'}^dag (1 (x) A) [sum_j V_{k,j} X_j V_{k,j}^dag] (1 (x) A^dag) V_{k,j'}

where k runs over the (N-1)-spin sectors. All weights use exact integers.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from functools import cached_property
from math import comb

import numpy as np

from .integrate import integrate
from .liouvillian import ModelParams
from .observables import pair_observables
from .operators import SIGMA_MINUS, SIGMA_PLUS, SIGMA_Z, annihilation
from .propagator import ATOL, RTOL, TimeGrid, TrajectoryResult
from .states import StateCorruptionError

log = logging.getLogger(__name__)


def degeneracy(n: int, two_j: int) -> int:
    """Multiplicity d_N(j) of spin j = two_j/2 among N spin-1/2 particles."""
    if two_j < 0 or two_j > n or (n - two_j) % 2:
        return 0
    k = (n - two_j) // 2
    return comb(n, k) - (comb(n, k - 1) if k >= 1 else 0)


def sector_two_js(n: int) -> list[int]:
    """Values of 2j from N down to 0 or 1."""
    return list(range(n, -1, -2))


def spin_ops(two_j: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """(J_z, J_+, J_-) for spin two_j/2 in the ascending-m basis."""
    j = two_j / 2
    m = -j + np.arange(two_j + 1)
    jz = np.diag(m).astype(complex)
    jp = np.zeros((two_j + 1,) * 2, dtype=complex)
    for i in range(two_j):
        jp[i + 1, i] = np.sqrt(j * (j + 1) - m[i] * (m[i] + 1))
    return jz, jp, jp.conj().T.copy()


def cg_isometry(two_k: int, two_j: int) -> np.ndarray:
    """V_{k,j}: |j, m> -> sum of |k, m_k> |s>, s in (g, e) as last factor.

    Shape ``(2 * (2k+1), 2j+1)``; row index is ``2 * i_k + s``.
    """
    if abs(two_j - two_k) != 1:
        raise ValueError("j must be k +- 1/2")
    k = two_k / 2
    j = two_j / 2
    v = np.zeros((2 * (two_k + 1), two_j + 1))
    for ij in range(two_j + 1):
        m = -j + ij
        # component |k, m - 1/2>|e> and |k, m + 1/2>|g>
        i_up = int(round(m - 0.5 + k))  # index of m_k = m - 1/2
        i_dn = int(round(m + 0.5 + k))  # index of m_k = m + 1/2
        if two_j == two_k + 1:
            c_up = np.sqrt((k + m + 0.5) / (2 * k + 1))
            c_dn = np.sqrt((k - m + 0.5) / (2 * k + 1))
        else:
            c_up = -np.sqrt((k - m + 0.5) / (2 * k + 1))
            c_dn = np.sqrt((k + m + 0.5) / (2 * k + 1))
        if 0 <= i_up <= two_k and c_up != 0:
            v[2 * i_up + 1, ij] = c_up
        if 0 <= i_dn <= two_k and c_dn != 0:
            v[2 * i_dn + 0, ij] = c_dn
    return v


def local_channel_maps(n: int, site_op: np.ndarray) -> dict[tuple[int, int], list[np.ndarray]]:
    """Kraus-like maps for ``X -> sum_i A_i X A_i^dag`` on Dicke blocks.

    Returns ``{(two_j_target, two_j_source): [K, ...]}`` such that
    ``Y_{j'} = sum K X_j K^dag`` over all sources j.
    """
    out: dict[tuple[int, int], list[np.ndarray]] = {}
    for two_k in sector_two_js(n - 1) if n > 1 else [0]:
        d_k = degeneracy(n - 1, two_k) if n > 1 else 1
        lifted = np.kron(np.eye(two_k + 1), site_op)
        partners = [tj for tj in (two_k + 1, two_k - 1) if tj >= 0]
        for tj_target in partners:
            weight = n * d_k / degeneracy(n, tj_target)
            v_t = cg_isometry(two_k, tj_target)
            for tj_source in partners:
                v_s = cg_isometry(two_k, tj_source)
                kmat = np.sqrt(weight) * (v_t.T @ lifted @ v_s)
                if np.max(np.abs(kmat)) > 0:
                    out.setdefault((tj_target, tj_source), []).append(kmat)
    return out


@dataclass(frozen=True)
class DickeBlocks:
    n_emitters: int
    photon_dim: int

    @cached_property
    def two_js(self) -> list[int]:
        return sector_two_js(self.n_emitters)

    @property
    def sectors(self) -> list[float]:
        return [tj / 2 for tj in self.two_js]

    @cached_property
    def degeneracies(self) -> list[int]:
        return [degeneracy(self.n_emitters, tj) for tj in self.two_js]

    def block_side(self, two_j: int) -> int:
        return (two_j + 1) * self.photon_dim

    def total_spin_dim(self) -> int:
        return sum(d * (tj + 1) for d, tj in zip(self.degeneracies, self.two_js))

    def excitations(self, two_j: int) -> np.ndarray:
        """Excitation number (m + N/2) + n for every index of a block."""
        spin = (np.arange(two_j + 1) + (self.n_emitters - two_j) // 2)
        return (spin[:, None] + np.arange(self.photon_dim)[None, :]).ravel()


def enumerate_blocks(n: int, photon_dim: int = 1) -> DickeBlocks:
    if n < 1:
        raise ValueError("N must be >= 1")
    blocks = DickeBlocks(n, photon_dim)
    if blocks.total_spin_dim() != 2**n:
        raise AssertionError("sector dimensions do not add up to 2^N")
    return blocks


@dataclass
class DickeState:
    """Per-sector blocks, keyed by 2j; absent sectors are zero.

    If ``supports`` is set, each block holds only the rows/columns listed
    there (a subspace closed under the dynamics).
    """

    blocks: DickeBlocks
    rho: dict[int, np.ndarray]
    supports: dict[int, np.ndarray] | None = None

    @property
    def trace(self) -> complex:
        return sum(
            d * np.trace(self.rho[tj]) for tj, d in zip(self.blocks.two_js, self.blocks.degeneracies) if tj in self.rho
        )

    def full_block(self, two_j: int) -> np.ndarray:
        side = self.blocks.block_side(two_j)
        out = np.zeros((side, side), dtype=complex)
        if two_j not in self.rho:
            return out
        if self.supports is None:
            return self.rho[two_j]
        ix = self.supports[two_j]
        out[np.ix_(ix, ix)] = self.rho[two_j]
        return out

    def spin_block(self, two_j: int) -> np.ndarray:
        """Block with the photon mode traced out."""
        b = self.full_block(two_j)
        s, p = two_j + 1, self.blocks.photon_dim
        return np.einsum("apbp->ab", b.reshape(s, p, s, p))

    def weight(self, two_j: int) -> float:
        return float(np.real(np.trace(self.rho[two_j]))) if two_j in self.rho else 0.0

    def hermiticity_error(self) -> float:
        return max(float(np.max(np.abs(m - m.conj().T), initial=0.0)) for m in self.rho.values())

    def min_eigenvalue(self) -> float:
        return min(float(np.linalg.eigvalsh(0.5 * (m + m.conj().T))[0]) for m in self.rho.values() if m.size)

    def expect(self, spin_op_of) -> complex:
        """sum_j d_j tr(O_j rho_j) for spin operators ``spin_op_of(two_j)``."""
        total = 0j
        for tj, d in zip(self.blocks.two_js, self.blocks.degeneracies):
            if tj in self.rho:
                total += d * np.trace(spin_op_of(tj) @ self.spin_block(tj))
        return total


def dicke_initial_state(params: ModelParams, blocks: DickeBlocks | None = None) -> DickeState:
    """|g...g> |n_p>, which is |j=N/2, m=-N/2> in the top sector."""
    blocks = blocks or DickeBlocks(params.n_emitters, params.fock_dim)
    top = blocks.two_js[0]
    side = blocks.block_side(top)
    rho = {tj: np.zeros((blocks.block_side(tj),) * 2, dtype=complex) for tj in blocks.two_js}
    k = params.n_photons  # spin index 0, photon n_p
    if k >= blocks.photon_dim:
        raise ValueError("n_p exceeds photon cutoff")
    rho[top][k, k] = 1.0
    assert side == rho[top].shape[0]
    return DickeState(blocks, rho)


class DickeGenerator:
    """Master-equation generator acting on :class:`DickeState` blocks."""

    def __init__(self, params: ModelParams, blocks: DickeBlocks | None = None):
        self.params = params
        self.blocks = blocks or DickeBlocks(params.n_emitters, params.fock_dim)
        b = self.blocks
        p = params
        n = b.n_emitters
        a = annihilation(b.photon_dim)
        ad = a.conj().T
        eye_p = np.eye(b.photon_dim)
        self.h: dict[int, np.ndarray] = {}
        self.h_eff: dict[int, np.ndarray] = {}
        self.inner_jumps: dict[int, list[np.ndarray]] = {}
        for tj in b.two_js:
            jz, jp, jm = spin_ops(tj)
            eye_s = np.eye(tj + 1)
            h = (
                p.omega_q * np.kron(jz, eye_p)
                + p.g * (np.kron(jp, a) + np.kron(jm, ad))
                + p.omega_c * np.kron(eye_s, ad @ a)
            )
            self.h[tj] = h
            # sum_i s+_i s-_i = J_z + N/2 ; sum_i sz_i^2 = N
            loss = (
                p.gamma * np.kron(jz + 0.5 * n * eye_s, eye_p)
                + p.kappa * np.kron(eye_s, ad @ a)
                + p.gamma_phi * n * np.eye(h.shape[0])
            )
            self.h_eff[tj] = h - 0.5j * loss
            self.inner_jumps[tj] = [np.sqrt(p.kappa) * np.kron(eye_s, a)] if p.kappa > 0 else []
        # cross-sector maps from local channels, photon mode untouched
        self.local: dict[tuple[int, int], list[np.ndarray]] = {}
        for rate, op in ((p.gamma, SIGMA_MINUS), (p.gamma_phi, SIGMA_Z)):
            if rate <= 0:
                continue
            for key, mats in local_channel_maps(n, op).items():
                self.local.setdefault(key, []).extend(np.sqrt(rate) * np.kron(m, eye_p) for m in mats)

    def is_block_diagonal(self) -> bool:
        return all(t == s for t, s in self.local)

    def compile(self, supports: dict[int, np.ndarray] | None = None) -> "_CompiledDicke":
        return _CompiledDicke(self, supports)


class _CompiledDicke:
    """Flat-vector RHS over the retained blocks and index subsets."""

    def __init__(self, gen: DickeGenerator, supports):
        b = gen.blocks
        if supports is None:
            supports = {tj: np.arange(b.block_side(tj)) for tj in b.two_js}
        self.supports = {tj: ix for tj, ix in supports.items() if len(ix)}
        self.order = [tj for tj in b.two_js if tj in self.supports]
        self.slices = {}
        offset = 0
        for tj in self.order:
            n = len(self.supports[tj])
            self.slices[tj] = (offset, n)
            offset += n * n
        self.size = offset

        def sub(m, t, s):
            return np.ascontiguousarray(m[np.ix_(self.supports[t], self.supports[s])])

        self.h_eff = {tj: sub(gen.h_eff[tj], tj, tj) for tj in self.order}
        self.jumps: list[tuple[int, int, np.ndarray, np.ndarray]] = []
        for tj in self.order:
            for l in gen.inner_jumps[tj]:
                ls = sub(l, tj, tj)
                self.jumps.append((tj, tj, ls, ls.conj().T.copy()))
        for (t, s), mats in sorted(gen.local.items(), key=lambda kv: (-kv[0][0], -kv[0][1])):
            if t not in self.supports or s not in self.supports:
                continue
            for m in mats:
                ms = sub(m, t, s)
                if np.any(ms):
                    self.jumps.append((t, s, ms, ms.conj().T.copy()))

    def views(self, y: np.ndarray) -> dict[int, np.ndarray]:
        out = {}
        for tj in self.order:
            off, n = self.slices[tj]
            out[tj] = y[off : off + n * n].reshape(n, n)
        return out

    def pack(self, state: DickeState) -> np.ndarray:
        y = np.zeros(self.size, dtype=complex)
        v = self.views(y)
        for tj in self.order:
            v[tj][...] = state.full_block(tj)[np.ix_(self.supports[tj], self.supports[tj])]
        return y

    def __call__(self, y: np.ndarray) -> np.ndarray:
        rho = self.views(y)
        out = np.empty_like(y)
        dout = self.views(out)
        for tj in self.order:
            a = self.h_eff[tj] @ rho[tj]
            dout[tj][...] = -1j * (a - a.conj().T)
        for t, s, l, ld in self.jumps:
            dout[t] += l @ rho[s] @ ld
        return out

    def symmetrize(self, y: np.ndarray) -> tuple[np.ndarray, float]:
        out = y.copy()
        corr = 0.0
        for tj, v in self.views(out).items():
            h = 0.5 * (v + v.conj().T)
            corr = max(corr, float(np.max(np.abs(h - v), initial=0.0)))
            v[...] = h
        return out, corr


def build_dicke_generator(params: ModelParams, blocks: DickeBlocks | None = None) -> DickeGenerator:
    return DickeGenerator(params, blocks)


def excitation_supports(blocks: DickeBlocks, top: int) -> dict[int, np.ndarray]:
    return {tj: np.nonzero(blocks.excitations(tj) <= top)[0] for tj in blocks.two_js}


def pair_state(state: DickeState) -> np.ndarray:
    """Two-emitter reduced state of a permutation-invariant state (4x4).

    Built from the single-site moments <sz>, <s+> and the pair moments
    <s+ s+>, <s+ s->, <s+ sz>, <sz sz> obtained from collective operators.
    """
    n = state.blocks.n_emitters
    if n < 2:
        raise ValueError("pair correlators need N >= 2")
    ops = {tj: spin_ops(tj) for tj in state.blocks.two_js}
    jz = lambda tj: ops[tj][0]
    jp = lambda tj: ops[tj][1]
    jm = lambda tj: ops[tj][2]
    e = state.expect
    pairs = n * (n - 1)
    sz = (2 * e(jz) / n).real
    sp = e(jp) / n
    pp = e(lambda tj: jp(tj) @ jp(tj)) / pairs
    pm = (e(lambda tj: jp(tj) @ jm(tj)) - e(lambda tj: jz(tj) + 0.5 * n * np.eye(tj + 1))).real / pairs
    pz = (2 * e(lambda tj: jp(tj) @ jz(tj)) + e(jp)) / pairs
    zz = (4 * e(lambda tj: jz(tj) @ jz(tj)) - n).real / pairs

    # coefficient vectors over (s+, s-, sz) for sx, sy, sz
    u = {
        "x": np.array([1, 1, 0], dtype=complex),
        "y": np.array([-1j, 1j, 0]),
        "z": np.array([0, 0, 1], dtype=complex),
    }
    single = np.array([sp, np.conj(sp), sz])
    moments = np.array([
        [pp, pm, pz],
        [pm, np.conj(pp), np.conj(pz)],
        [pz, np.conj(pz), zz],
    ])
    paulis = {
        "0": np.eye(2, dtype=complex),
        "x": SIGMA_PLUS + SIGMA_MINUS,
        "y": -1j * (SIGMA_PLUS - SIGMA_MINUS),
        "z": SIGMA_Z,
    }
    rho = np.zeros((4, 4), dtype=complex)
    for a in "0xyz":
        for b in "0xyz":
            if a == "0" and b == "0":
                t = 1.0
            elif a == "0":
                t = u[b] @ single
            elif b == "0":
                t = u[a] @ single
            else:
                t = u[a] @ moments @ u[b]
            rho += 0.25 * t * np.kron(paulis[a], paulis[b])
    return rho


def dicke_observables(state: DickeState, global_entropy: bool = False) -> dict[str, float]:
    """The six pair quantities from a Dicke-basis state.

    With ``global_entropy`` S and C_rel refer to the whole emitter+cavity state.
    """
    row = pair_observables(pair_state(state)).as_row()
    if global_entropy:
        row["S"], row["c_rel"] = _global_entropies(state)
    return row


def _global_entropies(state: DickeState) -> tuple[float, float]:
    b = state.blocks
    n = b.n_emitters
    # eigenvalues of rho_j (x) 1_{d_j}: each block eigenvalue repeated d_j times
    lam, mult = [], []
    # computational diagonal: P(k excitations, n photons) shared by C(N, k) bitstrings
    pops = np.zeros((n + 1, b.photon_dim))
    for tj, d in zip(b.two_js, b.degeneracies):
        if tj not in state.rho:
            continue
        block = state.full_block(tj)
        lam.append(np.linalg.eigvalsh(0.5 * (block + block.conj().T)))
        mult.append(np.full(block.shape[0], d))
        k0 = (n - tj) // 2
        diag = np.real(np.diag(block)).reshape(tj + 1, b.photon_dim)
        pops[k0 : k0 + tj + 1] += d * diag
    lam = np.concatenate(lam)
    mult = np.concatenate(mult)
    keep = lam > 1e-12
    s = float(-np.sum(mult[keep] * lam[keep] * np.log(lam[keep])))
    counts = np.array([comb(n, k) for k in range(n + 1)], dtype=float)[:, None]
    p = np.where(pops > 1e-12, pops, 0.0)
    nz = p > 0
    s_diag = float(-np.sum(p[nz] * np.log((p / counts)[nz])))
    return s, max(s_diag - s, 0.0)


def evolve_dicke(
    generator: DickeGenerator,
    state0: DickeState,
    grid: TimeGrid,
    observer=None,
    rtol: float = RTOL,
    atol: float = ATOL,
    restrict: bool = True,
) -> TrajectoryResult:
    """Integrate the permutation-invariant master equation on ``grid``."""
    blocks = generator.blocks
    supports = None
    if restrict:
        top = 0
        for tj in blocks.two_js:
            diag = np.abs(np.diag(state0.full_block(tj)))
            occ = np.nonzero(diag > 0)[0]
            if occ.size:
                top = max(top, int(blocks.excitations(tj)[occ].max()))
        supports = excitation_supports(blocks, top)
    compiled = generator.compile(supports)
    observer = observer or (lambda t, s: dicke_observables(s))
    times = grid.times
    rows: list = [None] * len(times)
    diag = {
        "max_trace_drift": 0.0,
        "max_hermitian_drift": 0.0,
        "max_hermitian_correction": 0.0,
        "min_eigenvalue": np.inf,
    }

    def as_state(y):
        return DickeState(blocks, {tj: v for tj, v in compiled.views(y).items()}, compiled.supports)

    def post(y):
        y, corr = compiled.symmetrize(y)
        diag["max_hermitian_correction"] = max(diag["max_hermitian_correction"], corr)
        if corr > 1e-10:
            raise StateCorruptionError(f"hermiticity correction {corr:.3e} exceeds 1e-10")
        return y

    def on_output(i, t, y):
        state = as_state(y)
        drift = abs(state.trace - 1)
        herm = state.hermiticity_error()
        diag["max_trace_drift"] = max(diag["max_trace_drift"], drift)
        diag["max_hermitian_drift"] = max(diag["max_hermitian_drift"], herm)
        if drift > 1e-9 or herm > 1e-10:
            raise StateCorruptionError(f"t={t:.6g}: trace drift {drift:.3e}, hermiticity {herm:.3e}")
        if i % 10 == 0 or i == len(times) - 1:
            lam = state.min_eigenvalue()
            diag["min_eigenvalue"] = min(diag["min_eigenvalue"], lam)
            if lam < -1e-8:
                raise StateCorruptionError(f"t={t:.6g}: min eigenvalue {lam:.3e}")
        rows[i] = observer(t, state)

    final, stats = integrate(
        lambda t, y: compiled(y), compiled.pack(state0), times, on_output, rtol=rtol, atol=atol, post_step=post
    )
    diag.update(n_steps=stats.n_steps, n_rejected=stats.n_rejected, n_rhs=stats.n_rhs)
    series = {k: np.array([r[k] for r in rows], dtype=float) for k in rows[0]}
    return TrajectoryResult(times, series, diag, as_state(final))
