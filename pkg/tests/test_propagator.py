import numpy as np
import pytest

from superradiance_timing.liouvillian import ConfigError, Generator, ModelParams, build_generator
from superradiance_timing.observables import QUANTITY_IDS, witness
from superradiance_timing.operators import SIGMA_PLUS, HilbertDims, Operator, embed_site, excitation_number
from superradiance_timing.propagator import (
    TimeGrid,
    evolve,
    excitation_support,
    initial_state,
)
from superradiance_timing.states import DensityMatrix, StateCorruptionError, basis_index

LOSSLESS = dict(gamma=0.0, kappa=0.0, gamma_phi=0.0)


def population(index):
    return lambda t, rho: {"p": rho.full()[index, index].real}


class TestGrid:
    def test_default(self):
        g = TimeGrid()
        assert g.times[0] == 0 and g.times[-1] == 10 and len(g.times) == 2001
        assert g.step == pytest.approx(0.005)
        assert np.all(np.diff(g.times) > 0)

    @pytest.mark.parametrize("t_max, n", [(0, 10), (-1, 10), (1, 1)])
    def test_invalid(self, t_max, n):
        with pytest.raises(ConfigError):
            TimeGrid(t_max, n)


class TestInitialState:
    def test_two_emitters(self):
        p = ModelParams()
        rho = initial_state(p)
        k = basis_index("gg", 1, p.dims())
        assert rho.full()[k, k] == 1 and rho.trace == 1
        assert np.count_nonzero(rho.full()) == 1

    def test_four_emitters(self):
        p = ModelParams(n_emitters=4)
        rho = initial_state(p)
        k = basis_index("gggg", 2, p.dims())
        assert rho.full()[k, k] == 1
        assert rho.purity() == pytest.approx(1.0)

    def test_odd_n(self):
        with pytest.raises(ConfigError):
            initial_state(ModelParams(n_emitters=3))

    def test_photons_above_cutoff(self):
        with pytest.raises(ConfigError):
            initial_state(ModelParams(n_photons_initial=3), HilbertDims(2, 2))


class TestAnalytic:
    def test_vacuum_rabi(self):
        p = ModelParams(n_emitters=1, n_photons_initial=1, **LOSSLESS)
        d = p.dims()
        res = evolve(build_generator(p), initial_state(p), TimeGrid(10, 1001), population(basis_index("e", 0, d)))
        assert np.max(np.abs(res["p"] - np.sin(res.times) ** 2)) < 1e-6

    def test_emitter_decay(self):
        d = HilbertDims(1, 1)
        gen = build_generator(ModelParams(n_emitters=1, n_photons_initial=0, gamma=0.5, kappa=0, gamma_phi=0), d)
        rho0 = DensityMatrix(np.diag([0, 1]).astype(complex), d)
        res = evolve(gen, rho0, TimeGrid(10, 501), population(1))
        assert np.max(np.abs(res["p"] - np.exp(-0.5 * res.times))) < 1e-7

    def test_cavity_loss(self):
        # emitter off resonance is irrelevant: start with the emitter in |g> and g tiny
        p = ModelParams(n_emitters=1, n_photons_initial=1, g=1e-9, gamma=0, kappa=0.3, gamma_phi=0)
        res = evolve(build_generator(p), initial_state(p), TimeGrid(10, 501), population(basis_index("g", 1, p.dims())))
        assert np.max(np.abs(res["p"] - np.exp(-0.3 * res.times))) < 1e-7

    def test_purity_conserved_without_dissipation(self):
        p = ModelParams(n_emitters=2, n_photons_initial=1, omega_q=0.2, **LOSSLESS)
        res = evolve(build_generator(p), initial_state(p), TimeGrid(5, 51), lambda t, r: {"purity": r.purity()})
        np.testing.assert_allclose(res["purity"], 1.0, atol=1e-8)


@pytest.fixture(scope="module")
def default_run():
    p = ModelParams()
    return evolve(build_generator(p), initial_state(p), TimeGrid(), snapshots=True)


class TestTrajectory:
    def test_shapes(self, default_run):
        assert set(default_run.series) == set(QUANTITY_IDS)
        assert all(len(v) == 2001 for v in default_run.series.values())

    def test_witness_identity(self, default_run):
        s = default_run.series
        recomputed = np.array([witness(complex(a, b), c) for a, b, c in zip(s["c0_re"], s["c0_im"], s["czz"])])
        np.testing.assert_array_equal(recomputed, s["W"])

    def test_sanity_diagnostics(self, default_run):
        d = default_run.diagnostics
        assert d["max_trace_drift"] < 1e-9
        assert d["max_hermitian_drift"] < 1e-10
        assert d["max_hermitian_correction"] < 1e-10
        assert d["min_eigenvalue"] >= -1e-8

    def test_excitation_non_increasing(self, default_run):
        snaps = default_run.snapshots
        nx = excitation_number(snaps[0].dims).matrix
        vals = np.array([np.trace(nx @ s.full()).real for s in snaps])
        assert np.all(np.diff(vals) <= 1e-9)

    def test_final_state_valid(self, default_run):
        default_run.final_state.check()

    def test_no_snapshots_by_default(self):
        p = ModelParams()
        assert evolve(build_generator(p), initial_state(p), TimeGrid(1, 11)).snapshots is None

    def test_convergence_under_halved_tolerances(self, default_run):
        p = ModelParams()
        fine = evolve(build_generator(p), initial_state(p), TimeGrid(), rtol=0.5e-8, atol=0.5e-10)
        for q in QUANTITY_IDS:
            assert np.max(np.abs(fine[q] - default_run[q])) < 1e-7, q


class TestRestriction:
    def test_support_size(self):
        p = ModelParams(n_emitters=4)
        gen = build_generator(p)
        assert len(excitation_support(gen, initial_state(p))) == 17

    def test_restricted_matches_full(self):
        p = ModelParams(n_emitters=3, n_photons_initial=1, omega_q=0.1)
        gen = build_generator(p)
        grid = TimeGrid(3, 31)
        a = evolve(gen, initial_state(p), grid, restrict=True)
        b = evolve(gen, initial_state(p), grid, restrict=False)
        for q in QUANTITY_IDS:
            np.testing.assert_allclose(a[q], b[q], rtol=0, atol=1e-7)

    def test_pumping_disables_restriction(self):
        d = HilbertDims(2, 2)
        base = build_generator(ModelParams(), d)
        pumped = Generator(base.hamiltonian, base.collapse_set + ((embed_site(SIGMA_PLUS, 0, d), 0.1),))
        assert excitation_support(pumped, initial_state(ModelParams())) is None


def test_invalid_initial_state():
    d = HilbertDims(2, 2)
    bad = DensityMatrix(np.eye(d.total_dim, dtype=complex), d)  # trace 8
    with pytest.raises(StateCorruptionError):
        evolve(build_generator(ModelParams()), bad, TimeGrid(1, 3))


def test_negative_state_rejected():
    d = HilbertDims(2, 2)
    m = np.zeros((8, 8), dtype=complex)
    m[0, 0], m[1, 1] = 1.1, -0.1
    with pytest.raises(StateCorruptionError):
        evolve(build_generator(ModelParams()), DensityMatrix(m, d), TimeGrid(1, 3))


def test_operator_type_roundtrip():
    d = HilbertDims(1, 1)
    op = Operator(SIGMA_PLUS, d)
    assert np.array_equal((op.dag @ op).matrix, np.diag([1, 0]))
