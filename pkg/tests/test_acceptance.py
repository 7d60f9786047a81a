"""Acceptance criteria, one test each; a PASS/FAIL line per criterion is
printed in the terminal summary."""

import numpy as np
import pytest

from superradiance_timing.backends import simulate, simulate_until
from superradiance_timing.liouvillian import ModelParams, build_generator
from superradiance_timing.observables import QUANTITY_IDS, pair_observables
from superradiance_timing.operators import HilbertDims
from superradiance_timing.propagator import TimeGrid, evolve, initial_state
from superradiance_timing.states import DensityMatrix, basis_index
from superradiance_timing.timing import (
    extremum_ordering,
    find_gw,
    fit_alpha,
    gap_sweep,
    has_extrema,
    trajectory_extrema,
)

RABI_TOL = 1e-6
DECAY_TOL = 1e-7
TRACE_TOL = 1e-9
HERMITIAN_TOL = 1e-10
EIGEN_FLOOR = -1e-8
TIE_STEPS = 2
ALPHA_BAND = {0.0: (0.85, 1.15), 2.0: (1.05, 1.35)}
GW_TARGET, GW_TOL = 0.20, 0.05
BACKEND_TOL = 1e-6
UNIT_TOL = 1e-12

SIZES = (2, 4, 6, 8)
FIT_SIZES = tuple(range(2, 21, 2))
FIT_GRID = TimeGrid(2.0, 401)
G_SWEEP = (0.1, 0.15, 0.2, 0.3, 0.5, 0.75, 1.0, 1.5, 2.0, 3.0, 4.0)

RESULTS: list[tuple[str, bool, str]] = []


def report(label, ok, detail):
    RESULTS.append((label, bool(ok), detail))
    assert ok, detail


@pytest.fixture(scope="module")
def fig3_runs():
    runs = {}
    for n in SIZES:
        result, grid = simulate_until(ModelParams(n_emitters=n), TimeGrid(), has_extrema)
        runs[n] = (result, grid, trajectory_extrema(result))
    return runs


def _pe_run(params, rho0, grid, index):
    gen = build_generator(params, rho0.dims)
    return evolve(gen, rho0, grid, lambda t, r: {"p": r.full()[index, index].real})


def test_criterion_1_analytic_dynamics():
    grid = TimeGrid(10.0, 2001)
    t = grid.times
    p = ModelParams(n_emitters=1, n_photons_initial=1, gamma=0, kappa=0, gamma_phi=0)
    d = p.dims()
    rabi = _pe_run(p, initial_state(p), grid, basis_index("e", 0, d))
    err_rabi = np.max(np.abs(rabi["p"] - np.sin(t) ** 2))

    d1 = HilbertDims(1, 1)
    decay_p = ModelParams(n_emitters=1, n_photons_initial=0, gamma=0.5, kappa=0, gamma_phi=0)
    excited = DensityMatrix(np.diag([0, 1]).astype(complex), d1)
    decay = _pe_run(decay_p, excited, grid, 1)
    err_decay = np.max(np.abs(decay["p"] - np.exp(-0.5 * t)))

    # photon loss with the emitter decoupled: g is only a tiny residual here
    loss_p = ModelParams(n_emitters=1, n_photons_initial=1, g=1e-9, gamma=0, kappa=0.3, gamma_phi=0)
    loss = _pe_run(loss_p, initial_state(loss_p), grid, basis_index("g", 1, loss_p.dims()))
    err_loss = np.max(np.abs(loss["p"] - np.exp(-0.3 * t)))

    ok = err_rabi < RABI_TOL and err_decay < DECAY_TOL and err_loss < DECAY_TOL
    report("1 analytic dynamics", ok, f"rabi {err_rabi:.2e} (<{RABI_TOL:g}), decay {err_decay:.2e}, loss {err_loss:.2e} (<{DECAY_TOL:g})")


def test_criterion_2_lindblad_sanity():
    d = simulate(ModelParams(), TimeGrid()).diagnostics
    ok = (
        d["max_trace_drift"] < TRACE_TOL
        and d["max_hermitian_drift"] < HERMITIAN_TOL
        and d["max_hermitian_correction"] < HERMITIAN_TOL
        and d["min_eigenvalue"] >= EIGEN_FLOOR
        and d["tolerance_escalations"] == 0
    )
    report(
        "2 lindblad sanity",
        ok,
        f"trace {d['max_trace_drift']:.1e}, hermiticity {d['max_hermitian_drift']:.1e}, "
        f"correction {d['max_hermitian_correction']:.1e}, min eig {d['min_eigenvalue']:.1e}",
    )


def test_criterion_3_temporal_hierarchy_n2():
    grid = TimeGrid()
    ex = trajectory_extrema(simulate(ModelParams(), grid))
    t_rel, t_c0, t_w = ex["c_rel"].tau, ex["c0_re"].tau, ex["W"].tau
    tie = TIE_STEPS * grid.step
    ok = t_rel < t_c0 and abs(t_c0 - t_w) <= tie
    report(
        "3 temporal hierarchy N=2",
        ok,
        f"tau_Crel {t_rel:.6f} < tau_C0 {t_c0:.6f}: {t_rel < t_c0}; |tau_C0 - tau_W| = {abs(t_c0 - t_w):.6f} vs {tie:.6f}",
    )


@pytest.mark.slow
def test_criterion_4_hierarchy_across_sizes(fig3_runs):
    lines, ok = [], True
    for n, (_, grid, ex) in fig3_runs.items():
        rep = extremum_ordering(ex, TIE_STEPS * grid.step, expected=("c_rel", "c0_re", "W"))
        ok &= rep.ok
        lines.append(f"N={n}: " + " ".join(f"{q}={ex[q].tau:.4f}" for q in ("c_rel", "c0_re", "W")))
    for q in ("c_rel", "c0_re", "W"):
        taus = [fig3_runs[n][2][q].tau for n in SIZES]
        ok &= all(a > b for a, b in zip(taus, taus[1:]))
    report("4 hierarchy across sizes", ok, "; ".join(lines))


@pytest.mark.slow
def test_criterion_5_scaling_law():
    alphas = {}
    for gamma in ALPHA_BAND:
        taus = []
        for n in FIT_SIZES:
            result, _ = simulate_until(ModelParams(n_emitters=n, gamma=gamma), FIT_GRID, has_extrema)
            taus.append(trajectory_extrema(result)["c_rel"].tau)
        alphas[gamma] = fit_alpha(FIT_SIZES, taus)
    ok = all(lo <= alphas[g].alpha <= hi for g, (lo, hi) in ALPHA_BAND.items())
    detail = ", ".join(
        f"gamma={g:g}: alpha={f.alpha:.3f} in {ALPHA_BAND[g]} (residual {f.residual:.3f})" for g, f in alphas.items()
    )
    report("5 scaling law", ok, detail)


@pytest.mark.slow
def test_criterion_6_entanglement_onset():
    p = ModelParams(n_emitters=2, n_photons_initial=1)
    g_w = find_gw(p, (0.05, 1.0), TimeGrid(), tol=1e-3)
    gaps = gap_sweep(p, G_SWEEP, TimeGrid())
    cw = np.array([r.tau_cw for r in gaps])
    ew = np.array([r.tau_ew for r in gaps])
    ok = (
        abs(g_w - GW_TARGET) <= GW_TOL
        and not any(r.missing for r in gaps)
        and np.all(cw >= 0)
        and np.all(ew >= cw)
        and np.all(np.diff(cw) < 0)
        and np.all(np.diff(ew) < 0)
        and cw[-1] < 0.1 * cw[0]
        and ew[-1] < 0.1 * ew[0]
    )
    report(
        "6 entanglement onset",
        ok,
        f"g_W={g_w:.4f} (target {GW_TARGET}+-{GW_TOL}); tau_cw {cw[0]:.4f}->{cw[-1]:.4f}, tau_ew {ew[0]:.4f}->{ew[-1]:.4f}",
    )


@pytest.mark.slow
def test_criterion_7_backend_equivalence():
    worst = {}
    for n in (2, 4, 6):
        p = ModelParams(n_emitters=n)
        exact = simulate(p, TimeGrid(), "exact")
        dicke = simulate(p, TimeGrid(), "dicke")
        worst[n] = max(float(np.max(np.abs(exact[q] - dicke[q]))) for q in QUANTITY_IDS)
    ok = all(v < BACKEND_TOL for v in worst.values())
    report("7 backend equivalence", ok, ", ".join(f"N={n}: {v:.1e}" for n, v in worst.items()) + f" (<{BACKEND_TOL:g})")


def test_criterion_8_observable_oracle():
    d = HilbertDims(2, 1)
    ket = lambda q: np.eye(4)[basis_index(q, 0, d)]
    bell = (ket("eg") + ket("ge")) / np.sqrt(2)
    cases = {
        "bell": (np.outer(bell, bell), (0.5, -1.0, -2.0, 0.0, np.log(2))),
        "ground": (np.outer(ket("gg"), ket("gg")), (0.0, 1.0, 2.0, 0.0, 0.0)),
        "mixed": (np.eye(4) / 4, (0.0, 0.0, 1.0, np.log(4), 0.0)),
    }
    errs = {}
    for name, (rho, expected) in cases.items():
        o = pair_observables(rho)
        got = (o.c0.real, o.czz, o.witness, o.entropy, o.c_rel)
        errs[name] = max(max(abs(a - b) for a, b in zip(got, expected)), abs(o.c0.imag))
    ok = all(e <= UNIT_TOL for e in errs.values())
    report("8 observable oracle", ok, ", ".join(f"{k} {v:.1e}" for k, v in errs.items()) + f" (<={UNIT_TOL:g})")


@pytest.mark.slow
def test_criterion_9_w_before_czz_soft(fig3_runs):
    # reported only: no figure pins the correlated-dephasing timing
    lines, holds = [], True
    for n, (_, grid, ex) in fig3_runs.items():
        gap = ex["czz"].tau - ex["W"].tau
        holds &= gap >= -TIE_STEPS * grid.step
        lines.append(f"N={n}: tau_Czz - tau_W = {gap:+.4f}")
    RESULTS.append(("9 tau_W <= tau_Czz (soft)", holds, "; ".join(lines)))
