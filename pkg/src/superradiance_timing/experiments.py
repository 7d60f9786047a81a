"""Experiment engines behind the CLI; figure presets reuse these."""

from __future__ import annotations

import logging
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import output
from .backends import simulate, simulate_until
from .config import RunConfig
from .liouvillian import ConfigError
from .observables import QUANTITY_IDS
from .timing import (
    EXTREMUM_KIND,
    HIERARCHY,
    AnalysisError,
    NoExtremumError,
    _parallel_map,
    extremum_ordering,
    find_extremum,
    find_gw,
    fit_alpha,
    gap_sweep,
    has_extrema,
    trajectory_extrema,
)

log = logging.getLogger(__name__)

VALIDATION_TOL = 1e-6
FIT_QUANTITIES = ("c_rel", "c0_re", "W")


class BackendMismatchError(AnalysisError):
    pass


def _tag(cfg: RunConfig) -> str:
    name = cfg.options.get("preset") or cfg.experiment
    return f"experiment={name} {cfg.params_line()}"


def _extrema_job(args):
    params, grid, backend, global_entropy = args
    result, used = simulate_until(params, grid, has_extrema, backend, global_entropy=global_entropy)
    return result, used


def _records(exp_id, extrema):
    return [(exp_id, extrema[q]) for q in HIERARCHY if q in extrema]


def run_evolve(cfg: RunConfig) -> dict[str, Path]:
    result = simulate(cfg.model, cfg.grid, cfg.backend, global_entropy=cfg.options.get("global_entropy", False))
    out = {"timeseries": output.write_timeseries(cfg.out_dir / "timeseries.csv", _tag(cfg), result)}
    extrema, missing = {}, []
    for q in HIERARCHY:
        try:
            extrema[q] = find_extremum(result.times, result.series[q], EXTREMUM_KIND[q], q)
        except NoExtremumError:
            missing.append(q)
    exp_id = cfg.options.get("preset") or "evolve"
    out["extrema"] = output.write_records(cfg.out_dir / "extrema.csv", _tag(cfg), _records(exp_id, extrema))
    if missing:
        raise NoExtremumError(f"no interior extremum within t_max={cfg.grid.t_max} for {missing}", -1)
    report = extremum_ordering(extrema, 2 * cfg.grid.step)
    out["ordering"] = _write_ordering(cfg, [(exp_id, report)])
    return out


def _write_ordering(cfg, reports):
    rows = [
        (exp, c.first, c.second, c.gap, c.holds, c.tie)
        for exp, rep in reports
        for c in rep.checks
    ]
    return output.write_table(
        cfg.out_dir / "ordering.csv", _tag(cfg), ("experiment", "first", "second", "gap", "holds", "tie"), rows
    )


@dataclass
class SizeSweep:
    n_values: list[int]
    extrema: list[dict]
    results: list
    steps: list[float]

    def taus(self, q: str) -> list[float]:
        return [e[q].tau for e in self.extrema]


def size_sweep(cfg: RunConfig, gamma: float | None = None) -> SizeSweep:
    """Trajectories and extrema for every N in ``n_values`` (deterministic order)."""
    model = cfg.model if gamma is None else cfg.model.with_(gamma=gamma)
    ns = list(cfg.options["n_values"])
    jobs = [
        (model.with_(n_emitters=n, n_photons_initial=None), cfg.grid, cfg.backend, cfg.options.get("global_entropy", False))
        for n in ns
    ]
    runs = _parallel_map(_extrema_job, jobs, cfg.workers)
    extrema = [trajectory_extrema(r) for r, _ in runs]
    return SizeSweep(ns, extrema, [r for r, _ in runs], [g.step for _, g in runs])


def run_sweep_n(cfg: RunConfig) -> dict[str, Path]:
    sweep = size_sweep(cfg)
    exp = cfg.options.get("preset") or "sweep-n"
    records, reports = [], []
    out = {}
    for n, ex, res, step in zip(sweep.n_values, sweep.extrema, sweep.results, sweep.steps):
        records += _records(f"{exp}:N={n}", ex)
        reports.append((f"{exp}:N={n}", extremum_ordering(ex, 2 * step)))
        out[f"timeseries_N{n}"] = output.write_timeseries(cfg.out_dir / f"timeseries_N{n}.csv", _tag(cfg), res)
    out["extrema"] = output.write_records(cfg.out_dir / "extrema.csv", _tag(cfg), records)
    out["ordering"] = _write_ordering(cfg, reports)
    return out


def run_fit_alpha(cfg: RunConfig) -> dict[str, Path]:
    exp = cfg.options.get("preset") or "fit-alpha"
    records, fit_rows = [], []
    for gamma in cfg.options["gammas"]:
        sweep = size_sweep(cfg, gamma)
        for n, ex in zip(sweep.n_values, sweep.extrema):
            records += _records(f"{exp}:gamma={gamma:g}:N={n}", ex)
        for q in FIT_QUANTITIES:
            fit = fit_alpha(sweep.n_values, sweep.taus(q))
            log.info("gamma=%g %s alpha=%.4f", gamma, q, fit.alpha)
            fit_rows.append(
                (f"{exp}:gamma={gamma:g}", float(gamma), q, fit.alpha, fit.prefactor, fit.residual,
                 " ".join(str(n) for n in fit.n_values))
            )
    return {
        "extrema": output.write_records(cfg.out_dir / "extrema.csv", _tag(cfg), records),
        "fits": output.write_table(
            cfg.out_dir / "fits.csv", _tag(cfg),
            ("experiment", "gamma", "quantity", "alpha", "prefactor", "residual", "n_values"), fit_rows,
        ),
    }


def run_sweep_g(cfg: RunConfig) -> dict[str, Path]:
    gaps = gap_sweep(cfg.model, cfg.options["g_values"], cfg.grid, cfg.backend, cfg.workers)
    rows = []
    for r in gaps:
        status = "ok" if not r.missing else "missing:" + "+".join(r.missing)
        rows.append((r.g, r.taus["c_rel"], r.taus["c0_re"], r.taus["W"], r.tau_cw, r.tau_ew, status))
    out = {
        "gaps": output.write_table(
            cfg.out_dir / "gaps.csv", _tag(cfg),
            ("g", "tau_crel", "tau_c0", "tau_w", "tau_cw", "tau_ew", "status"), rows,
        )
    }
    if cfg.options.get("with_gw"):
        out.update(run_find_gw(cfg))
    return out


def run_find_gw(cfg: RunConfig) -> dict[str, Path]:
    lo, hi, tol = cfg.options["g_min"], cfg.options["g_max"], cfg.options["g_tol"]
    g_w = find_gw(cfg.model, (lo, hi), cfg.grid, cfg.backend, tol)
    return {
        "gw": output.write_table(
            cfg.out_dir / "gw.csv", _tag(cfg), ("g_w", "g_min", "g_max", "g_tol"), [(g_w, lo, hi, tol)]
        )
    }


@dataclass
class BackendComparison:
    n_emitters: int
    max_deviation: dict[str, float]
    worst_time: dict[str, float]
    tolerance: float = VALIDATION_TOL
    note: str = ""

    @property
    def passed(self) -> bool:
        return all(d < self.tolerance for d in self.max_deviation.values())


def validate_backends(cfg: RunConfig) -> BackendComparison:
    """Run exact and Dicke backends on one configuration and compare all six series."""
    n = cfg.model.n_emitters
    if n > 9:
        raise ConfigError(f"n_emitters: backend validation needs N <= 9, got {n}")
    exact = simulate(cfg.model, cfg.grid, "exact")
    dicke = simulate(cfg.model, cfg.grid, "dicke")
    dev, worst = {}, {}
    for q in QUANTITY_IDS:
        diff = np.abs(exact.series[q] - dicke.series[q])
        i = int(np.argmax(diff))
        dev[q] = float(diff[i])
        worst[q] = float(exact.times[i])
    note = "N=9 is the largest size where both approaches are run" if n == 9 else ""
    return BackendComparison(n, dev, worst, note=note)


def run_validate(cfg: RunConfig) -> dict[str, Path]:
    cmp = validate_backends(cfg)
    rows = [(q, cmp.max_deviation[q], cmp.worst_time[q], cmp.max_deviation[q] < cmp.tolerance) for q in QUANTITY_IDS]
    path = output.write_table(
        cfg.out_dir / "validation.csv", _tag(cfg) + (f" note={cmp.note!r}" if cmp.note else ""),
        ("quantity", "max_abs_deviation", "worst_time", "pass"), rows,
    )
    if not cmp.passed:
        bad = {q: (d, cmp.worst_time[q]) for q, d in cmp.max_deviation.items() if d >= cmp.tolerance}
        raise BackendMismatchError(f"backends disagree beyond {cmp.tolerance:g}: {bad}")
    return {"validation": path}


ENGINES = {
    "evolve": run_evolve,
    "sweep-n": run_sweep_n,
    "fit-alpha": run_fit_alpha,
    "sweep-g": run_sweep_g,
    "find-gw": run_find_gw,
    "validate": run_validate,
}


def run(cfg: RunConfig) -> dict[str, Path]:
    """Execute the configured experiment and return the files written."""
    return ENGINES[cfg.experiment](cfg)
