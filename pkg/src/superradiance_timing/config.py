"""Run configuration: flat ``key = value`` files, environment, CLI flags.

Precedence, lowest to highest: defaults, config file, ``SRT_*`` environment
variables, command-line flags.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field, replace
from pathlib import Path

from .backends import BACKENDS, resolve_backend
from .liouvillian import ConfigError, ModelParams
from .propagator import TimeGrid

ENV_PREFIX = "SRT_"

EXPERIMENTS = (
    "evolve", "sweep-g", "sweep-n", "fit-alpha", "find-gw", "validate",
    "fig2", "fig3", "fig4", "fig5",
)


def _floats(text: str) -> tuple[float, ...]:
    return tuple(float(x) for x in text.replace(" ", "").split(",") if x)


def _ints(text: str) -> tuple[int, ...]:
    out = []
    for part in text.replace(" ", "").split(","):
        if not part:
            continue
        if ":" in part:  # start:stop:step, stop inclusive
            a, b, *c = (int(x) for x in part.split(":"))
            out.extend(range(a, b + 1, c[0] if c else 1))
        else:
            out.append(int(part))
    return tuple(out)


def _bool(text: str) -> bool:
    t = text.strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _optional_int(text: str):
    return None if text.strip().lower() in ("", "none", "auto") else int(text)


# key -> parser
KEYS = {
    "n_emitters": int,
    "n_photons": _optional_int,
    "omega_q": float,
    "omega_c": float,
    "g": float,
    "gamma": float,
    "kappa": float,
    "gamma_phi": float,
    "t_max": float,
    "n_points": int,
    "backend": str,
    "out": str,
    "workers": int,
    "g_values": _floats,
    "n_values": _ints,
    "gammas": _floats,
    "g_min": float,
    "g_max": float,
    "g_tol": float,
    "global_entropy": _bool,
    "with_gw": _bool,
}

DEFAULTS = {
    "n_emitters": 2,
    "n_photons": None,
    "omega_q": 0.0,
    "omega_c": 0.0,
    "g": 1.0,
    "gamma": 0.1,
    "kappa": 0.1,
    "gamma_phi": 0.0225,
    "t_max": 10.0,
    "n_points": 2001,
    "backend": "auto",
    "out": "results",
    "workers": os.cpu_count() or 1,
    "g_values": (0.1, 0.15, 0.2, 0.3, 0.5, 0.75, 1.0, 1.5, 2.0, 3.0, 4.0),
    "n_values": (2, 4, 6, 8),
    "gammas": (0.0, 0.1, 1.0, 2.0),
    "g_min": 0.05,
    "g_max": 1.0,
    "g_tol": 1e-3,
    "global_entropy": False,
    "with_gw": False,
}

# named presets over the generic experiments
PRESETS = {
    "fig2": ("evolve", {"n_emitters": 2}),
    "fig3": ("sweep-n", {"n_values": (2, 4, 6, 8)}),
    "fig4": (
        "fit-alpha",
        {"n_values": tuple(range(2, 21, 2)), "gammas": (0.0, 0.1, 1.0, 2.0), "t_max": 2.0, "n_points": 401},
    ),
    "fig5": ("sweep-g", {"n_emitters": 2, "n_photons": 1, "with_gw": True}),
}


@dataclass(frozen=True)
class RunConfig:
    experiment: str
    model: ModelParams
    grid: TimeGrid
    backend: str = "auto"
    out_dir: Path = Path("results")
    workers: int = 1
    options: dict = field(default_factory=dict)

    def params_line(self) -> str:
        """Every setting that affects results as ``key=value`` pairs, in fixed order."""
        values = self.flat()
        return " ".join(f"{k}={_fmt_value(values[k])}" for k in KEYS if k not in ("out", "workers"))

    def flat(self) -> dict:
        m = self.model
        out = dict(self.options)
        out.update(
            n_emitters=m.n_emitters,
            n_photons=m.n_photons_initial,
            omega_q=m.omega_q,
            omega_c=m.omega_c,
            g=m.g,
            gamma=m.gamma,
            kappa=m.kappa,
            gamma_phi=m.gamma_phi,
            t_max=self.grid.t_max,
            n_points=self.grid.n_points,
            backend=self.backend,
            out=str(self.out_dir),
            workers=self.workers,
        )
        return out

    def with_model(self, **changes) -> "RunConfig":
        return replace(self, model=self.model.with_(**changes))


def _fmt_value(v) -> str:
    if isinstance(v, tuple):
        return ",".join(_fmt_value(x) for x in v)
    if isinstance(v, float):
        return repr(v)
    return str(v)


def parse_value(key: str, text: str, origin: str):
    if key not in KEYS:
        raise ConfigError(f"{origin}: unknown key {key!r}")
    try:
        return KEYS[key](text)
    except ValueError as exc:
        raise ConfigError(f"{origin}: bad value for {key!r}: {exc}") from None


def read_config_file(path: str | Path) -> dict:
    path = Path(path)
    try:
        lines = path.read_text().splitlines()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    values = {}
    for lineno, raw in enumerate(lines, 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected 'key = value', got {raw!r}")
        key, text = (s.strip() for s in line.split("=", 1))
        key = key.replace("-", "_")
        values[key] = parse_value(key, text, f"{path}:{lineno}")
    return values


def read_env(environ=None) -> dict:
    environ = os.environ if environ is None else environ
    values = {}
    for key in KEYS:
        name = ENV_PREFIX + key.upper()
        if name in environ:
            values[key] = parse_value(key, environ[name], f"${name}")
    return values


def _check_sweeps(base: str, values: dict) -> None:
    if base in ("sweep-n", "fit-alpha"):
        ns = values["n_values"]
        if not ns or any(n < 2 or n % 2 for n in ns):
            raise ConfigError(f"n_values: size sweeps take even N >= 2 (n_p = N/2), got {ns}")
        if base == "fit-alpha" and len(set(ns)) < 3:
            raise ConfigError("n_values: the scaling fit needs at least 3 distinct N")
        if base == "fit-alpha" and not values["gammas"]:
            raise ConfigError("gammas: empty")
    if base == "sweep-g" and (not values["g_values"] or min(values["g_values"]) <= 0):
        raise ConfigError(f"g_values: need positive couplings, got {values['g_values']}")
    if base == "find-gw" or (base == "sweep-g" and values["with_gw"]):
        if not 0 <= values["g_min"] < values["g_max"]:
            raise ConfigError(f"g_min/g_max: need 0 <= g_min < g_max, got {values['g_min']}, {values['g_max']}")
        if values["g_tol"] <= 0:
            raise ConfigError("g_tol: must be > 0")


def build_config(experiment: str, file_values=None, env_values=None, flag_values=None) -> RunConfig:
    """Merge the layers for ``experiment`` (presets fill in before the file layer)."""
    if experiment not in EXPERIMENTS:
        raise ConfigError(f"unknown experiment {experiment!r}")
    values = dict(DEFAULTS)
    base = experiment
    if experiment in PRESETS:
        base, preset = PRESETS[experiment]
        values.update(preset)
    for layer in (file_values, env_values, flag_values):
        values.update(layer or {})
    if values["backend"] not in BACKENDS:
        raise ConfigError(f"backend: must be one of {BACKENDS}, got {values['backend']!r}")
    if values["workers"] < 1:
        raise ConfigError("workers: must be >= 1")
    model = ModelParams(
        n_emitters=values["n_emitters"],
        n_photons_initial=values["n_photons"],
        omega_q=values["omega_q"],
        omega_c=values["omega_c"],
        g=values["g"],
        gamma=values["gamma"],
        kappa=values["kappa"],
        gamma_phi=values["gamma_phi"],
    )
    grid = TimeGrid(values["t_max"], values["n_points"])
    _check_sweeps(base, values)
    if base in ("evolve", "find-gw", "sweep-g", "validate"):
        resolve_backend(values["backend"], model.n_emitters)
        model.n_photons  # odd N without n_photons fails here
    options = {k: values[k] for k in ("g_values", "n_values", "gammas", "g_min", "g_max", "g_tol", "global_entropy", "with_gw")}
    options["preset"] = experiment if experiment in PRESETS else ""
    return RunConfig(
        experiment=base,
        model=model,
        grid=grid,
        backend=values["backend"],
        out_dir=Path(values["out"]),
        workers=values["workers"],
        options=options,
    )
