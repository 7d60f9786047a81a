"""Command-line entry point: ``superradiance-timing <experiment> [flags]``."""

from __future__ import annotations

import argparse
import logging
import sys

from .config import EXPERIMENTS, KEYS, PRESETS, build_config, parse_value, read_config_file, read_env
from .integrate import IntegrationError
from .liouvillian import ConfigError
from .states import StateCorruptionError
from .timing import AnalysisError

EXIT_OK, EXIT_CONFIG, EXIT_NUMERICAL, EXIT_ANALYSIS = 0, 2, 3, 4

FLAG_HELP = {
    "n_emitters": "number of emitters N",
    "n_photons": "initial photon number (default N/2)",
    "omega_q": "emitter frequency",
    "omega_c": "cavity frequency",
    "g": "coupling strength",
    "gamma": "local emitter decay rate",
    "kappa": "cavity loss rate",
    "gamma_phi": "local dephasing rate",
    "t_max": "time horizon",
    "n_points": "number of output times",
    "backend": "exact, dicke or auto",
    "out": "output directory",
    "workers": "parallel worker processes",
    "g_values": "comma-separated couplings for sweep-g",
    "n_values": "emitter counts, e.g. 2,4,6 or 2:20:2",
    "gammas": "decay rates for fit-alpha",
    "g_min": "lower end of the g_W search bracket",
    "g_max": "upper end of the g_W search bracket",
    "g_tol": "bisection tolerance on g_W",
    "global_entropy": "take S and C_rel on the full emitter and cavity state (true/false)",
    "with_gw": "also locate g_W after a g sweep",
}


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="superradiance-timing", description="Cavity superradiance timing experiments.")
    p.add_argument("-v", "--verbose", action="count", default=0)
    sub = p.add_subparsers(dest="experiment", required=True, metavar="experiment")
    for name in EXPERIMENTS:
        help_text = f"preset: {PRESETS[name][0]}" if name in PRESETS else None
        sp = sub.add_parser(name, help=help_text)
        sp.add_argument("--config", help="flat key = value file")
        for key in KEYS:
            # SUPPRESS keeps absent flags out of the namespace, so lower layers win
            sp.add_argument("--" + key.replace("_", "-"), dest=key, default=argparse.SUPPRESS, help=FLAG_HELP.get(key))
    return p


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    logging.basicConfig(level=logging.WARNING - 10 * min(args.verbose, 2), format="%(levelname)s %(name)s: %(message)s")
    raw = vars(args)
    try:
        flags = {k: parse_value(k, raw[k], "--" + k.replace("_", "-")) for k in KEYS if k in raw}
        file_values = read_config_file(raw["config"]) if raw.get("config") else {}
        cfg = build_config(args.experiment, file_values, read_env(), flags)
        from .experiments import run

        written = run(cfg)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (IntegrationError, StateCorruptionError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except AnalysisError as exc:
        print(f"analysis failure: {exc}", file=sys.stderr)
        return EXIT_ANALYSIS
    for label, path in written.items():
        print(f"{label}: {path}")
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
