"""Command-line interface.

Subcommands:

  simulate        replicate the synthetic adversarial-risk study
                  (records.csv + summary.csv)
  phase-diagram   dominant rate component per attack-radius exponent (phase.csv)
  theory-check    closed forms / bounds against Monte-Carlo oracles (theory.csv)
  curse           one method's adversarial loss as n grows (curse.csv)

Settings come from an optional flat `key = value` config file (--config);
--seed, --workers, and --out override their config counterparts.  Unknown
config keys are rejected by name.  Exit codes: 0 success, 2 configuration
error, 3 runtime failure.
"""

from __future__ import annotations

import argparse
import math
import os
import sys
from fractions import Fraction

import numpy as np

from . import rates
from .experiments import (
    METHODS,
    ExperimentPlan,
    aggregate,
    curse_experiment,
    run_plan,
)
from .geometry import stream_generator


class ConfigError(ValueError):
    """A config file or setting could not be interpreted."""


def _parse_int(s):
    return int(s)


def _parse_float(s):
    return float(s)


def _parse_bool(s):
    v = s.strip().lower()
    if v in ("true", "1", "yes", "on"):
        return True
    if v in ("false", "0", "no", "off"):
        return False
    raise ValueError(f"expected a boolean, got {s!r}")


def _parse_str(s):
    return s.strip()


def _parse_fraction(s):
    return Fraction(s.strip())


def _list_of(item_parser):
    def parse(s):
        items = [part.strip() for part in s.split(",") if part.strip()]
        if not items:
            raise ValueError("expected a nonempty comma-separated list")
        return tuple(item_parser(part) for part in items)

    return parse


_parse_int_list = _list_of(_parse_int)
_parse_float_list = _list_of(_parse_float)
_parse_str_list = _list_of(_parse_str)
_parse_fraction_list = _list_of(_parse_fraction)


def _default_exponents():
    return tuple(Fraction(k, 40) for k in range(1, 81))


#: per-subcommand config schema: key -> (parser, default)
SCHEMAS = {
    "simulate": {
        "cases": (_parse_int_list, (1, 2, 3)),
        "n": (_parse_int_list, (80, 150, 300)),
        "n_validation": (_parse_int, 100),
        "n_test": (_parse_int, 100),
        "r": (_parse_float_list, tuple(round(0.01 * i, 2) for i in range(11))),
        "methods": (_parse_str_list, METHODS),
        "replications": (_parse_int, 100),
        "seed": (_parse_int, 0),
        "workers": (_parse_int, 1),
        "out": (_parse_str, "."),
        "degree": (_parse_int, 7),
        "bandwidth_min": (_parse_float, 0.05),
        "bandwidth_max": (_parse_float, 2.0),
        "bandwidth_count": (_parse_int, 20),
        "ip1_delta_coeff": (_parse_float, 0.75),
        "ip2_delta": (_parse_float, 0.3),
        "singular_exponent": (_parse_float, 0.2),
        "resolution": (_parse_int, 101),
        "noise_value": (_parse_float, 0.5),
        "noise_is_variance": (_parse_bool, True),
    },
    "phase-diagram": {
        "regime": (_parse_str, "low"),
        "beta": (_parse_fraction, Fraction(1)),
        "d": (_parse_int, 1),
        "exponents": (_parse_fraction_list, _default_exponents()),
        "out": (_parse_str, "."),
    },
    "theory-check": {
        "sigma": (_parse_float, 1.0),
        "deltas": (_parse_float_list, (0.0, 0.3, 0.5, 1.0, 2.0, 4.0)),
        "k_values": (_parse_int_list, (1, 10, 100, 1000)),
        "n_values": (_parse_int_list, (1000, 10000, 100000)),
        "nrd": (_parse_float, 1.0),
        "cost_delta": (_parse_float, 0.0),
        "n_mc": (_parse_int, 100000),
        "n_designs": (_parse_int, 50),
        "resolution": (_parse_int, 10000),
        "seed": (_parse_int, 0),
        "out": (_parse_str, "."),
        "corrupt": (_parse_float, 0.0),
    },
    "curse": {
        "case": (_parse_int, 2),
        "method": (_parse_str, "SI"),
        "r_rule": (_parse_str, "fixed"),
        "r": (_parse_float, 0.1),
        "n": (_parse_int_list, (80, 150, 300)),
        "replications": (_parse_int, 100),
        "seed": (_parse_int, 0),
        "workers": (_parse_int, 1),
        "out": (_parse_str, "."),
        "degree": (_parse_int, 7),
        "singular_exponent": (_parse_float, 0.2),
        "resolution": (_parse_int, 101),
        "noise_value": (_parse_float, 0.5),
        "noise_is_variance": (_parse_bool, True),
        "ip1_delta_coeff": (_parse_float, 0.75),
        "ip2_delta": (_parse_float, 0.3),
    },
}


def parse_config_text(text: str) -> dict[str, str]:
    """Flat `key = value` lines; '#' starts a comment; later keys win."""
    out: dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {raw!r}")
        key, value = line.split("=", 1)
        key = key.strip()
        if not key:
            raise ConfigError(f"line {lineno}: empty key")
        out[key] = value.strip()
    return out


def render_config(settings: dict[str, str]) -> str:
    return "".join(f"{k} = {v}\n" for k, v in settings.items())


def resolve_settings(subcommand: str, args) -> dict:
    """File settings + flag overrides, typed per the subcommand schema."""
    schema = SCHEMAS[subcommand]
    raw: dict[str, str] = {}
    if args.config is not None:
        try:
            with open(args.config, "r", encoding="utf-8") as fh:
                raw = parse_config_text(fh.read())
        except OSError as exc:
            raise ConfigError(f"cannot read config file: {exc}") from exc
    settings = {key: default for key, (_, default) in schema.items()}
    for key, value in raw.items():
        if key not in schema:
            raise ConfigError(
                f"unknown config key {key!r} for subcommand {subcommand!r}"
            )
        parser, _ = schema[key]
        try:
            settings[key] = parser(value)
        except (ValueError, ZeroDivisionError) as exc:
            raise ConfigError(f"bad value for {key!r}: {exc}") from exc
    for flag in ("seed", "workers", "out"):
        if getattr(args, flag, None) is not None:
            if flag not in schema:
                raise ConfigError(
                    f"--{flag} does not apply to subcommand {subcommand!r}"
                )
            settings[flag] = getattr(args, flag)
    return settings


def format_value(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, Fraction):
        return f"{float(v):.9g}"
    if isinstance(v, (float, np.floating)):
        return f"{float(v):.9g}"
    return str(v)


def write_csv(path: str, header: list[str], rows) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(format_value(v) for v in row) + "\n")


def _ensure_out(out_dir: str) -> str:
    os.makedirs(out_dir, exist_ok=True)
    return out_dir


def cmd_simulate(settings: dict) -> int:
    plan = ExperimentPlan(
        cases=tuple(settings["cases"]),
        n_train=tuple(settings["n"]),
        n_validation=settings["n_validation"],
        n_test=settings["n_test"],
        r_values=tuple(settings["r"]),
        methods=tuple(settings["methods"]),
        replications=settings["replications"],
        base_seed=settings["seed"],
        degree=settings["degree"],
        bandwidths=tuple(
            np.geomspace(
                settings["bandwidth_min"],
                settings["bandwidth_max"],
                settings["bandwidth_count"],
            )
        ),
        ip1_delta_coeff=settings["ip1_delta_coeff"],
        ip2_delta=settings["ip2_delta"],
        singular_exponent=settings["singular_exponent"],
        resolution=settings["resolution"],
        noise_value=settings["noise_value"],
        noise_is_variance=settings["noise_is_variance"],
        workers=settings["workers"],
    )
    records = run_plan(plan)
    out = _ensure_out(settings["out"])
    write_csv(
        os.path.join(out, "records.csv"),
        ["case", "n", "r", "method", "rep", "adv_loss", "std_loss", "train_mse",
         "max_resid", "bandwidth"],
        (
            (rec.case, rec.n, rec.r, rec.method, rec.rep, rec.adv_loss,
             rec.std_loss, rec.train_mse, rec.max_resid, rec.bandwidth)
            for rec in records
        ),
    )
    write_csv(
        os.path.join(out, "summary.csv"),
        ["case", "n", "r", "method", "median", "se"],
        (
            (row.case, row.n, row.r, row.method, row.median, row.se)
            for row in aggregate(records, strict=False)
        ),
    )
    n_failed = sum(1 for rec in records if rec.failed)
    if n_failed:
        print(
            f"warning: {n_failed} failure-marker records written", file=sys.stderr
        )
        return 3
    return 0


def cmd_phase_diagram(settings: dict) -> int:
    regime = settings["regime"].lower()
    cells = rates.phase_diagram(
        settings["beta"], settings["d"], regime, settings["exponents"]
    )
    out = _ensure_out(settings["out"])
    write_csv(
        os.path.join(out, "phase.csv"),
        ["r_exponent", "regime", "dominant_term", "boundary_flag"],
        (
            (cell.r_exponent, cell.regime, cell.dominant_term, cell.boundary_flag)
            for cell in cells
        ),
    )
    return 0


def cmd_theory_check(settings: dict) -> int:
    sigma = settings["sigma"]
    corrupt = settings["corrupt"]
    n_mc = settings["n_mc"]
    rng = stream_generator(settings["seed"], 101)
    rows = []
    for delta in settings["deltas"]:
        closed = rates.soft_threshold_second_moment(delta, sigma) + corrupt
        draws = sigma * rng.standard_normal(n_mc)
        vals = np.maximum(np.abs(draws) - delta, 0.0) ** 2
        mc = float(vals.mean())
        se = float(vals.std(ddof=1) / math.sqrt(n_mc))
        z = abs(mc - closed) / se if se > 0 else math.inf
        rows.append(("soft-moment", delta, closed, mc, se, z, z <= 3.0))
        stein = rates.stein_lower_bound(delta, sigma) + corrupt
        zs = (stein - mc) / se if se > 0 else math.inf
        rows.append(("stein-bound", delta, stein, mc, se, zs, zs <= 3.0))
    for k in settings["k_values"]:
        est = rates.expected_max_soft_threshold(
            k, settings["cost_delta"], sigma, rng, n_mc=n_mc
        )
        bound = est.upper_bound - corrupt
        z = (est.estimate - bound) / est.std_error if est.std_error > 0 else math.inf
        rows.append(("max-moment", k, bound, est.estimate, est.std_error, z, z <= 3.0))
    ratios = []
    for n in settings["n_values"]:
        r = (settings["nrd"] / n) ** 1.0
        params = rates.RateParams(
            n=n, r=r, beta=1.0, d=1, delta=settings["cost_delta"], sigma=sigma
        )
        est = rates.mc_interpolation_cost(
            params,
            rng,
            n_designs=settings["n_designs"],
            resolution=settings["resolution"],
        )
        ratios.append((n, est.estimate, est.std_error))
    ref = ratios[0][1]
    for n, val, se in ratios:
        ratio = val / ref if ref > 0 else math.inf
        ok = ref > 0 and 0.5 <= ratio <= 2.0
        rows.append(("cost-scaling", n, ref, val, se, ratio, ok))
    out = _ensure_out(settings["out"])
    write_csv(
        os.path.join(out, "theory.csv"),
        ["check", "param", "closed_form", "mc_estimate", "mc_se", "z", "pass"],
        rows,
    )
    return 0


def cmd_curse(settings: dict) -> int:
    rows = curse_experiment(
        case_id=settings["case"],
        method=settings["method"],
        n_list=tuple(settings["n"]),
        r_rule=settings["r_rule"],
        fixed_r=settings["r"],
        replications=settings["replications"],
        base_seed=settings["seed"],
        workers=settings["workers"],
        degree=settings["degree"],
        singular_exponent=settings["singular_exponent"],
        resolution=settings["resolution"],
        noise_value=settings["noise_value"],
        noise_is_variance=settings["noise_is_variance"],
        ip1_delta_coeff=settings["ip1_delta_coeff"],
        ip2_delta=settings["ip2_delta"],
    )
    out = _ensure_out(settings["out"])
    write_csv(
        os.path.join(out, "curse.csv"),
        ["n", "r", "method", "median", "se", "log_log_n"],
        (
            (row.n, row.r, row.method, row.median, row.se, row.log_log_n)
            for row in rows
        ),
    )
    return 0


_COMMANDS = {
    "simulate": cmd_simulate,
    "phase-diagram": cmd_phase_diagram,
    "theory-check": cmd_theory_check,
    "curse": cmd_curse,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="interprisk",
        description="Stress-test interpolating regression estimators under "
        "input-perturbation attacks.",
    )
    sub = parser.add_subparsers(dest="subcommand", required=True)
    for name in _COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", help="flat key = value settings file")
        p.add_argument("--out", help="output directory (default: current)")
        if name != "phase-diagram":
            p.add_argument("--seed", type=int, help="override the config seed")
        if name in ("simulate", "curse"):
            p.add_argument("--workers", type=int, help="parallel workers")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        settings = resolve_settings(args.subcommand, args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    try:
        return _COMMANDS[args.subcommand](settings)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except ValueError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # runtime failure; partial outputs may exist
        print(f"runtime failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
