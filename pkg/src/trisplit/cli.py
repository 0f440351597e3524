"""Command-line front end.

Subcommands: certify-algebra, convergence, verify-duhamel, verify-bound,
schrodinger-bench.  Each takes --config (INI file, versioned), --seed,
--out (artifact directory) and --format (csv or json).  Exit code 0 means
every verdict passed, 1 means at least one failure, 2 means the run was
inconclusive or the configuration was unusable.
"""

from __future__ import annotations

import argparse
import csv
import configparser
import json
import os
import sys
from fractions import Fraction

from trisplit.duhamel import QuadratureSpec
from trisplit.harness import (
    ConvergenceStudy,
    certify_algebra,
    derive_seeds,
    run_convergence,
    run_schrodinger_benchmark,
    verify_bound,
    verify_duhamel,
)
from trisplit.splitting import load_scheme

EXIT_PASS = 0
EXIT_FAIL = 1
EXIT_INCONCLUSIVE = 2

CONFIG_VERSION = "1"

NOMINAL_ORDERS = {"lie-trotter": 1.0, "strang": 2.0}

DYADIC_STEPS = "2^-4 2^-5 2^-6 2^-7 2^-8 2^-9"

DEFAULTS = {
    "convergence": {
        "problem": "matrix",
        "schemes": "lie-trotter strang",
        "steps": DYADIC_STEPS,
        "horizon": "1.0",
        "seed": "20260819",
        "instances": "5",
        "dim": "8",
        "potential": "harmonic",
        "half_width": "10",
        "points": "256",
    },
    "verify-duhamel": {
        "count": "20",
        "dim": "4",
        "t_values": "0.25 0.5",
        "seed": "7",
        "gauss_order": "8",
        "panels": "1",
        "target_tol": "1e-8",
        "discrepancy_tol": "1e-6",
    },
    "verify-bound": {
        "count": "100",
        "dim": "6",
        "t_values": "0.1 0.5 1.0",
        "seed": "7",
        "slack": "1e-9",
    },
    "schrodinger-bench": {
        "potential": "harmonic",
        "half_width": "10",
        "points": "256",
        "scheme": "strang",
        "steps": DYADIC_STEPS,
        "horizon": "1.0",
    },
}


class ConfigError(Exception):
    pass


def _parse_real(token: str) -> float:
    """Accept float literals, p/q fractions, and base^exponent powers."""
    token = token.strip()
    try:
        if "^" in token:
            base, _, exponent = token.partition("^")
            return float(base) ** int(exponent)
        if "/" in token:
            return float(Fraction(token))
        return float(token)
    except (ValueError, ZeroDivisionError) as exc:
        raise ConfigError(f"cannot parse number {token!r}") from exc


def _parse_reals(text: str):
    return tuple(_parse_real(tok) for tok in text.split())


def _load_section(path, section: str) -> dict:
    values = dict(DEFAULTS[section])
    if path is None:
        return values
    parser = configparser.ConfigParser()
    read = parser.read(path)
    if not read:
        raise ConfigError(f"cannot read config file {path!r}")
    if not parser.has_section("config"):
        raise ConfigError("config file is missing its [config] section")
    version = parser.get("config", "version", fallback=None)
    if version != CONFIG_VERSION:
        raise ConfigError(
            f"config version {version!r} is not supported (expected {CONFIG_VERSION!r})"
        )
    if parser.has_section(section):
        for key, value in parser.items(section):
            if key not in values:
                raise ConfigError(f"unknown key {key!r} in [{section}]")
            values[key] = value
    return values


def _bool_cell(value: bool) -> str:
    return "true" if value else "false"


def _cell(value):
    if isinstance(value, bool):
        return _bool_cell(value)
    if isinstance(value, float):
        return repr(float(value))  # plain-float repr even for numpy scalars
    return value


def _write_artifact(out_dir, name, fieldnames, rows, fmt):
    os.makedirs(out_dir, exist_ok=True)
    path = os.path.join(out_dir, f"{name}.{fmt}")
    if fmt == "csv":
        with open(path, "w", newline="", encoding="ascii") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(fieldnames)
            for row in rows:
                writer.writerow([_cell(v) for v in row])
    else:
        payload = [dict(zip(fieldnames, row)) for row in rows]
        with open(path, "w", encoding="ascii") as fh:
            json.dump(payload, fh, sort_keys=True)
            fh.write("\n")
    return path


# --- subcommand handlers -------------------------------------------------------


def _cmd_certify_algebra(args) -> int:
    report = certify_algebra(inject_fault=args.inject_fault)
    sys.stdout.write(report.format())
    if args.out:
        rows = [(c.name, c.passed) for c in report.checks]
        _write_artifact(args.out, "certify_algebra", ("check", "passed"), rows, args.format)
    return report.exit_status


def _study_exit(results) -> int:
    verdicts = {r.verdict for r in results}
    if "fail" in verdicts:
        return EXIT_FAIL
    if verdicts - {"pass"}:
        return EXIT_INCONCLUSIVE
    return EXIT_PASS


def _cmd_convergence(args) -> int:
    cfg = _load_section(args.config, "convergence")
    seed = args.seed if args.seed is not None else int(cfg["seed"])
    steps = _parse_reals(cfg["steps"])
    horizon = _parse_real(cfg["horizon"])
    instances = int(cfg["instances"])
    if instances < 1:
        raise ConfigError("instances must be at least 1")
    scheme_override = load_scheme(args.scheme) if args.scheme else None
    if scheme_override is not None:
        schemes = [scheme_override.name]
    else:
        schemes = cfg["schemes"].split()
    results = []
    rows = []
    for scheme_name in schemes:
        expected = None if scheme_override else NOMINAL_ORDERS.get(scheme_name)
        for child in derive_seeds(seed, instances):
            study = ConvergenceStudy(
                problem=cfg["problem"],
                scheme_name=scheme_name,
                step_sizes=steps,
                horizon=horizon,
                seed=child,
                dim=int(cfg["dim"]),
                potential=cfg["potential"],
                half_width=_parse_real(cfg["half_width"]),
                points=int(cfg["points"]),
                expected_order=expected,
            )
            result = run_convergence(study, scheme=scheme_override)
            results.append(result)
            order = "" if result.fitted_order is None else repr(float(result.fitted_order))
            r2 = "" if result.fit_r2 is None else repr(float(result.fit_r2))
            rows.append((scheme_name, child, order, r2, result.verdict, result.notes))
            print(
                f"{result.verdict.upper():12s} {scheme_name:12s} seed={child} "
                f"order={order or 'n/a'} r2={r2 or 'n/a'}"
            )
    if args.out:
        _write_artifact(
            args.out,
            "convergence",
            ("scheme", "seed", "fitted_order", "fit_r2", "verdict", "notes"),
            rows,
            args.format,
        )
    return _study_exit(results)


def _cmd_verify_duhamel(args) -> int:
    cfg = _load_section(args.config, "verify-duhamel")
    seed = args.seed if args.seed is not None else int(cfg["seed"])
    quad = QuadratureSpec(
        gauss_order=int(cfg["gauss_order"]),
        panels=int(cfg["panels"]),
        target_tol=_parse_real(cfg["target_tol"]),
    )
    campaign = verify_duhamel(
        count=int(cfg["count"]),
        dim=int(cfg["dim"]),
        t_list=_parse_reals(cfg["t_values"]),
        seed=seed,
        quad=quad,
        discrepancy_tol=_parse_real(cfg["discrepancy_tol"]),
    )
    worst = max((r.report.discrepancy for r in campaign.rows), default=0.0)
    print(
        f"{'PASS' if campaign.passed else 'FAIL'} verify-duhamel: "
        f"{len(campaign.rows)} comparisons, max discrepancy {worst:.3e}"
    )
    if campaign.notes:
        print(campaign.notes)
    if args.out:
        fields = (
            "instance",
            "t",
            "measured_error_norm",
            "duhamel_norm",
            "bound_value",
            "sign_factor",
            "discrepancy",
        )
        rows = [
            (
                r.instance,
                r.t,
                r.report.measured_error_norm,
                r.report.duhamel_norm,
                r.report.bound_value,
                r.report.sign_factor,
                r.report.discrepancy,
            )
            for r in campaign.rows
        ]
        _write_artifact(args.out, "verify_duhamel", fields, rows, args.format)
    return EXIT_PASS if campaign.passed else EXIT_FAIL


def _cmd_verify_bound(args) -> int:
    cfg = _load_section(args.config, "verify-bound")
    seed = args.seed if args.seed is not None else int(cfg["seed"])
    campaign = verify_bound(
        count=int(cfg["count"]),
        dim=int(cfg["dim"]),
        t_list=_parse_reals(cfg["t_values"]),
        seed=seed,
        slack=_parse_real(cfg["slack"]),
    )
    print(
        f"{'PASS' if campaign.passed else 'FAIL'} verify-bound: "
        f"{len(campaign.rows)} comparisons, {campaign.violations} violations, "
        f"max saturation {campaign.max_saturation:.3f}"
    )
    if args.out:
        fields = ("instance", "t", "measured", "bound", "saturation", "violated")
        rows = [
            (r.instance, r.t, r.measured, r.bound, r.saturation, r.violated)
            for r in campaign.rows
        ]
        _write_artifact(args.out, "verify_bound", fields, rows, args.format)
    return EXIT_PASS if campaign.passed else EXIT_FAIL


def _cmd_schrodinger_bench(args) -> int:
    cfg = _load_section(args.config, "schrodinger-bench")
    scheme_override = load_scheme(args.scheme) if args.scheme else None
    scheme_name = scheme_override.name if scheme_override else cfg["scheme"]
    study = ConvergenceStudy(
        problem="schrodinger",
        scheme_name=scheme_name,
        step_sizes=_parse_reals(cfg["steps"]),
        horizon=_parse_real(cfg["horizon"]),
        seed=0,
        potential=cfg["potential"],
        half_width=_parse_real(cfg["half_width"]),
        points=int(cfg["points"]),
        expected_order=None if scheme_override else NOMINAL_ORDERS.get(scheme_name),
    )
    rows, result = run_schrodinger_benchmark(study, scheme=scheme_override)
    order = "n/a" if result.fitted_order is None else f"{result.fitted_order:.4f}"
    print(f"{result.verdict.upper()} schrodinger-bench: fitted order {order}")
    for row in rows:
        print(f"  h={row.h!r}  L2_error={row.l2_error!r}  norm_defect={row.norm_defect!r}")
    if args.out:
        table = [(r.h, r.l2_error, r.norm_defect) for r in rows]
        _write_artifact(
            args.out, "schrodinger_bench", ("h", "L2_error", "norm_defect"), table, args.format
        )
    if result.verdict == "pass":
        return EXIT_PASS
    if result.verdict == "fail":
        return EXIT_FAIL
    return EXIT_INCONCLUSIVE


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="trisplit",
        description="Verification toolkit for three-component exponential splittings.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, scheme_flag=False):
        p.add_argument("--config", help="INI config file (see README for the grammar)")
        p.add_argument("--seed", type=int, help="override the config seed")
        p.add_argument("--out", help="directory for CSV/JSON artifacts")
        p.add_argument(
            "--format", choices=("csv", "json"), default="csv", help="artifact format"
        )
        if scheme_flag:
            p.add_argument("--scheme", help="scheme file overriding the built-in scheme")

    p = sub.add_parser("certify-algebra", help="exact-rational identity certification")
    common(p)
    p.add_argument(
        "--inject-fault",
        action="store_true",
        help="self-test: corrupt one coefficient and demand a FAIL",
    )
    p.set_defaults(handler=_cmd_certify_algebra)

    p = sub.add_parser("convergence", help="order-measurement studies")
    common(p, scheme_flag=True)
    p.set_defaults(handler=_cmd_convergence)

    p = sub.add_parser("verify-duhamel", help="integral error representation vs measured error")
    common(p)
    p.set_defaults(handler=_cmd_verify_duhamel)

    p = sub.add_parser("verify-bound", help="cubic commutator error bound vs measured error")
    common(p)
    p.set_defaults(handler=_cmd_verify_bound)

    p = sub.add_parser("schrodinger-bench", help="split-step wave benchmark")
    common(p, scheme_flag=True)
    p.set_defaults(handler=_cmd_schrodinger_bench)

    return parser


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        return args.handler(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_INCONCLUSIVE
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INCONCLUSIVE


if __name__ == "__main__":
    sys.exit(main())
