"""``cpskit`` command-line entry point.

Every subcommand writes plain CSV or JSON. CSV output starts with ``#``
lines echoing the version and the full resolved configuration.

Settings come from, in increasing precedence: built-in defaults, a flat
``key = value`` file given with ``--config``, and command-line flags.

Exit codes: 0 success, 1 a validation check failed, 2 bad input.
"""
from __future__ import annotations

import argparse
import json
import math
import sys

import numpy as np

from . import __version__
from .basis import make_basis
from .evolution import (
    DIRECT,
    FOURIER,
    GAUSS_HERMITE,
    HYBRID,
    MONTE_CARLO,
    PhaseNoiseModel,
    cat_fringe,
    run_anharmonic,
)
from .prep import boson_sampling_correlation, random_unitary, unitarity_residual, unitary_from_json
from .validation import SUITES, run_suites

EXIT_OK = 0
EXIT_FAILED = 1
EXIT_BAD_INPUT = 2


class InputError(Exception):
    """Bad user input; reported on stderr with exit code 2."""


def _int_list(text: str) -> list[int]:
    try:
        return [int(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def _float_list(text: str) -> list[float]:
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _complex(text: str) -> complex:
    try:
        return complex(text.replace(" ", ""))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a number like 4 or 3+1j, got {text!r}") from None


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="cpskit", description="Coherent-phase-state experiments and self-checks.")
    p.add_argument("--version", action="version", version=f"cpskit {__version__}")
    p.add_argument("--config", help="flat key = value file; flags override it")
    sub = p.add_subparsers(dest="command", required=True)

    a = sub.add_parser("anharmonic", help="mean amplitude under omega n + kappa n^2/2")
    a.add_argument("--alpha", type=_complex, default=4.0)
    a.add_argument("--d", type=int, default=32)
    a.add_argument("--omega", type=float, default=0.5)
    a.add_argument("--kappa", type=float, default=1.0)
    a.add_argument("--steps", type=int, default=500)
    a.add_argument("--t-max", type=float, default=4 * math.pi)
    a.add_argument("--picture", choices=[DIRECT, HYBRID], default=DIRECT)
    a.add_argument("--summary", help="write the JSON summary here instead of stderr")
    a.add_argument("--check", type=float, help="exit 1 if the max deviation exceeds this")
    a.add_argument("-o", "--output", help="CSV path (default stdout)")

    c = sub.add_parser("cat-fringes", help="momentum fringes of the anharmonic cat with phase noise")
    c.add_argument("--alpha", type=float, default=5.0)
    c.add_argument("--sigma", type=float, default=0.0)
    c.add_argument("--points", type=int, default=500)
    c.add_argument("--p-min", type=float, default=-4.0)
    c.add_argument("--p-max", type=float, default=4.0)
    c.add_argument("--samples", type=int, default=100_000)
    c.add_argument("--seed", type=int, default=0)
    c.add_argument("--method", choices=[MONTE_CARLO, GAUSS_HERMITE, FOURIER], default=MONTE_CARLO)
    c.add_argument("--d", type=int, help="basis size (default: smallest even d >= 3 alpha^2)")
    c.add_argument("--kappa", type=float, default=1.0)
    c.add_argument("-o", "--output", help="CSV path (default stdout)")

    b = sub.add_parser("boson-sampling", help="output coincidence rate for single-photon inputs")
    src = b.add_mutually_exclusive_group(required=False)
    src.add_argument("--unitary", help='JSON file {"m": M, "re": [[...]], "im": [[...]]}')
    src.add_argument("--haar", type=int, help="use a Haar-random M x M unitary")
    b.add_argument("--unitary-seed", type=int, default=0)
    b.add_argument("--inputs", type=_int_list, required=False)
    b.add_argument("--outputs", type=_int_list, required=False)
    b.add_argument("--mode", choices=["exact", "mc"], default="exact")
    b.add_argument("--samples", type=int, default=100_000)
    b.add_argument("--seed", type=int, default=0)
    b.add_argument("-o", "--output", help="JSON path (default stdout)")

    i = sub.add_parser("basis-info", help="Gram-matrix magnitudes vs phase separation")
    i.add_argument("--d", type=int, default=12)
    i.add_argument("--n0", type=int, default=0)
    i.add_argument("--alpha-sq", type=_float_list, default=[3.0, 4.0, 5.0, 6.0, 7.0, 8.0])
    i.add_argument("-o", "--output", help="CSV path (default stdout)")

    v = sub.add_parser("validate", help="oracle-equivalence, round-trip and conservation checks")
    v.add_argument("--suite", action="append", choices=list(SUITES) + ["all"])
    v.add_argument("-o", "--output", help="JSON report path (default stdout)")
    return p


def read_config(path: str) -> dict[str, str]:
    out = {}
    try:
        with open(path, encoding="utf-8") as fh:
            lines = fh.read().splitlines()
    except OSError as exc:
        raise InputError(f"cannot read config {path}: {exc}") from None
    for num, raw in enumerate(lines, 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise InputError(f"{path}:{num}: expected key = value")
        key, val = (s.strip() for s in line.split("=", 1))
        out[key.replace("-", "_")] = val
    return out


def _subparser(parser: argparse.ArgumentParser, name: str) -> argparse.ArgumentParser:
    for action in parser._actions:
        if isinstance(action, argparse._SubParsersAction):
            return action.choices[name]
    raise KeyError(name)


def parse_args(argv) -> argparse.Namespace:
    parser = build_parser()
    args = parser.parse_args(argv)
    if not args.config:
        return args
    config = read_config(args.config)
    sp = _subparser(parser, args.command)
    known = {a.dest: a for a in sp._actions if a.dest not in ("help",)}
    defaults = {}
    for key, val in config.items():
        if key not in known:
            raise InputError(f"unknown config key {key!r} for {args.command}")
        act = known[key]
        try:
            defaults[key] = act.type(val) if act.type else val
        except (argparse.ArgumentTypeError, ValueError) as exc:
            raise InputError(f"config key {key}: {exc}") from None
        if act.choices is not None and defaults[key] not in act.choices:
            raise InputError(f"config key {key}: {val!r} is not one of {list(act.choices)}")
    sp.set_defaults(**defaults)
    return parser.parse_args(argv)


def _fmt(v) -> str:
    if isinstance(v, complex):
        return repr(v)
    if isinstance(v, list):
        return ",".join(_fmt(x) for x in v)
    return repr(v) if isinstance(v, float) else str(v)


def metadata_header(args: argparse.Namespace, extra: dict | None = None) -> str:
    lines = [f"# cpskit {__version__}", f"# command: {args.command}"]
    for key in sorted(vars(args)):
        if key in ("command", "output", "summary", "config"):
            continue
        lines.append(f"# {key}: {_fmt(getattr(args, key))}")
    for key, val in (extra or {}).items():
        lines.append(f"# result.{key}: {_fmt(val)}")
    return "\n".join(lines) + "\n"


def _emit(text: str, path: str | None) -> None:
    if path:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def cmd_anharmonic(args) -> int:
    if args.d < 2:
        raise InputError("d must be >= 2")
    if args.steps < 1 or args.t_max < 0:
        raise InputError("steps must be >= 1 and t-max >= 0")
    if args.alpha == 0:
        raise InputError("alpha must be non-zero")
    traj, analytic = run_anharmonic(args.alpha, args.d, args.omega, args.kappa, args.steps, args.t_max, args.picture)
    dev = np.abs(traj.mean_amplitude() - analytic)
    summary = {
        "max_deviation": float(dev.max()),
        "t_at_max_deviation": float(traj.times[int(dev.argmax())]),
        "max_norm_drift": float(traj.norm_drift().max()),
        "picture": args.picture,
        "d": args.d,
    }
    _emit(metadata_header(args, summary) + traj.to_csv(analytic), args.output)
    text = json.dumps(summary, sort_keys=True) + "\n"
    if args.summary:
        _emit(text, args.summary)
    else:
        sys.stderr.write(text)
    if args.check is not None and summary["max_deviation"] > args.check:
        sys.stderr.write(f"max deviation {summary['max_deviation']:.3e} exceeds {args.check:.3e}\n")
        return EXIT_FAILED
    return EXIT_OK


def cmd_cat_fringes(args) -> int:
    if args.sigma < 0:
        raise InputError("sigma must be >= 0")
    if args.points < 2 or not args.p_max > args.p_min:
        raise InputError("need points >= 2 and p-max > p-min")
    if args.alpha <= 0:
        raise InputError("alpha must be positive")
    if args.d is None:
        args.d = math.ceil(3 * args.alpha**2)
        args.d += args.d % 2
    if args.d % 2:
        raise InputError("d must be even")
    grid = np.linspace(args.p_min, args.p_max, args.points)
    noise = PhaseNoiseModel(args.sigma, args.samples, args.seed, args.method)
    res = cat_fringe(args.alpha, noise, grid, args.d, args.kappa)
    extra = {"integral": res.integral(), "contrast": res.contrast()}
    if res.analytic is not None:
        extra["max_abs_error_vs_analytic"] = float(np.max(np.abs(res.density - res.analytic)))
    _emit(metadata_header(args, extra) + res.to_csv(), args.output)
    return EXIT_OK


def cmd_boson_sampling(args) -> int:
    if args.unitary:
        try:
            with open(args.unitary, encoding="utf-8") as fh:
                U = unitary_from_json(fh.read())
        except OSError as exc:
            raise InputError(f"cannot read unitary: {exc}") from None
    elif args.haar:
        U = random_unitary(args.haar, args.unitary_seed)
    else:
        raise InputError("give --unitary FILE or --haar M")
    res_norm = unitarity_residual(U)
    if res_norm > 1e-10:
        raise InputError(f"network matrix is not unitary: max |U U^dag - I| = {res_norm:.3e}")
    if not args.inputs or not args.outputs:
        raise InputError("give --inputs and --outputs")
    result = boson_sampling_correlation(
        U, args.inputs, args.outputs, "exact" if args.mode == "exact" else "mc", args.samples, args.seed
    )
    doc = result.to_dict()
    doc["photons"] = len(args.inputs)
    doc["version"] = f"cpskit {__version__}"
    _emit(json.dumps(doc, sort_keys=True) + "\n", args.output)
    return EXIT_OK


def cmd_basis_info(args) -> int:
    if args.d < 1 or args.n0 < 0:
        raise InputError("need d >= 1 and n0 >= 0")
    if any(x <= 0 for x in args.alpha_sq):
        raise InputError("alpha-sq values must be positive")
    rows = ["alpha_sq,dq,phase_diff,gram_abs,coherent_overlap"]
    for x in args.alpha_sq:
        basis = make_basis(args.d, args.n0, math.sqrt(x))
        amps = basis.amplitudes
        for dq in range(args.d // 2 + 1):
            ref = math.exp(-abs(amps[dq] - amps[0]) ** 2 / 2)
            vals = (x, dq * basis.phi, abs(basis.gram[0, dq]), ref)
            rows.append(f"{float(x)!r},{dq}," + ",".join(repr(float(v)) for v in vals[1:]))
    _emit(metadata_header(args) + "\n".join(rows) + "\n", args.output)
    return EXIT_OK


def cmd_validate(args) -> int:
    names = args.suite or ["all"]
    if "all" in names:
        names = list(SUITES)
    checks = run_suites(dict.fromkeys(names))
    ok = all(c.passed for c in checks)
    report = {
        "version": f"cpskit {__version__}",
        "suites": list(dict.fromkeys(names)),
        "passed": ok,
        "checks": [c.to_dict() for c in checks],
    }
    _emit(json.dumps(report, indent=2) + "\n", args.output)
    return EXIT_OK if ok else EXIT_FAILED


COMMANDS = {
    "anharmonic": cmd_anharmonic,
    "cat-fringes": cmd_cat_fringes,
    "boson-sampling": cmd_boson_sampling,
    "basis-info": cmd_basis_info,
    "validate": cmd_validate,
}


def main(argv=None) -> int:
    try:
        args = parse_args(argv)
        return COMMANDS[args.command](args)
    except InputError as exc:
        sys.stderr.write(f"cpskit: error: {exc}\n")
        return EXIT_BAD_INPUT
    except ValueError as exc:
        sys.stderr.write(f"cpskit: error: {exc}\n")
        return EXIT_BAD_INPUT


if __name__ == "__main__":
    sys.exit(main())
