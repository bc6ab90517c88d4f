"""Command-line entry point ``threshold-lab``.

Exit codes: 0 pass, 1 fail, 2 configuration error, 3 solver error.
"""

from __future__ import annotations

import argparse
import json
import sys
import warnings
from pathlib import Path

from .errors import ConditionsViolated, ConfigError, NoBracket, NoResonance, ThresholdLabError
from .harness import Experiment, to_jsonable, sweep, verify
from .potential import load_json, load_potential, load_scaling
from .quasimode import build_quasimode
from .resonance import DEFAULT_TOL, detect_resonance, tune_to_resonance
from .spectrum import ScaledProblem, find_negative_eigenvalues
from .threshold import predict

EXIT_PASS, EXIT_FAIL, EXIT_CONFIG, EXIT_SOLVER = 0, 1, 2, 3


def _emit(obj) -> None:
    print(json.dumps(to_jsonable(obj), indent=2, sort_keys=True, allow_nan=False))


def _config(args) -> dict:
    return load_json(args.config) if args.config else {}


def _config_part(args, key: str):
    """Inline object or relative path stored under ``key`` in the config."""
    val = _config(args).get(key)
    if isinstance(val, str):
        val = load_json(Path(args.config).parent / val)
    return val


def _potential(args, flag: str, key: str):
    path = getattr(args, flag, None)
    if path:
        return load_potential(path)
    part = _config_part(args, key)
    if part is None:
        raise ConfigError(f"--{flag} or --config with {key!r} is required")
    return load_potential(part)


def _scaling(args):
    if args.scaling:
        return load_scaling(args.scaling)
    part = _config_part(args, "scaling")
    if part is None:
        raise ConfigError("--scaling or --config with 'scaling' is required")
    eps = _config(args).get("epsilon")
    return load_scaling(dict(part, epsilon=eps) if eps is not None else part)


def _lambda(args) -> float:
    if args.lam is not None:
        return args.lam
    cfg = _config(args)
    if "lambda" in cfg:
        return float(cfg["lambda"])
    raise ConfigError("--lambda is required")


def _case(args, default: str = "auto") -> str:
    if getattr(args, "case", None):
        return args.case
    return str(_config(args).get("case", default)).lower()


def cmd_resonance(args) -> int:
    U = _potential(args, "potential", "U")
    try:
        h = detect_resonance(U, args.tol or DEFAULT_TOL)
    except NoResonance as exc:
        _emit({"resonance": False, "mismatch": exc.mismatch})
        return EXIT_FAIL
    _emit(dict(h.to_dict(), resonance=True))
    return EXIT_PASS


def cmd_tune(args) -> int:
    U = _potential(args, "potential", "U")
    try:
        gamma = tune_to_resonance(U, args.lo, args.hi, args.tol or 1e-12)
    except NoBracket as exc:
        _emit({"error": str(exc)})
        return EXIT_FAIL
    _emit({"gamma": gamma})
    return EXIT_PASS


def cmd_spectrum(args) -> int:
    P = ScaledProblem(_potential(args, "U", "U"), _potential(args, "V", "V"), _scaling(args), _lambda(args))
    res = find_negative_eigenvalues(P.Q, B=P.B)
    _emit(dict(res.to_dict(), **{"lambda": P.lam, "alpha": P.alpha}))
    return EXIT_PASS


def cmd_predict(args) -> int:
    U, V, F = _potential(args, "U", "U"), _potential(args, "V", "V"), _scaling(args)
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        pred = predict(U, V, F, _case(args), strict=False)
    out = pred.to_dict()
    out["warnings"] = sorted(set(out["warnings"]) | {str(w.message) for w in caught})
    _emit(out)
    return EXIT_PASS if pred.ok or args.force else EXIT_FAIL


def cmd_quasimode(args) -> int:
    U, V, F = _potential(args, "U", "U"), _potential(args, "V", "V"), _scaling(args)
    case = _case(args, "")
    if case not in ("t2", "t3", "t4"):
        raise ConfigError("--case must be one of t2, t3, t4")
    try:
        qm = build_quasimode(case, U, V, F, _lambda(args))
    except ConditionsViolated as exc:
        _emit({"error": str(exc), "k_lambda": getattr(exc.prediction, "k_lambda", None)})
        return EXIT_FAIL
    _emit(qm.to_dict())
    return EXIT_PASS


def _experiment(args) -> Experiment:
    if not args.config:
        raise ConfigError("--config is required")
    over = {"force": True if args.force else None, "k_tol": args.tol}
    if args.out:
        over["output"] = args.out
        over["output_format"] = "csv" if args.out.endswith(".csv") else "json"
    return Experiment.from_config(args.config, **over)


def _report(E: Experiment, report) -> None:
    if E.output:
        report.write(E.output, E.output_format)
    sys.stdout.write(report.to_json())


def cmd_sweep(args) -> int:
    E = _experiment(args)
    report = sweep(E)
    _report(E, report)
    return EXIT_PASS if report.passed else EXIT_FAIL


def cmd_verify(args) -> int:
    E = _experiment(args)
    status, report = verify(E)
    _report(E, report)
    return status


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="threshold-lab", description="Coupling constant thresholds of 1D Schrodinger operators.")
    sub = p.add_subparsers(dest="command", required=True)

    def add(name, fn, help_):
        sp = sub.add_parser(name, help=help_)
        sp.add_argument("--config", help="experiment JSON")
        sp.set_defaults(func=fn)
        return sp

    sp = add("resonance", cmd_resonance, "detect a zero-energy resonance of U")
    sp.add_argument("--potential")
    sp.add_argument("--tol", type=float)

    sp = add("tune", cmd_tune, "find gamma with a resonance of gamma*U")
    sp.add_argument("--potential")
    sp.add_argument("--lo", type=float, required=True)
    sp.add_argument("--hi", type=float, required=True)
    sp.add_argument("--tol", type=float)

    for name, fn, help_ in (("spectrum", cmd_spectrum, "negative eigenvalues of H_lambda"),
                            ("predict", cmd_predict, "threshold constant and conditions"),
                            ("quasimode", cmd_quasimode, "build a quasimode and its residual")):
        sp = add(name, fn, help_)
        sp.add_argument("--U")
        sp.add_argument("--V")
        sp.add_argument("--scaling")
        if name != "predict":
            sp.add_argument("--lambda", dest="lam", type=float)
        if name != "spectrum":
            sp.add_argument("--case", choices=("auto", "t1", "t2", "t3", "t4") if name == "predict" else ("t2", "t3", "t4"))
        if name == "predict":
            sp.add_argument("--force", action="store_true", help="exit 0 even when conditions fail")

    for name, fn, help_ in (("sweep", cmd_sweep, "lambda sweep against the prediction"),
                            ("verify", cmd_verify, "sweep plus quasimode certificates")):
        sp = add(name, fn, help_)
        sp.add_argument("--out")
        sp.add_argument("--force", action="store_true")
        sp.add_argument("--tol", type=float, help="relative tolerance on the fitted constant")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (ThresholdLabError, ValueError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_SOLVER


if __name__ == "__main__":
    sys.exit(main())
