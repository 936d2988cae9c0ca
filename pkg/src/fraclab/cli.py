"""Command-line front end: ``fraclab <command> [options]``.

Every command accepts ``--config file.json`` whose keys are the long option
names with dashes replaced by underscores; explicit flags override the file
and FRACLAB_SEED overrides the file's seed. Reports are JSON with floats
rounded to 12 significant digits and embed the resolved configuration.

Exit codes: 0 success, 2 invalid input, 3 theorem hypothesis not met,
4 divergence detected where a finite value was expected.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from typing import Callable

import numpy as np

from .bound import HypothesisReport, verify_bound
from .core import Ball, Params, SamplePlan, clean
from .hclass import WeightPair, h_constant, lemma_2_1_experiment, lemma_2_2_experiment
from .lipschitz import lip_seminorm
from .operator import TabulatedFunction, sample_kernel_bound
from .region import TrivialRegionError, classify_region, construct_example, region_plot_data
from .weights import Constant, weight_from_dict

EXIT_OK, EXIT_INVALID, EXIT_HYPOTHESIS, EXIT_DIVERGENT = 0, 2, 3, 4

DEFAULTS = {
    "n": 1, "m": 1, "gamma": None, "delta": None, "p": None, "gamma_split": None,
    "seed": 0, "n_radii": 64, "n_centers": 32, "tol": 1e-5, "workers": 1,
    "out": None, "csv": None, "pair": None, "stability": False, "expect_finite": False,
    "emit_h_report": False, "function": "linear", "weight": "constant:1",
    "resolution": 64, "polygon": None, "samples": 10_000, "center": None, "radius": 1.0,
    "batteries": 3, "necessity_batteries": 20, "tols": "1e-5,1e-6", "related": False, "case": None,
}


class InputError(ValueError):
    pass


def _floats(text, name: str) -> tuple:
    if isinstance(text, (list, tuple)):
        items = list(text)
    else:
        items = [t for t in str(text).split(",") if t.strip()]
    try:
        return tuple(math.inf if str(t).strip().lower() in ("inf", "infinity") else float(t) for t in items)
    except ValueError as exc:
        raise InputError(f"{name}: cannot parse {text!r} as a comma-separated list of numbers") from exc


def _add_params(sp: argparse.ArgumentParser, with_delta: bool = True) -> None:
    sp.add_argument("--n", type=int, help="dimension")
    sp.add_argument("--m", type=int, help="number of functions")
    sp.add_argument("--gamma", type=float)
    if with_delta:
        sp.add_argument("--delta", type=float)
    sp.add_argument("--p", help="comma-separated exponents p_1,...,p_m ('inf' allowed)")
    sp.add_argument("--gamma-split", help="comma-separated gamma_i summing to gamma")


def _add_plan(sp: argparse.ArgumentParser) -> None:
    sp.add_argument("--seed", type=int)
    sp.add_argument("--n-radii", type=int)
    sp.add_argument("--n-centers", type=int)
    sp.add_argument("--tol", type=float)


def _add_common(sp: argparse.ArgumentParser) -> None:
    sp.add_argument("--config", help="JSON file with option values")
    sp.add_argument("--out", help="write the JSON report here instead of stdout")
    sp.add_argument("--csv", help="also write the per-ball table as CSV")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="fraclab", description="Weighted estimates for multilinear fractional integrals.")
    sub = ap.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("classify", help="locate (p, gamma, delta) in the triviality / example region")
    _add_params(sp)
    sp.add_argument("--related", action="store_true", default=None, help="treat w as the product of the v_i")
    _add_common(sp)

    sp = sub.add_parser("construct", help="build the example weight pair for the parameters")
    _add_params(sp)
    _add_plan(sp)
    sp.add_argument("--case", help="requested sub-band label (the applicable one is used)")
    sp.add_argument("--emit-h-report", action="store_true", default=None)
    sp.add_argument("--workers", type=int)
    _add_common(sp)

    sp = sub.add_parser("check-h", help="estimate the class constant of a weight pair over a ball plan")
    _add_params(sp)
    _add_plan(sp)
    sp.add_argument("--pair", help="weight pair JSON file (default: the constructed example)")
    sp.add_argument("--stability", action="store_true", default=None)
    sp.add_argument("--expect-finite", action="store_true", default=None)
    sp.add_argument("--workers", type=int)
    _add_common(sp)

    sp = sub.add_parser("verify-bound", help="forward and necessity checks of the boundedness inequality")
    _add_params(sp)
    _add_plan(sp)
    sp.add_argument("--pair", help="weight pair JSON file (default: the constructed example)")
    sp.add_argument("--batteries", type=int)
    sp.add_argument("--necessity-batteries", type=int)
    sp.add_argument("--tols", help="comma-separated quadrature tolerances for the forward check")
    sp.add_argument("--expect-finite", action="store_true", default=None)
    _add_common(sp)

    sp = sub.add_parser("estimate-lip", help="weighted Lipschitz seminorm of a function over a ball plan")
    sp.add_argument("--n", type=int)
    sp.add_argument("--delta", type=float)
    sp.add_argument("--function", help="linear | abs-power:<a> | indicator | bump:<c>:<r>:<h> | csv:<path>")
    sp.add_argument("--weight", help="constant:<c> | power:<a> | JSON weight object")
    sp.add_argument("--stability", action="store_true", default=None)
    sp.add_argument("--expect-finite", action="store_true", default=None)
    _add_plan(sp)
    _add_common(sp)

    sp = sub.add_parser("region-plot", help="grid verdicts and band polygon on the (1/p, delta) plane")
    sp.add_argument("--n", type=int)
    sp.add_argument("--m", type=int)
    sp.add_argument("--gamma", type=float)
    sp.add_argument("--resolution", type=int)
    sp.add_argument("--polygon", help="write the polygon JSON here")
    _add_common(sp)

    for name, helptext in (("lemma21", "compare the full functional with the global condition"),
                           ("lemma22", "check that the local condition gives the global one below tau")):
        sp = sub.add_parser(name, help=helptext)
        _add_params(sp)
        _add_plan(sp)
        sp.add_argument("--pair", help="weight pair JSON file (default: the constructed example)")
        sp.add_argument("--workers", type=int)
        _add_common(sp)

    sp = sub.add_parser("kernel-bound", help="sampled lower bound of the kernel-difference ratio")
    _add_params(sp, with_delta=False)
    sp.add_argument("--samples", type=int)
    sp.add_argument("--seed", type=int)
    sp.add_argument("--center", help="comma-separated ball center (default origin)")
    sp.add_argument("--radius", type=float)
    _add_common(sp)
    return ap


def resolve_config(args: argparse.Namespace, environ=None) -> dict:
    """Defaults, then the config file, then FRACLAB_SEED, then explicit flags."""
    environ = os.environ if environ is None else environ
    cfg = dict(DEFAULTS)
    if getattr(args, "config", None):
        try:
            with open(args.config) as fh:
                data = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise InputError(f"cannot read config {args.config}: {exc}") from exc
        if not isinstance(data, dict):
            raise InputError("config file must hold a JSON object")
        for k, v in data.items():
            key = k.replace("-", "_")
            if key not in DEFAULTS:
                raise InputError(f"unknown config key {k!r}")
            cfg[key] = v
    if environ.get("FRACLAB_SEED"):
        try:
            cfg["seed"] = int(environ["FRACLAB_SEED"])
        except ValueError as exc:
            raise InputError("FRACLAB_SEED must be an integer") from exc
    for k, v in vars(args).items():
        if k in ("config", "command") or v is None:
            continue
        cfg[k] = v
    cfg["command"] = args.command
    return cfg


def params_from(cfg: dict, delta: float | None = None) -> Params:
    if cfg.get("gamma") is None:
        raise InputError("--gamma is required")
    if cfg.get("p") is None:
        raise InputError("--p is required")
    d = cfg.get("delta") if delta is None else delta
    if d is None:
        raise InputError("--delta is required")
    split = cfg.get("gamma_split")
    try:
        return Params(int(cfg["n"]), int(cfg["m"]), float(cfg["gamma"]), float(d), _floats(cfg["p"], "p"),
                      None if split is None else _floats(split, "gamma_split"))
    except (TypeError, ValueError) as exc:
        raise InputError(str(exc)) from exc


def plan_from(cfg: dict, n: int) -> SamplePlan:
    return SamplePlan.standard(n, seed=int(cfg["seed"]), n_radii=int(cfg["n_radii"]),
                               n_centers=int(cfg["n_centers"]))


def pair_from(cfg: dict, params: Params) -> WeightPair:
    src = cfg.get("pair")
    if src is None:
        return construct_example(params)
    try:
        if isinstance(src, dict):
            pair = WeightPair.from_dict(src)
        else:
            with open(src) as fh:
                pair = WeightPair.from_dict(json.load(fh))
        pair.check(params)
    except (OSError, KeyError, TypeError, ValueError) as exc:
        raise InputError(f"invalid weight pair: {exc}") from exc
    return pair


def function_from(spec: str, n: int) -> Callable:
    """Parse the --function grammar into a vectorised callable on (N, n) arrays."""
    kind, _, rest = str(spec).partition(":")
    try:
        if kind == "linear":
            return lambda x: np.asarray(x)[:, 0]
        if kind == "abs-power":
            a = float(rest)
            return lambda x: np.power(np.linalg.norm(x, axis=1), a)
        if kind == "indicator":
            return lambda x: (np.asarray(x)[:, 0] >= 0).astype(float)
        if kind == "bump":
            from .operator import Bump
            c, r, h = rest.split(":")
            b = Bump(_floats(c, "bump center"), float(r), float(h))
            return lambda x: b(x)
        if kind == "csv":
            return TabulatedFunction.from_csv(rest)
    except (ValueError, OSError) as exc:
        raise InputError(f"invalid --function {spec!r}: {exc}") from exc
    raise InputError(f"unknown --function {spec!r}")


def weight_from(spec) -> object:
    if isinstance(spec, dict):
        return weight_from_dict(spec)
    s = str(spec).strip()
    try:
        if s.startswith("{"):
            return weight_from_dict(json.loads(s))
        kind, _, rest = s.partition(":")
        if kind == "constant":
            return Constant(float(rest or 1.0))
        if kind == "power":
            return weight_from_dict({"variant": "Power", "alpha": float(rest)})
    except (ValueError, KeyError, json.JSONDecodeError) as exc:
        raise InputError(f"invalid --weight {spec!r}: {exc}") from exc
    raise InputError(f"unknown --weight {spec!r}")


def _emit(report: dict, cfg: dict, stream) -> None:
    report = dict(report)
    report["config"] = {k: v for k, v in cfg.items() if k != "pair" or not isinstance(v, dict)}
    text = json.dumps(clean(report), sort_keys=True, indent=2) + "\n"
    if cfg.get("out"):
        with open(cfg["out"], "w") as fh:
            fh.write(text)
    else:
        stream.write(text)


def _write_csv(cfg: dict, text: str) -> None:
    if cfg.get("csv"):
        with open(cfg["csv"], "w") as fh:
            fh.write(text)


# ---------------------------------------------------------------------------
# commands; each returns (report, exit code)


def cmd_classify(cfg: dict):
    params = params_from(cfg)
    v = classify_region(params, related=bool(cfg.get("related")))
    return {"verdict": v.to_dict(), "params": params.to_dict()}, EXIT_OK


def cmd_construct(cfg: dict):
    params = params_from(cfg)
    try:
        pair = construct_example(params, cfg.get("case"))
    except TrivialRegionError as exc:
        return {"error": str(exc), "verdict": exc.verdict.to_dict(), "params": params.to_dict()}, EXIT_HYPOTHESIS
    rep = {"params": params.to_dict(), "pair": pair.to_dict(), "verdict": classify_region(params).to_dict()}
    code = EXIT_OK
    if cfg.get("emit_h_report"):
        h = h_constant(pair, params, plan_from(cfg, params.n), float(cfg["tol"]), workers=int(cfg["workers"]))
        rep["h_report"] = h.to_dict()
        _write_csv(cfg, h.to_csv())
        if h.diverged:
            code = EXIT_DIVERGENT
    return rep, code


def cmd_check_h(cfg: dict):
    params = params_from(cfg)
    try:
        pair = pair_from(cfg, params)
    except TrivialRegionError as exc:
        return {"error": str(exc), "verdict": exc.verdict.to_dict()}, EXIT_HYPOTHESIS
    h = h_constant(pair, params, plan_from(cfg, params.n), float(cfg["tol"]), workers=int(cfg["workers"]),
                   stability=bool(cfg.get("stability")))
    _write_csv(cfg, h.to_csv())
    code = EXIT_DIVERGENT if cfg.get("expect_finite") and h.diverged else EXIT_OK
    return {"h_report": h.to_dict()}, code


def cmd_verify_bound(cfg: dict):
    params = params_from(cfg)
    tols = _floats(cfg["tols"], "tols")
    if not params.p > params.n / params.gamma:
        hyp = HypothesisReport(params.p, params.n / params.gamma, False)
        return {"status": "hypotheses not met", "message": "skipped: " + hyp.message,
                "hypotheses": hyp.to_dict(), "params": params.to_dict()}, EXIT_HYPOTHESIS
    try:
        pair = pair_from(cfg, params)
    except TrivialRegionError as exc:
        return {"error": str(exc), "verdict": exc.verdict.to_dict()}, EXIT_HYPOTHESIS
    rep = verify_bound(pair, params, plan_from(cfg, params.n), n_batteries=int(cfg["batteries"]),
                       seed=int(cfg["seed"]), tols=tols, necessity_batteries=int(cfg["necessity_batteries"]))
    if rep["status"] == "hypotheses not met":
        rep["message"] = "skipped: " + rep["hypotheses"]["message"]
        return rep, EXIT_HYPOTHESIS
    code = EXIT_DIVERGENT if cfg.get("expect_finite") and rep["status"] != "ok" else EXIT_OK
    return rep, code


def cmd_estimate_lip(cfg: dict):
    n = int(cfg["n"])
    if cfg.get("delta") is None:
        raise InputError("--delta is required")
    f = function_from(cfg["function"], n)
    w = weight_from(cfg["weight"])
    rep = lip_seminorm(f, w, float(cfg["delta"]), plan_from(cfg, n), float(cfg["tol"]),
                       stability=bool(cfg.get("stability")))
    _write_csv(cfg, rep.to_csv())
    code = EXIT_DIVERGENT if cfg.get("expect_finite") and not math.isfinite(rep.sup) else EXIT_OK
    return {"lip_report": rep.to_dict()}, code


def cmd_region_plot(cfg: dict):
    if cfg.get("gamma") is None:
        raise InputError("--gamma is required")
    try:
        rp = region_plot_data(int(cfg["n"]), int(cfg["m"]), float(cfg["gamma"]), int(cfg["resolution"]))
    except ValueError as exc:
        raise InputError(str(exc)) from exc
    _write_csv(cfg, rp.to_csv())
    if cfg.get("polygon"):
        with open(cfg["polygon"], "w") as fh:
            fh.write(rp.polygon_json() + "\n")
    counts: dict = {}
    for _, _, s, c in rp.cells:
        key = s if c is None else f"{s}:{c}"
        counts[key] = counts.get(key, 0) + 1
    return {"polygon": rp.polygon, "cell_counts": counts, "cells": len(rp.cells)}, EXIT_OK


def cmd_lemma21(cfg: dict):
    params = params_from(cfg)
    pair = pair_from(cfg, params)
    rep = lemma_2_1_experiment(pair, params, plan_from(cfg, params.n), float(cfg["tol"]), workers=int(cfg["workers"]))
    return rep, (EXIT_HYPOTHESIS if rep["status"] == "hypotheses not met" else EXIT_OK)


def cmd_lemma22(cfg: dict):
    params = params_from(cfg)
    pair = pair_from(cfg, params)
    try:
        rep = lemma_2_2_experiment(pair, params, plan_from(cfg, params.n), float(cfg["tol"]),
                                   workers=int(cfg["workers"]))
    except ValueError as exc:
        return {"error": str(exc), "params": params.to_dict()}, EXIT_HYPOTHESIS
    return rep, EXIT_OK


def cmd_kernel_bound(cfg: dict):
    params = params_from(cfg, delta=0.0)
    center = _floats(cfg["center"], "center") if cfg.get("center") is not None else (0.0,) * params.n
    if len(center) != params.n:
        raise InputError(f"--center needs {params.n} coordinates")
    try:
        ball = Ball(center, float(cfg["radius"]))
    except ValueError as exc:
        raise InputError(str(exc)) from exc
    rep = sample_kernel_bound(params, ball, int(cfg["samples"]), int(cfg["seed"]))
    rep["params"] = params.to_dict()
    rep["ball"] = ball.to_dict()
    return rep, EXIT_OK


COMMANDS = {
    "classify": cmd_classify, "construct": cmd_construct, "check-h": cmd_check_h,
    "verify-bound": cmd_verify_bound, "estimate-lip": cmd_estimate_lip, "region-plot": cmd_region_plot,
    "lemma21": cmd_lemma21, "lemma22": cmd_lemma22, "kernel-bound": cmd_kernel_bound,
}


def main(argv=None, stdout=None, stderr=None, environ=None) -> int:
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        cfg = resolve_config(args, environ)
        report, code = COMMANDS[args.command](cfg)
    except InputError as exc:
        stderr.write(f"fraclab: error: {exc}\n")
        return EXIT_INVALID
    _emit(report, cfg, stdout)
    return code


if __name__ == "__main__":
    sys.exit(main())
