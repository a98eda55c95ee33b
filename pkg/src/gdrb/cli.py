"""Command-line front end.

Every subcommand reads one flat JSON config (validated before any work is
done; unknown keys are rejected), lets a few flags override it, and writes
JSON or CSV to ``--out`` or stdout.  Exit codes: 0 success, 1 invalid
input, 2 numerical failure, 3 I/O failure.
"""
from __future__ import annotations

import argparse
import json
import os
import sys
import traceback

import jsonschema
import numpy as np

from . import __version__
from . import analysis, decomp, rbsim
from . import verify as verify_mod
from .chanalg import SuperOp, ket0_state
from .errors import NumericalError, ValidationError

GROUPS = ["t_pauli", "clifford", "pauli"]

NOISE_SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "required": ["model"],
    "properties": {
        "model": {"enum": ["random_unitary", "depol_z", "gate_independent", "ideal"]},
        "r": {"type": "number", "minimum": 0, "maximum": 2 / 3},
        "nu": {"type": "number", "exclusiveMinimum": 0, "maximum": 1},
        "theta": {"type": "number", "exclusiveMinimum": 0, "exclusiveMaximum": np.pi / 2},
        "p": {"type": "number", "minimum": -1 / 3, "maximum": 1},
        "partition": {"type": "array", "items": {"type": "integer", "minimum": 0}},
        "seed": {"type": "integer", "minimum": 0},
    },
    "allOf": [
        {"if": {"properties": {"model": {"const": "random_unitary"}}}, "then": {"required": ["r"]}},
        {"if": {"properties": {"model": {"const": "depol_z"}}}, "then": {"required": ["nu", "theta"]}},
    ],
}

_VECTOR = {"type": "array", "items": {"type": "number"}, "minItems": 4, "maxItems": 4}
_POS_INTS = {"type": "array", "items": {"type": "integer", "minimum": 1}, "minItems": 1}

CONFIG_SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "properties": {
        "group": {"enum": GROUPS},
        "noise": NOISE_SCHEMA,
        "m_list": _POS_INTS,
        "n_seq": {"type": "integer", "minimum": 2},
        "seed": {"type": "integer", "minimum": 0},
        "rho": _VECTOR,
        "Q": _VECTOR,
        "fit_model": {"enum": ["fixed-spam", "free"]},
        "min_m": {"type": "integer", "minimum": 0},
        "bruteforce_m": _POS_INTS,
        "K": {"type": "integer", "minimum": 10},
        "quantile": {"type": "number", "exclusiveMinimum": 0, "exclusiveMaximum": 1},
        "r_list": {"type": "array", "items": {"type": "number", "exclusiveMinimum": 0, "maximum": 2 / 3},
                   "minItems": 1},
        "cap_m": {"type": "boolean"},
        "backend": {"enum": ["cython", "python"]},
        "workers": {"type": "integer", "minimum": 1},
        "out": {"type": "string"},
    },
}

DEFAULTS = {
    "group": "t_pauli",
    "noise": {"model": "random_unitary", "r": 1e-3},
    "m_list": list(rbsim.DEFAULT_M_LIST),
    "n_seq": rbsim.DEFAULT_N_SEQ,
    "seed": 0,
    "fit_model": "fixed-spam",
    "min_m": analysis.DEFAULT_MIN_M,
    "bruteforce_m": [1, 2, 3],
    "K": 20,
    "quantile": 0.9,
    "r_list": [1e-4, 1e-3, 1e-2],
    "cap_m": True,
}


class CLIIOError(Exception):
    pass


def load_config(path, overrides) -> dict:
    cfg = {}
    if path:
        try:
            with open(path, encoding="utf-8") as fh:
                text = fh.read()
        except OSError as exc:
            raise CLIIOError(f"cannot read config {path}: {exc}") from exc
        try:
            cfg = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ValidationError(f"config {path} is not valid JSON: {exc}") from None
    if not isinstance(cfg, dict):
        raise ValidationError("config must be a JSON object")
    cfg.update({k: v for k, v in overrides.items() if v is not None})
    try:
        jsonschema.validate(cfg, CONFIG_SCHEMA)
    except jsonschema.ValidationError as exc:
        where = "/".join(str(p) for p in exc.absolute_path) or "<root>"
        raise ValidationError(f"config invalid at {where}: {exc.message}") from None
    return {**DEFAULTS, **cfg}


def _spam(cfg, dim):
    rho = np.asarray(cfg.get("rho", ket0_state(dim)), dtype=float)
    Q = np.asarray(cfg.get("Q", ket0_state(dim)), dtype=float)
    return rho, Q


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (np.floating, float)):
        return float(obj)
    if isinstance(obj, (np.integer, int)) and not isinstance(obj, bool):
        return int(obj)
    return obj


def _dump_json(obj) -> str:
    return json.dumps(_jsonable({"version": __version__, **obj}), indent=2, sort_keys=True) + "\n"


def _write(out, text):
    if out is None:
        sys.stdout.write(text)
        return
    try:
        parent = os.path.dirname(os.path.abspath(out))
        os.makedirs(parent, exist_ok=True)
        with open(out, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    except OSError as exc:
        raise CLIIOError(f"cannot write {out}: {exc}") from exc


def _read(path):
    if not path:
        raise ValidationError("--in is required")
    try:
        with open(path, encoding="utf-8") as fh:
            return fh.read()
    except OSError as exc:
        raise CLIIOError(f"cannot read {path}: {exc}") from exc


def _gauged_decomposition(cfg):
    gs = analysis.build_gateset(cfg, cfg["seed"])
    dec = decomp.solve_LR(gs)
    rho, Q = _spam(cfg, gs.dim)
    gs_I, dec_I = decomp.gauge_to_L_identity(gs, dec)
    rho_I, Q_I = decomp.gauge_spam(dec.L, rho, Q)
    return gs, dec, gs_I, dec_I, rho_I, Q_I


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------

def cmd_decompose(cfg, args):
    gs, dec, gs_I, dec_I, rho_I, Q_I = _gauged_decomposition(cfg)
    rep = decomp.deltas(gs_I, dec_I, rho_I, Q_I)
    body = dec_I.to_json()
    out = {
        "command": "decompose",
        "descriptor": gs.descriptor,
        "gauge": "L_identity",
        "p": dec.p,
        "t": dec.t,
        "r_internoise": decomp.interpret(dec)["r_internoise"],
        "residuals": body["residuals"],
        "eigengaps": body["eigengaps"],
        "dominant_complex": body["dominant_complex"],
        "L": body["L"],
        "R": body["R"],
        "rho": rho_I,
        "Q": Q_I,
        "delta1": rep.delta1,
        "delta2": rep.delta2,
    }
    try:
        b = decomp.thm2_bound(gs_I, dec_I)
        out["thm2_bound"] = b.bound
        out["thm2_max_lhs"] = float(b.lhs.max())
    except NumericalError as exc:
        out["thm2_bound"] = None
        out["thm2_error"] = str(exc)
    return _dump_json(out)


def cmd_simulate(cfg, args):
    gs = analysis.build_gateset(cfg, cfg["seed"])
    rho, Q = _spam(cfg, gs.dim)
    ds = rbsim.run_experiment(gs, cfg["m_list"], cfg["n_seq"], rho, Q, cfg["seed"],
                              workers=cfg.get("workers"), backend=cfg.get("backend"))
    return ds.to_csv()


def cmd_bruteforce(cfg, args):
    gs = analysis.build_gateset(cfg, cfg["seed"])
    rho, Q = _spam(cfg, gs.dim)
    lines = ["m,exact_mean"]
    for m in cfg["bruteforce_m"]:
        lines.append(f"{m},{rbsim.brute_force_average(gs, m, rho, Q, backend=cfg.get('backend')):.17g}")
    return "\n".join(lines) + "\n"


def cmd_fit(cfg, args):
    ds = rbsim.DecayDataset.from_csv(_read(args.in_path))
    model = args.model or cfg["fit_model"]
    fitter = analysis.fit_free if model == "free" else analysis.fit_fixed_spam
    res = fitter(ds, min_m=cfg["min_m"])
    return _dump_json({"command": "fit", **res.to_json()})


def cmd_theory(cfg, args):
    if args.in_path:
        try:
            obj = json.loads(_read(args.in_path))
            dec = decomp.Decomposition(
                p=float(obj["p"]), t=float(obj["t"]), L=SuperOp.from_json(obj["L"]),
                R=SuperOp.from_json(obj["R"]), residuals=dict(obj["residuals"]),
                eigengap_p=float(obj["eigengaps"]["p"]), eigengap_t=float(obj["eigengaps"]["t"]),
            )
            rho, Q = np.asarray(obj["rho"], float), np.asarray(obj["Q"], float)
            d1, d2 = float(obj["delta1"]), float(obj["delta2"])
        except (KeyError, TypeError, ValueError) as exc:
            raise ValidationError(f"{args.in_path} is not a decompose output: {exc}") from None
    else:
        _, _, gs_I, dec, rho, Q = _gauged_decomposition(cfg)
        rep = decomp.deltas(gs_I, dec, rho, Q)
        d1, d2 = rep.delta1, rep.delta2
    envelope = decomp.DeltaReport((), np.empty(0), np.empty(0), 0.0, 0.0, d1, d2)
    curve = rbsim.theory_curve(dec, envelope, rho, Q, cfg["m_list"])
    return _dump_json({
        "command": "theory",
        "A": curve.A,
        "B": curve.B,
        "p": curve.p,
        "t": curve.t,
        "delta1": d1,
        "delta2": d2,
        "m": curve.m,
        "theory": curve.values,
        "bound": curve.bound,
    })


def cmd_counterexample(cfg, args):
    nu = args.nu if args.nu is not None else cfg.get("noise", {}).get("nu", 0.99)
    theta = args.theta if args.theta is not None else cfg.get("noise", {}).get("theta", 0.09)
    closed = analysis.counterexample_analytics(nu, theta)
    from .groups import get_group
    from .noise import depol_z_gateset

    gs = depol_z_gateset(get_group("clifford"), nu, theta)
    rep = analysis.first_order_gamma(gs)
    gap = analysis.infidelity_gap(gs)
    return _dump_json({
        "command": "counterexample",
        "nu": nu,
        "theta": theta,
        **closed,
        "gamma": rep.gamma,
        "r_of_E": rep.r_of_E,
        "ratio_numeric": rep.systematic_dr / rep.r_of_E,
        "p_rb": gap["p"],
        "r_rb": gap["r_rb"],
        "relative_gap": gap["relative_gap"],
    })


def cmd_reproduce_fig1(cfg, args):
    out_dir = args.out or cfg.get("out")
    if not out_dir:
        raise ValidationError("reproduce-fig1 needs --out DIR")
    left = ["r,ci_lo,ci_hi,p_predicted"]
    right = ["r,delta1,delta2"]
    for r in cfg["r_list"]:
        run = {**cfg, "noise": {"model": "random_unitary", "r": r}}
        ci = analysis.confidence_interval(run, K=cfg["K"], quantile=cfg["quantile"], seed=cfg["seed"])
        left.append(f"{r:.17g},{ci.lo:.17g},{ci.hi:.17g},{ci.p_predicted_mean:.17g}")
        _, _, gs_I, dec_I, rho, Q = _gauged_decomposition({**run, "noise": {**run["noise"], "seed": cfg["seed"]}})
        rep = decomp.deltas(gs_I, dec_I, rho, Q)
        right.append(f"{r:.17g},{rep.delta1:.17g},{rep.delta2:.17g}")
    _write(os.path.join(out_dir, "left.csv"), "\n".join(left) + "\n")
    _write(os.path.join(out_dir, "right.csv"), "\n".join(right) + "\n")
    return None


def cmd_verify(cfg, args):
    results = verify_mod.run_all()
    table = verify_mod.format_table(results) + "\n"
    if not all(r[1] for r in results):
        sys.stdout.write(table)
        raise NumericalError("invariant checks failed")
    return table


COMMANDS = {
    "decompose": cmd_decompose,
    "simulate": cmd_simulate,
    "bruteforce": cmd_bruteforce,
    "fit": cmd_fit,
    "theory": cmd_theory,
    "counterexample": cmd_counterexample,
    "reproduce-fig1": cmd_reproduce_fig1,
    "verify": cmd_verify,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="gdrb", description="Randomized benchmarking under gate-dependent noise.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", help="flat JSON run configuration")
        p.add_argument("--out", help="output file (directory for reproduce-fig1); stdout if omitted")
        p.add_argument("--seed", type=int, help="override the config seed")
        if name in ("fit", "theory"):
            p.add_argument("--in", dest="in_path", help="simulate CSV (fit) or decompose JSON (theory)")
        if name == "fit":
            p.add_argument("--model", choices=["fixed-spam", "free"])
        if name == "counterexample":
            p.add_argument("--nu", type=float)
            p.add_argument("--theta", type=float)
    return parser


def _failing_operation(exc) -> str:
    frames = [f for f in traceback.extract_tb(exc.__traceback__) if f"{os.sep}gdrb{os.sep}" in f.filename]
    if not frames:
        return "cli"
    f = frames[-1]
    return f"{os.path.splitext(os.path.basename(f.filename))[0]}.{f.name}"


def run(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0) and 1
    try:
        cfg = load_config(args.config, {"seed": args.seed})
        text = COMMANDS[args.command](cfg, args)
        if text is not None:
            _write(args.out, text)
        return 0
    except ValidationError as exc:
        print(f"error [{_failing_operation(exc)}]: {exc}", file=sys.stderr)
        return 1
    except NumericalError as exc:
        print(f"numerical failure [{_failing_operation(exc)}]: {exc}", file=sys.stderr)
        return 2
    except CLIIOError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return 3


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
