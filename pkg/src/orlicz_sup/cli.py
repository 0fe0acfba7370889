"""Command-line front end.

Exit codes: 0 success, 2 configuration or usage error, 3 a finiteness
hypothesis of a bound failed. ``ORLICZ_THREADS`` caps the worker pool.
"""

import argparse
import json
import math
import os
import sys
import tempfile
import time

import jsonschema
import numpy as np

from . import mc_lab, nfunc, orlicz_norms, ou_model
from .errors import DivergenceError, DomainOverflowError, InvalidParameterError

EXIT_OK, EXIT_USAGE, EXIT_HYPOTHESIS = 0, 2, 3

BOUND_COLUMNS = ["x", "bound_raw", "bound_clamped", "alpha_star", "p_star", "gamma_q", "delta_q", "d_pq"]
SIMULATE_COLUMNS = ["x", "empirical", "ci_halfwidth", "bound_raw", "bound_clamped", "dominated"]
REPORT_COLUMNS = SIMULATE_COLUMNS + ["empirical_refined"]

_POS = {"type": "number", "exclusiveMinimum": 0}
CONFIG_SCHEMA = {
    "type": "object",
    "required": ["process", "x_grid"],
    "additionalProperties": False,
    "properties": {
        "process": {
            "type": "object",
            "required": ["type", "tau", "T", "beta1", "beta2"],
            "additionalProperties": False,
            "properties": {
                "type": {"const": "ou"},
                "tau": _POS,
                "T": _POS,
                "beta1": {"type": "number", "exclusiveMinimum": 0, "maximum": 1},
                "beta2": {"type": "number", "exclusiveMinimum": 0, "maximum": 1},
            },
        },
        "f": {
            "type": "object",
            "required": ["type"],
            "additionalProperties": False,
            "properties": {
                "type": {"enum": ["zero", "power-modulus"]},
                "c": {"type": "number", "minimum": 0},
                "kappa": _POS,
                "values": {"type": "array", "items": {"type": "number"}, "minItems": 2},
            },
            "if": {"properties": {"type": {"const": "power-modulus"}}},
            "then": {"required": ["c", "kappa", "values"]},
        },
        "zeta": {
            "type": "object",
            "additionalProperties": False,
            "properties": {"alpha": {"oneOf": [_POS, {"const": "auto"}]}},
        },
        "x_grid": {
            "type": "object",
            "required": ["min", "max", "count"],
            "additionalProperties": False,
            "properties": {
                "min": _POS,
                "max": _POS,
                "count": {"type": "integer", "minimum": 1},
                "scale": {"enum": ["log", "linear"]},
            },
        },
        "mc": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "paths": {"type": "integer", "minimum": 1},
                "grid_points": {"type": "integer", "minimum": 2},
                "seed": {"type": "integer", "minimum": 0, "maximum": 2 ** 64 - 1},
            },
        },
        "search": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "p_grid": {"type": "integer", "minimum": 1},
                "p_steps": {"type": "integer", "minimum": 0},
                "alpha_steps": {"type": "integer", "minimum": 0},
                "t_points": {"type": "integer", "minimum": 2},
            },
        },
        "quad_tol": {"type": "number", "exclusiveMinimum": 0, "maximum": 0.1},
        "output": {
            "type": "object",
            "additionalProperties": False,
            "properties": {k: {"type": "string", "minLength": 1}
                           for k in ("bound_csv", "simulate_csv", "summary_json", "report_csv")},
        },
    },
}

DEFAULTS = {
    "f": {"type": "zero"},
    "zeta": {"alpha": "auto"},
    "mc": {"paths": 10000, "grid_points": 512, "seed": 0},
    "search": {"p_grid": 19, "p_steps": 12, "alpha_steps": 24, "t_points": 33},
    "quad_tol": 1e-8,
    "output": {"bound_csv": "bound.csv", "simulate_csv": "simulate.csv",
               "summary_json": "summary.json", "report_csv": "report.csv"},
}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(message)


def load_config(path):
    """Read, validate and complete a run configuration."""
    try:
        with open(path, encoding="utf-8") as fh:
            cfg = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise UsageError(f"cannot read config {path}: {exc}") from exc
    validator = jsonschema.Draft202012Validator(CONFIG_SCHEMA)
    errors = sorted(validator.iter_errors(cfg), key=lambda e: list(e.absolute_path))
    if errors:
        err = errors[0]
        where = "/" + "/".join(str(p) for p in err.absolute_path)
        raise UsageError(f"config error at {where}: {err.message}")
    for key, val in DEFAULTS.items():
        if isinstance(val, dict):
            cfg[key] = {**val, **cfg.get(key, {})}
        else:
            cfg.setdefault(key, val)
    xg = cfg["x_grid"]
    if xg["max"] < xg["min"] or (xg["count"] > 1 and xg["max"] == xg["min"]):
        raise UsageError("config error at /x_grid: max must exceed min")
    proc = cfg["process"]
    try:
        alpha = cfg["zeta"]["alpha"]
        cfg["model"] = ou_model.OUModel(proc["tau"], proc["T"], proc["beta1"], proc["beta2"],
                                        None if alpha == "auto" else float(alpha))
    except InvalidParameterError as exc:
        raise UsageError(f"config error at /process: {exc}") from exc
    return cfg


def x_values(cfg):
    xg = cfg["x_grid"]
    if xg["count"] == 1:
        return np.array([float(xg["min"])])
    if xg.get("scale", "log") == "log":
        return np.geomspace(xg["min"], xg["max"], xg["count"])
    return np.linspace(xg["min"], xg["max"], xg["count"])


def drift(cfg):
    """(f callable, integral of f over [0, T], delta modulus) from the config."""
    drift_cfg, m = cfg["f"], cfg["model"]
    if drift_cfg["type"] == "zero":
        return None, 0.0, None
    vals = np.asarray(drift_cfg["values"], dtype=float)
    pts = np.linspace(0.0, m.T, vals.size)
    f = lambda t: np.interp(t, pts, vals)
    integral = float(np.sum(0.5 * (vals[1:] + vals[:-1]) * np.diff(pts)))
    delta = ou_model.PowerModulus(drift_cfg["c"], drift_cfg["kappa"])
    u, v = np.meshgrid(pts, pts)
    if not delta.check(m, f, np.column_stack([u.ravel(), v.ravel()])):
        raise DivergenceError("drift increments are not controlled by delta(d) <= d",
                              "|f(u) - f(v)| <= delta(d(u, v)) <= d(u, v) on the tabulated points")
    return f, integral, delta


def fmt(value):
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if value is None:
        return "vacuous"
    return "%.17g" % float(value)


def write_atomic(path, text):
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", suffix=os.path.basename(path))
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def csv_text(columns, rows):
    lines = [",".join(columns)]
    lines += [",".join(fmt(v) for v in row) for row in rows]
    return "\n".join(lines) + "\n"


def optimized_bound(cfg):
    m = cfg["model"]
    _, f_integral, delta = drift(cfg)
    s = cfg["search"]
    return ou_model.optimize_constant(
        m, None, f_integral, delta, cfg["quad_tol"], t_points=s["t_points"],
        p_grid=np.linspace(0.05, 0.95, s["p_grid"]) if s["p_grid"] > 1 else np.array([0.5]),
        p_steps=s["p_steps"], alpha_steps=s["alpha_steps"], alpha=m.alpha_zeta)


def bound_rows(cfg, res, xs):
    rows = []
    for x in xs:
        raw = float(res.at(x))
        rows.append([x, raw, min(1.0, raw), res.alpha_star, res.p_star, res.gamma2, res.delta2, res.d_p2])
    return rows


def cmd_bound(cfg):
    xs = x_values(cfg)
    res = optimized_bound(cfg)
    write_atomic(cfg["output"]["bound_csv"], csv_text(BOUND_COLUMNS, bound_rows(cfg, res, xs)))
    print(f"wrote {len(xs)} rows to {cfg['output']['bound_csv']} "
          f"(alpha*={res.alpha_star:.6g}, p*={res.p_star:.6g}, constant={res.constant:.6g})")
    return EXIT_OK


def _simulate(cfg):
    m = cfg["model"]
    mc = cfg["mc"]
    f, _, _ = drift(cfg)
    res = optimized_bound(cfg)
    xs = x_values(cfg)
    batch = mc_lab.sample_ou_batch(m, mc["grid_points"], mc["paths"], mc["seed"])

    def bound_fn(x):
        raw = float(res.at(x))
        return mc_lab.BoundPoint(raw, min(1.0, raw), res.alpha_star, res.p_star)

    return batch, f, mc_lab.domination_report(batch, f, bound_fn, xs)


def _simulate_rows(rep):
    return [[x, e, h, br, bc, d] for x, e, h, br, bc, d in
            zip(rep.x_grid, rep.empirical, rep.ci_halfwidth, rep.bound_raw, rep.bound_clamped, rep.dominated)]


def cmd_simulate(cfg):
    start = time.perf_counter()
    _, _, rep = _simulate(cfg)
    write_atomic(cfg["output"]["simulate_csv"], csv_text(SIMULATE_COLUMNS, _simulate_rows(rep)))
    summary = {"n_paths": rep.n_paths, "seed": cfg["mc"]["seed"], "all_dominated": rep.all_dominated,
               "runtime_ms": int(round(1000 * (time.perf_counter() - start)))}
    write_atomic(cfg["output"]["summary_json"], json.dumps(summary, indent=2) + "\n")
    print(json.dumps(summary))
    return EXIT_OK


def cmd_report(cfg):
    """Domination table plus the empirical tail on a twice-refined grid."""
    batch, f, rep = _simulate(cfg)
    refined = mc_lab.refine_batch(cfg["model"], batch)
    finer = mc_lab.empirical_sup_tail(refined, f, rep.x_grid)
    rows = [r + [e] for r, e in zip(_simulate_rows(rep), finer.empirical)]
    write_atomic(cfg["output"]["report_csv"], csv_text(REPORT_COLUMNS, rows))
    print(f"wrote {len(rows)} rows to {cfg['output']['report_csv']} "
          f"(all_dominated={fmt(rep.all_dominated)})")
    return EXIT_OK


NFUNC_PARAMS = {"power": ("c", "p"), "exp_linear": (), "exp_power": ("a", "b"),
                "power_over_p": ("p",), "piecewise_exp": ("alpha",)}


def _nfunc_from_args(args):
    params = {}
    for key in NFUNC_PARAMS[args.name]:
        val = getattr(args, key)
        if val is None:
            raise UsageError(f"--{key} is required for {args.name}")
        params[key] = val
    return nfunc.make_catalog_function(args.name, **params)


def cmd_nfunc(args):
    U = _nfunc_from_args(args)
    print(f"U={fmt(U(args.x))}")
    print(f"Uinv={fmt(nfunc.generalized_inverse(U, abs(args.x)))}")
    print(f"Ustar={fmt(nfunc.conjugate(U, args.x))}")
    return EXIT_OK


def cmd_norm(args):
    U = _nfunc_from_args(args)
    try:
        with open(args.input, encoding="utf-8") as fh:
            data = np.array(fh.read().replace(",", " ").split(), dtype=float)
    except (OSError, ValueError) as exc:
        raise UsageError(f"cannot read samples from {args.input}: {exc}") from exc
    value, se = orlicz_norms.luxembourg_norm_samples(U, data, with_stderr=True)
    print(f"norm={fmt(value)}")
    print(f"stderr={fmt(se)}")
    return EXIT_OK


def build_parser():
    parser = _Parser(prog="orlicz-sup", description="Orlicz-norm sup-deviation bounds for OU processes.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def add_nfunc_args(p):
        p.add_argument("--name", required=True, choices=sorted(NFUNC_PARAMS))
        for key in ("c", "p", "a", "b", "alpha"):
            p.add_argument(f"--{key}", type=float)

    p = sub.add_parser("nfunc", help="evaluate U, its inverse and its conjugate at x")
    add_nfunc_args(p)
    p.add_argument("--x", type=float, required=True)
    p = sub.add_parser("norm", help="Luxembourg norm of samples read from a file")
    add_nfunc_args(p)
    p.add_argument("--input", required=True)
    for name, helptext in (("bound", "write the bound table"),
                           ("simulate", "write the Monte Carlo domination table"),
                           ("report", "domination table with a grid-doubling column")):
        p = sub.add_parser(name, help=helptext)
        p.add_argument("--config", required=True)
    return parser


COMMANDS = {"bound": cmd_bound, "simulate": cmd_simulate, "report": cmd_report}


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command == "nfunc":
            return cmd_nfunc(args)
        if args.command == "norm":
            return cmd_norm(args)
        return COMMANDS[args.command](load_config(args.config))
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (InvalidParameterError, DomainOverflowError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except DivergenceError as exc:
        print(f"hypothesis failed: {exc.hypothesis or 'finiteness of a bound ingredient'} ({exc})",
              file=sys.stderr)
        return EXIT_HYPOTHESIS


if __name__ == "__main__":
    sys.exit(main())
