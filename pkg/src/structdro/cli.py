"""Command-line entry point.

    structdro <subcommand> [--config cfg.json] [--out PATH] [--format json|csv]
                           [--seed N] [--trials N]

Subcommands: radius, toy, duality-check, drone, coverage, ot. Configs are
JSON objects; every key is optional and unknown keys are rejected (see
SCHEMAS). The result document goes to ``--out`` (written atomically) or to
stdout; a one-line summary goes to stderr.

Exit codes: 0 success, 1 numerical failure (the failing module is named),
2 config error (reported as ``path:line:col: error: ...``).
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import re
import sys
import tempfile
import traceback
from pathlib import Path
from typing import Any, Callable, Optional

import numpy as np

from . import concentration, coverage, drone, duals, transport
from .core import DiscreteDistribution, PartitionedSpace, ProductDistribution
from .errors import InputError, PreconditionError

SUBCOMMANDS = ("radius", "toy", "duality-check", "drone", "coverage", "ot")
PKG_DIR = Path(__file__).resolve().parent


class ConfigError(Exception):
    def __init__(self, message: str, path: tuple = ()):
        super().__init__(message)
        self.path = path


# -- value checkers ------------------------------------------------------------

def _num(v, key) -> float:
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ConfigError(f"'{key}' must be a number, got {v!r}", (key,))
    return float(v)


def _pos_int(v, key) -> int:
    if isinstance(v, bool) or not isinstance(v, int) or v < 1:
        raise ConfigError(f"'{key}' must be a positive integer, got {v!r}", (key,))
    return v


def _nonneg_int(v, key) -> int:
    if isinstance(v, bool) or not isinstance(v, int) or v < 0:
        raise ConfigError(f"'{key}' must be a nonnegative integer, got {v!r}", (key,))
    return v


def _q(v, key) -> float:
    if v in ("inf", "Infinity"):
        return math.inf
    return _num(v, key)


def _bool(v, key) -> bool:
    if not isinstance(v, bool):
        raise ConfigError(f"'{key}' must be true or false, got {v!r}", (key,))
    return v


def _num_list(v, key) -> list:
    if not isinstance(v, list) or not v:
        raise ConfigError(f"'{key}' must be a non-empty list of numbers", (key,))
    return [_num(x, key) for x in v]


def _int_list(v, key) -> list:
    if not isinstance(v, list) or not v:
        raise ConfigError(f"'{key}' must be a non-empty list of positive integers", (key,))
    return [_pos_int(x, key) for x in v]


def _box(v, key) -> list:
    if (not isinstance(v, list) or len(v) != 2
            or any(not isinstance(c, list) or len(c) != 2 for c in v)):
        raise ConfigError(f"'{key}' must be [[lo1, lo2], [hi1, hi2]]", (key,))
    return [[_num(x, key) for x in c] for c in v]


def _dist(v, key) -> dict:
    if not isinstance(v, dict) or set(v) != {"atoms", "weights"}:
        raise ConfigError(f"'{key}' must be an object with exactly 'atoms' and 'weights'", (key,))
    try:
        DiscreteDistribution.from_dict(v)
    except (InputError, ValueError, TypeError) as exc:
        raise ConfigError(f"'{key}': {exc}", (key,)) from None
    return v


def _product(v, key) -> dict:
    if not isinstance(v, dict) or set(v) != {"components"}:
        raise ConfigError(f"'{key}' must be an object with exactly 'components'", (key,))
    comps = v["components"]
    if not isinstance(comps, list) or not comps:
        raise ConfigError(f"'{key}.components' must be a non-empty list", (key, "components"))
    for c in comps:
        _dist(c, "components")
    return v


def _optional(check: Callable) -> Callable:
    return lambda v, key: None if v is None else check(v, key)


# key -> (checker, default)
SCHEMAS: dict = {
    "radius": {"N": (_pos_int, 1000), "beta": (_num, 0.1), "rho": (_num, 1.0), "p": (_num, 1.0),
               "q": (_q, 2.0), "d": (_pos_int, 3), "dims": (_optional(_int_list), None)},
    "toy": {"p1": (_num, 0.5), "p2": (_num, 0.5), "mass1": (_num, 0.1), "mass2": (_num, 0.1)},
    "duality-check": {"instances": (_pos_int, 50), "seed": (_nonneg_int, 0),
                      "max_atoms": (_pos_int, 6), "max_candidates": (_pos_int, 8),
                      "tol": (_num, 1e-6)},
    "drone": {"theta1": (_box, [[0.0, 0.0], [2.0, 2.0]]),
              "theta2": (_box, [[-20.0, -22.0], [0.0, 0.0]]),
              "w": (_num, 0.1), "box": (_box, [[0.0, 0.0], [5.0, 5.0]]),
              "budgets": (_num_list, [0.01, 0.01]), "N": (_pos_int, 50),
              "trials": (_pos_int, 30), "seed": (_nonneg_int, 0), "within": (_num, 0.3),
              "hist_edges": (_num_list, list(drone.DroneConfig.hist_edges))},
    "coverage": {"truth": (_optional(_product), None), "dims": (_int_list, [3, 3]),
                 "atoms": (_pos_int, 5), "truth_seed": (_nonneg_int, 7), "N": (_pos_int, 30),
                 "p": (_num, 1.0), "q": (_q, 2.0), "trials": (_pos_int, 2000),
                 "seed": (_nonneg_int, 0), "beta": (_optional(_num), None),
                 "radii": (_optional(_num_list), None), "rho": (_optional(_num), None),
                 "ball": (_bool, True), "probe": (_bool, False)},
    "ot": {"source": (_dist, {"atoms": [[0.0], [1.0]], "weights": [0.5, 0.5]}),
           "target": (_dist, {"atoms": [[0.0], [2.0]], "weights": [0.25, 0.75]}),
           "block_dims": (_optional(_int_list), None), "p": (_num, 1.0), "q": (_q, 2.0)},
}


def validate(sub: str, raw: dict) -> dict:
    schema = SCHEMAS[sub]
    for key in raw:
        if key not in schema:
            raise ConfigError(f"unknown key '{key}' for '{sub}' (allowed: "
                              f"{', '.join(sorted(schema))})", (key,))
    return {key: check(raw[key], key) if key in raw else default
            for key, (check, default) in schema.items()}


# -- subcommands ---------------------------------------------------------------
# each returns (document, csv_text, summary_line, failure or None)

def _flat_rows(doc, prefix: str = "") -> list:
    if isinstance(doc, dict):
        return [r for k in sorted(doc) for r in _flat_rows(doc[k], f"{prefix}{k}.")]
    if isinstance(doc, list):
        return [r for i, v in enumerate(doc) for r in _flat_rows(v, f"{prefix}{i}.")]
    return [(prefix[:-1], doc)]


def _kv_csv(doc) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["key", "value"])
    for k, v in _flat_rows(_plain(doc)):
        w.writerow([k, v])
    return buf.getvalue()


def _rows_csv(rows: list, columns: list) -> str:
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=columns, lineterminator="\n", extrasaction="ignore")
    w.writeheader()
    for r in rows:
        w.writerow(_plain(r))
    return buf.getvalue()


def run_radius(cfg: dict, seed, trials):
    C, C_hat = concentration.constants(cfg["d"], cfg["p"], cfg["q"], cfg["beta"])
    eps = concentration.radius_hat(cfg["N"], cfg["beta"], cfg["rho"], cfg["p"], cfg["q"], cfg["d"])
    doc = {"inputs": cfg, "C": C, "C_hat": C_hat, "radius": eps,
           "c": concentration.allocation_constant(cfg["q"])}
    if cfg["dims"] is not None:
        doc["allocation"] = concentration.allocate_hyperrect(
            cfg["N"], cfg["beta"], cfg["rho"], cfg["p"], cfg["q"], cfg["dims"]).to_dict()
    return doc, _kv_csv(doc), f"C={C:.12g} C_hat={C_hat:.12g} radius={eps:.12g}", None


def run_toy(cfg: dict, seed, trials):
    res = duals.toy_strict_improvement(cfg["p1"], cfg["p2"], cfg["mass1"], cfg["mass2"])
    doc = {"inputs": cfg, "value_H": res.value_H, "value_T": res.value_T,
           "plan_H": res.plan_H.to_dict(), "plan_T": res.plan_T.to_dict()}
    return doc, _kv_csv(doc), f"value_H={res.value_H:.12g} value_T={res.value_T:.12g}", None


def run_duality(cfg: dict, seed, trials):
    if seed is not None:
        cfg["seed"] = seed
    if trials is not None:
        cfg["instances"] = trials
    rows = duals.strong_duality_suite(cfg["instances"], cfg["seed"], cfg["max_atoms"],
                                      cfg["max_candidates"])
    worst = max(r["gap"] for r in rows)
    doc = {"inputs": cfg, "max_gap": worst, "passed": worst <= cfg["tol"], "instances": rows}
    cols = ["instance", "n", "p", "q", "atoms", "candidates", "primal", "dual", "gap",
            "cap_binding"]
    failure = None
    if worst > cfg["tol"]:
        failure = ("structdro.duals", f"max duality gap {worst:.3e} exceeds tol {cfg['tol']:g}")
    return doc, _rows_csv(rows, cols), f"instances={len(rows)} max_gap={worst:.3e}", failure


def run_drone(cfg: dict, seed, trials):
    if seed is not None:
        cfg["seed"] = seed
    if trials is not None:
        cfg["trials"] = trials
    rep = drone.run_experiment(drone.DroneConfig(**cfg))
    if rep.failures:
        f = rep.failures[0]
        return None, None, "", ("structdro.drone", f"trial {f['trial']} ({f['method']}): "
                                                   f"{f['error']}")
    s = rep.summary
    line = (f"hyperrect within={s['hyperrect']['within_fraction']:.4g} "
            f"median={s['hyperrect']['median_dist']:.4g}; ball "
            f"within={s['ball']['within_fraction']:.4g} median={s['ball']['median_dist']:.4g}")
    return rep.to_dict(), rep.to_csv(), line, None


def run_coverage(cfg: dict, seed, trials):
    if seed is not None:
        cfg["seed"] = seed
    if trials is not None:
        cfg["trials"] = trials
    if cfg["truth"] is not None:
        truth = ProductDistribution.from_dict(cfg["truth"])
    else:
        truth = coverage.random_product_truth(cfg["dims"], cfg["atoms"], cfg["truth_seed"])
    if cfg["radii"] is None and cfg["beta"] is None:
        cfg["beta"] = 0.2
    cc = coverage.CoverageConfig(truth, cfg["N"], p=cfg["p"], q=cfg["q"], trials=cfg["trials"],
                                 seed=cfg["seed"], radii=cfg["radii"], beta=cfg["beta"],
                                 rho=cfg["rho"], ball=cfg["ball"])
    res = coverage.coverage_mc(cc)
    doc = {"inputs": cfg, "truth": truth.to_dict(), **res.to_dict()}
    if cfg["probe"]:
        doc["probe"] = coverage.independence_probe(truth, cfg["N"], res.radii, cfg["trials"],
                                                   cfg["seed"], cfg["p"], cfg["q"]).to_dict()
    line = f"hyperrect_coverage={res.hyperrect_coverage:.4g} se={res.hyperrect_se:.2g}"
    if res.ball_coverage is not None:
        line += f" ball_coverage={res.ball_coverage:.4g}"
    return doc, res.to_csv(), line, None


def run_ot(cfg: dict, seed, trials):
    P = DiscreteDistribution.from_dict(cfg["source"])
    Q = DiscreteDistribution.from_dict(cfg["target"])
    dims = cfg["block_dims"] or [P.dim]
    dist, plan = transport.wasserstein_p(P, Q, PartitionedSpace(tuple(dims), q=cfg["q"]), cfg["p"])
    doc = {"inputs": cfg, "distance": dist, "plan": plan.to_dict()}
    rows = [{"source": j, "dest": m, "mass": float(plan.pi[j, m])}
            for j in range(plan.pi.shape[0]) for m in range(plan.pi.shape[1]) if plan.pi[j, m] > 0]
    return doc, _rows_csv(rows, ["source", "dest", "mass"]), f"W_p={dist:.12g}", None


RUNNERS = {"radius": run_radius, "toy": run_toy, "duality-check": run_duality,
           "drone": run_drone, "coverage": run_coverage, "ot": run_ot}


# -- plumbing ------------------------------------------------------------------

def _plain(obj: Any) -> Any:
    """JSON-safe copy: numpy to Python, non-finite floats to strings."""
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _plain(obj.tolist())
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        return v if math.isfinite(v) else ("inf" if v > 0 else "-inf" if v < 0 else "nan")
    return obj


def _locate(text: str, path: tuple) -> tuple:
    """Line and column of the last key in ``path`` (searched in order), else 1:1."""
    pos, found = 0, None
    for key in path:
        m = re.compile(r'"' + re.escape(str(key)) + r'"\s*:').search(text, pos)
        if m is None:
            break
        found = pos = m.start()
    if found is None:
        return 1, 1
    line = text.count("\n", 0, found) + 1
    return line, found - (text.rfind("\n", 0, found) + 1) + 1


def _failing_module(exc: BaseException) -> str:
    name = "structdro.cli"
    for frame in traceback.extract_tb(exc.__traceback__):
        path = Path(frame.filename).resolve()
        if path.parent == PKG_DIR and path.stem not in ("cli", "__main__"):
            name = f"structdro.{path.stem}"
    return name


def write_atomic(path: str, text: str) -> None:
    target = Path(path)
    fd, tmp = tempfile.mkstemp(prefix=f".{target.name}.", suffix=".tmp",
                               dir=str(target.parent) if str(target.parent) else ".")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
            fh.flush()
            os.fsync(fh.fileno())
        os.replace(tmp, target)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _positive(text: str) -> int:
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError(f"must be a positive integer, got {text}")
    return v


def _seed(text: str) -> int:
    v = int(text)
    if not 0 <= v < 2 ** 64:
        raise argparse.ArgumentTypeError(f"must be an unsigned 64-bit integer, got {text}")
    return v


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="structdro",
        description="Structured optimal-transport ambiguity sets: radii, duals, experiments.")
    parser.add_argument("subcommand", choices=SUBCOMMANDS)
    parser.add_argument("--config", help="JSON config file (all keys optional)")
    parser.add_argument("--out", help="output path (default: stdout)")
    parser.add_argument("--format", choices=("json", "csv"),
                        help="output format (default: from --out suffix, else json)")
    parser.add_argument("--seed", type=_seed, help="override the config seed")
    parser.add_argument("--trials", type=_positive,
                        help="override trials (drone, coverage) or instances (duality-check)")
    return parser


def run(argv: Optional[list] = None) -> int:
    args = build_parser().parse_args(argv)
    source, text = "<defaults>", ""
    try:
        raw: dict = {}
        if args.config:
            source = args.config
            try:
                text = Path(args.config).read_text(encoding="utf-8")
            except OSError as exc:
                raise ConfigError(f"cannot read config: {exc.strerror}") from None
            try:
                raw = json.loads(text)
            except json.JSONDecodeError as exc:
                print(f"{source}:{exc.lineno}:{exc.colno}: error: invalid JSON: {exc.msg}",
                      file=sys.stderr)
                return 2
            if not isinstance(raw, dict):
                raise ConfigError("config must be a JSON object")
        cfg = validate(args.subcommand, raw)
        try:
            doc, csv_text, line, failure = RUNNERS[args.subcommand](cfg, args.seed, args.trials)
        except (InputError, PreconditionError) as exc:
            hits = [(m.start(), k) for k in raw
                    for m in [re.search(r"\b" + re.escape(k) + r"\b", str(exc))] if m]
            raise ConfigError(str(exc), (min(hits)[1],) if hits else ()) from None
    except ConfigError as exc:
        line_no, col = _locate(text, exc.path) if text else (1, 1)
        print(f"{source}:{line_no}:{col}: error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # numerical failure somewhere below
        print(f"error in {_failing_module(exc)}: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    if doc is None:
        print(f"error in {failure[0]}: {failure[1]}", file=sys.stderr)
        return 1
    fmt = args.format or ("csv" if args.out and args.out.endswith(".csv") else "json")
    body = csv_text if fmt == "csv" else json.dumps(_plain(doc), indent=2, sort_keys=True,
                                                    allow_nan=False) + "\n"
    if args.out:
        try:
            write_atomic(args.out, body)
        except OSError as exc:
            print(f"{args.out}:1:1: error: cannot write output: {exc}", file=sys.stderr)
            return 2
    else:
        sys.stdout.write(body)
    print(line, file=sys.stderr)
    if failure is not None:
        print(f"error in {failure[0]}: {failure[1]}", file=sys.stderr)
        return 1
    return 0


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
