"""Command line interface.

Subcommands: ``generate``, ``cluster-mrp``, ``cluster-entropy``,
``diagnose`` and ``evaluate``. Parameters come from built-in defaults, then
an optional flat ``key=value`` file (``--config``), then flags. Every JSON
artifact embeds the effective configuration.
"""
from __future__ import annotations

import argparse
import json
import logging
import math
import os
import sys
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .cluster import Clustering, MrpParams, cluster_mrp, evaluate_clustering
from .diagnose import all_passed, run_diagnostics
from .entropy import cluster_entropy
from .graph import GraphFormatError, load_graph
from .oracle import SbmSpec, generate_sbm

logger = logging.getLogger("sparsecut")

EXIT_OK, EXIT_FAILED, EXIT_USAGE = 0, 1, 2


class ConfigError(ValueError):
    pass


def _pos_int(v):
    return int(v) >= 1


def _nonneg_int(v):
    return int(v) >= 0


def _positive(v):
    return float(v) > 0


def _unit(v):
    return 0 < float(v) <= 1


def _prob(v):
    return 0 <= float(v) <= 1


def _bool(text):
    if isinstance(text, bool):
        return text
    low = str(text).strip().lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _sizes(text):
    if isinstance(text, (list, tuple)):
        return [int(x) for x in text]
    return [int(x) for x in str(text).split(",") if x.strip()]


# key -> (type, default, validator, help)
PARAMS = {
    "cluster-mrp": {
        "scale": (int, 2, _nonneg_int, "ring width exponent s"),
        "blocks": (int, 8, _pos_int, "angular blocks per ring"),
        "fraction": (float, 0.5, _unit, "share of each block drawn into its candidate set"),
        "ra_al": (float, 1.0, _positive, "relative absorption threshold"),
        "phi_al": (float, 0.1, _positive, "mutual conductance merge threshold"),
        "centers": (int, 4, _pos_int, "number of solar system centers"),
        "repeats": (int, 3, _pos_int, "randomizations; best by mean conductance"),
        "absorb": (_bool, True, None, "attach leftover vertices to adjacent clusters"),
    },
    "cluster-entropy": {
        "cardinality": (int, 10, _pos_int, "size of each random set"),
        "n_sets": (int, 200, _pos_int, "number of random sets"),
        "top_m": (int, 5, _pos_int, "number of sets reported"),
        "radius": (int, 1, _nonneg_int, "hop radius of covering balls"),
        "horizon": (int, None, _pos_int, "stopping horizon (default 4 x diameter)"),
    },
    "diagnose": {
        "instances": (int, 20, _pos_int, "random (A, c) / (A, B) instances"),
        "t_max": (int, 30, _pos_int, "largest time for the Carne-Varopoulos sweep"),
        "n_max": (int, 60, _pos_int, "largest n for the Hoeffding tail sweep"),
        "max_power": (int, 8, _nonneg_int, "largest power for the duality check"),
    },
    "generate": {
        "sizes": (_sizes, [30, 30], lambda v: len(v) > 0 and min(v) >= 1, "comma separated block sizes"),
        "p_in": (float, 0.5, _prob, "within-block edge probability"),
        "p_out": (float, 0.01, _prob, "cross-block edge probability"),
    },
    "evaluate": {},
}

COMMON = ("graph", "output", "seed", "threads")
# short names accepted in config files
ALIASES = {"s": "scale", "n_b": "blocks", "n_c": "centers", "kappa": "cardinality",
           "rho": "radius"}
NEEDS_GRAPH = ("cluster-mrp", "cluster-entropy", "diagnose", "evaluate")


@dataclass
class RunConfig:
    command: str
    seed: int
    threads: int
    graph: Optional[str] = None
    output: Optional[str] = None
    params: dict = field(default_factory=dict)
    extra: dict = field(default_factory=dict)
    verbose: bool = False

    def effective(self) -> dict:
        out = {"command": self.command, "graph": self.graph, "seed": self.seed,
               "threads": self.threads}
        out.update(self.params)
        return out


def read_config_file(path) -> dict:
    """Parse flat ``key = value`` lines; ``#`` starts a comment."""
    values = {}
    try:
        with open(path, encoding="utf-8") as fh:
            lines = fh.read().splitlines()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror}") from None
    for lineno, raw in enumerate(lines, start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected key=value")
        key, value = (part.strip() for part in line.split("=", 1))
        key = key.replace("-", "_")
        key = ALIASES.get(key, key.lower())
        if key in values:
            raise ConfigError(f"{path}:{lineno}: duplicate key {key!r}")
        values[key] = value
    return values


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="sparsecut", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, options in PARAMS.items():
        p = sub.add_parser(name)
        p.add_argument("--config", help="flat key=value parameter file")
        p.add_argument("--graph", default=None, help="edge list 'u v [w]' per line")
        p.add_argument("--output", "-o", default=None, help="output path (default stdout)")
        p.add_argument("--seed", type=int, default=None, help="master seed (required)")
        p.add_argument("--threads", type=int, default=None,
                       help="worker threads (default $MRP_THREADS or all cores)")
        for key, (_, _, _, help_) in options.items():
            p.add_argument("--" + key.replace("_", "-"), dest=key, default=None, help=help_)
        if name == "generate":
            p.add_argument("--truth", default=None, help="write the planted partition JSON here")
        if name == "evaluate":
            p.add_argument("--clustering", required=True, help="cluster-mrp JSON output")
            p.add_argument("--reference", default=None,
                           help="reference partition JSON ({'labels': [...]}) or label file")
        if name == "cluster-mrp":
            p.add_argument("--reference", default=None, help="optional partition to score against")
    return parser


def _coerce(command, key, value):
    typ, _, check, _ = PARAMS[command][key]
    try:
        out = typ(value)
    except (TypeError, ValueError):
        raise ConfigError(f"{key}: cannot parse {value!r}") from None
    if check is not None and not check(out):
        raise ConfigError(f"{key}: value {value!r} out of range")
    return out


def parse_config(argv=None) -> RunConfig:
    """Resolve defaults, config file and flags into a validated :class:`RunConfig`."""
    args = build_parser().parse_args(argv)
    command = args.command
    table = PARAMS[command]
    file_values = read_config_file(args.config) if args.config else {}
    unknown = set(file_values) - set(table) - set(COMMON)
    if unknown:
        raise ConfigError(f"unknown config keys: {', '.join(sorted(unknown))}")

    params = {k: v[1] for k, v in table.items()}
    for key in table:
        if key in file_values:
            params[key] = _coerce(command, key, file_values[key])
        flag = getattr(args, key)
        if flag is not None:
            params[key] = _coerce(command, key, flag)

    def common(key, cast):
        flag = getattr(args, key)
        if flag is not None:
            return flag
        if key in file_values:
            try:
                return cast(file_values[key])
            except ValueError:
                raise ConfigError(f"{key}: cannot parse {file_values[key]!r}") from None
        return None

    seed = common("seed", int)
    if seed is None:
        raise ConfigError("a --seed is required")
    threads = common("threads", int)
    if threads is None:
        env = os.environ.get("MRP_THREADS")
        threads = int(env) if env else (os.cpu_count() or 1)
    if threads < 1:
        raise ConfigError("threads must be >= 1")
    graph = common("graph", str)
    if command in NEEDS_GRAPH and not graph:
        raise ConfigError("a --graph path is required")
    if command == "generate" and params["p_out"] >= params["p_in"]:
        raise ConfigError("p_out must be smaller than p_in")
    if command == "cluster-entropy" and params["top_m"] > params["n_sets"]:
        raise ConfigError("top_m must not exceed n_sets")

    extra = {k: getattr(args, k) for k in ("truth", "clustering", "reference") if hasattr(args, k)}
    return RunConfig(command, seed, threads, graph, common("output", str), params, extra,
                     args.verbose)


def _dump(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


def _write(path, text):
    if path is None:
        sys.stdout.write(text)
        return
    tmp = f"{path}.tmp"
    with open(tmp, "w", encoding="utf-8") as fh:
        fh.write(text)
    os.replace(tmp, path)


def _read_labels(path, n):
    with open(path, encoding="utf-8") as fh:
        text = fh.read()
    try:
        data = json.loads(text)
    except json.JSONDecodeError:
        return np.asarray([int(x) for x in text.split()], dtype=np.int64)
    if isinstance(data, dict) and "labels" in data:
        return np.asarray(data["labels"], dtype=np.int64)
    if isinstance(data, dict) and "clusters" in data:
        return Clustering(n, [np.asarray(c, dtype=np.int64) for c in data["clusters"]]).to_labels()
    return np.asarray(data, dtype=np.int64)


def _cmd_generate(cfg: RunConfig):
    p = cfg.params
    sample = generate_sbm(SbmSpec(tuple(p["sizes"]), p["p_in"], p["p_out"], cfg.seed))
    if not sample.connected:
        logger.warning("generated graph is disconnected after %d attempts", sample.attempts)
    truth = {"labels": sample.labels.tolist(), "connected": sample.connected,
             "attempts": sample.attempts, "config": cfg.effective()}
    _write(cfg.output, sample.graph.to_edgelist())
    if cfg.extra.get("truth"):
        _write(cfg.extra["truth"], _dump(truth))
    return EXIT_OK


def _cmd_cluster_mrp(cfg: RunConfig, g):
    p = cfg.params
    params = MrpParams(n_centers=p["centers"], scale=p["scale"], n_blocks=p["blocks"],
                       fraction=p["fraction"], ra_threshold=p["ra_al"], phi_threshold=p["phi_al"],
                       n_repeats=p["repeats"], seed=cfg.seed, absorb=p["absorb"])
    result = cluster_mrp(g, params, n_jobs=cfg.threads)
    reference = _read_labels(cfg.extra["reference"], g.n) if cfg.extra.get("reference") else None
    out = result.clustering.to_dict()
    out["metrics"] = evaluate_clustering(g, result.clustering, reference)
    out["diagnostics"] = {
        "solar_systems": len(result.galaxy.systems),
        "skipped_centers": result.galaxy.skipped_centers,
        "best_repeat": result.best_repeat,
        "repeat_scores": [None if math.isinf(r.score) else r.score for r in result.repeats],
        "candidates": [r.n_candidates for r in result.repeats],
        "safe": [r.n_safe for r in result.repeats],
        "flagged_blocks": [r.n_flagged for r in result.repeats],
        "merges": [r.n_merges for r in result.repeats],
    }
    out["params"] = cfg.effective()
    out["seed"] = cfg.seed
    _write(cfg.output, _dump(out))
    return EXIT_OK


def _cmd_cluster_entropy(cfg: RunConfig, g):
    p = cfg.params
    if p["cardinality"] > g.n:
        raise ConfigError(f"cardinality {p['cardinality']} exceeds the {g.n} vertices")
    ranked = cluster_entropy(g, p["cardinality"], p["n_sets"], p["top_m"], p["radius"],
                             p["horizon"], cfg.seed, n_jobs=cfg.threads)
    out = {"ranked": [{"vertices": r.vertices.tolist(), "score": r.score, "draw": r.index}
                      for r in ranked],
           "params": cfg.effective(), "seed": cfg.seed}
    _write(cfg.output, _dump(out))
    return EXIT_OK


def _cmd_diagnose(cfg: RunConfig, g):
    p = cfg.params
    report = run_diagnostics(g, cfg.seed, p["instances"], p["t_max"], p["n_max"],
                             p["max_power"], n_jobs=cfg.threads)
    ok = all_passed(report)
    report["_config"] = cfg.effective()
    _write(cfg.output, _dump(report))
    return EXIT_OK if ok else EXIT_FAILED


def _cmd_evaluate(cfg: RunConfig, g):
    with open(cfg.extra["clustering"], encoding="utf-8") as fh:
        data = json.load(fh)
    clustering = Clustering(g.n, [np.asarray(c, dtype=np.int64) for c in data["clusters"]])
    reference = _read_labels(cfg.extra["reference"], g.n) if cfg.extra.get("reference") else None
    out = {"metrics": evaluate_clustering(g, clustering, reference), "params": cfg.effective(),
           "seed": cfg.seed}
    _write(cfg.output, _dump(out))
    return EXIT_OK


COMMANDS = {
    "cluster-mrp": _cmd_cluster_mrp,
    "cluster-entropy": _cmd_cluster_entropy,
    "diagnose": _cmd_diagnose,
    "evaluate": _cmd_evaluate,
}


def run(cfg: RunConfig) -> int:
    """Execute a resolved configuration; returns the process exit code."""
    if cfg.verbose:
        logging.getLogger("sparsecut").setLevel(logging.INFO)
    if cfg.command == "generate":
        return _cmd_generate(cfg)
    if not os.path.isfile(cfg.graph):
        raise ConfigError(f"graph file not found: {cfg.graph}")
    try:
        g = load_graph(cfg.graph)
    except GraphFormatError as exc:
        raise ConfigError(f"{cfg.graph}: {exc}") from None
    return COMMANDS[cfg.command](cfg, g)


def main(argv=None) -> int:
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = parse_config(argv)
        return run(cfg)
    except ConfigError as exc:
        print(f"sparsecut: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except FileNotFoundError as exc:
        print(f"sparsecut: error: {exc.filename}: {exc.strerror}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"sparsecut: error: {getattr(exc, 'filename', '')}: {exc.strerror or exc}",
              file=sys.stderr)
        return EXIT_USAGE
    except ValueError as exc:
        print(f"sparsecut: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
