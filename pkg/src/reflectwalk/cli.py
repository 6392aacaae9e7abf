"""Config-driven experiment runner.

Usage::

    reflectwalk run config.json [-o OUTDIR] [-v]
    reflectwalk validate config.json
    reflectwalk builtins [--json]

Exit codes: 0 success, 1 runtime failure, 2 configuration error.
"""
from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import logging
import math
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import analysis, operators
from .domain import BUILTIN_DOMAINS, make_builtin_domain
from .grid import GridGraph, build_cube_complex, build_edge_graph
from .walk import RandomSource, WalkConfig

log = logging.getLogger("reflectwalk")

EXPERIMENTS = ("buildGrid", "energy", "spectrumCheck", "marginal", "occupation",
               "crevice", "exitTime")
DISCIPLINES = ("discreteTime", "exponentialHolding")
STARTS = ("fixed", "stationary")
# random test functions for spectrumCheck draw from streams far above replica ids
_SPECTRUM_STREAM = 1 << 40


@dataclass
class ExperimentConfig:
    domain: str
    domain_params: dict
    levels: list
    seed: int
    experiments: list
    c1: float = 0.5
    horizon: float = 1.0
    replicas: int = 1000
    discipline: str = "discreteTime"
    start: str = "fixed"
    start_point: list | None = None
    test_functions: list = field(default_factory=lambda: ["x1"])
    output_dir: str = "out"
    workers: int = 1
    marginal: dict = field(default_factory=lambda: {"time": 0.1, "bins": 20})
    exit_time: dict = field(default_factory=dict)
    spectrum: dict = field(default_factory=lambda: {"functions": 10, "jMax": 20})

    def to_dict(self):
        return {
            "domain": {"name": self.domain, "params": self.domain_params},
            "levels": self.levels, "seed": self.seed, "experiments": self.experiments,
            "c1": self.c1,
            "walk": {"horizon": self.horizon, "replicas": self.replicas,
                     "discipline": self.discipline, "start": self.start,
                     "startPoint": self.start_point},
            "testFunctions": self.test_functions, "outputDir": self.output_dir,
            "workers": self.workers, "marginal": self.marginal,
            "exitTime": self.exit_time, "spectrumCheck": self.spectrum,
        }

    def config_hash(self) -> str:
        # outputDir and workers do not change results
        d = self.to_dict()
        d.pop("outputDir")
        d.pop("workers")
        return hashlib.sha256(_canonical(d).encode()).hexdigest()


def _canonical(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"))


def _is_int(v):
    return isinstance(v, int) and not isinstance(v, bool)


def _is_num(v):
    return isinstance(v, (int, float)) and not isinstance(v, bool) and math.isfinite(v)


def validate_config(raw) -> tuple:
    """Parse a config document. Returns ``(config or None, [error strings])``.

    Every problem is reported, each prefixed with its field path.
    """
    errors = []
    if isinstance(raw, (str, bytes)):
        try:
            raw = json.loads(raw)
        except json.JSONDecodeError as exc:
            return None, [f"<root>: invalid JSON ({exc.msg} at line {exc.lineno})"]
    if not isinstance(raw, dict):
        return None, ["<root>: config must be a JSON object"]

    known = {"domain", "levels", "seed", "experiments", "c1", "walk", "testFunctions",
             "outputDir", "workers", "marginal", "exitTime", "spectrumCheck"}
    for key in sorted(set(raw) - known):
        errors.append(f"{key}: unknown field")

    dom = raw.get("domain")
    name, params = None, {}
    if dom is None:
        errors.append("domain: missing required field")
    elif not isinstance(dom, dict) or not isinstance(dom.get("name"), str):
        errors.append("domain.name: must be a string")
    else:
        name = dom["name"]
        params = dom.get("params", {})
        if name not in BUILTIN_DOMAINS:
            errors.append(f"domain.name: unknown domain {name!r}")
        if not isinstance(params, dict):
            errors.append("domain.params: must be an object")
            params = {}

    levels = raw.get("levels")
    if levels is None:
        errors.append("levels: missing required field")
    elif not isinstance(levels, list) or not levels:
        errors.append("levels: must be a nonempty list")
    else:
        for i, k in enumerate(levels):
            if not _is_int(k) or k < 1:
                errors.append(f"levels[{i}]: level must be an integer >= 1")

    seed = raw.get("seed")
    if seed is None:
        errors.append("seed: missing required field")
    elif not _is_int(seed) or not 0 <= seed < 2 ** 64:
        errors.append("seed: must be an integer in [0, 2^64)")

    exps = raw.get("experiments")
    if exps is None:
        errors.append("experiments: missing required field")
    elif not isinstance(exps, list) or not exps:
        errors.append("experiments: must be a nonempty list")
    else:
        for i, e in enumerate(exps):
            if e not in EXPERIMENTS:
                errors.append(f"experiments[{i}]: unknown experiment {e!r}")

    c1 = raw.get("c1", 0.5)
    if not _is_num(c1) or not 0 < c1 < 1:
        errors.append("c1: c1 must lie in (0,1)")

    walk = raw.get("walk", {})
    if not isinstance(walk, dict):
        errors.append("walk: must be an object")
        walk = {}
    horizon = walk.get("horizon", 1.0)
    if not _is_num(horizon) or horizon <= 0:
        errors.append("walk.horizon: must be a positive number")
    replicas = walk.get("replicas", 1000)
    if not _is_int(replicas) or replicas < 1:
        errors.append("walk.replicas: must be an integer >= 1")
    discipline = walk.get("discipline", "discreteTime")
    if discipline not in DISCIPLINES:
        errors.append(f"walk.discipline: must be one of {', '.join(DISCIPLINES)}")
    start = walk.get("start", "fixed")
    if start not in STARTS:
        errors.append(f"walk.start: must be one of {', '.join(STARTS)}")
    start_point = walk.get("startPoint")
    if start_point is not None and (not isinstance(start_point, list)
                                    or not all(_is_num(v) for v in start_point)):
        errors.append("walk.startPoint: must be a list of numbers")
    for key in sorted(set(walk) - {"horizon", "replicas", "discipline", "start", "startPoint"}):
        errors.append(f"walk.{key}: unknown field")

    tfs = raw.get("testFunctions", ["x1"])
    if not isinstance(tfs, list):
        errors.append("testFunctions: must be a list")
        tfs = []
    for i, t in enumerate(tfs):
        if t not in operators.TEST_FUNCTIONS:
            errors.append(f"testFunctions[{i}]: unknown test function {t!r}")

    out_dir = raw.get("outputDir", "out")
    if not isinstance(out_dir, str) or not out_dir:
        errors.append("outputDir: must be a nonempty string")
    workers = raw.get("workers", 1)
    if not _is_int(workers) or workers < 1:
        errors.append("workers: must be an integer >= 1")

    marginal = {"time": 0.1, "bins": 20, **(raw.get("marginal") or {})}
    if not _is_num(marginal["time"]) or marginal["time"] <= 0:
        errors.append("marginal.time: must be a positive number")
    if not _is_int(marginal["bins"]) or marginal["bins"] < 1:
        errors.append("marginal.bins: must be an integer >= 1")

    exit_time = raw.get("exitTime") or {}
    if isinstance(exps, list) and "exitTime" in exps:
        for key in ("lo", "hi"):
            v = exit_time.get(key)
            if not isinstance(v, list) or not v or not all(_is_num(x) for x in v):
                errors.append(f"exitTime.{key}: required list of numbers for the exitTime experiment")

    spectrum = {"functions": 10, "jMax": 20, **(raw.get("spectrumCheck") or {})}
    for key in ("functions", "jMax"):
        if not _is_int(spectrum[key]) or spectrum[key] < 1:
            errors.append(f"spectrumCheck.{key}: must be an integer >= 1")

    if name in BUILTIN_DOMAINS and not errors:
        try:
            make_builtin_domain(name, params)
        except (ValueError, KeyError, TypeError) as exc:
            errors.append(f"domain.params: {exc}")

    if errors:
        return None, errors
    cfg = ExperimentConfig(
        domain=name, domain_params=params, levels=list(levels), seed=int(seed),
        experiments=list(exps), c1=float(c1), horizon=float(horizon), replicas=int(replicas),
        discipline=discipline, start=start, start_point=start_point, test_functions=list(tfs),
        output_dir=out_dir, workers=int(workers), marginal=marginal, exit_time=dict(exit_time),
        spectrum=spectrum)
    return cfg, []


def list_builtins(as_json: bool = False) -> str:
    catalog = {
        "domains": BUILTIN_DOMAINS,
        "testFunctions": {k: v.description for k, v in operators.TEST_FUNCTIONS.items()},
        "experiments": list(EXPERIMENTS),
    }
    if as_json:
        return json.dumps(catalog, indent=2, sort_keys=True)
    lines = ["Domains:"]
    for dname, schema in BUILTIN_DOMAINS.items():
        lines.append(f"  {dname}")
        for key, desc in schema.items():
            lines.append(f"      {key}: {desc}")
    lines.append("Test functions:")
    for fname, desc in catalog["testFunctions"].items():
        lines.append(f"  {fname}: {desc}")
    lines.append("Experiments: " + ", ".join(EXPERIMENTS))
    return "\n".join(lines)


# --- runner ---------------------------------------------------------------------------

class _Outputs:
    def __init__(self, root: Path):
        self.root = root
        self.files = []

    def write(self, name: str, text: str):
        path = self.root / name
        path.write_text(text)
        self.files.append({"file": name, "sha256": hashlib.sha256(text.encode()).hexdigest()})

    def json(self, name, obj):
        self.write(name, json.dumps(_jsonable(obj), indent=1, sort_keys=True) + "\n")

    def csv(self, name, header, rows):
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)
        self.write(name, buf.getvalue())


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, float) and not math.isfinite(obj):
        return None
    return obj


def _walk_config(cfg: ExperimentConfig, g: GridGraph, spec) -> WalkConfig:
    point = cfg.start_point if cfg.start_point is not None else spec.base_point
    return WalkConfig(g.level, cfg.horizon, cfg.replicas, cfg.seed, cfg.discipline,
                      cfg.start, g.nearest_vertex(point), cfg.workers)


def _spectrum_report(g: GridGraph, cfg: ExperimentConfig) -> dict:
    rng = RandomSource(cfg.seed, _SPECTRUM_STREAM + g.level)
    A = g.adjacency_matrix().toarray()
    P = A / g.degrees[:, None]
    residuals, slacks = [], []
    for _ in range(cfg.spectrum["functions"]):
        f = rng.random(g.n_vertices) * 2 - 1
        quad = 4.0 ** g.level * float(f @ (g.measure * (f - P @ f)))
        residuals.append(abs(operators.dirichlet_form(g, f) - quad))
        if g.n_vertices <= 2000:
            rep = operators.power_contraction_check(g, f, cfg.spectrum["jMax"])
            slacks.append(rep["min_slack"])
    return {"level": g.level, "vertices": g.n_vertices,
            "maxIdentityResidual": max(residuals), "minContractionSlack": min(slacks) if slacks else None,
            "gridFingerprint": g.fingerprint}


def run_experiment(cfg: ExperimentConfig, out_dir: str | None = None) -> dict:
    root = Path(out_dir or cfg.output_dir)
    root.mkdir(parents=True, exist_ok=True)
    out = _Outputs(root)
    spec = make_builtin_domain(cfg.domain, cfg.domain_params)
    levels = {}
    for k in cfg.levels:
        g = build_cube_complex(spec, k, cfg.c1)
        if g.is_empty:
            log.warning("level %d: empty grid (%s)", k, g.meta.get("empty_reason"))
            levels[str(k)] = {"status": "emptyGrid", "reason": g.meta.get("empty_reason")}
            if "crevice" in cfg.experiments:
                out.json(f"report-crevice-k{k}.json", analysis.crevice_penetration(spec, k, cfg.c1))
            continue
        levels[str(k)] = {"status": "ok", "vertices": g.n_vertices, "edges": g.n_edges,
                          "gridFingerprint": g.fingerprint}
        for exp in cfg.experiments:
            log.info("level %d: %s", k, exp)
            if exp == "buildGrid":
                out.write(f"grid-cubeBased-k{k}.json", g.to_json() + "\n")
                eg = build_edge_graph(spec, k)
                out.write(f"grid-edgeBased-k{k}.json", eg.to_json() + "\n")
            elif exp == "energy":
                reps = [operators.energy_report(spec, g, operators.TEST_FUNCTIONS[n])
                        for n in cfg.test_functions]
                out.write(f"report-energy-k{k}.csv", operators.energy_reports_csv(reps))
            elif exp == "spectrumCheck":
                out.json(f"report-spectrum-k{k}.json", _spectrum_report(g, cfg))
            elif exp == "marginal":
                wc = _walk_config(cfg, g, spec)
                lo, hi = analysis._box_of(g)
                t = float(cfg.marginal["time"])
                # coarse levels cannot resolve more bins than lattice cells
                bins = min(cfg.marginal["bins"], int(round(float((hi - lo).min()) / g.h)))
                if wc.start_mode == "fixed":
                    o = analysis.HeatKernelOracle(tuple(float(v) for v in hi - lo))
                    mc = analysis.marginal_test(g, wc, o, t, bins)
                else:
                    mc = analysis.stationary_marginal_test(g, wc, t, bins)
                out.json(f"report-marginal-k{k}.json", {**mc.to_dict(), "bins": bins})
                emp = np.asarray(mc.empirical).reshape(-1)
                ref = np.asarray(mc.reference).reshape(-1)
                out.csv(f"report-marginal-k{k}.csv", ["bin", "empirical", "reference"],
                        [[i, repr(float(a)), repr(float(b))] for i, (a, b) in enumerate(zip(emp, ref))])
            elif exp == "occupation":
                wc = _walk_config(cfg, g, spec)
                rep = analysis.occupation_test(g, wc)
                out.json(f"report-occupation-k{k}.json", rep)
                out.csv(f"report-occupation-k{k}.csv", ["vertex", "frequency", "stationary"],
                        [[i, repr(a), repr(b)] for i, (a, b) in
                         enumerate(zip(rep["frequencies"], rep["stationary"]))])
            elif exp == "crevice":
                out.json(f"report-crevice-k{k}.json", analysis.crevice_penetration(spec, k, cfg.c1))
            elif exp == "exitTime":
                wc = _walk_config(cfg, g, spec)
                rep = analysis.exit_time_test(g, wc, cfg.exit_time["lo"], cfg.exit_time["hi"])
                out.json(f"report-exitTime-k{k}.json", rep)
    manifest = {"configHash": cfg.config_hash(), "config": cfg.to_dict(), "levels": levels,
                "outputs": sorted(out.files, key=lambda f: f["file"])}
    manifest["config"].pop("outputDir")
    manifest["config"].pop("workers")
    text = json.dumps(_jsonable(manifest), indent=1, sort_keys=True) + "\n"
    (root / "manifest.json").write_text(text)
    manifest["manifestHash"] = hashlib.sha256(text.encode()).hexdigest()
    return manifest


def _read_config(path):
    try:
        return Path(path).read_text()
    except OSError as exc:
        return exc


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="reflectwalk", description=__doc__.split("\n")[0])
    parser.add_argument("-v", "--verbose", action="count", default=0)
    sub = parser.add_subparsers(dest="command", required=True)
    p_run = sub.add_parser("run", help="run the experiments of a config file")
    p_run.add_argument("config")
    p_run.add_argument("-o", "--output-dir", help="override outputDir")
    p_val = sub.add_parser("validate", help="check a config file")
    p_val.add_argument("config")
    p_bi = sub.add_parser("builtins", help="list built-in domains and test functions")
    p_bi.add_argument("--json", action="store_true")
    args = parser.parse_args(argv)

    logging.basicConfig(level=logging.WARNING - 10 * min(args.verbose, 2),
                        format="%(levelname)s %(message)s", stream=sys.stderr)

    if args.command == "builtins":
        print(list_builtins(args.json))
        return 0

    text = _read_config(args.config)
    if isinstance(text, OSError):
        print(f"error: cannot read {args.config}: {text.strerror}", file=sys.stderr)
        return 2
    cfg, errors = validate_config(text)
    if errors:
        for e in errors:
            print(f"config error: {e}", file=sys.stderr)
        return 2
    if args.command == "validate":
        print(json.dumps(cfg.to_dict(), indent=2, sort_keys=True))
        return 0
    try:
        manifest = run_experiment(cfg, args.output_dir)
    except Exception as exc:  # runtime failures map to exit code 1
        log.debug("run failed", exc_info=True)
        print(f"error: {exc}", file=sys.stderr)
        return 1
    print(json.dumps({"manifestHash": manifest["manifestHash"],
                      "outputs": len(manifest["outputs"])}))
    return 0


if __name__ == "__main__":
    sys.exit(main())
