"""Command line interface: run an experiment described by a JSON config.

Results go to ``<out>/<config-hash>/``: ``manifest.json``, the run document
``config.json`` (config, seed and subcommand; its hash names the directory)
and per-run CSV/JSON files.  Reruns with the same hash refuse to overwrite
unless ``--force`` is given.

Exit codes: 0 success, 1 validation error (including a failed ``check``
suite), 2 budget error.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
import time
from dataclasses import dataclass, field

import numpy as np

from . import __version__
from .config import config_hash, load_config
from .engine import (
    average_trajectory,
    certify_joint_bound,
    contractivity_bound,
    entangled_average,
    naive_average,
    polynomial_entangled_average,
)
from .errors import BudgetError, DefectiveSpectrumError, EntangledError, ValidationError
from .jdlg import spectral_split, verify_split
from .measure_space import norm_inf
from .splitting import build_splitting_tree, verify_proof_bounds
from .weights import besicovitch_profile, cesaro_abs_mean, eval_weights

__all__ = [
    "ResultManifest",
    "OutputExistsError",
    "SUBCOMMANDS",
    "TRAJECTORY_HEADER",
    "run",
    "export_results",
    "read_manifest",
    "verify_manifest",
    "main",
]

SUBCOMMANDS = ("simulate", "decompose", "split", "weights", "check")
TRAJECTORY_HEADER = ("N", "atom", "re", "im", "linf", "cauchy_gap")
WEIGHTS_HEADER = ("N", "estimate")
CHECK_TOL = 1e-9


class OutputExistsError(ValidationError):
    """The results directory for this config hash already holds a run."""


@dataclass
class ResultManifest:
    config_hash: str
    artifact_version: str
    subcommand: str
    seed: int
    files: dict
    wall_clock_s: float
    flags: dict
    # in-memory payload, written by export_results; not part of the manifest file
    tables: dict = field(default_factory=dict, compare=False, repr=False)
    documents: dict = field(default_factory=dict, compare=False, repr=False)

    def to_json(self):
        return {
            "config_hash": self.config_hash,
            "artifact_version": self.artifact_version,
            "subcommand": self.subcommand,
            "seed": self.seed,
            "files": dict(self.files),
            "wall_clock_s": self.wall_clock_s,
            "flags": dict(self.flags),
        }

    @classmethod
    def from_json(cls, obj):
        return cls(
            config_hash=obj["config_hash"],
            artifact_version=obj["artifact_version"],
            subcommand=obj["subcommand"],
            seed=int(obj["seed"]),
            files=dict(obj["files"]),
            wall_clock_s=float(obj["wall_clock_s"]),
            flags=dict(obj["flags"]),
        )


def _fmt(x):
    if x is None:
        return "nan"
    return f"{float(x):.17g}"


def _jsonable(x):
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, np.ndarray):
        return _jsonable(x.tolist())
    if isinstance(x, (bool, np.bool_)):
        return bool(x)
    if isinstance(x, (int, np.integer)):
        return int(x)
    if isinstance(x, (complex, np.complexfloating)):
        return [_jsonable(x.real), _jsonable(x.imag)]
    if isinstance(x, (float, np.floating)):
        x = float(x)
        # JSON has no NaN/inf
        return x if math.isfinite(x) else None
    return x


def _dump(obj):
    return json.dumps(_jsonable(obj), sort_keys=True, indent=2, allow_nan=False) + "\n"


# ---------------------------------------------------------------- subcommands


def _simulate(cfg):
    p = cfg.problem
    if cfg.variant == "absolute":
        kw = {"budget": cfg.naive_budget}
    else:
        kw = {"memory_cap": cfg.memory_cap}
    pts = average_trajectory(p, cfg.f, cfg.checkpoints, cfg.variant, cfg.polys, cfg.workers, **kw)
    rows = []
    for pt in pts:
        for j, z in enumerate(pt.value.values):
            rows.append((pt.N, j, _fmt(z.real), _fmt(z.imag), _fmt(pt.linf), _fmt(pt.cauchy_gap)))
    summary = {
        "variant": cfg.variant,
        "m": p.m,
        "k": p.k,
        "d": p.d,
        "alpha": list(p.ent.alpha),
        "points": [{"N": pt.N, "linf": pt.linf, "cauchy_gap": pt.cauchy_gap} for pt in pts],
    }
    finite = all(np.all(np.isfinite(pt.value.values)) for pt in pts)
    return {"trajectory.csv": (TRAJECTORY_HEADER, rows)}, {"summary.json": summary}, {"finite": bool(finite)}


def _decompose(cfg):
    out = []
    ok = True
    for i, T in enumerate(cfg.problem.T):
        s = spectral_split(T, cfg.unimodular_tol)
        inv = s.invariant_errors()
        good = all(v <= CHECK_TOL for v in inv.values())
        ok = ok and good
        out.append(dict(s.to_json(), name=f"T{i + 1}", invariants=inv, invariants_ok=good))
    return {}, {"decompose.json": {"operators": out}}, {"split_invariants": ok}


def _split(cfg):
    if cfg.splitting is None:
        raise ValidationError("the split subcommand needs a 'splitting' section in the config")
    s = cfg.splitting
    p = certify_joint_bound(cfg.problem, N_cert=s["N_cert"])
    tree = build_splitting_tree(p, cfg.f, s["eps"], s["variant"], s["N_orbit"], s["lp"])
    inv = tree.check_invariants(p)
    reports = [verify_proof_bounds(tree, p, cfg.f, N, workers=cfg.workers) for N in s["horizons"]]
    flags = {"tree_invariants": bool(inv["ok"])}
    flags["decomposition"] = all(r["decomposition_err"] <= 1e-9 for r in reports)
    if s["variant"] == "part2":
        flags["remainder_bound"] = all(r["holds"] for r in reports)
    docs = {
        "tree.json": dict(tree.to_json(), C_certified_horizon=p.N_cert),
        "verification.json": {"invariants": inv, "bounds": reports},
    }
    return {}, docs, flags


def _weights(cfg):
    if not cfg.weights:
        raise ValidationError("the weights subcommand needs a non-empty 'weights' section")
    tables, summary = {}, []
    for ws in cfg.weights:
        prof = besicovitch_profile(ws.sequence, ws.p, ws.checkpoints, ws.subseq)
        tables[f"weights_{ws.name}.csv"] = (WEIGHTS_HEADER, [(n, _fmt(v)) for n, v in prof])
        N = ws.checkpoints[-1]
        summary.append(
            {
                "name": ws.name,
                "sequence": ws.sequence.to_json(),
                "p": ws.p,
                "subseq": ws.subseq.to_json() if ws.subseq else None,
                "estimate": prof[-1][1],
                "cesaro_abs_mean": cesaro_abs_mean(ws.sequence, N),
                "sup_abs": float(np.max(np.abs(eval_weights(ws.sequence, N)))),
            }
        )
    return tables, {"weights.json": {"sequences": summary}}, {}


def _check(cfg):
    """Invariant suites of every module the config touches."""
    p = cfg.problem
    suites = {}

    ops = []
    for name, op in p._named():
        l1, linf = op.norms
        ops.append({"name": name, "norm_l1": l1, "norm_linf": linf})
    suites["operators"] = {"ok": True, "norms": ops}

    jd = []
    jd_ok = True
    for i, T in enumerate(p.T):
        s = spectral_split(T, cfg.unimodular_tol)
        v = verify_split(T, s, trials=4, N=1024, seed=cfg.seed % 2**32)
        jd_ok = jd_ok and v.passed
        jd.append(dict(v.to_json(), name=f"T{i + 1}"))
    suites["jdlg"] = {"ok": jd_ok, "operators": jd}

    # engine: oracle equivalence at naive-feasible horizons, linearity, contractivity
    pc = certify_joint_bound(p, N_cert=4 * p.d)
    rng = np.random.default_rng(cfg.seed)
    g = rng.normal(size=p.d) + 1j * rng.normal(size=p.d)
    fv = cfg.f.values
    eng = {"oracle": [], "linearity": [], "contractivity": []}
    eng_ok = True
    N = 1
    while N <= 8 and N**p.k * p.m <= cfg.naive_budget:
        ref = naive_average(p, fv, N, cfg.polys if cfg.variant == "polynomial" else None, cfg.naive_budget).values
        if cfg.variant == "polynomial":
            got = polynomial_entangled_average(p, fv, cfg.polys, N, memory_cap=cfg.memory_cap).values
        else:
            got = entangled_average(p, fv, N, memory_cap=cfg.memory_cap).values
        rel = float(np.abs(got - ref).max() / max(1.0, np.abs(ref).max()))
        lin = float(
            np.abs(
                entangled_average(p, 2 * fv - 3j * g, N).values
                - 2 * entangled_average(p, fv, N).values
                + 3j * entangled_average(p, g, N).values
            ).max()
        )
        bound = contractivity_bound(pc, fv)
        lhs = norm_inf(entangled_average(pc, fv, N))
        eng["oracle"].append({"N": N, "rel_err": rel})
        eng["linearity"].append({"N": N, "err": lin})
        eng["contractivity"].append({"N": N, "linf": lhs, "bound": bound, "C": pc.C})
        eng_ok = eng_ok and rel <= cfg.oracle_tol and lin <= cfg.oracle_tol * max(1.0, np.abs(fv).max()) * 10
        eng_ok = eng_ok and lhs <= bound * (1 + 1e-12)
        N *= 2
    suites["engine"] = dict(eng, ok=eng_ok)

    if cfg.splitting is not None:
        s = cfg.splitting
        ps = certify_joint_bound(p, N_cert=s["N_cert"])
        tree = build_splitting_tree(ps, cfg.f, s["eps"], s["variant"], s["N_orbit"], s["lp"])
        inv = tree.check_invariants(ps)
        rep = verify_proof_bounds(tree, ps, cfg.f, s["horizons"][0], workers=cfg.workers)
        ok = inv["ok"] and rep["decomposition_err"] <= 1e-9 and rep.get("holds", True)
        suites["splitting"] = {"ok": bool(ok), "invariants": inv, "bounds": rep}

    if cfg.weights:
        rows = []
        ok = True
        for ws in cfg.weights:
            N = ws.checkpoints[-1]
            est = besicovitch_profile(ws.sequence, ws.p, [N], ws.subseq)[0][1]
            top = ws.subseq(N) if ws.subseq else N
            dom = float(np.max(np.abs(eval_weights(ws.sequence, max(top, N)))))
            good = est <= dom * (1 + 1e-12)
            ok = ok and good
            rows.append({"name": ws.name, "estimate": est, "sup_abs": dom, "dominated": good})
        suites["weights"] = {"ok": ok, "sequences": rows}

    flags = {name: bool(s["ok"]) for name, s in suites.items()}
    return {}, {"check.json": suites}, flags


_RUNNERS = {
    "simulate": _simulate,
    "decompose": _decompose,
    "split": _split,
    "weights": _weights,
    "check": _check,
}


# ---------------------------------------------------------------- orchestration


def run(cfg, subcommand, out=None, force=False):
    """Execute ``subcommand`` on a loaded config and return its manifest.

    With ``out`` set, everything is exported to ``<out>/<config-hash>/``.
    """
    if subcommand not in _RUNNERS:
        raise ValidationError(f"unknown subcommand {subcommand!r}; choose from {', '.join(SUBCOMMANDS)}")
    doc = cfg.run_document(subcommand)
    h = config_hash(doc)
    target = None
    if out is not None:
        target = os.path.join(out, h)
        if os.path.exists(os.path.join(target, "manifest.json")) and not force:
            raise OutputExistsError(f"{target} already holds results for this config; pass --force to overwrite")
    t0 = time.perf_counter()
    tables, documents, flags = _RUNNERS[subcommand](cfg)
    wall = time.perf_counter() - t0
    documents = dict(documents)
    documents["config.json"] = doc
    files = {name: name for name in list(tables) + list(documents)}
    manifest = ResultManifest(h, __version__, subcommand, cfg.seed, files, wall, flags, tables, documents)
    if target is not None:
        os.makedirs(target, exist_ok=True)
        export_results(manifest, "csv", target)
        export_results(manifest, "json", target)
    return manifest


def _write(path, text):
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(text)


def export_results(manifest, fmt, directory):
    """Write the manifest's CSV tables or JSON documents (plus ``manifest.json``)."""
    written = []
    try:
        if fmt == "csv":
            for name, (header, rows) in manifest.tables.items():
                lines = [",".join(header)] + [",".join(str(c) for c in r) for r in rows]
                path = os.path.join(directory, name)
                _write(path, "\n".join(lines) + "\n")
                written.append(path)
        elif fmt == "json":
            for name, obj in manifest.documents.items():
                path = os.path.join(directory, name)
                _write(path, _dump(obj))
                written.append(path)
            path = os.path.join(directory, "manifest.json")
            _write(path, _dump(manifest.to_json()))
            written.append(path)
        else:
            raise ValidationError(f"unknown export format {fmt!r}; use 'csv' or 'json'")
    except OSError as exc:
        raise ValidationError(f"cannot write results to {directory}: {exc}") from exc
    return written


def read_manifest(directory):
    with open(os.path.join(directory, "manifest.json"), encoding="utf-8") as fh:
        return ResultManifest.from_json(json.load(fh))


def verify_manifest(directory):
    """Check that every listed file exists and parses and that the stored config hashes to the directory."""
    m = read_manifest(directory)
    problems = []
    for name in m.files.values():
        path = os.path.join(directory, name)
        if not os.path.isfile(path):
            problems.append(f"missing {name}")
            continue
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
        if name.endswith(".json"):
            try:
                json.loads(text)
            except json.JSONDecodeError as exc:
                problems.append(f"{name}: {exc}")
        elif name.endswith(".csv"):
            lines = text.splitlines()
            width = len(lines[0].split(",")) if lines else 0
            if not lines or any(len(l.split(",")) != width for l in lines):
                problems.append(f"{name}: ragged or empty CSV")
    with open(os.path.join(directory, m.files["config.json"]), encoding="utf-8") as fh:
        if config_hash(json.load(fh)) != m.config_hash:
            problems.append("stored config does not match the config hash")
    return problems


def _parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", required=True, help="experiment config (JSON)")
    common.add_argument("--out", default="results", help="results root directory (default: results)")
    common.add_argument("--seed", type=int, default=None, help="unsigned 64-bit run seed (overrides the config)")
    common.add_argument("--force", action="store_true", help="overwrite an existing result directory")
    parser = argparse.ArgumentParser(prog="entangled-ergodic", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="subcommand", required=True)
    helps = {
        "simulate": "averages at each checkpoint, written as a trajectory CSV",
        "decompose": "reversible/stable split of every T",
        "split": "splitting tree and numerical check of its bounds",
        "weights": "Besicovitch seminorm profiles of the configured weights",
        "check": "invariant suites of every module the config touches",
    }
    for name in SUBCOMMANDS:
        sub.add_parser(name, parents=[common], help=helps[name])
    return parser


def main(argv=None):
    args = _parser().parse_args(argv)
    try:
        cfg = load_config(args.config, args.seed)
        manifest = run(cfg, args.subcommand, args.out, args.force)
    except BudgetError as exc:
        print(f"budget error: {exc}", file=sys.stderr)
        return 2
    except (ValidationError, DefectiveSpectrumError) as exc:
        print(f"validation error: {exc}", file=sys.stderr)
        return 1
    except EntangledError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    directory = os.path.join(args.out, manifest.config_hash)
    print(os.path.join(directory, "manifest.json"))
    failed = [k for k, v in manifest.flags.items() if not v]
    if failed:
        print(f"failed: {', '.join(failed)}", file=sys.stderr)
        if args.subcommand == "check":
            return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
