"""Experiment configuration: JSON schema validation and eager construction.

Every operator is built and Dunford-Schwartz checked at load time, so a bad
descriptor fails with the descriptor's path in the message rather than as a
downstream NaN.  Components that need randomness and carry no explicit
``seed`` draw one from the run seed and their position in the document.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from importlib import resources

import jsonschema
import numpy as np

from .engine import DEFAULT_MEMORY_CAP, DEFAULT_NAIVE_BUDGET, EntangledProblem, EntanglementMap
from .errors import ValidationError
from .measure_space import FiniteMeasureSpace, Func
from .operators import (
    OperatorRep,
    cyclic_shift,
    identity,
    koopman_from_map,
    random_ds,
    volterra_discrete,
)
from .polynomial import PolynomialIndex
from .reference import fourier_mode
from . import weights as W

__all__ = [
    "ExperimentConfig",
    "WeightSpec",
    "load_config",
    "parse_config",
    "config_schema",
    "canonical_json",
    "config_hash",
]

U64_MAX = 2**64 - 1


def config_schema():
    with resources.files(__package__).joinpath("schema/config.schema.json").open() as fh:
        return json.load(fh)


def canonical_json(obj):
    """Key-sorted compact JSON; semantically equal documents give equal bytes."""
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), ensure_ascii=True, allow_nan=False)


def config_hash(doc):
    return hashlib.sha256(canonical_json(doc).encode()).hexdigest()


@dataclass
class WeightSpec:
    name: str
    sequence: W.WeightSequence
    p: float
    subseq: PolynomialIndex
    checkpoints: list


@dataclass
class ExperimentConfig:
    raw: dict
    seed: int
    space: FiniteMeasureSpace
    problem: EntangledProblem
    f: Func
    variant: str
    polys: list
    checkpoints: list
    workers: int
    naive_budget: int
    memory_cap: int
    unimodular_tol: float
    oracle_tol: float
    splitting: dict
    weights: list = field(default_factory=list)

    def run_document(self, subcommand):
        """The document whose hash names the output directory."""
        return {"config": self.raw, "seed": self.seed, "subcommand": subcommand}


class _Seeds:
    # deterministic per-path seeds derived from the run seed
    def __init__(self, seed):
        self.seed = seed

    def __call__(self, path):
        digest = hashlib.sha256(f"{self.seed}:{path}".encode()).digest()
        return int.from_bytes(digest[:8], "little")


def _complex(x):
    if isinstance(x, list):
        return complex(x[0], x[1])
    return complex(x)


def _complex_array(xs):
    return np.array([_complex(x) for x in xs], dtype=complex)


def _operator(desc, space, path, seeds):
    kind = desc["kind"]
    d = space.d
    try:
        if kind == "koopman":
            if "map" in desc:
                op = koopman_from_map(desc["map"], space)
            else:
                if not space.is_uniform():
                    raise ValidationError("a cyclic shift needs the uniform space")
                op = cyclic_shift(space, int(desc["shift"]))
        elif kind == "volterra":
            if desc.get("d", d) != d:
                raise ValidationError(f"d = {desc['d']} but the space has {d} atoms")
            op = volterra_discrete(d, space)
        elif kind == "matrix":
            if desc.get("d", d) != d:
                raise ValidationError(f"d = {desc['d']} but the space has {d} atoms")
            vals = _complex_array(desc["entries"])
            if vals.size != d * d:
                raise ValidationError(f"'entries' must hold {d * d} values, got {vals.size}")
            op = OperatorRep(vals.reshape(d, d), space)
        elif kind == "random_ds":
            seed = desc["seed"] if "seed" in desc else seeds(path)
            op = random_ds(d, seed, desc.get("variant", "doubly_stochastic"), space)
        elif kind == "identity":
            op = identity(space)
        else:
            terms = desc["terms"]
            op = None
            for i, t in enumerate(terms):
                term = _complex(t["coef"]) * _operator(t["op"], space, f"{path}.terms[{i}].op", seeds)
                op = term if op is None else op + term
    except ValidationError as exc:
        if str(exc).startswith(path):
            raise
        raise ValidationError(f"{path}: {exc}") from exc
    if "scale" in desc:
        op = _complex(desc["scale"]) * op
    return op


def _function(desc, space, path, seeds):
    kind = desc["kind"]
    if kind == "values":
        vals = _complex_array(desc["values"])
        if vals.size != space.d:
            raise ValidationError(f"{path}: {vals.size} values given for {space.d} atoms")
        return Func(vals, space)
    if kind == "random":
        rng = np.random.default_rng(desc["seed"] if "seed" in desc else seeds(path))
        v = rng.normal(size=space.d)
        if desc.get("complex", False):
            v = v + 1j * rng.normal(size=space.d)
        return Func(v, space)
    if kind == "fourier":
        return fourier_mode(space, int(desc.get("freq", 1)))
    return Func.constant(_complex(desc.get("value", 1.0)), space)


def _weight(desc, space, path, seeds):
    kind = desc["kind"]
    try:
        if kind == "trig_poly":
            return W.trig_poly(_complex_array(desc["b"]), _complex_array(desc["rho"]))
        if kind == "explicit":
            return W.explicit(_complex_array(desc["values"]))
        if kind == "product":
            return W.product(_weight(w, space, f"{path}.factors[{i}]", seeds) for i, w in enumerate(desc["factors"]))
        T = _operator(desc["T"], space, f"{path}.T", seeds)
        y = _function(desc["y"], space, f"{path}.y", seeds)
        phi = _function(desc["phi"], space, f"{path}.phi", seeds)
        return W.linear_sequence(T, y, phi, desc["tag"])
    except ValidationError as exc:
        if str(exc).startswith(path):
            raise
        raise ValidationError(f"{path}: {exc}") from exc


def _schema_error(err):
    where = "/".join(str(p) for p in err.absolute_path) or "<root>"
    return ValidationError(f"config field '{where}': {err.message}")


def parse_config(doc, seed=None):
    """Validate a config document and construct everything it references."""
    validator = jsonschema.Draft202012Validator(config_schema())
    errors = sorted(validator.iter_errors(doc), key=lambda e: list(e.absolute_path))
    if errors:
        raise _schema_error(errors[0])
    if seed is None:
        seed = doc.get("seed", 0)
    seed = int(seed)
    if not 0 <= seed <= U64_MAX:
        raise ValidationError(f"seed must be an unsigned 64-bit integer, got {seed}")
    seeds = _Seeds(seed)

    sp = doc["space"]
    name = sp.get("name", "X")
    space = FiniteMeasureSpace.uniform(sp["d"], name) if "d" in sp else FiniteMeasureSpace(sp["mu"], name)

    ops = doc["operators"]
    T = [_operator(o, space, f"operators.T[{i}]", seeds) for i, o in enumerate(ops["T"])]
    A = [_operator(o, space, f"operators.A[{i}]", seeds) for i, o in enumerate(ops.get("A", []))]
    ent = EntanglementMap(doc["alpha"], doc.get("k"))
    problem = EntangledProblem(T, A, ent)

    f = _function(doc.get("f", {"kind": "random"}), space, "f", seeds)

    variant = doc.get("variant", "plain")
    polys = None
    if "polynomials" in doc:
        polys = [PolynomialIndex(c) for c in doc["polynomials"]]
        if len(polys) != ent.k:
            raise ValidationError(f"polynomials: {len(polys)} given for k = {ent.k} variables")
    if variant == "polynomial" and polys is None:
        raise ValidationError("variant 'polynomial' needs 'polynomials'")

    cps = list(doc.get("checkpoints", [1, 4, 16, 64]))
    if any(b <= a for a, b in zip(cps, cps[1:])):
        raise ValidationError(f"checkpoints must be strictly increasing, got {cps}")

    budget = doc.get("budget", {})
    tol = doc.get("tolerances", {})

    splitting = None
    if "splitting" in doc:
        s = doc["splitting"]
        splitting = {
            "eps": float(s["eps"]),
            "variant": s.get("variant", "part2"),
            "horizons": list(s.get("horizons", [16, 64, 256])),
            "N_orbit": s.get("N_orbit"),
            "N_cert": int(s.get("N_cert", 4 * space.d)),
            "lp": float(s.get("lp", 2)),
        }

    weights = []
    for i, w in enumerate(doc.get("weights", [])):
        path = f"weights[{i}]"
        sub = PolynomialIndex(w["subseq"]) if "subseq" in w else None
        wcps = list(w.get("checkpoints", [16, 64, 256, 1024]))
        if any(b <= a for a, b in zip(wcps, wcps[1:])):
            raise ValidationError(f"{path}.checkpoints must be strictly increasing, got {wcps}")
        weights.append(
            WeightSpec(
                name=w.get("name", f"w{i}"),
                sequence=_weight(w["sequence"], space, f"{path}.sequence", seeds),
                p=float(w.get("p", 2)),
                subseq=sub,
                checkpoints=wcps,
            )
        )

    return ExperimentConfig(
        raw=doc,
        seed=seed,
        space=space,
        problem=problem,
        f=f,
        variant=variant,
        polys=polys,
        checkpoints=cps,
        workers=int(doc.get("workers", 1)),
        naive_budget=int(budget.get("naive", DEFAULT_NAIVE_BUDGET)),
        memory_cap=int(budget.get("memory_cap", DEFAULT_MEMORY_CAP)),
        unimodular_tol=float(tol.get("unimodular", 1e-8)),
        oracle_tol=float(tol.get("oracle", 1e-10)),
        splitting=splitting,
        weights=weights,
    )


def load_config(path, seed=None):
    """Read, validate and construct a config file."""
    try:
        with open(path, encoding="utf-8") as fh:
            doc = json.load(fh)
    except FileNotFoundError as exc:
        raise ValidationError(f"config file not found: {path}") from exc
    except json.JSONDecodeError as exc:
        raise ValidationError(f"config file {path} is not valid JSON: {exc}") from exc
    return parse_config(doc, seed)
