"""Command-line runner: JSON experiment configs in, JSON/CSV reports out.

    afpp run config.json [--out DIR] [--seed N] [--budget N] [--format json|csv]
    afpp gallery list

A config is ``{"kind": ..., "payload": {...}}`` with optional ``seed``,
``budget`` and ``name``; a JSON list of configs runs as a batch. Every
config is validated before anything is computed.

Exit codes: 0 all expectations met, 2 invalid config, 3 budget exhausted,
4 an expectation failed.
"""

from __future__ import annotations

import argparse
import hashlib
import io
import json
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path

import jsonschema

from .brouwer import DEFAULT_CELL_BUDGET
from .dualpair import ConvexBody, Functional, SeminormFamily, SparsePoint, selfmap_from_json
from .ell1 import basis_constant, ell1_profile
from .engine import afp_sequence, approx_fixed_point, dyadic_functionals, ky_fan_fixed_point
from .errors import BudgetExceeded
from .gallery import cone_neighborhood, gallery_instance, list_gallery, verify_cone_coincidence

SCHEMA_VERSION = "afpp-report/1"
EXIT_OK, EXIT_INVALID, EXIT_BUDGET, EXIT_EXPECTATION = 0, 2, 3, 4
MAX_WORKERS = 4

# ---------------------------------------------------------------------------
# schemas

_NUM = {"type": "number"}
_POINT = {"type": "object", "required": ["entries"],
          "properties": {"entries": {"type": "array", "items": {
              "type": "array", "minItems": 2, "maxItems": 2,
              "prefixItems": [{"type": "integer", "minimum": 1}, _NUM]}}}}
_TAIL = {"type": "object", "required": ["kind"], "properties": {
    "kind": {"enum": ["zero", "constant", "periodic-signs"]},
    "value": _NUM, "scale": _NUM,
    "pattern": {"type": "array", "minItems": 1, "items": {"enum": [1, -1]}}}}
_FUNCTIONAL = {"type": "object", "properties": {
    "head": {"type": "array", "items": {"type": "array", "minItems": 2, "maxItems": 2}},
    "tail": _TAIL}}
_BODY = {"type": "object", "properties": {
    "generators": {"type": "array", "minItems": 1, "items": _POINT},
    "structure": {"type": "object", "required": ["kind"], "properties": {
        "kind": {"enum": ["hull", "simplex-face", "positive-cone-cap"]},
        "indices": {"type": "array", "minItems": 1, "items": {"type": "integer", "minimum": 1}},
        "bound": {"type": "number", "exclusiveMinimum": 0}}}},
    "anyOf": [{"required": ["generators"]},
              {"required": ["structure"],
               "properties": {"structure": {"required": ["indices"]}}}]}
_MAP = {"type": "object", "required": ["kind"], "properties": {
    "kind": {"enum": ["constant", "affine", "shift", "weighted-shift", "identity",
                      "composition"]}}}
_FAMILY = {"type": "object", "required": ["kind", "levels"], "properties": {
    "kind": {"enum": ["ell1-prefix", "sup-prefix", "functional-sup"]},
    "levels": {"type": "integer", "minimum": 1}}}
_POS = {"type": "number", "exclusiveMinimum": 0}

PAYLOADS = {
    "afp": {"type": "object", "required": ["body", "map", "functionals", "epsilon"],
            "properties": {"body": _BODY, "map": _MAP, "epsilon": _POS,
                           "functionals": {"type": "array", "minItems": 1,
                                           "items": _FUNCTIONAL}}},
    "afp-sequence": {"type": "object", "required": ["body", "map", "N"],
                     "properties": {"body": _BODY, "map": _MAP,
                                    "N": {"type": "integer", "minimum": 1, "maximum": 200},
                                    "enumeration": {"oneOf": [
                                        {"const": "dyadic"},
                                        {"type": "array", "items": _FUNCTIONAL}]}}},
    "kyfan": {"type": "object", "required": ["body", "map", "tol"],
              "properties": {"body": _BODY, "map": _MAP, "tol": _POS}},
    "ell1-profile": {"type": "object", "required": ["sequence", "family", "horizons"],
                     "properties": {
                         "sequence": {"oneOf": [
                             {"type": "object", "required": ["kind"],
                              "properties": {"kind": {"const": "canonical"}}},
                             {"type": "object", "required": ["kind", "points"],
                              "properties": {"kind": {"const": "explicit"},
                                             "points": {"type": "array", "items": _POINT}}}]},
                         "family": _FAMILY,
                         "horizons": {"type": "array", "minItems": 1,
                                      "items": {"type": "integer", "minimum": 1}},
                         "threshold": _POS,
                         "expect_decayed": {"type": "array", "items": {"type": "integer"}}}},
    "basis-constant": {"type": "object", "required": ["vectors", "norm"],
                       "properties": {
                           "vectors": {"type": "array", "minItems": 1, "items": _POINT},
                           "norm": {"oneOf": [
                               {"enum": ["l1", "sup", "l2"]},
                               {"type": "object", "required": ["functionals"],
                                "properties": {"functionals": {"type": "array", "minItems": 1,
                                                               "items": _FUNCTIONAL}}},
                               {"type": "object", "required": ["family", "level"],
                                "properties": {"family": _FAMILY,
                                               "level": {"type": "integer", "minimum": 1}}}]},
                           "method": {"enum": ["exact", "grid"]},
                           "expect": {"type": "object", "required": ["value"],
                                      "properties": {"value": _NUM, "atol": _NUM}}}},
    "cone-verify": {"type": "object", "required": ["center", "epsilon"],
                    "properties": {"center": _POINT, "epsilon": _POS,
                                   "samples": {"type": "integer", "minimum": 1}}},
    "gallery": {"type": "object", "required": ["name"],
                "properties": {"name": {"type": "string"}}},
}

CONFIG_SCHEMA = {
    "type": "object", "required": ["kind", "payload"],
    "properties": {"kind": {"enum": sorted(PAYLOADS)}, "payload": {"type": "object"},
                   "seed": {"type": "integer", "minimum": 0},
                   "budget": {"type": "integer", "minimum": 1},
                   "name": {"type": "string"}},
    "additionalProperties": False,
}

REFERENCES = {
    "afp": "approximate fixed point for finitely many test functionals",
    "afp-sequence": "approximate fixed points with a 1/n residual schedule",
    "kyfan": "fixed point on a compact convex hull via shrinking epsilon",
    "ell1-profile": "finite-horizon lower ell_1 estimates along a sequence",
    "basis-constant": "lower ell_1 constant of a finite family",
    "cone-verify": "positive-cone weak neighbourhood inside a norm ball",
    "gallery": "catalogued instance with its own check",
}


class ConfigInvalid(Exception):
    pass


def validate(config) -> None:
    """Raise ConfigInvalid unless ``config`` is well formed, including the
    parts that only the domain constructors can check."""
    try:
        jsonschema.validate(config, CONFIG_SCHEMA)
        jsonschema.validate(config["payload"], PAYLOADS[config["kind"]])
    except jsonschema.ValidationError as exc:
        raise ConfigInvalid(exc.message) from None
    try:
        _decode(config)
    except (ValueError, KeyError, TypeError) as exc:
        raise ConfigInvalid(f"{type(exc).__name__}: {exc}") from None


def _decode(config) -> dict:
    kind, p = config["kind"], config["payload"]
    out = {}
    if "body" in p:
        out["body"] = ConvexBody.from_json(p["body"])
        out["map"] = selfmap_from_json(p["map"], out["body"])
    if kind == "afp":
        out["functionals"] = [Functional.from_json(f) for f in p["functionals"]]
    elif kind == "afp-sequence":
        enum = p.get("enumeration", "dyadic")
        out["enumeration"] = ("dyadic" if enum == "dyadic"
                              else [Functional.from_json(f) for f in enum])
    elif kind == "ell1-profile":
        out["family"] = SeminormFamily.from_json(p["family"])
        if p["sequence"]["kind"] == "explicit":
            out["points"] = [SparsePoint.from_json(q) for q in p["sequence"]["points"]]
        h = p["horizons"]
        if any(b <= a for a, b in zip(h, h[1:])):
            raise ValueError("horizons must increase")
    elif kind == "basis-constant":
        out["vectors"] = [SparsePoint.from_json(v) for v in p["vectors"]]
        norm = p["norm"]
        if isinstance(norm, str):
            out["norm"] = norm
        elif "functionals" in norm:
            out["norm"] = [Functional.from_json(f) for f in norm["functionals"]]
        else:
            fam = SeminormFamily.from_json(norm["family"])
            if norm["level"] > fam.levels:
                raise ValueError("level beyond the family")
            out["norm"] = (fam, norm["level"])
    elif kind == "cone-verify":
        out["center"] = SparsePoint.from_json(p["center"])
        if not out["center"].is_nonnegative():
            raise ValueError("centre must be in the positive cone")
    elif kind == "gallery":
        gallery_instance(p["name"])
    return out


# ---------------------------------------------------------------------------
# execution


@dataclass
class Outcome:
    report: dict
    tables: dict = field(default_factory=dict)   # name -> csv text
    code: int = EXIT_OK


def _csv(header, rows) -> str:
    buf = io.StringIO()
    buf.write(",".join(header) + "\n")
    for r in rows:
        buf.write(",".join(repr(v) if isinstance(v, float) else str(v) for v in r) + "\n")
    return buf.getvalue()


def config_hash(config) -> str:
    blob = json.dumps(config, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode()).hexdigest()


def _execute(config, seed: int, budget: int | None) -> tuple[dict, dict, bool]:
    kind, p = config["kind"], config["payload"]
    d = _decode(config)
    cells = budget or DEFAULT_CELL_BUDGET
    tables = {}
    if kind == "afp":
        rep = approx_fixed_point(d["body"], d["map"], d["functionals"], p["epsilon"],
                                 cell_budget=cells)
        tables["residuals"] = _csv(["functional", "residual"], enumerate(rep.residuals, 1))
        return rep.to_json(), tables, max(rep.residuals) < p["epsilon"]
    if kind == "afp-sequence":
        enum = dyadic_functionals() if d["enumeration"] == "dyadic" else d["enumeration"]
        rep = afp_sequence(d["body"], d["map"], enum, p["N"], cell_budget=cells)
        N = p["N"]
        tables["residuals"] = _csv(["n", "i", "residual"],
                                   [(n, i, float(rep.residuals[n - 1, i - 1]))
                                    for n in range(1, N + 1) for i in range(1, n + 1)])
        return rep.to_json(), tables, rep.schedule_ok()
    if kind == "kyfan":
        rep = ky_fan_fixed_point(d["body"], d["map"], p["tol"], cell_budget=cells)
        res = {"point": rep.point.to_json(), "norm_residual": rep.norm_residual,
               "epsilon": rep.epsilon, "stages": rep.stages}
        return res, tables, rep.norm_residual <= p["tol"]
    if kind == "ell1-profile":
        seq = d.get("points")
        if seq is None:
            seq = [SparsePoint.basis(i) for i in range(1, p["horizons"][-1] + 1)]
        prof = ell1_profile(seq, d["family"], p["horizons"],
                            threshold=p.get("threshold", 0.01))
        tables["profile"] = prof.csv()
        ok = all(prof.level_verdict(k) == "decayed" for k in p.get("expect_decayed", []))
        return prof.to_json(), tables, ok
    if kind == "basis-constant":
        res = basis_constant(d["vectors"], d["norm"], method=p.get("method", "exact"))
        exp = p.get("expect")
        ok = exp is None or abs(res.value - exp["value"]) <= exp.get("atol", 1e-9)
        return res.to_json(), tables, ok
    if kind == "cone-verify":
        nb = cone_neighborhood(d["center"], p["epsilon"])
        ver = verify_cone_coincidence(nb, p.get("samples", 1000), seed=seed,
                                      max_draws=budget)
        return {"neighborhood": nb.to_json(), **ver.to_json()}, tables, ver.passed
    inst = gallery_instance(p["name"])
    chk = inst.check()
    return {"instance": inst.describe(), "details": chk.details}, tables, chk.passed


def run_one(config, seed: int | None = None, budget: int | None = None) -> Outcome:
    seed = config.get("seed", 0) if seed is None else seed
    budget = config.get("budget") if budget is None else budget
    report = {"schema": SCHEMA_VERSION, "kind": config["kind"],
              "name": config.get("name", config["kind"]),
              "config_hash": config_hash(config), "seed": seed, "budget": budget,
              "reference": REFERENCES[config["kind"]],
              "timestamp": datetime.now(timezone.utc).isoformat()}
    try:
        result, tables, ok = _execute(config, seed, budget)
    except BudgetExceeded as exc:
        report.update(status="budget-exhausted", error=str(exc),
                      best_residual=None if exc.residual is None else float(exc.residual))
        return Outcome(report, {}, EXIT_BUDGET)
    report.update(status="ok" if ok else "expectation-failed", expectation_met=bool(ok),
                  result=result)
    return Outcome(report, tables, EXIT_OK if ok else EXIT_EXPECTATION)


def run_batch(configs, seed=None, budget=None, workers: int = MAX_WORKERS) -> list[Outcome]:
    for c in configs:
        validate(c)
    with ThreadPoolExecutor(max_workers=max(1, min(workers, len(configs)))) as pool:
        return list(pool.map(lambda c: run_one(c, seed, budget), configs))


def batch_code(outcomes) -> int:
    codes = {o.code for o in outcomes}
    for c in (EXIT_BUDGET, EXIT_EXPECTATION):
        if c in codes:
            return c
    return EXIT_OK


def strip_timestamps(report):
    if isinstance(report, list):
        return [strip_timestamps(r) for r in report]
    return {k: v for k, v in report.items() if k != "timestamp"}


def _dump(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True, allow_nan=True) + "\n"


def _write(outcomes, out: Path, batch: bool):
    out.mkdir(parents=True, exist_ok=True)
    reports = [o.report for o in outcomes]
    (out / "report.json").write_text(_dump(reports if batch else reports[0]))
    for k, o in enumerate(outcomes):
        prefix = f"{k:03d}-" if batch else ""
        for name, text in o.tables.items():
            (out / f"{prefix}{name}.csv").write_text(text)


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(prog="afpp", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)
    r = sub.add_parser("run", help="run an experiment config (or a list of them)")
    r.add_argument("config", type=Path)
    r.add_argument("--out", type=Path)
    r.add_argument("--seed", type=int)
    r.add_argument("--budget", type=int)
    r.add_argument("--format", choices=["json", "csv"], default="json")
    g = sub.add_parser("gallery", help="gallery catalog")
    g.add_argument("action", choices=["list"])
    args = ap.parse_args(argv)

    if args.command == "gallery":
        for entry in list_gallery():
            print(f"{entry['name']}\n  reference: {entry['reference']}\n"
                  f"  expectation: {entry['expectation']}")
            if entry["notes"]:
                print(f"  notes: {entry['notes']}")
        return EXIT_OK

    if args.seed is not None and args.seed < 0:
        print("error: seed must be nonnegative", file=sys.stderr)
        return EXIT_INVALID
    try:
        raw = json.loads(args.config.read_text())
    except (OSError, json.JSONDecodeError) as exc:
        print(f"error: cannot read config: {exc}", file=sys.stderr)
        return EXIT_INVALID
    batch = isinstance(raw, list)
    configs = raw if batch else [raw]
    try:
        outcomes = run_batch(configs, args.seed, args.budget)
    except ConfigInvalid as exc:
        print(f"error: invalid config: {exc}", file=sys.stderr)
        return EXIT_INVALID
    if args.out:
        _write(outcomes, args.out, batch)
    if args.format == "json":
        reports = [o.report for o in outcomes]
        sys.stdout.write(_dump(reports if batch else reports[0]))
    else:
        for o in outcomes:
            for text in o.tables.values():
                sys.stdout.write(text)
    return batch_code(outcomes)


if __name__ == "__main__":
    sys.exit(main())
