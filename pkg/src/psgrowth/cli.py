"""Batch front-end: experiment configs in, JSON/CSV reports out.

Exit codes: 0 success, 2 certified-bound violation, 3 budget truncation,
4 config error.  Reports embed the full config echo and are byte-identical
across runs for identical configs and seeds.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from fractions import Fraction
from pathlib import Path

import jsonschema

from . import acceptance
from .energy import Mode, classify, minimize_energy
from .growth import concentrated_pipeline, diffuse_pipeline, growth_report
from .periodicity import Refusal, is_biperiodic, is_periodic, pingpong_certify
from .reduction import median_split, reduce_graph, reduce_tree, reduce_via_tree_approx
from .spaces import FiniteHypGraph, FreeGroupTree, FreeProductTree, load_graph
from .treeapprox import approximate_tree, distortion_report
from .words import (
    BudgetExceededError,
    ElementSet,
    GroupElement,
    parse,
    safin_counts,
    safin_family,
)

EXIT_OK = 0
EXIT_BOUND_VIOLATION = 2
EXIT_BUDGET = 3
EXIT_CONFIG = 4

_RATIONAL = {"type": "string", "pattern": r"^-?\d+(/\d+)?$"}

CONFIG_SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "required": ["space", "command"],
    "properties": {
        "command": {
            "enum": [
                "growth",
                "energy",
                "reduce",
                "period",
                "pingpong",
                "treeapprox",
                "verify-all",
            ]
        },
        "space": {
            "type": "object",
            "additionalProperties": False,
            "required": ["backend"],
            "properties": {
                "backend": {"enum": ["free_group", "free_product", "graph"]},
                "rank": {"type": "integer", "minimum": 1, "maximum": 26},
                "orders": {
                    "type": "array",
                    "items": {"type": ["integer", "null"], "minimum": 2},
                    "minItems": 2,
                    "maxItems": 2,
                },
                "rho0": _RATIONAL,
                "kappa0": _RATIONAL,
                "n0": {"type": "integer", "minimum": 1},
                "graph": {
                    "type": "object",
                    "additionalProperties": False,
                    "required": ["vertices", "edges"],
                    "properties": {
                        "vertices": {"type": "integer", "minimum": 1},
                        "edges": {"type": "array"},
                        "generators": {"type": "array"},
                    },
                },
            },
        },
        "set": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "kind": {"enum": ["explicit", "safin", "random"]},
                "elements": {"type": "array", "items": {"type": "string"}},
                "n_big": {"type": "integer", "minimum": 1},
                "count": {"type": "integer", "minimum": 1},
                "max_length": {"type": "integer", "minimum": 1},
            },
        },
        "mode": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "name": {"enum": ["paper", "practical"]},
                "concentration_threshold": _RATIONAL,
                "displacement_floor": _RATIONAL,
            },
        },
        "n_max": {"type": "integer", "minimum": 1},
        "seed": {"type": "integer"},
        "budget": {"type": "integer", "minimum": 1},
        "reduce": {
            "type": "object",
            "additionalProperties": False,
            "properties": {"r": _RATIONAL},
        },
        "period": {
            "type": "object",
            "additionalProperties": False,
            "properties": {"root": {"type": "string"}, "threshold": _RATIONAL},
        },
        "pingpong": {
            "type": "object",
            "additionalProperties": False,
            "required": ["root", "t"],
            "properties": {
                "root": {"type": "string"},
                "t": {"type": "string"},
                "powers": {"type": "array", "items": {"type": "integer"}},
                "n": {"type": "integer", "minimum": 1},
                "a_value": _RATIONAL,
            },
        },
        "treeapprox": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "base": {"type": "integer", "minimum": 0},
                "targets": {"type": "array", "items": {"type": "integer"}},
            },
        },
    },
}


class ConfigError(Exception):
    pass


def _frac(s, default=None):
    if s is None:
        return default
    return Fraction(s)


def build_space(cfg: dict):
    section = cfg["space"]
    backend = section["backend"]
    rho0 = _frac(section.get("rho0"), Fraction(1))
    kappa0 = _frac(section.get("kappa0"))
    n0 = section.get("n0", 1)
    if backend == "free_group":
        if "rank" not in section:
            raise ConfigError("free_group needs 'rank'")
        return FreeGroupTree(section["rank"], rho0=rho0, kappa0=kappa0, N0=n0)
    if backend == "free_product":
        if "orders" not in section:
            raise ConfigError("free_product needs 'orders'")
        return FreeProductTree(section["orders"], rho0=rho0, kappa0=kappa0, N0=n0)
    if "graph" not in section:
        raise ConfigError("graph backend needs 'graph'")
    return load_graph(section["graph"], rho0=rho0, kappa0=kappa0, N0=n0)


def build_set(cfg: dict, space, seed: int) -> ElementSet:
    section = cfg.get("set")
    if section is None:
        raise ConfigError("this command needs a 'set'")
    kind = section.get("kind", "explicit")
    ctx = space.context
    if ctx is None:
        raise ConfigError("the graph has no group action; supply generators")
    if kind == "explicit":
        if "elements" not in section:
            raise ConfigError("explicit set needs 'elements'")
        return ElementSet.from_strings(ctx, section["elements"])
    if kind == "safin":
        if "n_big" not in section:
            raise ConfigError("safin set needs 'n_big'")
        return safin_family(ctx, section["n_big"])
    # random: uniform over reduced words of length <= max_length
    import random as _random

    count = section.get("count", 50)
    max_len = section.get("max_length", 6)
    rng = _random.Random(seed)
    if ctx.kind != "free":
        raise ConfigError("random sets are defined for free-group backends")
    k = ctx.rank
    weights = [(2 * k) * (2 * k - 1) ** (l - 1) for l in range(1, max_len + 1)]
    members = set()
    attempts = 0
    while len(members) < count:
        attempts += 1
        if attempts > 100 * count:
            raise ConfigError("random set generation stalled; lower 'count'")
        length = rng.choices(range(1, max_len + 1), weights=weights)[0]
        letters = []
        prev = None
        for _ in range(length):
            while True:
                g = rng.randrange(k)
                s = rng.choice((1, -1))
                if prev != (g, -s):
                    break
            letters.append((g, s))
            prev = (g, s)
        el = ctx.identity()
        for g, s in letters:
            el = el * GroupElement(ctx, ((g, s),))
        members.add(el)
    return ElementSet(ctx, members)


def build_mode(cfg: dict) -> Mode:
    section = cfg.get("mode", {"name": "paper"})
    if section.get("name", "paper") == "paper":
        return Mode.paper()
    return Mode.practical(
        _frac(section.get("concentration_threshold"), Fraction(1)),
        _frac(section.get("displacement_floor"), Fraction(0)),
    )


def _json_bytes(payload: dict) -> bytes:
    return (json.dumps(payload, sort_keys=True, indent=2) + "\n").encode()


def run_config(cfg: dict, out_dir: Path) -> int:
    command = cfg["command"]
    seed = cfg.get("seed", 0)
    budget = cfg.get("budget", 10_000_000)
    space = build_space(cfg)
    mode = build_mode(cfg)
    report: dict = {"config_echo": cfg, "command": command}
    exit_code = EXIT_OK
    sizes_rows: list[tuple] = []

    if command == "verify-all":
        results, all_ok = acceptance.verify_all(echo=True)
        report["criteria"] = [r.as_dict() for r in results]
        if not all_ok:
            exit_code = EXIT_BOUND_VIOLATION

    elif command == "growth":
        U = build_set(cfg, space, seed)
        n_max = cfg.get("n_max", 3)
        try:
            rep = growth_report(space, U, n_max, mode, budget)
        except BudgetExceededError:
            return EXIT_BUDGET
        report["growth"] = rep.as_dict()
        report["certificates"] = []
        if cfg.get("set", {}).get("kind") == "safin":
            report["safin_counts"] = safin_counts(cfg["set"]["n_big"])
            from .growth import exponent_fit
            from .words import safin_family as _fam

            slope, counts = exponent_fit(
                space, lambda N: _fam(space.context, N), min(n_max, 3), [2, 4, 8], budget
            )
            report["growth"]["exponent_fit"] = round(slope, 6)
            report["family_counts"] = {str(k): v for k, v in counts.items()}
        else:
            report["safin_counts"] = None
        if rep.profile is not None:
            report["profile"] = {
                "base_point": space.encode_point(rep.profile.base_point),
                "energy": str(rep.profile.energy),
                "displacement": str(rep.profile.displacement),
                "case": rep.profile.case.value if rep.profile.case else None,
            }
            from .energy import Case

            if rep.profile.case is Case.CONCENTRATED:
                out = concentrated_pipeline(
                    space, U, rep.profile.base_point, mode, n_max=n_max, budget=budget
                )
                report["pipeline"] = {"branch": "concentrated"} | out.as_dict()
                report["certificates"].append(out.as_dict())
            elif rep.profile.case is Case.DIFFUSE:
                out = diffuse_pipeline(space, U, mode, n=n_max, budget=budget)
                report["pipeline"] = {"branch": out.branch} | out.as_dict()
                report["certificates"].append(out.as_dict())
        sizes_rows = [
            (n, rep.sizes[n], str(rep.bounds[n])) for n in sorted(rep.sizes)
        ]
        if rep.violations:
            exit_code = EXIT_BOUND_VIOLATION
        elif rep.truncated:
            exit_code = EXIT_BUDGET

    elif command == "energy":
        U = build_set(cfg, space, seed)
        prof = classify(space, U, minimize_energy(space, U, mode), mode)
        report["profile"] = {
            "base_point": space.encode_point(prof.base_point),
            "energy": str(prof.energy),
            "displacement": str(prof.displacement),
            "d_factor": str(prof.d_factor),
            "case": prof.case.value,
            "mode": prof.mode_name,
        }

    elif command == "reduce":
        U = build_set(cfg, space, seed)
        prof = minimize_energy(space, U, mode)
        x0 = prof.base_point
        if isinstance(space, (FreeGroupTree, FreeProductTree)):
            r = _frac(cfg.get("reduce", {}).get("r"), space.rho0)
            res = reduce_tree(space, U, x0, r)
        elif space.delta == 0:
            res = reduce_graph(space, U, x0)
        else:
            res = reduce_via_tree_approx(space, U, x0)
        report["reduction"] = res.as_dict()
        if not res.failed:
            out1, out2 = median_split(space, res.u1, res.u2, x0)
            report["median_split"] = {"u1": out1.to_strings(), "u2": out2.to_strings()}
        report["base_point"] = space.encode_point(x0)

    elif command == "period":
        U = build_set(cfg, space, seed)
        x0 = space.basepoint()
        section = cfg.get("period", {})
        threshold = _frac(section.get("threshold"))
        if "root" in section:
            root = parse(space.context, section["root"])
            rows = []
            for v in U:
                res = is_periodic(space, v, root, x0, threshold)
                rows.append(
                    res.as_dict()
                    if isinstance(res, Refusal)
                    else res.as_dict()
                )
            report["period"] = rows
        else:
            res = is_biperiodic(space, U, x0, threshold)
            report["biperiodic"] = res.as_dict()

    elif command == "pingpong":
        section = cfg.get("pingpong")
        if section is None:
            raise ConfigError("pingpong needs a 'pingpong' section")
        root = parse(space.context, section["root"])
        t = parse(space.context, section["t"])
        powers = section.get("powers", [10, 20, 30])
        V = ElementSet(space.context, [root**k for k in powers])
        cert = pingpong_certify(
            space,
            V,
            root,
            t,
            section.get("n", 3),
            space.basepoint(),
            a_value=_frac(section.get("a_value")),
            budget=budget,
        )
        report["pingpong"] = cert.as_dict()
        if not cert.certified:
            exit_code = EXIT_BOUND_VIOLATION

    elif command == "treeapprox":
        if not isinstance(space, FiniteHypGraph):
            raise ConfigError("treeapprox needs the graph backend")
        section = cfg.get("treeapprox", {})
        base = section.get("base", 0)
        targets = section.get("targets") or [v for v in range(space.n) if v != base]
        approx = approximate_tree(space, base, targets)
        rep = distortion_report(approx)
        report["treeapprox"] = {
            "distortion": rep.as_dict(),
            "tree": approx.export(),
        }
        if not rep.ok:
            exit_code = EXIT_BOUND_VIOLATION

    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / "report.json").write_bytes(_json_bytes(report))
    if sizes_rows:
        with (out_dir / "sizes.csv").open("w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["n", "size", "bound"])
            writer.writerows(sizes_rows)
    return exit_code


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="psgrowth",
        description="product-set growth experiments on trees and hyperbolic graphs",
    )
    parser.add_argument("--config", required=True, help="experiment config JSON")
    parser.add_argument("--mode", choices=["paper", "practical"], help="override mode name")
    parser.add_argument("--budget", type=int, help="override enumeration budget")
    parser.add_argument("--seed", type=int, help="override RNG seed")
    parser.add_argument("--out", default="out", help="report directory")
    args = parser.parse_args(argv)

    try:
        cfg = json.loads(Path(args.config).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    try:
        jsonschema.validate(cfg, CONFIG_SCHEMA)
    except jsonschema.ValidationError as exc:
        print(f"config error: {exc.message}", file=sys.stderr)
        return EXIT_CONFIG

    if args.mode:
        cfg.setdefault("mode", {})["name"] = args.mode
    if args.budget is not None:
        cfg["budget"] = args.budget
    if args.seed is not None:
        cfg["seed"] = args.seed

    try:
        code = run_config(cfg, Path(args.out))
    except (ConfigError, ValueError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except BudgetExceededError as exc:
        print(f"budget exceeded: {exc}", file=sys.stderr)
        return EXIT_BUDGET
    print(f"report written to {Path(args.out) / 'report.json'}")
    return code


if __name__ == "__main__":
    sys.exit(main())
