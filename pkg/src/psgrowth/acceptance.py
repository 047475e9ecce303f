"""The acceptance suite: nine executable criteria covering the optimality
family, the growth bounds, ping-pong exactness, reduced-product equations,
tree approximation, reduction certificates, geometry laws, energy
minimization, and report determinism.

Each criterion returns a CriterionResult; `verify_all` runs them in order
and assembles a canonical JSON-ready report.  The same functions back
tests/test_acceptance.py and the CLI's `verify-all` command.
"""

from __future__ import annotations

import json
import random
import time
from dataclasses import dataclass, field
from typing import Callable

from .energy import Mode, energy_at, minimize_energy
from .growth import (
    diffuse_pipeline,
    exponent_fit,
    growth_report,
    theorem_alpha,
)
from .hypgeom import translation_length
from .periodicity import PeriodCertificate, extract_period_from_equations, pingpong_certify
from .reduction import certify_cross_products, reduce_tree
from .spaces import FiniteHypGraph, FreeGroupTree, FreeProductTree
from .treeapprox import approximate_tree, distortion_report
from .words import ElementSet, GroupElement, parse, safin_family


@dataclass
class CriterionResult:
    number: int
    name: str
    passed: bool
    details: dict = field(default_factory=dict)
    elapsed: float = 0.0

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return f"ACCEPTANCE {self.number} [{status}] {self.name} ({self.elapsed:.1f}s)"

    def as_dict(self) -> dict:
        return {
            "number": self.number,
            "name": self.name,
            "passed": self.passed,
            "details": self.details,
        }


def _timed(fn: Callable[[], tuple[bool, dict]], number: int, name: str) -> CriterionResult:
    start = time.monotonic()
    passed, details = fn()
    return CriterionResult(number, name, passed, details, time.monotonic() - start)


def _random_word(rng: random.Random, ctx, length: int) -> GroupElement:
    letters = []
    prev = None
    for _ in range(length):
        while True:
            g = rng.randrange(ctx.rank)
            s = rng.choice((1, -1))
            if prev != (g, -s):
                break
        letters.append((g, s))
        prev = (g, s)
    el = ctx.identity()
    for g, s in letters:
        el = el * GroupElement(ctx, ((g, s),))
    return el


def _random_connected_graph(rng: random.Random, n_max: int = 40) -> FiniteHypGraph:
    n = rng.randint(4, n_max)
    edges = set()
    order = list(range(n))
    rng.shuffle(order)
    for i in range(1, n):
        j = rng.choice(order[:i])
        edges.add((min(order[i], j), max(order[i], j)))
    for _ in range(rng.randint(0, n)):
        i, j = rng.randrange(n), rng.randrange(n)
        if i != j:
            edges.add((min(i, j), max(i, j)))
    return FiniteHypGraph(n, edges)


# ---------------------------------------------------------------------------
# 1. optimality family exponent


def criterion_1(budget: int = 10_000_000) -> CriterionResult:
    def run():
        tree = FreeGroupTree(2)
        fam = lambda N: safin_family(tree.context, N)
        rows = {}
        ok = True
        for n in (1, 2, 3, 4, 5):
            N_range = [4, 8, 16, 32] if n <= 3 else [2, 4, 8]
            slope, counts = exponent_fit(tree, fam, n, N_range, budget)
            target = (n + 1) // 2
            within = abs(slope - target) <= 0.25
            ok = ok and within
            rows[n] = {
                "counts": counts,
                "slope": round(slope, 4),
                "target": target,
                "within_band": within,
            }
        return ok, {"per_n": rows}

    res = _timed(run, 1, "optimality family exponent fit")
    res.passed = res.passed and res.elapsed < 60
    res.details["runtime_target_s"] = 60
    return res


# ---------------------------------------------------------------------------
# 2. paper-mode growth bound on the default tree suite


def default_tree_suite() -> list[tuple]:
    """(space, U, n_max) instances for the paper-mode bound check."""
    f2 = FreeGroupTree(2)
    z57 = FreeProductTree((5, 7))
    rng = random.Random(225)
    random_sets = []
    for size in (6, 12):
        members = set()
        while len(members) < size:
            members.add(_random_word(rng, f2.context, rng.randint(1, 6)))
        random_sets.append(ElementSet(f2.context, members))
    a = f2.context.generator(0)
    suite = [
        (f2, ElementSet.from_strings(f2.context, ["a", "b"]), 4),
        (f2, safin_family(f2.context, 2), 3),
        (f2, safin_family(f2.context, 4), 3),
        (f2, ElementSet(f2.context, [a**k for k in range(4, 17)]
                        + [f2.context.generator(1)]), 3),
        (f2, random_sets[0], 3),
        (f2, random_sets[1], 3),
        (z57, ElementSet.from_strings(z57.context, ["ab", "ba", "aabb"]), 3),
        (z57, ElementSet.from_strings(z57.context, ["a", "b", "ab"]), 3),
    ]
    return suite


def criterion_2() -> CriterionResult:
    def run():
        from .growth import entropy_bound_holds

        rows = []
        ok = True
        for space, U, n_max in default_tree_suite():
            rep = growth_report(space, U, n_max, Mode.paper())
            alpha = theorem_alpha(space, U, Mode.paper())
            entropy_ok = rep.not_applicable is not None or entropy_bound_holds(
                rep.sizes, rep.alpha_used, len(U)
            )
            rows.append(
                {
                    "space": repr(space),
                    "u_size": len(U),
                    "sizes": {str(k): v for k, v in rep.sizes.items()},
                    "alpha": str(alpha),
                    "not_applicable": rep.not_applicable,
                    "violations": rep.violations,
                    "entropy_bound_ok": entropy_ok,
                }
            )
            ok = ok and not rep.violations and entropy_ok
        return ok, {"instances": rows}

    return _timed(run, 2, "paper-mode growth bound, zero violations")


# ---------------------------------------------------------------------------
# 3. ping-pong exactness


def pingpong_instances() -> list[dict]:
    f2 = FreeGroupTree(2)
    z57 = FreeProductTree((5, 7))
    out = []
    f2_specs = [
        ("ab", "b", (10, 20, 30)),
        ("ab", "b", (12, 24, 36, 48)),
        ("aab", "b", (8, 16, 24)),
        ("aB", "b", (10, 20, 30)),
        ("abb", "a", (6, 12, 18)),
        ("a", "b", (5, 10, 15)),
        ("a", "bab", (7, 14, 21)),
        ("ba", "a", (9, 18, 27)),
        ("aabb", "a", (4, 8, 12)),
        ("ab", "bbb", (11, 22, 33)),
    ]
    for root_s, t_s, powers in f2_specs:
        out.append({"space": f2, "root": root_s, "t": t_s, "powers": powers})
    z57_specs = [
        ("ab", "aa", (10, 20, 30)),
        ("ab", "aa", (6, 12, 18, 24)),
        ("aabb", "a", (5, 10, 15)),
        ("ab", "aaa", (8, 16, 24)),
        ("abb", "a", (7, 14, 21)),
        ("ab", "bb", (10, 20, 30)),
        ("aabbb", "b", (4, 8, 12)),
        ("ab", "aabb", (9, 18, 27)),
        ("abbb", "aa", (6, 12, 18)),
        ("aab", "bb", (5, 10, 15)),
    ]
    for root_s, t_s, powers in z57_specs:
        out.append({"space": z57, "root": root_s, "t": t_s, "powers": powers})
    return out


def criterion_3() -> CriterionResult:
    def run():
        rows = []
        ok = True
        for inst in pingpong_instances():
            space = inst["space"]
            root = parse(space.context, inst["root"])
            t = parse(space.context, inst["t"])
            V = ElementSet(space.context, [root**k for k in inst["powers"]])
            e_len = translation_length(space, root).translation_length
            a_val = min(inst["powers"]) * e_len / 10
            cert = pingpong_certify(
                space, V, root, t, 3, space.basepoint(), a_value=a_val
            )
            expected = {k: len(V) ** k for k in (1, 2, 3)}
            exact = {int(k): v for k, v in cert.counts.items()} == expected
            rows.append(
                {
                    "space": repr(space),
                    "root": inst["root"],
                    "t": inst["t"],
                    "certified": cert.certified,
                    "counts": {str(k): v for k, v in cert.counts.items()},
                    "exact": exact,
                }
            )
            ok = ok and cert.certified and exact
        return ok, {"instances": rows, "count": len(rows)}

    res = _timed(run, 3, "ping-pong exactness |(Vt)^n| = |V|^n")
    res.passed = res.passed and res.elapsed < 30
    res.details["runtime_target_s"] = 30
    return res


# ---------------------------------------------------------------------------
# 4. reduced-product equations


def criterion_4(count: int = 200, seed: int = 4040) -> CriterionResult:
    def run():
        tree = FreeGroupTree(2)
        ctx = tree.context
        rng = random.Random(seed)
        failures = []
        built = 0
        while built < count:
            root = _random_word(rng, ctx, rng.randint(2, 4))
            from .words import cyclic_reduce

            core, _ = cyclic_reduce(root)
            if core.word_length() != root.word_length():
                continue  # need a cyclically reduced root so 1 is on its axis
            i = rng.randint(1, 10)
            j = rng.randint(1, 10)
            if i == j:
                continue
            vp = rng.randint(40, 70)
            gp = vp + rng.randint(12, 25)
            conj = (
                _random_word(rng, ctx, rng.randint(0, 3))
                if built % 2
                else ctx.identity()
            )
            base = tree.act(conj, tree.basepoint())
            g = (root**gp).conjugate_by(conj)
            v = (root**vp).conjugate_by(conj)
            eqs = []
            for e in (i, j):
                u = (root**e).conjugate_by(conj)
                w_ = v.inverse() * u.inverse() * g
                eqs.append((u, v, w_))
            res = extract_period_from_equations(tree, eqs, base)
            built += 1
            if not isinstance(res, PeriodCertificate):
                failures.append({"root": str(root), "reason": res.reason})
                continue
            names = {
                "x0_in_connector_cylinder",
                "vx0_in_connector_cylinder",
                "junction_24delta",
                "junction_66delta",
                "junction_138delta",
            }
            bad = [
                c.as_dict()
                for c in res.checks
                if c.name in names and (c.lhs != 0 or not c.ok)
            ]
            if bad:
                failures.append({"root": str(root), "checks": bad})
        return not failures, {"pairs": built, "failures": failures}

    return _timed(run, 4, "reduced-product equations: exact membership and zero bounds")


# ---------------------------------------------------------------------------
# 5. tree approximation distortion


def criterion_5(count: int = 100, seed: int = 5050) -> CriterionResult:
    def run():
        rng = random.Random(seed)
        failures = []
        worst = 0.0
        for i in range(count):
            g = _random_connected_graph(rng, n_max=40)
            x0 = rng.randrange(g.n)
            k = rng.randint(2, min(12, g.n - 1))
            targets = rng.sample([v for v in range(g.n) if v != x0], k)
            approx = approximate_tree(g, x0, targets)
            rep = distortion_report(approx)
            if rep.expansion_found or not rep.ok:
                failures.append(
                    {"instance": i, "vertices": g.n, "report": rep.as_dict()}
                )
            if rep.bound_display:
                worst = max(worst, float(rep.max_shrink) / rep.bound_display)
        return not failures, {
            "graphs": count,
            "failures": failures,
            "worst_shrink_over_bound": round(worst, 4),
        }

    res = _timed(run, 5, "tree approximation distortion within 2*delta*(log2 n + 1)")
    res.passed = res.passed and res.elapsed < 120
    res.details["runtime_target_s"] = 120
    return res


# ---------------------------------------------------------------------------
# 6. reduction certification


def criterion_6(count: int = 50, seed: int = 6060) -> CriterionResult:
    def run():
        tree = FreeGroupTree(2)
        ctx = tree.context
        rng = random.Random(seed)
        failures = []
        rows = []
        for i in range(count):
            size = rng.randint(200, 2000)
            members = set()
            while len(members) < size:
                members.add(_random_word(rng, ctx, rng.randint(4, 12)))
            U = ElementSet(ctx, members)
            x0 = minimize_energy(tree, U).base_point
            res = reduce_tree(tree, U, x0, 1)
            entry = {
                "instance": i,
                "u_size": size,
                "u1": len(res.u1),
                "u2": len(res.u2),
                "branch": res.branch,
            }
            rows.append(entry)
            if res.failed or not res.certified or not res.cardinality_ok:
                failures.append(entry | {"reason": res.reason})
                continue
            ok, maxima = certify_cross_products(tree, res.u1, res.u2, x0, res.tolerance)
            if not ok:
                failures.append(entry | {"maxima": {k: str(v) for k, v in maxima.items()}})
        return not failures, {"instances": len(rows), "failures": failures}

    return _timed(run, 6, "reduction certificates: sizes >= |U|/100, products <= r")


# ---------------------------------------------------------------------------
# 7. geometry property suites


def criterion_7(seed: int = 7070) -> CriterionResult:
    def run():
        tree = FreeGroupTree(2)
        ctx = tree.context
        rng = random.Random(seed)
        checks = {"metric": 0, "four_point": 0, "conjugation": 0, "powers": 0, "oracle": 0}

        for _ in range(150):
            x, y, z = (_random_word(rng, ctx, rng.randint(0, 7)) for _ in range(3))
            if tree.dist(x, y) != tree.dist(y, x):
                return False, {"failed": "symmetry"}
            if tree.dist(x, z) > tree.dist(x, y) + tree.dist(y, z):
                return False, {"failed": "triangle"}
            if (tree.dist(x, y) == 0) != (x == y):
                return False, {"failed": "identity"}
            checks["metric"] += 1

        for _ in range(150):
            p, q, r_, x = (_random_word(rng, ctx, rng.randint(0, 7)) for _ in range(4))
            if tree.gromov_product(p, r_, x) < min(
                tree.gromov_product(p, q, x), tree.gromov_product(q, r_, x)
            ):
                return False, {"failed": "four_point"}
            checks["four_point"] += 1

        for _ in range(80):
            g = _random_word(rng, ctx, rng.randint(1, 6))
            h = _random_word(rng, ctx, rng.randint(0, 6))
            lg = translation_length(tree, g).translation_length
            if translation_length(tree, g.conjugate_by(h)).translation_length != lg:
                return False, {"failed": "conjugation", "g": str(g), "h": str(h)}
            checks["conjugation"] += 1
            for n in range(1, 6):
                if translation_length(tree, g**n).translation_length != n * lg:
                    return False, {"failed": "powers", "g": str(g), "n": n}
            checks["powers"] += 1

        # oracle equivalence on every g with |g| <= 6: [g] equals the
        # exhaustive minimum displacement over the radius-4 ball (which
        # contains an axis vertex since the conjugator has length <= 3)
        ball = [tree.basepoint()]
        for radius in range(1, 5):
            ball.extend(tree.sphere(tree.basepoint(), radius))
        frontier = [ctx.identity()]
        all_words = []
        for _ in range(6):
            nxt = []
            for w_ in frontier:
                for gi in range(2):
                    for s in (1, -1):
                        cand = w_ * GroupElement(ctx, ((gi, s),))
                        if cand.word_length() == w_.word_length() + 1:
                            nxt.append(cand)
            frontier = nxt
            all_words.extend(nxt)
        for g in all_words:
            expected = min(tree.dist(x, tree.act(g, x)) for x in ball)
            if translation_length(tree, g).translation_length != expected:
                return False, {"failed": "oracle", "g": str(g)}
            checks["oracle"] += 1
        return True, {"checks": checks, "oracle_words": len(all_words)}

    return _timed(run, 7, "geometry property suites 100% pass")


# ---------------------------------------------------------------------------
# 8. energy


def criterion_8(count: int = 50, seed: int = 8080) -> CriterionResult:
    def run():
        tree = FreeGroupTree(2)
        ctx = tree.context
        rng = random.Random(seed)
        for _ in range(count):
            members = set()
            size = rng.randint(3, 10)
            while len(members) < size:
                members.add(_random_word(rng, ctx, rng.randint(1, 7)))
            U = ElementSet(ctx, members)
            prof = minimize_energy(tree, U)
            base = tree.basepoint()
            hull = tree.hull_points(
                [base, prof.base_point] + [tree.act(u, base) for u in U]
            )
            probes = hull if len(hull) <= 100 else rng.sample(hull, 100)
            for x in probes:
                if prof.energy > energy_at(tree, U, x):
                    return False, {"failed": "probe_beat_minimizer", "probe": str(x)}

        z57 = FreeProductTree((5, 7))
        for k in range(10):
            g = _random_word_fp(rng, z57)
            U = ElementSet(
                z57.context,
                {
                    (z57.context.generator(0) ** e).conjugate_by(g)
                    for e in range(1, rng.randint(2, 5))
                },
            )
            prof = minimize_energy(z57, U)
            if prof.energy != 0 or prof.displacement != 0:
                return False, {"failed": "elliptic_energy_nonzero", "conj": str(g)}
        return True, {"random_sets": count, "elliptic_sets": 10}

    return _timed(run, 8, "energy: minimizer beats probes; elliptic sets at zero")


def _random_word_fp(rng: random.Random, space: FreeProductTree) -> GroupElement:
    text = ""
    for _ in range(rng.randint(1, 3)):
        text += "a" * rng.randint(1, 4) + "b" * rng.randint(1, 6)
    return parse(space.context, text)


# ---------------------------------------------------------------------------
# 9. determinism


def _standard_report(seed: int) -> bytes:
    """A fixed pipeline whose serialized output must be reproducible."""
    tree = FreeGroupTree(2)
    ctx = tree.context
    rng = random.Random(seed)
    members = set()
    while len(members) < 40:
        members.add(_random_word(rng, ctx, rng.randint(4, 9)))
    U = ElementSet(ctx, members)
    rep = growth_report(tree, U, 3, Mode.practical(1, 1))
    x0 = minimize_energy(tree, U).base_point
    red = reduce_tree(tree, U, x0, 1)
    out = diffuse_pipeline(tree, U, Mode.practical(1, 1), n=3)
    payload = {
        "set": U.to_strings(),
        "growth": rep.as_dict(),
        "reduction": red.as_dict(),
        "diffuse": out.as_dict(),
    }
    return json.dumps(payload, sort_keys=True, indent=1).encode()


def criterion_9(seed: int = 9090) -> CriterionResult:
    def run():
        first = _standard_report(seed)
        second = _standard_report(seed)
        return first == second, {"bytes": len(first), "identical": first == second}

    return _timed(run, 9, "byte-identical reports for identical seeds")


ALL_CRITERIA = [
    criterion_1,
    criterion_2,
    criterion_3,
    criterion_4,
    criterion_5,
    criterion_6,
    criterion_7,
    criterion_8,
    criterion_9,
]


def verify_all(echo: bool = True) -> tuple[list[CriterionResult], bool]:
    results = []
    for fn in ALL_CRITERIA:
        res = fn()
        results.append(res)
        if echo:
            print(res.line())
    return results, all(r.passed for r in results)
