"""Periodic elements, bi-periodic sets, E-reduced decompositions, ping-pong
certificates, and separation inside a maximal loxodromic subgroup.

An element v is E-periodic at x0 when x0 and v x0 both lie in the (fattened)
invariant cylinder of E and v translates along it further than the period
threshold (3*nu*[E] + A*delta + 10^7*delta in paper mode; on trees the
delta terms vanish, so paper mode is exact and usable at desk scale).

Certificates and refusals carry every checked inequality as
(name, lhs, rhs) triples; nothing is trusted from the construction.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

from .hypgeom import AxisData, Constants, axis_distance, translation_length
from .spaces import ActionSpace, FiniteHypGraph, FreeGroupTree, FreeProductTree
from .words import ElementSet, GroupElement, power_of, primitive_root


@dataclass(frozen=True)
class Check:
    name: str
    lhs: Fraction
    rhs: Fraction
    ok: bool

    def as_dict(self):
        return {"name": self.name, "lhs": str(self.lhs), "rhs": str(self.rhs), "ok": self.ok}


@dataclass(frozen=True)
class Refusal:
    reason: str
    checks: tuple = ()
    detail: str = ""

    def as_dict(self):
        return {
            "refused": self.reason,
            "detail": self.detail,
            "checks": [c.as_dict() for c in self.checks],
        }


@dataclass(frozen=True)
class PeriodCertificate:
    element: GroupElement
    period_root: GroupElement
    base_point: object
    slack: Fraction
    threshold: Fraction
    mode_name: str
    checks: tuple = ()

    def as_dict(self):
        return {
            "element": str(self.element),
            "period_root": str(self.period_root),
            "slack": str(self.slack),
            "threshold": str(self.threshold),
            "mode": self.mode_name,
            "checks": [c.as_dict() for c in self.checks],
        }


def _tree_like(space) -> bool:
    return isinstance(space, (FreeGroupTree, FreeProductTree))


def _normalized_root(space: ActionSpace, e_root: GroupElement) -> tuple[GroupElement, AxisData]:
    root, _ = primitive_root(e_root)
    axis = translation_length(space, root)
    if not axis.is_hyperbolic:
        raise ValueError("E_root must be hyperbolic")
    return root, axis


def _cylinder_distance(space, axis: AxisData, x) -> Fraction:
    if _tree_like(space):
        return axis_distance(space, axis, x)
    from .hypgeom import invariant_line_points

    line = invariant_line_points(space, axis)
    return min(space.dist(x, v) for v in line)


def period_threshold(space: ActionSpace, e_length: Fraction, threshold=None) -> Fraction:
    """3*nu*[E] + A*delta + 10^7*delta, or the practical override."""
    if threshold is not None:
        return Fraction(threshold)
    c = Constants.for_space(space)
    return 3 * c.nu * e_length + c.A * space.delta + 10**7 * space.delta


def is_periodic(
    space: ActionSpace, v: GroupElement, e_root: GroupElement, x0, threshold=None
):
    """Certify that v is E-periodic at x0, or refuse with the failed check."""
    root, axis = _normalized_root(space, e_root)
    margin = 190 * space.delta
    tval = period_threshold(space, axis.translation_length, threshold)
    mode = "paper" if threshold is None else "practical"

    d_x0 = _cylinder_distance(space, axis, x0)
    d_vx0 = _cylinder_distance(space, axis, space.act(v, x0))
    disp = space.dist(x0, space.act(v, x0))
    checks = (
        Check("x0_in_cylinder", d_x0, margin, d_x0 <= margin),
        Check("vx0_in_cylinder", d_vx0, margin, d_vx0 <= margin),
        Check("translation_exceeds_threshold", disp, tval, disp > tval),
    )
    if not all(c.ok for c in checks):
        return Refusal("not_periodic", checks, detail=str(v))
    return PeriodCertificate(v, root, x0, disp - tval, tval, mode, checks)


# ---------------------------------------------------------------------------
# equations u_0 v w_0 = u_1 v w_1 = ...


def extract_period_from_equations(
    space: ActionSpace,
    equations: Sequence[tuple[GroupElement, GroupElement, GroupElement]],
    x0,
    threshold=None,
    paper_mode: bool = False,
):
    """From equal products u_i v w_i with all junctions reduced at x0,
    recover the common maximal loxodromic subgroup of the u_i^-1 u_{i+1}
    and certify v periodic with that period.

    Checked hypotheses (refusal names the first violated one): equal
    products; junction reducedness; |v x0 - x0| > 26 delta; the symmetry
    bound |u_i x0 - u_j x0| <= |v x0 - x0|; distinct consecutive u_i; in
    paper mode additionally n >= 5 nu and consecutive spacing
    > A delta + 10^8 delta."""
    if len(equations) < 2:
        return Refusal("TooFewEquations", detail=f"got {len(equations)}")
    v = equations[0][1]
    if any(eq[1] != v for eq in equations):
        return Refusal("DifferentMiddleElements")

    products = [u * v * w_ for u, _, w_ in equations]
    if any(p != products[0] for p in products):
        return Refusal("ProductsNotEqual")

    delta = space.delta
    tol = delta  # reduced products: junction Gromov product <= delta
    vx0 = space.act(v, x0)
    disp_v = space.dist(x0, vx0)
    checks = [Check("v_moves_base", disp_v, 26 * delta, disp_v > 26 * delta)]
    if not checks[-1].ok:
        return Refusal("MiddleTooShort", tuple(checks))

    inv_v_x0 = space.act(v.inverse(), x0)
    for u, _, w_ in equations:
        pu = space.gromov_product(space.act(u.inverse(), x0), vx0, x0)
        checks.append(Check("uv_reduced", pu, tol, pu <= tol))
        pw = space.gromov_product(inv_v_x0, space.act(w_, x0), x0)
        checks.append(Check("vw_reduced", pw, tol, pw <= tol))
        if not (checks[-1].ok and checks[-2].ok):
            return Refusal("ProductsNotReduced", tuple(checks))

    us = sorted(
        (u for u, _, _ in equations),
        key=lambda u: (space.dist(x0, space.act(u, x0)), u.sort_key()),
    )
    pts = {u: space.act(u, x0) for u in us}
    for ui, uj in itertools.combinations(us, 2):
        gap = space.dist(pts[ui], pts[uj])
        checks.append(Check("symmetry_bound", gap, disp_v, gap <= disp_v))
        if not checks[-1].ok:
            return Refusal("SymmetryBoundViolated", tuple(checks))

    consecutive = list(zip(us, us[1:]))
    conn = [ui.inverse() * uj for ui, uj in consecutive]
    if any(h.is_identity for h in conn):
        return Refusal("DuplicateOuterElements", tuple(checks))

    if paper_mode:
        c = Constants.for_space(space)
        need_n = 5 * c.nu
        checks.append(
            Check("paper_equation_count", Fraction(len(equations)), need_n,
                  Fraction(len(equations)) >= need_n)
        )
        spacing_floor = c.A * delta + 10**8 * delta
        for ui, uj in consecutive:
            gap = space.dist(pts[ui], pts[uj])
            checks.append(Check("paper_spacing", gap, spacing_floor, gap > spacing_floor))
        if not all(c_.ok for c_ in checks):
            return Refusal("PaperHypothesesUnmet", tuple(checks))

    roots = []
    for h in conn:
        ax = translation_length(space, h)
        if not ax.is_hyperbolic:
            return Refusal("ConnectorNotHyperbolic", tuple(checks), detail=str(h))
        roots.append(primitive_root(h)[0])
    ref = roots[0]
    for r_ in roots[1:]:
        if r_ != ref and r_ != ref.inverse():
            return Refusal(
                "ConnectorsInDifferentSubgroups",
                tuple(checks),
                detail=f"{ref} vs {r_}",
            )

    # Prop (reduced products): x0 and v x0 lie in C_{u_i^-1 u_{i+1}}^{+190 delta},
    # and the three junction products obey 24/66/138 delta.
    margin = 190 * delta
    for (ui, uj), h in zip(consecutive, conn):
        ax = translation_length(space, h)
        d0 = _cylinder_distance(space, ax, x0)
        d1 = _cylinder_distance(space, ax, vx0)
        checks.append(Check("x0_in_connector_cylinder", d0, margin, d0 <= margin))
        checks.append(Check("vx0_in_connector_cylinder", d1, margin, d1 <= margin))
        p1 = space.gromov_product(x0, pts[uj], pts[ui])
        p2 = space.gromov_product(pts[ui], space.act(ui * v, x0), pts[uj])
        p3 = space.gromov_product(
            pts[uj], space.act(uj * v, x0), space.act(ui * v, x0)
        )
        checks.append(Check("junction_24delta", p1, 24 * delta, p1 <= 24 * delta))
        checks.append(Check("junction_66delta", p2, 66 * delta, p2 <= 66 * delta))
        checks.append(Check("junction_138delta", p3, 138 * delta, p3 <= 138 * delta))
    if not all(c_.ok for c_ in checks):
        return Refusal("ReducedProductBoundsFailed", tuple(checks))

    result = is_periodic(space, v, ref, x0, threshold)
    if isinstance(result, Refusal):
        return Refusal(
            "PeriodicityThresholdFailed", tuple(checks) + result.checks, detail=str(v)
        )
    return PeriodCertificate(
        v,
        result.period_root,
        x0,
        result.slack,
        result.threshold,
        result.mode_name,
        tuple(checks) + result.checks,
    )


# ---------------------------------------------------------------------------
# bi-periodic sets


@dataclass(frozen=True)
class BiPeriodicWitness:
    members: ElementSet
    e1_root: GroupElement
    e2_root: GroupElement
    coset_root: GroupElement
    coset_rep: GroupElement
    certificates: tuple = ()

    def as_dict(self):
        return {
            "members": self.members.to_strings(),
            "e1_root": str(self.e1_root),
            "e2_root": str(self.e2_root),
            "coset_root": str(self.coset_root),
            "coset_rep": str(self.coset_rep),
        }


def is_biperiodic(space: ActionSpace, V: ElementSet, x0, threshold=None):
    """Certify that V is bi-periodic at x0: every v is E1-periodic and every
    v^-1 is E2-periodic, and V lies in a single coset of <coset_root>."""
    members = list(V)
    if len(members) < 2:
        return Refusal("TooSmall", detail=f"|V| = {len(members)}")
    v1, v2 = members[0], members[1]
    d12 = v1 * v2.inverse()
    if d12.is_identity:
        return Refusal("DegenerateSet")
    e1_root, _ = primitive_root(d12)
    e2_candidate = v1.inverse() * v2
    if e2_candidate.is_identity:
        return Refusal("DegenerateSet")
    e2_root, _ = primitive_root(e2_candidate)

    certs = []
    for v in members:
        res = is_periodic(space, v, e1_root, x0, threshold)
        if isinstance(res, Refusal):
            return Refusal("MemberNotPeriodic", res.checks, detail=str(v))
        certs.append(res)
        res_inv = is_periodic(space, v.inverse(), e2_root, x0, threshold)
        if isinstance(res_inv, Refusal):
            return Refusal("InverseNotPeriodic", res_inv.checks, detail=str(v))
        certs.append(res_inv)

    for va, vb in itertools.combinations(members, 2):
        if power_of(va * vb.inverse(), e1_root) is None:
            return Refusal("PeriodMismatch", detail=f"{va} vs {vb}")

    rep = min(members, key=lambda v: (space.dist(x0, space.act(v, x0)), v.sort_key()))
    return BiPeriodicWitness(V, e1_root, e2_root, e1_root, rep, tuple(certs))


# ---------------------------------------------------------------------------
# E-reduced decomposition


def e_reduce(space: ActionSpace, t: GroupElement, e_root: GroupElement, x0):
    """Write t = e * t' * f with e, f in <root> and t' of minimal
    displacement at x0 (which must lie on the axis of the root).

    The power window is |p| <= displacement(t)/[E] + 2 in each variable;
    sufficiency is certified by checking the window boundary is
    nondecreasing (displacement is unimodal in each power on trees)."""
    root, axis = _normalized_root(space, e_root)
    if _cylinder_distance(space, axis, x0) != 0:
        raise ValueError("x0 must lie on the axis of the root")
    if power_of(t, root) is not None:
        return Refusal("InE", detail=str(t))

    e_len = axis.translation_length
    disp_t = space.dist(x0, space.act(t, x0))
    W = int(disp_t / e_len) + 2

    powers = {k: root**k for k in range(-W, W + 1)}

    def disp(p, q):
        cand = powers[-p] * t * powers[-q]
        return space.dist(x0, space.act(cand, x0))

    best = min(
        ((disp(p, q), abs(p) + abs(q), p, q) for p in range(-W, W + 1) for q in range(-W, W + 1)),
    )
    _, _, p_star, q_star = best
    if abs(p_star) >= W or abs(q_star) >= W:
        raise RuntimeError("e_reduce window certified insufficient; widen it")
    # boundary monotonicity in each variable
    assert disp(W, q_star) >= disp(W - 1, q_star)
    assert disp(-W, q_star) >= disp(-W + 1, q_star)
    assert disp(p_star, W) >= disp(p_star, W - 1)
    assert disp(p_star, -W) >= disp(p_star, -W + 1)

    e = powers[p_star]
    f = powers[q_star]
    t_prime = e.inverse() * t * f.inverse()
    assert e * t_prime * f == t
    return e, t_prime, f


def is_e_reduced(space: ActionSpace, t: GroupElement, e_root: GroupElement, x0) -> bool:
    res = e_reduce(space, t, e_root, x0)
    if isinstance(res, Refusal):
        return False
    e, t_prime, f = res
    return space.dist(x0, space.act(t_prime, x0)) == space.dist(x0, space.act(t, x0))


# ---------------------------------------------------------------------------
# ping pong


@dataclass(frozen=True)
class PingPongCertificate:
    certified: bool
    alpha: Fraction
    max_chain_product: Fraction
    min_step: Fraction
    counts: dict
    checks: tuple = ()
    reason: str = ""

    def as_dict(self):
        return {
            "certified": self.certified,
            "alpha": str(self.alpha),
            "max_chain_product": str(self.max_chain_product),
            "min_step": str(self.min_step),
            "counts": {str(k): v for k, v in sorted(self.counts.items())},
            "reason": self.reason,
            "checks": [c.as_dict() for c in self.checks],
        }


def _brute_force_counts(space, V_els, t, n_max, budget=200_000) -> dict:
    counts = {}
    words = [v * t for v in V_els]
    current = list(words)
    counts[1] = len(set(current))
    for n in range(2, n_max + 1):
        nxt = []
        for x in current:
            for w_ in words:
                nxt.append(x * w_)
                if len(nxt) > budget:
                    raise RuntimeError("ping pong brute force over budget")
        current = nxt
        counts[n] = len(set(current))
    return counts


def pingpong_certify(
    space: ActionSpace,
    V: ElementSet,
    e_root: GroupElement,
    t: GroupElement,
    n: int,
    x0,
    a_value=None,
    budget: int = 200_000,
):
    """Certify |(Vt)^k| = |V|^k for k <= n via the chain criterion of the
    proof, then verify the counts by brute-force enumeration.

    Hypotheses checked: V inside <root> with x0 on its axis; t E-reduced at
    x0; displacement and pairwise spacing >= 10a (paper a = 3 nu [E] +
    A delta + 10^5 delta, or the practical a_value); the chain Gromov
    products over the proof's step alphabet admit a positive margin alpha
    (>= 9 delta on graphs)."""
    root, axis = _normalized_root(space, e_root)
    members = list(V)
    checks = []

    if len(members) == 1:
        counts = _brute_force_counts(space, members, t, min(n, 4), budget)
        ok = all(c == 1 for c in counts.values())
        return PingPongCertificate(
            ok, Fraction(0), Fraction(0), Fraction(0), counts, (), "singleton"
        )

    d_x0 = _cylinder_distance(space, axis, x0)
    checks.append(Check("x0_on_axis", d_x0, Fraction(0), d_x0 == 0))
    if not checks[-1].ok:
        return PingPongCertificate(
            False, Fraction(0), Fraction(0), Fraction(0), {}, tuple(checks), "x0_off_axis"
        )

    for v in members:
        if power_of(v, root) is None:
            return PingPongCertificate(
                False,
                Fraction(0),
                Fraction(0),
                Fraction(0),
                {},
                tuple(checks),
                f"element {v} outside <root>",
            )

    reduced = is_e_reduced(space, t, root, x0)
    checks.append(Check("t_e_reduced", Fraction(int(reduced)), Fraction(1), reduced))
    if not reduced:
        return PingPongCertificate(
            False, Fraction(0), Fraction(0), Fraction(0), {}, tuple(checks), "t_not_e_reduced"
        )

    if a_value is None:
        c = Constants.for_space(space)
        a = 3 * c.nu * axis.translation_length + c.A * space.delta + 10**5 * space.delta
    else:
        a = Fraction(a_value)
    pts = {v: space.act(v, x0) for v in members}
    for v in members:
        disp = space.dist(x0, pts[v])
        checks.append(Check("spacing_from_base", disp, 10 * a, disp >= 10 * a))
    for va, vb in itertools.combinations(members, 2):
        gap = space.dist(pts[va], pts[vb])
        checks.append(Check("pairwise_spacing", gap, 10 * a, gap >= 10 * a))
    if not all(c_.ok for c_ in checks):
        return PingPongCertificate(
            False, Fraction(0), Fraction(0), Fraction(0), {}, tuple(checks), "spacing"
        )

    # chain step alphabet from the proof's point sequence
    diffs = [
        va * vb.inverse() for va, vb in itertools.permutations(members, 2)
    ]
    gamma_v = members
    gamma_all = members + diffs
    gamma_inv = [v.inverse() for v in members]
    t_inv = t.inverse()

    def prod(left_el, right_el):
        return space.gromov_product(
            space.act(left_el, x0), space.act(right_el, x0), x0
        )

    max_product = Fraction(0)
    # (first step v, then t g')
    for v in gamma_v:
        for g2 in gamma_all:
            max_product = max(max_product, prod(v.inverse(), t * g2))
    # (t g, t g')
    for g1 in gamma_all:
        left = g1.inverse() * t_inv
        for g2 in gamma_all:
            max_product = max(max_product, prod(left, t * g2))
    # (t g_mid, t^-1 g') at the turn
    for g1 in gamma_all:
        left = g1.inverse() * t_inv
        for g2 in gamma_inv:
            max_product = max(max_product, prod(left, t_inv * g2))
    # (t^-1 g, t^-1 g')
    for g1 in gamma_inv:
        left = g1.inverse() * t
        for g2 in gamma_inv:
            max_product = max(max_product, prod(left, t_inv * g2))

    steps = [space.dist(x0, pts[v]) for v in gamma_v]
    steps += [space.dist(x0, space.act(t * g, x0)) for g in gamma_all]
    steps += [space.dist(x0, space.act(t_inv * g, x0)) for g in gamma_inv]
    min_step = min(steps)

    if isinstance(space, FiniteHypGraph) and space.delta > 0:
        alpha = min_step / 2 - max_product - space.delta
        needed = 9 * space.delta
        certified = alpha >= needed
    else:
        alpha = min_step / 2 - max_product
        certified = alpha > 0
    checks.append(
        Check("chain_margin", max_product, min_step / 2, certified)
    )

    counts = _brute_force_counts(space, members, t, n, budget)
    expected = {k: len(members) ** k for k in counts}
    counts_ok = counts == expected
    if certified and not counts_ok:
        raise AssertionError(
            f"certified chain but counts disagree: {counts} vs {expected}"
        )
    return PingPongCertificate(
        certified and counts_ok,
        alpha,
        max_product,
        min_step,
        counts,
        tuple(checks),
        "" if certified else "chain_margin",
    )


# ---------------------------------------------------------------------------
# separation


def separate(space: ActionSpace, V: ElementSet, r: int, x0, e_root: GroupElement):
    """Subset V0 with displacements >= r[E] and pairwise displacement gaps
    >= r[E]: majority translation direction, then greedy power selection.

    Practical tree guarantee |V0| >= |V| / (2r + 1) (checked and reported
    by callers); refusal when the displacement filter leaves nothing."""
    if len(V) == 0:
        raise ValueError("V must be nonempty")
    if r < 1:
        raise ValueError("r must be >= 1")
    root, axis = _normalized_root(space, e_root)
    if _cylinder_distance(space, axis, x0) != 0:
        raise ValueError("x0 must lie on the axis of the root")
    powers = {}
    for v in V:
        k = power_of(v, root)
        if k is None:
            raise ValueError(f"{v} is not a power of the root")
        powers[v] = k

    pos = sorted((k, v) for v, k in powers.items() if k > 0)
    neg = sorted((-k, v) for v, k in powers.items() if k < 0)
    chosen_side = pos if len(pos) >= len(neg) else neg

    picked = []
    last_k = None
    for k, v in chosen_side:
        if k < r:
            continue
        if last_k is None or k - last_k >= r:
            picked.append(v)
            last_k = k
    if not picked:
        return Refusal("EmptyAfterFilter", detail=f"no powers >= {r}")
    out = ElementSet(V.context, picked)

    e_len = axis.translation_length
    for v in out:
        assert space.dist(x0, space.act(v, x0)) >= r * e_len
    for va, vb in itertools.combinations(out, 2):
        assert space.dist(space.act(va, x0), space.act(vb, x0)) >= r * e_len
    return out
