"""End-to-end growth verification: exact |U^n| against the theorem bounds,
exponent fitting on parameterized families, and the concentrated / diffuse
pipelines built from the reduction and periodicity machinery.

Every theoretical bound is reported next to the measured value; the harness
never substitutes theory for measurement.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Optional, Sequence

import numpy as np

from .energy import Case, EnergyProfile, Mode, classify, minimize_energy
from .exactmath import log2_upper
from .hypgeom import Constants, translation_length
from .periodicity import (
    BiPeriodicWitness,
    Refusal,
    e_reduce,
    extract_period_from_equations,
    is_biperiodic,
    pingpong_certify,
    separate,
)
from .reduction import median_split, reduce_graph, reduce_tree, reduce_via_tree_approx
from .spaces import ActionSpace, FreeGroupTree, FreeProductTree
from .words import (
    BudgetExceededError,
    ElementSet,
    GroupElement,
    power_of,
    primitive_root,
    product_set,
)


@dataclass(frozen=True)
class AlphaConstants:
    """The growth constants of a backend, exactly.

    alpha_tree = rho0^2 / (10^15 kappa0^2); alpha_acyl = delta^2 /
    (10^50 N0^6 kappa0^2); c_concentrated = rho0 / (10^6 kappa0);
    gamma = 10^14 N0^3 kappa0 / rho0; c_counting = 10^12 N0^4 kappa0^2/rho0^2.
    """

    alpha_tree: Fraction
    alpha_acyl: Fraction
    c_concentrated: Fraction
    gamma: Fraction
    c_counting: Fraction
    ball: Optional[int] = None

    @classmethod
    def for_space(cls, space: ActionSpace, ball: Optional[int] = None) -> "AlphaConstants":
        k, r, d, n0 = space.kappa0, space.rho0, space.delta, space.N0
        return cls(
            alpha_tree=r * r / (Fraction(10) ** 15 * k * k),
            alpha_acyl=d * d / (Fraction(10) ** 50 * n0**6 * k * k),
            c_concentrated=r / (Fraction(10) ** 6 * k),
            gamma=Fraction(10) ** 14 * n0**3 * k / r,
            c_counting=Fraction(10) ** 12 * n0**4 * k * k / (r * r),
            ball=ball,
        )


def virtually_cyclic_reason(space: ActionSpace, U: ElementSet) -> Optional[str]:
    """A reason string when U visibly sits in a virtually cyclic subgroup
    (common primitive root up to inversion, a global dihedral context, or a
    common fixed vertex on a tree), else None."""
    ctx = U.context
    if ctx.kind == "free_product" and tuple(ctx.orders) == (2, 2):
        return "Z/2 * Z/2 is infinite dihedral (virtually cyclic)"
    nontrivial = [u for u in U if not u.is_identity]
    if not nontrivial:
        return "U contains only the identity"
    if isinstance(space, (FreeGroupTree, FreeProductTree)):
        hyp = []
        for u in nontrivial:
            if translation_length(space, u).is_hyperbolic:
                hyp.append(u)
        if not hyp:
            # all elliptic: common fixed vertex <=> zero energy at a vertex
            prof = minimize_energy(space, U)
            if prof.energy == 0:
                return "U fixes a vertex (elliptic subgroup)"
            return None
        root, _ = primitive_root(hyp[0])
        if all(power_of(u, root) is not None for u in U):
            return f"all elements are powers of {root}"
    return None


@dataclass
class GrowthReport:
    sizes: dict
    bounds: dict
    mode_name: str
    alpha_used: Fraction
    entropy_lb_display: float
    case_trace: list = field(default_factory=list)
    exponent_fit: Optional[float] = None
    not_applicable: Optional[str] = None
    truncated: bool = False
    violations: list = field(default_factory=list)
    profile: Optional[EnergyProfile] = None

    def as_dict(self) -> dict:
        return {
            "sizes": {str(k): v for k, v in sorted(self.sizes.items())},
            "bounds": {str(k): str(v) for k, v in sorted(self.bounds.items())},
            "mode": self.mode_name,
            "alpha": str(self.alpha_used),
            "entropy_lower_bound": self.entropy_lb_display,
            "case_trace": list(self.case_trace),
            "exponent_fit": self.exponent_fit,
            "not_applicable": self.not_applicable,
            "truncated": self.truncated,
            "violations": list(self.violations),
        }


def theorem_alpha(space: ActionSpace, U: ElementSet, mode: Mode) -> Fraction:
    """The per-element coefficient in (alpha |U|)^{floor((n+1)/2)}.

    Tree backends use alpha_tree; graph backends with delta > 0 use the
    acylindrical form alpha_acyl / log2(2|U|)^6 (certified upper dyadic
    log bound, which only shrinks the claimed floor)."""
    consts = AlphaConstants.for_space(space)
    if isinstance(space, (FreeGroupTree, FreeProductTree)) or space.delta == 0:
        return consts.alpha_tree
    return consts.alpha_acyl / log2_upper(2 * len(U)) ** 6


def growth_report(
    space: ActionSpace,
    U: ElementSet,
    n_max: int,
    mode: Mode = Mode.paper(),
    budget: int = 10_000_000,
) -> GrowthReport:
    """Exact |U^k| for k <= n_max against (alpha |U|)^{floor((k+1)/2)}.

    The virtually-cyclic pre-check reports NotApplicable instead of sizes
    comparisons that the theorems do not claim."""
    if n_max < 1:
        raise ValueError("n_max must be >= 1")
    alpha = theorem_alpha(space, U, mode)
    reason = virtually_cyclic_reason(space, U)

    sizes = {}
    bounds = {}
    violations = []
    truncated = False
    current = U
    for k in range(1, n_max + 1):
        if k > 1:
            try:
                current = _step(current, U, budget)
            except BudgetExceededError:
                truncated = True
                break
        sizes[k] = len(current)
        bounds[k] = (alpha * len(U)) ** ((k + 1) // 2)
        if reason is None and sizes[k] < bounds[k]:
            violations.append(f"|U^{k}| = {sizes[k]} < bound {bounds[k]}")

    entropy_display = 0.5 * math.log(float(alpha) * len(U)) if len(U) else 0.0
    prof = classify(space, U, minimize_energy(space, U, mode), mode) if reason is None else None
    trace = []
    if prof is not None:
        trace.append(f"case={prof.case.value}")
    return GrowthReport(
        sizes=sizes,
        bounds=bounds,
        mode_name=mode.name,
        alpha_used=alpha,
        entropy_lb_display=entropy_display,
        case_trace=trace,
        not_applicable=reason,
        truncated=truncated,
        violations=violations,
        profile=prof,
    )


def _step(current: ElementSet, U: ElementSet, budget: int) -> ElementSet:
    out = set()
    for x in current:
        for u in U:
            out.add(x * u)
            if len(out) > budget:
                raise BudgetExceededError(f"over budget {budget}")
    return ElementSet(U.context, out)


def entropy_bound_holds(sizes: dict, alpha: Fraction, u_size: int) -> bool:
    """Exact check of 1/2 log(alpha |U|) <= (1/n) log |U^n| at the largest
    computed n: (alpha |U|)^n <= |U^n|^2."""
    if not sizes:
        return True
    n = max(sizes)
    lhs = (alpha * u_size) ** n
    return lhs <= Fraction(sizes[n]) ** 2


def exponent_fit(
    space: ActionSpace,
    family: Callable[[int], ElementSet],
    n: int,
    N_range: Sequence[int],
    budget: int = 10_000_000,
) -> tuple[float, dict]:
    """Least-squares slope of log |U_N^n| against log |U_N| over the range.

    Regressing on the family size rather than the raw parameter N matches
    the theorem's (alpha |U|)^e scaling and the op's own example values;
    the counts are returned alongside for reporting."""
    counts = {}
    xs, ys = [], []
    for N in N_range:
        U = family(N)
        counts[N] = len(product_set(U, n, budget))
        xs.append(math.log(len(U)))
        ys.append(math.log(counts[N]))
    slope = float(np.polyfit(xs, ys, 1)[0]) if len(xs) > 1 else 1.0
    return slope, counts


# ---------------------------------------------------------------------------
# concentrated pipeline


@dataclass
class ConcentratedOutcome:
    certified: bool
    u1_size: int
    u2_size: int
    witness: Optional[GroupElement]
    sizes: dict
    reason: str = ""
    chain_alpha: Optional[Fraction] = None

    def as_dict(self):
        return {
            "certified": self.certified,
            "u1_size": self.u1_size,
            "u2_size": self.u2_size,
            "witness": str(self.witness) if self.witness else None,
            "sizes": {str(k): v for k, v in sorted(self.sizes.items())},
            "reason": self.reason,
            "chain_alpha": str(self.chain_alpha) if self.chain_alpha is not None else None,
        }


def concentrated_pipeline(
    space: ActionSpace,
    U: ElementSet,
    x0,
    mode: Mode,
    n_max: int = 3,
    budget: int = 200_000,
) -> ConcentratedOutcome:
    """Products with one far-moving witness: U1 = short-displacement part,
    U2 = a spaced subset at the offset point m on [x0, v x0], then the
    chain certificate and brute-force verification of |(U2 v)^k| = |U2|^k.

    Paper mode uses threshold kappa0, witness floor 10^4 kappa0, offset
    500 kappa0, spacing 42 kappa0; practical mode scales all of these from
    the concentration threshold T (witness floor 4 max(T, rho0), offset
    rho0, spacing > 0), and the chain margin check remains the gate."""
    if mode.name == "paper":
        T = space.kappa0
        witness_floor = 10**4 * space.kappa0
        offset = 500 * space.kappa0
        spacing = 42 * space.kappa0
    else:
        T = mode.concentration_threshold
        witness_floor = 4 * max(T, space.rho0)
        offset = space.rho0
        spacing = Fraction(0)

    disp = {u: space.dist(x0, space.act(u, x0)) for u in U}
    u1 = [u for u in U if disp[u] <= T]
    if 4 * len(u1) <= len(U):
        return ConcentratedOutcome(False, len(u1), 0, None, {}, "NotConcentrated")
    candidates = [u for u in U if disp[u] >= witness_floor]
    if not candidates:
        return ConcentratedOutcome(False, len(u1), 0, None, {}, "NoHyperbolicWitness")
    v = max(candidates, key=lambda u: (disp[u], u.sort_key()))

    geo = space.geodesic(x0, space.act(v, x0))
    steps = min(space.steps(offset) if (offset / space.rho0).denominator == 1 else 1,
                len(geo) - 1)
    steps = max(steps, 1)
    m = geo[steps]

    u2 = []
    taken_points = []
    for u in sorted(u1, key=lambda el: el.sort_key()):
        um = space.act(u, m)
        if all(space.dist(um, q) > spacing for q in taken_points):
            u2.append(u)
            taken_points.append(um)
    if not u2:
        return ConcentratedOutcome(False, len(u1), 0, v, {}, "SpacingLeftNothing")

    # chain data: products (u v x0, u' v x0)_{x0} and step lengths
    vx0 = space.act(v, x0)
    pts = {u: space.act(u, vx0) for u in u2}
    max_prod = Fraction(0)
    for i, ua in enumerate(u2):
        for ub in u2[i + 1:]:
            max_prod = max(max_prod, space.gromov_product(pts[ua], pts[ub], x0))
        max_prod = max(
            max_prod,
            space.gromov_product(space.act(v.inverse(), x0), pts[ua], x0),
        )
    min_step = min(space.dist(x0, pts[u]) for u in u2)
    min_step = min(min_step, space.dist(x0, vx0))
    alpha = min_step / 2 - max_prod - space.delta
    ok = alpha > 9 * space.delta if space.delta > 0 else alpha > 0

    sizes = {}
    if ok:
        words = [u * v for u in u2]
        current = list(words)
        sizes[1] = len(set(current))
        k = 1
        while k < (n_max + 1) // 2 + 1 and len(current) * len(words) <= budget:
            nxt = [x * w_ for x in current for w_ in words]
            k += 1
            current = nxt
            sizes[k] = len(set(current))
        expected = {kk: len(u2) ** kk for kk in sizes}
        if sizes != expected:
            raise AssertionError(
                f"concentrated chain certified but counts differ: {sizes} vs {expected}"
            )
    return ConcentratedOutcome(
        ok, len(u1), len(u2), v, sizes, "" if ok else "ChainMarginFailed", alpha
    )


# ---------------------------------------------------------------------------
# diffuse pipeline


@dataclass
class DiffuseOutcome:
    branch: str  # NonPeriodic | BiPeriodic | NotApplicable | Failed
    certified: bool
    sizes: dict
    counting: dict = field(default_factory=dict)
    witness: Optional[BiPeriodicWitness] = None
    pingpong: Optional[dict] = None
    reduction: Optional[dict] = None
    paper_bound_display: Optional[str] = None
    reason: str = ""

    def as_dict(self):
        return {
            "branch": self.branch,
            "certified": self.certified,
            "sizes": {str(k): v for k, v in sorted(self.sizes.items())},
            "counting": {str(k): v for k, v in sorted(self.counting.items())},
            "witness": self.witness.as_dict() if self.witness else None,
            "pingpong": self.pingpong,
            "reduction": self.reduction,
            "paper_bound": self.paper_bound_display,
            "reason": self.reason,
        }


def _collision_equations(space, U1, v, W, x0, budget):
    """Group the products u*v*w by value; the largest class gives the
    equations u_i v w_i = const."""
    groups: dict = {}
    count = 0
    for u in U1:
        uv = u * v
        for w_ in W:
            prod = uv * w_
            groups.setdefault(prod, []).append((u, w_))
            count += 1
            if count > budget:
                raise BudgetExceededError("counting over budget")
    distinct = len(groups)
    largest = max(groups.values(), key=len)
    return distinct, largest


def diffuse_pipeline(
    space: ActionSpace,
    U: ElementSet,
    mode: Mode,
    n: int = 3,
    r=None,
    counting_c: Fraction = Fraction(2),
    budget: int = 500_000,
) -> DiffuseOutcome:
    """The diffuse-energy route: reduction -> median split -> W_l counting;
    periodic middles route through period extraction, bi-periodicity, and
    the ping-pong growth of the coset.

    l = floor((n+1)/2) and W_l = (U1 U2)^{l-2} U1 for l >= 3; below that
    the counting set is U1 itself."""
    ctx = U.context
    if counting_c <= Fraction(1, 2):
        raise ValueError("counting_c must exceed 1/2 (the bound is vacuous below)")
    reason = virtually_cyclic_reason(space, U)
    if reason is not None:
        return DiffuseOutcome("NotApplicable", False, {}, reason=reason)

    prof = classify(space, U, minimize_energy(space, U, mode), mode)
    if prof.case is not Case.DIFFUSE:
        return DiffuseOutcome(
            "Failed", False, {}, reason=f"classified {prof.case.value}"
        )
    x0 = prof.base_point
    if mode.name == "paper":
        hypothesis_floor = Fraction(10) ** 10 * prof.d_factor * space.kappa0
    else:
        hypothesis_floor = mode.concentration_threshold

    if isinstance(space, (FreeGroupTree, FreeProductTree)):
        r_eff = Fraction(r) if r is not None else space.rho0
        red = reduce_tree(
            space, U, x0, r_eff, hypothesis_displacement=hypothesis_floor
        )
    elif space.delta == 0:
        red = reduce_graph(space, U, x0)
    else:
        red = reduce_via_tree_approx(space, U, x0)
    if red.failed:
        return DiffuseOutcome(
            "Failed", False, {}, reduction=red.as_dict(), reason=red.reason
        )
    U1, U2 = median_split(space, red.u1, red.u2, x0)
    if len(U1) == 0 or len(U2) == 0:
        return DiffuseOutcome(
            "Failed", False, {}, reduction=red.as_dict(), reason="median_emptied"
        )

    l = (n + 1) // 2
    W = U1
    for _ in range(l - 2):
        W = _step(_step(W, U2, budget), U1, budget)

    consts = AlphaConstants.for_space(space)
    paper_bound = f"(|U| / (8 * {consts.c_counting} * 2b^2))^{l}"

    counting = {}
    period_certs = {}
    threshold = None if mode.name == "paper" else _practical_period_threshold(space, U2, x0)
    need = Fraction(len(U1) * len(W), 1) / (2 * counting_c)
    for v in U2:
        distinct, eqs_pairs = _collision_equations(space, U1, v, W, x0, budget)
        counting[str(v)] = distinct
        if Fraction(distinct) > need:
            continue
        # count <= |U1||W|/(2c) with 2c > 1 forces a collision class of >= 2
        assert len(eqs_pairs) >= 2
        eqs = [(u, v, w_) for u, w_ in eqs_pairs]
        res = extract_period_from_equations(
            space, eqs, x0, threshold, paper_mode=(mode.name == "paper")
        )
        period_certs[v] = res

    non_periodic = [v for v in U2 if v not in period_certs]
    failed_extractions = {
        v: res for v, res in period_certs.items() if isinstance(res, Refusal)
    }
    if non_periodic or failed_extractions:
        sizes = {"U1_v_W_max": max(counting.values()), "U1": len(U1), "W": len(W)}
        return DiffuseOutcome(
            "NonPeriodic",
            not failed_extractions,
            sizes,
            counting=counting,
            reduction=red.as_dict(),
            paper_bound_display=paper_bound,
            reason="counting_bound_met"
            if not failed_extractions
            else "extraction_refused:"
            + ",".join(res.reason for res in failed_extractions.values()),
        )

    # every middle element extracted a period: check bi-periodicity of U2
    witness = is_biperiodic(space, U2, x0, threshold)
    if isinstance(witness, Refusal):
        return DiffuseOutcome(
            "Failed",
            False,
            {},
            counting=counting,
            reduction=red.as_dict(),
            reason=f"biperiodic_refused:{witness.reason}",
        )

    # coset handoff: with U2 inside E t, grow (V t')^n by ping pong.  When
    # the representative sits inside E itself, pick any s in U outside
    # <root> (one exists, else the virtually-cyclic pre-check would have
    # fired) and grow (U2 s)^n instead.
    root = witness.coset_root
    rep = witness.coset_rep
    handoff: dict = {"coset_root": str(root), "rep": str(rep)}
    if power_of(rep, root) is None:
        tail = rep
        V_E = ElementSet(
            ctx, [v * rep.inverse() for v in U2 if not (v * rep.inverse()).is_identity]
        )
    else:
        outside = [s for s in U if power_of(s, root) is None]
        if not outside:
            return DiffuseOutcome(
                "Failed",
                False,
                {},
                counting=counting,
                witness=witness,
                reduction=red.as_dict(),
                reason="no_element_outside_E",
            )
        tail = outside[0]
        V_E = ElementSet(ctx, [v for v in U2 if not v.is_identity])
        handoff["tail_from_U"] = str(tail)
    t_res = e_reduce(space, tail, root, x0)
    if isinstance(t_res, Refusal):
        return DiffuseOutcome(
            "BiPeriodic",
            False,
            {},
            counting=counting,
            witness=witness,
            reduction=red.as_dict(),
            pingpong=handoff,
            reason=f"e_reduce:{t_res.reason}",
        )
    _, t_prime, _ = t_res
    r_sep = 1
    sep = separate(space, V_E, r_sep, x0, root)
    if isinstance(sep, Refusal):
        return DiffuseOutcome(
            "BiPeriodic",
            False,
            {},
            counting=counting,
            witness=witness,
            reduction=red.as_dict(),
            pingpong=handoff,
            reason=f"separation:{sep.reason}",
        )
    e_len = translation_length(space, root).translation_length
    pp = pingpong_certify(
        space, sep, root, t_prime, min(n, 3), x0,
        a_value=None if mode.name == "paper" else e_len * r_sep / 10,
        budget=budget,
    )
    handoff["pingpong"] = pp.as_dict()
    handoff["separated_size"] = len(sep)
    return DiffuseOutcome(
        "BiPeriodic",
        pp.certified,
        {str(k): c for k, c in pp.counts.items()},
        counting=counting,
        witness=witness,
        reduction=red.as_dict(),
        pingpong=handoff,
        paper_bound_display=f"(|U2|/(4 gamma) |U|)^{l} with gamma = {consts.gamma}",
        reason="" if pp.certified else pp.reason,
    )


def _practical_period_threshold(space, U2, x0) -> Fraction:
    """A reachable periodicity threshold for desk-scale roots: half the
    median displacement of U2 at x0 (certificates still record slack)."""
    disps = sorted(space.dist(x0, space.act(v, x0)) for v in U2)
    return disps[len(disps) // 2] / 2
