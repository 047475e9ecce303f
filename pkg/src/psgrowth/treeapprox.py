"""Tree approximation of a star of geodesics in a hyperbolic space.

Given a base point and target points, the union of geodesics [x0, x_i] is
mapped to a metric tree T: each geodesic becomes an isometric leg, and legs
i, j branch at depth div(i, j), the maximin closure over chains of the
pairwise Gromov products (x_i, x_j)_{x0}.  Taking the closure (rather than
attaching each leg at its single best predecessor) makes the no-expansion
half of the distortion bound a theorem of the triangle inequality alone:

    (x_i, x_j)_{x0} >= (x, x')_{x0}  for x on leg i, x' on leg j,

so d_T(f x, f x') = s + t - 2*min(s, t, div(i,j)) <= s + t - 2 (x,x')_{x0}
= |x - x'|.  The shrink side is the hyperbolicity content, verified
exhaustively over all sampled pairs against 2*delta*(log2 n + 1).
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Optional, Sequence

from .exactmath import within_log_bound
from .spaces import ActionSpace

_INF = Fraction(10**30)  # sentinel: larger than any hull diameter here


@dataclass(frozen=True)
class TreePoint:
    leg: int
    depth: Fraction


@dataclass
class ApproximationTree:
    """The tree T, the map f on all sampled geodesic vertices, and the
    verified distortion data."""

    space: ActionSpace
    x0: object
    targets: list
    legs: list  # list of geodesic vertex lists
    div: list  # maximin-closed divergence depths between legs
    samples: list  # (point, TreePoint) with first-leg assignment
    n_leaves: int

    def tree_distance(self, a: TreePoint, b: TreePoint) -> Fraction:
        if a.leg == b.leg:
            return abs(a.depth - b.depth)
        meet = min(a.depth, b.depth, self.div[a.leg][b.leg])
        return a.depth + b.depth - 2 * meet

    def image_of(self, point) -> Optional[TreePoint]:
        key = self.space.point_key(point)
        for p, tp in self.samples:
            if self.space.point_key(p) == key:
                return tp
        return None

    def distortion_bound_holds(self, shrink: Fraction) -> bool:
        return within_log_bound(shrink, self.space.delta, max(self.n_leaves, 1))

    def glue_depth(self, i: int) -> Fraction:
        """Depth at which leg i attaches to the tree spanned by legs < i."""
        if i == 0:
            return Fraction(0)
        return max(self.div[i][j] for j in range(i))

    # -- explicit tree structure for export ---------------------------------

    def export(self) -> dict:
        """Vertices, parent pointers and edge lengths of the quotient tree,
        plus the image node of every sampled point."""
        canon: dict[tuple[int, Fraction], int] = {}
        depths_per_leg: dict[int, set[Fraction]] = {}

        def canonical_leg(leg: int, depth: Fraction) -> int:
            best = leg
            for j in range(len(self.legs)):
                if j != leg and self.div[leg][j] >= depth:
                    best = min(best, j)
            return best

        node_keys: set[tuple[int, Fraction]] = set()
        for _, tp in self.samples:
            node_keys.add((canonical_leg(tp.leg, tp.depth), tp.depth))
        for i in range(1, len(self.legs)):
            d = self.glue_depth(i)
            node_keys.add((canonical_leg(i, d), d))
        node_keys.add((0, Fraction(0)))

        for leg, depth in node_keys:
            depths_per_leg.setdefault(leg, set()).add(depth)

        ordered = sorted(node_keys)
        ids = {key: i for i, key in enumerate(ordered)}
        parent = [-1] * len(ordered)
        edge_length = [Fraction(0)] * len(ordered)
        for key in ordered:
            leg, depth = key
            if depth == 0:
                continue
            below = [d for d in depths_per_leg.get(leg, ()) if d < depth]
            if leg != 0:
                below.append(self.glue_depth(leg))
            prev = max(d for d in below if d <= depth) if below else Fraction(0)
            pkey = (canonical_leg(leg, prev), prev)
            parent[ids[key]] = ids[pkey]
            edge_length[ids[key]] = depth - prev

        f_images = {
            self.space.encode_point(p): ids[
                (canonical_leg(tp.leg, tp.depth), tp.depth)
            ]
            for p, tp in self.samples
        }
        return {
            "vertices": [[key[0], str(key[1])] for key in ordered],
            "parent": parent,
            "edge_length": [str(l) for l in edge_length],
            "f_images": f_images,
        }


def approximate_tree(space: ActionSpace, x0, targets: Sequence) -> ApproximationTree:
    """Build the approximating tree for the geodesic star from x0 to the
    targets.  Sample set = every geodesic vertex; each sample maps to the
    first (lowest-index) leg through it."""
    targets = list(targets)
    if not targets:
        raise ValueError("need at least one target")
    legs = [space.geodesic(x0, t) for t in targets]
    n = len(legs)

    prod = [
        [space.gromov_product(targets[i], targets[j], x0) for j in range(n)]
        for i in range(n)
    ]
    div = [[prod[i][j] for j in range(n)] for i in range(n)]
    for i in range(n):
        div[i][i] = _INF
    # maximin (widest-path) closure over chains of legs
    for k in range(n):
        for i in range(n):
            dik = div[i][k]
            if dik == 0:
                continue
            row_k = div[k]
            row_i = div[i]
            for j in range(n):
                m = dik if dik < row_k[j] else row_k[j]
                if m > row_i[j]:
                    row_i[j] = m

    samples: list = []
    assigned: dict = {}
    for i, leg in enumerate(legs):
        for step, point in enumerate(leg):
            key = space.point_key(point)
            if key not in assigned:
                tp = TreePoint(i, step * space.rho0)
                assigned[key] = tp
                samples.append((point, tp))

    return ApproximationTree(
        space=space,
        x0=x0,
        targets=targets,
        legs=legs,
        div=div,
        samples=samples,
        n_leaves=n,
    )


@dataclass(frozen=True)
class DistortionReport:
    max_shrink: Fraction
    expansion_found: bool
    ok: bool
    n_pairs: int
    delta: Fraction
    n_leaves: int
    leg_isometry_ok: bool
    bound_display: float

    def as_dict(self) -> dict:
        return {
            "max_shrink": str(self.max_shrink),
            "expansion_found": self.expansion_found,
            "ok": self.ok,
            "n_pairs": self.n_pairs,
            "delta": str(self.delta),
            "n_leaves": self.n_leaves,
            "leg_isometry_ok": self.leg_isometry_ok,
            "bound_2delta_log2n_plus_1": self.bound_display,
        }


def distortion_report(approx: ApproximationTree) -> DistortionReport:
    """Exhaustive two-sided distortion check over all sampled pairs.

    ok means: no pair expanded (d_T > |x - x'|) and the worst shrink is
    within 2*delta*(log2(n)+1), compared exactly."""
    space = approx.space
    samples = approx.samples
    max_shrink = Fraction(0)
    expansion = False
    pairs = 0
    for idx in range(len(samples)):
        p, tp = samples[idx]
        for jdx in range(idx + 1, len(samples)):
            q, tq = samples[jdx]
            real = space.dist(p, q)
            tree = approx.tree_distance(tp, tq)
            pairs += 1
            if tree > real:
                expansion = True
            elif real - tree > max_shrink:
                max_shrink = real - tree
    leg_iso = all(
        approx.tree_distance(TreePoint(0, Fraction(0)), tp) == space.dist(approx.x0, p)
        for p, tp in samples
    )
    within = approx.distortion_bound_holds(max_shrink)
    import math

    n = max(approx.n_leaves, 1)
    bound_display = float(2 * approx.space.delta) * (math.log2(n) + 1)
    return DistortionReport(
        max_shrink=max_shrink,
        expansion_found=expansion,
        ok=within and not expansion and leg_iso,
        n_pairs=pairs,
        delta=space.delta,
        n_leaves=approx.n_leaves,
        leg_isometry_ok=leg_iso,
        bound_display=bound_display,
    )
