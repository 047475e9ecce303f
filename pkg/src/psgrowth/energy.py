"""Normalized l^1-energy minimization, base point selection, displacement,
and the concentrated/diffuse case split.

On trees the energy is convex along geodesics, so steepest descent over
vertices from the basepoint reaches a global vertex minimizer; only steps
toward orbit points can decrease the energy, which keeps the candidate set
finite even when vertex links are infinite.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, replace
from fractions import Fraction
from typing import Optional

from .exactmath import log2_upper
from .spaces import ActionSpace, FiniteHypGraph
from .words import ElementSet


class Case(enum.Enum):
    CONCENTRATED = "concentrated"
    DIFFUSE = "diffuse"
    BELOW_THRESHOLD = "below_threshold"


@dataclass(frozen=True)
class Mode:
    """Threshold regime for the case split and downstream certificates.

    Paper mode uses the growth theorems' original constants (concentration threshold
    10^10 * d * kappa0, displacement floor 10^14 * d * kappa0).  Practical
    mode takes user thresholds so the branches are reachable at desk scale;
    every report records which mode produced it.
    """

    name: str
    concentration_threshold: Optional[Fraction] = None
    displacement_floor: Optional[Fraction] = None
    d_choice: str = "auto"  # auto | tree | hyperbolic_group | acylindrical

    @classmethod
    def paper(cls, d_choice: str = "auto") -> "Mode":
        return cls("paper", d_choice=d_choice)

    @classmethod
    def practical(
        cls, concentration_threshold, displacement_floor=0, d_choice: str = "auto"
    ) -> "Mode":
        return cls(
            "practical",
            Fraction(concentration_threshold),
            Fraction(displacement_floor),
            d_choice,
        )


def d_factor(space: ActionSpace, U: ElementSet, mode: Mode) -> Fraction:
    """1 for tree and hyperbolic-group regimes, log2(2|U|) for general
    acylindrical actions (certified dyadic upper bound when irrational)."""
    choice = mode.d_choice
    if choice == "auto":
        choice = "acylindrical" if isinstance(space, FiniteHypGraph) and space.delta > 0 else "tree"
    if choice in ("tree", "hyperbolic_group"):
        return Fraction(1)
    return log2_upper(2 * len(U))


@dataclass(frozen=True)
class EnergyProfile:
    base_point: object
    energy: Fraction
    displacement: Fraction
    d_factor: Fraction
    case: Optional[Case] = None
    mode_name: Optional[str] = None
    descent_steps: int = 0


def energy_at(space: ActionSpace, U: ElementSet, x) -> Fraction:
    """(1/|U|) * sum over u of |x - ux|, exactly."""
    if len(U) == 0:
        raise ValueError("U must be nonempty")
    return sum((space.dist(x, space.act(u, x)) for u in U), Fraction(0)) / len(U)


def displacement_at(space: ActionSpace, U: ElementSet, x) -> Fraction:
    return max(space.dist(x, space.act(u, x)) for u in U)


def _descent_candidates(space: ActionSpace, U: ElementSet, x) -> list:
    """First vertices of the geodesics toward the orbit points; moving in
    any other direction increases every distance term."""
    seen = {}
    for u in U:
        ux = space.act(u, x)
        if ux != x:
            step = space.geodesic(x, ux)[1]
            seen.setdefault(space.point_key(step), step)
    return [seen[k] for k in sorted(seen)]


def minimize_energy(
    space: ActionSpace, U: ElementSet, mode: Mode = Mode.paper(), start=None
) -> EnergyProfile:
    """Steepest descent over vertices (trees) or exhaustive scan (finite
    graphs); deterministic tie-break by vertex encoding."""
    if len(U) == 0:
        raise ValueError("U must be nonempty")

    if isinstance(space, FiniteHypGraph):
        best = min(
            range(space.n), key=lambda v: (energy_at(space, U, v), space.point_key(v))
        )
        x, steps = best, 0
    else:
        x = space.basepoint() if start is None else start
        current = energy_at(space, U, x)
        steps = 0
        while True:
            options = []
            for cand in _descent_candidates(space, U, x):
                val = energy_at(space, U, cand)
                if val < current:
                    options.append((val, space.point_key(cand), cand))
            if not options:
                break
            _, _, x = min(options)
            current = min(options)[0]
            steps += 1

    return EnergyProfile(
        base_point=x,
        energy=energy_at(space, U, x),
        displacement=displacement_at(space, U, x),
        d_factor=d_factor(space, U, mode),
        mode_name=mode.name,
        descent_steps=steps,
    )


def classify(
    space: ActionSpace, U: ElementSet, profile: EnergyProfile, mode: Mode
) -> EnergyProfile:
    """Fill in the case split: below-threshold if the displacement misses
    the theorem floor; else concentrated iff more than 1/4 of U moves the
    base point at most the threshold (diffuse iff at least 3/4 move it
    strictly further: the two are exact complements)."""
    d = profile.d_factor
    if mode.name == "paper":
        floor = Fraction(10) ** 14 * d * space.kappa0
        threshold = Fraction(10) ** 10 * d * space.kappa0
    else:
        floor = mode.displacement_floor
        threshold = mode.concentration_threshold
        if threshold is None:
            raise ValueError("practical mode needs a concentration threshold")

    if profile.displacement < floor:
        case = Case.BELOW_THRESHOLD
    else:
        x = profile.base_point
        near = sum(
            1 for u in U if space.dist(x, space.act(u, x)) <= threshold
        )
        case = Case.CONCENTRATED if 4 * near > len(U) else Case.DIFFUSE
    return replace(profile, case=case, mode_name=mode.name)
