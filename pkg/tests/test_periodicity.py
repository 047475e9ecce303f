import itertools
import random

import pytest

from psgrowth.hypgeom import translation_length
from psgrowth.periodicity import (
    BiPeriodicWitness,
    PeriodCertificate,
    Refusal,
    e_reduce,
    extract_period_from_equations,
    is_biperiodic,
    is_periodic,
    pingpong_certify,
    separate,
)
from psgrowth.words import ElementSet, power_of, primitive_root

from conftest import random_reduced_word, w


# ---------------------------------------------------------------------------
# is_periodic


def test_is_periodic_spec_examples(f2_tree):
    one = f2_tree.basepoint()
    ab = w(f2_tree, "ab")
    v = ab**13 * w(f2_tree, "a")  # length 27 > 3*4*[ab] = 24
    cert = is_periodic(f2_tree, v, ab, one)
    assert isinstance(cert, PeriodCertificate)
    assert cert.threshold == 24 and cert.slack == 3
    assert cert.period_root in (ab, ab.inverse())

    v_short = ab**11 * w(f2_tree, "a")  # length 23 <= 24
    ref = is_periodic(f2_tree, v_short, ab, one)
    assert isinstance(ref, Refusal)
    assert any(c.name == "translation_exceeds_threshold" and not c.ok for c in ref.checks)

    v_off = w(f2_tree, "b") * ab**13  # v x0 off the axis
    ref2 = is_periodic(f2_tree, v_off, ab, one)
    assert isinstance(ref2, Refusal)
    assert any(c.name == "vx0_in_cylinder" and not c.ok for c in ref2.checks)


def test_is_periodic_elliptic_root_rejected(f2_tree):
    with pytest.raises(ValueError):
        is_periodic(f2_tree, w(f2_tree, "ab"), f2_tree.context.identity(), f2_tree.basepoint())


def test_is_periodic_free_group_characterization(f2_tree):
    # u cyclically reduced, v = u^k u_1 with u = u_1 u_2: periodic iff the
    # translation exceeds the threshold; check a família of powers
    one = f2_tree.basepoint()
    u = w(f2_tree, "aab")
    for k in range(1, 15):
        v = u**k * w(f2_tree, "a")
        res = is_periodic(f2_tree, v, u, one)
        expect = (3 * k + 1) > 3 * 4 * 3  # |v| vs 3 nu [u]
        assert isinstance(res, PeriodCertificate) == expect


def test_period_uniqueness_on_certificates(f2_tree):
    # certificates issued for v at the same x0 carry the same maximal cyclic
    # subgroup regardless of which generator of E was passed in
    one = f2_tree.basepoint()
    ab = w(f2_tree, "ab")
    v = ab**20
    c1 = is_periodic(f2_tree, v, ab, one)
    c2 = is_periodic(f2_tree, v, ab**3, one)
    c3 = is_periodic(f2_tree, v, ab.inverse(), one)
    roots = {c.period_root for c in (c1, c2, c3) if isinstance(c, PeriodCertificate)}
    assert len(roots) <= 2
    base = next(iter(roots))
    assert all(r in (base, base.inverse()) for r in roots)


# ---------------------------------------------------------------------------
# equations


def build_equations(f2_tree, root_text, exps, v_power, g_power):
    """u_i = root^exps[i], v = root^v_power, w_i = v^-1 u_i^-1 g with
    g = root^g_power: all products equal g and all junctions reduced."""
    root = w(f2_tree, root_text)
    g = root**g_power
    v = root**v_power
    eqs = []
    for k in exps:
        u = root**k
        w_ = v.inverse() * u.inverse() * g
        assert u * v * w_ == g
        eqs.append((u, v, w_))
    return eqs, root, v


def test_extract_period_recovers_root(f2_tree):
    eqs, root, v = build_equations(f2_tree, "ab", [1, 2, 3, 4], 200, 300)
    cert = extract_period_from_equations(f2_tree, eqs, f2_tree.basepoint())
    assert isinstance(cert, PeriodCertificate)
    assert cert.period_root in (root, root.inverse())
    assert cert.element == v
    # tree junction bounds are exactly zero
    for name in ("junction_24delta", "junction_66delta", "junction_138delta"):
        assert all(c.lhs == 0 for c in cert.checks if c.name == name)


def test_extract_period_symmetry_violation(f2_tree):
    # |v x0 - x0| smaller than the u-spread: refusal citing the symmetry bound
    eqs, _, _ = build_equations(f2_tree, "ab", [1, 30], 3, 40)
    res = extract_period_from_equations(f2_tree, eqs, f2_tree.basepoint())
    assert isinstance(res, Refusal)
    assert res.reason == "SymmetryBoundViolated"


def test_extract_period_not_reduced(f2_tree):
    # u ending with the inverse of v's first letter: junction not reduced
    one = f2_tree.basepoint()
    v = w(f2_tree, "ab") ** 50
    u1 = w(f2_tree, "bA")  # ends with a^-1, v starts with a
    u2 = w(f2_tree, "bb")
    g = w(f2_tree, "bb") * v * v
    eqs = [(u1, v, v.inverse() * u1.inverse() * g), (u2, v, v.inverse() * u2.inverse() * g)]
    res = extract_period_from_equations(f2_tree, eqs, one)
    assert isinstance(res, Refusal)
    assert res.reason == "ProductsNotReduced"


def test_extract_period_unequal_products(f2_tree):
    v = w(f2_tree, "ab") ** 30
    eqs = [
        (w(f2_tree, "a"), v, w(f2_tree, "b")),
        (w(f2_tree, "b"), v, w(f2_tree, "b")),
    ]
    res = extract_period_from_equations(f2_tree, eqs, f2_tree.basepoint())
    assert isinstance(res, Refusal)
    assert res.reason == "ProductsNotEqual"


def test_extract_period_paper_mode_needs_many_equations(f2_tree):
    eqs, _, _ = build_equations(f2_tree, "ab", [1, 2, 3, 4], 200, 300)
    res = extract_period_from_equations(
        f2_tree, eqs, f2_tree.basepoint(), paper_mode=True
    )
    assert isinstance(res, Refusal)
    assert res.reason == "PaperHypothesesUnmet"
    eqs20, root, _ = build_equations(f2_tree, "ab", list(range(1, 21)), 400, 600)
    res20 = extract_period_from_equations(
        f2_tree, eqs20, f2_tree.basepoint(), paper_mode=True
    )
    assert isinstance(res20, PeriodCertificate)


def test_extract_period_random_instances(f2_tree):
    rng = random.Random(71)
    one = f2_tree.basepoint()
    built = 0
    while built < 25:
        root = random_reduced_word(rng, f2_tree.context, rng.randint(2, 4))
        core, _ = __import__("psgrowth.words", fromlist=["cyclic_reduce"]).cyclic_reduce(root)
        if core.word_length() != root.word_length() or root.is_identity:
            continue  # want cyclically reduced roots so x0 = 1 is on the axis
        exps = sorted(rng.sample(range(1, 12), rng.randint(2, 4)))
        vp = rng.randint(60, 90)
        eqs, root_, v = build_equations(f2_tree, str(root), exps, vp, vp + 20)
        res = extract_period_from_equations(f2_tree, eqs, one)
        assert isinstance(res, PeriodCertificate), getattr(res, "reason", None)
        assert res.period_root in (primitive_root(root)[0], primitive_root(root)[0].inverse())
        built += 1


# ---------------------------------------------------------------------------
# bi-periodic sets


def test_biperiodic_witness_spec_example(f2_tree):
    one = f2_tree.basepoint()
    ab = w(f2_tree, "ab")
    a = w(f2_tree, "a")
    V = ElementSet(f2_tree.context, [ab**13 * a, ab**14 * a, ab**15 * a])
    res = is_biperiodic(f2_tree, V, one)
    assert isinstance(res, BiPeriodicWitness)
    assert res.coset_root in (ab, ab.inverse())
    assert res.coset_rep == ab**13 * a
    for va, vb in itertools.combinations(V, 2):
        assert power_of(va * vb.inverse(), res.coset_root) is not None


def test_biperiodic_period_mismatch(f2_tree):
    one = f2_tree.basepoint()
    V = ElementSet(
        f2_tree.context, [w(f2_tree, "b") ** 30, w(f2_tree, "ab") ** 13 * w(f2_tree, "a")]
    )
    res = is_biperiodic(f2_tree, V, one)
    assert isinstance(res, Refusal)


def test_biperiodic_singleton(f2_tree):
    V = ElementSet(f2_tree.context, [w(f2_tree, "ab") ** 13])
    res = is_biperiodic(f2_tree, V, f2_tree.basepoint())
    assert isinstance(res, Refusal) and res.reason == "TooSmall"


# ---------------------------------------------------------------------------
# e_reduce


def test_e_reduce_examples(f2_tree):
    one = f2_tree.basepoint()
    a = w(f2_tree, "a")
    t = w(f2_tree, "aaabaa")  # a^3 b a^2
    e, t_prime, f = e_reduce(f2_tree, t, a, one)
    assert t_prime == w(f2_tree, "b")
    assert e == a**3 and f == a**2

    t2 = w(f2_tree, "bab")
    e2, tp2, f2 = e_reduce(f2_tree, t2, a, one)
    assert e2.is_identity and f2.is_identity and tp2 == t2

    res = e_reduce(f2_tree, a**5, a, one)
    assert isinstance(res, Refusal) and res.reason == "InE"


def test_e_reduce_minimality_random(f2_tree):
    rng = random.Random(72)
    one = f2_tree.basepoint()
    a = w(f2_tree, "a")
    for _ in range(20):
        t = random_reduced_word(rng, f2_tree.context, rng.randint(1, 8))
        if power_of(t, a) is not None:
            continue
        e, tp, f = e_reduce(f2_tree, t, a, one)
        base = f2_tree.dist(one, f2_tree.act(tp, one))
        for p in range(-6, 7):
            for q in range(-6, 7):
                cand = a**-p * t * a**-q
                assert f2_tree.dist(one, f2_tree.act(cand, one)) >= base


def test_e_reduce_lemma_products(f2_tree):
    # E-reduction lemma: for E-reduced t and v in <root>,
    # (t^{+-1} x0, v x0)_{x0} <= [E]/2 (trees)
    rng = random.Random(73)
    one = f2_tree.basepoint()
    for root_text in ("a", "ab", "abb"):
        root = w(f2_tree, root_text)
        e_len = translation_length(f2_tree, root).translation_length
        for _ in range(15):
            t = random_reduced_word(rng, f2_tree.context, rng.randint(1, 7))
            if power_of(t, root) is not None:
                continue
            _, tp, _ = e_reduce(f2_tree, t, root, one)
            for k in (-9, -3, 1, 4, 11):
                v = root**k
                for tt in (tp, tp.inverse()):
                    assert (
                        f2_tree.gromov_product(
                            f2_tree.act(tt, one), f2_tree.act(v, one), one
                        )
                        <= e_len / 2
                    )


# ---------------------------------------------------------------------------
# ping pong


def test_pingpong_spec_example(f2_tree):
    one = f2_tree.basepoint()
    ab = w(f2_tree, "ab")
    V = ElementSet(f2_tree.context, [ab**20, ab**40, ab**60])
    t = w(f2_tree, "b")
    cert = pingpong_certify(f2_tree, V, ab, t, 3, one, a_value=4)
    assert cert.certified
    assert cert.counts == {1: 3, 2: 9, 3: 27}


def test_pingpong_close_spacing_fails(f2_tree):
    one = f2_tree.basepoint()
    ab = w(f2_tree, "ab")
    V = ElementSet(f2_tree.context, [ab, ab**2])
    cert = pingpong_certify(f2_tree, V, ab, w(f2_tree, "b"), 2, one, a_value=4)
    assert not cert.certified
    assert cert.reason == "spacing"


def test_pingpong_singleton(f2_tree):
    one = f2_tree.basepoint()
    ab = w(f2_tree, "ab")
    V = ElementSet(f2_tree.context, [ab**20])
    cert = pingpong_certify(f2_tree, V, ab, w(f2_tree, "b"), 3, one)
    assert cert.certified
    assert set(cert.counts.values()) == {1}


def test_pingpong_free_product(z5z7_tree):
    tr = z5z7_tree
    base = tr.basepoint()
    st = w(tr, "ab")
    V = ElementSet(tr.context, [st**10, st**20, st**30])
    t = w(tr, "aa")
    cert = pingpong_certify(tr, V, st, t, 3, base, a_value=2)
    assert cert.certified
    assert cert.counts == {1: 3, 2: 9, 3: 27}


def test_pingpong_t_not_reduced_reported(f2_tree):
    one = f2_tree.basepoint()
    ab = w(f2_tree, "ab")
    V = ElementSet(f2_tree.context, [ab**20, ab**40])
    t = ab**3 * w(f2_tree, "b")  # absorbs into E: not E-reduced
    cert = pingpong_certify(f2_tree, V, ab, t, 2, one, a_value=4)
    assert not cert.certified
    assert cert.reason == "t_not_e_reduced"


def test_pingpong_paper_mode_spacing(f2_tree):
    one = f2_tree.basepoint()
    ab = w(f2_tree, "ab")
    # paper a = 3*4*2 = 24 on trees: need spacing >= 240
    V = ElementSet(f2_tree.context, [ab**120, ab**240, ab**360])
    cert = pingpong_certify(f2_tree, V, ab, w(f2_tree, "b"), 2, one)
    assert cert.certified


# ---------------------------------------------------------------------------
# separation


def test_separate_spec_example(f2_tree):
    one = f2_tree.basepoint()
    ab = w(f2_tree, "ab")
    V = ElementSet(f2_tree.context, [ab**k for k in range(1, 21)])
    V0 = separate(f2_tree, V, 2, one, ab)
    ks = sorted(power_of(v, ab) for v in V0)
    assert ks == [2, 4, 6, 8, 10, 12, 14, 16, 18, 20]
    assert len(V0) >= len(V) // (2 * 2 + 1)


def test_separate_singleton_and_empty(f2_tree):
    one = f2_tree.basepoint()
    ab = w(f2_tree, "ab")
    V = ElementSet(f2_tree.context, [ab**7])
    out = separate(f2_tree, V, 3, one, ab)
    assert list(out) == [ab**7]
    low = ElementSet(f2_tree.context, [ab, ab**2])
    res = separate(f2_tree, low, 5, one, ab)
    assert isinstance(res, Refusal) and res.reason == "EmptyAfterFilter"


def test_separate_majority_direction(f2_tree):
    one = f2_tree.basepoint()
    ab = w(f2_tree, "ab")
    V = ElementSet(
        f2_tree.context, [ab**k for k in (2, 4, 6)] + [ab**-10]
    )
    V0 = separate(f2_tree, V, 2, one, ab)
    assert all(power_of(v, ab) > 0 for v in V0)


# ---------------------------------------------------------------------------
# right-period uniqueness


def right_period_segment(space, u, root, x0):
    """Vertices of [u^-1 x0, x0] lying on the axis of the root."""
    from psgrowth.hypgeom import axis_distance, translation_length

    ax = translation_length(space, root)
    path = space.geodesic(x0, space.act(u.inverse(), x0))
    return [p for p in path if axis_distance(space, ax, p) == 0]


def test_right_period_uniqueness(f2_tree):
    # two elements right-periodic for both <ba^12> and <a>: at delta = 0
    # their <a>-right-periods must coincide exactly (240 delta = 0)
    one = f2_tree.basepoint()
    big = w(f2_tree, "ba") * w(f2_tree, "a") ** 11  # b a^12
    u1 = w(f2_tree, "bba") * big**12
    u2 = big**12
    a = w(f2_tree, "a")
    seg1 = right_period_segment(f2_tree, u1, a, one)
    seg2 = right_period_segment(f2_tree, u2, a, one)
    # both segments run from 1 down the a^-1 ray for 12 edges
    assert seg1 == seg2
    assert len(seg1) == 13
    # and both really are right-periodic for both subgroups at a practical
    # threshold below the 12-edge overlap
    for u in (u1, u2):
        for root in (big, a):
            seg = right_period_segment(f2_tree, u, root, one)
            assert (len(seg) - 1) * f2_tree.rho0 > 8
