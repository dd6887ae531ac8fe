from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from lintest.models.cube import BoolFun, CubePoint, CubeSubset, NoiseSpec, SectionPolicy, VarSet
from lintest.services.boolfun import (
    and_fold, chi, enumerate_functions, join_points, lift, majority, noise_weight, pi2, projection_map,
    restrict, sample_noise, section, section_conditioned, split_point
)
from lintest.utils.exceptions import CapacityError, DomainError, EmptyConstraintError

AB = VarSet.of("a", "b")


def test_point_index_is_big_endian(ab):
    assert CubePoint(ab, (1, 1)).index == 0
    assert CubePoint(ab, (1, -1)).index == 1
    assert CubePoint(ab, (-1, 1)).index == 2
    for p in range(4):
        assert CubePoint.from_index(ab, p).index == p


def test_varset_rejects_duplicates_and_oversized_cubes():
    with pytest.raises(DomainError):
        VarSet.of("a", "a")
    with pytest.raises(CapacityError):
        VarSet(tuple(f"v{i}" for i in range(17))).npoints


def test_boolfun_values_and_algebra(ab):
    f = BoolFun.from_values(ab, [1, -1, -1, 1])
    assert f.table == 0b0110
    assert (-f).table == 0b1001
    assert (f * f).is_constant(1)
    assert f.value(1) == -1 and f.value(3) == 1
    with pytest.raises(DomainError):
        BoolFun(ab, 1 << 4)


def test_majority_ties_go_to_plus_one():
    x = VarSet.of("x")
    assert majority(BoolFun(x, 0b10)) == 1
    assert majority(BoolFun(x, 0b11)) == -1
    assert majority(BoolFun(x, 0b00)) == 1


@given(st.integers(0, 15))
def test_section_is_canonical_and_shared_by_negation(table):
    f = BoolFun(AB, table)
    s, m = section(f)
    assert s.table & 1 == 0
    assert s == f or s == -f
    assert m == majority(f * s)
    s_neg, m_neg = section(-f)
    assert s_neg == s
    assert m_neg == -m


@given(st.integers(0, 15), st.integers(0, 15), st.integers(0, 15))
def test_characters_are_multiplicative(alpha, t1, t2):
    a = CubeSubset(AB, alpha)
    f, g = BoolFun(AB, t1), BoolFun(AB, t2)
    assert chi(a, f * g) == chi(a, f) * chi(a, g)
    expected = int(np.prod([f.value(p) for p in a.members()])) if len(a) else 1
    assert chi(a, f) == expected


def test_pi2_keeps_points_hit_an_odd_number_of_times(ab):
    a = VarSet.of("a")
    # points 0 and 1 both restrict to a = +1
    assert pi2(CubeSubset(ab, 0b0011), a).mask == 0
    assert pi2(CubeSubset(ab, 0b0101), a).mask == 0b11
    assert pi2(CubeSubset(ab, 0b0111), a).mask == 0b10


def test_projection_map_follows_names():
    W = VarSet.of("a", "b", "c")
    U = VarSet.of("c", "a")
    image = projection_map(W, U)
    for p in range(8):
        x = CubePoint.from_index(W, p)
        assert image[p] == restrict(x, U).index
    with pytest.raises(DomainError):
        projection_map(U, W)


def test_lift_reads_the_restriction(ab):
    f = BoolFun(VarSet.of("a"), 0b10)
    assert lift(f, ab).table == 0b1100


def test_section_conditioned_choice_and_sign(ab):
    C = BoolFun(ab, 0b0110)
    g = BoolFun(ab, 0b0011)
    chosen, sign = section_conditioned(g, C, SectionPolicy.LEXMIN)
    # g & C = 0b0010, (-g) & C = 0b0100
    assert chosen.table == 0b0010 and sign == 1
    chosen, sign = section_conditioned(g, C, SectionPolicy.LEXMAX)
    assert chosen.table == 0b0100 and sign == -1
    with pytest.raises(EmptyConstraintError):
        section_conditioned(g, BoolFun(ab, 0))


def test_and_fold_keeps_minus_one_only_inside_the_constraint(ab):
    assert and_fold(BoolFun(ab, 0b0011), BoolFun(ab, 0b0110)).table == 0b0010
    with pytest.raises(DomainError):
        and_fold(BoolFun(ab, 0b0011), BoolFun(VarSet(("c",)), 0b01))


def test_noise_weights_form_a_distribution(ab):
    spec = NoiseSpec(1, 10)
    total = sum((noise_weight(spec, mu) for mu in enumerate_functions(ab)), Fraction(0))
    assert total == 1


def test_zero_noise_never_flips(ab, rng):
    assert sample_noise(NoiseSpec(0, 1), ab, rng).table == 0


def test_noise_spec_parsing():
    assert NoiseSpec.parse("2/20") == NoiseSpec(1, 10)
    with pytest.raises(DomainError):
        NoiseSpec.parse("1/2")
    with pytest.raises(DomainError):
        NoiseSpec.parse("abc")


def test_enumeration_is_capped():
    with pytest.raises(CapacityError):
        list(enumerate_functions(VarSet(tuple(f"v{i}" for i in range(5)))))


@given(st.lists(st.integers(1, 4), min_size=1, max_size=4), st.data())
def test_split_inverts_join(sizes, data):
    parts = tuple(data.draw(st.integers(0, (1 << s) - 1)) for s in sizes)
    assert split_point(join_points(parts, tuple(sizes)), tuple(sizes)) == parts
