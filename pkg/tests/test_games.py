from collections import Counter
from fractions import Fraction

import numpy as np
import pytest

from lintest.models.game import ExplicitGame
from lintest.services.games import (
    ExactSampler, as_implicit, bcs_game, bits_index, is_projection, is_synchronous, label_str,
    lcs_bias, lcs_game, projected_bcs, relabel_projected_strategy
)
from lintest.services.quantum import winning_probability
from lintest.services.suites import random_lcs_strategy, three_equation_lcs
from lintest.services.transforms import lift_oracularizable
from lintest.utils.exceptions import CapacityError, DomainError


def test_label_and_bit_helpers():
    assert label_str("x0") == "x0"
    assert label_str(("a", 1)) == '["a",1]'
    assert bits_index("101", 3) == 5
    assert bits_index("1", 3) == 4
    assert bits_index("", 2) == 0
    with pytest.raises(CapacityError):
        bits_index("1010", 3)
    with pytest.raises(DomainError):
        bits_index("ab", 2)


def test_game_validation(toy):
    g = toy.game
    with pytest.raises(DomainError):
        ExplicitGame(g.questions, g.answers, {("x0", "x1"): Fraction(1, 2)}, g.accepted)
    with pytest.raises(DomainError):
        ExplicitGame(g.questions, g.answers, g.dist, g.accepted | {("x0", "x1", "0", "2")})


def test_exact_sampler(rng):
    sampler = ExactSampler([("a", Fraction(1, 4)), ("b", Fraction(3, 4)), ("c", Fraction(0))])
    assert sampler.labels == ["a", "b"]
    assert sampler.denominator == 4
    counts = Counter(sampler.draw(rng) for _ in range(4000))
    assert abs(counts["a"] - 1000) < 150
    with pytest.raises(DomainError):
        ExactSampler([("a", Fraction(1, 3))])


def test_implicit_view_keeps_the_decider(toy, rng):
    implicit = as_implicit(toy.game)
    x, y = implicit.sampler(rng)
    assert (x, y) in toy.game.dist
    assert implicit.decider("x0", "x1", "0", "1") == 1
    assert implicit.answer_arity == (1, 1)


def test_synchrony_and_projection_predicates(toy, chsh_fixture, magic):
    assert is_synchronous(toy.game)
    assert is_synchronous(magic.game)
    assert not is_synchronous(chsh_fixture.game)
    assert not is_synchronous(magic.extras["cv"])
    assert is_projection(chsh_fixture.game)
    loose = ExplicitGame(
        ("x", "y"), {"x": ("0",), "y": ("0", "1")}, {("x", "y"): Fraction(1)},
        frozenset({("x", "y", "0", "0"), ("x", "y", "0", "1")}),
    )
    assert not is_projection(loose)


def test_constraint_variable_game_shape(magic):
    cv = magic.extras["cv"]
    assert len(cv.dist) == 18
    assert sum(cv.dist.values()) == 1
    assert set(cv.answers["r0"]) == {"000", "011", "101", "110"}
    assert magic.game.dist[("x00", "r0")] == magic.game.dist[("r0", "x00")]


def test_pauli_square_wins_both_orientations(magic):
    pauli = magic.strategies["pauli"]
    assert winning_probability(magic.game, pauli) == pytest.approx(1.0, abs=1e-9)
    assert winning_probability(magic.extras["cv"], pauli) == pytest.approx(1.0, abs=1e-9)


def test_lcs_bias_formula(rng):
    L = three_equation_lcs()
    pi = {label: Fraction(1, 3) for label in L.bcs.labels}
    game = lcs_game(L, pi)
    for d in (1, 2, 3):
        direct, formula = lcs_bias(L, pi, random_lcs_strategy(game, d, rng))
        assert direct == pytest.approx(formula, abs=1e-10)


def test_projected_bcs_of_toy(toy):
    bcs, dist = projected_bcs(toy.game, 1)
    assert bcs.variables == ("qx0#0", "qx1#0")
    assert bcs.constraint(("x0", "x1")).satisfying.members() == [1, 2]
    assert bcs.constraint(("x0", "x0")).satisfying.members() == [0, 1]
    assert bcs.constraint("x1").context.names == ("qx1#0",)
    assert dist.dist[(("x0", "x1"), "x1")] == Fraction(1, 8)
    assert sum(dist.dist.values()) == 1


def test_projected_bcs_needs_a_synchronous_game(chsh_fixture):
    with pytest.raises(DomainError):
        projected_bcs(chsh_fixture.game, 1)


def test_projected_bcs_game_keeps_perfect_strategies(toy):
    bcs, dist = projected_bcs(toy.game, 1)
    game = bcs_game(bcs, dist)
    strategy = relabel_projected_strategy(lift_oracularizable(toy.strategies["perfect"], toy.game), toy.game, 1)
    assert winning_probability(game, strategy) == pytest.approx(1.0, abs=1e-12)


def test_constraint_constraint_game_answers_are_satisfying(magic):
    cc = magic.extras["cc"]
    for label in ("r0", "c2"):
        satisfying = magic.lcs.bcs.constraint(label).satisfying
        assert set(cc.answers[label]) == set(satisfying.members())
    for x, y, a, b in cc.accepted:
        if x == y:
            assert a == b
    assert np.isclose(float(sum(cc.dist.values())), 1.0)
