from fractions import Fraction

import pytest

from lintest.models.game import ExplicitGame, ImplicitGame, RepetitionParams
from lintest.services.games import is_projection, is_synchronous
from lintest.services.quantum import winning_probability
from lintest.services.suites import dead_pair_game
from lintest.services.transforms import (
    ensure_nonempty_answers, lift_oracularizable, product_strategy, project, projection_bound,
    repair_bound, repeat, repetition_bound
)
from lintest.services.value import classical_value
from lintest.utils.exceptions import CapacityError, DomainError, NotOracularizableError

TSIRELSON = (2 + 2 ** 0.5) / 4


def test_repair_is_identity_without_dead_pairs(toy):
    assert ensure_nonempty_answers(toy.game) is toy.game


@pytest.mark.parametrize("symmetric", [True, False])
def test_repair_removes_dead_pairs(symmetric):
    dead = dead_pair_game()
    repaired = ensure_nonempty_answers(dead, symmetric=symmetric)
    assert all(repaired.accepted_for(x, y) for x, y in repaired.dist)
    assert sum(repaired.dist.values()) == 1
    assert is_synchronous(repaired) == symmetric
    assert Fraction(classical_value(dead).exact) == Fraction(1, 2)
    assert Fraction(classical_value(repaired).exact) == Fraction(3, 4)
    assert repair_bound(0.5) == pytest.approx(0.75)


def test_projection_is_a_projection_game(toy):
    projected = project(toy.game)
    assert is_projection(projected)
    assert sum(projected.dist.values()) == 1
    lifted = lift_oracularizable(toy.strategies["perfect"], toy.game)
    assert winning_probability(projected, lifted) == pytest.approx(1.0, abs=1e-12)


def test_projection_diagonal_needs_both_answers(toy):
    projected = project(toy.game)
    assert projected.decide(("x0", "x0"), "x0", ("0", "0"), "0") == 1
    assert projected.decide(("x0", "x0"), "x0", ("0", "1"), "0") == 0
    assert projected.decide(("x0", "x1"), "x1", ("0", "1"), "1") == 1


def test_lift_rejects_noncommuting_strategies(chsh_fixture):
    with pytest.raises(NotOracularizableError):
        lift_oracularizable(chsh_fixture.strategies["tsirelson"], chsh_fixture.game)


def test_repetition_of_tsirelson(chsh_fixture):
    doubled = repeat(chsh_fixture.game, 2)
    assert isinstance(doubled, ExplicitGame)
    assert len(doubled.dist) == 16
    strategy = product_strategy(chsh_fixture.strategies["tsirelson"], 2)
    assert strategy.dim == 4
    assert winning_probability(doubled, strategy) == pytest.approx(TSIRELSON ** 2, abs=1e-10)


def test_large_repetition_is_implicit(chsh_fixture, rng):
    big = repeat(chsh_fixture.game, 7)
    assert isinstance(big, ImplicitGame)
    xs, ys = big.sampler(rng)
    assert len(xs) == len(ys) == 7
    assert big.decider(xs, ys, ("0",) * 7, ("0",) * 7) == int(
        all(not (x == "A1" and y == "B1") for x, y in zip(xs, ys))
    )
    with pytest.raises(CapacityError):
        product_strategy(chsh_fixture.strategies["tsirelson"], 7)


def test_bounds():
    params = RepetitionParams(4)
    assert repetition_bound(1.0, params) == 1.0
    assert repetition_bound(0.5, params) == pytest.approx(0.25)
    assert repetition_bound(0.5, RepetitionParams(1, C=3.0)) == 0.0
    assert projection_bound(1.0) == 1.0
    assert projection_bound(0.5) == pytest.approx((0.75) ** 0.5)
    assert repair_bound(0.0) == 0.5
    for bound in (projection_bound, repair_bound):
        with pytest.raises(DomainError):
            bound(1.5)
