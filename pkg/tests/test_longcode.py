import itertools
import math
from dataclasses import replace

import numpy as np
import pytest

from lintest.models.cube import BoolFun, NoiseSpec
from lintest.models.longcode import BobQuestion, ParityEquation, TestParams
from lintest.services.boolfun import projection_map
from lintest.services.fixtures import _deterministic
from lintest.services.longcode import (
    CompletenessStrategy, RandomTestStrategy, UniformAnswerStrategy, as_implicit_game, as_lcs_view,
    bob_question, build_alice_question, completeness_strategy, decide, exact_test_value, round_domains, round_types,
    sample_round
)
from lintest.services.pipeline import completeness_for
from lintest.services.value import monte_carlo_value
from lintest.utils.exceptions import CapacityError, PreconditionError, ProtocolError


def test_round_types_cover_the_distribution(toy_compiled):
    params = toy_compiled.test_params
    types = list(round_types(params))
    assert len(types) == 6
    assert sum(w for _, w in types) == 1


def test_round_domains_are_prefixed(toy_compiled):
    dom = round_domains(toy_compiled.test_params, ((("x0", "x1"), "x1"),))
    assert dom.W.names == ("l0:qx0#0", "l0:qx1#0")
    assert dom.U.names == ("l0:qx1#0",)
    # satisfying points of the pair constraint: answers (0, 1) and (1, 0)
    assert dom.C.table == 0b0110


def test_sampling_is_seeded(toy_compiled):
    params = toy_compiled.test_params
    first = sample_round(params, np.random.default_rng([7, 0]))
    again = sample_round(params, np.random.default_rng([7, 0]))
    assert first[0].key == again[0].key
    assert first[1].slot == again[1].slot


def _off_diagonal_question(params):
    # ((x0, x1), x0): U has one variable, W has two, so the first query differs from the others
    rounds = ((("x0", "x1"), "x0"),)
    dom = round_domains(params, rounds)
    return build_alice_question(params, rounds, BoolFun(dom.U, 0b01), BoolFun(dom.W, 0b0011), BoolFun(dom.W, 0))


def test_decide_checks_parity_and_consistency(toy_compiled):
    alice_q = _off_diagonal_question(toy_compiled.test_params)
    a = (1, -1, -alice_q.rhs)
    for slot in range(3):
        bob_q = bob_question(alice_q, slot)
        assert decide(alice_q, bob_q, a, a[slot]).accept
        verdict = decide(alice_q, bob_q, a, -a[slot])
        assert verdict.linear_ok and not verdict.consistency_ok
        verdict = decide(alice_q, bob_q, (1, -1, alice_q.rhs), -1 if slot == 1 else 1)
        assert not verdict.linear_ok
    bob_q = bob_question(alice_q, 1)
    with pytest.raises(ProtocolError):
        decide(alice_q, bob_q, (1, 1, 2), 1)
    assert alice_q.queries[0] != alice_q.queries[1]
    mismatched = BobQuestion(alice_q.queries[0], 1, bob_q.contexts)
    with pytest.raises(ProtocolError):
        decide(alice_q, mismatched, a, a[1])


def test_bob_slots_are_uniform(toy_compiled):
    rng = np.random.default_rng(2024)
    n = 3000
    counts = [0, 0, 0]
    for _ in range(n):
        counts[sample_round(toy_compiled.test_params, rng)[1].slot] += 1
    sigma = math.sqrt(n * (1 / 3) * (2 / 3))
    for count in counts:
        assert abs(count - n / 3) <= 4 * sigma


def test_negating_f_flips_the_first_answer(toy_compiled):
    alice_q = _off_diagonal_question(toy_compiled.test_params)
    negated = replace(alice_q, f=-alice_q.f)
    assert negated.queries == alice_q.queries
    assert negated.rhs == -alice_q.rhs
    for slot in range(3):
        bob_q, bob_neg = bob_question(alice_q, slot), bob_question(negated, slot)
        for a in itertools.product((1, -1), repeat=3):
            for b in (1, -1):
                flipped = (-a[0], a[1], a[2])
                verdict = decide(alice_q, bob_q, a, b)
                other = decide(negated, bob_neg, flipped, -b if slot == 0 else b)
                assert (verdict.linear_ok, verdict.consistency_ok) == (other.linear_ok, other.consistency_ok)


def test_honest_answers_satisfy_the_noisy_parity(toy_compiled):
    rng = np.random.default_rng(11)
    for _ in range(20):
        alice_q, _ = sample_round(toy_compiled.test_params, rng)
        bits = CompletenessStrategy.alice_bits(alice_q, _honest_point(alice_q))
        mu_value = alice_q.mu.value(_honest_point(alice_q))
        assert math.prod(bits) == alice_q.rhs * mu_value


def _honest_point(alice_q):
    # x0 -> "0" (+1), x1 -> "1" (-1)
    values = {"qx0#0": 1, "qx1#0": -1}
    point = 0
    for name in alice_q.W.names:
        point = (point << 1) | (values[name.split(":", 1)[1]] == -1)
    return point


def test_completeness_is_exactly_one_minus_epsilon(toy, toy_compiled):
    provers = completeness_for(toy_compiled, toy.strategies["perfect"])
    exact = exact_test_value(toy_compiled.test_params, provers)
    assert exact.full == pytest.approx(0.9, abs=1e-9)
    assert exact.linear == pytest.approx(0.9, abs=1e-9)
    assert exact.rounds > 0


def test_completeness_needs_a_perfect_strategy(toy_compiled):
    sloppy = _deterministic({"x0": "0", "x1": "0"})
    with pytest.raises(PreconditionError):
        completeness_for(toy_compiled, sloppy)


def test_random_provers_are_seeded_by_question(toy_compiled):
    alice_q, bob_q = sample_round(toy_compiled.test_params, np.random.default_rng(5))
    first, again = RandomTestStrategy(2, seed=9), RandomTestStrategy(2, seed=9)
    for (ka, pa), (kb, pb) in zip(first.alice_measurement(alice_q).items(), again.alice_measurement(alice_q).items()):
        assert ka == kb
        np.testing.assert_allclose(pa, pb)
    joint = first.joint_distribution(alice_q, bob_q)
    assert sum(joint.values()) == pytest.approx(1.0, abs=1e-10)


def test_random_provers_exact_value_is_a_probability(toy_compiled):
    exact = exact_test_value(toy_compiled.test_params, RandomTestStrategy(2, seed=1))
    assert 0.0 <= exact.full <= 1.0
    assert exact.full <= exact.linear + 1e-12


def test_uniform_answers_accept_a_quarter(toy_compiled):
    estimate = monte_carlo_value(toy_compiled.game, UniformAnswerStrategy(), 4000, seed=2)
    assert estimate.contains(0.25)


def test_implicit_game_shape(toy_compiled):
    game = toy_compiled.game
    assert game.answer_arity == (3, 1)
    assert game.randomness_budget > 0
    assert game.provenance[0] == "longcode"


def test_implicit_game_plays_honest_rounds(toy, toy_compiled):
    game = as_implicit_game(toy_compiled.test_params)
    honest = completeness_for(toy_compiled, toy.strategies["perfect"])
    provers = completeness_strategy(honest.p, toy_compiled.test_params)
    assert provers.dim == honest.dim
    rng = np.random.default_rng(7)
    for _ in range(10):
        x, y = game.sampler(rng)
        a, b = provers.answer(x, y, rng)
        assert game.decider(x, y, a, b) in (0, 1)


def test_round_capacity(toy_compiled):
    bcs, dist = toy_compiled.bcs, toy_compiled.dist
    with pytest.raises(CapacityError):
        TestParams(NoiseSpec(1, 10), 9, bcs, dist)


def test_lcs_view(toy_compiled):
    view = as_lcs_view(toy_compiled.test_params)
    equations = view.equations(50, seed=4)
    assert len(equations) == 50
    assert equations == view.equations(50, seed=4)
    plus, minus = view.constant_assignment_fraction(50, seed=4)
    assert plus + minus == pytest.approx(1.0)
    assert 0.0 <= view.random_assignment_fraction(50, seed=4) <= 1.0
    assert all(eq.rhs in (1, -1) and len(eq.variables) == 3 for eq in equations)


def test_repeated_query_variables_are_flagged():
    assert ParityEquation(("q1", "q1", "q2"), 1).degenerate
    assert not ParityEquation(("q1", "q2", "q3"), -1).degenerate


def test_projection_map_of_a_round(toy_compiled):
    dom = round_domains(toy_compiled.test_params, ((("x0", "x1"), "x0"),))
    image = projection_map(dom.W, dom.U)
    assert image.tolist() == [0, 0, 1, 1]
