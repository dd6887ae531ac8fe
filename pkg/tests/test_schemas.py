import json

import pytest
from numpy.testing import assert_allclose
from pydantic import ValidationError

from lintest.schemas.common import decode_label, decode_matrix, encode_label, encode_matrix
from lintest.schemas.game import BCSSchema, DistEntry, GameSchema, LCSSchema
from lintest.schemas.report import InequalityEntry, RunReport, SuiteResult, ValueEstimate
from lintest.schemas.strategy import StrategySchema
from lintest.services.games import projected_bcs
from lintest.services.suites import dead_pair_game
from lintest.services.transforms import ensure_nonempty_answers
from lintest.utils.exceptions import UsageError


def _through_json(model):
    return type(model).model_validate(json.loads(json.dumps(model.model_dump(mode="json"))))


def test_labels():
    assert encode_label(("dead", "x0", "x1", -1)) == ["dead", "x0", "x1", -1]
    assert decode_label([["r0", "x00"], "x00"]) == (("r0", "x00"), "x00")
    with pytest.raises(UsageError):
        encode_label(1.5)


def test_matrices(rng):
    m = rng.standard_normal((3, 3)) + 1j * rng.standard_normal((3, 3))
    assert_allclose(decode_matrix(encode_matrix(m)), m)
    with pytest.raises(UsageError):
        decode_matrix([[1.0, 2.0]])
    with pytest.raises(UsageError):
        decode_matrix([[["a", "b"]]])


def test_game_document_keeps_tuple_labels():
    repaired = ensure_nonempty_answers(dead_pair_game(), symmetric=True)
    restored = _through_json(GameSchema.from_game(repaired)).to_game()
    assert restored.questions == repaired.questions
    assert restored.dist == repaired.dist
    assert restored.accepted == repaired.accepted


def test_game_document_rejects_short_accepted_entries(toy):
    doc = GameSchema.from_game(toy.game).model_dump(mode="json")
    doc["accepted"].append(["x0", "x1", "0"])
    with pytest.raises(UsageError):
        GameSchema.model_validate(doc).to_game()


def test_probabilities_must_be_rational():
    with pytest.raises(UsageError):
        DistEntry(x="a", y="b", p="half")
    assert DistEntry(x="a", y="b", p="1/2").p == "1/2"


def test_bcs_document(toy):
    bcs, dist = projected_bcs(toy.game, 1)
    schema = _through_json(BCSSchema.from_bcs(bcs, dist))
    assert schema.to_bcs() == bcs
    assert schema.to_dist().dist == dist.dist
    with pytest.raises(UsageError):
        BCSSchema.from_bcs(bcs).to_pairs()


def test_lcs_document(magic):
    schema = _through_json(LCSSchema.from_lcs(magic.lcs))
    assert schema.to_lcs().parity == magic.lcs.parity


def test_strategy_document(chsh_fixture):
    strategy = chsh_fixture.strategies["tsirelson"]
    restored = _through_json(StrategySchema.from_strategy(strategy)).to_strategy()
    assert restored.dim == 2
    for q in strategy.questions():
        for a, P in strategy[q].items():
            assert_allclose(restored[q][a], P, atol=1e-15)


def test_strategy_document_rejects_duplicate_questions(toy):
    doc = StrategySchema.from_strategy(toy.strategies["perfect"]).model_dump(mode="json")
    doc["measurements"].append(doc["measurements"][0])
    with pytest.raises(UsageError):
        StrategySchema.model_validate(doc).to_strategy()


def test_value_estimate_clamps_rounding_only():
    assert ValueEstimate(point=1 + 1e-12, method="exact").point == 1.0
    assert ValueEstimate(point=-1e-12, method="exact").point == 0.0
    with pytest.raises(ValidationError):
        ValueEstimate(point=1.5, method="exact")
    estimate = ValueEstimate(point=0.5, radius=0.1, samples=100, method="monte_carlo")
    assert estimate.contains(0.55) and not estimate.contains(0.7)


@pytest.mark.parametrize("lhs, relation, rhs, tol, passed", [
    (0.1, "<=", 0.2, 0.0, True),
    (0.3, "<=", 0.2, 0.0, False),
    (0.2 + 1e-12, "<=", 0.2, 1e-9, True),
    (0.5, ">=", 0.2, 0.0, True),
    (0.1, ">=", 0.2, 0.0, False),
])
def test_inequality_entries(lhs, relation, rhs, tol, passed):
    entry = InequalityEntry.check("x", lhs, relation, rhs, tol=tol)
    assert entry.passed is passed
    assert entry.margin == pytest.approx(rhs - lhs if relation == "<=" else lhs - rhs)


def test_run_report_dump_without_timestamp_is_stable():
    ok = InequalityEntry.check("x", 0.0, "<=", 1.0)
    bad = InequalityEntry.check("y", 2.0, "<=", 1.0)
    report = RunReport(
        version="lintest-test",
        seed=1,
        config={},
        suites=[
            SuiteResult(name="a", passed=True, checks=[ok]),
            SuiteResult(name="b", passed=False, checks=[bad]),
            SuiteResult(name="c", passed=False, asserting=False),
        ],
    )
    assert not report.passed
    assert report.failed == ["b"]
    stamped = report.stamp()
    assert stamped.created_at is not None
    assert stamped.dumps(include_timestamp=False) == report.dumps(include_timestamp=False)
    assert "created_at" not in json.loads(report.dumps(include_timestamp=False))
