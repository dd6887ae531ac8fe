import numpy as np
import pytest
from numpy.testing import assert_allclose

from lintest.models.cube import VarSet
from lintest.models.operators import PVM, BinaryObservable, SyncStrategy
from lintest.services.quantum import (
    PAULI_I, PAULI_X, PAULI_Z, cauchy_schwarz_gap, commutator_norm, correlation, hs_inner,
    mes_identity_check, observables_from_pvm, pvm_from_observables, random_hermitian,
    random_observable, random_pvm, sync_as_general, triple_trace_gap, winning_probability
)
from lintest.utils.exceptions import InvalidMeasurementError, InvalidObservableError

TSIRELSON = (2 + np.sqrt(2)) / 4


def test_binary_observable_validation():
    BinaryObservable(PAULI_X)
    with pytest.raises(InvalidObservableError):
        BinaryObservable(2 * PAULI_I)
    with pytest.raises(InvalidObservableError):
        BinaryObservable(np.array([[0, 1], [0, 0]]))


def test_pvm_must_resolve_the_identity():
    half = np.eye(2) / 2
    with pytest.raises(InvalidMeasurementError):
        PVM(("0", "1"), (np.diag([1, 0]), np.zeros((2, 2))))
    with pytest.raises(InvalidMeasurementError):
        PVM(("0", "1"), (half, half))
    with pytest.raises(InvalidMeasurementError):
        PVM(("0", "0"), (np.diag([1, 0]), np.diag([0, 1])))


def test_sync_strategy_rejects_mixed_dimensions():
    with pytest.raises(InvalidMeasurementError):
        SyncStrategy(2, {"q": PVM(("0",), (np.eye(3),))})


def test_maximally_entangled_identity(rng):
    for d in (2, 3, 4):
        A, B = random_hermitian(d, rng), random_hermitian(d, rng)
        assert mes_identity_check(A, B) <= 1e-12


def test_tsirelson_value(chsh_fixture):
    value = winning_probability(chsh_fixture.game, chsh_fixture.strategies["tsirelson"])
    assert value == pytest.approx(TSIRELSON, abs=1e-12)
    classical = winning_probability(chsh_fixture.game, chsh_fixture.strategies["classical"])
    assert classical == pytest.approx(0.75, abs=1e-12)


def test_correlations_are_distributions(chsh_fixture):
    table = correlation(chsh_fixture.strategies["tsirelson"], "A0", "B1")
    assert sum(table.values()) == pytest.approx(1.0, abs=1e-12)
    assert min(table.values()) >= -1e-12


def test_general_state_matches_synchronous_correlation(chsh_fixture):
    sync = chsh_fixture.strategies["tsirelson"]
    general = sync_as_general(sync)
    assert winning_probability(chsh_fixture.game, general) == pytest.approx(
        winning_probability(chsh_fixture.game, sync), abs=1e-12
    )


def test_triple_trace_bound(rng):
    for _ in range(50):
        ys = [random_observable(4, rng) for _ in range(3)]
        xs = [random_observable(4, rng) for _ in range(3)]
        lhs, rhs = triple_trace_gap(ys, xs)
        assert lhs <= rhs + 1e-9
    same = [random_observable(4, rng) for _ in range(3)]
    lhs, rhs = triple_trace_gap(same, same)
    assert lhs == pytest.approx(0.0, abs=1e-10)
    assert rhs == pytest.approx(0.0, abs=1e-7)


def test_triple_trace_needs_three_per_side():
    with pytest.raises(InvalidObservableError):
        triple_trace_gap([PAULI_X, PAULI_Z], [PAULI_X, PAULI_Z])


def test_joint_pvm_recovers_commuting_observables():
    context = VarSet.of("a", "b", "c")
    observables = [np.kron(PAULI_Z, PAULI_I), np.kron(PAULI_I, PAULI_Z), np.kron(PAULI_Z, PAULI_Z)]
    joint = pvm_from_observables(observables, context)
    assert joint.outcomes == tuple(range(8))
    for name, A in zip(context.names, observables):
        assert_allclose(observables_from_pvm(joint, name, context).matrix, A, atol=1e-12)


def test_commutator_norm():
    assert commutator_norm(PAULI_X, PAULI_Z) == pytest.approx(2.0)
    assert commutator_norm(PAULI_Z, PAULI_Z) == 0.0


def test_random_pvm_shapes(rng):
    pvm = random_pvm(4, ("a", "b", "c"), rng)
    assert pvm.dim == 4
    assert_allclose(sum(P for _, P in pvm.items()), np.eye(4), atol=1e-10)


def test_cauchy_schwarz_and_inner_product(rng):
    As = [random_hermitian(3, rng) for _ in range(4)]
    Bs = [random_hermitian(3, rng) for _ in range(4)]
    lhs, rhs = cauchy_schwarz_gap(As, Bs)
    assert lhs <= rhs + 1e-12
    assert hs_inner(np.eye(3), np.eye(3)) == pytest.approx(1.0)
