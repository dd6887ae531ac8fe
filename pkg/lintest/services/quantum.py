import logging
from typing import Dict, Iterable, Optional, Sequence, Tuple, Union

import numpy as np

from lintest.models.cube import CubePoint, VarSet
from lintest.models.operators import (
    BinaryObservable, GeneralStrategy, Label, POVM, PVM, SyncStrategy, as_cmatrix, max_abs
)
from lintest.utils.exceptions import DomainError, InvalidObservableError

logger = logging.getLogger(__name__)

Strategy = Union[SyncStrategy, GeneralStrategy]

PAULI_I = np.eye(2, dtype=np.complex128)
PAULI_X = np.array([[0, 1], [1, 0]], dtype=np.complex128)
PAULI_Y = np.array([[0, -1j], [1j, 0]], dtype=np.complex128)
PAULI_Z = np.array([[1, 0], [0, -1]], dtype=np.complex128)


def _same_dims(*matrices: np.ndarray) -> int:
    dims = {m.shape for m in matrices}
    if len(dims) != 1:
        raise DomainError(f"dimension mismatch: {sorted(dims)}")
    return matrices[0].shape[0]


def hs_inner(A, B) -> complex:
    """Normalized Hilbert-Schmidt inner product Tr(A^dagger B)/d."""
    A, B = as_cmatrix(A), as_cmatrix(B)
    d = _same_dims(A, B)
    return complex(np.sum(A.conj() * B) / d)


def mes_vector(d: int) -> np.ndarray:
    return np.eye(d, dtype=np.complex128).reshape(-1) / np.sqrt(d)


def mes_identity_check(A, B) -> float:
    """|<psi|A (x) B|psi> - Tr(A B^T)/d| with psi maximally entangled."""
    A, B = as_cmatrix(A), as_cmatrix(B)
    d = _same_dims(A, B)
    psi = mes_vector(d)
    lhs = psi.conj() @ np.kron(A, B) @ psi
    rhs = np.trace(A @ B.T) / d
    return float(abs(lhs - rhs))


def _pair_value(strategy: Strategy, P: np.ndarray, Q: np.ndarray) -> float:
    if isinstance(strategy, SyncStrategy):
        # Tr(PQ) = sum_ij P_ij Q_ji
        return float(np.real(np.sum(P * Q.T))) / strategy.dim
    M = strategy.state.reshape(strategy.dim_a, strategy.dim_b)
    return float(np.real(np.sum(M.conj() * (P @ M @ Q.T))))


def _measurements(strategy: Strategy, x: Label, y: Label):
    if isinstance(strategy, SyncStrategy):
        return strategy[x], strategy[y]
    return strategy.alice_measurement(x), strategy.bob_measurement(y)


def correlation(strategy: Strategy, x: Label, y: Label) -> Dict[Tuple[Label, Label], float]:
    """Joint answer distribution p(a, b | x, y)."""
    first, second = _measurements(strategy, x, y)
    return {
        (a, b): _pair_value(strategy, P, Q)
        for a, P in first.items()
        for b, Q in second.items()
    }


def winning_probability(game, strategy: Strategy) -> float:
    """
    Exact winning probability over the question distribution.
    Raises: ConfigurationError when a supported question has no measurement
    """
    total = 0.0
    for (x, y), p in game.dist.items():
        first, second = _measurements(strategy, x, y)
        won = 0.0
        for a, b in game.accepted_for(x, y):
            P, Q = first.get(a), second.get(b)
            if P is not None and Q is not None:
                won += _pair_value(strategy, P, Q)
        total += float(p) * won
    return total


def bias(game, strategy: Strategy) -> float:
    return 2 * winning_probability(game, strategy) - 1


def _observable(m) -> BinaryObservable:
    return m if isinstance(m, BinaryObservable) else BinaryObservable(m)


def triple_trace_gap(
    ys: Sequence, xs: Sequence
) -> Tuple[float, float]:
    """
    Returns: (|Tr(Y1Y2Y3 - X1X2X3)|/d, (6(3 - sum_l Tr(Y_l X_l)/d))^(1/2))
    Raises: InvalidObservableError when an input is not a binary observable
    """
    if len(ys) != 3 or len(xs) != 3:
        raise InvalidObservableError("expected three observables per side")
    Y = [_observable(m).matrix for m in ys]
    X = [_observable(m).matrix for m in xs]
    d = _same_dims(*Y, *X)
    lhs = abs(np.trace(Y[0] @ Y[1] @ Y[2] - X[0] @ X[1] @ X[2])) / d
    overlap = sum(float(np.real(np.trace(y @ x))) / d for y, x in zip(Y, X))
    rhs = np.sqrt(max(0.0, 6 * (3 - overlap)))
    return float(lhs), float(rhs)


def assignment_values(label: Label, context: VarSet) -> Tuple[int, ...]:
    """
    Read an outcome label as an assignment over `context`: either a cube point
    index or a bitstring with '0' for +1 and '1' for -1.
    """
    if isinstance(label, (int, np.integer)) and not isinstance(label, bool):
        return CubePoint.from_index(context, int(label)).values
    if isinstance(label, str) and len(label) == len(context) and set(label) <= {"0", "1"}:
        return tuple(1 if ch == "0" else -1 for ch in label)
    raise DomainError(f"outcome {label!r} is not an assignment over {list(context.names)}")


def observables_from_pvm(Y: PVM, variable: str, context: VarSet) -> BinaryObservable:
    """A_j = sum_a a(j) Y_a for the variable j of the context."""
    pos = context.position(variable)
    A = np.zeros((Y.dim, Y.dim), dtype=np.complex128)
    for label, P in Y.items():
        A += assignment_values(label, context)[pos] * P
    return BinaryObservable(A)


def pvm_from_observables(observables: Sequence, context: VarSet) -> PVM:
    """Joint eigenprojections Y_a = prod_j (I + a(j) A_j)/2 of commuting observables."""
    mats = [_observable(m).matrix for m in observables]
    if len(mats) != len(context):
        raise DomainError(f"{len(mats)} observables for {len(context)} variables")
    d = _same_dims(*mats) if mats else 1
    identity = np.eye(d, dtype=np.complex128)
    projections = []
    for idx in range(context.npoints):
        P = identity
        for sign, A in zip(CubePoint.from_index(context, idx).values, mats):
            P = P @ (identity + sign * A) / 2
        projections.append(P)
    return PVM(tuple(range(context.npoints)), tuple(projections))


def commutator_norm(A: np.ndarray, B: np.ndarray) -> float:
    return max_abs(A @ B - B @ A)


def cauchy_schwarz_gap(As: Iterable, Bs: Iterable) -> Tuple[float, float]:
    """(|sum <A_b, B_b>|, (sum <A_b, A_b>)^(1/2) (sum <B_b, B_b>)^(1/2))"""
    As, Bs = list(As), list(Bs)
    lhs = abs(sum(hs_inner(A, B) for A, B in zip(As, Bs)))
    norm_a = sum(hs_inner(A, A).real for A in As)
    norm_b = sum(hs_inner(B, B).real for B in Bs)
    return float(lhs), float(np.sqrt(norm_a) * np.sqrt(norm_b))


def random_unitary(d: int, rng: np.random.Generator) -> np.ndarray:
    z = (rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))) / np.sqrt(2)
    q, r = np.linalg.qr(z)
    phases = np.diag(r) / np.abs(np.diag(r))
    return q * phases


def random_hermitian(d: int, rng: np.random.Generator) -> np.ndarray:
    z = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
    return (z + z.conj().T) / 2


def random_observable(d: int, rng: np.random.Generator) -> BinaryObservable:
    U = random_unitary(d, rng)
    signs = rng.choice([-1.0, 1.0], size=d)
    return BinaryObservable((U * signs) @ U.conj().T)


def random_pvm(d: int, outcomes: Sequence[Label], rng: np.random.Generator) -> PVM:
    """Random basis, vectors dealt round-robin to outcomes in a random order."""
    U = random_unitary(d, rng)
    columns = rng.permutation(d)
    order = rng.permutation(len(outcomes))
    projections = [np.zeros((d, d), dtype=np.complex128) for _ in outcomes]
    for k, col in enumerate(columns):
        v = U[:, col]
        projections[order[k % len(outcomes)]] += np.outer(v, v.conj())
    return PVM(tuple(outcomes), tuple(projections))


def pvm_from_observable(B: BinaryObservable, plus: Label = 1, minus: Label = -1) -> PVM:
    identity = np.eye(B.dim, dtype=np.complex128)
    return PVM((plus, minus), ((identity + B.matrix) / 2, (identity - B.matrix) / 2))


def observable_from_pvm(Q: PVM, plus: Label = 1, minus: Label = -1) -> np.ndarray:
    zero = np.zeros((Q.dim, Q.dim), dtype=np.complex128)
    P_plus = Q.get(plus)
    P_minus = Q.get(minus)
    return (zero if P_plus is None else P_plus) - (zero if P_minus is None else P_minus)


def sync_as_general(strategy: SyncStrategy, questions: Optional[Iterable[Label]] = None) -> GeneralStrategy:
    """The same correlation as an explicit state: Bob holds the transposed PVMs."""
    labels = list(questions) if questions is not None else strategy.questions()
    alice = {q: POVM.from_pvm(strategy[q]) for q in labels}
    bob = {
        q: POVM(strategy[q].outcomes, tuple(P.T for P in strategy[q].projections))
        for q in labels
    }
    return GeneralStrategy.maximally_entangled(strategy.dim, alice, bob)
