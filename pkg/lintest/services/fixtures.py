import logging
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Dict, Optional

import numpy as np

from lintest import config
from lintest.models.cube import VarSet
from lintest.models.game import LCS, ExplicitGame, Label
from lintest.models.operators import PVM, BinaryObservable, SyncStrategy, max_abs
from lintest.services.games import bcs_game, bit_label, lcs_game
from lintest.services.quantum import (
    PAULI_I, PAULI_X, PAULI_Y, PAULI_Z, pvm_from_observable, pvm_from_observables
)
from lintest.utils.exceptions import UsageError

logger = logging.getLogger(__name__)

BITS = ("0", "1")


@dataclass(frozen=True, eq=False)
class Fixture:
    name: str
    game: ExplicitGame
    strategies: Dict[str, SyncStrategy] = field(default_factory=dict)
    reference: Dict[str, str] = field(default_factory=dict)
    extras: Dict[str, ExplicitGame] = field(default_factory=dict)
    lcs: Optional[LCS] = None
    weights: Dict[Label, Fraction] = field(default_factory=dict)


def _deterministic(answers: Dict[Label, str], outcomes=BITS) -> SyncStrategy:
    one, zero = np.ones((1, 1)), np.zeros((1, 1))
    return SyncStrategy(1, {
        q: PVM(tuple(outcomes), tuple(one if o == a else zero for o in outcomes))
        for q, a in answers.items()
    })


def chsh() -> Fixture:
    questions = ("A0", "A1", "B0", "B1")
    dist = {(f"A{x}", f"B{y}"): Fraction(1, 4) for x in (0, 1) for y in (0, 1)}
    accepted = {
        (f"A{x}", f"B{y}", a, b)
        for x in (0, 1) for y in (0, 1) for a in BITS for b in BITS
        if (int(a) ^ int(b)) == (x & y)
    }
    game = ExplicitGame(questions, {q: BITS for q in questions}, dist, frozenset(accepted), ("chsh",))

    root = np.sqrt(2)
    observables = {
        "A0": PAULI_Z,
        "A1": PAULI_X,
        "B0": (PAULI_Z + PAULI_X) / root,
        "B1": (PAULI_Z - PAULI_X) / root,
    }
    tsirelson = SyncStrategy(2, {
        q: pvm_from_observable(BinaryObservable(m), plus="0", minus="1")
        for q, m in observables.items()
    })
    return Fixture(
        name="chsh",
        game=game,
        strategies={"classical": _deterministic({q: "0" for q in questions}), "tsirelson": tsirelson},
        reference={"classical": "3/4", "tsirelson": repr((2 + root) / 4)},
    )


def _pauli_square() -> Dict[str, np.ndarray]:
    I, X, Y, Z = PAULI_I, PAULI_X, PAULI_Y, PAULI_Z
    rows = [
        [np.kron(I, Z), np.kron(Z, I), np.kron(Z, Z)],
        [np.kron(X, I), np.kron(I, X), np.kron(X, X)],
        [-np.kron(X, Z), -np.kron(Z, X), np.kron(Y, Y)],
    ]
    return {f"x{i}{j}": rows[i][j] for i in range(3) for j in range(3)}


def magic_square() -> Fixture:
    """
    Rows multiply to +1, columns to -1. The main game is the synchronous
    constraint-variable game; the two-qubit Pauli square wins it perfectly
    with operators that commute on every supported pair.
    """
    variables = [f"x{i}{j}" for i in range(3) for j in range(3)]
    equations = [(f"r{i}", [f"x{i}{j}" for j in range(3)], 1) for i in range(3)]
    equations += [(f"c{j}", [f"x{i}{j}" for i in range(3)], -1) for j in range(3)]
    lcs = LCS.from_equations(variables, equations)
    weights = {label: Fraction(1, 6) for label, _, _ in equations}

    ops = _pauli_square()
    measurements: Dict[Label, PVM] = {}
    for label, names, _ in equations:
        context = VarSet(tuple(names))
        joint = pvm_from_observables([ops[n] for n in names], context)
        kept = [(bit_label(p, len(context)), P) for p, P in joint.items() if max_abs(P) > config.TOL]
        measurements[label] = PVM(tuple(a for a, _ in kept), tuple(P for _, P in kept))
    for name in variables:
        measurements[name] = pvm_from_observable(BinaryObservable(ops[name]), plus="0", minus="1")
    pauli = SyncStrategy(4, measurements)

    rows = [f"r{i}" for i in range(3)]
    cols = [f"c{j}" for j in range(3)]
    pairs = [(r, c) for r in rows for c in cols] + [(c, r) for r in rows for c in cols]
    pairs += [(e, e) for e in rows + cols]
    cc = bcs_game(lcs.bcs, {pair: Fraction(1, len(pairs)) for pair in pairs})

    return Fixture(
        name="magic_square",
        game=lcs_game(lcs, weights, symmetric=True),
        strategies={"pauli": pauli},
        reference={"quantum": "1", "cv_classical": "17/18"},
        extras={"cv": lcs_game(lcs, weights), "cc": cc},
        lcs=lcs,
        weights=weights,
    )


def toy_parity() -> Fixture:
    """Two one-bit questions whose answers must differ, and agree on equal questions."""
    questions = ("x0", "x1")
    dist = {(x, y): Fraction(1, 4) for x in questions for y in questions}
    accepted = {
        (x, y, a, b)
        for x in questions for y in questions for a in BITS for b in BITS
        if (a == b) == (x == y)
    }
    game = ExplicitGame(questions, {q: BITS for q in questions}, dist, frozenset(accepted), ("toy_parity",))
    return Fixture(
        name="toy_parity",
        game=game,
        strategies={"perfect": _deterministic({"x0": "0", "x1": "1"})},
        reference={"classical": "1"},
    )


FIXTURES: Dict[str, Callable[[], Fixture]] = {
    "chsh": chsh,
    "magic_square": magic_square,
    "toy_parity": toy_parity,
}


def fixture(name: str) -> Fixture:
    try:
        build = FIXTURES[name]
    except KeyError:
        raise UsageError(f"unknown fixture {name!r}; choose from {sorted(FIXTURES)}")
    logger.debug("building fixture %s", name)
    return build()
