import json
import logging
import math
from bisect import bisect_right
from fractions import Fraction
from typing import Dict, Iterable, List, Mapping, Set, Tuple

import numpy as np

from lintest import config
from lintest.models.cube import CubeSubset, VarSet
from lintest.models.game import (
    BCS, LCS, Constraint, ExplicitGame, ImplicitGame, Label, Pair, ProjSupportDist
)
from lintest.models.operators import PVM, SyncStrategy
from lintest.services.boolfun import projection_map
from lintest.services.quantum import (
    bias, hs_inner, observable_from_pvm, observables_from_pvm
)
from lintest.utils.exceptions import (
    CapacityError, DomainError, InvalidMeasurementError
)

logger = logging.getLogger(__name__)

NO_VARIABLE = ("none",)


def _jsonable(label):
    if isinstance(label, tuple):
        return [_jsonable(x) for x in label]
    return label


def label_str(label: Label) -> str:
    if isinstance(label, str):
        return label
    return json.dumps(_jsonable(label), separators=(",", ":"))


def bit_label(index: int, width: int) -> str:
    return format(index, f"0{width}b") if width else ""


def bits_index(answer: Label, h: int) -> int:
    """
    Index of a bitstring answer padded with zeros to length h; '0' is +1.
    Raises: DomainError for non-bitstrings, CapacityError when longer than h
    """
    if not isinstance(answer, str) or set(answer) - {"0", "1"}:
        raise DomainError(f"answer {answer!r} is not a bitstring")
    if len(answer) > h:
        raise CapacityError(f"answer length of {answer!r}", len(answer), h)
    padded = answer + "0" * (h - len(answer))
    return int(padded, 2) if padded else 0


class ExactSampler:
    """Draws labels with exact rational weights using one integer per draw."""

    def __init__(self, items: Iterable[Tuple[Label, Fraction]]):
        items = [(label, Fraction(p)) for label, p in items if Fraction(p) > 0]
        if not items:
            raise DomainError("cannot sample from an empty distribution")
        self.labels = [label for label, _ in items]
        self.denominator = math.lcm(*(p.denominator for _, p in items))
        if self.denominator >= 1 << 62:
            raise CapacityError("sampling denominator", self.denominator, 1 << 62)
        cumulative, running = [], 0
        for _, p in items:
            running += int(p * self.denominator)
            cumulative.append(running)
        if running != self.denominator:
            raise DomainError("sampling weights do not sum to 1")
        self._cumulative = cumulative

    @property
    def bits(self) -> int:
        return max(1, (self.denominator - 1).bit_length())

    def draw(self, rng: np.random.Generator) -> Label:
        r = int(rng.integers(0, self.denominator))
        return self.labels[bisect_right(self._cumulative, r)]


def as_implicit(g: ExplicitGame) -> ImplicitGame:
    sampler = ExactSampler(g.dist.items())
    widths = [max(1, len(g.answers[q]) - 1).bit_length() for q in g.questions]
    return ImplicitGame(
        sampler=sampler.draw,
        decider=g.decide,
        randomness_budget=sampler.bits,
        answer_arity=(max(widths), max(widths)),
        provenance=g.provenance + ("implicit",),
    )


def is_synchronous(g: ExplicitGame) -> bool:
    for (x, y), p in g.dist.items():
        if g.dist.get((y, x), Fraction(0)) != p:
            return False
    return all(a == b for x, y, a, b in g.accepted if x == y)


def is_projection(g: ExplicitGame) -> bool:
    for x, y in g.dist:
        winners: Dict[Label, int] = {}
        for a, _ in g.accepted_for(x, y):
            winners[a] = winners.get(a, 0) + 1
            if winners[a] > 1:
                return False
    return True


def _agreement(first: Constraint, second: Constraint) -> Set[Tuple[int, int]]:
    common = VarSet(tuple(n for n in first.context.names if n in second.context))
    left = projection_map(first.context, common)
    right = projection_map(second.context, common)
    by_key: Dict[int, List[int]] = {}
    for b in second.satisfying.members():
        by_key.setdefault(int(right[b]), []).append(b)
    return {
        (a, b)
        for a in first.satisfying.members()
        for b in by_key.get(int(left[a]), [])
    }


def bcs_game(B: BCS, pi: Mapping[Pair, Fraction]) -> ExplicitGame:
    """Constraint-constraint game: answers are satisfying assignments (cube indices)."""
    if isinstance(pi, ProjSupportDist):
        pi = pi.dist
    questions = []
    for x, y in pi:
        questions.extend([x, y])
    questions = list(dict.fromkeys(questions))
    answers = {k: tuple(B.constraint(k).satisfying.members()) for k in questions}
    for k, opts in answers.items():
        if not opts:
            logger.warning("constraint %r has no satisfying assignment", k)
    pairs = list(dict.fromkeys(list(pi.keys()) + [(k, k) for k in questions]))
    accepted = set()
    for x, y in pairs:
        for a, b in _agreement(B.constraint(x), B.constraint(y)):
            accepted.add((x, y, a, b))
    return ExplicitGame(tuple(questions), answers, dict(pi), frozenset(accepted), ("bcs",))


def projected_bcs(g: ExplicitGame, h: int) -> Tuple[BCS, ProjSupportDist]:
    """
    The BCS whose constraint-constraint game is the projection of g: one
    constraint per supported pair (i, i') over S_i + S_i', one per single
    question i over S_i, with h variables q<i>#<j> per question.
    """
    if not is_synchronous(g):
        raise DomainError("projected_bcs needs a synchronous game")
    for x in g.questions:
        for a in g.answers[x]:
            bits_index(a, h)

    singles = list(dict.fromkeys(q for pair in g.dist for q in pair))
    pairs = list(g.dist.keys())
    collisions = set(pairs) & set(singles)
    if collisions:
        raise DomainError(f"pair labels collide with question labels: {sorted(map(repr, collisions))}")

    names = {x: tuple(f"q{label_str(x)}#{j}" for j in range(h)) for x in singles}
    variables = tuple(n for x in singles for n in names[x])

    def diagonal(x) -> CubeSubset:
        context = VarSet(names[x])
        return CubeSubset.from_points(
            context, (bits_index(a, h) for a in g.answers[x] if g.decide(x, x, a, a))
        )

    constraints = []
    for x, y in pairs:
        if x == y:
            constraints.append(Constraint((x, y), VarSet(names[x]), diagonal(x)))
            continue
        context = VarSet(names[x] + names[y])
        points = ((bits_index(a, h) << h) | bits_index(b, h) for a, b in g.accepted_for(x, y))
        constraints.append(Constraint((x, y), context, CubeSubset.from_points(context, points)))
    for x in singles:
        constraints.append(Constraint(x, VarSet(names[x]), diagonal(x)))

    dist: Dict[Pair, Fraction] = {}
    for (x, y), p in g.dist.items():
        for target in (x, y):
            key = ((x, y), target)
            dist[key] = dist.get(key, Fraction(0)) + p / 2
    return BCS(variables, tuple(constraints)), ProjSupportDist(dist)


def lcs_game(L: LCS, pi: Mapping[Label, Fraction], symmetric: bool = False) -> ExplicitGame:
    """
    Constraint-variable game. Alice gets an equation and answers a satisfying
    bitstring over its context, Bob gets one of its variables and answers a bit.
    With symmetric=True each orientation carries half the mass, so the game is
    synchronous.
    """
    eqs = [i for i, p in pi.items() if Fraction(p) > 0]
    variables = list(L.bcs.variables)
    if set(map(repr, eqs)) & set(map(repr, variables)):
        raise DomainError("equation labels collide with variable names")

    answers: Dict[Label, Tuple[Label, ...]] = {}
    for i in eqs:
        c = L.bcs.constraint(i)
        answers[i] = tuple(bit_label(p, len(c.context)) for p in c.satisfying.members())
    bobs = []
    for i in eqs:
        c = L.bcs.constraint(i)
        bobs.extend(c.context.names if len(c.context) else [NO_VARIABLE])
    for v in dict.fromkeys(bobs):
        answers[v] = ("0",) if v == NO_VARIABLE else ("0", "1")

    dist: Dict[Pair, Fraction] = {}
    accepted = set()
    share = Fraction(1, 2) if symmetric else Fraction(1)
    for i in eqs:
        c = L.bcs.constraint(i)
        targets = c.context.names if len(c.context) else (NO_VARIABLE,)
        mass = Fraction(pi[i]) * share / len(targets)
        for pos, v in enumerate(targets):
            dist[(i, v)] = dist.get((i, v), Fraction(0)) + mass
            for a in answers[i]:
                b = "0" if v == NO_VARIABLE else a[pos]
                accepted.add((i, v, a, b))
                if symmetric:
                    accepted.add((v, i, b, a))
            if symmetric:
                dist[(v, i)] = dist.get((v, i), Fraction(0)) + mass
    if symmetric:
        for q, opts in answers.items():
            accepted.update((q, q, a, a) for a in opts)
    questions = tuple(eqs) + tuple(dict.fromkeys(bobs))
    return ExplicitGame(questions, answers, dist, frozenset(accepted), ("lcs",))


def lcs_bias(L: LCS, pi: Mapping[Label, Fraction], strategy: SyncStrategy) -> Tuple[float, float]:
    """
    Bias of the constraint-variable game two ways: directly from the winning
    probability, and as E_i E_j <A^i_j, B^j>.
    Returns: (direct, formula)
    """
    game = lcs_game(L, pi)
    direct = bias(game, strategy)
    formula = 0.0
    for i, p in pi.items():
        if Fraction(p) == 0:
            continue
        c = L.bcs.constraint(i)
        if not len(c.context):
            raise DomainError(f"equation {i!r} has no variable to query")
        Y = strategy[i]
        satisfying = set(game.answers[i])
        for label, P in Y.items():
            if label not in satisfying and np.max(np.abs(P)) > config.TOL:
                raise InvalidMeasurementError(f"outcome {label!r} of {i!r} does not satisfy the equation")
        for v in c.context.names:
            A = observables_from_pvm(Y, v, c.context)
            B = observable_from_pvm(strategy[v], plus="0", minus="1")
            formula += float(p) / len(c.context) * hs_inner(A.matrix, B).real
    return direct, formula


def relabel_projected_strategy(strategy: SyncStrategy, g: ExplicitGame, h: int) -> SyncStrategy:
    """
    Carry a strategy for project(g) over to bcs_game(projected_bcs(g, h)):
    answer pairs become joint cube indices, single answers their own index.
    """
    measurements: Dict[Label, PVM] = {}
    for x, y in g.dist:
        pvm = strategy[(x, y)]
        if x != y:
            measurements[(x, y)] = PVM(
                tuple((bits_index(a, h) << h) | bits_index(b, h) for a, b in pvm.outcomes),
                pvm.projections,
            )
            continue
        kept_labels, kept = [], []
        for (a, b), P in pvm.items():
            if a == b:
                kept_labels.append(bits_index(a, h))
                kept.append(P)
            elif np.max(np.abs(P)) > config.TOL:
                raise InvalidMeasurementError(f"diagonal question {x!r} answers unequal pair {(a, b)!r}")
        measurements[(x, y)] = PVM(tuple(kept_labels), tuple(kept))
    for x in dict.fromkeys(q for pair in g.dist for q in pair):
        pvm = strategy[x]
        measurements[x] = PVM(tuple(bits_index(a, h) for a in pvm.outcomes), pvm.projections)
    return SyncStrategy(strategy.dim, measurements)
