import logging
import math
from collections.abc import Mapping
from fractions import Fraction
from itertools import product
from typing import Dict, Iterator, Tuple, Union

import numpy as np

from lintest import config
from lintest.models.game import ExplicitGame, ImplicitGame, Label, RepetitionParams
from lintest.models.operators import PVM, SyncStrategy
from lintest.services.games import ExactSampler
from lintest.services.quantum import commutator_norm, winning_probability
from lintest.utils.exceptions import CapacityError, DomainError, NotOracularizableError

logger = logging.getLogger(__name__)

DEAD = "dead"
REPAIR_ANSWERS = {1: "0", -1: "1"}


def ensure_nonempty_answers(g: ExplicitGame, symmetric: bool = False) -> ExplicitGame:
    """
    Replace every supported pair (i, j) with no accepted answer pair by a
    coin-matching round between ("dead", i, j, c) and ("dead", i, j), c = +1/-1,
    won iff both answer c. Returns g itself when nothing is dead.
    """
    dead = [(x, y) for x, y in g.dist if not g.accepted_for(x, y)]
    if not dead:
        return g

    questions = list(g.questions)
    answers = dict(g.answers)
    dist: Dict[Tuple[Label, Label], Fraction] = {
        pair: p for pair, p in g.dist.items() if pair not in set(dead)
    }
    accepted = set(g.accepted)
    for x, y in dead:
        p = g.dist[(x, y)]
        hub = (DEAD, x, y)
        questions.append(hub)
        answers[hub] = tuple(REPAIR_ANSWERS.values())
        accepted.update((hub, hub, a, a) for a in answers[hub])
        for c, bit in REPAIR_ANSWERS.items():
            spoke = (DEAD, x, y, c)
            questions.append(spoke)
            answers[spoke] = tuple(REPAIR_ANSWERS.values())
            accepted.update((spoke, spoke, a, a) for a in answers[spoke])
            if symmetric:
                dist[(spoke, hub)] = p / 4
                dist[(hub, spoke)] = p / 4
                accepted.add((hub, spoke, bit, bit))
            else:
                dist[(spoke, hub)] = p / 2
            accepted.add((spoke, hub, bit, bit))
    logger.info("repaired %d dead question pairs", len(dead))
    return ExplicitGame(
        tuple(questions), answers, dist, frozenset(accepted), g.provenance + ("nonempty",)
    )


def project(g: ExplicitGame) -> ExplicitGame:
    """
    Alice gets a supported pair (x, y), Bob one of x, y with probability 1/2;
    they win iff D(x, y, a1, a2) = 1 and Bob's answer equals the matching a_c.
    On a diagonal pair (x, x) Bob must match both answers.
    """
    pairs = list(g.dist.keys())
    singles = list(dict.fromkeys(q for pair in pairs for q in pair))
    collisions = set(pairs) & set(singles)
    if collisions:
        raise DomainError(f"pair labels collide with question labels: {sorted(map(repr, collisions))}")

    answers: Dict[Label, Tuple[Label, ...]] = {}
    for x, y in pairs:
        answers[(x, y)] = tuple(product(g.answers[x], g.answers[y]))
    for x in singles:
        answers[x] = g.answers[x]

    dist: Dict[Tuple[Label, Label], Fraction] = {}
    accepted = set()
    for (x, y), p in g.dist.items():
        for slot, target in enumerate((x, y)):
            key = ((x, y), target)
            dist[key] = dist.get(key, Fraction(0)) + p / 2
        for a, b in g.accepted_for(x, y):
            if x == y:
                if a == b:
                    accepted.add(((x, y), x, (a, b), a))
                continue
            accepted.add(((x, y), x, (a, b), a))
            accepted.add(((x, y), y, (a, b), b))
    return ExplicitGame(
        tuple(pairs) + tuple(singles), answers, dist, frozenset(accepted), g.provenance + ("project",)
    )


def _implicit_repeat(g: ExplicitGame, u: int) -> ImplicitGame:
    sampler = ExactSampler(g.dist.items())

    def sample(rng: np.random.Generator):
        rounds = [sampler.draw(rng) for _ in range(u)]
        return tuple(x for x, _ in rounds), tuple(y for _, y in rounds)

    def decide(xs, ys, a, b) -> int:
        return int(all(g.decide(*t) for t in zip(xs, ys, a, b)))

    width = max(max(1, len(opts) - 1).bit_length() for opts in g.answers.values())
    return ImplicitGame(
        sampler=sample,
        decider=decide,
        randomness_budget=u * sampler.bits,
        answer_arity=(u * width, u * width),
        provenance=g.provenance + (f"repeat{u}",),
    )


def repeat(g: ExplicitGame, u: int) -> Union[ExplicitGame, ImplicitGame]:
    """
    u-fold parallel repetition. Falls back to the sampler/decider form when
    the product support exceeds the materialization cap.
    """
    if u < 1:
        raise DomainError(f"repetition count must be positive, got {u}")
    if u == 1:
        return g
    support = list(g.dist.items())
    if len(support) ** u > config.REPEAT_CAP:
        logger.info("repetition support %d^%d above cap, using implicit form", len(support), u)
        return _implicit_repeat(g, u)

    dist: Dict[Tuple[Label, Label], Fraction] = {}
    accepted = set()
    questions: Dict[Label, None] = {}
    for combo in product(support, repeat=u):
        xs = tuple(x for (x, _), _ in combo)
        ys = tuple(y for (_, y), _ in combo)
        questions.setdefault(xs)
        questions.setdefault(ys)
        dist[(xs, ys)] = math.prod((p for _, p in combo), start=Fraction(1))
        per_round = [g.accepted_for(x, y) for x, y in zip(xs, ys)]
        for choice in product(*per_round):
            accepted.add((xs, ys, tuple(a for a, _ in choice), tuple(b for _, b in choice)))
    answers = {q: tuple(product(*(g.answers[x] for x in q))) for q in questions}
    return ExplicitGame(
        tuple(questions), answers, dist, frozenset(accepted), g.provenance + (f"repeat{u}",)
    )


def lift_oracularizable(strategy: SyncStrategy, g: ExplicitGame) -> SyncStrategy:
    """
    Strategy for project(g) with A^{xy}_{ab} = A^x_a A^y_b.
    Raises: NotOracularizableError when supported measurements do not commute
    """
    for x, y in g.dist:
        for a, P in strategy[x].items():
            for b, Q in strategy[y].items():
                residual = commutator_norm(P, Q)
                if residual > config.TOL:
                    raise NotOracularizableError(x, y, residual)
    value = winning_probability(g, strategy)
    if value < 1 - 1e-9:
        logger.warning("lifting an imperfect strategy (value %.12f); no guarantee", value)

    measurements: Dict[Label, PVM] = {}
    for x, y in g.dist:
        outcomes, projections = [], []
        for a, P in strategy[x].items():
            for b, Q in strategy[y].items():
                outcomes.append((a, b))
                projections.append(P @ Q)
        measurements[(x, y)] = PVM(tuple(outcomes), tuple(projections))
    for x in dict.fromkeys(q for pair in g.dist for q in pair):
        measurements[x] = strategy[x]
    return SyncStrategy(strategy.dim, measurements)


class _ProductMeasurements(Mapping):
    """Tensor-product PVMs built on first access."""

    def __init__(self, base: SyncStrategy, u: int):
        self._base = base
        self._u = u
        self._cache: Dict[Tuple[Label, ...], PVM] = {}

    def __getitem__(self, questions: Tuple[Label, ...]) -> PVM:
        if questions not in self._cache:
            if not isinstance(questions, tuple) or len(questions) != self._u:
                raise KeyError(questions)
            pvms = [self._base[q] for q in questions]
            outcomes, projections = [], []
            for choice in product(*(list(p.items()) for p in pvms)):
                outcomes.append(tuple(a for a, _ in choice))
                P = choice[0][1]
                for _, Q in choice[1:]:
                    P = np.kron(P, Q)
                projections.append(P)
            self._cache[questions] = PVM(tuple(outcomes), tuple(projections))
        return self._cache[questions]

    def __iter__(self) -> Iterator[Tuple[Label, ...]]:
        return product(self._base.questions(), repeat=self._u)

    def __len__(self) -> int:
        return len(self._base.questions()) ** self._u


def product_strategy(p: SyncStrategy, u: int) -> SyncStrategy:
    """Play p independently in every coordinate: A^{x1..xu}_{a1..au} = (x)_l A^{x_l}_{a_l}."""
    if u < 1:
        raise DomainError(f"repetition count must be positive, got {u}")
    if u == 1:
        return p
    if p.dim**u > config.DIM_CAP:
        raise CapacityError("product dimension", p.dim**u, config.DIM_CAP)
    return SyncStrategy(p.dim**u, _ProductMeasurements(p, u))


def repetition_bound(v: float, params: RepetitionParams) -> float:
    """(1 - C(1 - v)^c)^(u/2)"""
    if not 0 <= v <= 1:
        raise DomainError(f"value {v} outside [0, 1]")
    base = max(0.0, 1 - params.C * (1 - v) ** params.c)
    return base ** (params.u / 2)


def projection_bound(v: float) -> float:
    if not 0 <= v <= 1:
        raise DomainError(f"value {v} outside [0, 1]")
    return math.sqrt((1 + v) / 2)


def repair_bound(v: float) -> float:
    if not 0 <= v <= 1:
        raise DomainError(f"value {v} outside [0, 1]")
    return v + (1 - v) / 2
