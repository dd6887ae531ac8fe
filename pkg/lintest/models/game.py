from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property
from typing import Callable, Dict, FrozenSet, Hashable, List, Mapping, Tuple

import numpy as np

from lintest.models.cube import CubeSubset, VarSet
from lintest.utils.exceptions import DomainError

Label = Hashable
Pair = Tuple[Label, Label]
DeciderTuple = Tuple[Label, Label, Label, Label]


def _unique(seq) -> list:
    seen = {}
    for item in seq:
        seen.setdefault(item, None)
    return list(seen)


@dataclass(frozen=True)
class ExplicitGame:
    """
    A nonlocal game with exact rational question distribution and a sparse
    decider: D(x, y, a, b) = 1 exactly for the tuples in `accepted`.
    """
    questions: Tuple[Label, ...]
    answers: Mapping[Label, Tuple[Label, ...]]
    dist: Mapping[Pair, Fraction]
    accepted: FrozenSet[DeciderTuple]
    provenance: Tuple[str, ...] = ()

    def __post_init__(self):
        questions = tuple(self.questions)
        if len(set(questions)) != len(questions):
            raise DomainError("duplicate question labels")
        answers = {q: tuple(self.answers.get(q, ())) for q in questions}
        dist = {pair: Fraction(p) for pair, p in self.dist.items() if Fraction(p) != 0}
        object.__setattr__(self, "questions", questions)
        object.__setattr__(self, "answers", answers)
        object.__setattr__(self, "dist", dist)
        object.__setattr__(self, "accepted", frozenset(self.accepted))
        object.__setattr__(self, "provenance", tuple(self.provenance))

        for (x, y), p in dist.items():
            if x not in answers or y not in answers:
                raise DomainError(f"distribution mentions unknown question in {(x, y)!r}")
            if p < 0:
                raise DomainError(f"negative probability on {(x, y)!r}")
        if sum(dist.values(), Fraction(0)) != 1:
            raise DomainError("question distribution does not sum to 1")
        answer_sets = {q: set(a) for q, a in answers.items()}
        for x, y, a, b in self.accepted:
            if x not in answer_sets or y not in answer_sets:
                raise DomainError(f"decider mentions unknown question in {(x, y)!r}")
            if a not in answer_sets[x] or b not in answer_sets[y]:
                raise DomainError(f"decider accepts answers outside O_x x O_y at {(x, y, a, b)!r}")

    @cached_property
    def by_pair(self) -> Dict[Pair, FrozenSet[Tuple[Label, Label]]]:
        grouped: Dict[Pair, set] = {}
        for x, y, a, b in self.accepted:
            grouped.setdefault((x, y), set()).add((a, b))
        return {pair: frozenset(ab) for pair, ab in grouped.items()}

    def accepted_for(self, x: Label, y: Label) -> FrozenSet[Tuple[Label, Label]]:
        return self.by_pair.get((x, y), frozenset())

    def decide(self, x: Label, y: Label, a: Label, b: Label) -> int:
        return int((a, b) in self.accepted_for(x, y))

    def support(self) -> List[Pair]:
        return list(self.dist.keys())

    def alice_questions(self) -> List[Label]:
        return _unique(x for x, _ in self.dist)

    def bob_questions(self) -> List[Label]:
        return _unique(y for _, y in self.dist)


@dataclass(frozen=True)
class ImplicitGame:
    """A game given only by a seeded question sampler and a decider."""
    sampler: Callable[[np.random.Generator], Pair]
    decider: Callable[[Label, Label, Label, Label], int]
    randomness_budget: int
    answer_arity: Tuple[int, int]
    provenance: Tuple[str, ...] = ()


@dataclass(frozen=True)
class Constraint:
    label: Label
    context: VarSet
    satisfying: CubeSubset

    def __post_init__(self):
        if self.satisfying.domain != self.context:
            raise DomainError(f"constraint {self.label!r}: satisfying set over the wrong context")


@dataclass(frozen=True)
class BCS:
    variables: Tuple[str, ...]
    constraints: Tuple[Constraint, ...]

    def __post_init__(self):
        variables = tuple(self.variables)
        constraints = tuple(self.constraints)
        object.__setattr__(self, "variables", variables)
        object.__setattr__(self, "constraints", constraints)
        if len(set(variables)) != len(variables):
            raise DomainError("duplicate variables")
        known = set(variables)
        for c in constraints:
            missing = [n for n in c.context.names if n not in known]
            if missing:
                raise DomainError(f"constraint {c.label!r} uses unknown variables {missing}")
        if len({c.label for c in constraints}) != len(constraints):
            raise DomainError("duplicate constraint labels")

    @cached_property
    def _by_label(self) -> Dict[Label, Constraint]:
        return {c.label: c for c in self.constraints}

    def constraint(self, label: Label) -> Constraint:
        try:
            return self._by_label[label]
        except KeyError:
            raise DomainError(f"no constraint labelled {label!r}")

    @property
    def labels(self) -> List[Label]:
        return [c.label for c in self.constraints]


def parity_set(context: VarSet, parity: int) -> CubeSubset:
    """Assignments whose product of values is `parity`."""
    # odd popcount <=> product -1
    want = 0 if parity == 1 else 1
    return CubeSubset.from_points(
        context, (p for p in range(context.npoints) if p.bit_count() & 1 == want)
    )


@dataclass(frozen=True)
class LCS:
    """A BCS whose constraints are parity equations prod_{j in S_i} x_j = b_i."""
    bcs: BCS
    parity: Mapping[Label, int]

    def __post_init__(self):
        object.__setattr__(self, "parity", dict(self.parity))
        for c in self.bcs.constraints:
            b = self.parity.get(c.label)
            if b not in (1, -1):
                raise DomainError(f"equation {c.label!r} needs a parity of +1 or -1")
            if c.satisfying != parity_set(c.context, b):
                raise DomainError(f"equation {c.label!r}: satisfying set is not the parity set")

    @classmethod
    def from_equations(cls, variables, equations) -> "LCS":
        """equations: iterable of (label, variable names, parity)"""
        constraints = []
        parity = {}
        for label, names, b in equations:
            context = VarSet(tuple(names))
            constraints.append(Constraint(label, context, parity_set(context, b)))
            parity[label] = b
        return cls(BCS(tuple(variables), tuple(constraints)), parity)


@dataclass(frozen=True)
class ProjSupportDist:
    """
    Distribution on (pair question, single question) with the single one drawn
    from the pair.
    """
    dist: Mapping[Pair, Fraction]

    def __post_init__(self):
        dist = {k: Fraction(p) for k, p in self.dist.items() if Fraction(p) != 0}
        object.__setattr__(self, "dist", dist)
        for (k, kp), p in dist.items():
            if not (isinstance(k, tuple) and len(k) == 2 and kp in k):
                raise DomainError(f"{(k, kp)!r} is not of the form ((i, i'), j) with j in (i, i')")
            if p < 0:
                raise DomainError("negative probability")
        if sum(dist.values(), Fraction(0)) != 1:
            raise DomainError("projected distribution does not sum to 1")

    def items(self):
        return self.dist.items()


@dataclass(frozen=True)
class RepetitionParams:
    u: int
    C: float = 1.0
    c: float = 1.0

    def __post_init__(self):
        if self.u < 1:
            raise DomainError(f"repetition count must be positive, got {self.u}")
        if self.C <= 0 or self.c <= 0:
            raise DomainError("repetition constants must be positive")
