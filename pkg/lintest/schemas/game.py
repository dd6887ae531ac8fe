from fractions import Fraction
from typing import Any, Dict, List

from pydantic import BaseModel, ConfigDict, Field, field_validator

from lintest.models.cube import CubeSubset, VarSet
from lintest.models.game import BCS, LCS, Constraint, ExplicitGame, ProjSupportDist
from lintest.schemas.common import decode_label, encode_label
from lintest.utils.exceptions import UsageError


def _fraction(text: str) -> Fraction:
    try:
        return Fraction(text)
    except (ValueError, ZeroDivisionError):
        raise UsageError(f"probability {text!r} is not a rational p/q")


class AnswerSet(BaseModel):
    question: Any = Field(..., description="Question label")
    answers: List[Any] = Field(..., description="Allowed answer labels")


class DistEntry(BaseModel):
    x: Any = Field(..., description="Alice's question")
    y: Any = Field(..., description="Bob's question")
    p: str = Field(..., description="Exact probability as p/q")

    @field_validator("p")
    @classmethod
    def rational(cls, v: str) -> str:
        _fraction(v)
        return v


def _dist_entries(dist: Dict) -> List[DistEntry]:
    return [
        DistEntry(x=encode_label(x), y=encode_label(y), p=str(p))
        for (x, y), p in dist.items()
    ]


def _dist_from(entries: List[DistEntry]) -> Dict:
    return {
        (decode_label(e.x), decode_label(e.y)): _fraction(e.p)
        for e in entries
    }


class GameSchema(BaseModel):
    model_config = ConfigDict(from_attributes=True)

    questions: List[Any] = Field(..., description="Question labels, strings or nested arrays")
    answers: List[AnswerSet]
    dist: List[DistEntry] = Field(..., description="Question distribution support")
    accepted: List[List[Any]] = Field(..., description="Accepted (x, y, a, b) tuples")
    provenance: List[str] = Field(default_factory=list)

    @classmethod
    def from_game(cls, g: ExplicitGame) -> "GameSchema":
        return cls(
            questions=[encode_label(q) for q in g.questions],
            answers=[
                AnswerSet(question=encode_label(q), answers=[encode_label(a) for a in g.answers[q]])
                for q in g.questions
            ],
            dist=_dist_entries(g.dist),
            accepted=sorted(
                ([encode_label(t) for t in tup] for tup in g.accepted),
                key=repr,
            ),
            provenance=list(g.provenance),
        )

    def to_game(self) -> ExplicitGame:
        for tup in self.accepted:
            if len(tup) != 4:
                raise UsageError(f"accepted entry {tup!r} is not an (x, y, a, b) tuple")
        return ExplicitGame(
            tuple(decode_label(q) for q in self.questions),
            {
                decode_label(s.question): tuple(decode_label(a) for a in s.answers)
                for s in self.answers
            },
            _dist_from(self.dist),
            frozenset(tuple(decode_label(t) for t in tup) for tup in self.accepted),
            tuple(self.provenance),
        )


class ConstraintSchema(BaseModel):
    label: Any
    context: List[str] = Field(..., description="Ordered variable names")
    satisfying: List[int] = Field(..., description="Satisfying cube point indices")


class BCSSchema(BaseModel):
    model_config = ConfigDict(from_attributes=True)

    variables: List[str]
    constraints: List[ConstraintSchema]
    dist: List[DistEntry] = Field(default_factory=list, description="Optional ((i, i'), j) distribution")

    @classmethod
    def from_bcs(cls, bcs: BCS, dist: ProjSupportDist = None) -> "BCSSchema":
        return cls(
            variables=list(bcs.variables),
            constraints=[
                ConstraintSchema(
                    label=encode_label(c.label),
                    context=list(c.context.names),
                    satisfying=c.satisfying.members(),
                )
                for c in bcs.constraints
            ],
            dist=_dist_entries(dist.dist) if dist is not None else [],
        )

    def to_bcs(self) -> BCS:
        constraints = []
        for c in self.constraints:
            context = VarSet(tuple(c.context))
            constraints.append(
                Constraint(decode_label(c.label), context, CubeSubset.from_points(context, c.satisfying))
            )
        return BCS(tuple(self.variables), tuple(constraints))

    def to_pairs(self) -> Dict:
        """The distribution as plain constraint pairs, for constraint-constraint games."""
        if not self.dist:
            raise UsageError("BCS document carries no distribution")
        return _dist_from(self.dist)

    def to_dist(self) -> ProjSupportDist:
        return ProjSupportDist(self.to_pairs())


class EquationSchema(BaseModel):
    label: Any
    variables: List[str]
    parity: int = Field(..., description="+1 or -1")


class LCSSchema(BaseModel):
    model_config = ConfigDict(from_attributes=True)

    variables: List[str]
    equations: List[EquationSchema]

    @classmethod
    def from_lcs(cls, lcs: LCS) -> "LCSSchema":
        return cls(
            variables=list(lcs.bcs.variables),
            equations=[
                EquationSchema(
                    label=encode_label(c.label),
                    variables=list(c.context.names),
                    parity=lcs.parity[c.label],
                )
                for c in lcs.bcs.constraints
            ],
        )

    def to_lcs(self) -> LCS:
        return LCS.from_equations(
            self.variables,
            [(decode_label(e.label), e.variables, e.parity) for e in self.equations],
        )
