from typing import Any, List

from pydantic import BaseModel, ConfigDict, Field

from lintest.models.operators import PVM, SyncStrategy
from lintest.schemas.common import Matrix, decode_label, decode_matrix, encode_label, encode_matrix
from lintest.utils.exceptions import UsageError


class OutcomeSchema(BaseModel):
    label: Any = Field(..., description="Outcome label")
    projection: Matrix = Field(..., description="Projection as rows of [re, im] pairs")


class MeasurementSchema(BaseModel):
    question: Any
    outcomes: List[OutcomeSchema]


class StrategySchema(BaseModel):
    """A synchronous strategy: one PVM per question on a shared dimension."""
    model_config = ConfigDict(from_attributes=True)

    dim: int = Field(..., ge=1, description="Local dimension d")
    measurements: List[MeasurementSchema]

    @classmethod
    def from_strategy(cls, strategy: SyncStrategy) -> "StrategySchema":
        return cls(
            dim=strategy.dim,
            measurements=[
                MeasurementSchema(
                    question=encode_label(q),
                    outcomes=[
                        OutcomeSchema(label=encode_label(a), projection=encode_matrix(P))
                        for a, P in strategy[q].items()
                    ],
                )
                for q in strategy.questions()
            ],
        )

    def to_strategy(self) -> SyncStrategy:
        measurements = {}
        for m in self.measurements:
            question = decode_label(m.question)
            if question in measurements:
                raise UsageError(f"question {question!r} has two measurements")
            measurements[question] = PVM(
                tuple(decode_label(o.label) for o in m.outcomes),
                tuple(decode_matrix(o.projection) for o in m.outcomes),
            )
        return SyncStrategy(self.dim, measurements)
