import json
from datetime import datetime, timezone
from typing import Any, Dict, List, Literal, Optional

from pydantic import BaseModel, ConfigDict, Field, field_validator

from lintest.schemas.game import BCSSchema


class ValueEstimate(BaseModel):
    model_config = ConfigDict(from_attributes=True)

    point: float = Field(..., ge=0, le=1, description="Estimated winning probability")
    radius: float = Field(0.0, ge=0, description="3-sigma half-width, 0 for exact values")
    samples: int = Field(0, ge=0, description="Rounds or strategies evaluated")
    method: Literal["exact", "monte_carlo", "seesaw"]
    exact: Optional[str] = Field(None, description="Exact rational value when known, as p/q")

    @field_validator("point", mode="before")
    @classmethod
    def clamp(cls, v: float) -> float:
        # rounding can leave exact evaluations a hair outside [0, 1]
        v = float(v)
        if -1e-9 < v < 0:
            return 0.0
        if 1 < v < 1 + 1e-9:
            return 1.0
        return v

    def contains(self, value: float, slack: float = 0.0) -> bool:
        return abs(self.point - value) <= self.radius + slack


class InequalityEntry(BaseModel):
    name: str
    lhs: float
    rhs: float
    relation: Literal["<=", ">="]
    margin: float = Field(..., description="Slack in the direction of the relation")
    passed: bool

    @classmethod
    def check(cls, name: str, lhs: float, relation: str, rhs: float, tol: float = 0.0) -> "InequalityEntry":
        margin = rhs - lhs if relation == "<=" else lhs - rhs
        return cls(
            name=name, lhs=float(lhs), rhs=float(rhs), relation=relation,
            margin=float(margin), passed=bool(margin >= -tol),
        )


class AuditReport(BaseModel):
    model_config = ConfigDict(from_attributes=True)

    epsilon: str
    delta: float
    test_value: ValueEstimate
    linear_value: Optional[float] = Field(None, description="Acceptance of the linear check alone")
    test_bias: float
    entries: List[InequalityEntry]

    @property
    def flagged(self) -> List[str]:
        return [e.name for e in self.entries if not e.passed]

    def entry(self, name: str) -> InequalityEntry:
        for e in self.entries:
            if e.name == name:
                return e
        raise KeyError(name)


class SuiteResult(BaseModel):
    name: str
    passed: bool
    asserting: bool = Field(True, description="False for report-only suites")
    checks: List[InequalityEntry] = Field(default_factory=list)
    estimates: Dict[str, ValueEstimate] = Field(default_factory=dict)
    audit: Optional[AuditReport] = None
    notes: List[str] = Field(default_factory=list)


class RunReport(BaseModel):
    """Everything needed to re-run a verification: config, seed, version and results."""
    model_config = ConfigDict(from_attributes=True)

    version: str
    seed: int
    config: Dict[str, Any]
    suites: List[SuiteResult]
    created_at: Optional[str] = None

    @property
    def passed(self) -> bool:
        return all(s.passed for s in self.suites if s.asserting)

    @property
    def failed(self) -> List[str]:
        return [s.name for s in self.suites if s.asserting and not s.passed]

    def stamp(self) -> "RunReport":
        return self.model_copy(update={"created_at": datetime.now(timezone.utc).isoformat()})

    def dumps(self, include_timestamp: bool = True) -> str:
        exclude = None if include_timestamp else {"created_at"}
        return json.dumps(self.model_dump(mode="json", exclude=exclude), sort_keys=True, indent=2)


class RoundTranscript(BaseModel):
    index: int
    seed: List[int]
    alice_q: Any
    bob_q: Any
    answers: List[Any]
    verdict: Any


class TestParamsSchema(BaseModel):
    __test__ = False
    model_config = ConfigDict(from_attributes=True)

    epsilon: str = Field(..., description="Noise rate p/q")
    u: int = Field(..., ge=1)
    section_policy: Literal["lexmin", "lexmax"] = "lexmin"
    seed: int
    bcs: BCSSchema


class SoundnessChain(BaseModel):
    """Soundness parameters through repair, projection and repetition."""
    s_tilde: float
    s_repaired: float
    s_projected: float
    s_repeated: float
    target: float = Field(..., description="4 eps delta^2")
    s_prime: float = Field(..., description="1 - (1 - delta)^2 / 36")
    delta: float
    epsilon: str
    u: int
    separated: bool = Field(..., description="True when s_repeated < target")
