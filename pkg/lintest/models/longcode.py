import hashlib
from dataclasses import dataclass
from functools import cached_property
from typing import Optional, Tuple

from lintest import config
from lintest.models.cube import BoolFun, NoiseSpec, SectionPolicy, VarSet
from lintest.models.game import BCS, Label, ProjSupportDist
from lintest.services.boolfun import section, section_conditioned
from lintest.utils.exceptions import CapacityError, DomainError, EmptyConstraintError

Round = Tuple[Label, Label]
Answers = Tuple[int, int, int]


@dataclass(frozen=True, eq=False)
class TestParams:
    """
    Parameters of the long-code test over a projected BCS. Each sampled round
    pairs a constraint k (Alice's block) with a constraint j contained in it
    (the block Bob may be asked about).
    """
    __test__ = False

    epsilon: NoiseSpec
    u: int
    bcs: BCS
    dist: ProjSupportDist
    section_policy: SectionPolicy = SectionPolicy.LEXMIN
    seed: int = config.DEFAULT_SEED

    def __post_init__(self):
        if self.u < 1:
            raise DomainError(f"repetition count must be positive, got {self.u}")
        if not 0 <= self.seed < 1 << 64:
            raise DomainError(f"seed {self.seed} is not a 64-bit integer")
        widest = 0
        for (k, j), _ in self.dist.items():
            outer, inner = self.bcs.constraint(k), self.bcs.constraint(j)
            for c in (outer, inner):
                if not len(c.satisfying):
                    raise EmptyConstraintError(f"constraint {c.label!r} has no satisfying assignment")
            if not inner.context.issubset(outer.context):
                raise DomainError(f"context of {j!r} is not contained in that of {k!r}")
            widest = max(widest, len(outer.context))
        if self.u * widest > config.CUBE_CAP:
            raise CapacityError("variables per round", self.u * widest, config.CUBE_CAP)


@dataclass(frozen=True)
class TestQuery:
    """A Bob query (V, h): a cube and a function over it in section form."""
    __test__ = False

    domain: VarSet
    table: int

    @property
    def function(self) -> BoolFun:
        return BoolFun(self.domain, self.table)

    @cached_property
    def key(self) -> str:
        digest = hashlib.sha1()
        digest.update("\x1f".join(self.domain.names).encode())
        digest.update(b"\x00")
        digest.update(format(self.table, "x").encode())
        return f"z{digest.hexdigest()[:16]}"


@dataclass(frozen=True, eq=False)
class AliceQuestion:
    W: VarSet
    U: VarSet
    C: BoolFun
    f: BoolFun
    g: BoolFun
    gprime: BoolFun
    rounds: Tuple[Round, ...]
    policy: SectionPolicy = SectionPolicy.LEXMIN
    mu: Optional[BoolFun] = None

    def __post_init__(self):
        if not self.U.issubset(self.W):
            raise DomainError("U is not contained in W")
        if self.C.table == 0:
            raise EmptyConstraintError()

    @cached_property
    def f_section(self) -> Tuple[BoolFun, int]:
        return section(self.f)

    @cached_property
    def g_section(self) -> Tuple[BoolFun, int]:
        return section_conditioned(self.g, self.C, self.policy)

    @cached_property
    def gprime_section(self) -> Tuple[BoolFun, int]:
        return section_conditioned(self.gprime, self.C, self.policy)

    @cached_property
    def rhs(self) -> int:
        return self.f_section[1] * self.g_section[1] * self.gprime_section[1]

    @cached_property
    def queries(self) -> Tuple[TestQuery, TestQuery, TestQuery]:
        """Answer order: (U, s_U(f)), (W, s_{g,C}), (W, s_{g',C})."""
        return (
            TestQuery(self.U, self.f_section[0].table),
            TestQuery(self.W, self.g_section[0].table),
            TestQuery(self.W, self.gprime_section[0].table),
        )

    @cached_property
    def key(self) -> str:
        digest = hashlib.sha1()
        for q in self.queries:
            digest.update(q.key.encode())
        digest.update(str(self.rhs).encode())
        return f"w{digest.hexdigest()[:16]}"


@dataclass(frozen=True)
class BobQuestion:
    """
    One of Alice's three queries. `contexts` names the constraint of every
    block of the query's cube, which a quantum Bob needs to pick a measurement.
    """
    query: TestQuery
    slot: int
    contexts: Tuple[Label, ...]

    def __post_init__(self):
        if self.slot not in (0, 1, 2):
            raise DomainError(f"query slot must be 0, 1 or 2, got {self.slot}")


@dataclass(frozen=True)
class RoundVerdict:
    rhs: int
    linear_ok: bool
    consistency_ok: bool

    @property
    def accept(self) -> bool:
        return self.linear_ok and self.consistency_ok


@dataclass(frozen=True)
class ParityEquation:
    """z_1 z_2 z_3 = rhs over content-addressed query variables."""
    variables: Tuple[str, str, str]
    rhs: int

    @property
    def degenerate(self) -> bool:
        return len(set(self.variables)) < 3
