import json
import logging
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Dict, Optional

import numpy as np

from lintest import config
from lintest.models.cube import BoolFun, NoiseSpec, SectionPolicy
from lintest.models.game import BCS, ExplicitGame, ImplicitGame, ProjSupportDist, RepetitionParams
from lintest.models.longcode import AliceQuestion, TestParams
from lintest.models.operators import SyncStrategy
from lintest.schemas.common import encode_label
from lintest.schemas.report import SoundnessChain
from lintest.services.games import is_synchronous, projected_bcs, relabel_projected_strategy
from lintest.services.longcode import (
    CompletenessStrategy, as_implicit_game, build_alice_question, completeness_strategy, round_domains,
    round_types, sample_round
)
from lintest.services.soundness import extraction_target, s_prime
from lintest.services.transforms import (
    ensure_nonempty_answers, lift_oracularizable, project, projection_bound, repair_bound,
    repetition_bound
)
from lintest.utils.exceptions import CapacityError, ConfigurationError, DomainError

logger = logging.getLogger(__name__)

STRICT_EPSILON_BOUND = Fraction(1, 72)
REPETITION_SEARCH_CAP = 10**6
PAYLOAD_ENUM_CAP = 4096  # u-tuples of pairs


@dataclass(frozen=True)
class PipelineParams:
    epsilon: NoiseSpec
    u: int = 1
    h: int = 1
    repetition: Optional[RepetitionParams] = None
    delta: float = config.DELTA
    seed: int = config.DEFAULT_SEED
    section_policy: SectionPolicy = SectionPolicy.LEXMIN
    paper_mode: bool = False

    def __post_init__(self):
        if self.h < 0:
            raise ConfigurationError(f"answer length bound must be non-negative, got {self.h}")
        if self.repetition is None:
            object.__setattr__(self, "repetition", RepetitionParams(self.u))
        elif self.repetition.u != self.u:
            raise ConfigurationError("repetition parameters disagree with u")
        if not 0 < self.delta < 1:
            raise ConfigurationError(f"delta must lie in (0, 1), got {self.delta}")
        if self.paper_mode and not 0 < self.epsilon.fraction < STRICT_EPSILON_BOUND:
            raise ConfigurationError(f"--paper-mode needs 0 < epsilon < 1/72, got {self.epsilon}")

    @property
    def s_prime(self) -> float:
        return s_prime(self.delta)

    def describe(self) -> Dict[str, Any]:
        return {
            "epsilon": str(self.epsilon),
            "u": self.u,
            "h": self.h,
            "repetition": {"C": self.repetition.C, "c": self.repetition.c},
            "delta": self.delta,
            "s_prime": self.s_prime,
            "seed": self.seed,
            "section_policy": self.section_policy.value,
            "paper_mode": self.paper_mode,
        }


@dataclass(frozen=True, eq=False)
class CompiledTest:
    source: ExplicitGame
    repaired: ExplicitGame
    projected: ExplicitGame
    bcs: BCS
    dist: ProjSupportDist
    test_params: TestParams
    game: ImplicitGame
    h: int
    passes: tuple = field(default=())


def compile_pipeline(g: ExplicitGame, params: PipelineParams) -> CompiledTest:
    """
    Synchronous game -> repaired game -> projection -> projected BCS ->
    long-code test over u parallel rounds.
    Raises: DomainError for non-synchronous input or answers longer than h bits
    """
    if not is_synchronous(g):
        raise DomainError("pipeline input must be a synchronous game")
    repaired = ensure_nonempty_answers(g, symmetric=True)
    projected = project(repaired)
    bcs, dist = projected_bcs(repaired, params.h)
    test_params = TestParams(params.epsilon, params.u, bcs, dist, params.section_policy, params.seed)
    passes = ("nonempty" if repaired is not g else "nonempty:identity", "project", "bcs", f"longcode:u{params.u}")
    logger.info(
        "compiled %d-question game into %d constraints over %d variables",
        len(g.questions), len(bcs.constraints), len(bcs.variables),
    )
    return CompiledTest(
        g, repaired, projected, bcs, dist, test_params, as_implicit_game(test_params), params.h, passes
    )


def pipeline_compile(g: ExplicitGame, params: PipelineParams) -> ImplicitGame:
    return compile_pipeline(g, params).game


def completeness_for(compiled: CompiledTest, strategy: SyncStrategy) -> CompletenessStrategy:
    """Honest test provers from a perfect oracularizable strategy for the source game."""
    lifted = lift_oracularizable(strategy, compiled.repaired)
    relabelled = relabel_projected_strategy(lifted, compiled.repaired, compiled.h)
    return completeness_strategy(relabelled, compiled.test_params)


def soundness_chain(s_tilde: float, params: PipelineParams) -> SoundnessChain:
    s_repaired = repair_bound(s_tilde)
    s_projected = projection_bound(s_repaired)
    s_repeated = repetition_bound(s_projected, params.repetition)
    target = extraction_target(params.epsilon, params.delta)
    return SoundnessChain(
        s_tilde=s_tilde,
        s_repaired=s_repaired,
        s_projected=s_projected,
        s_repeated=s_repeated,
        target=target,
        s_prime=params.s_prime,
        delta=params.delta,
        epsilon=str(params.epsilon),
        u=params.u,
        separated=s_repeated < target,
    )


def minimal_repetitions(s_tilde: float, params: PipelineParams) -> int:
    """
    Least u whose repetition bound falls below 4 eps delta^2.
    Raises: CapacityError when no u up to the search cap does
    """
    s_projected = projection_bound(repair_bound(s_tilde))
    target = extraction_target(params.epsilon, params.delta)
    C, c = params.repetition.C, params.repetition.c

    def bound(u: int) -> float:
        return repetition_bound(s_projected, RepetitionParams(u, C, c))

    base = max(0.0, 1 - C * (1 - s_projected) ** c)
    if base == 0.0:
        return 1
    if base >= 1.0 or target <= 0:
        raise CapacityError("repetitions", "unbounded", REPETITION_SEARCH_CAP)
    guess = max(1, math.floor(2 * math.log(target) / math.log(base)))
    if guess > REPETITION_SEARCH_CAP:
        raise CapacityError("repetitions", guess, REPETITION_SEARCH_CAP)
    u = guess
    while u > 1 and bound(u - 1) < target:
        u -= 1
    while bound(u) >= target:
        u += 1
        if u > REPETITION_SEARCH_CAP:
            raise CapacityError("repetitions", u, REPETITION_SEARCH_CAP)
    return u


def question_payload(alice_q: AliceQuestion) -> Dict[str, Any]:
    """What the sampler actually sends Alice."""
    return {
        "W": list(alice_q.W.names),
        "U": list(alice_q.U.names),
        "C": alice_q.C.hex,
        "f": alice_q.f.hex,
        "g": alice_q.g.hex,
        "gprime": alice_q.gprime.hex,
        "rounds": encode_label(alice_q.rounds),
    }


def _payload_bytes(alice_q: AliceQuestion) -> int:
    return len(json.dumps(question_payload(alice_q), sort_keys=True, separators=(",", ":")).encode())


def payload_size(compiled: CompiledTest, samples: int = 32, seed: Optional[int] = None) -> int:
    """
    Largest serialized Alice question in bytes. The size depends only on the
    sampled pairs, so every u-tuple of pairs is tried when there are at most
    PAYLOAD_ENUM_CAP of them; otherwise `samples` seeded rounds are drawn.
    """
    params = compiled.test_params
    if len(params.dist.dist) ** params.u <= PAYLOAD_ENUM_CAP:
        largest = 0
        for rounds, _ in round_types(params):
            dom = round_domains(params, rounds)
            blank = BoolFun(dom.W, 0)
            alice_q = build_alice_question(params, rounds, BoolFun(dom.U, 0), blank, blank)
            largest = max(largest, _payload_bytes(alice_q))
        return largest
    seed = params.seed if seed is None else seed
    return max(
        _payload_bytes(sample_round(params, np.random.default_rng([seed, i]))[0]) for i in range(samples)
    )
