import hashlib
import logging
import math
from abc import ABC, abstractmethod
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from itertools import product
from typing import Dict, Iterator, List, Optional, Tuple

import numpy as np

from lintest import config
from lintest.models.cube import BoolFun, VarSet
from lintest.models.game import ImplicitGame, Label
from lintest.models.longcode import (
    AliceQuestion, Answers, BobQuestion, ParityEquation, Round, RoundVerdict, TestParams, TestQuery
)
from lintest.models.operators import PVM, SyncStrategy
from lintest.services.boolfun import (
    bits_table, enumerate_functions, join_points, joint_domain, lift, noise_weight,
    projection_map, random_function, sample_noise, table_bits
)
from lintest.services.games import ExactSampler, bcs_game
from lintest.services.quantum import (
    correlation, observable_from_pvm, pvm_from_observable, random_observable,
    random_unitary, winning_probability
)
from lintest.services.transforms import product_strategy
from lintest.utils.exceptions import CapacityError, PreconditionError, ProtocolError

logger = logging.getLogger(__name__)

SIGNS = (1, -1)
TRIPLES: Tuple[Answers, ...] = tuple(product(SIGNS, repeat=3))


@dataclass(frozen=True)
class RoundDomains:
    W: VarSet
    U: VarSet
    C: BoolFun
    w_sizes: Tuple[int, ...]
    u_sizes: Tuple[int, ...]


@lru_cache(maxsize=1024)
def round_domains(params: TestParams, rounds: Tuple[Round, ...]) -> RoundDomains:
    """W, U and C = prod_l C_{k_l} for the sampled pairs, blocks prefixed l<index>:."""
    w_blocks, u_blocks, members = [], [], []
    for l, (k, j) in enumerate(rounds):
        outer, inner = params.bcs.constraint(k), params.bcs.constraint(j)
        w_blocks.append(outer.context.prefixed(f"l{l}:"))
        u_blocks.append(inner.context.prefixed(f"l{l}:"))
        members.append(table_bits(outer.satisfying.mask, outer.context.npoints))
    W, U = joint_domain(tuple(w_blocks)), joint_domain(tuple(u_blocks))
    joint = members[0]
    for m in members[1:]:
        joint = np.kron(joint, m)
    return RoundDomains(
        W, U, BoolFun(W, bits_table(joint)),
        tuple(len(b) for b in w_blocks), tuple(len(b) for b in u_blocks),
    )


@lru_cache(maxsize=64)
def _round_sampler(params: TestParams) -> ExactSampler:
    return ExactSampler(params.dist.items())


def round_types(params: TestParams) -> Iterator[Tuple[Tuple[Round, ...], Fraction]]:
    """Every u-tuple of supported pairs with its exact probability."""
    for combo in product(list(params.dist.items()), repeat=params.u):
        yield tuple(pair for pair, _ in combo), math.prod((p for _, p in combo), start=Fraction(1))


def build_alice_question(
    params: TestParams, rounds: Tuple[Round, ...], f: BoolFun, g: BoolFun, mu: BoolFun
) -> AliceQuestion:
    dom = round_domains(params, rounds)
    gprime = lift(f, dom.W) * g * mu
    return AliceQuestion(dom.W, dom.U, dom.C, f, g, gprime, rounds, params.section_policy, mu)


def bob_question(alice_q: AliceQuestion, slot: int) -> BobQuestion:
    if slot == 0:
        contexts = tuple(j for _, j in alice_q.rounds)
    else:
        contexts = tuple(k for k, _ in alice_q.rounds)
    return BobQuestion(alice_q.queries[slot], slot, contexts)


def sample_round(params: TestParams, rng: np.random.Generator) -> Tuple[AliceQuestion, BobQuestion]:
    """
    Draw u pairs from the projected distribution, then f over U, g over W and
    the noise mu over W, then Bob's slot uniformly from the three queries.
    """
    sampler = _round_sampler(params)
    rounds = tuple(sampler.draw(rng) for _ in range(params.u))
    dom = round_domains(params, rounds)
    f = random_function(dom.U, rng)
    g = random_function(dom.W, rng)
    mu = sample_noise(params.epsilon, dom.W, rng)
    alice_q = build_alice_question(params, rounds, f, g, mu)
    return alice_q, bob_question(alice_q, int(rng.integers(0, 3)))


def decide(alice_q: AliceQuestion, bob_q: BobQuestion, a: Answers, b: int) -> RoundVerdict:
    """
    Accept iff a1 a2 a3 = m_f m_{g,C} m_{g',C} and Alice's answer in Bob's slot equals b.
    Raises: ProtocolError when Bob's query is not the query in its slot
    """
    if alice_q.queries[bob_q.slot] != bob_q.query:
        raise ProtocolError(f"Bob's query does not match Alice's slot {bob_q.slot}")
    a = tuple(int(x) for x in a)
    if len(a) != 3 or any(x not in SIGNS for x in a) or int(b) not in SIGNS:
        raise ProtocolError(f"answers must be +1/-1, got {a!r} and {b!r}")
    rhs = alice_q.rhs
    return RoundVerdict(rhs, a[0] * a[1] * a[2] == rhs, a[bob_q.slot] == int(b))


def as_implicit_game(params: TestParams) -> ImplicitGame:
    sampler = _round_sampler(params)
    widest = max(len(params.bcs.constraint(k).context) for (k, _), _ in params.dist.items())
    points = 1 << (params.u * widest)
    noise_bits = max(1, (params.epsilon.q - 1).bit_length())
    budget = params.u * sampler.bits + 2 * points + points * noise_bits + 2
    return ImplicitGame(
        sampler=lambda rng: sample_round(params, rng),
        decider=lambda x, y, a, b: int(decide(x, y, a, b).accept),
        randomness_budget=budget,
        answer_arity=(3, 1),
        provenance=("longcode", f"u{params.u}", f"eps{params.epsilon}", params.section_policy.value),
    )


class TestLcsView:
    """
    The test read as a linear system: one parity equation per round over the
    variables z_t named by the content of query t.
    """
    __test__ = False

    def __init__(self, params: TestParams):
        self.params = params

    def sample_equation(self, rng: np.random.Generator) -> ParityEquation:
        alice_q, _ = sample_round(self.params, rng)
        return ParityEquation(tuple(q.key for q in alice_q.queries), alice_q.rhs)

    def equations(self, n: int, seed: Optional[int] = None) -> List[ParityEquation]:
        seed = self.params.seed if seed is None else seed
        return [self.sample_equation(np.random.default_rng([seed, i])) for i in range(n)]

    def constant_assignment_fraction(self, n: int, seed: Optional[int] = None) -> Tuple[float, float]:
        """Fractions of n sampled equations satisfied by z = +1 and by z = -1."""
        eqs = self.equations(n, seed)
        plus = sum(1 for e in eqs if e.rhs == 1) / n
        return plus, 1 - plus

    def random_assignment_fraction(self, n: int, seed: Optional[int] = None, salt: int = 0) -> float:
        """Fraction satisfied by a content-hashed random assignment to Z."""
        def z(name: str) -> int:
            digest = hashlib.sha1(f"{salt}:{name}".encode()).digest()
            return -1 if digest[0] & 1 else 1
        eqs = self.equations(n, seed)
        return sum(1 for e in eqs if math.prod(z(v) for v in e.variables) == e.rhs) / n


def as_lcs_view(params: TestParams) -> TestLcsView:
    return TestLcsView(params)


class TestStrategy(ABC):
    """Anything that answers test rounds: three signs for Alice, one for Bob."""
    __test__ = False

    @abstractmethod
    def answer(
        self, alice_q: AliceQuestion, bob_q: BobQuestion, rng: np.random.Generator
    ) -> Tuple[Answers, int]:
        ...


class QuantumTestStrategy(TestStrategy):
    """
    A synchronous-style test strategy on a maximally entangled state: Alice
    measures a PVM over sign triples, Bob a two-outcome PVM per query.
    """

    @property
    @abstractmethod
    def dim(self) -> int:
        ...

    @abstractmethod
    def alice_measurement(self, alice_q: AliceQuestion) -> PVM:
        ...

    @abstractmethod
    def bob_measurement(self, query: TestQuery, contexts: Tuple[Label, ...]) -> PVM:
        ...

    def bob_observable(self, query: TestQuery, contexts: Tuple[Label, ...]) -> np.ndarray:
        return observable_from_pvm(self.bob_measurement(query, contexts))

    def joint_distribution(self, alice_q: AliceQuestion, bob_q: BobQuestion) -> Dict[Tuple[Answers, int], float]:
        A = self.alice_measurement(alice_q)
        B = self.bob_measurement(bob_q.query, bob_q.contexts)
        return {
            (a, b): float(np.real(np.sum(P * Q.T))) / self.dim
            for a, P in A.items()
            for b, Q in B.items()
        }

    def answer(self, alice_q, bob_q, rng):
        joint = list(self.joint_distribution(alice_q, bob_q).items())
        weights = np.clip([p for _, p in joint], 0.0, None)
        choice = rng.choice(len(joint), p=weights / weights.sum())
        return joint[choice][0]


def _group(pvm: PVM, key) -> PVM:
    blocks: Dict[Label, np.ndarray] = {}
    for label, P in pvm.items():
        k = key(label)
        blocks[k] = blocks[k] + P if k in blocks else P.copy()
    return PVM.from_dict(blocks)


class CompletenessStrategy(QuantumTestStrategy):
    """
    Honest provers built from a perfect strategy p for the constraint game:
    Alice measures the product PVM of her u constraints and answers the three
    query functions at her assignment, Bob measures his contexts and evaluates
    the function he was sent.
    """

    def __init__(self, p: SyncStrategy, params: TestParams):
        value = winning_probability(bcs_game(params.bcs, params.dist), p)
        if value < 1 - 1e-9:
            raise PreconditionError(f"strategy value {value:.12f} is not perfect")
        self.p = p
        self.params = params
        self._joint: Dict[Tuple[Label, Label], Tuple[List[Tuple[int, int]], np.ndarray]] = {}
        self._alice: Dict[str, PVM] = {}
        self._bob: Dict[Tuple[TestQuery, Tuple[Label, ...]], PVM] = {}

    @property
    def dim(self) -> int:
        return self.p.dim ** self.params.u

    def _product(self):
        if self.dim > config.DIM_CAP:
            raise CapacityError("completeness strategy dimension", self.dim, config.DIM_CAP)
        return product_strategy(self.p, self.params.u)

    def _labels(self, contexts: Tuple[Label, ...]) -> Label:
        return contexts[0] if self.params.u == 1 else contexts

    def _sizes(self, contexts: Tuple[Label, ...]) -> Tuple[int, ...]:
        return tuple(len(self.params.bcs.constraint(c).context) for c in contexts)

    @staticmethod
    def _parts(label) -> Tuple[int, ...]:
        return label if isinstance(label, tuple) else (label,)

    @staticmethod
    def alice_bits(alice_q: AliceQuestion, phi: int) -> Answers:
        """(s_U(f)(phi|_U), s_{g,C}(phi), s_{g',C}(phi))"""
        on_u = int(projection_map(alice_q.W, alice_q.U)[phi])
        return (
            alice_q.f_section[0].value(on_u),
            alice_q.g_section[0].value(phi),
            alice_q.gprime_section[0].value(phi),
        )

    def alice_measurement(self, alice_q: AliceQuestion) -> PVM:
        if alice_q.key not in self._alice:
            contexts = tuple(k for k, _ in alice_q.rounds)
            sizes = self._sizes(contexts)
            pvm = self._product()[self._labels(contexts)]
            self._alice[alice_q.key] = _group(
                pvm, lambda label: self.alice_bits(alice_q, join_points(self._parts(label), sizes))
            )
        return self._alice[alice_q.key]

    def bob_measurement(self, query: TestQuery, contexts: Tuple[Label, ...]) -> PVM:
        cache_key = (query, contexts)
        if cache_key not in self._bob:
            sizes = self._sizes(contexts)
            h = query.function
            pvm = self._product()[self._labels(contexts)]
            self._bob[cache_key] = _group(pvm, lambda label: h.value(join_points(self._parts(label), sizes)))
        return self._bob[cache_key]

    def _coordinate(self, x: Label, y: Label) -> Tuple[List[Tuple[int, int]], np.ndarray]:
        if (x, y) not in self._joint:
            corr = correlation(self.p, x, y)
            pairs = list(corr.keys())
            weights = np.clip(np.array([corr[k] for k in pairs]), 0.0, None)
            self._joint[(x, y)] = (pairs, weights / weights.sum())
        return self._joint[(x, y)]

    def answer(self, alice_q, bob_q, rng):
        # the product correlation factorizes, so each coordinate is drawn on its own
        phis, psis = [], []
        for (k, _), bob_label in zip(alice_q.rounds, bob_q.contexts):
            pairs, weights = self._coordinate(k, bob_label)
            phi, psi = pairs[rng.choice(len(pairs), p=weights)]
            phis.append(phi)
            psis.append(psi)
        phi = join_points(tuple(phis), self._sizes(tuple(k for k, _ in alice_q.rounds)))
        psi = join_points(tuple(psis), self._sizes(bob_q.contexts))
        return self.alice_bits(alice_q, phi), bob_q.query.function.value(psi)


def completeness_strategy(p: SyncStrategy, params: TestParams) -> CompletenessStrategy:
    return CompletenessStrategy(p, params)


def _content_rng(seed: int, key: str) -> np.random.Generator:
    return np.random.default_rng([seed, int(hashlib.sha1(key.encode()).hexdigest()[:15], 16)])


class RandomTestStrategy(QuantumTestStrategy):
    """
    Question-seeded random provers: three commuting random observables for
    each Alice question, one random observable per Bob query.
    """

    def __init__(self, dim: int, seed: int = config.DEFAULT_SEED):
        if dim > config.DIM_CAP:
            raise CapacityError("strategy dimension", dim, config.DIM_CAP)
        self._dim = dim
        self.seed = seed

    @property
    def dim(self) -> int:
        return self._dim

    def alice_measurement(self, alice_q: AliceQuestion) -> PVM:
        rng = _content_rng(self.seed, alice_q.key)
        basis = random_unitary(self._dim, rng)
        signs = rng.choice(SIGNS, size=(self._dim, 3))
        blocks = {t: np.zeros((self._dim, self._dim), dtype=np.complex128) for t in TRIPLES}
        for col in range(self._dim):
            v = basis[:, col]
            blocks[tuple(int(s) for s in signs[col])] += np.outer(v, v.conj())
        return PVM.from_dict(blocks)

    def bob_measurement(self, query: TestQuery, contexts: Tuple[Label, ...]) -> PVM:
        return pvm_from_observable(random_observable(self._dim, _content_rng(self.seed, query.key)))


class UniformAnswerStrategy(TestStrategy):
    """Four independent fair signs per round."""

    def answer(self, alice_q, bob_q, rng):
        bits = rng.integers(0, 2, size=4)
        signs = tuple(1 - 2 * int(x) for x in bits)
        return signs[:3], signs[3]


@dataclass(frozen=True)
class ExactTestValue:
    full: float
    linear: float
    rounds: int


def _noise_support(params: TestParams, W: VarSet) -> List[Tuple[BoolFun, float]]:
    support = []
    for mu in enumerate_functions(W):
        weight = noise_weight(params.epsilon, mu)
        if weight:
            support.append((mu, float(weight)))
    return support


def exact_test_value(params: TestParams, strategy: QuantumTestStrategy) -> ExactTestValue:
    """
    Test value by full enumeration over rounds, f, g, mu and Bob's slot.
    Raises: CapacityError when some W has more than the exact-mode cap of variables
    """
    full = linear = 0.0
    enumerated = 0
    for rounds, weight in round_types(params):
        dom = round_domains(params, rounds)
        if len(dom.W) > config.EXACT_W_CAP:
            raise CapacityError("exact-mode |W|", len(dom.W), config.EXACT_W_CAP)
        noise = _noise_support(params, dom.W)
        fs, gs = list(enumerate_functions(dom.U)), list(enumerate_functions(dom.W))
        scale = float(weight) / (len(fs) * len(gs))
        for f in fs:
            for g in gs:
                for mu, mu_weight in noise:
                    alice_q = build_alice_question(params, rounds, f, g, mu)
                    A = strategy.alice_measurement(alice_q)
                    w = scale * mu_weight
                    for t, P in A.items():
                        if math.prod(t) == alice_q.rhs:
                            linear += w * float(np.real(np.trace(P))) / strategy.dim
                    for slot in range(3):
                        bob_q = bob_question(alice_q, slot)
                        for (t, b), p in strategy.joint_distribution(alice_q, bob_q).items():
                            if math.prod(t) == alice_q.rhs and t[slot] == b:
                                full += w * p / 3
                    enumerated += 1
    logger.debug("exact test value enumerated %d (f, g, mu) triples", enumerated)
    return ExactTestValue(full, linear, enumerated)
