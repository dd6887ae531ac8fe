import logging
import math
from fractions import Fraction
from typing import Callable, Dict, List, Optional, Tuple, Union

import numpy as np

from lintest import config
from lintest.models.game import ExplicitGame, ImplicitGame, Label
from lintest.models.operators import GeneralStrategy, PVM, SyncStrategy
from lintest.schemas.report import ValueEstimate
from lintest.services.games import as_implicit
from lintest.services.quantum import correlation, random_pvm, winning_probability
from lintest.utils.exceptions import CapacityError, DomainError

logger = logging.getLogger(__name__)

RoundHook = Callable[[int, Label, Label, Label, Label, int], None]
CHUNK = 1 << 12


def _side_tables(g: ExplicitGame, enumerate_alice: bool):
    """
    Integer reward tables T_i[a, y, b] = L * sum of pi over accepted answers,
    with the enumerated side as i and the best-responding side as y.
    """
    L = math.lcm(*(p.denominator for p in g.dist.values()))
    mine = g.alice_questions() if enumerate_alice else g.bob_questions()
    theirs = g.bob_questions() if enumerate_alice else g.alice_questions()
    width = max(len(g.answers[y]) for y in theirs)
    col = {y: j for j, y in enumerate(theirs)}
    tables = []
    for x in mine:
        opts = g.answers[x]
        T = np.zeros((len(opts), len(theirs), width), dtype=np.int64)
        tables.append(T)
    row = {x: i for i, x in enumerate(mine)}
    for (x, y), p in g.dist.items():
        w = int(p * L)
        me, other = (x, y) if enumerate_alice else (y, x)
        a_index = {a: k for k, a in enumerate(g.answers[me])}
        b_index = {b: k for k, b in enumerate(g.answers[other])}
        for a, b in g.accepted_for(x, y):
            mine_a, their_b = (a, b) if enumerate_alice else (b, a)
            tables[row[me]][a_index[mine_a], col[other], b_index[their_b]] += w
    # padded answers must never be picked
    pad = np.zeros((len(theirs), width), dtype=np.int64)
    for y, j in col.items():
        pad[j, len(g.answers[y]):] = -(1 << 60)
    return L, mine, tables, pad


def classical_value(g: ExplicitGame) -> ValueEstimate:
    """
    Exact classical value: enumerate deterministic strategies of the side with
    fewer of them; the other side best-responds question by question.
    Raises: CapacityError when both sides have more strategies than the cap
    """
    counts = {
        side: math.prod(len(g.answers[q]) for q in questions)
        for side, questions in (("alice", g.alice_questions()), ("bob", g.bob_questions()))
    }
    side = min(counts, key=counts.get)
    total = counts[side]
    if total > config.CLASSICAL_CAP:
        raise CapacityError("deterministic strategies", total, config.CLASSICAL_CAP)
    if any(not g.answers[q] for q in g.questions):
        raise DomainError("a question has no answers")
    L, mine, tables, pad = _side_tables(g, side == "alice")
    radices = np.array([T.shape[0] for T in tables], dtype=np.int64)
    best = None
    for start in range(0, total, CHUNK):
        idx = np.arange(start, min(total, start + CHUNK), dtype=np.int64)
        score = np.broadcast_to(pad, (len(idx),) + pad.shape).copy()
        rest = idx.copy()
        for T, r in zip(reversed(tables), reversed(radices)):
            score += T[rest % r]
            rest //= r
        chunk_best = int(score.max(axis=2).sum(axis=1).max())
        best = chunk_best if best is None else max(best, chunk_best)
    value = Fraction(best, L)
    logger.debug("classical value over %d %s strategies: %s", total, side, value)
    return ValueEstimate(point=float(value), samples=total, method="exact", exact=str(value))


class CorrelationPlayer:
    """Samples joint answers of a quantum strategy from its correlation."""

    def __init__(self, strategy: Union[SyncStrategy, GeneralStrategy]):
        self.strategy = strategy
        self._cache: Dict[Tuple[Label, Label], Tuple[list, np.ndarray]] = {}

    def answer(self, x: Label, y: Label, rng: np.random.Generator):
        if (x, y) not in self._cache:
            corr = correlation(self.strategy, x, y)
            pairs = list(corr.keys())
            weights = np.clip(np.array([corr[k] for k in pairs]), 0.0, None)
            self._cache[(x, y)] = (pairs, weights / weights.sum())
        pairs, weights = self._cache[(x, y)]
        return pairs[rng.choice(len(pairs), p=weights)]


def monte_carlo_value(
    game: Union[ImplicitGame, ExplicitGame],
    strategy,
    n: int,
    seed: int = config.DEFAULT_SEED,
    on_round: Optional[RoundHook] = None,
) -> ValueEstimate:
    """
    Empirical acceptance over n rounds; round i uses default_rng([seed, i]).
    `strategy` answers via answer(x, y, rng); quantum strategies are wrapped.
    """
    if n < 100:
        raise DomainError(f"Monte Carlo needs at least 100 rounds, got {n}")
    if isinstance(game, ExplicitGame):
        game = as_implicit(game)
    if isinstance(strategy, (SyncStrategy, GeneralStrategy)):
        strategy = CorrelationPlayer(strategy)
    wins = 0
    for i in range(n):
        rng = np.random.default_rng([seed, i])
        x, y = game.sampler(rng)
        a, b = strategy.answer(x, y, rng)
        won = int(game.decider(x, y, a, b))
        wins += won
        if on_round is not None:
            on_round(i, x, y, a, b, won)
    p = wins / n
    return ValueEstimate(
        point=p, radius=3 * math.sqrt(p * (1 - p) / n), samples=n, method="monte_carlo"
    )


def _rewards(g: ExplicitGame, strategy: Dict[Label, PVM], q: Label, d: int) -> Dict[Label, np.ndarray]:
    """R_a with sum_a Tr(A^q_a R_a) the part of the objective touching q, others fixed."""
    R = {a: np.zeros((d, d), dtype=np.complex128) for a in g.answers[q]}
    for (x, y), p in g.dist.items():
        if q not in (x, y):
            continue
        w = float(p) / d
        for a, b in g.accepted_for(x, y):
            if x == q and a in R and b in strategy[y].outcomes:
                R[a] += w * strategy[y][b]
            if y == q and b in R and a in strategy[x].outcomes:
                R[b] += w * strategy[x][a]
    return R


def _greedy(R: Dict[Label, np.ndarray], d: int) -> PVM:
    """Assign eigen-directions one at a time to the outcome that rewards them most."""
    labels = list(R)
    Q = np.eye(d, dtype=np.complex128)
    blocks = {a: np.zeros((d, d), dtype=np.complex128) for a in labels}
    while Q.shape[1]:
        best = None
        for a in labels:
            vals, vecs = np.linalg.eigh(Q.conj().T @ R[a] @ Q)
            if best is None or vals[-1] > best[0] + config.ARITH_TOL:
                best = (vals[-1], a, vecs)
        _, a, vecs = best
        v = Q @ vecs[:, -1]
        blocks[a] += np.outer(v, v.conj())
        Q = Q @ vecs[:, :-1]
    return PVM.from_dict(blocks)


def _pairwise(current: PVM, R: Dict[Label, np.ndarray]) -> PVM:
    """Re-split the support of every outcome pair along the sign of R_a - R_b."""
    blocks = {a: current[a].copy() for a in current.outcomes}
    labels = [a for a in blocks if a in R]
    for i, a in enumerate(labels):
        for b in labels[i + 1:]:
            joint = blocks[a] + blocks[b]
            vals, vecs = np.linalg.eigh(joint)
            Q = vecs[:, vals > 0.5]
            if not Q.shape[1]:
                continue
            diff, basis = np.linalg.eigh(Q.conj().T @ (R[a] - R[b]) @ Q)
            top = Q @ basis[:, diff > 0]
            rest = Q @ basis[:, diff <= 0]
            blocks[a] = top @ top.conj().T
            blocks[b] = rest @ rest.conj().T
    return PVM.from_dict(blocks)


def _seesaw_run(
    g: ExplicitGame, d: int, iterations: int, rng: np.random.Generator, history: List[float]
) -> Tuple[SyncStrategy, float]:
    questions = list(g.questions)
    measurements = {q: random_pvm(d, g.answers[q], rng) for q in questions}
    value = winning_probability(g, SyncStrategy(d, measurements))
    history.append(value)
    for sweep in range(iterations):
        start = value
        for q in questions:
            R = _rewards(g, measurements, q, d)
            for candidate in (_greedy(R, d), _pairwise(measurements[q], R)):
                trial = dict(measurements)
                trial[q] = candidate
                trial_value = winning_probability(g, SyncStrategy(d, trial))
                if trial_value >= value:
                    measurements, value = trial, trial_value
        history.append(value)
        logger.debug("see-saw sweep %d objective %.12f", sweep, value)
        if value - start <= config.ARITH_TOL:
            break
    return SyncStrategy(d, measurements), value


def seesaw_sync(
    g: ExplicitGame,
    d: int,
    iterations: int = 200,
    seed: int = config.DEFAULT_SEED,
    restarts: int = config.SEESAW_RESTARTS,
    history: Optional[List[List[float]]] = None,
) -> Tuple[SyncStrategy, ValueEstimate]:
    """
    Best of `restarts` alternating optimizations of a synchronous strategy.
    Restart r is seeded with default_rng([seed, r]); per-sweep objectives go
    to `history` when given.
    Raises: CapacityError above the see-saw dimension cap
    """
    if d > config.SEESAW_DIM_CAP:
        raise CapacityError("see-saw dimension", d, config.SEESAW_DIM_CAP)
    if restarts < 1 or iterations < 1:
        raise DomainError("see-saw needs at least one restart and one iteration")
    best: Optional[Tuple[SyncStrategy, float]] = None
    for r in range(restarts):
        trace: List[float] = []
        strategy, value = _seesaw_run(g, d, iterations, np.random.default_rng([seed, r]), trace)
        if history is not None:
            history.append(trace)
        logger.info("see-saw restart %d reached %.10f after %d sweeps", r, value, len(trace) - 1)
        if best is None or value > best[1]:
            best = (strategy, value)
    strategy = best[0]
    return strategy, ValueEstimate(
        point=winning_probability(g, strategy), samples=restarts, method="seesaw"
    )
