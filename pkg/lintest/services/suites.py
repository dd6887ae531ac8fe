import json
import logging
from fractions import Fraction
from typing import Callable, Dict, List, Literal, Optional

import numpy as np
from pydantic import BaseModel, Field, ValidationError

from lintest import config
from lintest.models.cube import BoolFun, NoiseSpec, VarSet
from lintest.models.fourier import ObsFamily
from lintest.models.game import LCS, ExplicitGame
from lintest.models.operators import SyncStrategy, max_abs
from lintest.schemas.report import InequalityEntry, RunReport, SuiteResult, ValueEstimate
from lintest.services.fixtures import fixture
from lintest.services.games import lcs_bias, lcs_game
from lintest.services.longcode import RandomTestStrategy, UniformAnswerStrategy, exact_test_value
from lintest.services.obsfourier import (
    condition, fold_and_condition, fold_true, fourier_transform, inverse_transform, parseval_residual
)
from lintest.services.pipeline import (
    PipelineParams, compile_pipeline, completeness_for, minimal_repetitions, payload_size,
    soundness_chain
)
from lintest.services.quantum import (
    commutator_norm, random_observable, random_pvm, triple_trace_gap, winning_probability
)
from lintest.services.soundness import soundness_audit
from lintest.services.transforms import ensure_nonempty_answers, lift_oracularizable, project, repeat
from lintest.services.value import classical_value, monte_carlo_value, seesaw_sync
from lintest.utils.exceptions import UsageError

logger = logging.getLogger(__name__)

SuiteName = Literal[
    "fourier", "folding", "conditioning", "trace", "lcs_bias", "classical", "perfect_chain",
    "completeness", "soundness", "extraction", "uniform", "corrupted_audit", "seesaw", "pipeline",
]


class SuiteSpec(BaseModel):
    name: SuiteName
    trials: int = Field(100, ge=1, description="Random instances for property suites")
    samples: int = Field(10_000, ge=100, description="Monte Carlo rounds")
    epsilon: Optional[str] = Field(None, description="Noise rate p/q; suite default when omitted")
    dim: int = Field(2, ge=1, le=config.DIM_CAP, description="Local dimension of random strategies")


class SuiteConfig(BaseModel):
    seed: int = Field(config.DEFAULT_SEED, ge=0, lt=1 << 64)
    suites: List[SuiteSpec] = Field(..., min_length=1)


def parse_suite_config(text: str, source: str = "<config>") -> SuiteConfig:
    """
    Raises: UsageError with line and column for malformed JSON, or with the
    offending field locations for schema violations
    """
    try:
        data = json.loads(text)
    except json.JSONDecodeError as e:
        raise UsageError({"file": source, "line": e.lineno, "column": e.colno, "message": e.msg})
    try:
        return SuiteConfig.model_validate(data)
    except ValidationError as e:
        raise UsageError({
            "file": source,
            "errors": [{"loc": [str(p) for p in err["loc"]], "message": err["msg"]} for err in e.errors()],
        })


def load_suite_config(path: str) -> SuiteConfig:
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as e:
        raise UsageError(f"cannot read suite config {path}: {e.strerror}")
    return parse_suite_config(text, path)


def _noise(spec: SuiteSpec, default: str) -> NoiseSpec:
    return NoiseSpec.parse(spec.epsilon or default)


def _result(name: str, checks: List[InequalityEntry], **kwargs) -> SuiteResult:
    return SuiteResult(name=name, passed=all(c.passed for c in checks), checks=checks, **kwargs)


def _random_family(U: VarSet, d: int, rng: np.random.Generator) -> ObsFamily:
    count = 1 << U.npoints
    return ObsFamily(U, np.stack([random_observable(d, rng).matrix for _ in range(count)]))


def _domains(rng: np.random.Generator):
    n = int(rng.integers(1, 3))
    d = int(rng.choice([2, 4]))
    return VarSet(tuple(f"v{i}" for i in range(n))), d


def _fourier(spec: SuiteSpec, rng: np.random.Generator) -> SuiteResult:
    inversion = parseval = 0.0
    for _ in range(spec.trials):
        U, d = _domains(rng)
        fam = _random_family(U, d, rng)
        spectrum = fourier_transform(fam)
        for t in range(fam.matrices.shape[0]):
            f = BoolFun(U, t)
            inversion = max(inversion, max_abs(inverse_transform(spectrum, f) - fam[f]))
        parseval = max(parseval, parseval_residual(spectrum))
    return _result("fourier", [
        InequalityEntry.check("inversion_residual", inversion, "<=", config.LEMMA_TOL),
        InequalityEntry.check("parseval_residual", parseval, "<=", config.LEMMA_TOL),
    ])


def _folding(spec: SuiteSpec, rng: np.random.Generator) -> SuiteResult:
    even = antisymmetry = 0.0
    for _ in range(spec.trials):
        U, d = _domains(rng)
        folded = fold_true(_random_family(U, d, rng))
        spectrum = fourier_transform(folded)
        for alpha in spectrum.subsets():
            if alpha.bit_count() % 2 == 0:
                even = max(even, max_abs(spectrum.coefficient(alpha)))
        full = (1 << U.npoints) - 1
        for t in range(full + 1):
            antisymmetry = max(antisymmetry, max_abs(folded.matrices[t] + folded.matrices[t ^ full]))
    return _result("folding", [
        InequalityEntry.check("even_coefficients", even, "<=", config.LEMMA_TOL),
        InequalityEntry.check("antisymmetry", antisymmetry, "<=", config.ARITH_TOL),
    ])


def _conditioning(spec: SuiteSpec, rng: np.random.Generator) -> SuiteResult:
    plain = folded = 0.0
    for _ in range(spec.trials):
        U, d = _domains(rng)
        fam = _random_family(U, d, rng)
        C = BoolFun(U, int(rng.integers(1, 1 << U.npoints)))
        for family, which in ((condition(fam, C), "plain"), (fold_and_condition(fam, C), "folded")):
            spectrum = fourier_transform(family)
            worst = max(
                (max_abs(spectrum.coefficient(alpha)) for alpha in spectrum.subsets() if alpha & ~C.table),
                default=0.0,
            )
            if which == "plain":
                plain = max(plain, worst)
            else:
                folded = max(folded, worst)
    return _result("conditioning", [
        InequalityEntry.check("unsatisfying_mass", plain, "<=", config.LEMMA_TOL),
        InequalityEntry.check("folded_unsatisfying_mass", folded, "<=", config.LEMMA_TOL),
    ])


def _trace(spec: SuiteSpec, rng: np.random.Generator) -> SuiteResult:
    gap = float("-inf")
    d = 4
    for _ in range(spec.trials):
        ys = [random_observable(d, rng) for _ in range(3)]
        xs = [random_observable(d, rng) for _ in range(3)]
        lhs, rhs = triple_trace_gap(ys, xs)
        gap = max(gap, lhs - rhs)
    same = [random_observable(d, rng) for _ in range(3)]
    lhs, rhs = triple_trace_gap(same, same)
    return _result("trace", [
        InequalityEntry.check("lhs_minus_rhs", gap, "<=", 0.0, tol=1e-9),
        InequalityEntry.check("equal_case_lhs", lhs, "<=", 0.0, tol=config.LEMMA_TOL),
        # sqrt of a rounding-level overlap deficit
        InequalityEntry.check("equal_case_rhs", rhs, "<=", 0.0, tol=1e-7),
    ])


def three_equation_lcs() -> LCS:
    return LCS.from_equations(
        ["x0", "x1", "x2", "x3", "x4"],
        [("e0", ["x0", "x1", "x2"], 1), ("e1", ["x1", "x2", "x3"], -1), ("e2", ["x0", "x3", "x4"], 1)],
    )


def random_lcs_strategy(game: ExplicitGame, d: int, rng: np.random.Generator) -> SyncStrategy:
    """Random PVMs over satisfying answers for equations and over bits for variables."""
    return SyncStrategy(d, {q: random_pvm(d, game.answers[q], rng) for q in game.questions})


def _lcs_bias(spec: SuiteSpec, rng: np.random.Generator) -> SuiteResult:
    L = three_equation_lcs()
    pi = {label: Fraction(1, 3) for label in L.bcs.labels}
    game = lcs_game(L, pi)
    worst = 0.0
    for _ in range(spec.trials):
        direct, formula = lcs_bias(L, pi, random_lcs_strategy(game, spec.dim, rng))
        worst = max(worst, abs(direct - formula))
    return _result("lcs_bias", [InequalityEntry.check("formula_gap", worst, "<=", config.LEMMA_TOL)])


def _classical(spec: SuiteSpec, rng: np.random.Generator) -> SuiteResult:
    chsh = fixture("chsh").game
    magic = fixture("magic_square")
    games = {
        "chsh": (chsh, "3/4"),
        "chsh_x2": (repeat(chsh, 2), "5/8"),
        "magic_square_cv": (magic.extras["cv"], "17/18"),
    }
    checks, estimates = [], {}
    for name, (game, expected) in games.items():
        estimate = classical_value(game)
        estimates[name] = estimate
        gap = abs(Fraction(estimate.exact) - Fraction(expected))
        checks.append(InequalityEntry.check(f"{name}=={expected}", float(gap), "<=", 0.0))
    return _result("classical", checks, estimates=estimates)


def _supported_commutator(game: ExplicitGame, strategy: SyncStrategy) -> float:
    worst = 0.0
    for x, y in game.dist:
        for _, P in strategy[x].items():
            for _, Q in strategy[y].items():
                worst = max(worst, commutator_norm(P, Q))
    return worst


def _perfect_chain(spec: SuiteSpec, rng: np.random.Generator) -> SuiteResult:
    magic = fixture("magic_square")
    pauli = magic.strategies["pauli"]
    value = winning_probability(magic.game, pauli)
    repaired = ensure_nonempty_answers(magic.game, symmetric=True)
    lifted = winning_probability(project(magic.game), lift_oracularizable(pauli, magic.game))
    return _result("perfect_chain", [
        InequalityEntry.check("sync_value", abs(1 - value), "<=", 0.0, tol=1e-9),
        InequalityEntry.check("commutators", _supported_commutator(magic.game, pauli), "<=", config.TOL),
        InequalityEntry.check("repair_identity", float(repaired is not magic.game), "<=", 0.0),
        InequalityEntry.check("projected_value", abs(1 - lifted), "<=", 0.0, tol=1e-8),
    ])


def _compiled(name: str, eps: NoiseSpec, h: int, seed: int, u: int = 1):
    fx = fixture(name)
    compiled = compile_pipeline(fx.game, PipelineParams(eps, u=u, h=h, seed=seed))
    return fx, compiled


def _completeness(spec: SuiteSpec, rng: np.random.Generator, seed: int) -> SuiteResult:
    eps = _noise(spec, "1/10")
    target = 1 - float(eps.fraction)
    toy, compiled = _compiled("toy_parity", eps, 1, seed)
    exact = exact_test_value(compiled.test_params, completeness_for(compiled, toy.strategies["perfect"]))
    magic, compiled = _compiled("magic_square", eps, 3, seed)
    estimate = monte_carlo_value(
        compiled.game, completeness_for(compiled, magic.strategies["pauli"]), spec.samples, seed
    )
    return _result(
        "completeness",
        [
            InequalityEntry.check("toy_exact", exact.full, ">=", target, tol=1e-9),
            InequalityEntry.check("toy_exact_equality", abs(exact.full - target), "<=", 0.0, tol=1e-9),
            InequalityEntry.check("magic_square_monte_carlo", estimate.point + estimate.radius, ">=", target),
        ],
        estimates={"toy_exact": _exact_estimate(exact), "magic_square": estimate},
    )


def _exact_estimate(exact) -> ValueEstimate:
    return ValueEstimate(point=exact.full, samples=exact.rounds, method="exact")


SOUNDNESS_ENTRIES = ("fourier_form", "dual_path", "claim", "extracted_value", "scalar", "premise")
EXTRACTION_ENTRIES = ("povm_residual", "constraint_violations")


def _audited(spec: SuiteSpec, seed: int, default_eps: str, prefixes, name: str) -> SuiteResult:
    eps = _noise(spec, default_eps)
    toy, compiled = _compiled("toy_parity", eps, 1, seed)
    report = soundness_audit(completeness_for(compiled, toy.strategies["perfect"]), compiled.test_params)
    checks = [e for e in report.entries if e.name.startswith(prefixes)]
    return _result(name, checks, audit=report)


def _soundness(spec: SuiteSpec, rng: np.random.Generator, seed: int) -> SuiteResult:
    return _audited(spec, seed, "1/100", SOUNDNESS_ENTRIES, "soundness")


def _extraction(spec: SuiteSpec, rng: np.random.Generator, seed: int) -> SuiteResult:
    return _audited(spec, seed, "1/100", EXTRACTION_ENTRIES, "extraction")


def _uniform(spec: SuiteSpec, rng: np.random.Generator, seed: int) -> SuiteResult:
    _, compiled = _compiled("toy_parity", _noise(spec, "1/10"), 1, seed)
    estimate = monte_carlo_value(compiled.game, UniformAnswerStrategy(), spec.samples, seed)
    return _result(
        "uniform",
        [InequalityEntry.check("distance_to_quarter", abs(estimate.point - 0.25), "<=", estimate.radius)],
        estimates={"uniform": estimate},
    )


def _corrupted_audit(spec: SuiteSpec, rng: np.random.Generator, seed: int) -> SuiteResult:
    _, compiled = _compiled("toy_parity", _noise(spec, "1/100"), 1, seed)
    report = soundness_audit(RandomTestStrategy(spec.dim, seed), compiled.test_params)
    return SuiteResult(
        name="corrupted_audit",
        passed=True,
        asserting=False,
        audit=report,
        notes=[f"flagged: {name}" for name in report.flagged],
    )


def _seesaw(spec: SuiteSpec, rng: np.random.Generator, seed: int) -> SuiteResult:
    history: List[List[float]] = []
    _, chsh = seesaw_sync(fixture("chsh").game, 2, iterations=200, seed=seed, history=history)
    _, magic = seesaw_sync(fixture("magic_square").game, 4, seed=seed, history=history)
    _, trivial = seesaw_sync(always_accept_game(), 2, iterations=1, seed=seed, restarts=1, history=history)
    tsirelson = (2 + np.sqrt(2)) / 4
    drops = max((a - b for run in history for a, b in zip(run, run[1:])), default=0.0)
    return _result(
        "seesaw",
        [
            InequalityEntry.check("chsh_near_tsirelson", chsh.point, ">=", 0.85),
            InequalityEntry.check("chsh_below_tsirelson", chsh.point, "<=", tsirelson, tol=1e-9),
            InequalityEntry.check("magic_square_perfect", magic.point, ">=", 1 - 1e-6),
            InequalityEntry.check("always_accept_perfect", trivial.point, ">=", 1.0, tol=1e-9),
            InequalityEntry.check("monotone_sweeps", drops, "<=", 0.0, tol=config.ARITH_TOL),
        ],
        estimates={"chsh_d2": chsh, "magic_square_d4": magic, "always_accept_d2": trivial},
    )


def dead_pair_game() -> ExplicitGame:
    """The toy parity game with both off-diagonal rounds made unwinnable."""
    toy = fixture("toy_parity").game
    accepted = {t for t in toy.accepted if t[0] == t[1]}
    return ExplicitGame(toy.questions, toy.answers, toy.dist, frozenset(accepted), ("dead_pair",))


def always_accept_game() -> ExplicitGame:
    """The toy parity questions with a decider that accepts everything."""
    toy = fixture("toy_parity").game
    accepted = {(x, y, a, b) for x, y in toy.dist for a in toy.answers[x] for b in toy.answers[y]}
    return ExplicitGame(toy.questions, toy.answers, toy.dist, frozenset(accepted), ("always_accept",))


def _pipeline(spec: SuiteSpec, rng: np.random.Generator, seed: int) -> SuiteResult:
    eps = _noise(spec, "1/100")
    strict = PipelineParams(eps, seed=seed, paper_mode=True)
    repaired = compile_pipeline(dead_pair_game(), PipelineParams(eps, h=1, seed=seed)).repaired
    undecidable = sum(1 for pair in repaired.dist if not repaired.accepted_for(*pair))

    _, first = _compiled("toy_parity", eps, 1, seed)
    _, again = _compiled("toy_parity", eps, 1, seed)
    _, doubled = _compiled("toy_parity", eps, 1, seed, u=2)
    size_one, size_again, size_two = payload_size(first), payload_size(again), payload_size(doubled)

    s_tilde = 0.5
    u = minimal_repetitions(s_tilde, strict)
    chain = soundness_chain(s_tilde, PipelineParams(eps, u=u, seed=seed, paper_mode=True))
    return _result(
        "pipeline",
        [
            InequalityEntry.check("s_prime_gap", abs(strict.s_prime - 71 / 72), "<=", 0.0, tol=config.ARITH_TOL),
            InequalityEntry.check("undecidable_pairs", undecidable, "<=", 0),
            InequalityEntry.check("payload_determinism", abs(size_one - size_again), "<=", 0),
            InequalityEntry.check("payload_growth", size_two, ">=", size_one + 1),
            InequalityEntry.check("separated_at_minimal_u", chain.s_repeated, "<=", chain.target),
        ],
        notes=[f"payload bytes u=1: {size_one}, u=2: {size_two}", f"minimal u for s_tilde={s_tilde}: {u}"],
    )


Runner = Callable[[SuiteSpec, np.random.Generator, int], SuiteResult]


def _seedless(fn) -> Runner:
    return lambda spec, rng, seed: fn(spec, rng)


SUITES: Dict[str, Runner] = {
    "fourier": _seedless(_fourier),
    "folding": _seedless(_folding),
    "conditioning": _seedless(_conditioning),
    "trace": _seedless(_trace),
    "lcs_bias": _seedless(_lcs_bias),
    "classical": _seedless(_classical),
    "perfect_chain": _seedless(_perfect_chain),
    "completeness": _completeness,
    "soundness": _soundness,
    "extraction": _extraction,
    "uniform": _uniform,
    "corrupted_audit": _corrupted_audit,
    "seesaw": _seesaw,
    "pipeline": _pipeline,
}
SUITE_INDEX = {name: i for i, name in enumerate(SUITES)}


def run_one(spec: SuiteSpec, seed: int) -> SuiteResult:
    rng = np.random.default_rng([seed, SUITE_INDEX[spec.name]])
    logger.info("running suite %s", spec.name)
    result = SUITES[spec.name](spec, rng, seed)
    logger.info("suite %s %s", spec.name, "passed" if result.passed else "FAILED")
    return result


def run_suite(suite_config: SuiteConfig) -> RunReport:
    """Run every configured suite. Failures are recorded, never raised."""
    results = [run_one(spec, suite_config.seed) for spec in suite_config.suites]
    return RunReport(
        version=config.VERSION,
        seed=suite_config.seed,
        config={
            "suites": suite_config.model_dump(mode="json"),
            "tolerances": {
                "tol": config.TOL,
                "arith_tol": config.ARITH_TOL,
                "lemma_tol": config.LEMMA_TOL,
                "parseval_tol": config.PARSEVAL_TOL,
            },
            "delta": config.DELTA,
        },
        suites=results,
    )
