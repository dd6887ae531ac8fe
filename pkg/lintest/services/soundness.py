import logging
import math
from dataclasses import dataclass
from typing import Dict, List, Mapping, Optional, Tuple, Union

import numpy as np

from lintest import config
from lintest.models.cube import BoolFun, CubeSubset, NoiseSpec, VarSet
from lintest.models.fourier import ObsFamily, ObsSpectrum
from lintest.models.game import Label
from lintest.models.longcode import Round, TestParams, TestQuery
from lintest.models.operators import POVM, GeneralStrategy, max_abs
from lintest.schemas.report import AuditReport, InequalityEntry, ValueEstimate
from lintest.services.boolfun import (
    enumerate_functions, lift, noise_weight, pi2, split_point
)
from lintest.services.games import bcs_game
from lintest.services.longcode import (
    QuantumTestStrategy, exact_test_value, round_domains, round_types
)
from lintest.services.obsfourier import (
    CachedSpectrum, fold_and_condition, fold_true, folded_spectrum, parseval_residual
)
from lintest.services.quantum import winning_probability
from lintest.services.transforms import repeat
from lintest.utils.exceptions import CapacityError, InvalidSpectrumError

logger = logging.getLogger(__name__)

Spectrum = Union[ObsSpectrum, CachedSpectrum]


def s_prime(delta: float) -> float:
    return 1 - (1 - delta) ** 2 / 36


def extraction_target(epsilon: NoiseSpec, delta: float) -> float:
    return 4 * float(epsilon.fraction) * delta**2


def _raw_bob(strategy: QuantumTestStrategy, V: VarSet, contexts: Tuple[Label, ...]):
    return lambda h: strategy.bob_observable(TestQuery(V, h.table), contexts)


def bob_spectra(
    strategy: QuantumTestStrategy, params: TestParams, rounds: Tuple[Round, ...]
) -> Tuple[Spectrum, Spectrum]:
    """
    Spectra of Bob's folded family B^U_f = m_f B_(U, s_U(f)) and of his folded
    and conditioned family B^{W,C}_g = m_{g,C} B_(W, s_{g,C}).
    """
    dom = round_domains(params, rounds)
    outer = tuple(k for k, _ in rounds)
    inner = tuple(j for _, j in rounds)
    spec_u = folded_spectrum(dom.U, _raw_bob(strategy, dom.U, inner))
    spec_w = folded_spectrum(dom.W, _raw_bob(strategy, dom.W, outer), dom.C, params.section_policy)
    return spec_u, spec_w


def exact_bias_fourier(spec_u: Spectrum, spec_w: Spectrum, epsilon: NoiseSpec) -> float:
    """
    (1/d) Tr sum_beta A_{pi2(beta)} B_beta^2 (1 - 2 eps)^|beta| over every
    subset beta of the W-cube.
    Raises: CapacityError when W has more variables than the spectrum cap
    """
    W, U = spec_w.domain, spec_u.domain
    if len(W) > config.SPECTRUM_CAP:
        raise CapacityError("spectrum domain", len(W), config.SPECTRUM_CAP)
    eta = 1 - 2 * float(epsilon.fraction)
    d = spec_w.dim
    total = 0.0
    for beta in spec_w.subsets():
        B = spec_w.coefficient(beta)
        if max_abs(B) <= config.ARITH_TOL:
            continue
        alpha = pi2(CubeSubset(W, beta), U).mask
        A = spec_u.coefficient(alpha)
        total += float(np.real(np.trace(A @ B @ B))) / d * eta ** beta.bit_count()
    return total


def direct_bias_trace(
    strategy: QuantumTestStrategy, params: TestParams, rounds: Tuple[Round, ...]
) -> float:
    """E_{f,g,mu} Tr(B^U_f B^{W,C}_g B^{W,C}_{g'})/d by enumeration, dense families only."""
    dom = round_domains(params, rounds)
    outer = tuple(k for k, _ in rounds)
    inner = tuple(j for _, j in rounds)
    raw_u = _raw_bob(strategy, dom.U, inner)
    raw_w = _raw_bob(strategy, dom.W, outer)
    fam_u = fold_true(ObsFamily(dom.U, np.stack([raw_u(f) for f in enumerate_functions(dom.U)])))
    fam_w = fold_and_condition(
        ObsFamily(dom.W, np.stack([raw_w(g) for g in enumerate_functions(dom.W)])),
        dom.C, params.section_policy,
    )
    fs, gs = list(enumerate_functions(dom.U)), list(enumerate_functions(dom.W))
    noise = [(mu, float(noise_weight(params.epsilon, mu))) for mu in gs]
    total = 0.0
    for f in fs:
        lifted = lift(f, dom.W)
        for g in gs:
            for mu, weight in noise:
                if not weight:
                    continue
                gprime = lifted * g * mu
                product = fam_u[f] @ fam_w[g] @ fam_w[gprime]
                total += weight * float(np.real(np.trace(product))) / fam_u.dim
    return total / (len(fs) * len(gs))


@dataclass(frozen=True)
class AliceSpectrum:
    """Bob's folded-and-conditioned spectrum for one Alice question k."""
    spectrum: Spectrum
    constraint: BoolFun
    sizes: Tuple[int, ...]


@dataclass(frozen=True)
class BobSpectrum:
    spectrum: Spectrum
    sizes: Tuple[int, ...]


@dataclass(frozen=True)
class Extraction:
    strategy: GeneralStrategy
    povm_residual: float
    violations: int


def _validated(spec: Spectrum, what: str) -> None:
    residual = parseval_residual(spec)
    if residual > config.PARSEVAL_TOL:
        raise InvalidSpectrumError({"spectrum": what, "parseval_residual": residual})
    empty = max_abs(spec.coefficient(0))
    if empty > config.PARSEVAL_TOL:
        raise InvalidSpectrumError({"spectrum": what, "empty_coefficient": empty})


def _subset_povm(spec: Spectrum, transpose: bool) -> Dict[int, np.ndarray]:
    """E_x = sum_{beta containing x} B_beta^2 / |beta|."""
    npoints = spec.domain.npoints
    d = spec.dim
    effects = {x: np.zeros((d, d), dtype=np.complex128) for x in range(npoints)}
    for beta in spec.subsets():
        if not beta:
            continue
        B = spec.coefficient(beta)
        if max_abs(B) <= config.ARITH_TOL:
            continue
        square = B @ B
        if transpose:
            square = square.T
        share = square / beta.bit_count()
        for x in range(npoints):
            if (beta >> x) & 1:
                effects[x] += share
    return effects


def extract_parallel_strategy(
    alice_spectra: Mapping[Label, AliceSpectrum],
    bob_spectra: Mapping[Label, BobSpectrum],
    u: int,
) -> Extraction:
    """
    Strategy for the u-fold constraint game read off Bob's spectra: Alice
    measures {B_beta^2} and answers a uniform member of beta, Bob measures
    {(B_alpha^T)^2} likewise, on a maximally entangled state.
    Raises: InvalidSpectrumError when a spectrum fails Parseval or has mass on the empty set
    """
    def answer(point: int, sizes: Tuple[int, ...]):
        return point if u == 1 else split_point(point, sizes)

    residual = 0.0
    violations = 0
    alice: Dict[Label, POVM] = {}
    dim = None
    for question, entry in alice_spectra.items():
        _validated(entry.spectrum, f"alice {question!r}")
        effects = _subset_povm(entry.spectrum, transpose=False)
        kept = {}
        for x, E in effects.items():
            if max_abs(E) <= config.TOL:
                continue
            if not (entry.constraint.table >> x) & 1:
                violations += 1
            kept[answer(x, entry.sizes)] = E
        d = entry.spectrum.dim
        dim = d if dim is None else dim
        residual = max(residual, max_abs(sum(kept.values()) - np.eye(d)))
        alice[question] = POVM(tuple(kept.keys()), tuple(kept.values()))

    bob: Dict[Label, POVM] = {}
    for question, entry in bob_spectra.items():
        _validated(entry.spectrum, f"bob {question!r}")
        effects = _subset_povm(entry.spectrum, transpose=True)
        kept = {answer(x, entry.sizes): E for x, E in effects.items() if max_abs(E) > config.TOL}
        d = entry.spectrum.dim
        residual = max(residual, max_abs(sum(kept.values()) - np.eye(d)))
        bob[question] = POVM(tuple(kept.keys()), tuple(kept.values()))

    if violations:
        logger.warning("extracted Alice answers include %d unsatisfying points", violations)
    return Extraction(GeneralStrategy.maximally_entangled(dim, alice, bob), residual, violations)


def _question(rounds_labels: Tuple[Label, ...], u: int) -> Label:
    return rounds_labels[0] if u == 1 else rounds_labels


def soundness_audit(
    strategy: QuantumTestStrategy,
    params: TestParams,
    delta: float = config.DELTA,
    test_value: Optional[ValueEstimate] = None,
) -> AuditReport:
    """
    Run every constructive inequality of the soundness argument on one
    strategy and report margins. Nothing here raises on a failed inequality.
    """
    eps = float(params.epsilon.fraction)
    if test_value is None:
        exact = exact_test_value(params, strategy)
        test_value = ValueEstimate(point=exact.full, samples=exact.rounds, method="exact")
        linear_value = exact.linear
    else:
        linear_value = None
    bias = 2 * test_value.point - 1

    entries: List[InequalityEntry] = []
    expectation = 0.0
    alice_side: Dict[Label, AliceSpectrum] = {}
    bob_side: Dict[Label, BobSpectrum] = {}
    for rounds, weight in round_types(params):
        dom = round_domains(params, rounds)
        spec_u, spec_w = bob_spectra(strategy, params, rounds)
        value = exact_bias_fourier(spec_u, spec_w, params.epsilon)
        expectation += float(weight) * value
        tag = repr(rounds)
        entries.append(InequalityEntry.check(f"fourier_form{tag}", value, ">=", delta))
        if len(dom.W) <= config.FAMILY_CAP:
            direct = direct_bias_trace(strategy, params, rounds)
            entries.append(
                InequalityEntry.check(f"dual_path{tag}", abs(direct - value), "<=", 0.0, tol=config.LEMMA_TOL)
            )
        alice_side[_question(tuple(k for k, _ in rounds), params.u)] = AliceSpectrum(spec_w, dom.C, dom.w_sizes)
        bob_side[_question(tuple(j for _, j in rounds), params.u)] = BobSpectrum(spec_u, dom.u_sizes)

    claim_lhs = abs(1 - expectation)
    entries.append(
        InequalityEntry.check("claim", claim_lhs, "<=", math.sqrt(max(0.0, 18 * (1 - bias))), tol=config.LEMMA_TOL)
    )
    entries.append(InequalityEntry.check("claim_bound", claim_lhs, "<=", 1 - delta))

    extraction = extract_parallel_strategy(alice_side, bob_side, params.u)
    parallel = repeat(bcs_game(params.bcs, params.dist), params.u)
    extracted = winning_probability(parallel, extraction.strategy)
    entries.append(
        InequalityEntry.check("extracted_value", extracted, ">=", extraction_target(params.epsilon, delta))
    )
    entries.append(InequalityEntry.check("povm_residual", extraction.povm_residual, "<=", config.TOL))
    entries.append(InequalityEntry.check("constraint_violations", extraction.violations, "<=", 0))

    worst = min(
        (n**-0.5 - math.sqrt(4 * eps) * (1 - 2 * eps) ** n, n) for n in range(1, 65)
    )
    n = worst[1]
    entries.append(
        InequalityEntry.check(
            f"scalar[|beta|={n}]", n**-0.5, ">=", math.sqrt(4 * eps) * (1 - 2 * eps) ** n
        )
    )
    entries.append(InequalityEntry.check("premise", test_value.point, ">=", s_prime(delta)))

    report = AuditReport(
        epsilon=str(params.epsilon),
        delta=delta,
        test_value=test_value,
        linear_value=linear_value,
        test_bias=bias,
        entries=entries,
    )
    logger.info("soundness audit: %d entries, flagged %s", len(entries), report.flagged or "none")
    return report
