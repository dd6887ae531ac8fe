import numpy as np
import pytest

from lintest import config
from lintest.models.cube import BoolFun, NoiseSpec, VarSet
from lintest.models.fourier import ObsSpectrum
from lintest.services.longcode import RandomTestStrategy, round_types
from lintest.services.pipeline import completeness_for
from lintest.services.soundness import (
    AliceSpectrum, bob_spectra, direct_bias_trace, exact_bias_fourier, extract_parallel_strategy,
    extraction_target, s_prime, soundness_audit
)
from lintest.utils.exceptions import InvalidSpectrumError


def test_constants():
    assert s_prime(config.DELTA) == pytest.approx(71 / 72, abs=1e-12)
    assert extraction_target(NoiseSpec(1, 100), config.DELTA) == pytest.approx(0.0034314575, rel=1e-8)


@pytest.fixture(scope="module")
def honest_audit(toy, toy_compiled_sound):
    provers = completeness_for(toy_compiled_sound, toy.strategies["perfect"])
    return soundness_audit(provers, toy_compiled_sound.test_params)


def test_honest_audit_passes_every_inequality(honest_audit):
    assert honest_audit.flagged == []
    assert honest_audit.test_value.point == pytest.approx(0.99, abs=1e-9)
    assert honest_audit.linear_value == pytest.approx(0.99, abs=1e-9)
    assert honest_audit.test_bias == pytest.approx(0.98, abs=1e-9)


def test_honest_audit_values(honest_audit):
    assert honest_audit.entry("claim").lhs == pytest.approx(0.02, abs=1e-9)
    assert honest_audit.entry("extracted_value").lhs == pytest.approx(1.0, abs=1e-9)
    assert honest_audit.entry("constraint_violations").lhs == 0
    fourier = [e for e in honest_audit.entries if e.name.startswith("fourier_form")]
    assert len(fourier) == 6
    for entry in fourier:
        assert entry.lhs == pytest.approx(0.98, abs=1e-9)


def test_fourier_and_direct_paths_agree_for_any_strategy(toy_compiled_sound):
    params = toy_compiled_sound.test_params
    strategy = RandomTestStrategy(2, seed=17)
    for rounds, _ in round_types(params):
        spec_u, spec_w = bob_spectra(strategy, params, rounds)
        fourier = exact_bias_fourier(spec_u, spec_w, params.epsilon)
        assert fourier == pytest.approx(direct_bias_trace(strategy, params, rounds), abs=1e-10)


def test_random_strategy_audit_reports_without_raising(toy_compiled_sound):
    report = soundness_audit(RandomTestStrategy(2, seed=3), toy_compiled_sound.test_params)
    assert 0.0 <= report.test_value.point <= 1.0
    assert report.entry("povm_residual").passed
    assert report.entry("constraint_violations").passed
    assert all(e.passed for e in report.entries if e.name.startswith("dual_path"))


def test_extraction_rejects_spectra_failing_parseval():
    a = VarSet.of("a")
    broken = ObsSpectrum(a, np.zeros((4, 1, 1), dtype=np.complex128))
    with pytest.raises(InvalidSpectrumError):
        extract_parallel_strategy({"k": AliceSpectrum(broken, BoolFun(a, 0b11), (1,))}, {}, 1)
