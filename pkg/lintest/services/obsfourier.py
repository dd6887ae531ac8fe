import logging
from functools import lru_cache
from typing import Callable, Optional, Union

import numpy as np

from lintest import config
from lintest.models.cube import BoolFun, SectionPolicy, VarSet
from lintest.models.fourier import ObsFamily, ObsSpectrum
from lintest.services.boolfun import section, section_conditioned
from lintest.utils.exceptions import CapacityError, DomainError

logger = logging.getLogger(__name__)

ObservableFn = Callable[[BoolFun], np.ndarray]


def parity(values: np.ndarray) -> np.ndarray:
    """Popcount parity of every entry of an unsigned integer array."""
    v = np.array(values, dtype=np.uint64)
    for shift in (32, 16, 8, 4, 2, 1):
        v ^= v >> np.uint64(shift)
    return (v & np.uint64(1)).astype(np.int64)


@lru_cache(maxsize=8)
def character_matrix(npoints: int) -> np.ndarray:
    """S[alpha, f] = chi_alpha(f) over all subsets and functions of an npoints cube."""
    idx = np.arange(1 << npoints, dtype=np.uint64)
    table = 1 - 2 * parity(idx[:, None] & idx[None, :])
    table.setflags(write=False)
    return table


def walsh_hadamard(stack: np.ndarray) -> np.ndarray:
    """Unnormalized out[alpha] = sum_f (-1)^|alpha & f| stack[f], by butterflies."""
    out = np.array(stack, dtype=np.complex128, copy=True)
    n = out.shape[0]
    h = 1
    while h < n:
        view = out.reshape(n // (2 * h), 2, h, *out.shape[1:])
        low, high = view[:, 0].copy(), view[:, 1].copy()
        view[:, 0] = low + high
        view[:, 1] = low - high
        h *= 2
    return out


def _hermitize(coefficients: np.ndarray) -> np.ndarray:
    herm = (coefficients + coefficients.conj().transpose(0, 2, 1)) / 2
    residual = float(np.max(np.abs(coefficients - herm))) if coefficients.size else 0.0
    logger.debug("hermitization residual %.3e", residual)
    return herm


def fourier_transform(fam: ObsFamily) -> ObsSpectrum:
    S = character_matrix(fam.domain.npoints)
    coefficients = np.einsum("af,fij->aij", S, fam.matrices) / S.shape[1]
    return ObsSpectrum(fam.domain, _hermitize(coefficients))


def inverse_transform(spec: ObsSpectrum, f: BoolFun) -> np.ndarray:
    if f.domain != spec.domain:
        raise DomainError("function lives on a different cube than the spectrum")
    row = character_matrix(spec.domain.npoints)[:, f.table]
    return np.einsum("a,aij->ij", row, spec.coefficients)


def parseval_residual(spec) -> float:
    """max |sum_alpha coef_alpha^2 - I|, for dense or on-demand spectra."""
    total = np.zeros((spec.dim, spec.dim), dtype=np.complex128)
    for alpha in spec.subsets():
        c = spec.coefficient(alpha)
        total += c @ c
    return float(np.max(np.abs(total - np.eye(spec.dim))))


def fold_true(fam: ObsFamily) -> ObsFamily:
    """A_{true,f} = m(f s_U(f)) A_{s_U(f)}"""
    folded = np.empty_like(fam.matrices)
    for t in range(fam.matrices.shape[0]):
        s, m = section(BoolFun(fam.domain, t))
        folded[t] = m * fam.matrices[s.table]
    return ObsFamily(fam.domain, folded)


def condition(fam: ObsFamily, C: BoolFun) -> ObsFamily:
    """A_{C,f} = A_{f AND C}"""
    if C.domain != fam.domain:
        raise DomainError("constraint lives on a different cube than the family")
    conditioned = np.empty_like(fam.matrices)
    for t in range(fam.matrices.shape[0]):
        conditioned[t] = fam.matrices[t & C.table]
    return ObsFamily(fam.domain, conditioned)


def fold_and_condition(
    fam: ObsFamily, C: BoolFun, policy: SectionPolicy = SectionPolicy.LEXMIN
) -> ObsFamily:
    if C.domain != fam.domain:
        raise DomainError("constraint lives on a different cube than the family")
    folded = np.empty_like(fam.matrices)
    for t in range(fam.matrices.shape[0]):
        s, m = section_conditioned(BoolFun(fam.domain, t), C, policy)
        folded[t] = m * fam.matrices[s.table]
    return ObsFamily(fam.domain, folded)


def folded_observable(
    raw: ObservableFn, C: Optional[BoolFun] = None, policy: SectionPolicy = SectionPolicy.LEXMIN
) -> ObservableFn:
    """Pointwise form of fold_true / fold_and_condition for families too big to store."""
    def observable(f: BoolFun) -> np.ndarray:
        s, m = section(f) if C is None else section_conditioned(f, C, policy)
        return m * raw(s)
    return observable


class CachedSpectrum:
    """
    Spectrum of a family given pointwise. The first coefficient request
    evaluates every observable, transforms the whole family and caches the
    full coefficient array; later requests read the cache. Used for domains
    above the dense family cap, where no ObsFamily is stored.
    """

    def __init__(self, domain: VarSet, dim: int, observable: ObservableFn):
        if len(domain) > config.SPECTRUM_CAP:
            raise CapacityError("spectrum domain", len(domain), config.SPECTRUM_CAP)
        self.domain = domain
        self.dim = dim
        self._observable = observable
        self._coefficients: Optional[np.ndarray] = None

    def subsets(self) -> range:
        return range(1 << self.domain.npoints)

    def _transform(self) -> np.ndarray:
        if self._coefficients is None:
            count = 1 << self.domain.npoints
            logger.debug("evaluating %d observables over %s", count, list(self.domain.names))
            family = np.stack([
                np.asarray(self._observable(BoolFun(self.domain, t)), dtype=np.complex128)
                for t in range(count)
            ])
            self._coefficients = _hermitize(walsh_hadamard(family) / count)
        return self._coefficients

    def coefficient(self, alpha: int) -> np.ndarray:
        return self._transform()[alpha]


def folded_spectrum(
    domain: VarSet,
    raw: ObservableFn,
    C: Optional[BoolFun] = None,
    policy: SectionPolicy = SectionPolicy.LEXMIN,
) -> Union[ObsSpectrum, CachedSpectrum]:
    """Spectrum of the folded (and, given C, conditioned) family built from `raw`."""
    if len(domain) <= config.FAMILY_CAP:
        fam = ObsFamily(domain, np.stack([raw(BoolFun(domain, t)) for t in range(1 << domain.npoints)]))
        fam = fold_true(fam) if C is None else fold_and_condition(fam, C, policy)
        return fourier_transform(fam)
    dim = raw(BoolFun(domain, 0)).shape[0]
    return CachedSpectrum(domain, dim, folded_observable(raw, C, policy))
