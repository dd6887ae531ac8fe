from dataclasses import dataclass

import numpy as np

from lintest import config
from lintest.models.cube import BoolFun, VarSet
from lintest.models.operators import BinaryObservable
from lintest.utils.exceptions import CapacityError, ConfigurationError, DomainError


@dataclass(frozen=True, eq=False)
class ObsFamily:
    """
    One binary observable per Boolean function over `domain`, stored densely:
    matrices[t] is the observable of the function with truth table t.
    """
    domain: VarSet
    matrices: np.ndarray

    def __post_init__(self):
        if len(self.domain) > config.FAMILY_CAP:
            raise CapacityError("dense family domain", len(self.domain), config.FAMILY_CAP)
        mats = np.asarray(self.matrices, dtype=np.complex128)
        object.__setattr__(self, "matrices", mats)
        expected = 1 << self.domain.npoints
        if mats.ndim != 3 or mats.shape[0] != expected:
            raise ConfigurationError(
                f"family over {len(self.domain)} variables needs {expected} observables"
            )
        for m in mats:
            BinaryObservable(m)

    @property
    def dim(self) -> int:
        return self.matrices.shape[1]

    def __getitem__(self, f: BoolFun) -> np.ndarray:
        if f.domain != self.domain:
            raise DomainError("function lives on a different cube than the family")
        return self.matrices[f.table]


@dataclass(frozen=True, eq=False)
class ObsSpectrum:
    """Matrix Fourier coefficients, coefficients[alpha] for every subset mask alpha."""
    domain: VarSet
    coefficients: np.ndarray

    @property
    def dim(self) -> int:
        return self.coefficients.shape[1]

    def subsets(self) -> range:
        return range(self.coefficients.shape[0])

    def coefficient(self, alpha: int) -> np.ndarray:
        return self.coefficients[alpha]
