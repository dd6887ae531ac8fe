from dataclasses import dataclass, field
from functools import cached_property
from typing import Dict, Hashable, Iterator, List, Mapping, Optional, Tuple

import numpy as np

from lintest import config
from lintest.utils.exceptions import (
    CapacityError, ConfigurationError, DomainError,
    InvalidMeasurementError, InvalidObservableError
)

Label = Hashable


def as_cmatrix(matrix) -> np.ndarray:
    """Coerce to a square complex128 array within the dimension cap."""
    arr = np.asarray(matrix, dtype=np.complex128)
    if arr.ndim != 2 or arr.shape[0] != arr.shape[1] or arr.shape[0] == 0:
        raise DomainError(f"expected a nonempty square matrix, got shape {arr.shape}")
    if arr.shape[0] > config.DIM_CAP:
        raise CapacityError("matrix dimension", arr.shape[0], config.DIM_CAP)
    if not np.all(np.isfinite(arr)):
        raise DomainError("matrix has non-finite entries")
    return arr


def max_abs(matrix: np.ndarray) -> float:
    return float(np.max(np.abs(matrix))) if matrix.size else 0.0


@dataclass(frozen=True, eq=False)
class BinaryObservable:
    """A Hermitian unitary involution."""
    matrix: np.ndarray

    def __post_init__(self):
        m = as_cmatrix(self.matrix)
        object.__setattr__(self, "matrix", m)
        herm = max_abs(m - m.conj().T)
        invol = max_abs(m @ m - np.eye(m.shape[0]))
        if herm > config.TOL or invol > config.TOL:
            raise InvalidObservableError(
                {"hermiticity": herm, "involution": invol, "tolerance": config.TOL}
            )

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    def __neg__(self) -> "BinaryObservable":
        return BinaryObservable(-self.matrix)


@dataclass(frozen=True, eq=False)
class PVM:
    """
    Projective measurement. Zero projections are allowed.
    Hermitian idempotents summing to I are pairwise orthogonal, so that is
    what gets checked.
    """
    outcomes: Tuple[Label, ...]
    projections: Tuple[np.ndarray, ...]

    def __post_init__(self):
        outcomes = tuple(self.outcomes)
        projections = tuple(as_cmatrix(p) for p in self.projections)
        object.__setattr__(self, "outcomes", outcomes)
        object.__setattr__(self, "projections", projections)
        if len(outcomes) != len(projections) or not outcomes:
            raise InvalidMeasurementError("outcome and projection counts differ")
        if len(set(outcomes)) != len(outcomes):
            raise InvalidMeasurementError("duplicate outcome labels")
        d = projections[0].shape[0]
        total = np.zeros((d, d), dtype=np.complex128)
        for label, p in zip(outcomes, projections):
            if p.shape != (d, d):
                raise InvalidMeasurementError("projections of different dimensions")
            herm = max_abs(p - p.conj().T)
            idem = max_abs(p @ p - p)
            if herm > config.TOL or idem > config.TOL:
                raise InvalidMeasurementError(
                    {"outcome": repr(label), "hermiticity": herm, "idempotence": idem}
                )
            total += p
        completeness = max_abs(total - np.eye(d))
        if completeness > config.TOL:
            raise InvalidMeasurementError({"completeness": completeness})

    @classmethod
    def from_dict(cls, projections: Mapping[Label, np.ndarray]) -> "PVM":
        return cls(tuple(projections.keys()), tuple(projections.values()))

    @property
    def dim(self) -> int:
        return self.projections[0].shape[0]

    @cached_property
    def _by_label(self) -> Dict[Label, np.ndarray]:
        return dict(zip(self.outcomes, self.projections))

    def get(self, label: Label) -> Optional[np.ndarray]:
        return self._by_label.get(label)

    def __getitem__(self, label: Label) -> np.ndarray:
        try:
            return self._by_label[label]
        except KeyError:
            raise ConfigurationError(f"measurement has no outcome {label!r}")

    def items(self) -> Iterator[Tuple[Label, np.ndarray]]:
        return iter(zip(self.outcomes, self.projections))


@dataclass(frozen=True, eq=False)
class POVM:
    outcomes: Tuple[Label, ...]
    effects: Tuple[np.ndarray, ...]

    def __post_init__(self):
        outcomes = tuple(self.outcomes)
        effects = tuple(as_cmatrix(e) for e in self.effects)
        object.__setattr__(self, "outcomes", outcomes)
        object.__setattr__(self, "effects", effects)
        if len(outcomes) != len(effects) or not outcomes:
            raise InvalidMeasurementError("outcome and effect counts differ")
        d = effects[0].shape[0]
        total = np.zeros((d, d), dtype=np.complex128)
        for label, e in zip(outcomes, effects):
            herm = max_abs(e - e.conj().T)
            if herm > config.TOL:
                raise InvalidMeasurementError({"outcome": repr(label), "hermiticity": herm})
            lowest = float(np.min(np.linalg.eigvalsh((e + e.conj().T) / 2)))
            if lowest < -config.TOL:
                raise InvalidMeasurementError({"outcome": repr(label), "min_eigenvalue": lowest})
            total += e
        completeness = max_abs(total - np.eye(d))
        if completeness > config.TOL:
            raise InvalidMeasurementError({"completeness": completeness})

    @classmethod
    def from_pvm(cls, pvm: PVM) -> "POVM":
        return cls(pvm.outcomes, pvm.projections)

    @property
    def dim(self) -> int:
        return self.effects[0].shape[0]

    @cached_property
    def _by_label(self) -> Dict[Label, np.ndarray]:
        return dict(zip(self.outcomes, self.effects))

    def get(self, label: Label) -> Optional[np.ndarray]:
        return self._by_label.get(label)

    def items(self) -> Iterator[Tuple[Label, np.ndarray]]:
        return iter(zip(self.outcomes, self.effects))


@dataclass(frozen=True, eq=False)
class SyncStrategy:
    """Shared PVMs on a maximally entangled state of local dimension `dim`."""
    dim: int
    measurements: Mapping[Label, PVM]

    def __post_init__(self):
        if self.dim > config.DIM_CAP:
            raise CapacityError("strategy dimension", self.dim, config.DIM_CAP)
        if isinstance(self.measurements, dict):
            for question, pvm in self.measurements.items():
                if pvm.dim != self.dim:
                    raise InvalidMeasurementError(
                        f"question {question!r} has dimension {pvm.dim}, expected {self.dim}"
                    )

    def __getitem__(self, question: Label) -> PVM:
        try:
            return self.measurements[question]
        except KeyError:
            raise ConfigurationError(f"no measurement for question {question!r}")

    def __contains__(self, question: Label) -> bool:
        return question in self.measurements

    def questions(self) -> List[Label]:
        return list(self.measurements.keys())


@dataclass(frozen=True, eq=False)
class GeneralStrategy:
    """POVMs for each side acting on a bipartite pure state."""
    dim_a: int
    dim_b: int
    state: np.ndarray
    alice: Mapping[Label, POVM]
    bob: Mapping[Label, POVM] = field(default_factory=dict)

    def __post_init__(self):
        state = np.asarray(self.state, dtype=np.complex128).reshape(-1)
        object.__setattr__(self, "state", state)
        if state.shape[0] != self.dim_a * self.dim_b:
            raise DomainError(f"state has length {state.shape[0]}, expected {self.dim_a * self.dim_b}")
        norm = float(np.linalg.norm(state))
        if abs(norm - 1) > config.TOL:
            raise DomainError(f"state norm {norm} is not 1")

    @classmethod
    def maximally_entangled(
        cls, dim: int, alice: Mapping[Label, POVM], bob: Mapping[Label, POVM]
    ) -> "GeneralStrategy":
        return cls(dim, dim, np.eye(dim).reshape(-1) / np.sqrt(dim), alice, bob)

    def alice_measurement(self, question: Label) -> POVM:
        try:
            return self.alice[question]
        except KeyError:
            raise ConfigurationError(f"no Alice measurement for question {question!r}")

    def bob_measurement(self, question: Label) -> POVM:
        try:
            return self.bob[question]
        except KeyError:
            raise ConfigurationError(f"no Bob measurement for question {question!r}")
