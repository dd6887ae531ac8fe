from dataclasses import dataclass
from enum import Enum
from fractions import Fraction
from functools import cached_property
from typing import Dict, Iterable, Iterator, List, Sequence, Tuple

from lintest import config
from lintest.utils.exceptions import CapacityError, DomainError


@dataclass(frozen=True)
class VarSet:
    """
    Ordered set of distinct variable names.

    Cube points over a VarSet are indexed big-endian: variable 0 is the most
    significant bit, and a set bit means the variable has value -1.
    """
    names: Tuple[str, ...]

    def __post_init__(self):
        names = tuple(self.names)
        object.__setattr__(self, "names", names)
        if len(set(names)) != len(names):
            raise DomainError(f"duplicate variable names in {list(names)}")

    @classmethod
    def of(cls, *names: str) -> "VarSet":
        return cls(tuple(names))

    def __len__(self) -> int:
        return len(self.names)

    def __iter__(self) -> Iterator[str]:
        return iter(self.names)

    def __contains__(self, name: object) -> bool:
        return name in self._positions

    @cached_property
    def _positions(self) -> Dict[str, int]:
        return {name: i for i, name in enumerate(self.names)}

    def position(self, name: str) -> int:
        try:
            return self._positions[name]
        except KeyError:
            raise DomainError(f"variable {name!r} not in {list(self.names)}")

    def issubset(self, other: "VarSet") -> bool:
        return all(name in other for name in self.names)

    def disjoint_union(self, other: "VarSet") -> "VarSet":
        return VarSet(self.names + other.names)

    def prefixed(self, prefix: str) -> "VarSet":
        return VarSet(tuple(f"{prefix}{name}" for name in self.names))

    @property
    def npoints(self) -> int:
        if len(self.names) > config.CUBE_CAP:
            raise CapacityError("cube dimension", len(self.names), config.CUBE_CAP)
        return 1 << len(self.names)


@dataclass(frozen=True)
class CubePoint:
    domain: VarSet
    values: Tuple[int, ...]

    def __post_init__(self):
        values = tuple(int(v) for v in self.values)
        object.__setattr__(self, "values", values)
        if len(values) != len(self.domain):
            raise DomainError(f"{len(values)} values for {len(self.domain)} variables")
        if any(v not in (1, -1) for v in values):
            raise DomainError(f"cube coordinates must be +1 or -1, got {values}")

    @property
    def index(self) -> int:
        idx = 0
        for v in self.values:
            idx = (idx << 1) | (v == -1)
        return idx

    @classmethod
    def from_index(cls, domain: VarSet, index: int) -> "CubePoint":
        n = len(domain)
        if not 0 <= index < (1 << n):
            raise DomainError(f"point index {index} outside a {n}-variable cube")
        return cls(domain, tuple(-1 if (index >> (n - 1 - i)) & 1 else 1 for i in range(n)))


@dataclass(frozen=True)
class CubeSubset:
    """A set of cube points stored as a bitmask; bit p is point p."""
    domain: VarSet
    mask: int

    def __post_init__(self):
        if not 0 <= self.mask < (1 << self.domain.npoints):
            raise DomainError("subset mask does not fit the cube")

    @classmethod
    def from_points(cls, domain: VarSet, points: Iterable[int]) -> "CubeSubset":
        mask = 0
        for p in points:
            mask |= 1 << p
        return cls(domain, mask)

    def members(self) -> List[int]:
        return [p for p in range(self.domain.npoints) if (self.mask >> p) & 1]

    def __contains__(self, point: int) -> bool:
        return bool((self.mask >> point) & 1)

    def __len__(self) -> int:
        return self.mask.bit_count()


@dataclass(frozen=True)
class BoolFun:
    """
    A function {+1,-1}^domain -> {+1,-1} as a truth-table bitmask.
    Bit p set means the value at point p is -1 (Boolean true).
    """
    domain: VarSet
    table: int

    def __post_init__(self):
        if not 0 <= self.table < (1 << self.domain.npoints):
            raise DomainError("truth table does not fit the cube")

    @property
    def full(self) -> int:
        return (1 << self.domain.npoints) - 1

    @classmethod
    def constant(cls, domain: VarSet, value: int) -> "BoolFun":
        return cls(domain, 0 if value == 1 else (1 << domain.npoints) - 1)

    @classmethod
    def from_values(cls, domain: VarSet, values: Sequence[int]) -> "BoolFun":
        if len(values) != domain.npoints:
            raise DomainError(f"{len(values)} values for a cube of {domain.npoints} points")
        table = 0
        for p, v in enumerate(values):
            if v == -1:
                table |= 1 << p
            elif v != 1:
                raise DomainError(f"function values must be +1 or -1, got {v}")
        return cls(domain, table)

    @classmethod
    def from_hex(cls, domain: VarSet, text: str) -> "BoolFun":
        return cls(domain, int(text, 16))

    @property
    def hex(self) -> str:
        """Table as hex, zero-padded to the cube size."""
        return format(self.table, f"0{max(1, self.domain.npoints // 4)}x")

    def value(self, point: int) -> int:
        return -1 if (self.table >> point) & 1 else 1

    def is_constant(self, value: int) -> bool:
        return self.table == (0 if value == 1 else self.full)

    def _same_domain(self, other: "BoolFun") -> None:
        if other.domain != self.domain:
            raise DomainError("functions live on different cubes")

    def __neg__(self) -> "BoolFun":
        return BoolFun(self.domain, self.table ^ self.full)

    def __mul__(self, other: "BoolFun") -> "BoolFun":
        self._same_domain(other)
        return BoolFun(self.domain, self.table ^ other.table)


@dataclass(frozen=True)
class NoiseSpec:
    """Noise rate p/q; p = 0 is a degenerate test mode."""
    p: int
    q: int

    def __post_init__(self):
        if self.q <= 0 or self.p < 0:
            raise DomainError(f"invalid noise rate {self.p}/{self.q}")
        frac = Fraction(self.p, self.q)
        object.__setattr__(self, "p", frac.numerator)
        object.__setattr__(self, "q", frac.denominator)
        if 2 * frac >= 1:
            raise DomainError(f"noise rate {frac} must be below 1/2")

    @classmethod
    def parse(cls, text: str) -> "NoiseSpec":
        try:
            frac = Fraction(text.strip())
        except (ValueError, ZeroDivisionError):
            raise DomainError(f"noise rate {text!r} is not a rational p/q")
        return cls(frac.numerator, frac.denominator)

    @property
    def fraction(self) -> Fraction:
        return Fraction(self.p, self.q)

    def __str__(self) -> str:
        return f"{self.p}/{self.q}"


class SectionPolicy(str, Enum):
    """Which of g AND C and (-g) AND C a conditioned section keeps."""
    LEXMIN = "lexmin"
    LEXMAX = "lexmax"
