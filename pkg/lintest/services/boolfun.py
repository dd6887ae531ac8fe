import logging
from functools import lru_cache
from typing import Iterator, Tuple

import numpy as np

from lintest import config
from lintest.models.cube import (
    BoolFun, CubePoint, CubeSubset, NoiseSpec, SectionPolicy, VarSet
)
from lintest.utils.exceptions import CapacityError, DomainError, EmptyConstraintError

logger = logging.getLogger(__name__)


def table_bits(table: int, npoints: int) -> np.ndarray:
    """Unpack a bitmask into a 0/1 array whose entry p is bit p."""
    nbytes = max(1, (npoints + 7) // 8)
    raw = np.frombuffer(table.to_bytes(nbytes, "little"), dtype=np.uint8)
    return np.unpackbits(raw, bitorder="little")[:npoints].astype(np.int64)


def bits_table(bits: np.ndarray) -> int:
    packed = np.packbits(np.asarray(bits, dtype=np.uint8), bitorder="little")
    return int.from_bytes(packed.tobytes(), "little")


def signs(f: BoolFun) -> np.ndarray:
    return 1 - 2 * table_bits(f.table, f.domain.npoints)


@lru_cache(maxsize=4096)
def projection_map(W: VarSet, U: VarSet) -> np.ndarray:
    """
    Index map from the W-cube onto the U-cube, y -> y|_U.
    Raises: DomainError when U is not contained in W
    """
    if not U.issubset(W):
        raise DomainError(f"{list(U.names)} is not a subset of {list(W.names)}")
    n_w, n_u = len(W), len(U)
    points = np.arange(W.npoints, dtype=np.int64)
    image = np.zeros_like(points)
    for i, name in enumerate(U.names):
        bit = (points >> (n_w - 1 - W.position(name))) & 1
        image |= bit << (n_u - 1 - i)
    image.setflags(write=False)
    return image


def restrict(x: CubePoint, U: VarSet) -> CubePoint:
    if not U.issubset(x.domain):
        raise DomainError(f"{list(U.names)} is not a subset of {list(x.domain.names)}")
    return CubePoint(U, tuple(x.values[x.domain.position(name)] for name in U.names))


def pi2(alpha: CubeSubset, U: VarSet) -> CubeSubset:
    """Points of the U-cube hit an odd number of times by alpha under restriction."""
    image = projection_map(alpha.domain, U)
    members = np.flatnonzero(table_bits(alpha.mask, alpha.domain.npoints))
    counts = np.bincount(image[members], minlength=U.npoints)
    return CubeSubset(U, bits_table(counts & 1))


def lift(f: BoolFun, W: VarSet) -> BoolFun:
    """The function y -> f(y|_U) on the larger cube."""
    image = projection_map(W, f.domain)
    return BoolFun(W, bits_table(table_bits(f.table, f.domain.npoints)[image]))


def majority(f: BoolFun) -> int:
    # ties go to +1
    return -1 if 2 * f.table.bit_count() > f.domain.npoints else 1


def chi(alpha: CubeSubset, f: BoolFun) -> int:
    if alpha.domain != f.domain:
        raise DomainError("character and function live on different cubes")
    return -1 if (alpha.mask & f.table).bit_count() & 1 else 1


def section(f: BoolFun) -> Tuple[BoolFun, int]:
    """
    Canonical representative of the pair {f, -f}, the one with value +1 at the
    all-ones point, together with the sign m(f * s).
    """
    s = -f if f.table & 1 else f
    return s, majority(f * s)


def and_fold(f: BoolFun, C: BoolFun) -> BoolFun:
    if f.domain != C.domain:
        raise DomainError("function and constraint live on different cubes")
    return BoolFun(f.domain, f.table & C.table)


def section_conditioned(
    g: BoolFun, C: BoolFun, policy: SectionPolicy = SectionPolicy.LEXMIN
) -> Tuple[BoolFun, int]:
    """
    Pick one of g AND C and (-g) AND C by table order.
    Returns: (chosen function, +1 iff the choice is g AND C)
    Raises: EmptyConstraintError when C is constant +1
    """
    if g.domain != C.domain:
        raise DomainError("function and constraint live on different cubes")
    if C.table == 0:
        raise EmptyConstraintError()
    pos = g.table & C.table
    neg = (g.table ^ g.full) & C.table
    chosen = min(pos, neg) if policy == SectionPolicy.LEXMIN else max(pos, neg)
    return BoolFun(g.domain, chosen), 1 if chosen == pos else -1


def random_function(W: VarSet, rng: np.random.Generator) -> BoolFun:
    return BoolFun(W, bits_table(rng.integers(0, 2, size=W.npoints)))


def sample_noise(spec: NoiseSpec, W: VarSet, rng: np.random.Generator) -> BoolFun:
    """Each point is -1 independently with probability exactly p/q."""
    draws = rng.integers(0, spec.q, size=W.npoints)
    return BoolFun(W, bits_table(draws < spec.p))


def noise_weight(spec: NoiseSpec, mu: BoolFun):
    flips = mu.table.bit_count()
    eps = spec.fraction
    return eps**flips * (1 - eps) ** (mu.domain.npoints - flips)


def enumerate_functions(U: VarSet) -> Iterator[BoolFun]:
    """All functions over U in ascending table order, starting with f = +1."""
    if len(U) > config.ENUM_CAP:
        raise CapacityError("enumeration domain", len(U), config.ENUM_CAP)
    for table in range(1 << U.npoints):
        yield BoolFun(U, table)


def joint_domain(blocks: Tuple[VarSet, ...]) -> VarSet:
    names: Tuple[str, ...] = ()
    for block in blocks:
        names += block.names
    return VarSet(names)


def join_points(parts: Tuple[int, ...], sizes: Tuple[int, ...]) -> int:
    """Concatenate per-block point indices, block 0 most significant."""
    idx = 0
    for part, size in zip(parts, sizes):
        idx = (idx << size) | part
    return idx


def split_point(point: int, sizes: Tuple[int, ...]) -> Tuple[int, ...]:
    parts = []
    for size in reversed(sizes):
        parts.append(point & ((1 << size) - 1))
        point >>= size
    return tuple(reversed(parts))
