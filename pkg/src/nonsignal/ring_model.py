"""Colorings of directed rings and line segments with colors {0, 1, 2}.

Colorings are plain tuples of ints; bulk enumeration works on numpy arrays
of shape ``(count, length)`` with dtype ``int8``. Packed integer codes use
base 3 with node 0 as the most significant digit, so sorting codes sorts
colorings lexicographically.
"""

from __future__ import annotations

import csv
import itertools
import os
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path
from typing import Iterator, Sequence

import numpy as np

from .rational import format_rational

COLORS = (0, 1, 2)
N_COLORS = 3

# The six permutations of the color set, in a fixed order.
COLOR_PERMUTATIONS: tuple[tuple[int, int, int], ...] = tuple(itertools.permutations(COLORS))


def _check_colors(colors: Sequence[int]) -> None:
    for c in colors:
        if c not in COLORS:
            raise ValueError(f"color {c!r} not in {{0,1,2}}")


@dataclass(frozen=True)
class Coloring:
    n: int
    colors: tuple[int, ...]

    def __post_init__(self) -> None:
        if self.n < 3:
            raise ValueError("a ring needs at least 3 nodes")
        if len(self.colors) != self.n:
            raise ValueError("length of colors must equal n")
        _check_colors(self.colors)

    @classmethod
    def of(cls, colors: Sequence[int]) -> "Coloring":
        return cls(len(colors), tuple(int(c) for c in colors))


@dataclass(frozen=True)
class SegmentColoring:
    k: int
    colors: tuple[int, ...]

    def __post_init__(self) -> None:
        if self.k < 1:
            raise ValueError("a segment needs at least 1 node")
        if len(self.colors) != self.k:
            raise ValueError("length of colors must equal k")
        _check_colors(self.colors)

    @classmethod
    def of(cls, colors: Sequence[int]) -> "SegmentColoring":
        return cls(len(colors), tuple(int(c) for c in colors))


def _colors_of(c: Coloring | SegmentColoring | Sequence[int]) -> tuple[int, ...]:
    if isinstance(c, (Coloring, SegmentColoring)):
        return c.colors
    return tuple(c)


# ---------------------------------------------------------------------------
# counting


def count_colorings(length: int) -> tuple[int, int]:
    """Proper colorings of a segment with ``length`` links, split by endpoints.

    Returns ``(a, b)``: ``a`` colorings with equal endpoint colors and ``b``
    with different ones. ``a`` is also the number of proper colorings of the
    ``length``-node ring.
    """
    if length < 0:
        raise ValueError("segment length must be >= 0")
    sign = -1 if length % 2 else 1
    return 2**length + 2 * sign, 2 * (2**length - sign)


def count_colorings_recurrence(length: int) -> tuple[int, int]:
    """Same numbers from the recurrence a_l = b_{l-1}, b_l = 2 a_{l-1} + b_{l-1}."""
    a, b = 3, 0
    for _ in range(length):
        a, b = b, 2 * a + b
    return a, b


# ---------------------------------------------------------------------------
# properness


def is_proper_ring(c: Coloring | Sequence[int]) -> bool:
    colors = _colors_of(c)
    n = len(colors)
    return all(colors[v] != colors[(v + 1) % n] for v in range(n))


def is_proper_segment(c: SegmentColoring | Sequence[int]) -> bool:
    colors = _colors_of(c)
    return all(colors[v] != colors[v + 1] for v in range(len(colors) - 1))


def proper_ring_mask(colorings: np.ndarray) -> np.ndarray:
    """Boolean mask over rows of a ``(count, n)`` coloring array."""
    return np.all(colorings != np.roll(colorings, -1, axis=1), axis=1)


def proper_segment_mask(colorings: np.ndarray) -> np.ndarray:
    if colorings.shape[1] < 2:
        return np.ones(colorings.shape[0], dtype=bool)
    return np.all(colorings[:, 1:] != colorings[:, :-1], axis=1)


# ---------------------------------------------------------------------------
# enumeration


def all_colorings(length: int) -> np.ndarray:
    """All 3**length colorings as an int8 array, row i = base-3 digits of i."""
    codes = np.arange(N_COLORS**length, dtype=np.int64)
    out = np.empty((codes.size, length), dtype=np.int8)
    for pos in range(length - 1, -1, -1):
        out[:, pos] = codes % 3
        codes //= 3
    return out


def pack(colorings: np.ndarray) -> np.ndarray:
    """Base-3 codes of the rows of a coloring array (node 0 most significant)."""
    codes = np.zeros(colorings.shape[0], dtype=np.int64)
    for pos in range(colorings.shape[1]):
        codes = codes * 3 + colorings[:, pos]
    return codes


def pack_one(colors: Sequence[int]) -> int:
    code = 0
    for c in colors:
        code = code * 3 + int(c)
    return code


def unpack_one(code: int, length: int) -> tuple[int, ...]:
    digits = [0] * length
    for pos in range(length - 1, -1, -1):
        code, digits[pos] = divmod(code, 3)
    return tuple(digits)


def _step_walks(length: int, first: int, second: int) -> np.ndarray:
    """Colorings starting (first, second) and stepping by +1 or +2 mod 3.

    Walk i uses the binary digits of i (most significant first) as its step
    string, step = 1 + digit, for nodes 2..length-1.
    """
    steps = length - 2
    idx = np.arange(2**steps, dtype=np.int64)
    out = np.empty((idx.size, length), dtype=np.int8)
    out[:, 0] = first
    out[:, 1] = second
    for pos in range(2, length):
        bit = (idx >> (steps - (pos - 1))) & 1
        out[:, pos] = (out[:, pos - 1] + 1 + bit) % 3
    return out


def proper_ring_array(n: int) -> np.ndarray:
    """All proper colorings of the n-ring, in deterministic order.

    Walks fixing the first two colors to (1, 0) are generated from step
    strings in {1,2}^(n-2); those closing with color 1 are rejected. The
    survivors are expanded over the six color permutations, permutation-major.
    """
    if n < 3:
        raise ValueError("ring needs n >= 3")
    base = _step_walks(n, 1, 0)
    base = base[base[:, -1] != 1]
    blocks = [np.asarray(perm, dtype=np.int8)[base] for perm in COLOR_PERMUTATIONS]
    return np.concatenate(blocks, axis=0)


def enumerate_proper_ring(n: int) -> Iterator[Coloring]:
    for row in proper_ring_array(n):
        yield Coloring(n, tuple(int(c) for c in row))


def proper_segment_array(k: int) -> np.ndarray:
    """All 3 * 2**(k-1) proper colorings of a k-node segment."""
    if k < 1:
        raise ValueError("segment needs k >= 1")
    if k == 1:
        return np.array([[0], [1], [2]], dtype=np.int8)
    blocks = []
    for first in COLORS:
        if k == 2:
            walks = np.array([[first, (first + 1) % 3], [first, (first + 2) % 3]], dtype=np.int8)
        else:
            walks = np.concatenate(
                [_step_walks(k, first, (first + s) % 3) for s in (1, 2)], axis=0
            )
        blocks.append(walks)
    return np.concatenate(blocks, axis=0)


def enumerate_proper_segment(k: int) -> Iterator[SegmentColoring]:
    for row in proper_segment_array(k):
        yield SegmentColoring(k, tuple(int(c) for c in row))


# ---------------------------------------------------------------------------
# uniform distribution


def uniform_same_color_prob(n: int, d: int) -> Fraction:
    """P[two nodes at distance d share a color] for uniform proper n-ring colorings."""
    if n < 3 or not 1 <= d <= n - 1:
        raise ValueError("need n >= 3 and 1 <= d <= n-1")
    a_d = count_colorings(d)[0]
    a_rest = count_colorings(n - d)[0]
    a_n = count_colorings(n)[0]
    return Fraction(a_d * a_rest, 3 * a_n)


# ---------------------------------------------------------------------------
# beta vectors


@dataclass(frozen=True)
class BetaVectorRing:
    """Same-color frequencies by distance; ``counts[d-2]`` = n * beta_d for d = 2..n-2."""

    n: int
    counts: tuple[int, ...]

    def __post_init__(self) -> None:
        if len(self.counts) != max(0, self.n - 3):
            raise ValueError(f"expected {self.n - 3} entries for n={self.n}")
        if any(not 0 <= c <= self.n for c in self.counts):
            raise ValueError("entries must lie in 0..n")
        if tuple(self.counts) != tuple(reversed(self.counts)):
            raise ValueError("beta_d must equal beta_{n-d}")

    def __getitem__(self, d: int) -> Fraction:
        if not 2 <= d <= self.n - 2:
            raise KeyError(d)
        return Fraction(self.counts[d - 2], self.n)

    @property
    def distances(self) -> range:
        return range(2, self.n - 1)

    def entries(self) -> dict[int, Fraction]:
        return {d: self[d] for d in self.distances}


def segment_pairs(k: int) -> list[tuple[int, int]]:
    """Non-adjacent node pairs (u, v), 1 <= u, v >= u + 2, v <= k, lexicographic."""
    return [(u, v) for u in range(1, k + 1) for v in range(u + 2, k + 1)]


@dataclass(frozen=True)
class BetaVectorSegment:
    """Indicators beta_{u,v} over ``segment_pairs(k)``, 1-based node numbers."""

    k: int
    bits: tuple[int, ...]

    def __getitem__(self, pair: tuple[int, int]) -> int:
        return self.bits[segment_pairs(self.k).index(pair)]

    def entries(self) -> dict[tuple[int, int], int]:
        return dict(zip(segment_pairs(self.k), self.bits))


def beta_ring(c: Coloring | Sequence[int]) -> BetaVectorRing:
    colors = _colors_of(c)
    n = len(colors)
    counts = tuple(
        sum(colors[v] == colors[(v + d) % n] for v in range(n)) for d in range(2, n - 1)
    )
    return BetaVectorRing(n, counts)


def beta_segment(c: SegmentColoring | Sequence[int]) -> BetaVectorSegment:
    colors = _colors_of(c)
    k = len(colors)
    bits = tuple(int(colors[u - 1] == colors[v - 1]) for u, v in segment_pairs(k))
    return BetaVectorSegment(k, bits)


def beta_ring_counts(colorings: np.ndarray, distances: Sequence[int]) -> np.ndarray:
    """n * beta_d for each row and each requested distance, shape (count, len(distances))."""
    out = np.empty((colorings.shape[0], len(distances)), dtype=np.int16)
    for j, d in enumerate(distances):
        out[:, j] = np.sum(colorings == np.roll(colorings, -d, axis=1), axis=1)
    return out


def beta_segment_bits(colorings: np.ndarray, pairs: Sequence[tuple[int, int]]) -> np.ndarray:
    out = np.empty((colorings.shape[0], len(pairs)), dtype=np.int8)
    for j, (u, v) in enumerate(pairs):
        out[:, j] = colorings[:, u - 1] == colorings[:, v - 1]
    return out


def _unique_rows(rows: np.ndarray) -> np.ndarray:
    if rows.shape[0] == 0:
        return rows
    return np.unique(rows, axis=0)


def distinct_beta_set(
    n: int | None = None,
    *,
    k: int | None = None,
    proper_only: bool = True,
    cache_dir: str | os.PathLike | None = None,
) -> list[BetaVectorRing] | list[BetaVectorSegment]:
    """Deduplicated beta vectors over the proper (or all) colorings.

    Exactly one of ``n`` (ring) or ``k`` (segment) must be given. The result
    is sorted lexicographically by the integer entries. If ``cache_dir`` (or
    the ``NONSIGNAL_CACHE_DIR`` environment variable) is set, results are
    cached there as ``.npy`` files keyed by context and size.
    """
    if (n is None) == (k is None):
        raise ValueError("give exactly one of n (ring) or k (segment)")
    rows = distinct_beta_array(n, k=k, proper_only=proper_only, cache_dir=cache_dir)
    if n is not None:
        return [BetaVectorRing(n, tuple(int(x) for x in row)) for row in rows]
    return [BetaVectorSegment(k, tuple(int(x) for x in row)) for row in rows]


def distinct_beta_array(
    n: int | None = None,
    *,
    k: int | None = None,
    proper_only: bool = True,
    cache_dir: str | os.PathLike | None = None,
) -> np.ndarray:
    """Array form of :func:`distinct_beta_set` (ring rows are n * beta over d = 2..n-2)."""
    if (n is None) == (k is None):
        raise ValueError("give exactly one of n (ring) or k (segment)")
    if n is not None and n < 5:
        raise ValueError("ring beta sets need n >= 5")
    if k is not None and k < 4:
        raise ValueError("segment beta sets need k >= 4")
    cache_dir = cache_dir if cache_dir is not None else os.environ.get("NONSIGNAL_CACHE_DIR")
    key = f"beta-{'ring' if n is not None else 'segment'}-{n if n is not None else k}-{'proper' if proper_only else 'all'}.npy"
    if cache_dir:
        path = Path(cache_dir) / key
        if path.exists():
            return np.load(path)
    if n is not None:
        colorings = proper_ring_array(n) if proper_only else all_colorings(n)
        rows = _unique_rows(beta_ring_counts(colorings, range(2, n - 1)))
    else:
        colorings = proper_segment_array(k) if proper_only else all_colorings(k)
        rows = _unique_rows(beta_segment_bits(colorings, segment_pairs(k)))
    if cache_dir:
        Path(cache_dir).mkdir(parents=True, exist_ok=True)
        np.save(Path(cache_dir) / key, rows)
    return rows


def write_beta_csv(path: str | os.PathLike, n: int | None = None, *, k: int | None = None,
                   proper_only: bool = True) -> int:
    """Write the distinct beta set as CSV; returns the number of rows written."""
    rows = distinct_beta_array(n, k=k, proper_only=proper_only)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        if n is not None:
            writer.writerow([f"d={d}" for d in range(2, n - 1)])
            for row in rows:
                writer.writerow([format_rational(Fraction(int(x), n)) for x in row])
        else:
            writer.writerow([f"{u},{v}" for u, v in segment_pairs(k)])
            for row in rows:
                writer.writerow([str(int(x)) for x in row])
    return len(rows)


# ---------------------------------------------------------------------------
# cyclic classes


@dataclass(frozen=True)
class CyclicClassTable:
    """Rotation orbits of all 3**n colorings.

    ``class_of[code]`` is the class index of the coloring with packed code
    ``code``. Classes are ordered by their canonical representative, the
    lexicographically smallest rotation.
    """

    n: int
    representatives: np.ndarray  # packed codes, increasing
    sizes: np.ndarray
    proper: np.ndarray
    class_of: np.ndarray

    def __len__(self) -> int:
        return int(self.representatives.size)

    def representative(self, i: int) -> tuple[int, ...]:
        return unpack_one(int(self.representatives[i]), self.n)


def rotation_codes(n: int) -> np.ndarray:
    """Packed codes of every rotation, shape (n, 3**n); row t = rotate left by t."""
    total = 3**n
    codes = np.arange(total, dtype=np.int64)
    out = np.empty((n, total), dtype=np.int64)
    high = 3 ** (n - 1)
    cur = codes
    for t in range(n):
        out[t] = cur
        cur = (cur % high) * 3 + cur // high
    return out


def cyclic_classes(n: int) -> CyclicClassTable:
    if n < 3:
        raise ValueError("ring needs n >= 3")
    rot = rotation_codes(n)
    canon = rot.min(axis=0)
    reps, class_of, sizes = np.unique(canon, return_inverse=True, return_counts=True)
    proper = proper_ring_mask(all_colorings(n)[reps])
    return CyclicClassTable(n, reps, sizes, proper, class_of.astype(np.int64))
