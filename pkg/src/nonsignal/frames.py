"""Sliding frames, gap-r placements and the marginal-equality constraint family.

Ring nodes are numbered 0..n-1. Segment nodes are numbered 1..k, so a
placement ``omega`` on a segment holds 1-based start nodes.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Iterator, Sequence, Union

import numpy as np

from .ring_model import COLOR_PERMUTATIONS, all_colorings, pack


@dataclass(frozen=True)
class Ring:
    n: int

    @property
    def size(self) -> int:
        return self.n

    def __str__(self) -> str:
        return f"ring({self.n})"


@dataclass(frozen=True)
class Segment:
    k: int

    @property
    def size(self) -> int:
        return self.k

    def __str__(self) -> str:
        return f"segment({self.k})"


Context = Union[Ring, Segment]


@dataclass(frozen=True)
class FrameCollection:
    lengths: tuple[int, ...]

    def __post_init__(self) -> None:
        if len(self.lengths) < 1:
            raise ValueError("a frame collection needs at least one frame")
        if any(s < 1 for s in self.lengths):
            raise ValueError("frame lengths must be positive")

    @classmethod
    def of(cls, *lengths: int) -> "FrameCollection":
        return cls(tuple(int(s) for s in lengths))

    @property
    def t(self) -> int:
        return len(self.lengths)

    @property
    def total(self) -> int:
        return sum(self.lengths)

    def __str__(self) -> str:
        return "(" + ",".join(map(str, self.lengths)) + ")"


def _as_frames(F: FrameCollection | Sequence[int]) -> FrameCollection:
    return F if isinstance(F, FrameCollection) else FrameCollection(tuple(F))


@dataclass(frozen=True)
class Placement:
    offsets: tuple[int, ...]
    gap: int
    context: Context

    def __str__(self) -> str:
        return "(" + ",".join(map(str, self.offsets)) + ")"


@dataclass(frozen=True)
class TableauCollection:
    tableaux: tuple[tuple[int, ...], ...]

    def __str__(self) -> str:
        return "(" + ",".join("".join(map(str, z)) for z in self.tableaux) + ")"


@dataclass(frozen=True)
class MarginalConstraint:
    """Marginal of ``F`` reading ``zeta`` is equal at placements ``omega`` and ``omega_prime``."""

    F: FrameCollection
    zeta: TableauCollection
    omega: Placement
    omega_prime: Placement
    context: Context

    def to_line(self) -> str:
        return f"{self.context} F={self.F} zeta={self.zeta} omega={self.omega} omega'={self.omega_prime}"


@dataclass(frozen=True)
class Budget:
    """Limits on the constraint family; ``None`` means unbounded."""

    max_t: int | None = None
    max_total: int | None = None

    def admits(self, F: FrameCollection) -> bool:
        if self.max_t is not None and F.t > self.max_t:
            return False
        if self.max_total is not None and F.total > self.max_total:
            return False
        return True


FULL = Budget()


# ---------------------------------------------------------------------------
# placability and placements


def is_placable(F: FrameCollection | Sequence[int], r: int, n: int) -> bool:
    F = _as_frames(F)
    return sum(s + r for s in F.lengths) <= n


def is_placable_segment(F: FrameCollection | Sequence[int], r: int, k: int) -> bool:
    """Some gap-r placement respects the k-node segment (the first gap may stick out)."""
    F = _as_frames(F)
    return F.total + (F.t - 1) * r <= k


def is_valid_placement(
    F: FrameCollection | Sequence[int], omega: Sequence[int], r: int, context: Context
) -> bool:
    F = _as_frames(F)
    if len(omega) != F.t:
        raise ValueError("placement and frame collection differ in length")
    if isinstance(context, Ring):
        n = context.n
        seen: set[int] = set()
        for w, s in zip(omega, F.lengths):
            if s + r > n:
                return False
            nodes = {(w + i) % n for i in range(-r, s)}
            if seen & nodes:
                return False
            seen |= nodes
        return True
    k = context.k
    intervals = []
    for w, s in zip(omega, F.lengths):
        if w < 1 or w + s - 1 > k:
            return False
        intervals.append((w - r, w + s - 1))
    intervals.sort()
    return all(a[1] < b[0] for a, b in zip(intervals, intervals[1:]))


def _ring_placements(lengths: tuple[int, ...], r: int, n: int, anchored: bool) -> list[tuple[int, ...]]:
    out: list[tuple[int, ...]] = []
    t = len(lengths)
    occupied = [False] * n

    def rec(j: int, prefix: list[int]) -> None:
        if j == t:
            out.append(tuple(prefix))
            return
        s = lengths[j]
        starts = [0] if (anchored and j == 0) else range(n)
        for w in starts:
            nodes = [(w + i) % n for i in range(-r, s)]
            if any(occupied[x] for x in nodes):
                continue
            for x in nodes:
                occupied[x] = True
            prefix.append(w)
            rec(j + 1, prefix)
            prefix.pop()
            for x in nodes:
                occupied[x] = False

    if sum(s + r for s in lengths) <= n:
        rec(0, [])
    return out


def placements_ring(F: FrameCollection | Sequence[int], r: int, n: int) -> list[Placement]:
    """Every gap-r placement of F on the n-ring, lexicographic in omega."""
    F = _as_frames(F)
    ctx = Ring(n)
    return [Placement(w, r, ctx) for w in _ring_placements(F.lengths, r, n, anchored=False)]


def anchored_placements_ring(F: FrameCollection | Sequence[int], r: int, n: int) -> list[tuple[int, ...]]:
    """Placements with omega_1 = 0 (one representative per rotation)."""
    F = _as_frames(F)
    return _ring_placements(F.lengths, r, n, anchored=True)


def _segment_placements(lengths: tuple[int, ...], r: int, k: int) -> list[tuple[int, ...]]:
    out: list[tuple[int, ...]] = []
    t = len(lengths)

    def rec(j: int, prefix: list[int], intervals: list[tuple[int, int]]) -> None:
        if j == t:
            out.append(tuple(prefix))
            return
        s = lengths[j]
        for w in range(1, k - s + 2):
            lo, hi = w - r, w + s - 1
            if any(not (hi < a or b < lo) for a, b in intervals):
                continue
            prefix.append(w)
            intervals.append((lo, hi))
            rec(j + 1, prefix, intervals)
            intervals.pop()
            prefix.pop()

    if is_placable_segment(lengths, r, k):
        rec(0, [], [])
    return out


def placements_segment(F: FrameCollection | Sequence[int], r: int, k: int) -> list[Placement]:
    """Every gap-r placement of F respecting the segment 1..k, lexicographic."""
    F = _as_frames(F)
    ctx = Segment(k)
    return [Placement(w, r, ctx) for w in _segment_placements(F.lengths, r, k)]


def canonical_placement(F: FrameCollection | Sequence[int], r: int, context: Context) -> tuple[int, ...]:
    """Frames packed left to right, each gap directly after the previous frame."""
    F = _as_frames(F)
    start = 0 if isinstance(context, Ring) else 1
    out = []
    for s in F.lengths:
        out.append(start)
        start += s + r
    return tuple(out)


# ---------------------------------------------------------------------------
# frame collections


def frame_collections(context: Context, r: int, budget: Budget = FULL) -> Iterator[FrameCollection]:
    """All placable collections in the context, ordered by (t, lengths)."""
    size = context.size
    t = 1
    while True:
        if budget.max_t is not None and t > budget.max_t:
            return
        if isinstance(context, Ring):
            cap = size - t * r  # sum of lengths
        else:
            cap = size - (t - 1) * r
        if cap < t:
            return
        for lengths in _compositions_up_to(t, cap):
            F = FrameCollection(lengths)
            if budget.admits(F):
                yield F
        t += 1


def _compositions_up_to(t: int, cap: int) -> Iterator[tuple[int, ...]]:
    # tuples of t positive ints with sum <= cap, lexicographic
    if t == 1:
        for s in range(1, cap + 1):
            yield (s,)
        return
    for s in range(1, cap - (t - 1) + 1):
        for rest in _compositions_up_to(t - 1, cap - s):
            yield (s,) + rest


# ---------------------------------------------------------------------------
# tableaux and consistent colorings


def tableau_collections(F: FrameCollection) -> Iterator[TableauCollection]:
    for flat in itertools.product(range(3), repeat=F.total):
        out, pos = [], 0
        for s in F.lengths:
            out.append(tuple(flat[pos : pos + s]))
            pos += s
        yield TableauCollection(tuple(out))


def frame_nodes(F: FrameCollection, omega: Sequence[int], context: Context) -> list[int]:
    """0-based node indices read by the placed frames, in frame order."""
    nodes = []
    for w, s in zip(omega, F.lengths):
        if isinstance(context, Ring):
            nodes.extend((w + i) % context.n for i in range(s))
        else:
            nodes.extend(w - 1 + i for i in range(s))
    return nodes


def consistent_colorings(
    F: FrameCollection | Sequence[int],
    omega: Sequence[int],
    zeta: TableauCollection | Sequence[Sequence[int]],
    context: Context,
) -> np.ndarray:
    """Sorted packed codes of all colorings reading ``zeta`` through ``omega + F``."""
    F = _as_frames(F)
    tabs = zeta.tableaux if isinstance(zeta, TableauCollection) else tuple(tuple(z) for z in zeta)
    if tuple(len(z) for z in tabs) != F.lengths:
        raise ValueError("tableau lengths do not match the frame collection")
    size = context.size
    nodes = frame_nodes(F, omega, context)
    flat = [c for z in tabs for c in z]
    colorings = all_colorings(size)
    mask = np.ones(colorings.shape[0], dtype=bool)
    for node, c in zip(nodes, flat):
        mask &= colorings[:, node] == c
    return pack(colorings[mask])


def tableau_keys(colorings: np.ndarray, nodes: Sequence[int]) -> np.ndarray:
    """Base-3 code of the tableau collection each coloring shows at ``nodes``."""
    key = np.zeros(colorings.shape[0], dtype=np.int64)
    for node in nodes:
        key = key * 3 + colorings[:, node]
    return key


def canonical_tableau_codes(total: int) -> np.ndarray:
    """Tableau codes (length ``total``) that are minimal under the 6 color permutations."""
    flat = all_colorings(total) if total > 0 else np.zeros((1, 0), dtype=np.int8)
    codes = pack(flat)
    best = codes.copy()
    for perm in COLOR_PERMUTATIONS[1:]:
        best = np.minimum(best, pack(np.asarray(perm, dtype=np.int8)[flat]))
    return codes[codes == best]


# ---------------------------------------------------------------------------
# constraint family


def generate_marginal_constraints(
    context: Context, r: int, budget: Budget = FULL, *, include_single_frames: bool | None = None
) -> Iterator[MarginalConstraint]:
    """Equate the canonical packed placement with every other placement, per F and zeta.

    On rings, single-frame collections are skipped by default because they
    are vacuous under cyclicity; on segments they are kept.
    """
    if include_single_frames is None:
        include_single_frames = isinstance(context, Segment)
    for F in frame_collections(context, r, budget):
        if F.t == 1 and not include_single_frames:
            continue
        anchor = canonical_placement(F, r, context)
        if isinstance(context, Ring):
            others = _ring_placements(F.lengths, r, context.n, anchored=False)
        else:
            others = _segment_placements(F.lengths, r, context.k)
        others = [w for w in others if w != anchor]
        if not others:
            continue
        p0 = Placement(anchor, r, context)
        for zeta in tableau_collections(F):
            for w in others:
                yield MarginalConstraint(F, zeta, p0, Placement(w, r, context), context)
