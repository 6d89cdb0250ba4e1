"""Builders for the success-probability LPs of rings and line segments.

Variables are per-coloring probabilities shared by every member of a group
of colorings (a single coloring, a rotation orbit, a color-permutation orbit,
or both). The objective weights each group by its size and the normalization
row is ``sum_g size_g * x_g = 1``.

Non-signaling rows are generated per frame collection ``F``: marginals at every
placement are equated with the marginal at the packed canonical placement.
With ``reduce_implied`` (the default) a placement is tied to the others
without an explicit row when one of its frames can be lengthened by a node
into a valid placement of the longer collection ``F'``: its marginal is then
``F'``'s marginal summed over the added node, and placements lengthened at the
same frame and on the same side share that sum because ``F'``-marginals are
placement-independent by the rows for ``F'``. Only one row set per connected component of that relation is emitted.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterator, Sequence

import numpy as np
import scipy.sparse as sp

from .. import frames as fr
from ..ring_model import COLOR_PERMUTATIONS, all_colorings, pack, proper_ring_mask, proper_segment_mask, rotation_codes, unpack_one
from .model import RationalLP

log = logging.getLogger(__name__)


@dataclass
class Grouping:
    """Partition of all 3**size colorings into LP variables."""

    context: fr.Context
    cyclic: bool
    color_symmetric: bool
    group_of: np.ndarray  # coloring code -> group index
    representatives: np.ndarray  # smallest member code per group
    sizes: np.ndarray
    proper: np.ndarray

    @property
    def n_groups(self) -> int:
        return int(self.representatives.size)

    def labels(self) -> list[str]:
        size = self.context.size
        prefix = {(False, False): "", (True, False): "rot:", (False, True): "col:", (True, True): "rotcol:"}[
            (self.cyclic, self.color_symmetric)
        ]
        return [prefix + "".join(map(str, unpack_one(int(c), size))) for c in self.representatives]


def make_grouping(context: fr.Context, cyclic: bool, color_symmetric: bool) -> Grouping:
    size = context.size
    colorings = all_colorings(size)
    if cyclic and not isinstance(context, fr.Ring):
        raise ValueError("cyclic classes only exist on rings")
    perms = COLOR_PERMUTATIONS if color_symmetric else COLOR_PERMUTATIONS[:1]
    canon = None
    for perm in perms:
        codes = pack(np.asarray(perm, dtype=np.int8)[colorings])
        if cyclic:
            # rotation_codes(size) indexes by code, so apply it to the permuted codes
            codes = _min_rotation(codes, size)
        canon = codes if canon is None else np.minimum(canon, codes)
    reps, group_of, sizes = np.unique(canon, return_inverse=True, return_counts=True)
    rep_colorings = colorings[reps]
    if isinstance(context, fr.Ring):
        proper = proper_ring_mask(rep_colorings)
    else:
        proper = proper_segment_mask(rep_colorings)
    return Grouping(context, cyclic, color_symmetric, group_of.astype(np.int64), reps, sizes.astype(np.int64), proper)


_ROT_CACHE: dict[int, np.ndarray] = {}


def _min_rotation(codes: np.ndarray, n: int) -> np.ndarray:
    if n not in _ROT_CACHE:
        _ROT_CACHE.clear()
        _ROT_CACHE[n] = rotation_codes(n).min(axis=0)
    return _ROT_CACHE[n][codes]


# ---------------------------------------------------------------------------
# placement components


class _UnionFind:
    def __init__(self, items: int):
        self.parent = list(range(items))

    def find(self, a: int) -> int:
        while self.parent[a] != a:
            self.parent[a] = self.parent[self.parent[a]]
            a = self.parent[a]
        return a

    def union(self, a: int, b: int) -> None:
        ra, rb = self.find(a), self.find(b)
        if ra != rb:
            if ra < rb:
                self.parent[rb] = ra
            else:
                self.parent[ra] = rb


def _extensions(F: fr.FrameCollection, omega: tuple[int, ...], r: int, context: fr.Context,
                budget: fr.Budget) -> list[tuple[int, int]]:
    """(frame, side) pairs such that lengthening that frame on that side stays a valid placement.

    Side 0 adds a node after the frame, side 1 a node before it. The marginal
    at ``omega`` is then the longer collection's marginal summed over the first
    or last node of frame j, so placements sharing a (frame, side) pair have
    equal marginals whenever the longer collection is non-signaling.
    """
    out = []
    for j in range(F.t):
        lengths = list(F.lengths)
        lengths[j] += 1
        F2 = fr.FrameCollection(tuple(lengths))
        if not budget.admits(F2):
            continue
        left = list(omega)
        if isinstance(context, fr.Ring):
            left[j] = (left[j] - 1) % context.n
        else:
            left[j] -= 1
        if fr.is_valid_placement(F2, omega, r, context):
            out.append((j, 0))
        if fr.is_valid_placement(F2, tuple(left), r, context):
            out.append((j, 1))
    return out


def placement_pairs(
    F: fr.FrameCollection, r: int, context: fr.Context, *, anchored: bool, reduce_implied: bool,
    budget: fr.Budget = fr.FULL,
) -> tuple[tuple[int, ...], list[tuple[int, ...]]]:
    """The canonical placement and the placements that need explicit rows against it."""
    if isinstance(context, fr.Ring):
        if anchored:
            placements = fr.anchored_placements_ring(F, r, context.n)
        else:
            placements = [p.offsets for p in fr.placements_ring(F, r, context.n)]
    else:
        placements = [p.offsets for p in fr.placements_segment(F, r, context.k)]
    anchor = fr.canonical_placement(F, r, context)
    if not placements:
        return anchor, []
    if anchor not in placements:
        raise AssertionError(f"canonical placement {anchor} of {F} is not valid")
    if not reduce_implied:
        return anchor, [w for w in placements if w != anchor]
    index = {w: i for i, w in enumerate(placements)}
    uf = _UnionFind(len(placements) + 2 * F.t)
    for w in placements:
        for j, side in _extensions(F, w, r, context, budget):
            uf.union(index[w], len(placements) + 2 * j + side)
    anchor_root = uf.find(index[anchor])
    seen = {anchor_root}
    out = []
    for w in placements:  # lexicographic, so each component is represented by its smallest member
        root = uf.find(index[w])
        if root not in seen:
            seen.add(root)
            out.append(w)
    return anchor, out


# ---------------------------------------------------------------------------
# marginal rows


class _RowSink:
    def __init__(self) -> None:
        self.indptr = [0]
        self.indices: list[np.ndarray] = []
        self.data: list[np.ndarray] = []
        self.seen: set[bytes] = set()
        self.nnz = 0
        self.count = 0

    def add(self, idx: np.ndarray, coef: np.ndarray) -> bool:
        if idx.size == 0:
            return False
        if coef[0] < 0:
            coef = -coef
        key = idx.tobytes() + b"|" + coef.tobytes()
        if key in self.seen:
            return False
        self.seen.add(key)
        self.indices.append(idx)
        self.data.append(coef)
        self.nnz += idx.size
        self.indptr.append(self.nnz)
        self.count += 1
        return True


def _marginal_entries(colorings: np.ndarray, grouping: Grouping, nodes: Sequence[int]) -> np.ndarray:
    """Sorted combined keys ``tableau * G + group`` with multiplicities, as (key, count) arrays."""
    keys = fr.tableau_keys(colorings, nodes) * grouping.n_groups + grouping.group_of
    uniq, counts = np.unique(keys, return_counts=True)
    return np.stack([uniq, counts])


def _emit_difference(sink: _RowSink, m1: np.ndarray, m0: np.ndarray, G: int,
                     selected: np.ndarray | None) -> int:
    keys = np.concatenate([m1[0], m0[0]])
    vals = np.concatenate([m1[1], -m0[1]])
    order = np.argsort(keys, kind="stable")
    keys, vals = keys[order], vals[order]
    uniq, start = np.unique(keys, return_index=True)
    sums = np.add.reduceat(vals, start)
    nz = sums != 0
    uniq, sums = uniq[nz], sums[nz]
    tab = uniq // G
    grp = uniq % G
    if selected is not None:
        keep = np.isin(tab, selected)
        tab, grp, sums = tab[keep], grp[keep], sums[keep]
    if tab.size == 0:
        return 0
    cuts = np.flatnonzero(np.diff(tab)) + 1
    added = 0
    for g_idx, s_vals in zip(np.split(grp, cuts), np.split(sums, cuts)):
        added += sink.add(g_idx.astype(np.int64), s_vals.astype(np.int64))
    return added


def _build(context: fr.Context, r: int, grouping: Grouping, budget: fr.Budget, reduce_implied: bool,
           include_single: bool, anchored: bool, extra_rows: Iterator[tuple[np.ndarray, np.ndarray]] = iter(())) -> RationalLP:
    size = context.size
    colorings = all_colorings(size)
    G = grouping.n_groups
    sink = _RowSink()
    # normalization row first
    norm_idx = np.arange(G, dtype=np.int64)
    sink.add(norm_idx, grouping.sizes.copy())
    for idx, coef in extra_rows:
        sink.add(idx, coef)
    selected_cache: dict[int, np.ndarray | None] = {}
    n_pairs = 0
    for F in fr.frame_collections(context, r, budget):
        if F.t == 1 and not include_single:
            continue
        anchor, others = placement_pairs(F, r, context, anchored=anchored, reduce_implied=reduce_implied,
                                         budget=budget)
        if not others:
            continue
        if F.total not in selected_cache:
            selected_cache[F.total] = fr.canonical_tableau_codes(F.total) if grouping.color_symmetric else None
        selected = selected_cache[F.total]
        m0 = _marginal_entries(colorings, grouping, fr.frame_nodes(F, anchor, context))
        for w in others:
            m1 = _marginal_entries(colorings, grouping, fr.frame_nodes(F, w, context))
            _emit_difference(sink, m1, m0, G, selected)
            n_pairs += 1
    A = sp.csr_matrix(
        (np.concatenate(sink.data), np.concatenate(sink.indices), np.asarray(sink.indptr, dtype=np.int64)),
        shape=(sink.count, G),
    )
    A.sort_indices()
    rhs = [Fraction(1)] + [Fraction(0)] * (sink.count - 1)
    c_num = [int(s) if p else 0 for s, p in zip(grouping.sizes, grouping.proper)]
    meta = {
        "context": str(context),
        "r": r,
        "cyclic": grouping.cyclic,
        "color_symmetric": grouping.color_symmetric,
        "reduce_implied": reduce_implied,
        "placement_pairs": n_pairs,
        "budget": {"max_t": budget.max_t, "max_total": budget.max_total},
        "grouping": grouping,
    }
    log.info("built %s LP: %d vars, %d rows, %d nnz", context, G, sink.count, A.nnz)
    return RationalLP(grouping.labels(), A, [1] * sink.count, rhs, c_num, 1, 0, meta)


def _cyclicity_rows(grouping: Grouping, n: int) -> Iterator[tuple[np.ndarray, np.ndarray]]:
    """Rows x_[phi] - x_[phi o Prev] = 0 for per-coloring (non-class) variables."""
    codes = np.arange(3**n, dtype=np.int64)
    high = 3 ** (n - 1)
    rotated = (codes % high) * 3 + codes // high
    a = grouping.group_of[codes]
    b = grouping.group_of[rotated]
    pairs = np.unique(np.stack([np.minimum(a, b), np.maximum(a, b)], axis=1)[a != b], axis=0)
    for lo, hi in pairs:
        yield np.array([lo, hi], dtype=np.int64), np.array([1, -1], dtype=np.int64)


def build_ring_lp(n: int, r: int, use_cyclic_classes: bool = True, use_color_symmetry: bool = False,
                  budget: fr.Budget = fr.FULL, *, reduce_implied: bool = True) -> RationalLP:
    """LP for the best success probability of a ring coloring non-signaling beyond r."""
    if n < 3 or r < 0:
        raise ValueError("need n >= 3 and r >= 0")
    ctx = fr.Ring(n)
    grouping = make_grouping(ctx, use_cyclic_classes, use_color_symmetry)
    extra = iter(()) if use_cyclic_classes else _cyclicity_rows(grouping, n)
    return _build(ctx, r, grouping, budget, reduce_implied, include_single=not use_cyclic_classes,
                  anchored=use_cyclic_classes, extra_rows=extra)


def build_segment_lp(k: int, r: int, use_color_symmetry: bool = False, budget: fr.Budget = fr.FULL,
                     *, reduce_implied: bool = True) -> RationalLP:
    """LP for the best success probability of a k-node segment coloring non-signaling beyond r."""
    if k < 2 or r < 0:
        raise ValueError("need k >= 2 and r >= 0")
    ctx = fr.Segment(k)
    grouping = make_grouping(ctx, False, use_color_symmetry)
    return _build(ctx, r, grouping, budget, reduce_implied, include_single=True, anchored=False)


def coloring_distribution(lp: RationalLP, primal: dict[int, Fraction]) -> dict[tuple[int, ...], Fraction]:
    """Expand a primal solution of a built LP into probabilities of individual colorings."""
    grouping: Grouping = lp.meta["grouping"]
    size = grouping.context.size
    out: dict[tuple[int, ...], Fraction] = {}
    members = np.argsort(grouping.group_of, kind="stable")
    starts = np.searchsorted(grouping.group_of[members], np.arange(grouping.n_groups))
    for g, v in sorted(primal.items()):
        if v == 0:
            continue
        lo = starts[g]
        hi = lo + grouping.sizes[g]
        for code in members[lo:hi]:
            out[unpack_one(int(code), size)] = v
    return out
