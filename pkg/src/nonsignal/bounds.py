"""Pairwise-bias witnesses, improper penalties and the resulting success bounds.

A bias witness is a pair of distributions ``(p, p')`` over node distances
(ring) or non-adjacent node pairs (segment) such that ``(p - p') . beta >=
delta`` on every proper coloring. Non-signaling forces the expectation of
``(p - p') . beta`` to vanish, so error mass must make up for ``delta``; the
worst improper value ``-gamma`` says how cheaply it can.
"""

from __future__ import annotations

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Mapping, Sequence

import numpy as np

from . import frames as fr
from .lp.model import Certificate, RationalLP
from .lp.presolve import solve_via_presolve
from .lp.verify import verify_certificate
from .ring_model import (
    beta_ring_counts,
    beta_segment_bits,
    distinct_beta_array,
    proper_ring_array,
    proper_segment_array,
    segment_pairs,
)

log = logging.getLogger(__name__)


@dataclass
class BiasWitness:
    """``support`` lists distances (ring) or (u, v) pairs (segment) indexing ``p`` and ``p_prime``."""

    context: fr.Context
    support: list
    p: list[Fraction]
    p_prime: list[Fraction]
    delta: Fraction
    gamma: Fraction | None = None
    certificate: Certificate | None = field(default=None, repr=False)

    def __post_init__(self) -> None:
        if len(self.p) != len(self.support) or len(self.p_prime) != len(self.support):
            raise ValueError("p, p' and support must have equal length")
        for dist in (self.p, self.p_prime):
            if any(v < 0 for v in dist) or sum(dist) != 1:
                raise ValueError("p and p' must be probability distributions")
        if self.delta < 0:
            raise ValueError("delta must be >= 0")
        if self.delta > 0:
            overlap = [s for s, a, b in zip(self.support, self.p, self.p_prime) if a != 0 and b != 0]
            if overlap:
                # an optimum with delta > 0 never overlaps: cancelling common mass raises the bias
                raise ValueError(f"witness with delta > 0 has overlapping supports at {overlap}")

    @property
    def weights(self) -> list[Fraction]:
        return [a - b for a, b in zip(self.p, self.p_prime)]

    def to_json_dict(self) -> dict:
        from .rational import format_rational

        ctx = {"ring": self.context.n} if isinstance(self.context, fr.Ring) else {"segment": self.context.k}
        return {
            "context": ctx,
            "support": [list(s) if isinstance(s, tuple) else s for s in self.support],
            "p": [format_rational(v) for v in self.p],
            "p_prime": [format_rational(v) for v in self.p_prime],
            "delta": format_rational(self.delta),
            "gamma": None if self.gamma is None else format_rational(self.gamma),
        }

    @classmethod
    def from_json_dict(cls, data: dict) -> "BiasWitness":
        from .rational import parse_rational

        ctx_d = data["context"]
        if "ring" in ctx_d:
            ctx: fr.Context = fr.Ring(int(ctx_d["ring"]))
            support = [int(s) for s in data["support"]]
        else:
            ctx = fr.Segment(int(ctx_d["segment"]))
            support = [tuple(int(x) for x in s) for s in data["support"]]
        gamma = data.get("gamma")
        return cls(
            ctx,
            support,
            [parse_rational(v) for v in data["p"]],
            [parse_rational(v) for v in data["p_prime"]],
            parse_rational(data["delta"]),
            None if gamma is None else parse_rational(gamma),
        )


@dataclass(frozen=True)
class ErrorBound:
    epsilon_lower: Fraction
    success_upper: Fraction

    def __post_init__(self) -> None:
        if self.epsilon_lower + self.success_upper != 1:
            raise ValueError("success_upper must equal 1 - epsilon_lower")
        if not (0 <= self.epsilon_lower <= 1):
            raise ValueError("bounds must lie in [0, 1]")


# ---------------------------------------------------------------------------
# bias LPs


def ring_support(n: int) -> list[int]:
    """Halved distance support 2..floor(n/2)."""
    return list(range(2, n // 2 + 1))


def _bias_lp(beta_rows: np.ndarray, beta_den: int, labels: Sequence[str]) -> RationalLP:
    """max delta s.t. (p - p').beta_i - delta - slack_i = 0, sum p = sum p' = 1, all >= 0."""
    m = len(labels)
    n_rows = beta_rows.shape[0]
    variables = [f"p[{s}]" for s in labels] + [f"p'[{s}]" for s in labels] + ["delta"]
    variables += [f"slack[{i}]" for i in range(n_rows)]
    delta_col = 2 * m
    rows = []
    for i in range(n_rows):
        terms: dict[int, Fraction] = {}
        for j in range(m):
            v = int(beta_rows[i, j])
            if v:
                terms[j] = Fraction(v, beta_den)
                terms[m + j] = Fraction(-v, beta_den)
        terms[delta_col] = Fraction(-1)
        terms[delta_col + 1 + i] = Fraction(-1)
        rows.append((terms, Fraction(0)))
    rows.append(({j: 1 for j in range(m)}, Fraction(1)))
    rows.append(({m + j: 1 for j in range(m)}, Fraction(1)))
    return RationalLP.from_rows(variables, {delta_col: 1}, rows, normalization_row=n_rows)


def _witness_from_certificate(ctx: fr.Context, support: list, cert: Certificate) -> BiasWitness:
    m = len(support)
    x = cert.primal
    p = [x.get(j, Fraction(0)) for j in range(m)]
    pp = [x.get(m + j, Fraction(0)) for j in range(m)]
    return BiasWitness(ctx, support, p, pp, cert.objective_value, None, cert)


def bias_lp_ring_model(n: int) -> tuple[RationalLP, list[int]]:
    if n < 5:
        raise ValueError("ring bias LP needs n >= 5")
    support = ring_support(n)
    full = distinct_beta_array(n, proper_only=True)  # columns d = 2..n-2
    rows = np.unique(full[:, [d - 2 for d in support]], axis=0)
    return _bias_lp(rows, n, [str(d) for d in support]), support


def bias_lp_ring(n: int) -> BiasWitness:
    """Largest bias delta over distances 2..floor(n/2) on proper n-ring colorings."""
    lp, support = bias_lp_ring_model(n)
    cert = solve_via_presolve(lp)
    return _witness_from_certificate(fr.Ring(n), support, cert)


def bias_lp_segment_model(k: int) -> tuple[RationalLP, list[tuple[int, int]]]:
    if k < 4:
        raise ValueError("segment bias LP needs k >= 4")
    support = segment_pairs(k)
    rows = distinct_beta_array(k=k, proper_only=True)
    return _bias_lp(rows, 1, [f"{u},{v}" for u, v in support]), support


def bias_lp_segment(k: int) -> BiasWitness:
    """Largest bias delta over non-adjacent pairs on proper k-segment colorings."""
    lp, support = bias_lp_segment_model(k)
    cert = solve_via_presolve(lp)
    return _witness_from_certificate(fr.Segment(k), support, cert)


# ---------------------------------------------------------------------------
# brute-force statistics over colorings


SCAN_BUDGET = 1 << 25  # int64 feature entries held at once by the brute-force scan


def _decode_chunk(start: int, stop: int, length: int) -> np.ndarray:
    codes = np.arange(start, stop, dtype=np.int64)
    out = np.empty((codes.size, length), dtype=np.int8)
    for pos in range(length - 1, -1, -1):
        out[:, pos] = codes % 3
        codes //= 3
    return out


def _min_over_colorings(
    ctx: fr.Context, support: Sequence, weights: Sequence[Fraction], *, proper: bool,
    colorings: np.ndarray | None = None, threads: int = 1, chunk: int | None = None,
) -> tuple[Fraction, tuple[int, ...] | None]:
    """Exact min of weights . beta over proper (or improper) colorings, with the first minimizer.

    Weights are brought to a common denominator; when the integer range
    could overflow int64 the scan runs in float64 and the near-minimal
    colorings are re-evaluated exactly. The default chunk keeps about
    ``SCAN_BUDGET`` feature entries in flight across all threads; the result
    does not depend on the chunking.
    """
    active = [(s, w) for s, w in zip(support, weights) if w != 0]
    size = ctx.size
    if not active:
        return Fraction(0), None
    if chunk is None:
        chunk = max(1 << 12, SCAN_BUDGET // (threads * len(active)))
    L = 1
    for _, w in active:
        L = math.lcm(L, w.denominator)
    iw = [int(w * L) for _, w in active]
    scale = size if isinstance(ctx, fr.Ring) else 1
    bound = sum(abs(v) for v in iw) * scale
    use_int = bound < 2**62

    def features(block: np.ndarray) -> np.ndarray:
        if isinstance(ctx, fr.Ring):
            return beta_ring_counts(block, [s for s, _ in active])
        return beta_segment_bits(block, [s for s, _ in active])

    def mask(block: np.ndarray) -> np.ndarray:
        if isinstance(ctx, fr.Ring):
            ok = np.all(block != np.roll(block, -1, axis=1), axis=1)
        else:
            ok = np.all(block[:, 1:] != block[:, :-1], axis=1)
        return ok if proper else ~ok

    def exact_value(row: np.ndarray) -> Fraction:
        feats = features(row[None, :])[0]
        return Fraction(sum(int(f) * v for f, v in zip(feats, iw)), L * scale)

    def scan(block: np.ndarray, offset: int):
        block = block[mask(block)]
        if block.shape[0] == 0:
            return None
        feats = features(block)
        if use_int:
            vals = feats.astype(np.int64) @ np.asarray(iw, dtype=np.int64)
            i = int(np.argmin(vals))
            return Fraction(int(vals[i]), L * scale), block[i]
        fw = np.asarray([float(Fraction(v, L)) for v in iw])
        vals = feats.astype(np.float64) @ fw
        lo = vals.min()
        tol = 1e-9 * max(1.0, float(np.abs(fw).sum()))
        best = None
        for i in np.flatnonzero(vals <= lo + tol):
            v = exact_value(block[i])
            if best is None or v < best[0]:
                best = (v, block[i])
        return best

    if colorings is not None:
        blocks = [(colorings, 0)]
        results = [scan(colorings, 0)]
    else:
        total = 3**size
        starts = list(range(0, total, chunk))

        def work(start: int):
            return scan(_decode_chunk(start, min(start + chunk, total), size), start)

        if threads > 1:
            with ThreadPoolExecutor(max_workers=threads) as pool:
                results = list(pool.map(work, starts))
        else:
            results = [work(s) for s in starts]
    best = None
    for res in results:  # chunk order, strict improvement only: thread-count invariant
        if res is not None and (best is None or res[0] < best[0]):
            best = res
    if best is None:
        return Fraction(0), None
    return best[0], tuple(int(c) for c in best[1])


def min_bias_over_proper(witness: BiasWitness) -> Fraction:
    """Brute-force min of (p - p') . beta over proper colorings (independent of any LP)."""
    ctx = witness.context
    colorings = proper_ring_array(ctx.n) if isinstance(ctx, fr.Ring) else proper_segment_array(ctx.k)
    value, _ = _min_over_colorings(ctx, witness.support, witness.weights, proper=True, colorings=colorings)
    return value


def gamma(witness: BiasWitness, *, threads: int = 1) -> Fraction:
    """Gamma = -min of (p - p') . beta over improper colorings (0 if that min is positive)."""
    value, _ = _min_over_colorings(witness.context, witness.support, witness.weights, proper=False,
                                   threads=threads)
    return max(Fraction(0), -value)


def error_lower_bound(delta: Fraction, gamma_: Fraction) -> ErrorBound:
    delta, gamma_ = Fraction(delta), Fraction(gamma_)
    if delta < 0:
        raise ValueError("delta must be >= 0")
    if not 0 <= gamma_ <= 1:
        raise ValueError("gamma must lie in [0, 1]")
    if delta == 0:
        return ErrorBound(Fraction(0), Fraction(1))
    eps = delta / (delta + gamma_)
    return ErrorBound(eps, 1 - eps)


def compose_exponential(q: Fraction, k: int, r: int, n: int) -> Fraction:
    """Success bound q ** floor(n / (k + r)) for the whole ring from a k-segment bound q."""
    q = Fraction(q)
    if not 0 <= q <= 1:
        raise ValueError("q must lie in [0, 1]")
    if k < 2 or r < 0 or n < 1:
        raise ValueError("need k >= 2, r >= 0, n >= 1")
    return q ** (n // (k + r))


# ---------------------------------------------------------------------------
# Experiments 1 and 2 on the 11-ring


EXPERIMENT_SUPPORT = [2, 3, 4, 5]
EXPERIMENT_P = [Fraction(30, 41), Fraction(11, 41), Fraction(0), Fraction(0)]
EXPERIMENT_P_PRIME = [Fraction(0), Fraction(0), Fraction(14, 41), Fraction(27, 41)]
EXPERIMENT_MIN_BIAS = Fraction(1, 451)


def experiment_witness() -> BiasWitness:
    return BiasWitness(fr.Ring(11), list(EXPERIMENT_SUPPORT), list(EXPERIMENT_P), list(EXPERIMENT_P_PRIME),
                       EXPERIMENT_MIN_BIAS)


@dataclass
class ExperimentsReport:
    min_bias: Fraction
    per_coloring_check: bool
    colorings_scanned: int
    argmin: tuple[int, ...]


def experiment_bias(colors: Sequence[int]) -> Fraction:
    """P[Experiment 1 matches] - P[Experiment 2 matches] on one 11-ring coloring."""
    n = len(colors)
    total = Fraction(0)
    for d, a, b in zip(EXPERIMENT_SUPPORT, EXPERIMENT_P, EXPERIMENT_P_PRIME):
        matches = sum(colors[v] == colors[(v + d) % n] for v in range(n))
        total += (a - b) * Fraction(matches, n)
    return total


def experiments11() -> ExperimentsReport:
    colorings = proper_ring_array(11)
    counts = beta_ring_counts(colorings, EXPERIMENT_SUPPORT).astype(np.int64)
    w = np.array([30, 11, -14, -27], dtype=np.int64)  # 41 * (p - p')
    vals = counts @ w  # = 451 * (p - p') . beta
    i = int(np.argmin(vals))
    min_bias = Fraction(int(vals[i]), 41 * 11)
    return ExperimentsReport(
        min_bias=min_bias,
        per_coloring_check=bool(np.all(vals >= 1)),
        colorings_scanned=int(colorings.shape[0]),
        argmin=tuple(int(c) for c in colorings[i]),
    )


# ---------------------------------------------------------------------------
# n = 4 independent colorings


@dataclass
class N4ScanReport:
    grid_resolution: int
    points: int
    all_violated: bool
    worst_value: Fraction  # max over points of min_rho q(rho); negative means every point is violated
    worst_point: tuple[Fraction, Fraction, Fraction]


def forced_pair_probability(r: Fraction) -> Fraction:
    """Forced probability of the alternating pattern on the two colors other than rho."""
    r = Fraction(r)
    return r * r - 2 * r + Fraction(1, 2)


def n4_infeasibility_scan(grid_resolution: int = 1000, *, threads: int = 1) -> N4ScanReport:
    """Evaluate min_rho q(rho) at every point of the barycentric grid with the given denominator."""
    N = int(grid_resolution)
    if N < 2:
        raise ValueError("grid_resolution must be >= 2")
    # 2 N^2 q(i/N) = 2 i^2 - 4 i N + N^2, exact in int64 for any practical N
    i = np.arange(N + 1, dtype=np.int64)
    q2 = 2 * i * i - 4 * i * N + N * N  # decreasing in i on [0, N]

    def row(a: int):
        b = np.arange(N - a + 1, dtype=np.int64)
        c = N - a - b
        worst_per_point = np.minimum(np.minimum(q2[a], q2[b]), q2[c])
        j = int(np.argmax(worst_per_point))
        return int(worst_per_point.max()), (a, int(b[j]), int(c[j])), bool(np.all(worst_per_point < 0))

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            rows = list(pool.map(row, range(N + 1)))
    else:
        rows = [row(a) for a in range(N + 1)]
    best_val, best_pt, all_neg = None, None, True
    for val, pt, neg in rows:
        all_neg &= neg
        if best_val is None or val > best_val:
            best_val, best_pt = val, pt
    return N4ScanReport(
        grid_resolution=N,
        points=(N + 1) * (N + 2) // 2,
        all_violated=all_neg,
        worst_value=Fraction(best_val, 2 * N * N),
        worst_point=tuple(Fraction(x, N) for x in best_pt),
    )


# ---------------------------------------------------------------------------
# ring -> segment restriction


def restrict_ring_to_segment(
    ring_distribution: Mapping[tuple[int, ...], Fraction], k: int, r: int, *, check: bool = True,
    budget: fr.Budget = fr.FULL,
) -> dict[tuple[int, ...], Fraction]:
    """Marginal of a ring-coloring distribution on nodes 0..k-1 (segment nodes 1..k).

    With ``check`` the result is tested against every segment non-signaling
    row admitted by ``budget``, directly from the definition; a violation
    raises ValueError (the input ring distribution was not non-signaling).
    """
    if not ring_distribution:
        raise ValueError("empty distribution")
    n = len(next(iter(ring_distribution)))
    if k > n - r:
        raise ValueError(f"segment of {k} nodes does not fit: need k <= n - r = {n - r}")
    if k < 1:
        raise ValueError("k must be >= 1")
    out: dict[tuple[int, ...], Fraction] = {}
    for phi, prob in ring_distribution.items():
        if prob:
            key = tuple(phi[:k])
            out[key] = out.get(key, Fraction(0)) + prob
    out = dict(sorted(out.items()))
    if check:
        gap, where = nonsignaling_violation(out, fr.Segment(k), r, budget)
        if gap:
            raise ValueError(f"restriction is not non-signaling beyond {r}: gap {gap} at {where}")
    return out


def success_probability(distribution: Mapping[tuple[int, ...], Fraction], context: fr.Context) -> Fraction:
    from .ring_model import is_proper_ring, is_proper_segment

    check = is_proper_ring if isinstance(context, fr.Ring) else is_proper_segment
    return sum((p for c, p in distribution.items() if check(c)), Fraction(0))


def nonsignaling_violation(
    distribution: Mapping[tuple[int, ...], Fraction], context: fr.Context, r: int,
    budget: fr.Budget = fr.FULL,
) -> tuple[Fraction, str | None]:
    """Largest |marginal difference| over every placement pair, computed directly from the definition.

    Every placement of every placable collection is compared against the
    canonical one, with no implied-row shortcuts. Returns ``(0, None)`` for a
    non-signaling distribution, else the worst gap and a description.
    """
    items = [(np.asarray(c, dtype=np.int8), p) for c, p in distribution.items() if p]
    if not items:
        return Fraction(0), None
    colorings = np.stack([c for c, _ in items])
    probs = [p for _, p in items]
    L = 1
    for p in probs:
        L = math.lcm(L, p.denominator)
    weights = np.array([int(p * L) for p in probs], dtype=object)
    worst, where = Fraction(0), None
    for F in fr.frame_collections(context, r, budget):
        if isinstance(context, fr.Ring):
            placements = [p.offsets for p in fr.placements_ring(F, r, context.n)]
        else:
            placements = [p.offsets for p in fr.placements_segment(F, r, context.k)]
        if len(placements) < 2:
            continue
        anchor = fr.canonical_placement(F, r, context)

        def marginal(omega):
            keys = fr.tableau_keys(colorings, fr.frame_nodes(F, omega, context))
            acc: dict[int, int] = {}
            for key, w in zip(keys.tolist(), weights):
                acc[key] = acc.get(key, 0) + w
            return acc

        base = marginal(anchor)
        for omega in placements:
            if omega == anchor:
                continue
            other = marginal(omega)
            for key in set(base) | set(other):
                gap = abs(Fraction(base.get(key, 0) - other.get(key, 0), L))
                if gap > worst:
                    worst, where = gap, f"F={F} omega={omega} vs {anchor} tableau-code={key}"
    return worst, where


def verify_witness(witness: BiasWitness) -> bool:
    """Brute-force re-check that min over proper colorings of (p - p').beta equals delta."""
    return min_bias_over_proper(witness) == witness.delta


def certificate_ok(lp: RationalLP, cert: Certificate) -> bool:
    return bool(verify_certificate(lp, cert))


# ---------------------------------------------------------------------------
# figure data


BIAS_SIZES = range(11, 23)
BIAS_GAMMA_MAX = 14
WITNESS_SIZES = (13, 14, 15, 20, 21, 22)


def _csv_rational(x: Fraction | None) -> list[str]:
    from .rational import format_rational

    if x is None:
        return ["", ""]
    return [format_rational(x), repr(float(x))]


def _write_rows(path: str, header: list[str], rows: list[list[str]]) -> None:
    import csv

    with open(path, "w", newline="") as fh:
        out = csv.writer(fh, lineterminator="\n")
        out.writerow(header)
        out.writerows(rows)


def write_bias_vs_n(path: str, sizes: Sequence[int] = BIAS_SIZES, gamma_max: int = BIAS_GAMMA_MAX,
                    *, threads: int = 1) -> list[BiasWitness]:
    """Delta and the error lower bound per ring size; Gamma is brute-forced up to ``gamma_max``, else taken as 1."""
    rows, witnesses = [], []
    for n in sizes:
        w = bias_lp_ring(n)
        if w.delta > 0 and n <= gamma_max:
            w.gamma = gamma(w, threads=threads)
            source = "brute-force"
        else:
            source = "bound-1"
        bound = error_lower_bound(w.delta, w.gamma if w.gamma is not None else Fraction(1))
        rows.append([str(n)] + _csv_rational(w.delta) + _csv_rational(w.gamma)
                    + _csv_rational(bound.epsilon_lower) + [source])
        witnesses.append(w)
    _write_rows(path, ["n", "delta", "delta_float", "gamma", "gamma_float", "error_lower", "error_lower_float",
                       "gamma_source"], rows)
    return witnesses


def write_witness_ring(path: str, witness: BiasWitness) -> None:
    rows = [[str(d)] + _csv_rational(a) + _csv_rational(b)
            for d, a, b in zip(witness.support, witness.p, witness.p_prime)]
    _write_rows(path, ["d", "p", "p_float", "p_prime", "p_prime_float"], rows)


def write_witness_grid(path: str, witness: BiasWitness) -> None:
    rows = [[str(u), str(v)] + _csv_rational(a) + _csv_rational(b)
            for (u, v), a, b in zip(witness.support, witness.p, witness.p_prime)]
    _write_rows(path, ["u", "v", "p", "p_float", "p_prime", "p_prime_float"], rows)
