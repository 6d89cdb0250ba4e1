"""Exact state-vector simulation of one-way quantum ring protocols.

Every node holds ``w`` workspace and ``m`` message qubits. A node's local
basis index is ``workspace * 2**m + message``, so the message register is
the low ``m`` bits. One round applies ``U`` at every node, then hands each
node's message register to its successor. After ``r`` rounds each node is
measured in the computational basis and ``color_map`` turns its local basis
index into a color.
"""

from __future__ import annotations

import csv
import itertools
import json
import os
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import frames as fr

MAX_QUBITS = 24
UNITARY_TOL = 1e-12
NORM_TOL = 1e-12


@dataclass
class ProtocolSpec:
    n: int
    r: int
    w: int
    m: int
    U: np.ndarray
    color_map: Sequence[int]

    def __post_init__(self) -> None:
        if self.n < 1 or self.r < 0 or self.w < 0 or self.m < 0:
            raise ValueError("need n >= 1 and r, w, m >= 0")
        if self.n * (self.w + self.m) > MAX_QUBITS:
            raise ValueError(f"n*(w+m) = {self.n * (self.w + self.m)} exceeds the {MAX_QUBITS}-qubit guard")
        D = self.dim
        self.U = np.asarray(self.U, dtype=np.complex128)
        if self.U.shape != (D, D):
            raise ValueError(f"U must be {D}x{D}, got {self.U.shape}")
        err = np.abs(self.U.conj().T @ self.U - np.eye(D)).max()
        if err > UNITARY_TOL:
            raise ValueError(f"U is not unitary: max |U^dag U - I| = {err:.3e}")
        cmap = [int(c) for c in self.color_map]
        if len(cmap) != D or any(c not in (0, 1, 2) for c in cmap):
            raise ValueError(f"color_map must assign a color in 0..2 to each of the {D} basis states")
        self.color_map = cmap

    @property
    def dim(self) -> int:
        return 2 ** (self.w + self.m)

    @classmethod
    def from_json_dict(cls, data: dict) -> "ProtocolSpec":
        raw = np.asarray(data["U"], dtype=np.float64)
        U = raw[..., 0] + 1j * raw[..., 1]
        D = 2 ** (int(data["w"]) + int(data["m"]))
        U = U.reshape(D, D)  # accepts nested rows or one flat row-major list
        return cls(int(data["n"]), int(data["r"]), int(data["w"]), int(data["m"]), U, data["color_map"])

    def to_json_dict(self) -> dict:
        return {
            "n": self.n, "r": self.r, "w": self.w, "m": self.m,
            "U": [[[float(z.real), float(z.imag)] for z in row] for row in self.U],
            "color_map": list(self.color_map),
        }

    @classmethod
    def load(cls, path: str | os.PathLike) -> "ProtocolSpec":
        with open(path) as fh:
            return cls.from_json_dict(json.load(fh))

    def save(self, path: str | os.PathLike) -> None:
        with open(path, "w") as fh:
            json.dump(self.to_json_dict(), fh, indent=1)
            fh.write("\n")


@dataclass
class OutputDistribution:
    n: int
    probabilities: dict[tuple[int, ...], float] = field(repr=False)

    def __post_init__(self) -> None:
        total = sum(self.probabilities.values())
        if abs(total - 1) > 1e-10:
            raise ValueError(f"probabilities sum to {total!r}, not 1")
        for key, p in self.probabilities.items():
            if p < -1e-14:
                raise ValueError(f"negative probability {p!r} for {key}")
            if p < 0:
                self.probabilities[key] = 0.0

    @classmethod
    def from_array(cls, P: np.ndarray) -> "OutputDistribution":
        n = P.ndim
        probs = {key: float(P[key]) for key in itertools.product(range(3), repeat=n)}
        return cls(n, probs)

    def as_array(self) -> np.ndarray:
        P = np.zeros((3,) * self.n)
        for key, p in self.probabilities.items():
            P[key] = p
        return P

    def write_csv(self, path: str | os.PathLike) -> None:
        with open(path, "w", newline="") as fh:
            out = csv.writer(fh, lineterminator="\n")
            out.writerow(["coloring", "probability"])
            for key in sorted(self.probabilities):
                out.writerow(["".join(map(str, key)), repr(self.probabilities[key])])


def random_unitary(dim: int, seed: int) -> np.ndarray:
    """Haar-distributed unitary: QR of a complex Gaussian matrix with the phase ambiguity fixed."""
    rng = np.random.default_rng(seed)
    Z = (rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))) / np.sqrt(2)
    Q, R = np.linalg.qr(Z)
    d = np.diag(R)
    return Q * (d / np.abs(d))


def random_protocol(n: int, r: int, w: int, m: int, seed: int) -> ProtocolSpec:
    """Random U; color = local basis index mod 3."""
    D = 2 ** (w + m)
    return ProtocolSpec(n, r, w, m, random_unitary(D, seed), [i % 3 for i in range(D)])


def _apply_local(state: np.ndarray, U: np.ndarray) -> np.ndarray:
    for axis in range(state.ndim):
        state = np.moveaxis(np.tensordot(U, state, axes=([1], [axis])), 0, axis)
    return state


def _send_messages(state: np.ndarray, n: int, W: int, M: int) -> np.ndarray:
    split = state.reshape((W, M) * n)
    perm = []
    for j in range(n):
        perm += [2 * j, 2 * ((j - 1) % n) + 1]  # node j now holds its predecessor's message
    return split.transpose(perm).reshape((W * M,) * n)


def run_protocol(spec: ProtocolSpec, *, messaging_rounds: int | None = None) -> OutputDistribution:
    """Output color distribution of ``(V U^{(x)n})^r |0...0>`` measured node by node.

    ``messaging_rounds`` overrides how many rounds actually run (it defaults to
    ``spec.r``); the signaling control uses it to run more rounds than declared.
    """
    n, D = spec.n, spec.dim
    W, M = 2**spec.w, 2**spec.m
    rounds = spec.r if messaging_rounds is None else messaging_rounds
    state = np.zeros((D,) * n, dtype=np.complex128)
    state[(0,) * n] = 1.0
    for _ in range(rounds):
        state = _apply_local(state, spec.U)
        state = _send_messages(state, n, W, M)
        norm = np.linalg.norm(state)
        if abs(norm - 1) > NORM_TOL * max(1, state.size) ** 0.5:
            raise RuntimeError(f"state norm drifted to {norm!r}")
    P = np.abs(state) ** 2
    onehot = np.zeros((D, 3))
    onehot[np.arange(D), spec.color_map] = 1.0
    for axis in range(n):
        P = np.moveaxis(np.tensordot(onehot, P, axes=([0], [axis])), 0, axis)
    return OutputDistribution.from_array(P)


def check_cyclicity(dist: OutputDistribution, tol: float) -> bool:
    P = dist.as_array()
    rotated = np.moveaxis(P, 0, -1)  # entry (c1..c_{n-1}, c0) = P(c0, c1, ...)
    return bool(np.abs(rotated - P).max() <= tol)


@dataclass
class IndependenceReport:
    max_deviation: float  # max of the two deviations below
    placement_deviation: float  # marginal vs the packed placement of the same F
    product_deviation: float  # marginal vs product of single-frame marginals
    collections_checked: int
    placements_checked: int
    worst: str | None

    def passed(self, tol: float) -> bool:
        return self.max_deviation <= tol


def _marginal(P: np.ndarray, nodes: Sequence[int]) -> np.ndarray:
    others = tuple(a for a in range(P.ndim) if a not in nodes)
    Q = P.sum(axis=others) if others else P
    kept = sorted(nodes)
    return np.transpose(Q, [kept.index(v) for v in nodes])


def check_independence(dist: OutputDistribution, r: int, tol: float = 1e-9,
                       budget: fr.Budget = fr.FULL) -> IndependenceReport:
    """Compare marginals on all gap-r placements against placement independence and factorization."""
    P = dist.as_array()
    ring = fr.Ring(dist.n)
    single: dict[int, np.ndarray] = {}
    dev_place = dev_prod = 0.0
    worst, n_F, n_omega = None, 0, 0
    for F in fr.frame_collections(ring, r, budget):
        n_F += 1
        product = np.ones(())
        for s in F.lengths:
            if s not in single:
                single[s] = _marginal(P, list(range(s)))
            product = np.multiply.outer(product, single[s])
        base = _marginal(P, fr.frame_nodes(F, fr.canonical_placement(F, r, ring), ring))
        for pl in fr.placements_ring(F, r, dist.n):
            n_omega += 1
            marg = _marginal(P, fr.frame_nodes(F, pl.offsets, ring))
            d1 = float(np.abs(marg - base).max())
            d2 = float(np.abs(marg - product).max())
            if max(d1, d2) > max(dev_place, dev_prod):
                worst = f"F={F} omega={pl.offsets}"
            dev_place, dev_prod = max(dev_place, d1), max(dev_prod, d2)
    return IndependenceReport(max(dev_place, dev_prod), dev_place, dev_prod, n_F, n_omega, worst)


def signaling_control(n: int, seed: int, w: int = 1, m: int = 1) -> IndependenceReport:
    """Two messaging rounds checked as if only one happened; expected to fail independence."""
    spec = random_protocol(n, 1, w, m, seed)
    return check_independence(run_protocol(spec, messaging_rounds=2), r=1)
