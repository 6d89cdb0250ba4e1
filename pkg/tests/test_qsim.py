import json
from functools import reduce

import numpy as np
import pytest

from nonsignal import qsim


def _dense_run(spec, rounds):
    """Same protocol with explicit 2**(n(w+m)) matrices, as an oracle."""
    n, D = spec.n, spec.dim
    W, M = 2**spec.w, 2**spec.m
    big = reduce(np.kron, [spec.U] * n)
    V = np.zeros((D**n, D**n))
    for idx in range(D**n):
        digits = np.unravel_index(idx, (D,) * n)
        ws = [d // M for d in digits]
        ms = [d % M for d in digits]
        out = [ws[j] * M + ms[(j - 1) % n] for j in range(n)]
        V[np.ravel_multi_index(out, (D,) * n), idx] = 1
    psi = np.zeros(D**n, dtype=complex)
    psi[0] = 1
    for _ in range(rounds):
        psi = V @ (big @ psi)
    P = (np.abs(psi) ** 2).reshape((D,) * n)
    colors = np.zeros((3,) * n)
    for idx in np.ndindex(*P.shape):
        colors[tuple(spec.color_map[i] for i in idx)] += P[idx]
    return colors


@pytest.mark.parametrize("n, w, m, r", [(3, 1, 1, 1), (4, 1, 1, 1), (3, 0, 2, 2), (2, 2, 1, 1), (3, 1, 1, 0)])
def test_run_protocol_matches_dense_oracle(n, w, m, r):
    spec = qsim.random_protocol(n, r, w, m, seed=7)
    got = qsim.run_protocol(spec).as_array()
    assert np.abs(got - _dense_run(spec, r)).max() < 1e-12


def test_iid_example():
    H = np.array([[1, 1], [1, -1]]) / np.sqrt(2)
    spec = qsim.ProtocolSpec(3, 1, 1, 0, H, [0, 1])
    dist = qsim.run_protocol(spec)
    assert dist.probabilities[(0, 0, 0)] == pytest.approx(0.125, abs=1e-15)
    assert dist.probabilities[(2, 2, 2)] == 0


@pytest.mark.parametrize("seed", range(5))
@pytest.mark.parametrize("n", [3, 4, 5])
def test_one_round_protocols_are_independent(n, seed):
    dist = qsim.run_protocol(qsim.random_protocol(n, 1, 1, 1, seed))
    assert qsim.check_cyclicity(dist, 1e-12)
    rep = qsim.check_independence(dist, r=1)
    assert rep.passed(1e-9) and rep.collections_checked > 0 and rep.placements_checked >= rep.collections_checked


@pytest.mark.parametrize("n", [4, 5])
def test_signaling_control_fails(n):
    rep = qsim.signaling_control(n, seed=0)
    assert rep.max_deviation > 1e-3 and not rep.passed(1e-9)
    assert rep.worst is not None


def test_spec_validation():
    with pytest.raises(ValueError, match="unitary"):
        qsim.ProtocolSpec(3, 1, 1, 0, np.array([[1, 1], [0, 1]]), [0, 1])
    with pytest.raises(ValueError, match="qubit guard"):
        qsim.ProtocolSpec(13, 1, 1, 1, np.eye(4), [0] * 4)
    with pytest.raises(ValueError, match="color_map"):
        qsim.ProtocolSpec(3, 1, 1, 0, np.eye(2), [0, 3])
    with pytest.raises(ValueError, match="must be"):
        qsim.ProtocolSpec(3, 1, 1, 1, np.eye(2), [0, 1])


def test_spec_json_roundtrip(tmp_path):
    spec = qsim.random_protocol(3, 1, 1, 1, seed=3)
    path = tmp_path / "spec.json"
    spec.save(path)
    back = qsim.ProtocolSpec.load(path)
    assert np.array_equal(back.U, spec.U) and back.color_map == spec.color_map
    flat = spec.to_json_dict()
    flat["U"] = [z for row in flat["U"] for z in row]
    assert np.array_equal(qsim.ProtocolSpec.from_json_dict(flat).U, spec.U)
    json.dumps(flat)


def test_output_distribution_checks(tmp_path):
    with pytest.raises(ValueError, match="sum"):
        qsim.OutputDistribution(1, {(0,): 0.5, (1,): 0.4, (2,): 0.0})
    with pytest.raises(ValueError, match="negative"):
        qsim.OutputDistribution(1, {(0,): 1.1, (1,): -0.1, (2,): 0.0})
    d = qsim.OutputDistribution(1, {(0,): 1.0, (1,): -1e-16, (2,): 0.0})
    assert d.probabilities[(1,)] == 0.0
    path = tmp_path / "d.csv"
    d.write_csv(path)
    assert path.read_text().splitlines() == ["coloring,probability", "0,1.0", "1,0.0", "2,0.0"]


def test_random_unitary_is_deterministic():
    a = qsim.random_unitary(8, 11)
    assert np.array_equal(a, qsim.random_unitary(8, 11))
    assert np.abs(a.conj().T @ a - np.eye(8)).max() < 1e-12
