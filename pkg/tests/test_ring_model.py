import itertools
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from nonsignal.ring_model import (
    BetaVectorRing,
    Coloring,
    SegmentColoring,
    all_colorings,
    beta_ring,
    beta_ring_counts,
    beta_segment,
    count_colorings,
    count_colorings_recurrence,
    cyclic_classes,
    distinct_beta_array,
    distinct_beta_set,
    enumerate_proper_ring,
    enumerate_proper_segment,
    is_proper_ring,
    is_proper_segment,
    pack,
    pack_one,
    proper_ring_array,
    proper_ring_mask,
    proper_segment_array,
    segment_pairs,
    uniform_same_color_prob,
    unpack_one,
    write_beta_csv,
)


def proper_strings(nodes):
    """Oracle: grow colorings node by node, never repeating the previous color."""
    out = [(c,) for c in range(3)]
    for _ in range(nodes - 1):
        out = [s + (c,) for s in out for c in range(3) if c != s[-1]]
    return out


@pytest.mark.parametrize("l, expected", [(0, (3, 0)), (1, (0, 6)), (4, (18, 30)), (11, (2046, 4098))])
def test_count_frozen(l, expected):
    assert count_colorings(l) == expected


@pytest.mark.parametrize("l", range(0, 15))
def test_count_matches_enumeration(l):
    strings = proper_strings(l + 1)
    a = sum(s[0] == s[-1] for s in strings)
    assert count_colorings(l) == (a, len(strings) - a)
    assert count_colorings_recurrence(l) == (a, len(strings) - a)


def test_count_rejects_negative():
    with pytest.raises(ValueError):
        count_colorings(-1)


def test_properness_examples():
    assert is_proper_ring((0, 1, 0, 1))
    assert not is_proper_ring((0, 1, 2, 0))
    assert is_proper_segment((0, 1, 0))
    assert not is_proper_segment((0, 0, 1))
    assert is_proper_ring(Coloring.of((0, 1, 2)))
    assert is_proper_segment(SegmentColoring.of((2, 1)))


def test_coloring_validation():
    with pytest.raises(ValueError):
        Coloring.of((0, 1, 3))
    with pytest.raises(ValueError):
        Coloring.of((0, 1))
    with pytest.raises(ValueError):
        SegmentColoring.of(())


@pytest.mark.parametrize("n", range(3, 15))
def test_enumerate_proper_ring_counts(n):
    arr = proper_ring_array(n)
    assert arr.shape == (count_colorings(n)[0], n)
    assert len(np.unique(pack(arr))) == arr.shape[0]
    assert proper_ring_mask(arr).all()


@pytest.mark.parametrize("n", range(3, 10))
def test_enumerate_proper_ring_matches_brute_force(n):
    brute = {c for c in itertools.product(range(3), repeat=n) if is_proper_ring(c)}
    got = [c.colors for c in enumerate_proper_ring(n)]
    assert len(got) == len(brute) and set(got) == brute
    assert got == [c.colors for c in enumerate_proper_ring(n)]  # deterministic order


def test_enumerate_proper_ring_rejects_small():
    with pytest.raises(ValueError):
        list(enumerate_proper_ring(2))


@pytest.mark.parametrize("k", [1, 2, 5, 9, 10])
def test_enumerate_proper_segment(k):
    got = [c.colors for c in enumerate_proper_segment(k)]
    assert len(got) == 3 * 2 ** (k - 1)
    assert set(got) == set(proper_strings(k))


def test_segment_k15_count():
    assert proper_segment_array(15).shape == (49152, 15)


def test_pack_roundtrip():
    arr = all_colorings(4)
    assert list(pack(arr)) == list(range(81))
    for code in (0, 5, 80):
        assert pack_one(unpack_one(code, 4)) == code


def test_uniform_prob_examples():
    assert uniform_same_color_prob(4, 2) == Fraction(2, 3)
    assert all(uniform_same_color_prob(n, 1) == 0 for n in range(3, 12))
    values = [uniform_same_color_prob(11, d) for d in range(1, 6)]
    assert len(set(values)) == 5


@pytest.mark.parametrize("n", range(3, 13))
def test_uniform_prob_brute_force(n):
    colorings = all_colorings(n)
    proper = colorings[np.all(colorings != np.roll(colorings, -1, axis=1), axis=1)]
    for d in range(1, n):
        freq = Fraction(int(np.sum(proper[:, 0] == proper[:, d])), proper.shape[0])
        assert uniform_same_color_prob(n, d) == freq


def test_beta_examples():
    b = beta_ring((0, 1, 0, 1, 0, 1))
    assert (b[2], b[3], b[4]) == (1, 0, 1)
    assert all(v == 1 for v in beta_ring((0,) * 6).entries().values())
    s = beta_segment((0, 1, 0, 2))
    assert (s[(1, 3)], s[(1, 4)], s[(2, 4)]) == (1, 0, 0)
    assert segment_pairs(4) == [(1, 3), (1, 4), (2, 4)]


@settings(max_examples=200, deadline=None)
@given(st.integers(5, 12).flatmap(lambda n: st.lists(st.integers(0, 2), min_size=n, max_size=n)))
def test_beta_symmetry_and_grid(colors):
    n = len(colors)
    b = beta_ring(colors)
    for d in range(2, n - 1):
        assert b[d] == b[n - d]
        assert (b[d] * n).denominator == 1 and 0 <= b[d] <= 1
    if is_proper_ring(colors):
        row = beta_ring_counts(np.array([colors], dtype=np.int8), [1])
        assert row[0, 0] == 0


def test_beta_vector_validation():
    with pytest.raises(ValueError):
        BetaVectorRing(6, (1, 2))


@pytest.mark.parametrize("n, expected", [(11, 21), (16, 410)])
def test_distinct_beta_counts(n, expected):
    assert len(distinct_beta_set(n, proper_only=True)) == expected


def test_distinct_beta_sorted_and_cached(tmp_path, monkeypatch):
    monkeypatch.setenv("NONSIGNAL_CACHE_DIR", str(tmp_path))
    a = distinct_beta_array(9, proper_only=True)
    assert list(tmp_path.iterdir())
    b = distinct_beta_array(9, proper_only=True)
    assert np.array_equal(a, b)
    assert [tuple(r) for r in a] == sorted(tuple(r) for r in a)


def test_write_beta_csv(tmp_path):
    path = tmp_path / "b.csv"
    assert write_beta_csv(path, 11) == 21
    lines = path.read_text().splitlines()
    assert lines[0] == ",".join(f"d={d}" for d in range(2, 10))
    assert all("/" in x or x in ("0", "1") for x in lines[1].split(","))


def test_cyclic_classes_small():
    t = cyclic_classes(3)
    assert len(t) == 11
    assert sorted(t.sizes) == [1, 1, 1] + [3] * 8
    assert cyclic_classes(4).sizes[:1].tolist() == [1]


def test_cyclic_classes_n11_burnside():
    assert len(cyclic_classes(11)) == (3**11 + 10 * 3) // 11


@pytest.mark.parametrize("n", range(3, 10))
def test_cyclic_class_invariants(n):
    t = cyclic_classes(n)
    assert int(np.sum(t.sizes)) == 3**n
    assert all(n % int(s) == 0 for s in t.sizes)
    colorings = all_colorings(n)
    proper = proper_ring_mask(colorings)
    assert np.array_equal(proper, t.proper[t.class_of])
    for i in range(len(t)):
        rep = t.representative(i)
        rotations = [rep[j:] + rep[:j] for j in range(n)]
        assert rep == min(rotations)
