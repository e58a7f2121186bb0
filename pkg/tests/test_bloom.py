import math
import random

import pytest
from hypothesis import given, settings, strategies as st

from osr.bloom import (
    BloomFilter,
    analytic_fp_rate,
    encode_path,
    filter_length_for,
    hash_indices,
    monte_carlo_fp,
    query,
    space_saving,
    standard_error,
)

node_ids = st.integers(1, 0xFFFF)
paths = st.lists(node_ids, min_size=1, max_size=70, unique=True)


@pytest.mark.parametrize("hops, cap, bits", [(20, 40, 160), (50, 40, 320), (1, 16, 8), (40, 40, 320)])
def test_filter_length(hops, cap, bits):
    assert filter_length_for(hops, cap) == bits


def test_filter_length_rejects_empty_route():
    with pytest.raises(ValueError):
        filter_length_for(0, 16)


def test_hash_indices_bad_args():
    with pytest.raises(ValueError):
        hash_indices(1, 3, 0)
    with pytest.raises(ValueError):
        hash_indices(1, 4, 64)
    with pytest.raises(ValueError):
        hash_indices(1 << 16, 3, 64)


def test_empty_filter_rejects_everything():
    bf = BloomFilter(128)
    assert not any(query(bf, i) for i in range(1000))


def test_single_member():
    bf = encode_path([4242], 16)
    assert bf.m == 8
    assert 4242 in bf


def test_bits_are_msb_first():
    bf = BloomFilter(16)
    bf.bits[0] = 0x80
    bf.bits[1] = 0x01
    assert bf.set_positions() == [0, 15]


def test_add_sets_expected_positions():
    bf = BloomFilter(128)
    bf.add(300)
    assert bf.set_positions() == sorted(set(hash_indices(300, 3, 128)))


def test_serialisation_roundtrip():
    bf = encode_path([5, 9, 77, 1024], 16)
    raw = bf.to_bytes()
    assert raw[0] == 4 and len(raw) == 5
    assert BloomFilter.from_bytes(raw) == bf


@pytest.mark.parametrize("raw", [b"", b"\x00", b"\x03\x01"])
def test_from_bytes_rejects_bad_length(raw):
    with pytest.raises(ValueError):
        BloomFilter.from_bytes(raw)


def test_union_of_filters():
    a, b = encode_path([1, 2], 16), encode_path([3, 4], 16)
    assert (a | b) == encode_path([1, 2, 3, 4], 2)


@given(paths, st.integers(1, 40))
def test_no_false_negatives(path, cap):
    bf = encode_path(path, cap)
    assert all(n in bf for n in path)


@given(paths, st.randoms(use_true_random=False))
def test_order_invariant(path, rnd):
    shuffled = list(path)
    rnd.shuffle(shuffled)
    assert encode_path(path, 16) == encode_path(shuffled, 16)


def test_analytic_points():
    assert analytic_fp_rate(128, 3, 20) == pytest.approx(0.0529, abs=5e-4)
    assert analytic_fp_rate(64, 3, 0) == 0.0
    assert analytic_fp_rate(8, 3, 1) == pytest.approx((1 - (7 / 8) ** 3) ** 3)


@pytest.mark.parametrize("hops, cap, saving", [(20, 40, 0.5), (64, 40, 0.6875), (20, 16, 0.6)])
def test_space_saving(hops, cap, saving):
    assert space_saving(hops, cap) == pytest.approx(saving)


def test_monte_carlo_example_point():
    p = monte_carlo_fp(128, 20, queries=100_000, seed=11)
    assert p == pytest.approx(0.0529, abs=0.003)


def test_monte_carlo_deterministic():
    assert monte_carlo_fp(64, 10, queries=5000, seed=4) == monte_carlo_fp(64, 10, queries=5000, seed=4)


def test_no_children_matched_rate():
    """Three children that are not on the route match nothing with probability (1-p)^3."""
    rng = random.Random(9)
    m, n, trials = 128, 20, 20_000
    p = analytic_fp_rate(m, 3, n)
    empty = 0
    for _ in range(trials):
        ids = rng.sample(range(1, 1 << 16), n + 3)
        bf = encode_path(ids[:n], m // 8)
        empty += not any(c in bf for c in ids[n:])
    want = (1 - p) ** 3
    assert abs(empty / trials - want) < 3 * standard_error(want, trials) + 0.002


def test_standard_error():
    assert standard_error(0.5, 100) == pytest.approx(0.05)
    assert math.isclose(standard_error(0.0, 10), 0.0)
