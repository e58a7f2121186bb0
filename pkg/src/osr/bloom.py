"""Adaptive path Bloom filters.

A downward source route is encoded as the OR of the per-node filters of every
node on the route. The filter length grows one byte per hop up to a cap of
``max_len`` bytes, so short routes are never longer than their raw encoding.

Wire layout: one length byte (filter size in bytes) followed by the bit array,
bit ``i`` stored in byte ``i // 8`` under mask ``0x80 >> (i % 8)``.
"""
import math

import numpy as np

from osr.hashing import NUM_HASHES, cached_indices, count_fp_hits

SINK_ID = 0
MAX_NODE_ID = 0xFFFF
RAW_ADDR_BYTES = 2


def _check_node_id(node_id):
    if not 0 <= node_id <= MAX_NODE_ID:
        raise ValueError(f"node id {node_id} is not a 16-bit short address")


def hash_indices(node_id, k, m):
    """Bit positions of ``node_id`` in an ``m``-bit filter using ``k`` hashes."""
    if m <= 0:
        raise ValueError("filter length must be positive")
    if k != NUM_HASHES:
        raise ValueError(f"only k={NUM_HASHES} hash functions are supported")
    _check_node_id(node_id)
    return list(cached_indices(node_id, m))


def filter_length_for(hops, max_len):
    """Filter length in bits for a route of ``hops`` hops, capped at ``max_len`` bytes."""
    if hops < 1:
        raise ValueError("a route has at least one hop")
    if max_len < 1:
        raise ValueError("max_len must be at least one byte")
    return 8 * min(hops, max_len)


class BloomFilter:
    __slots__ = ("m", "k", "bits")

    def __init__(self, m, k=NUM_HASHES, bits=None):
        if m <= 0 or m % 8:
            raise ValueError(f"filter length {m} must be a positive multiple of 8")
        if k != NUM_HASHES:
            raise ValueError(f"only k={NUM_HASHES} hash functions are supported")
        self.m = m
        self.k = k
        if bits is None:
            self.bits = bytearray(m // 8)
        else:
            if len(bits) != m // 8:
                raise ValueError("bit array does not match filter length")
            self.bits = bytearray(bits)

    @property
    def nbytes(self):
        return self.m // 8

    def add(self, node_id):
        _check_node_id(node_id)
        bits = self.bits
        for i in cached_indices(node_id, self.m):
            bits[i >> 3] |= 0x80 >> (i & 7)

    def __contains__(self, node_id):
        bits = self.bits
        for i in cached_indices(node_id, self.m):
            if not bits[i >> 3] & (0x80 >> (i & 7)):
                return False
        return True

    def __or__(self, other):
        if (self.m, self.k) != (other.m, other.k):
            raise ValueError("cannot combine filters of different shape")
        return BloomFilter(self.m, self.k, bytes(a | b for a, b in zip(self.bits, other.bits)))

    def __eq__(self, other):
        if not isinstance(other, BloomFilter):
            return NotImplemented
        return self.m == other.m and self.k == other.k and self.bits == other.bits

    def __hash__(self):
        return hash((self.m, self.k, bytes(self.bits)))

    def __repr__(self):
        return f"BloomFilter(m={self.m}, set={self.popcount()}, bits={bytes(self.bits).hex()})"

    def popcount(self):
        return sum(bin(b).count("1") for b in self.bits)

    def set_positions(self):
        return [i for i in range(self.m) if self.bits[i >> 3] & (0x80 >> (i & 7))]

    def to_bytes(self):
        """Serialise as ``[len-in-bytes][bit array]``."""
        if self.nbytes > 0xFF:
            raise ValueError("filter too long for a one-byte length field")
        return bytes((self.nbytes,)) + bytes(self.bits)

    @classmethod
    def from_bytes(cls, data, k=NUM_HASHES):
        """Parse a serialised filter; trailing bytes are ignored."""
        if not data:
            raise ValueError("empty buffer")
        nbytes = data[0]
        if nbytes == 0 or len(data) < 1 + nbytes:
            raise ValueError(f"bad filter length byte {nbytes}")
        return cls(8 * nbytes, k, data[1 : 1 + nbytes])


def encode_path(path, max_len, k=NUM_HASHES):
    """Encode a source route (sink excluded) as an adaptive Bloom filter."""
    path = list(path)
    if not path:
        raise ValueError("cannot encode an empty path")
    bf = BloomFilter(filter_length_for(len(path), max_len), k)
    for node_id in path:
        bf.add(node_id)
    return bf


def query(bf, node_id):
    return node_id in bf


def analytic_fp_rate(m, k, n):
    """Expected false-positive probability of an ``m``-bit filter holding ``n`` items."""
    if n <= 0:
        return 0.0
    return (1.0 - (1.0 - 1.0 / m) ** (k * n)) ** k


def space_saving(hops, max_len):
    """Fraction of header bytes saved versus a raw list of 2-byte addresses."""
    filter_bytes = filter_length_for(hops, max_len) // 8
    return 1.0 - filter_bytes / (RAW_ADDR_BYTES * hops)


def monte_carlo_fp(m, n, queries=100_000, seed=0):
    """Empirical false-positive rate with one fresh random filter per query.

    Each trial draws ``n`` distinct non-sink ids, builds an ``m``-bit filter
    from them and queries one further id that is not a member. Returns the
    hit fraction. Member/query draws come from numpy; the hashing and filter
    work runs in the accelerated kernel.
    """
    rng = np.random.default_rng(seed)
    members = rng.integers(1, MAX_NODE_ID + 1, size=(queries, n), dtype=np.int64)
    if n > 1:
        while True:
            srt = np.sort(members, axis=1)
            bad = np.flatnonzero((srt[:, 1:] == srt[:, :-1]).any(axis=1))
            if bad.size == 0:
                break
            members[bad] = rng.integers(1, MAX_NODE_ID + 1, size=(bad.size, n), dtype=np.int64)
    probes = rng.integers(1, MAX_NODE_ID + 1, size=queries, dtype=np.int64)
    while True:
        clash = np.flatnonzero((members == probes[:, None]).any(axis=1))
        if clash.size == 0:
            break
        probes[clash] = rng.integers(1, MAX_NODE_ID + 1, size=clash.size, dtype=np.int64)
    return count_fp_hits(members, probes, m) / queries


def standard_error(p, trials):
    return math.sqrt(p * (1.0 - p) / trials)
