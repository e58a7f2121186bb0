"""The three 32-bit hash functions used for path Bloom filters.

Every node id is a 16-bit short address. The hashes are defined as follows
(all arithmetic modulo 2**32, ``>>`` is a logical shift):

``wang32``  (Thomas Wang, 2007, ``hash32shiftmult``), input is the id
zero-extended to a 32-bit word::

    key = (key ^ 61) ^ (key >> 16)
    key = key + (key << 3)
    key = key ^ (key >> 4)
    key = key * 0x27D4EB2D
    key = key ^ (key >> 15)

``jenkins_oaat``  (Bob Jenkins one-at-a-time), input is the two id bytes in
little-endian order ``[id & 0xFF, id >> 8]``, initial state 0::

    for b in bytes:
        h = h + b
        h = h + (h << 10)
        h = h ^ (h >> 6)
    h = h + (h << 3)
    h = h ^ (h >> 11)
    h = h + (h << 15)

``fnv1a32``  (FNV-1a, 32 bit), same two little-endian bytes::

    h = 0x811C9DC5
    for b in bytes:
        h = h ^ b
        h = h * 0x01000193

Bit index ``i`` of a filter of ``m`` bits is ``H_i(id) mod m`` with
``H_1 = wang32``, ``H_2 = jenkins_oaat``, ``H_3 = fnv1a32``.

Three implementations live here: scalar Python (the reference, used by the
simulator through a cache), vectorised numpy, and numba loops. The batch entry
points pick numba when available (see :mod:`osr._accel`).
"""
from functools import lru_cache

import numpy as np

from osr._accel import HAVE_NUMBA, njit

MASK32 = 0xFFFFFFFF
NUM_HASHES = 3
FNV_OFFSET = 0x811C9DC5
FNV_PRIME = 0x01000193
WANG_MULT = 0x27D4EB2D


def wang32(key):
    key &= MASK32
    key = (key ^ 61) ^ (key >> 16)
    key = (key + (key << 3)) & MASK32
    key ^= key >> 4
    key = (key * WANG_MULT) & MASK32
    key ^= key >> 15
    return key


def jenkins_oaat(data):
    h = 0
    for b in data:
        h = (h + b) & MASK32
        h = (h + (h << 10)) & MASK32
        h ^= h >> 6
    h = (h + (h << 3)) & MASK32
    h ^= h >> 11
    h = (h + (h << 15)) & MASK32
    return h


def fnv1a32(data):
    h = FNV_OFFSET
    for b in data:
        h ^= b
        h = (h * FNV_PRIME) & MASK32
    return h


def id_bytes(node_id):
    return bytes((node_id & 0xFF, (node_id >> 8) & 0xFF))


def digests(node_id):
    """Return the three raw 32-bit digests of a 16-bit node id."""
    raw = id_bytes(node_id)
    return wang32(node_id & 0xFFFF), jenkins_oaat(raw), fnv1a32(raw)


@lru_cache(maxsize=1 << 16)
def cached_indices(node_id, m):
    return tuple(d % m for d in digests(node_id))


# ---------------------------------------------------------------- numpy path


def _np_digests(ids):
    ids = np.asarray(ids, dtype=np.uint64) & np.uint64(0xFFFF)
    m32 = np.uint64(MASK32)

    key = (ids ^ np.uint64(61)) ^ (ids >> np.uint64(16))
    key = (key + (key << np.uint64(3))) & m32
    key ^= key >> np.uint64(4)
    key = (key * np.uint64(WANG_MULT)) & m32
    key ^= key >> np.uint64(15)

    lo = ids & np.uint64(0xFF)
    hi = ids >> np.uint64(8)

    h = np.zeros_like(ids)
    for b in (lo, hi):
        h = (h + b) & m32
        h = (h + (h << np.uint64(10))) & m32
        h ^= h >> np.uint64(6)
    h = (h + (h << np.uint64(3))) & m32
    h ^= h >> np.uint64(11)
    h = (h + (h << np.uint64(15))) & m32

    f = np.full_like(ids, FNV_OFFSET)
    for b in (lo, hi):
        f ^= b
        f = (f * np.uint64(FNV_PRIME)) & m32

    return np.stack([key, h, f], axis=-1)


def np_hash_indices(ids, m):
    return (_np_digests(ids) % np.uint64(m)).astype(np.int64)


def np_count_fp_hits(members, queries, m):
    """Count queries that pass the filter built from the matching member row.

    ``members`` is (N, n), ``queries`` is (N,); row ``r`` of ``members`` is
    inserted into a fresh ``m``-bit filter and ``queries[r]`` is tested
    against it.
    """
    members = np.asarray(members)
    n_rows = members.shape[0]
    bits = np.zeros((n_rows, m), dtype=bool)
    if members.size:
        idx = np_hash_indices(members, m).reshape(n_rows, -1)
        rows = np.repeat(np.arange(n_rows), idx.shape[1])
        bits[rows, idx.ravel()] = True
    q = np_hash_indices(queries, m)
    hit = bits[np.arange(n_rows)[:, None], q].all(axis=1)
    return int(hit.sum())


# ---------------------------------------------------------------- numba path


@njit(cache=True)
def _nb_digests(node_id, out):
    m32 = 0xFFFFFFFF
    key = node_id & 0xFFFF
    key = (key ^ 61) ^ (key >> 16)
    key = (key + (key << 3)) & m32
    key ^= key >> 4
    key = (key * 0x27D4EB2D) & m32
    key ^= key >> 15
    out[0] = key

    lo = node_id & 0xFF
    hi = (node_id >> 8) & 0xFF

    h = 0
    h = (h + lo) & m32
    h = (h + (h << 10)) & m32
    h ^= h >> 6
    h = (h + hi) & m32
    h = (h + (h << 10)) & m32
    h ^= h >> 6
    h = (h + (h << 3)) & m32
    h ^= h >> 11
    h = (h + (h << 15)) & m32
    out[1] = h

    f = 0x811C9DC5
    f ^= lo
    f = (f * 0x01000193) & m32
    f ^= hi
    f = (f * 0x01000193) & m32
    out[2] = f


@njit(cache=True)
def nb_hash_indices(ids, m):
    flat = ids.ravel()
    out = np.empty((flat.shape[0], 3), dtype=np.int64)
    buf = np.empty(3, dtype=np.int64)
    for i in range(flat.shape[0]):
        _nb_digests(np.int64(flat[i]), buf)
        for j in range(3):
            out[i, j] = buf[j] % m
    return out


@njit(cache=True)
def nb_count_fp_hits(members, queries, m):
    n_rows = members.shape[0]
    n_cols = members.shape[1]
    bits = np.zeros(m, dtype=np.uint8)
    buf = np.empty(3, dtype=np.int64)
    hits = 0
    for r in range(n_rows):
        bits[:] = 0
        for c in range(n_cols):
            _nb_digests(np.int64(members[r, c]), buf)
            for j in range(3):
                bits[buf[j] % m] = 1
        _nb_digests(np.int64(queries[r]), buf)
        ok = True
        for j in range(3):
            if bits[buf[j] % m] == 0:
                ok = False
                break
        if ok:
            hits += 1
    return hits


def hash_indices_batch(ids, m):
    """Vectorised ``(len(ids), 3)`` index array, numba when available."""
    ids = np.asarray(ids, dtype=np.int64)
    if HAVE_NUMBA:
        return nb_hash_indices(ids, m)
    return np_hash_indices(ids, m).reshape(-1, NUM_HASHES)


def count_fp_hits(members, queries, m):
    members = np.ascontiguousarray(members, dtype=np.int64)
    queries = np.ascontiguousarray(queries, dtype=np.int64)
    if HAVE_NUMBA:
        return int(nb_count_fp_hits(members, queries, m))
    return np_count_fp_hits(members, queries, m)
