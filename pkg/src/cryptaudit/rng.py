"""Counter-based SplitMix64 streams.

Every random byte used to build a dataset or key is a pure function of
``(seed, label, counter)``. A value is ``mix64(key + (counter + 1) * GAMMA)``
with the published SplitMix64 constants, so any language can regenerate the
same stream and rows can be generated in any order.
"""

from __future__ import annotations

import hashlib

import numpy as np

GAMMA = 0x9E3779B97F4A7C15
MIX_1 = 0xBF58476D1CE4E5B9
MIX_2 = 0x94D049BB133111EB
MASK64 = (1 << 64) - 1


def mix64(z):
    """SplitMix64 finalizer on a Python int."""
    z &= MASK64
    z = ((z ^ (z >> 30)) * MIX_1) & MASK64
    z = ((z ^ (z >> 27)) * MIX_2) & MASK64
    return z ^ (z >> 31)


def mix64_array(z: np.ndarray) -> np.ndarray:
    z = np.asarray(z, dtype=np.uint64)
    z = (z ^ (z >> np.uint64(30))) * np.uint64(MIX_1)
    z = (z ^ (z >> np.uint64(27))) * np.uint64(MIX_2)
    return z ^ (z >> np.uint64(31))


def _label_int(label) -> int:
    if isinstance(label, (int, np.integer)):
        return int(label) & MASK64
    digest = hashlib.sha256(str(label).encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "little")


def derive_seed(seed, *labels) -> int:
    """Chain a seed through labels (ints or strings) into a new 64-bit key."""
    key = int(seed) & MASK64
    for label in labels:
        key = mix64(key ^ mix64((_label_int(label) + 1) * GAMMA))
    return key


def stream_value(key, counter) -> int:
    return mix64(int(key) + (int(counter) + 1) * GAMMA)


def stream_words(keys, n_words) -> np.ndarray:
    """``len(keys) x n_words`` uint64 matrix; row r uses counters 0..n_words-1 of key r."""
    keys = np.asarray(keys, dtype=np.uint64).reshape(-1, 1)
    counters = (np.arange(n_words, dtype=np.uint64) + np.uint64(1)) * np.uint64(GAMMA)
    with np.errstate(over="ignore"):
        return mix64_array(keys + counters)


def row_keys(seed, rows) -> np.ndarray:
    """Per-row keys ``derive(seed, row)`` computed in bulk."""
    rows = np.asarray(rows, dtype=np.uint64)
    base = np.uint64(int(seed) & MASK64)
    with np.errstate(over="ignore"):
        return mix64_array(base ^ mix64_array((rows + np.uint64(1)) * np.uint64(GAMMA)))


def stream_bits(keys, n_bits) -> np.ndarray:
    """Uniform bits, one row per key, little-endian within each byte."""
    n_words = -(-n_bits // 64)
    words = stream_words(keys, n_words).astype("<u8")
    bits = np.unpackbits(words.view(np.uint8), axis=1, bitorder="little")
    return bits[:, :n_bits]


def stream_bytes(key, n_bytes, counter_offset=0) -> bytes:
    n_words = -(-n_bytes // 8)
    words = [stream_value(key, counter_offset + i) for i in range(n_words)]
    return b"".join(w.to_bytes(8, "little") for w in words)[:n_bytes]


class StreamRandom:
    """Sequential reader over one counter stream (used for key generation)."""

    def __init__(self, key):
        self.key = int(key) & MASK64
        self.counter = 0

    def next_u64(self) -> int:
        v = stream_value(self.key, self.counter)
        self.counter += 1
        return v

    def randbits(self, k) -> int:
        out, have = 0, 0
        while have < k:
            out |= self.next_u64() << have
            have += 64
        return out & ((1 << k) - 1)

    def randbytes(self, n) -> bytes:
        return self.randbits(8 * n).to_bytes(n, "little") if n else b""

    def randrange(self, lo, hi) -> int:
        """Uniform in [lo, hi) by rejection."""
        span = hi - lo
        if span <= 0:
            raise ValueError("empty range")
        k = span.bit_length()
        while True:
            v = self.randbits(k)
            if v < span:
                return lo + v
