"""Labeled plaintext/ciphertext datasets and their binary file format.

Rows alternate by class: even sample indices carry an all-zero plaintext
(label 0), odd indices a uniform one (label 1). Train rows use sample
indices ``0..n_train-1`` and test rows continue at ``n_train``, so a scheme
that derives counters or padding from the index never repeats them across
splits unless a fault makes it.
"""

from __future__ import annotations

import hashlib
import struct
from dataclasses import dataclass, field

import numpy as np

from . import rng
from .errors import FormatError, UsageError

MAGIC = b"CADS"
VERSION = 1
SPLITS = ("train", "test")
DESK_TRAIN = 20_000
DESK_TEST = 4_000


@dataclass
class SampleSet:
    scheme_name: str
    plaintext_bits: int
    ciphertext_bits: int
    plaintexts: np.ndarray
    ciphertexts: np.ndarray
    labels: np.ndarray
    split: str = "train"
    seed: int = 0

    def __post_init__(self):
        self.plaintexts = np.asarray(self.plaintexts, dtype=np.uint8)
        self.ciphertexts = np.asarray(self.ciphertexts, dtype=np.uint8)
        self.labels = np.asarray(self.labels, dtype=np.uint8).ravel()
        n = len(self.labels)
        if self.plaintexts.shape != (n, self.plaintext_bits):
            raise UsageError(f"plaintexts shape {self.plaintexts.shape} != ({n}, {self.plaintext_bits})")
        if self.ciphertexts.shape != (n, self.ciphertext_bits):
            raise UsageError(f"ciphertexts shape {self.ciphertexts.shape} != ({n}, {self.ciphertext_bits})")
        if self.split not in SPLITS:
            raise UsageError(f"split must be one of {SPLITS}, got {self.split!r}")
        if n and self.labels.max() > 1:
            raise UsageError("labels must be 0 or 1")

    def __len__(self):
        return len(self.labels)

    def class_counts(self) -> tuple[int, int]:
        ones = int(self.labels.sum())
        return len(self) - ones, ones

    def features(self) -> np.ndarray:
        """Ciphertext bits as float64, the classifier's input."""
        return self.ciphertexts.astype(np.float64)

    def pairs(self) -> tuple[np.ndarray, np.ndarray]:
        return self.plaintexts.astype(np.float64), self.ciphertexts.astype(np.float64)


@dataclass
class DatasetSpec:
    n_train: int = 100_000
    n_test: int = 20_000
    plaintext_bits: int | None = None
    seed: int = 0
    extra: dict = field(default_factory=dict)

    def __post_init__(self):
        for name in ("n_train", "n_test"):
            value = getattr(self, name)
            if value < 2 or value % 2:
                raise UsageError(f"{name} must be a positive even number, got {value}")

    @classmethod
    def desk(cls, **kwargs):
        return cls(n_train=DESK_TRAIN, n_test=DESK_TEST, **kwargs)

    def split_offset(self, split) -> int:
        return 0 if split == "train" else self.n_train

    def split_size(self, split) -> int:
        return self.n_train if split == "train" else self.n_test


def gen_plaintexts(kind, count, bits, rng_seed, rows=None) -> np.ndarray:
    """``count x bits`` 0/1 matrix. Row ``r`` of a uniform matrix depends only on ``(rng_seed, r)``.

    ``rows`` selects which row numbers to produce (default ``0..count-1``).
    """
    if count < 1 or bits < 1:
        raise UsageError(f"need count >= 1 and bits >= 1, got {count}, {bits}")
    if kind == "zero":
        return np.zeros((count, bits), dtype=np.uint8)
    if kind != "uniform":
        raise UsageError(f"plaintext kind must be 'uniform' or 'zero', got {kind!r}")
    rows = np.arange(count, dtype=np.uint64) if rows is None else np.asarray(rows, dtype=np.uint64)
    if len(rows) != count:
        raise UsageError("rows must have one entry per generated row")
    return rng.stream_bits(rng.row_keys(rng_seed, rows), bits)


def plaintext_seed(seed, split) -> int:
    return rng.derive_seed(seed, "plaintext", split)


def split_plaintexts(spec: DatasetSpec, split, bits, class0=None):
    """Plaintexts and labels for one split.

    ``class0(rows, seed)`` overrides the all-zero class when given; it gets
    the local row numbers of the label-0 rows and a split-specific seed.
    """
    n = spec.split_size(split)
    labels = (np.arange(n) % 2).astype(np.uint8)
    seed = plaintext_seed(spec.seed, split)
    pts = np.zeros((n, bits), dtype=np.uint8)
    odd = np.flatnonzero(labels == 1)
    pts[odd] = gen_plaintexts("uniform", len(odd), bits, seed, rows=odd)
    if class0 is not None:
        even = np.flatnonzero(labels == 0)
        pts[even] = class0(even, rng.derive_seed(seed, "class0"))
    return pts, labels


def build_sampleset(spec: DatasetSpec, scheme, class0=None) -> tuple[SampleSet, SampleSet]:
    """Encrypt both splits with one keyed scheme, in ascending sample-index order.

    A scheme may supply its own label-0 sampler (``class0_sampler``); the
    individual HUNCC game uses this.
    """
    bits = spec.plaintext_bits or scheme.plaintext_bits
    if bits != scheme.plaintext_bits:
        raise UsageError(f"dataset width {bits} does not match scheme width {scheme.plaintext_bits}")
    if class0 is None:
        class0 = getattr(scheme, "class0_sampler", None)
    out = []
    for split in SPLITS:
        pts, labels = split_plaintexts(spec, split, bits, class0)
        indices = spec.split_offset(split) + np.arange(len(labels))
        cts = scheme.encrypt_batch(pts, indices)
        out.append(
            SampleSet(
                scheme_name=scheme.descriptor(),
                plaintext_bits=bits,
                ciphertext_bits=scheme.ciphertext_bits,
                plaintexts=pts,
                ciphertexts=cts,
                labels=labels,
                split=split,
                seed=int(spec.seed) & rng.MASK64,
            )
        )
    return out[0], out[1]


# -- serialization -----------------------------------------------------------

def _pack(bits: np.ndarray) -> bytes:
    return np.packbits(bits, axis=1, bitorder="little").tobytes()


def header_size(scheme_name: str) -> int:
    return 4 + 4 + 4 + len(scheme_name.encode("utf-8")) + 4 + 4 + 8 + 1 + 8


def expected_file_size(scheme_name, plaintext_bits, ciphertext_bits, rows) -> int:
    return (
        header_size(scheme_name)
        + rows * (-(-plaintext_bits // 8))
        + rows * (-(-ciphertext_bits // 8))
        + rows
    )


def to_bytes(ss: SampleSet) -> bytes:
    name = ss.scheme_name.encode("utf-8")
    header = (
        MAGIC
        + struct.pack("<II", VERSION, len(name))
        + name
        + struct.pack("<IIQBQ", ss.plaintext_bits, ss.ciphertext_bits, len(ss), SPLITS.index(ss.split), ss.seed)
    )
    return header + _pack(ss.plaintexts) + _pack(ss.ciphertexts) + ss.labels.tobytes()


def from_bytes(data: bytes) -> SampleSet:
    view = memoryview(data)
    pos = 0

    def take(n):
        nonlocal pos
        if pos + n > len(view):
            raise FormatError(f"sample set truncated at byte {pos} (need {n} more)")
        chunk = view[pos : pos + n]
        pos += n
        return chunk

    if bytes(take(4)) != MAGIC:
        raise FormatError("not a sample-set file (bad magic)")
    version, name_len = struct.unpack("<II", take(8))
    if version != VERSION:
        raise FormatError(f"unsupported sample-set version {version}")
    try:
        name = bytes(take(name_len)).decode("utf-8")
    except UnicodeDecodeError as exc:
        raise FormatError("scheme name is not UTF-8") from exc
    pt_bits, ct_bits, rows, split, seed = struct.unpack("<IIQBQ", take(25))
    if split >= len(SPLITS):
        raise FormatError(f"unknown split tag {split}")
    pt_row, ct_row = -(-pt_bits // 8), -(-ct_bits // 8)

    def matrix(row_bytes, bits):
        raw = np.frombuffer(take(rows * row_bytes), dtype=np.uint8).reshape(rows, row_bytes)
        return np.unpackbits(raw, axis=1, bitorder="little")[:, :bits]

    pts = matrix(pt_row, pt_bits)
    cts = matrix(ct_row, ct_bits)
    labels = np.frombuffer(take(rows), dtype=np.uint8).copy()
    if pos != len(view):
        raise FormatError(f"{len(view) - pos} trailing bytes after sample set")
    try:
        return SampleSet(name, pt_bits, ct_bits, pts, cts, labels, SPLITS[split], seed)
    except UsageError as exc:
        raise FormatError(str(exc)) from exc


def save_sampleset(ss: SampleSet, path) -> str:
    """Write the file and return its SHA-256 fingerprint."""
    data = to_bytes(ss)
    with open(path, "wb") as fh:
        fh.write(data)
    return hashlib.sha256(data).hexdigest()


def load_sampleset(path) -> SampleSet:
    with open(path, "rb") as fh:
        return from_bytes(fh.read())


def fingerprint(*sets: SampleSet) -> str:
    """SHA-256 over the serialized form of one or more sets."""
    h = hashlib.sha256()
    for ss in sets:
        h.update(to_bytes(ss))
    return h.hexdigest()
