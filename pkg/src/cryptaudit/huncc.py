"""Hybrid universal network coding (HUNCC) over GF(2^8).

A message is an ``n x channel_bytes`` byte matrix, one row per channel.
Every byte column is mixed by an invertible generator ``G``; the first
``c`` coded rows are then encrypted with an inner cipher and the rest are
sent in the clear. ``H = G^-1`` undoes the mixing after decryption.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import rng
from .ciphers.base import CipherScheme
from .errors import ConfigurationError, UsageError

MODULUS = 0x11B
GENERATOR = 0x03  # 0x02 is not primitive for 0x11B


def _xtime_mul(a, b):
    """Shift-and-add product, used only to build the tables."""
    out = 0
    while b:
        if b & 1:
            out ^= a
        a <<= 1
        if a & 0x100:
            a ^= MODULUS
        b >>= 1
    return out


def _build_tables():
    exp = np.zeros(512, dtype=np.uint8)
    log = np.zeros(256, dtype=np.int64)
    x = 1
    for i in range(255):
        exp[i] = x
        log[x] = i
        x = _xtime_mul(x, GENERATOR)
    exp[255:510] = exp[:255]
    a = np.arange(256)
    mul = exp[(log[a][:, None] + log[a][None, :])]
    mul[0, :] = 0
    mul[:, 0] = 0
    inv = np.zeros(256, dtype=np.uint8)
    inv[1:] = exp[(255 - log[1:]) % 255]
    return exp, log, mul.astype(np.uint8), inv


EXP, LOG, MUL, INV = _build_tables()


def gf_add(a, b):
    return a ^ b


def gf_mul(a, b):
    return MUL[a, b]


def gf_inv(a):
    if np.any(np.asarray(a) == 0):
        raise UsageError("0 has no multiplicative inverse in GF(2^8)")
    return INV[a]


def gf_matmul(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """``a @ b`` over GF(2^8). ``b`` may carry leading batch axes: ``(..., k, m)``."""
    a = np.asarray(a, dtype=np.uint8)
    b = np.asarray(b, dtype=np.uint8)
    rows, inner = a.shape
    if b.shape[-2] != inner:
        raise UsageError(f"GF matmul shape mismatch: {a.shape} x {b.shape}")
    out = np.zeros(b.shape[:-2] + (rows, b.shape[-1]), dtype=np.uint8)
    for i in range(rows):
        acc = out[..., i, :]
        for k in range(inner):
            if a[i, k]:
                acc ^= MUL[a[i, k]][b[..., k, :]]
    return out


def gf_inverse_matrix(g: np.ndarray) -> np.ndarray | None:
    """Gauss-Jordan inverse over GF(2^8), or None when singular."""
    g = np.asarray(g, dtype=np.uint8)
    n = g.shape[0]
    aug = np.concatenate([g, np.eye(n, dtype=np.uint8)], axis=1)
    for col in range(n):
        nz = np.flatnonzero(aug[col:, col])
        if not len(nz):
            return None
        piv = col + nz[0]
        aug[[col, piv]] = aug[[piv, col]]
        aug[col] = MUL[INV[aug[col, col]]][aug[col]]
        for r in range(n):
            if r != col and aug[r, col]:
                aug[r] ^= MUL[aug[r, col]][aug[col]]
    return aug[:, n:].copy()


@dataclass(frozen=True)
class GenMatrix:
    G: np.ndarray
    H: np.ndarray
    seed: int | None = None

    @classmethod
    def from_matrix(cls, g):
        g = np.asarray(g, dtype=np.uint8)
        h = gf_inverse_matrix(g)
        if h is None:
            raise ConfigurationError("generator matrix is singular over GF(2^8)")
        return cls(g, h)

    @property
    def n(self) -> int:
        return self.G.shape[0]


def make_generator(seed, n, max_attempts=1000) -> GenMatrix:
    """Seeded uniform matrix, redrawn until invertible."""
    if n < 2:
        raise UsageError("generator size must be at least 2")
    for attempt in range(max_attempts):
        raw = rng.stream_bytes(rng.derive_seed(seed, "huncc", "G", attempt), n * n)
        g = np.frombuffer(raw, dtype=np.uint8).reshape(n, n).copy()
        h = gf_inverse_matrix(g)
        if h is not None:
            return GenMatrix(g, h, int(seed))
    raise ConfigurationError(f"no invertible {n}x{n} matrix in {max_attempts} attempts")


@dataclass
class HunccConfig:
    n_channels: int = 8
    channel_bytes: int = 16
    encrypted_channels: int = 1
    inner_scheme: str = "aes_ctr"
    matrix_seed: int = 0
    j_star: int = 1
    inner_options: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.n_channels < 2 or self.channel_bytes < 1:
            raise UsageError("HUNCC needs at least 2 channels of at least 1 byte")
        if not 0 <= self.encrypted_channels <= self.n_channels:
            raise UsageError(f"encrypted_channels must lie in [0, {self.n_channels}]")
        if not 1 <= self.j_star <= self.n_channels:
            raise UsageError(f"j_star must lie in [1, {self.n_channels}], got {self.j_star}")

    @property
    def message_bytes(self) -> int:
        return self.n_channels * self.channel_bytes

    @property
    def plaintext_bits(self) -> int:
        return 8 * self.message_bytes

    def to_dict(self) -> dict:
        return {
            "n_channels": self.n_channels,
            "channel_bytes": self.channel_bytes,
            "encrypted_channels": self.encrypted_channels,
            "inner_scheme": self.inner_scheme,
            "matrix_seed": self.matrix_seed,
            "j_star": self.j_star,
            "code": "seeded-invertible",
            **self.inner_options,
        }


def make_inner(cfg: HunccConfig, seed) -> CipherScheme:
    from .ciphers import keyed_scheme

    return keyed_scheme(cfg.inner_scheme, seed, plaintext_bits=8 * cfg.channel_bytes, **cfg.inner_options)


def _as_messages(message, cfg) -> np.ndarray:
    m = np.asarray(message, dtype=np.uint8)
    if m.shape[-2:] != (cfg.n_channels, cfg.channel_bytes):
        raise UsageError(f"message shape {m.shape} does not end in ({cfg.n_channels}, {cfg.channel_bytes})")
    return m


def _inner_indices(cfg, indices):
    c = cfg.encrypted_channels
    return (np.asarray(indices, dtype=np.int64)[:, None] * c + np.arange(c)[None, :]).ravel()


def _apply_inner(rows, inner, indices, decrypt):
    """Encrypt or decrypt a stack of channel payloads, one inner sample index per row."""
    bits = np.unpackbits(rows, axis=1, bitorder="little")
    if decrypt:
        out = np.stack([inner.decrypt(b, i) for b, i in zip(bits, indices)]) if len(bits) else bits
    else:
        out = inner.encrypt_batch(bits, indices)
    return np.packbits(out, axis=1, bitorder="little")


def huncc_encode(message, cfg: HunccConfig, matrix: GenMatrix, inner=None, index=0) -> np.ndarray:
    """Code and partially encrypt one message or a batch ``(batch, n, channel_bytes)``.

    ``index`` is the sample index (or array of them, one per batch row); the
    inner cipher sees index ``index * c + i`` for encrypted row ``i``.
    """
    m = _as_messages(message, cfg)
    single = m.ndim == 2
    m = m[None] if single else m
    x = gf_matmul(matrix.G, m)
    c = cfg.encrypted_channels
    if c:
        if inner is None:
            raise UsageError("an inner scheme is required when encrypted_channels > 0")
        idx = np.broadcast_to(np.asarray(index, dtype=np.int64), (len(m),))
        enc = _apply_inner(x[:, :c].reshape(-1, cfg.channel_bytes), inner, _inner_indices(cfg, idx), False)
        x[:, :c] = enc.reshape(len(m), c, cfg.channel_bytes)
    return x[0] if single else x


def huncc_decode(ciphertext, cfg: HunccConfig, matrix: GenMatrix, inner=None, index=0) -> np.ndarray:
    x = _as_messages(ciphertext, cfg).copy()
    single = x.ndim == 2
    x = x[None] if single else x
    c = cfg.encrypted_channels
    if c:
        if inner is None:
            raise UsageError("an inner scheme is required when encrypted_channels > 0")
        idx = np.broadcast_to(np.asarray(index, dtype=np.int64), (len(x),))
        dec = _apply_inner(x[:, :c].reshape(-1, cfg.channel_bytes), inner, _inner_indices(cfg, idx), True)
        x[:, :c] = dec.reshape(len(x), c, cfg.channel_bytes)
    m = gf_matmul(matrix.H, x)
    return m[0] if single else m


class HunccScheme(CipherScheme):
    """HUNCC as a cipher scheme over flattened ``n * channel_bytes``-byte plaintexts.

    Channel ``i`` occupies bytes ``[i * channel_bytes, (i + 1) * channel_bytes)``.
    With ``individual=True`` datasets built from this scheme use the
    individual-secrecy class 0: channel ``j_star`` zero, all others uniform.
    """

    has_decryptor = True

    def __init__(self, cfg: HunccConfig | None = None, individual=False):
        self.cfg = cfg or HunccConfig()
        super().__init__(self.cfg.plaintext_bits, self.cfg.plaintext_bits)
        self.individual = bool(individual)
        self.name = "huncc_individual" if individual else "huncc"
        self.matrix = None
        self.inner = None

    @property
    def deterministic(self):
        return self.inner.deterministic if self.inner is not None and self.cfg.encrypted_channels else True

    def keygen(self, kappa=None, seed=0):
        self.key_seed = int(seed)
        self.matrix = make_generator(self.cfg.matrix_seed, self.cfg.n_channels)
        self.inner = make_inner(self.cfg, seed) if self.cfg.encrypted_channels else None
        return self.matrix

    def _messages(self, data: bytes):
        return np.frombuffer(data, dtype=np.uint8).reshape(self.cfg.n_channels, self.cfg.channel_bytes)

    def encrypt_bytes(self, message, index):
        self._check_keyed()
        if len(message) != self.cfg.message_bytes:
            raise UsageError(f"huncc: message must be {self.cfg.message_bytes} bytes")
        return huncc_encode(self._messages(message), self.cfg, self.matrix, self.inner, index).tobytes()

    def decrypt_bytes(self, ciphertext, index):
        self._check_keyed()
        return huncc_decode(self._messages(ciphertext), self.cfg, self.matrix, self.inner, index).tobytes()

    def encrypt_batch(self, plaintexts, indices):
        plaintexts = np.asarray(plaintexts, dtype=np.uint8)
        if plaintexts.ndim != 2 or plaintexts.shape[1] != self.plaintext_bits:
            raise UsageError(f"huncc: expected rows of {self.plaintext_bits} bits, got {plaintexts.shape}")
        self._check_keyed()
        m = np.packbits(plaintexts, axis=1, bitorder="little").reshape(
            -1, self.cfg.n_channels, self.cfg.channel_bytes
        )
        x = huncc_encode(m, self.cfg, self.matrix, self.inner, np.asarray(indices))
        return np.unpackbits(x.reshape(len(m), -1), axis=1, bitorder="little")

    @property
    def class0_sampler(self):
        """Label-0 sampler for the individual dataset, or None for the all-zero default."""
        return individual_class0(self.cfg, self.cfg.j_star) if self.individual else None

    def descriptor(self):
        c = self.cfg
        return (
            f"{self.name};n={c.n_channels};channel_bytes={c.channel_bytes};c={c.encrypted_channels};"
            f"inner={c.inner_scheme};matrix_seed={c.matrix_seed};j_star={c.j_star}"
        )

    def describe(self):
        return dict(super().describe(), huncc=self.cfg.to_dict(), individual=self.individual)


def individual_class0(cfg: HunccConfig, j_star):
    """Sampler for class 0 of the individual game: channel ``j_star`` zero, the rest uniform."""
    if not 1 <= j_star <= cfg.n_channels:
        raise UsageError(f"j_star must lie in [1, {cfg.n_channels}], got {j_star}")
    lo, hi = (j_star - 1) * cfg.channel_bytes * 8, j_star * cfg.channel_bytes * 8

    def sample(rows, seed):
        keys = rng.row_keys(seed, np.asarray(rows, dtype=np.uint64))
        bits = rng.stream_bits(keys, cfg.plaintext_bits)
        bits[:, lo:hi] = 0
        return bits

    return sample


def build_individual_dataset(cfg: HunccConfig, spec, j_star=None, seed=None):
    """Train/test sets for the individual game, keyed with ``seed`` (default ``spec.seed``)."""
    from .datagen import build_sampleset

    j = cfg.j_star if j_star is None else j_star
    if not 1 <= j <= cfg.n_channels:
        raise UsageError(f"j_star must lie in [1, {cfg.n_channels}], got {j}")
    scheme = HunccScheme(HunccConfig(**{**vars(cfg), "j_star": j}), individual=True)
    scheme.keygen(None, spec.seed if seed is None else seed)
    return build_sampleset(spec, scheme)
