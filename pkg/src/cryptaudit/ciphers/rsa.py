"""Textbook RSA and RSA-OAEP (RFC 8017, SHA-256/MGF1) with seeded keys."""

from __future__ import annotations

import hashlib
from dataclasses import dataclass
from math import gcd

from .. import rng
from ..errors import ConfigurationError, UsageError
from .base import CipherScheme, FaultConfig

OAEP_HASH = "sha256"
_H_LEN = 32
_SMALL_PRIMES = [p for p in range(3, 1000) if all(p % q for q in range(2, int(p**0.5) + 1))]
# deterministic Miller-Rabin bases, valid for n < 3.3e24
_DET_BASES = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41]


@dataclass(frozen=True)
class RsaKey:
    n: int
    e: int
    d: int | None = None
    p: int | None = None
    q: int | None = None

    @property
    def modulus_bytes(self) -> int:
        return (self.n.bit_length() + 7) // 8

    @property
    def carmichael(self) -> int | None:
        if self.p is None or self.q is None:
            return None
        return (self.p - 1) * (self.q - 1) // gcd(self.p - 1, self.q - 1)


def is_probable_prime(n: int, stream: rng.StreamRandom | None = None, rounds=40) -> bool:
    if n < 2:
        return False
    for p in _SMALL_PRIMES:
        if n % p == 0:
            return n == p
    d, s = n - 1, 0
    while d % 2 == 0:
        d //= 2
        s += 1
    if n < 3_317_044_064_679_887_385_961_981:
        bases = _DET_BASES
    else:
        stream = stream or rng.StreamRandom(n & rng.MASK64)
        bases = [stream.randrange(2, n - 1) for _ in range(rounds)]
    for a in bases:
        x = pow(a, d, n)
        if x in (1, n - 1):
            continue
        for _ in range(s - 1):
            x = x * x % n
            if x == n - 1:
                break
        else:
            return False
    return True


def _random_prime(bits, stream, e, max_candidates):
    for _ in range(max_candidates):
        cand = stream.randbits(bits) | (0b11 << (bits - 2)) | 1
        if gcd(cand - 1, e) == 1 and is_probable_prime(cand, stream):
            return cand
    raise ConfigurationError(f"no {bits}-bit prime found in {max_candidates} candidates")


def generate_key(modulus_bits=1024, seed=0, e=65537, max_candidates=100_000) -> RsaKey:
    """Deterministic key pair; ``e * d = 1 mod lambda(n)``."""
    if modulus_bits < 16:
        raise UsageError("RSA modulus must have at least 16 bits")
    stream = rng.StreamRandom(rng.derive_seed(seed, "rsa", modulus_bits))
    half = modulus_bits // 2
    p = _random_prime(modulus_bits - half, stream, e, max_candidates)
    while True:
        q = _random_prime(half, stream, e, max_candidates)
        if q != p and (p * q).bit_length() == modulus_bits:
            break
    lam = (p - 1) * (q - 1) // gcd(p - 1, q - 1)
    return RsaKey(p * q, e, pow(e, -1, lam), p, q)


def mgf1(seed: bytes, length: int) -> bytes:
    out = b""
    counter = 0
    while len(out) < length:
        out += hashlib.sha256(seed + counter.to_bytes(4, "big")).digest()
        counter += 1
    return out[:length]


def _xor(a, b):
    return bytes(x ^ y for x, y in zip(a, b))


def oaep_encode(message: bytes, k: int, seed: bytes, label=b"") -> bytes:
    m_len = len(message)
    if m_len > k - 2 * _H_LEN - 2:
        raise UsageError(f"OAEP: {m_len}-byte message does not fit a {k}-byte modulus")
    l_hash = hashlib.sha256(label).digest()
    db = l_hash + b"\x00" * (k - m_len - 2 * _H_LEN - 2) + b"\x01" + message
    masked_db = _xor(db, mgf1(seed, k - _H_LEN - 1))
    masked_seed = _xor(seed, mgf1(masked_db, _H_LEN))
    return b"\x00" + masked_seed + masked_db


def oaep_decode(em: bytes, k: int, label=b"") -> bytes:
    if len(em) != k or em[0] != 0:
        raise UsageError("OAEP decoding error")
    masked_seed, masked_db = em[1 : 1 + _H_LEN], em[1 + _H_LEN :]
    seed = _xor(masked_seed, mgf1(masked_db, _H_LEN))
    db = _xor(masked_db, mgf1(seed, k - _H_LEN - 1))
    if db[:_H_LEN] != hashlib.sha256(label).digest():
        raise UsageError("OAEP decoding error")
    rest = db[_H_LEN:].lstrip(b"\x00")
    if not rest or rest[0] != 1:
        raise UsageError("OAEP decoding error")
    return rest[1:]


class RsaPlain(CipherScheme):
    name = "rsa_plain"
    deterministic = True
    has_decryptor = True

    def __init__(self, plaintext_bits=128, modulus_bits=1024):
        self.modulus_bits = int(modulus_bits)
        super().__init__(plaintext_bits, 8 * ((self.modulus_bits + 7) // 8))
        self.key: RsaKey | None = None

    @classmethod
    def from_key(cls, key: RsaKey, plaintext_bits):
        scheme = cls(plaintext_bits, key.n.bit_length())
        scheme.key = key
        scheme.key_seed = -1
        return scheme

    def keygen(self, kappa=None, seed=0):
        if kappa is not None:
            self.modulus_bits = int(kappa)
            self.ciphertext_bits = 8 * ((self.modulus_bits + 7) // 8)
        self.key_seed = int(seed)
        self.key = generate_key(self.modulus_bits, seed)
        return self.key

    def encrypt_int(self, m: int) -> int:
        if not 0 <= m < self.key.n:
            raise UsageError(f"message {m} is not below the modulus")
        return pow(m, self.key.e, self.key.n)

    def decrypt_int(self, c: int) -> int:
        return pow(c, self.key.d, self.key.n)

    def encrypt_bytes(self, message, index):
        self._check_keyed()
        c = self.encrypt_int(int.from_bytes(message, "big"))
        return c.to_bytes(self.key.modulus_bytes, "big")

    def decrypt_bytes(self, ciphertext, index):
        self._check_keyed()
        m = self.decrypt_int(int.from_bytes(ciphertext, "big"))
        return m.to_bytes(self.plaintext_bytes, "big")

    def describe(self):
        return dict(super().describe(), modulus_bits=self.modulus_bits)


class RsaOaep(RsaPlain):
    """RSA-OAEP whose padding seed for sample ``i`` is derived from ``i``.

    With ``reuse_oaep_seed_period = p`` the seed (and therefore the whole
    padding mask for a given message) repeats every ``p`` samples.
    """

    name = "rsa_oaep"
    deterministic = False

    def __init__(self, plaintext_bits=128, modulus_bits=1024, faults: FaultConfig | None = None):
        super().__init__(plaintext_bits, modulus_bits)
        self.faults = faults or FaultConfig()
        period = self.faults.reuse_oaep_seed_period
        if period is not None:
            self.name = "rsa_oaep_faulted"
            self.deterministic = period == 1
        self._seed_key = None

    def keygen(self, kappa=None, seed=0):
        key = super().keygen(kappa, seed)
        self._seed_key = rng.derive_seed(seed, "oaep", "seed")
        return key

    def seed_index(self, index) -> int:
        period = self.faults.reuse_oaep_seed_period
        return index % period if period else index

    def padding_seed(self, index) -> bytes:
        return rng.stream_bytes(rng.derive_seed(self._seed_key, self.seed_index(int(index))), _H_LEN)

    def encrypt_bytes(self, message, index):
        self._check_keyed()
        k = self.key.modulus_bytes
        em = oaep_encode(bytes(message), k, self.padding_seed(index))
        c = self.encrypt_int(int.from_bytes(em, "big"))
        return c.to_bytes(k, "big")

    def decrypt_bytes(self, ciphertext, index):
        self._check_keyed()
        k = self.key.modulus_bytes
        em = self.decrypt_int(int.from_bytes(ciphertext, "big")).to_bytes(k, "big")
        return oaep_decode(em, k)

    def describe(self):
        return dict(super().describe(), oaep_hash=OAEP_HASH, mgf="mgf1-sha256")
