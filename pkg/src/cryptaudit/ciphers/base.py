"""Cipher scheme interface and bit/byte plumbing.

A scheme is a pure function of ``(key, plaintext, sample_index)``; anything
that looks stateful (counters, padding seeds, one-time keys) is derived from
the sample index so that datasets can be regenerated exactly.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import ConfigurationError, EncryptionFailure, UsageError


def bits_to_bytes(bits) -> bytes:
    """Pack a 0/1 vector, bit ``j`` -> bit ``j % 8`` of byte ``j // 8``."""
    return np.packbits(np.asarray(bits, dtype=np.uint8), bitorder="little").tobytes()


def bytes_to_bits(data: bytes, n_bits=None) -> np.ndarray:
    bits = np.unpackbits(np.frombuffer(data, dtype=np.uint8), bitorder="little")
    return bits if n_bits is None else bits[:n_bits]


def xor_bytes(a: bytes, b: bytes) -> bytes:
    return (int.from_bytes(a, "little") ^ int.from_bytes(b, "little")).to_bytes(len(a), "little")


@dataclass
class FaultConfig:
    ctr_reset_period: int | None = None
    reuse_oaep_seed_period: int | None = None

    def __post_init__(self):
        for name in ("ctr_reset_period", "reuse_oaep_seed_period"):
            value = getattr(self, name)
            if value is not None and value < 1:
                raise ConfigurationError(f"{name} must be >= 1, got {value}")

    def to_dict(self) -> dict:
        return {k: v for k, v in vars(self).items() if v is not None}


class CipherScheme:
    """Base class. Subclasses implement ``keygen`` and ``encrypt_bytes``.

    ``encrypt`` and ``encrypt_batch`` work on 0/1 bit vectors; the byte
    methods are the natural interface for the block ciphers underneath.
    """

    name = "abstract"
    deterministic = True
    has_decryptor = False

    def __init__(self, plaintext_bits, ciphertext_bits, faults: FaultConfig | None = None):
        self.plaintext_bits = int(plaintext_bits)
        self.ciphertext_bits = int(ciphertext_bits)
        self.faults = faults or FaultConfig()
        self.key_seed = None

    # -- interface ---------------------------------------------------------
    def keygen(self, kappa, seed):
        raise NotImplementedError

    def encrypt_bytes(self, message: bytes, index: int) -> bytes:
        raise NotImplementedError

    def decrypt_bytes(self, ciphertext: bytes, index: int) -> bytes:
        raise UsageError(f"scheme {self.name} has no decryptor")

    # -- bit-level wrappers ------------------------------------------------
    @property
    def plaintext_bytes(self) -> int:
        return -(-self.plaintext_bits // 8)

    @property
    def ciphertext_bytes(self) -> int:
        return -(-self.ciphertext_bits // 8)

    def _check_keyed(self):
        if self.key_seed is None:
            raise ConfigurationError(f"scheme {self.name} used before keygen")

    def encrypt(self, bits, index) -> np.ndarray:
        bits = np.asarray(bits, dtype=np.uint8).ravel()
        if bits.size != self.plaintext_bits:
            raise UsageError(
                f"{self.name}: plaintext has {bits.size} bits, expected {self.plaintext_bits}"
            )
        ct = self.encrypt_bytes(bits_to_bytes(bits), int(index))
        return bytes_to_bits(ct, self.ciphertext_bits)

    def decrypt(self, bits, index) -> np.ndarray:
        bits = np.asarray(bits, dtype=np.uint8).ravel()
        if bits.size != self.ciphertext_bits:
            raise UsageError(f"{self.name}: ciphertext has {bits.size} bits")
        pt = self.decrypt_bytes(bits_to_bytes(bits), int(index))
        return bytes_to_bits(pt, self.plaintext_bits)

    def encrypt_batch(self, plaintexts, indices) -> np.ndarray:
        """Encrypt rows in the given index order. Subclasses may vectorize."""
        plaintexts = np.asarray(plaintexts, dtype=np.uint8)
        if plaintexts.ndim != 2 or plaintexts.shape[1] != self.plaintext_bits:
            raise UsageError(
                f"{self.name}: expected rows of {self.plaintext_bits} bits, got {plaintexts.shape}"
            )
        self._check_keyed()
        packed = np.packbits(plaintexts, axis=1, bitorder="little")
        out = np.empty((len(plaintexts), self.ciphertext_bytes), dtype=np.uint8)
        for row, index in enumerate(indices):
            try:
                ct = self.encrypt_bytes(packed[row].tobytes(), int(index))
            except (ArithmeticError, ValueError, UsageError) as exc:
                raise EncryptionFailure(f"{self.name}: sample {int(index)}: {exc}", int(index)) from exc
            out[row] = np.frombuffer(ct, dtype=np.uint8)
        return np.unpackbits(out, axis=1, bitorder="little")[:, : self.ciphertext_bits]

    # -- reporting ---------------------------------------------------------
    def descriptor(self) -> str:
        """Registry name plus fault parameters, e.g. ``aes_ctr_faulted;ctr_reset_period=20000``."""
        parts = [self.name] + [f"{k}={v}" for k, v in sorted(self.faults.to_dict().items())]
        return ";".join(parts)

    def describe(self) -> dict:
        return {
            "scheme": self.name,
            "plaintext_bits": self.plaintext_bits,
            "ciphertext_bits": self.ciphertext_bits,
            "deterministic": self.deterministic,
            "faults": self.faults.to_dict(),
        }
