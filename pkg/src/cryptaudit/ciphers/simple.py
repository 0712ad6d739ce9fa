"""Baseline schemes: no encryption, one-time pad, constant-key XOR."""

from __future__ import annotations

import numpy as np

from .. import rng
from .base import CipherScheme, xor_bytes


class Identity(CipherScheme):
    name = "identity"
    deterministic = True
    has_decryptor = True

    def __init__(self, plaintext_bits=16):
        super().__init__(plaintext_bits, plaintext_bits)

    def keygen(self, kappa=None, seed=0):
        self.key_seed = int(seed)
        return None

    def encrypt_bytes(self, message, index):
        return bytes(message)

    def decrypt_bytes(self, ciphertext, index):
        return bytes(ciphertext)

    def encrypt_batch(self, plaintexts, indices):
        plaintexts = np.asarray(plaintexts, dtype=np.uint8)
        self._check_keyed()
        return plaintexts.copy()


class OneTimePad(CipherScheme):
    """Fresh uniform pad per sample: ``pad_i = stream(key, i)``."""

    name = "otp"
    deterministic = False
    has_decryptor = True

    def __init__(self, plaintext_bits=16):
        super().__init__(plaintext_bits, plaintext_bits)

    def keygen(self, kappa=None, seed=0):
        self.key_seed = rng.derive_seed(seed, self.name, "pad")
        return self.key_seed

    def pads(self, indices) -> np.ndarray:
        keys = rng.row_keys(self.key_seed, np.asarray(indices, dtype=np.uint64))
        return rng.stream_bits(keys, self.plaintext_bits)

    def _pad_bytes(self, index):
        return np.packbits(self.pads([index])[0], bitorder="little").tobytes()

    def encrypt_bytes(self, message, index):
        self._check_keyed()
        return xor_bytes(message, self._pad_bytes(index))

    decrypt_bytes = encrypt_bytes

    def encrypt_batch(self, plaintexts, indices):
        plaintexts = np.asarray(plaintexts, dtype=np.uint8)
        self._check_keyed()
        return plaintexts ^ self.pads(indices)


class ConstantXor(CipherScheme):
    name = "xor_const"
    deterministic = True
    has_decryptor = True

    def __init__(self, plaintext_bits=16):
        super().__init__(plaintext_bits, plaintext_bits)
        self.key_bits = None

    def keygen(self, kappa=None, seed=0):
        self.key_seed = rng.derive_seed(seed, self.name, "key")
        self.key_bits = rng.stream_bits([self.key_seed], self.plaintext_bits)[0]
        return self.key_bits

    @property
    def key_bytes(self) -> bytes:
        return np.packbits(self.key_bits, bitorder="little").tobytes()

    def encrypt_bytes(self, message, index):
        self._check_keyed()
        return xor_bytes(message, self.key_bytes)

    decrypt_bytes = encrypt_bytes

    def encrypt_batch(self, plaintexts, indices):
        plaintexts = np.asarray(plaintexts, dtype=np.uint8)
        self._check_keyed()
        return plaintexts ^ self.key_bits[None, :]

