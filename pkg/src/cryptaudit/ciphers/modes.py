"""AES-128 ECB/CTR and DES (deterministic and randomized) schemes."""

from __future__ import annotations

from .. import rng
from ..errors import UsageError
from .aes import Aes128
from .base import CipherScheme, FaultConfig, xor_bytes
from .des import Des


def _check_width(scheme, message, block):
    if len(message) != scheme.plaintext_bytes or len(message) % block:
        raise UsageError(
            f"{scheme.name}: message of {len(message)} bytes is not {scheme.plaintext_bytes} "
            f"bytes / a multiple of the {block}-byte block"
        )


class AesEcb(CipherScheme):
    name = "aes_ecb"
    deterministic = True
    has_decryptor = True

    def __init__(self, plaintext_bits=128):
        if plaintext_bits % 128:
            raise UsageError("aes_ecb plaintext width must be a multiple of 128 bits")
        super().__init__(plaintext_bits, plaintext_bits)
        self.cipher = None

    def keygen(self, kappa=128, seed=0):
        if kappa not in (None, 128):
            raise UsageError("AES-128 only supports kappa=128")
        self.key_seed = rng.derive_seed(seed, "aes", "key")
        self.cipher = Aes128(rng.stream_bytes(self.key_seed, 16))
        return self.cipher.key

    def encrypt_bytes(self, message, index):
        self._check_keyed()
        _check_width(self, message, 16)
        return b"".join(self.cipher.encrypt_block(message[i : i + 16]) for i in range(0, len(message), 16))

    def decrypt_bytes(self, ciphertext, index):
        self._check_keyed()
        return b"".join(self.cipher.decrypt_block(ciphertext[i : i + 16]) for i in range(0, len(ciphertext), 16))


class AesCtr(CipherScheme):
    """CTR mode with a fixed per-key IV; the counter is derived from the sample index.

    Keystream block ``b`` of sample ``i`` is ``AES(key, IV || ctr)`` with
    ``ctr = c(i) * blocks_per_sample + b`` (big-endian, 64 bits) and
    ``c(i) = i``, or ``i mod ctr_reset_period`` when the fault is enabled.
    """

    name = "aes_ctr"
    deterministic = False
    has_decryptor = True

    def __init__(self, plaintext_bits=128, faults: FaultConfig | None = None):
        if plaintext_bits % 128:
            raise UsageError("aes_ctr plaintext width must be a multiple of 128 bits")
        super().__init__(plaintext_bits, plaintext_bits, faults)
        if self.faults.ctr_reset_period is not None:
            self.name = "aes_ctr_faulted"
        self.cipher = None
        self.iv = None

    @property
    def blocks_per_sample(self) -> int:
        return self.plaintext_bits // 128

    def keygen(self, kappa=128, seed=0):
        if kappa not in (None, 128):
            raise UsageError("AES-128 only supports kappa=128")
        self.key_seed = rng.derive_seed(seed, "aes", "key")
        self.cipher = Aes128(rng.stream_bytes(self.key_seed, 16))
        self.iv = rng.stream_bytes(rng.derive_seed(seed, "aes", "iv"), 8)
        return self.cipher.key, self.iv

    def counter_for(self, index) -> int:
        period = self.faults.ctr_reset_period
        return index % period if period else index

    def keystream(self, index) -> bytes:
        self._check_keyed()
        base = self.counter_for(int(index)) * self.blocks_per_sample
        return b"".join(
            self.cipher.encrypt_block(self.iv + ((base + b) & 0xFFFFFFFFFFFFFFFF).to_bytes(8, "big"))
            for b in range(self.blocks_per_sample)
        )

    def encrypt_bytes(self, message, index):
        _check_width(self, message, 16)
        return xor_bytes(message, self.keystream(index))

    decrypt_bytes = encrypt_bytes


class DesEcb(CipherScheme):
    name = "des"
    deterministic = True
    has_decryptor = True

    def __init__(self, plaintext_bits=64):
        if plaintext_bits % 64:
            raise UsageError("des plaintext width must be a multiple of 64 bits")
        super().__init__(plaintext_bits, plaintext_bits)
        self.cipher = None

    def keygen(self, kappa=56, seed=0):
        self.key_seed = rng.derive_seed(seed, "des", "key")
        self.cipher = Des(rng.stream_bytes(self.key_seed, 8))
        return self.cipher.key

    def encrypt_bytes(self, message, index):
        self._check_keyed()
        _check_width(self, message, 8)
        return b"".join(self.cipher.encrypt_block(message[i : i + 8]) for i in range(0, len(message), 8))

    def decrypt_bytes(self, ciphertext, index):
        self._check_keyed()
        return b"".join(self.cipher.decrypt_block(ciphertext[i : i + 8]) for i in range(0, len(ciphertext), 8))


class DesRandomized(CipherScheme):
    """DES with one fresh random 64-bit block prepended, CBC-chained under a fixed IV.

    ``c0 = E(IV ^ r)``, ``c_j = E(c_{j-1} ^ m_j)``; ciphertext is 64 bits wider
    than the message. ``r`` is derived from the sample index.
    """

    name = "des_rand"
    deterministic = False
    has_decryptor = True

    def __init__(self, plaintext_bits=64):
        if plaintext_bits % 64:
            raise UsageError("des_rand plaintext width must be a multiple of 64 bits")
        super().__init__(plaintext_bits, plaintext_bits + 64)
        self.cipher = None
        self.iv = None
        self._pad_seed = None

    def keygen(self, kappa=56, seed=0):
        self.key_seed = rng.derive_seed(seed, "des", "key")
        self.cipher = Des(rng.stream_bytes(self.key_seed, 8))
        self.iv = rng.stream_bytes(rng.derive_seed(seed, "des", "iv"), 8)
        self._pad_seed = rng.derive_seed(seed, "des_rand", "prefix")
        return self.cipher.key, self.iv

    def prefix_block(self, index) -> bytes:
        return rng.stream_bytes(rng.derive_seed(self._pad_seed, int(index)), 8)

    def encrypt_bytes(self, message, index):
        self._check_keyed()
        _check_width(self, message, 8)
        prev = self.cipher.encrypt_block(xor_bytes(self.iv, self.prefix_block(index)))
        out = [prev]
        for i in range(0, len(message), 8):
            prev = self.cipher.encrypt_block(xor_bytes(prev, message[i : i + 8]))
            out.append(prev)
        return b"".join(out)

    def decrypt_bytes(self, ciphertext, index):
        self._check_keyed()
        blocks = [ciphertext[i : i + 8] for i in range(0, len(ciphertext), 8)]
        return b"".join(
            xor_bytes(self.cipher.decrypt_block(blocks[j]), blocks[j - 1]) for j in range(1, len(blocks))
        )
