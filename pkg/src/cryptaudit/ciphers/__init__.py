"""Cipher suite and the name-based scheme registry used by the CLI."""

from __future__ import annotations

from ..errors import UsageError
from .base import CipherScheme, FaultConfig, bits_to_bytes, bytes_to_bits
from .modes import AesCtr, AesEcb, DesEcb, DesRandomized
from .rsa import RsaKey, RsaOaep, RsaPlain, generate_key
from .simple import ConstantXor, Identity, OneTimePad

SCHEME_NAMES = (
    "identity",
    "otp",
    "xor_const",
    "aes_ecb",
    "aes_ctr",
    "aes_ctr_faulted",
    "des",
    "des_rand",
    "rsa_plain",
    "rsa_oaep",
    "rsa_oaep_faulted",
    "huncc",
    "huncc_individual",
)

DEFAULT_PLAINTEXT_BITS = {
    "identity": 16,
    "otp": 16,
    "xor_const": 16,
    "aes_ecb": 128,
    "aes_ctr": 128,
    "aes_ctr_faulted": 128,
    "des": 64,
    "des_rand": 64,
    "rsa_plain": 128,
    "rsa_oaep": 128,
    "rsa_oaep_faulted": 128,
    "huncc": 1024,
    "huncc_individual": 1024,
}


def make_scheme(
    name,
    *,
    plaintext_bits=None,
    ctr_reset_period=None,
    reuse_oaep_seed_period=None,
    modulus_bits=1024,
    huncc_config=None,
) -> CipherScheme:
    """Build an un-keyed scheme by registry name.

    Faulted variants require their period; unfaulted names ignore the
    fault knobs. HUNCC names take an optional ``HunccConfig``.
    """
    if name not in SCHEME_NAMES:
        raise UsageError(f"unknown scheme {name!r}; registry: {', '.join(SCHEME_NAMES)}")
    bits = plaintext_bits or DEFAULT_PLAINTEXT_BITS[name]
    if name == "identity":
        return Identity(bits)
    if name == "otp":
        return OneTimePad(bits)
    if name == "xor_const":
        return ConstantXor(bits)
    if name == "aes_ecb":
        return AesEcb(bits)
    if name == "aes_ctr":
        return AesCtr(bits)
    if name == "aes_ctr_faulted":
        if ctr_reset_period is None:
            raise UsageError("aes_ctr_faulted needs a counter reset period")
        return AesCtr(bits, FaultConfig(ctr_reset_period=ctr_reset_period))
    if name == "des":
        return DesEcb(bits)
    if name == "des_rand":
        return DesRandomized(bits)
    if name == "rsa_plain":
        return RsaPlain(bits, modulus_bits)
    if name == "rsa_oaep":
        return RsaOaep(bits, modulus_bits)
    if name == "rsa_oaep_faulted":
        if reuse_oaep_seed_period is None:
            raise UsageError("rsa_oaep_faulted needs a padding reuse period")
        return RsaOaep(bits, modulus_bits, FaultConfig(reuse_oaep_seed_period=reuse_oaep_seed_period))
    from ..huncc import HunccConfig, HunccScheme

    cfg = huncc_config or HunccConfig()
    if plaintext_bits is not None and plaintext_bits != cfg.plaintext_bits:
        raise UsageError(f"HUNCC plaintext width is fixed by its config ({cfg.plaintext_bits} bits)")
    return HunccScheme(cfg, individual=(name == "huncc_individual"))


def keyed_scheme(name, seed, kappa=None, **kwargs) -> CipherScheme:
    scheme = make_scheme(name, **kwargs)
    scheme.keygen(kappa, seed)
    return scheme


__all__ = [
    "CipherScheme",
    "FaultConfig",
    "SCHEME_NAMES",
    "DEFAULT_PLAINTEXT_BITS",
    "make_scheme",
    "keyed_scheme",
    "bits_to_bytes",
    "bytes_to_bits",
    "Identity",
    "OneTimePad",
    "ConstantXor",
    "AesEcb",
    "AesCtr",
    "DesEcb",
    "DesRandomized",
    "RsaPlain",
    "RsaOaep",
    "RsaKey",
    "generate_key",
]
