import numpy as np
import pytest

from cryptaudit.ciphers import SCHEME_NAMES, keyed_scheme, make_scheme
from cryptaudit.ciphers.aes import Aes128
from cryptaudit.ciphers.des import Des
from cryptaudit.ciphers.rsa import RsaKey, RsaPlain, generate_key
from cryptaudit.errors import ConfigurationError, EncryptionFailure, UsageError

crypto = pytest.importorskip("cryptography")
from cryptography.hazmat.primitives import hashes  # noqa: E402
from cryptography.hazmat.primitives.asymmetric import padding, rsa  # noqa: E402
from cryptography.hazmat.primitives.ciphers import Cipher, algorithms, modes  # noqa: E402

try:
    from cryptography.hazmat.decrepit.ciphers.algorithms import TripleDES
except ImportError:  # older cryptography
    TripleDES = algorithms.TripleDES


def bits(r, n, width):
    return r.integers(0, 2, size=(n, width), dtype=np.uint8)


def test_aes_known_answer():
    aes = Aes128(bytes.fromhex("000102030405060708090a0b0c0d0e0f"))
    ct = aes.encrypt_block(bytes.fromhex("00112233445566778899aabbccddeeff"))
    assert ct.hex() == "69c4e0d86a7b0430d8cdb78070b4c55a"
    assert aes.decrypt_block(ct).hex() == "00112233445566778899aabbccddeeff"


def test_des_known_answer():
    des = Des(bytes.fromhex("133457799BBCDFF1"))
    ct = des.encrypt_block(bytes.fromhex("0123456789ABCDEF"))
    assert ct.hex().upper() == "85E813540F0AB405"
    assert des.decrypt_block(ct).hex().upper() == "0123456789ABCDEF"


def test_aes_matches_reference_library():
    r = np.random.default_rng(0)
    for _ in range(50):
        key, block = r.bytes(16), r.bytes(16)
        ref = Cipher(algorithms.AES(key), modes.ECB()).encryptor().update(block)
        assert Aes128(key).encrypt_block(block) == ref


def test_des_matches_reference_library():
    r = np.random.default_rng(1)
    for _ in range(50):
        key, block = r.bytes(8), r.bytes(8)
        ref = Cipher(TripleDES(key * 3), modes.ECB()).encryptor().update(block)
        assert Des(key).encrypt_block(block) == ref


def test_aes_ctr_matches_reference_library():
    s = keyed_scheme("aes_ctr", 4, plaintext_bits=256)
    msg = bytes(range(32))
    for index in (0, 1, 99):
        nonce = s.iv + (index * 2).to_bytes(8, "big")
        ref = Cipher(algorithms.AES(s.cipher.key), modes.CTR(nonce)).encryptor().update(msg)
        assert s.encrypt_bytes(msg, index) == ref


@pytest.mark.parametrize("name", [n for n in SCHEME_NAMES if n not in ("huncc", "huncc_individual")])
def test_roundtrip_every_scheme(name):
    kwargs = {"ctr_reset_period": 7} if name == "aes_ctr_faulted" else {}
    if name == "rsa_oaep_faulted":
        kwargs = {"reuse_oaep_seed_period": 7}
    if name.startswith("rsa"):
        kwargs["modulus_bits"] = 768
    s = keyed_scheme(name, 1, **kwargs)
    r = np.random.default_rng(2)
    for i, m in enumerate(bits(r, 20, s.plaintext_bits)):
        c = s.encrypt(m, i)
        assert c.shape == (s.ciphertext_bits,)
        assert np.array_equal(s.decrypt(c, i), m)


def test_identity_and_xor():
    ident = keyed_scheme("identity", 0)
    m = np.array([int(b) for b in f"{0xBEEF:016b}"], dtype=np.uint8)
    assert np.array_equal(ident.encrypt(m, 0), m)
    x = keyed_scheme("xor_const", 0)
    zero = np.zeros(16, dtype=np.uint8)
    assert np.array_equal(x.encrypt(zero, 0), x.key_bits)
    assert np.array_equal(x.encrypt(zero, 0), x.encrypt(zero, 5))


def test_otp_fresh_pads():
    s = keyed_scheme("otp", 0)
    m = np.random.default_rng(4).integers(0, 2, size=(1000, 16), dtype=np.uint8)
    first = s.encrypt_batch(m, np.arange(1000))
    second = s.encrypt_batch(m, np.arange(1000, 2000))
    assert np.sum(np.any(first != second, axis=1)) >= 999
    assert np.array_equal(s.encrypt_batch(first, np.arange(1000)), m)
    big = s.encrypt_batch(np.zeros((100_000, 16), dtype=np.uint8), np.arange(100_000))
    frac = big.mean(axis=0)
    assert np.all((frac > 0.49) & (frac < 0.51))


def test_aes_ecb_deterministic():
    s = keyed_scheme("aes_ecb", 0)
    m = np.ones(128, dtype=np.uint8)
    assert np.array_equal(s.encrypt(m, 0), s.encrypt(m, 17))


def test_faulted_ctr_keystream_reuse():
    p = 100
    s = keyed_scheme("aes_ctr_faulted", 0, ctr_reset_period=p)
    r = np.random.default_rng(3)
    a, b = bits(r, 2, 128)
    ca, cb = s.encrypt(a, 5), s.encrypt(b, 5 + p)
    assert np.array_equal(ca ^ cb, a ^ b)
    assert s.descriptor() == "aes_ctr_faulted;ctr_reset_period=100"
    clean = keyed_scheme("aes_ctr", 0)
    assert not np.array_equal(clean.encrypt(a, 5) ^ clean.encrypt(b, 5 + p), a ^ b)


def test_des_randomized_distinct():
    s = keyed_scheme("des_rand", 0)
    cts = s.encrypt_batch(np.zeros((1000, 64), dtype=np.uint8), np.arange(1000))
    assert len({c.tobytes() for c in cts}) >= 999
    assert s.ciphertext_bits == 128


def test_rsa_textbook_example():
    toy = RsaPlain.from_key(RsaKey(n=3233, e=17, d=2753), 8)
    assert toy.encrypt_int(65) == 2790
    assert toy.decrypt_int(2790) == 65


def test_rsa_keys_are_seeded_and_valid():
    k1, k2 = generate_key(512, seed=7), generate_key(512, seed=7)
    assert k1 == k2
    assert k1.n.bit_length() == 512
    assert (k1.e * k1.d) % k1.carmichael == 1


def test_rsa_plain_deterministic():
    s = keyed_scheme("rsa_plain", 0, modulus_bits=512)
    m = np.ones(128, dtype=np.uint8)
    assert np.array_equal(s.encrypt(m, 0), s.encrypt(m, 1))


def test_oaep_decrypts_with_reference_library():
    s = keyed_scheme("rsa_oaep", 0, modulus_bits=1024)
    k = s.key
    pub = rsa.RSAPublicNumbers(k.e, k.n)
    priv = rsa.RSAPrivateNumbers(
        k.p, k.q, k.d, k.d % (k.p - 1), k.d % (k.q - 1), pow(k.q, -1, k.p), pub
    ).private_key()
    oaep = padding.OAEP(mgf=padding.MGF1(hashes.SHA256()), algorithm=hashes.SHA256(), label=None)
    msg = bytes(range(16))
    assert priv.decrypt(s.encrypt_bytes(msg, 3), oaep) == msg
    assert s.encrypt_bytes(msg, 3) != s.encrypt_bytes(msg, 4)


def test_oaep_full_reuse_is_deterministic():
    s = keyed_scheme("rsa_oaep_faulted", 0, modulus_bits=1024, reuse_oaep_seed_period=1)
    msg = bytes(16)
    assert s.encrypt_bytes(msg, 0) == s.encrypt_bytes(msg, 9)
    assert s.descriptor() == "rsa_oaep_faulted;reuse_oaep_seed_period=1"


def test_oaep_message_too_long_is_an_encryption_failure():
    s = keyed_scheme("rsa_oaep", 0, modulus_bits=512)
    with pytest.raises(EncryptionFailure) as info:
        s.encrypt_batch(np.zeros((2, 128), dtype=np.uint8), [10, 11])
    assert info.value.sample_index == 10


def test_registry_errors():
    with pytest.raises(UsageError, match="registry"):
        make_scheme("rot13")
    with pytest.raises(UsageError):
        make_scheme("aes_ctr_faulted")
    with pytest.raises(ConfigurationError):
        make_scheme("aes_ecb").encrypt(np.zeros(128, dtype=np.uint8), 0)


def test_aes_key_is_128_bits():
    assert len(keyed_scheme("aes_ecb", 9).cipher.key) == 16
