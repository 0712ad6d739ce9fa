import numpy as np
import pytest

from cryptaudit import datagen, huncc
from cryptaudit.ciphers import keyed_scheme
from cryptaudit.errors import UsageError


def test_field_identities():
    for x in range(256):
        assert huncc.gf_mul(x, 1) == x
        assert huncc.gf_add(x, x) == 0
    assert huncc.gf_mul(0x53, 0xCA) == 0x01
    for a in range(1, 256):
        assert huncc.gf_mul(a, huncc.gf_inv(a)) == 1
    with pytest.raises(UsageError):
        huncc.gf_inv(0)


def test_field_axioms_on_random_triples():
    r = np.random.default_rng(1)
    a, b, c = (r.integers(0, 256, 100_000, dtype=np.uint8) for _ in range(3))
    mul = huncc.MUL
    assert np.array_equal(mul[mul[a, b], c], mul[a, mul[b, c]])
    assert np.array_equal(mul[a, b], mul[b, a])
    assert np.array_equal(mul[a, b ^ c], mul[a, b] ^ mul[a, c])


@pytest.mark.parametrize("seed", [0, 1, 99])
def test_generator_inverse(seed):
    m = huncc.make_generator(seed, 8)
    assert np.array_equal(huncc.gf_matmul(m.H, m.G), np.eye(8, dtype=np.uint8))
    assert np.array_equal(m.G, huncc.make_generator(seed, 8).G)


def test_generator_vector_roundtrip():
    m = huncc.make_generator(3, 8)
    v = np.random.default_rng(0).integers(0, 256, (8, 1000), dtype=np.uint8)
    assert np.array_equal(huncc.gf_matmul(m.H, huncc.gf_matmul(m.G, v)), v)


def test_generator_size_checked():
    with pytest.raises(UsageError):
        huncc.make_generator(0, 1)


def test_identity_code_without_encryption():
    cfg = huncc.HunccConfig(n_channels=4, channel_bytes=3, encrypted_channels=0)
    eye = huncc.GenMatrix.from_matrix(np.eye(4, dtype=np.uint8))
    msg = np.random.default_rng(0).integers(0, 256, (4, 3), dtype=np.uint8)
    assert np.array_equal(huncc.huncc_encode(msg, cfg, eye), msg)
    assert np.array_equal(huncc.huncc_decode(msg, cfg, eye), msg)


def test_identity_code_with_identity_inner():
    cfg = huncc.HunccConfig(n_channels=4, channel_bytes=3, encrypted_channels=1, inner_scheme="identity")
    eye = huncc.GenMatrix.from_matrix(np.eye(4, dtype=np.uint8))
    inner = huncc.make_inner(cfg, 0)
    msg = np.random.default_rng(1).integers(0, 256, (4, 3), dtype=np.uint8)
    assert np.array_equal(huncc.huncc_encode(msg, cfg, eye, inner), msg)


def test_hand_example():
    cfg = huncc.HunccConfig(n_channels=2, channel_bytes=1, encrypted_channels=0)
    g = huncc.GenMatrix.from_matrix([[1, 1], [0, 1]])
    out = huncc.huncc_encode(np.array([[0x05], [0x03]], dtype=np.uint8), cfg, g)
    assert out.ravel().tolist() == [0x06, 0x03]


def test_dimension_mismatch():
    cfg = huncc.HunccConfig(n_channels=2, channel_bytes=1, encrypted_channels=0)
    g = huncc.make_generator(0, 2)
    with pytest.raises(UsageError):
        huncc.huncc_encode(np.zeros((3, 1), np.uint8), cfg, g)


def test_linearity_without_encryption():
    cfg = huncc.HunccConfig(encrypted_channels=0)
    g = huncc.make_generator(5, 8)
    r = np.random.default_rng(2)
    a, b = (r.integers(0, 256, (8, 16), dtype=np.uint8) for _ in range(2))
    assert np.array_equal(huncc.huncc_encode(a ^ b, cfg, g), huncc.huncc_encode(a, cfg, g) ^ huncc.huncc_encode(b, cfg, g))


def test_default_config_roundtrip():
    cfg = huncc.HunccConfig()
    scheme = huncc.HunccScheme(cfg)
    scheme.keygen(None, 11)
    r = np.random.default_rng(3)
    for i in range(1000):
        msg = r.integers(0, 256, cfg.message_bytes, dtype=np.uint8).tobytes()
        assert scheme.decrypt_bytes(scheme.encrypt_bytes(msg, i), i) == msg


def test_default_config_encrypts_first_channel():
    cfg = huncc.HunccConfig()
    scheme = huncc.HunccScheme(cfg)
    scheme.keygen(None, 0)
    msg = np.random.default_rng(4).integers(0, 256, (8, 16), dtype=np.uint8)
    coded = huncc.huncc_encode(msg, huncc.HunccConfig(encrypted_channels=0), scheme.matrix)
    ct = np.frombuffer(scheme.encrypt_bytes(msg.tobytes(), 0), dtype=np.uint8).reshape(8, 16)
    assert np.array_equal(ct[1:], coded[1:])
    assert not np.array_equal(ct[0], coded[0])


def test_corrupted_clear_channel_changes_decode():
    cfg = huncc.HunccConfig()
    scheme = huncc.HunccScheme(cfg)
    scheme.keygen(None, 0)
    msg = np.random.default_rng(5).integers(0, 256, cfg.message_bytes, dtype=np.uint8).tobytes()
    ct = bytearray(scheme.encrypt_bytes(msg, 0))
    ct[cfg.channel_bytes * 3] ^= 0x01
    assert scheme.decrypt_bytes(bytes(ct), 0) != msg


def test_individual_dataset_shape():
    cfg = huncc.HunccConfig(j_star=3)
    spec = datagen.DatasetSpec(n_train=100, n_test=20, seed=2)
    train, test = huncc.build_individual_dataset(cfg, spec)
    lo, hi = 2 * 128, 3 * 128
    for ss in (train, test):
        zero, one = ss.plaintexts[ss.labels == 0], ss.plaintexts[ss.labels == 1]
        assert not zero[:, lo:hi].any()
        assert zero[:, :lo].any() and zero[:, hi:].any()
        assert one[:, lo:hi].any()
        assert ss.class_counts() == (len(ss) // 2, len(ss) // 2)
    with pytest.raises(UsageError):
        huncc.build_individual_dataset(cfg, spec, j_star=9)


def test_standard_dataset_uses_zero_class():
    scheme = keyed_scheme("huncc", 0)
    train, _ = datagen.build_sampleset(datagen.DatasetSpec(n_train=20, n_test=4), scheme)
    assert not train.plaintexts[train.labels == 0].any()
    assert "code" in scheme.describe()["huncc"]
