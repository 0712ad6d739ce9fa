import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from cryptaudit import cli, datagen
from cryptaudit.ciphers import keyed_scheme
from cryptaudit.errors import FormatError, UsageError


def small_sets(name="identity", seed=0, **kw):
    spec = datagen.DatasetSpec(n_train=200, n_test=40, seed=seed)
    return datagen.build_sampleset(spec, keyed_scheme(name, seed, **kw))


def test_zero_plaintexts():
    assert np.array_equal(datagen.gen_plaintexts("zero", 3, 8, 5), np.zeros((3, 8), dtype=np.uint8))


def test_bad_arguments():
    with pytest.raises(UsageError):
        datagen.gen_plaintexts("uniform", 0, 8, 1)
    with pytest.raises(UsageError):
        datagen.gen_plaintexts("gaussian", 3, 8, 1)
    with pytest.raises(UsageError):
        datagen.DatasetSpec(n_train=11)


def test_uniform_is_deterministic_and_fair():
    a = datagen.gen_plaintexts("uniform", 100_000, 128, 42)
    b = datagen.gen_plaintexts("uniform", 100_000, 128, 42)
    assert np.array_equal(a, b)
    frac = a.mean(axis=0)
    assert frac.min() >= 0.494 and frac.max() <= 0.506


def test_rows_are_order_independent():
    full = datagen.gen_plaintexts("uniform", 50, 32, 9)
    part = datagen.gen_plaintexts("uniform", 3, 32, 9, rows=[40, 7, 13])
    assert np.array_equal(part, full[[40, 7, 13]])


def test_identity_ciphertexts_equal_plaintexts():
    train, test = small_sets()
    assert np.array_equal(train.plaintexts, train.ciphertexts)
    assert np.array_equal(test.plaintexts, test.ciphertexts)


def test_balance_and_zero_class():
    train, test = small_sets("otp")
    for ss in (train, test):
        assert ss.class_counts() == (len(ss) // 2, len(ss) // 2)
        assert not ss.plaintexts[ss.labels == 0].any()
        assert list(ss.labels[:4]) == [0, 1, 0, 1]


def test_default_sizes():
    spec = datagen.DatasetSpec()
    assert (spec.n_train, spec.n_test) == (100_000, 20_000)
    train, test = datagen.build_sampleset(spec, keyed_scheme("identity", 0))
    assert train.class_counts() == (50_000, 50_000)
    assert test.class_counts() == (10_000, 10_000)


def test_xor_const_zero_rows_equal_key():
    scheme = keyed_scheme("xor_const", 3)
    train, _ = datagen.build_sampleset(datagen.DatasetSpec(n_train=100, n_test=20, seed=3), scheme)
    zero_cts = train.ciphertexts[train.labels == 0]
    assert np.all(zero_cts == zero_cts[0])
    assert np.array_equal(zero_cts[0], scheme.encrypt_batch(np.zeros((1, 16), np.uint8), [0])[0])


def test_no_uniform_collisions_between_splits():
    spec = datagen.DatasetSpec.desk(seed=1)
    train, test = datagen.build_sampleset(spec, keyed_scheme("identity", 1, plaintext_bits=64))
    tr = {r.tobytes() for r in train.plaintexts[train.labels == 1]}
    assert not any(r.tobytes() in tr for r in test.plaintexts[test.labels == 1])


def test_regeneration_is_bit_identical():
    a = small_sets("aes_ctr", seed=4)
    b = small_sets("aes_ctr", seed=4)
    assert datagen.fingerprint(*a) == datagen.fingerprint(*b)
    assert datagen.fingerprint(*a) != datagen.fingerprint(*small_sets("aes_ctr", seed=5))


def test_roundtrip_and_size(tmp_path):
    train, test = small_sets("des")
    for ss in (train, test):
        path = tmp_path / f"{ss.split}.cads"
        datagen.save_sampleset(ss, path)
        back = datagen.load_sampleset(path)
        assert (back.scheme_name, back.plaintext_bits, back.ciphertext_bits, back.split, back.seed) == (
            ss.scheme_name, ss.plaintext_bits, ss.ciphertext_bits, ss.split, ss.seed)
        for f in ("plaintexts", "ciphertexts", "labels"):
            assert np.array_equal(getattr(back, f), getattr(ss, f))
        assert path.stat().st_size == datagen.expected_file_size(ss.scheme_name, 64, 64, len(ss))


def test_file_size_100k_by_256():
    r = np.random.default_rng(0)
    n = 100_000
    ss = datagen.SampleSet("x", 256, 256, r.integers(0, 2, (n, 256)), r.integers(0, 2, (n, 256)), np.arange(n) % 2)
    data = datagen.to_bytes(ss)
    assert len(data) == datagen.header_size("x") + 32 * n * 2 + n


def test_corrupt_files_rejected():
    train, _ = small_sets()
    data = datagen.to_bytes(train)
    with pytest.raises(FormatError):
        datagen.from_bytes(b"XADS" + data[4:])
    with pytest.raises(FormatError):
        datagen.from_bytes(data[:-5])
    with pytest.raises(FormatError):
        datagen.from_bytes(data[:4] + (9).to_bytes(4, "little") + data[8:])
    with pytest.raises(FormatError):
        datagen.from_bytes(data + b"\0")


def test_gen_command_is_reproducible(tmp_path, capsys):
    outs = []
    for d in ("a", "b"):
        args = ["gen", "--scheme", "otp", "--seed", "7", "--n-train", "100", "--n-test", "20", "--out", str(tmp_path / d)]
        assert cli.main(args) == 0
        outs.append({p.name: p.read_bytes() for p in (tmp_path / d).iterdir()})
    assert outs[0] == outs[1] and len(outs[0]) == 2


@settings(max_examples=50, deadline=None)
@given(
    name=st.text(max_size=12),
    pt_bits=st.integers(1, 40),
    ct_bits=st.integers(1, 40),
    pairs=st.integers(1, 6),
    split=st.sampled_from(datagen.SPLITS),
    seed=st.integers(0, 2**64 - 1),
    data=st.randoms(use_true_random=False),
)
def test_roundtrip_property(name, pt_bits, ct_bits, pairs, split, seed, data):
    r = np.random.default_rng(data.getrandbits(32))
    n = 2 * pairs
    ss = datagen.SampleSet(name, pt_bits, ct_bits, r.integers(0, 2, (n, pt_bits)), r.integers(0, 2, (n, ct_bits)),
                           np.arange(n) % 2, split, seed)
    blob = datagen.to_bytes(ss)
    assert len(blob) == datagen.expected_file_size(name, pt_bits, ct_bits, n)
    back = datagen.from_bytes(blob)
    assert datagen.to_bytes(back) == blob
    assert np.array_equal(back.plaintexts, ss.plaintexts) and np.array_equal(back.ciphertexts, ss.ciphertexts)
