import csv
import math

import numpy as np
import pytest

from cryptaudit import datagen, mine, nncore
from cryptaudit.ciphers import keyed_scheme
from cryptaudit.errors import UsageError


def y_equals_x(bits, rows, seed, split):
    x = datagen.gen_plaintexts("uniform", rows, bits, seed)
    return datagen.SampleSet("y=x", bits, bits, x, x, np.arange(rows) % 2, split)


def test_pair_batches_bijection_and_seeding():
    x = np.arange(20.0).reshape(10, 2)
    y = np.arange(30.0).reshape(10, 3)
    joint, marg = mine.pair_batches(x, y, np.random.default_rng(4))
    assert np.array_equal(joint, np.hstack([x, y]))
    assert np.array_equal(marg[:, :2], x)
    assert sorted(map(tuple, marg[:, 2:])) == sorted(map(tuple, y))
    again = mine.pair_batches(x, y, np.random.default_rng(4))[1]
    assert np.array_equal(marg, again)


def test_pair_batches_single_row():
    joint, marg = mine.pair_batches([[1.0]], [[0.0]], np.random.default_rng(0))
    assert np.array_equal(joint, marg)


def test_pair_batches_row_mismatch():
    with pytest.raises(UsageError):
        mine.pair_batches(np.zeros((3, 1)), np.zeros((2, 1)), np.random.default_rng(0))


def test_derangement_has_no_fixed_points():
    gen = np.random.default_rng(0)
    for n in (2, 3, 10, 500):
        perm = mine.derangement(n, gen)
        assert sorted(perm) == list(range(n)) and not np.any(perm == np.arange(n))


def test_bit_maps():
    assert mine.bits_to_reals([0, 1], "pm1").tolist() == [-1.0, 1.0]
    assert mine.bits_to_reals([0, 1]).tolist() == [0.0, 1.0]
    with pytest.raises(UsageError):
        mine.bits_to_reals([0], "xy")


def test_zero_critic_gives_zero():
    ss = y_equals_x(8, 50, 0, "test")
    net = nncore.zero_network([16, 5, 1])
    for perm in mine.PERMUTATIONS:
        assert mine.evaluate_mi(net, ss, permutation=perm, repeats=3) == 0.0


def test_width_mismatch():
    net = nncore.init_network([10, 4, 1], 0)
    with pytest.raises(UsageError):
        mine.evaluate_mi(net, y_equals_x(8, 20, 0, "test"))


def test_split_validation_keeps_balance():
    train, _ = datagen.build_sampleset(datagen.DatasetSpec(n_train=1000, n_test=20), keyed_scheme("identity", 0))
    fit, val = mine.split_validation(train, 0.1)
    assert (len(fit), len(val)) == (900, 100)
    assert fit.class_counts() == (450, 450) and val.class_counts() == (50, 50)
    rows = {r.tobytes() for r in fit.plaintexts[fit.labels == 1]}
    assert not any(r.tobytes() in rows for r in val.plaintexts[val.labels == 1])


def test_trace_shape_and_csv(tmp_path):
    cfg = nncore.TrainConfig(epochs=5, batch_size=64, seed=1)
    net, trace = mine.train_mi(y_equals_x(4, 300, 1, "train"), cfg, validation_fraction=0.1)
    assert len(trace) == 5 and trace.epoch == list(range(5))
    assert all(math.isfinite(v) for v in trace.train_mi_nats + trace.validation_mi_nats)
    assert 0 <= trace.selected_epoch < 5
    trace.write_csv(tmp_path / "t.csv")
    with open(tmp_path / "t.csv") as fh:
        rows = list(csv.reader(fh))
    assert tuple(rows[0]) == mine.TRACE_COLUMNS and len(rows) == 6


def test_training_is_deterministic():
    cfg = nncore.TrainConfig(epochs=3, batch_size=50, seed=2)
    ss = y_equals_x(4, 200, 3, "train")
    a, ta = mine.train_mi(ss, cfg)
    b, tb = mine.train_mi(ss, cfg)
    assert ta.train_mi_nats == tb.train_mi_nats
    assert all(np.array_equal(p, q) for p, q in zip(a.parameters(), b.parameters()))


def test_y_equals_x_four_bits():
    cfg = nncore.TrainConfig(epochs=300, batch_size=500, seed=0)
    net, _ = mine.train_mi(y_equals_x(4, 4000, 1, "train"), cfg)
    estimate = mine.evaluate_mi(net, y_equals_x(4, 2000, 2, "test"))
    assert 2.40 <= estimate <= 2.78


def test_otp_desk_estimates():
    train, test = datagen.build_sampleset(datagen.DatasetSpec.desk(seed=0), keyed_scheme("otp", 0))
    result, _ = mine.run_mine(train, test, nncore.TrainConfig(seed=0))
    trace = result.trace
    assert -0.05 <= trace.train_mi_nats[trace.selected_epoch] <= 0.10
    assert abs(result.test_mi_nats) <= 0.05
    doc = result.to_dict()
    assert doc["evaluation"]["selected_epoch"] == trace.selected_epoch
