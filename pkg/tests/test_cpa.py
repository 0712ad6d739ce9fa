import math

import numpy as np
import pytest

from cryptaudit import cpa, datagen, nncore
from cryptaudit.ciphers import keyed_scheme
from cryptaudit.errors import UsageError


def sets(name, seed=0, n_train=datagen.DESK_TRAIN, n_test=datagen.DESK_TEST, **kw):
    spec = datagen.DatasetSpec(n_train=n_train, n_test=n_test, seed=seed)
    return datagen.build_sampleset(spec, keyed_scheme(name, seed, **kw))


def game(acc, trials):
    return cpa.GameResult("x", trials, round(acc * trials), [[0, 0], [0, 0]])


def test_verdict_examples():
    assert cpa.verdict(game(1.0, 20000)) == cpa.BROKEN
    assert cpa.verdict(game(0.5, 20000)) == cpa.SECURE
    assert cpa.verdict_threshold(20000) == pytest.approx(0.5141, abs=1e-4)
    assert cpa.verdict(game(0.515, 20000)) == cpa.BROKEN
    assert cpa.verdict(game(0.514, 20000)) == cpa.SECURE
    with pytest.raises(UsageError):
        cpa.verdict(game(1.0, 999))


def test_game_result_validation():
    with pytest.raises(UsageError):
        cpa.GameResult("x", 10, 11, [[0, 0], [0, 0]])


def test_zero_model_guesses_zero_on_ties():
    _, test = sets("identity", n_train=20, n_test=2000)
    model = cpa.CpaModel(nncore.zero_network([16, 4, 1], output_activation="sigmoid"), {}, cpa.CpaTrace())
    assert np.all(model.predict(test.ciphertexts) == 0.5)
    result = cpa.run_game(model, test)
    assert result.accuracy == 0.5
    assert result.confusion == [[1000, 0], [1000, 0]]
    assert cpa.verdict(result) == cpa.SECURE


def test_width_mismatch():
    _, test = sets("identity", n_train=20, n_test=20)
    model = cpa.CpaModel(nncore.zero_network([8, 1], output_activation="sigmoid"), {}, cpa.CpaTrace())
    with pytest.raises(UsageError):
        cpa.run_game(model, test)


def test_identity_is_separable():
    train, test = sets("identity")
    result = cpa.run_cpa(train, test, nncore.TrainConfig(seed=0))
    assert result.model.trace.train_bce_nats[-1] < 0.01
    assert result.accuracy == 1.0 and result.verdict == cpa.BROKEN
    assert sum(map(sum, result.game.confusion)) == len(test)


def test_otp_without_memorizable_rows_stays_at_chance():
    # 4-bit ciphertexts take 16 values, so the net cannot memorize rows
    train, test = sets("otp", plaintext_bits=4)
    result = cpa.run_cpa(train, test, nncore.TrainConfig(seed=0))
    # epoch 0 averages over the untrained start
    bce = result.model.trace.train_bce_nats[1:]
    assert all(abs(v - math.log(2)) <= 0.05 for v in bce)
    assert 0.45 <= result.accuracy <= 0.55
    assert abs(result.train_game.accuracy - result.accuracy) <= 0.05
    assert result.verdict == cpa.SECURE


def test_label_symmetry():
    train, test = sets("xor_const", n_train=2000, n_test=1000)
    cfg = nncore.TrainConfig(epochs=30, batch_size=200, seed=3)
    flip = lambda ss: datagen.SampleSet(ss.scheme_name, ss.plaintext_bits, ss.ciphertext_bits,
                                         ss.plaintexts, ss.ciphertexts, 1 - ss.labels, ss.split, ss.seed)
    a = cpa.run_cpa(train, test, cfg)
    b = cpa.run_cpa(flip(train), flip(test), cfg)
    assert a.accuracy == b.accuracy == 1.0


def test_report_fields():
    train, test = sets("identity", n_train=2000, n_test=1000)
    doc = cpa.run_cpa(train, test, nncore.TrainConfig(epochs=2, batch_size=500)).to_dict()
    assert doc["kind"] == "cpa" and doc["trials"] == 1000
    assert doc["train_test_gap"] == pytest.approx(doc["train_accuracy"] - doc["accuracy"])
