"""IND-CPA distinguishing game played by a binary cross-entropy classifier.

The classifier learns to tell ciphertexts of all-zero plaintexts (label 0)
from ciphertexts of uniform plaintexts (label 1). Every test row is then one
challenge of the game, and the audit reports the fraction guessed right.
"""

from __future__ import annotations

import csv
import json
import math
import time
from dataclasses import dataclass, field

import numpy as np

from . import nncore, rng
from .errors import NumericFailure, UsageError
from .mine import bits_to_reals

BROKEN = "BROKEN"
SECURE = "SECURE-CONSISTENT"
MIN_TRIALS = 1000
VERDICT_SIGMAS = 4.0
TRACE_COLUMNS = ("epoch", "train_bce_nats", "train_accuracy", "seconds")


@dataclass
class CpaTrace:
    epoch: list[int] = field(default_factory=list)
    train_bce_nats: list[float] = field(default_factory=list)
    train_accuracy: list[float] = field(default_factory=list)
    seconds: list[float] = field(default_factory=list)

    def append(self, epoch, bce, acc, seconds):
        self.epoch.append(int(epoch))
        self.train_bce_nats.append(float(bce))
        self.train_accuracy.append(float(acc))
        self.seconds.append(float(seconds))

    def __len__(self):
        return len(self.epoch)

    def write_csv(self, path):
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(TRACE_COLUMNS)
            for e, bce, acc, sec in zip(self.epoch, self.train_bce_nats, self.train_accuracy, self.seconds):
                writer.writerow([e, repr(bce), repr(acc), f"{sec:.3f}"])


@dataclass
class CpaModel:
    net: nncore.MlpNetwork
    config: dict
    trace: CpaTrace
    bit_map: str = "01"

    @property
    def input_width(self) -> int:
        return self.net.input_width

    def predict(self, ciphertexts) -> np.ndarray:
        return nncore.forward(self.net, bits_to_reals(ciphertexts, self.bit_map))


@dataclass
class GameResult:
    scheme: str
    trials: int
    correct: int
    confusion: list  # confusion[b][guess]
    threshold: float = 0.5

    def __post_init__(self):
        if not 0 <= self.correct <= self.trials:
            raise UsageError("correct must lie in [0, trials]")

    @property
    def accuracy(self) -> float:
        return self.correct / self.trials if self.trials else float("nan")

    def to_dict(self) -> dict:
        return {
            "scheme": self.scheme,
            "trials": self.trials,
            "correct": self.correct,
            "accuracy": self.accuracy,
            "confusion": self.confusion,
            "threshold": self.threshold,
        }


def train_classifier(train_set, cfg: nncore.TrainConfig, bit_map="01", on_epoch=None) -> CpaModel:
    """Fit a sigmoid-output network to (ciphertext -> label) with BCE."""
    x = bits_to_reals(train_set.ciphertexts, bit_map)
    labels = train_set.labels.astype(np.float64)
    n = len(x)
    if cfg.batch_size > n:
        raise UsageError(f"batch size {cfg.batch_size} exceeds the {n} training rows")
    net = nncore.init_network(
        cfg.layer_dims(x.shape[1]), rng.derive_seed(cfg.seed, "cpa", "init"), output_activation="sigmoid"
    )
    gen = np.random.default_rng(rng.derive_seed(cfg.seed, "cpa", "batches"))
    opt = nncore.Optimizer(cfg.optimizer, cfg.learning_rate, net)
    n_batches = n // cfg.batch_size
    trace = CpaTrace()
    start = time.perf_counter()
    for epoch in range(cfg.epochs):
        order = gen.permutation(n)
        losses, hits = [], 0
        for b in range(n_batches):
            idx = order[b * cfg.batch_size : (b + 1) * cfg.batch_size]
            try:
                loss, pred, grads = nncore.loss_and_gradients(net, x[idx], "bce", labels=labels[idx])
                if not np.isfinite(loss):
                    raise NumericFailure("non-finite loss")
                net = opt.step(net, grads)
            except NumericFailure as exc:
                raise NumericFailure(
                    f"classifier training diverged at epoch {epoch}, batch {b}: {exc}", exc.layer, epoch, b
                ) from exc
            losses.append(loss)
            hits += int(np.sum((pred > 0.5) == (labels[idx] > 0.5)))
        trace.append(epoch, np.mean(losses), hits / (n_batches * cfg.batch_size), time.perf_counter() - start)
        if on_epoch is not None:
            on_epoch(epoch, trace)
    return CpaModel(net, cfg.to_dict(), trace, bit_map)


def run_game(model: CpaModel, test_set, threshold=0.5) -> GameResult:
    """Score every row as one challenge: guess 1 iff the output exceeds ``threshold``.

    An output of exactly ``threshold`` guesses 0.
    """
    if test_set.ciphertext_bits != model.input_width:
        raise UsageError(
            f"model expects {model.input_width}-bit ciphertexts, test set has {test_set.ciphertext_bits}"
        )
    guesses = (model.predict(test_set.ciphertexts) > threshold).astype(np.int64)
    truth = test_set.labels.astype(np.int64)
    confusion = np.zeros((2, 2), dtype=np.int64)
    np.add.at(confusion, (truth, guesses), 1)
    return GameResult(
        scheme=test_set.scheme_name,
        trials=len(truth),
        correct=int(np.trace(confusion)),
        confusion=confusion.tolist(),
        threshold=threshold,
    )


def verdict_threshold(trials) -> float:
    return 0.5 + VERDICT_SIGMAS * math.sqrt(0.25 / trials)


def verdict(result: GameResult, trials=None) -> str:
    """BROKEN iff accuracy beats 1/2 by more than four binomial standard errors."""
    trials = result.trials if trials is None else trials
    if trials < MIN_TRIALS:
        raise UsageError(f"a verdict needs at least {MIN_TRIALS} trials, got {trials}")
    return BROKEN if result.accuracy > verdict_threshold(trials) else SECURE


@dataclass
class CpaResult:
    game: GameResult
    train_game: GameResult
    model: CpaModel
    fingerprint: str = ""

    @property
    def accuracy(self) -> float:
        return self.game.accuracy

    @property
    def verdict(self) -> str:
        return verdict(self.game)

    def to_dict(self) -> dict:
        return {
            "kind": "cpa",
            **self.game.to_dict(),
            "verdict": self.verdict,
            "verdict_threshold": verdict_threshold(self.game.trials),
            "train_accuracy": self.train_game.accuracy,
            "train_test_gap": self.train_game.accuracy - self.game.accuracy,
            "final_train_bce_nats": self.model.trace.train_bce_nats[-1],
            "config": self.model.config,
            "bit_map": self.model.bit_map,
            "dataset_fingerprint": self.fingerprint,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)


def run_cpa(train_set, test_set, cfg: nncore.TrainConfig, *, bit_map="01", fingerprint="", on_epoch=None):
    model = train_classifier(train_set, cfg, bit_map=bit_map, on_epoch=on_epoch)
    return CpaResult(run_game(model, test_set), run_game(model, train_set), model, fingerprint)
