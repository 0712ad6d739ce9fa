"""Neural mutual-information estimation between plaintexts and ciphertexts.

A critic scores (plaintext, ciphertext) pairs. Training maximizes the
Donsker-Varadhan bound ``mean T(joint) - log mean exp T(marginal)`` with a
``0.1 * (log mean exp)^2`` stabilizer; marginal pairs come from permuting
the ciphertexts within a batch.
"""

from __future__ import annotations

import csv
import json
import time
from dataclasses import dataclass, field

import numpy as np

from . import nncore, rng
from .errors import NumericFailure, UsageError

BIT_MAPS = {"01": (0.0, 1.0), "pm1": (-1.0, 1.0)}
PERMUTATIONS = ("derangement", "uniform")
TRACE_COLUMNS = ("epoch", "train_mi_nats", "stabilized_objective", "seconds", "validation_mi_nats")
VALIDATION_REPEATS = 4
DEFAULT_VALIDATION_FRACTION = 0.1


def bits_to_reals(bits, bit_map="01") -> np.ndarray:
    if bit_map not in BIT_MAPS:
        raise UsageError(f"unknown bit map {bit_map!r}; choose from {sorted(BIT_MAPS)}")
    lo, hi = BIT_MAPS[bit_map]
    bits = np.asarray(bits)
    return np.where(bits > 0, hi, lo).astype(np.float64)


def derangement(n, generator: np.random.Generator) -> np.ndarray:
    """Uniformly random permutation without fixed points, by rejection."""
    if n < 2:
        raise UsageError("a derangement needs at least 2 elements")
    idx = np.arange(n)
    while True:
        perm = generator.permutation(n)
        if not np.any(perm == idx):
            return perm


def pair_batches(x_batch, y_batch, generator: np.random.Generator):
    """Joint pairs ``(x_i, y_i)`` and marginal pairs ``(x_i, y_pi(i))`` for a uniform permutation ``pi``."""
    x = np.asarray(x_batch, dtype=np.float64)
    y = np.asarray(y_batch, dtype=np.float64)
    if len(x) != len(y):
        raise UsageError(f"x has {len(x)} rows but y has {len(y)}")
    perm = generator.permutation(len(y))
    return np.hstack([x, y]), np.hstack([x, y[perm]])


@dataclass
class MiTrainingTrace:
    epoch: list[int] = field(default_factory=list)
    train_mi_nats: list[float] = field(default_factory=list)
    stabilized_objective: list[float] = field(default_factory=list)
    seconds: list[float] = field(default_factory=list)
    validation_mi_nats: list[float] = field(default_factory=list)
    selected_epoch: int | None = None

    def append(self, epoch, mi, objective, seconds, validation=float("nan")):
        self.epoch.append(int(epoch))
        self.train_mi_nats.append(float(mi))
        self.stabilized_objective.append(float(objective))
        self.seconds.append(float(seconds))
        self.validation_mi_nats.append(float(validation))

    def __len__(self):
        return len(self.epoch)

    @property
    def best(self) -> float:
        return max(self.train_mi_nats) if self.train_mi_nats else float("nan")

    @property
    def last(self) -> float:
        return self.train_mi_nats[-1] if self.train_mi_nats else float("nan")

    def rows(self):
        return zip(self.epoch, self.train_mi_nats, self.stabilized_objective, self.seconds, self.validation_mi_nats)

    def write_csv(self, path):
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(TRACE_COLUMNS)
            for e, mi, obj, sec, val in self.rows():
                writer.writerow([e, repr(mi), repr(obj), f"{sec:.3f}", "" if np.isnan(val) else repr(val)])


@dataclass
class MiResult:
    scheme: str
    test_mi_nats: float
    trace: MiTrainingTrace
    config: dict
    fingerprint: str = ""
    evaluation: dict = field(default_factory=dict)

    @property
    def best_train_mi_nats(self) -> float:
        return self.trace.best

    def to_dict(self) -> dict:
        return {
            "kind": "mine",
            "scheme": self.scheme,
            "test_mi_nats": self.test_mi_nats,
            "best_train_mi_nats": self.trace.best,
            "last_train_mi_nats": self.trace.last,
            "epochs_run": len(self.trace),
            "config": self.config,
            "dataset_fingerprint": self.fingerprint,
            "evaluation": self.evaluation,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)


def _split_xy(sampleset, bit_map):
    return bits_to_reals(sampleset.plaintexts, bit_map), bits_to_reals(sampleset.ciphertexts, bit_map)


def split_validation(train_set, fraction):
    """Hold out whole (label 0, label 1) row pairs: pair ``k`` is held out iff ``k mod round(1/fraction) == last``.

    Returns ``(fit_set, validation_set)``; both keep the 50/50 class balance.
    """
    if not 0.0 < fraction < 0.5:
        raise UsageError("validation fraction must lie in (0, 0.5)")
    period = round(1.0 / fraction)
    held = (np.arange(len(train_set)) // 2) % period == period - 1
    parts = []
    for mask in (~held, held):
        parts.append(type(train_set)(
            train_set.scheme_name, train_set.plaintext_bits, train_set.ciphertext_bits,
            train_set.plaintexts[mask], train_set.ciphertexts[mask], train_set.labels[mask],
            train_set.split, train_set.seed,
        ))
    return parts[0], parts[1]


class _Validator:
    """Pooled DV estimate on held-out rows with fixed derangements, so epochs compare like for like."""

    def __init__(self, val_set, seed, bit_map, repeats=VALIDATION_REPEATS):
        x, y = _split_xy(val_set, bit_map)
        gen = np.random.default_rng(rng.derive_seed(seed, "mine", "validation"))
        self.joint = np.hstack([x, y])
        self.marginal = np.vstack([np.hstack([x, y[derangement(len(y), gen)]]) for _ in range(repeats)])

    def __call__(self, net) -> float:
        return nncore.dv_objective(nncore.forward(net, self.joint), nncore.forward(net, self.marginal), 0.0)[0]


def train_mi(train_set, cfg: nncore.TrainConfig, bit_map="01", net=None, on_epoch=None, validation_fraction=0.0):
    """Train a critic on the train split; returns ``(net, trace)``.

    Every epoch reshuffles the rows and drops a final short batch. The
    trace keeps the mean plain DV estimate and mean stabilized objective
    over each epoch's batches.

    With ``validation_fraction > 0`` that share of the train rows is held
    out, scored after every epoch, and the critic from the best-scoring
    epoch is returned (``trace.selected_epoch``). Without it the last
    epoch's critic is returned.
    """
    validator = None
    if validation_fraction:
        train_set, val_set = split_validation(train_set, validation_fraction)
        validator = _Validator(val_set, cfg.seed, bit_map)
    x, y = _split_xy(train_set, bit_map)
    n = len(x)
    if cfg.batch_size > n:
        raise UsageError(f"batch size {cfg.batch_size} exceeds the {n} training rows")
    width = x.shape[1] + y.shape[1]
    if net is None:
        net = nncore.init_network(cfg.layer_dims(width), rng.derive_seed(cfg.seed, "mine", "init"))
    elif net.input_width != width:
        raise UsageError(f"critic expects {net.input_width} inputs, data has {width}")
    gen = np.random.default_rng(rng.derive_seed(cfg.seed, "mine", "batches"))
    opt = nncore.Optimizer(cfg.optimizer, cfg.learning_rate, net)
    n_batches = n // cfg.batch_size
    trace = MiTrainingTrace()
    best_score, best_net = -np.inf, None
    start = time.perf_counter()
    for epoch in range(cfg.epochs):
        order = gen.permutation(n)
        mis, objs = [], []
        for b in range(n_batches):
            idx = order[b * cfg.batch_size : (b + 1) * cfg.batch_size]
            joint, marginal = pair_batches(x[idx], y[idx], gen)
            try:
                loss, mi, grads = nncore.loss_and_gradients(
                    net, joint, "dv", marginal=marginal, stabilizer_coeff=cfg.stabilizer_coeff
                )
                if not np.isfinite(loss):
                    raise NumericFailure("non-finite loss")
                net = opt.step(net, grads)
            except NumericFailure as exc:
                raise NumericFailure(
                    f"MI training diverged at epoch {epoch}, batch {b}: {exc}", exc.layer, epoch, b
                ) from exc
            mis.append(mi)
            objs.append(-loss)
        score = float("nan")
        if validator is not None:
            score = validator(net)
            if score > best_score:
                best_score, best_net, trace.selected_epoch = score, net.copy(), epoch
        trace.append(epoch, np.mean(mis), np.mean(objs), time.perf_counter() - start, score)
        if on_epoch is not None:
            on_epoch(epoch, trace)
    if best_net is None:
        trace.selected_epoch = cfg.epochs - 1
        return net, trace
    return best_net, trace


def evaluate_mi(net, test_set, seed=0, repeats=1, permutation="derangement", bit_map="01") -> float:
    """Plain DV estimate on the whole test split, averaged over ``repeats`` marginal draws.

    ``permutation="derangement"`` pairs every plaintext with some other
    row's ciphertext; ``"uniform"`` allows fixed points.
    """
    if permutation not in PERMUTATIONS:
        raise UsageError(f"permutation must be one of {PERMUTATIONS}")
    if repeats < 1:
        raise UsageError("repeats must be >= 1")
    x, y = _split_xy(test_set, bit_map)
    if net.input_width != x.shape[1] + y.shape[1]:
        raise UsageError(
            f"critic expects {net.input_width} inputs, test set has {x.shape[1] + y.shape[1]}"
        )
    joint = nncore.forward(net, np.hstack([x, y]))
    gen = np.random.default_rng(rng.derive_seed(seed, "mine", "evaluate"))
    estimates = []
    for _ in range(repeats):
        perm = derangement(len(y), gen) if permutation == "derangement" else gen.permutation(len(y))
        marginal = nncore.forward(net, np.hstack([x, y[perm]]))
        estimates.append(nncore.dv_objective(joint, marginal, 0.0)[0])
    return float(np.mean(estimates))


def run_mine(train_set, test_set, cfg: nncore.TrainConfig, *, repeats=1, permutation="derangement",
             bit_map="01", fingerprint="", on_epoch=None, validation_fraction=DEFAULT_VALIDATION_FRACTION):
    """Train on ``train_set``, evaluate on ``test_set``; returns ``(MiResult, net)``."""
    net, trace = train_mi(train_set, cfg, bit_map=bit_map, on_epoch=on_epoch, validation_fraction=validation_fraction)
    test_mi = evaluate_mi(net, test_set, cfg.seed, repeats, permutation, bit_map)
    result = MiResult(
        scheme=train_set.scheme_name,
        test_mi_nats=test_mi,
        trace=trace,
        config=cfg.to_dict(),
        fingerprint=fingerprint,
        evaluation={
            "split": test_set.split,
            "rows": len(test_set),
            "marginal_permutation": permutation,
            "marginal_repeats": repeats,
            "training_permutation": "uniform",
            "bit_map": bit_map,
            "epoch_estimate": "mean of batch estimates",
            "short_batch": "dropped",
            "validation_fraction": validation_fraction,
            "selected_epoch": trace.selected_epoch,
        },
    )
    return result, net
