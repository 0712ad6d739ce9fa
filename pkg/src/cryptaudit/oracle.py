"""Exact information measures on small discrete distributions, and gradient checking.

Everything here is in nats. These functions are the ground truth the
learned estimators are tested against.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import nncore
from .errors import UsageError

NORM_TOL = 1e-12
MAX_ENUM_BITS = 12


def _distribution(p, name="distribution") -> np.ndarray:
    p = np.asarray(p, dtype=np.float64)
    if p.size == 0 or np.any(p < 0) or not np.all(np.isfinite(p)):
        raise UsageError(f"{name} must be nonempty, finite and nonnegative")
    if abs(p.sum() - 1.0) > NORM_TOL * max(1, p.size):
        raise UsageError(f"{name} sums to {p.sum()!r}, not 1")
    return p


def _plogp(p):
    out = np.zeros_like(p)
    nz = p > 0
    out[nz] = p[nz] * np.log(p[nz])
    return out


@dataclass(frozen=True)
class JointTable:
    """``P(X = i, Y = j)`` as a dense matrix."""

    probabilities: np.ndarray

    def __post_init__(self):
        p = _distribution(self.probabilities, "joint table")
        if p.ndim != 2:
            raise UsageError("joint table must be a 2-D matrix")
        object.__setattr__(self, "probabilities", p)

    @classmethod
    def from_counts(cls, counts):
        counts = np.asarray(counts, dtype=np.float64)
        return cls(counts / counts.sum())

    @property
    def p_x(self) -> np.ndarray:
        return self.probabilities.sum(axis=1)

    @property
    def p_y(self) -> np.ndarray:
        return self.probabilities.sum(axis=0)

    def conditional_entropy_x_given_y(self) -> float:
        return exact_entropy(self.probabilities.ravel()) - exact_entropy(self.p_y)


def exact_entropy(p) -> float:
    p = _distribution(p)
    return float(-_plogp(p).sum())


def exact_mi(joint) -> float:
    """``KL(P(X,Y) || P(X)P(Y))`` by direct summation."""
    if not isinstance(joint, JointTable):
        joint = JointTable(joint)
    p = joint.probabilities
    outer = np.outer(joint.p_x, joint.p_y)
    nz = p > 0
    return float(np.sum(p[nz] * (np.log(p[nz]) - np.log(outer[nz]))))


def cross_entropy(p1, p2) -> float:
    """``-sum p1 log p2``; ``inf`` when ``p2`` misses part of ``p1``'s support."""
    p1 = _distribution(p1, "p1")
    p2 = _distribution(p2, "p2")
    if p1.shape != p2.shape:
        raise UsageError(f"supports differ: {p1.shape} vs {p2.shape}")
    nz = p1 > 0
    if np.any(p2[nz] == 0):
        return float("inf")
    return float(-np.sum(p1[nz] * np.log(p2[nz])))


# -- enumeration -------------------------------------------------------------

def _bits_of(values, width) -> np.ndarray:
    values = np.asarray(values, dtype=np.uint64)
    return ((values[:, None] >> np.arange(width, dtype=np.uint64)) & np.uint64(1)).astype(np.uint8)


def _ints_of(bits) -> np.ndarray:
    bits = np.asarray(bits, dtype=np.uint64)
    return (bits << np.arange(bits.shape[1], dtype=np.uint64)).sum(axis=1)


def enumerate_scheme_joint(scheme, plaintext_bits=None) -> JointTable:
    """Exact joint of (plaintext, ciphertext) under a uniform plaintext prior.

    Deterministic schemes are enumerated over plaintexts at sample index 0.
    The one-time pad is enumerated over plaintext and pad together. Total
    enumerated state is capped at 12 bits.
    """
    bits = plaintext_bits or scheme.plaintext_bits
    if bits != scheme.plaintext_bits:
        raise UsageError(f"scheme width is {scheme.plaintext_bits} bits, asked for {bits}")
    is_otp = scheme.name == "otp"
    if not (scheme.deterministic or is_otp):
        raise UsageError(f"scheme {scheme.name} has randomness that cannot be enumerated")
    state_bits = 2 * bits if is_otp else bits
    if state_bits > MAX_ENUM_BITS:
        raise UsageError(f"{state_bits} bits of state exceeds the enumeration cap of {MAX_ENUM_BITS}")
    if scheme.ciphertext_bits > 16:
        raise UsageError("ciphertext space too large to tabulate")
    messages = _bits_of(np.arange(2**bits), bits)
    counts = np.zeros((2**bits, 2**scheme.ciphertext_bits))
    if is_otp:
        for pad in _bits_of(np.arange(2**bits), bits):
            counts[np.arange(2**bits), _ints_of(messages ^ pad[None, :])] += 1
    else:
        cts = scheme.encrypt_batch(messages, np.zeros(len(messages), dtype=np.int64))
        counts[np.arange(2**bits), _ints_of(cts)] += 1
    return JointTable.from_counts(counts)


# -- gradient checking -------------------------------------------------------

REL_FLOOR = 1e-6


def finite_diff_errors(net, batch, loss_kind, eps=1e-4, **loss_args) -> tuple[float, float]:
    """Max relative and max absolute error of analytic vs central-difference gradients.

    The relative error divides by ``max(|analytic|, |numeric|, REL_FLOOR)``.
    Some entries are exactly zero (the output bias under the unstabilized
    DV loss), and there central differences carry ~1e-10 of round-off.
    """
    if not 1e-6 <= eps <= 1e-3:
        raise UsageError("eps must lie in [1e-6, 1e-3]")
    analytic = nncore.backward(net, batch, loss_kind, **loss_args)
    probe = net.copy()
    rel, absolute = 0.0, 0.0
    for p, g in zip(probe.parameters(), analytic.parameters()):
        # index in place: reshape(-1) would copy a non-contiguous array
        for i in np.ndindex(p.shape):
            orig = p[i]
            p[i] = orig + eps
            up = nncore.loss_value(probe, batch, loss_kind, **loss_args)
            p[i] = orig - eps
            down = nncore.loss_value(probe, batch, loss_kind, **loss_args)
            p[i] = orig
            numeric = (up - down) / (2 * eps)
            diff = abs(g[i] - numeric)
            absolute = max(absolute, diff)
            rel = max(rel, diff / max(abs(g[i]), abs(numeric), REL_FLOOR))
    return rel, absolute


def finite_diff_check(net, batch, loss_kind, eps=1e-4, **loss_args) -> float:
    return finite_diff_errors(net, batch, loss_kind, eps, **loss_args)[0]
