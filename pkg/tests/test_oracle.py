import math

import numpy as np
import pytest

from cryptaudit import nncore, oracle
from cryptaudit.ciphers import keyed_scheme
from cryptaudit.errors import UsageError


def test_entropy_examples():
    assert oracle.exact_entropy([0.5, 0.5]) == pytest.approx(math.log(2), abs=1e-15)
    assert oracle.exact_entropy([0.0, 1.0, 0.0]) == 0.0


def test_entropy_rejects_unnormalized():
    with pytest.raises(UsageError):
        oracle.exact_entropy([0.5, 0.6])
    with pytest.raises(UsageError):
        oracle.exact_entropy([-0.1, 1.1])


def test_mi_examples():
    assert abs(oracle.exact_mi(np.outer([0.2, 0.8], [0.5, 0.3, 0.2]))) < 1e-15
    for k in (2, 4, 16):
        assert oracle.exact_mi(np.eye(k) / k) == pytest.approx(math.log(k), abs=1e-12)


def test_mi_is_symmetric_and_bounded():
    r = np.random.default_rng(0)
    for _ in range(50):
        p = r.random((4, 6))
        p /= p.sum()
        t = oracle.JointTable(p)
        mi = oracle.exact_mi(t)
        assert mi >= -1e-15
        assert mi == pytest.approx(oracle.exact_mi(p.T), abs=1e-12)
        assert mi <= min(oracle.exact_entropy(t.p_x), oracle.exact_entropy(t.p_y)) + 1e-12


def test_cross_entropy_examples():
    p = [0.1, 0.2, 0.7]
    assert oracle.cross_entropy(p, p) == pytest.approx(oracle.exact_entropy(p), abs=1e-15)
    assert oracle.cross_entropy([1, 0, 0, 0], [0.25] * 4) == pytest.approx(math.log(4), abs=1e-15)
    assert oracle.cross_entropy([0.5, 0.5], [1.0, 0.0]) == math.inf


def test_enumerated_scheme_joints():
    four_ln2 = 4 * math.log(2)
    for name, expect in (("identity", four_ln2), ("xor_const", four_ln2), ("otp", 0.0)):
        joint = oracle.enumerate_scheme_joint(keyed_scheme(name, 3, plaintext_bits=4))
        assert oracle.exact_mi(joint) == pytest.approx(expect, abs=1e-12)


def test_enumeration_refuses_large_or_random_schemes():
    with pytest.raises(UsageError):
        oracle.enumerate_scheme_joint(keyed_scheme("identity", 0, plaintext_bits=16))
    with pytest.raises(UsageError):
        oracle.enumerate_scheme_joint(keyed_scheme("otp", 0, plaintext_bits=8))


def test_finite_diff_zero_gradient_configuration():
    net = nncore.zero_network([3, 4, 1])
    x = np.random.default_rng(0).normal(size=(6, 3))
    _, absolute = oracle.finite_diff_errors(net, x, "dv", marginal=x[::-1].copy(), stabilizer_coeff=0.0)
    assert absolute <= 1e-8


def test_finite_diff_step_sizes_agree():
    from cryptaudit.selftest import gradient_cases

    for net, batch, kind, args in gradient_cases(4, 10):
        a = oracle.finite_diff_check(net, batch, kind, eps=1e-4, **args)
        b = oracle.finite_diff_check(net, batch, kind, eps=1e-5, **args)
        assert max(a, b) < 1e-4
        # below ~1e-5 both numbers are round-off and their ratio carries no information
        if min(a, b) > 1e-5:
            assert max(a, b) <= 10 * min(a, b)


def test_finite_diff_eps_range():
    net = nncore.zero_network([2, 1])
    with pytest.raises(UsageError):
        oracle.finite_diff_check(net, np.ones((2, 2)), "dv", eps=1e-2, marginal=np.ones((2, 2)))
