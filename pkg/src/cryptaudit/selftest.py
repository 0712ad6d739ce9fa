"""Fast built-in checks: exact-MI oracle, gradient oracle, cipher known answers, GF(2^8) and HUNCC."""

from __future__ import annotations

import math

import numpy as np

from . import huncc, nncore, oracle
from .ciphers import bits_to_bytes, bytes_to_bits, keyed_scheme
from .ciphers.aes import Aes128
from .ciphers.des import Des
from .ciphers.rsa import RsaKey, RsaPlain

AES_KAT = ("000102030405060708090a0b0c0d0e0f", "00112233445566778899aabbccddeeff", "69c4e0d86a7b0430d8cdb78070b4c55a")
DES_KAT = ("133457799bbcdff1", "0123456789abcdef", "85e813540f0ab405")
GRADIENT_TOL = 1e-4


KINK_MARGIN = 1e-3


def _min_preactivation(net, batch):
    out, a = np.inf, batch
    for w, b in zip(net.weights[:-1], net.biases[:-1]):
        z = a @ w.T + b
        out = min(out, float(np.min(np.abs(z))))
        a = np.maximum(z, 0.0)
    return out


def gradient_cases(seed=0, count=100):
    """Seeded (net, batch, loss_kind, loss_args) cases alternating DV and BCE.

    Biases are random and a case is redrawn while any hidden pre-activation
    lies within ``KINK_MARGIN`` of the ReLU kink, where central differences
    straddle the nondifferentiable point.
    """
    r = np.random.default_rng(seed)
    for case in range(count):
        kind = "dv" if case % 2 == 0 else "bce"
        while True:
            dims = [int(r.integers(2, 7))] + [int(r.integers(3, 9)) for _ in range(int(r.integers(1, 3)))] + [1]
            net = nncore.init_network(dims, int(r.integers(2**31)), "linear" if kind == "dv" else "sigmoid")
            for b in net.biases:
                b[:] = r.normal(scale=0.5, size=b.shape)
            batch = r.normal(size=(int(r.integers(4, 17)), dims[0]))
            if kind == "dv":
                args = {"marginal": r.normal(size=batch.shape), "stabilizer_coeff": float(r.choice([0.0, 0.1, 0.5]))}
                inputs = np.vstack([batch, args["marginal"]])
            else:
                args = {"labels": r.integers(0, 2, size=len(batch)).astype(np.float64)}
                inputs = batch
            if _min_preactivation(net, inputs) > KINK_MARGIN:
                break
        yield net, batch, kind, args


def check_gradients(seed=0, count=100):
    worst = max(oracle.finite_diff_check(net, batch, kind, **args) for net, batch, kind, args in gradient_cases(seed, count))
    return worst < GRADIENT_TOL, f"max relative error {worst:.2e} over {count} cases"


def check_exact_mi():
    ln2 = math.log(2)
    cases = [
        abs(oracle.exact_entropy([0.5, 0.5]) - ln2) < 1e-12,
        oracle.exact_entropy([1.0, 0.0]) == 0.0,
        abs(oracle.exact_mi(np.full((4, 4), 1 / 16))) < 1e-12,
        abs(oracle.exact_mi(np.eye(16) / 16) - math.log(16)) < 1e-12,
        abs(oracle.exact_mi(oracle.enumerate_scheme_joint(keyed_scheme("identity", 0, plaintext_bits=4))) - 4 * ln2) < 1e-12,
        abs(oracle.exact_mi(oracle.enumerate_scheme_joint(keyed_scheme("xor_const", 0, plaintext_bits=4))) - 4 * ln2) < 1e-12,
        abs(oracle.exact_mi(oracle.enumerate_scheme_joint(keyed_scheme("otp", 0, plaintext_bits=4)))) < 1e-12,
    ]
    return all(cases), f"{sum(cases)}/{len(cases)} exact entropy/MI identities"


def check_dv_properties(seed=0):
    r = np.random.default_rng(seed)
    joint, marginal = r.normal(size=500), r.normal(size=500)
    base = nncore.dv_objective(joint, marginal, 0.0)[0]
    shifted = nncore.dv_objective(joint + 5.0, marginal + 5.0, 0.0)[0]
    const = nncore.dv_objective(np.full(500, 3.0), np.full(500, 3.0), 0.0)[0]
    ok = abs(base - shifted) < 1e-9 and abs(const) < 1e-9
    return ok, f"shift change {abs(base - shifted):.1e}, constant critic {abs(const):.1e}"


def check_block_ciphers():
    aes_key, aes_pt, aes_ct = (bytes.fromhex(h) for h in AES_KAT)
    des_key, des_pt, des_ct = (bytes.fromhex(h) for h in DES_KAT)
    aes, des = Aes128(aes_key), Des(des_key)
    ok = (
        aes.encrypt_block(aes_pt) == aes_ct
        and aes.decrypt_block(aes_ct) == aes_pt
        and des.encrypt_block(des_pt) == des_ct
        and des.decrypt_block(des_ct) == des_pt
    )
    return ok, "AES-128 and DES published vectors, both directions"


def check_rsa():
    toy = RsaPlain.from_key(RsaKey(n=3233, e=17, d=2753), 8)
    ok = toy.encrypt_int(65) == 2790 and toy.decrypt_int(2790) == 65
    return ok, "textbook (n=3233, e=17): 65 -> 2790 -> 65"


def check_gf(seed=0, triples=100_000):
    inv_ok = all(huncc.gf_mul(a, huncc.gf_inv(a)) == 1 for a in range(1, 256))
    r = np.random.default_rng(seed)
    a, b, c = (r.integers(0, 256, size=triples, dtype=np.uint8) for _ in range(3))
    mul = huncc.MUL
    assoc = np.array_equal(mul[mul[a, b], c], mul[a, mul[b, c]])
    comm = np.array_equal(mul[a, b], mul[b, a])
    dist = np.array_equal(mul[a, b ^ c], mul[a, b] ^ mul[a, c])
    ok = inv_ok and assoc and comm and dist and huncc.gf_mul(0x53, 0xCA) == 1
    return ok, f"inverse table and {triples} associativity/commutativity/distributivity triples"


def check_huncc(seed=0, messages=1000):
    cfg = huncc.HunccConfig()
    scheme = huncc.HunccScheme(cfg)
    scheme.keygen(None, seed)
    r = np.random.default_rng(seed)
    pts = r.integers(0, 2, size=(messages, cfg.plaintext_bits), dtype=np.uint8)
    idx = np.arange(messages)
    cts = scheme.encrypt_batch(pts, idx)
    back = np.array([bytes_to_bits(scheme.decrypt_bytes(bits_to_bytes(c), int(i))) for c, i in zip(cts, idx)])
    return np.array_equal(back, pts), f"decode(encode(m)) == m for {messages} messages"


CHECKS = (
    ("exact MI oracle", lambda seed: check_exact_mi()),
    ("DV shift invariance", check_dv_properties),
    ("gradient oracle", check_gradients),
    ("block cipher known answers", lambda seed: check_block_ciphers()),
    ("RSA known answer", lambda seed: check_rsa()),
    ("GF(2^8) field axioms", check_gf),
    ("HUNCC roundtrip", check_huncc),
)


def run_all(seed=0):
    """List of ``(name, passed, detail)``."""
    out = []
    for name, fn in CHECKS:
        try:
            ok, detail = fn(seed)
        except Exception as exc:  # a crash is a failed check, reported with the rest
            ok, detail = False, f"{type(exc).__name__}: {exc}"
        out.append((name, bool(ok), detail))
    return out
