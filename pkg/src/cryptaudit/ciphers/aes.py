"""AES-128 block function (FIPS-197), table driven, pure Python."""

from __future__ import annotations

from ..errors import UsageError

BLOCK_BYTES = 16


def _xtime(a):
    a <<= 1
    return (a ^ 0x11B) & 0xFF if a & 0x100 else a


def _build_sbox():
    # multiplicative inverse via exp/log over generator 0x03, then the affine map
    exp, log = [0] * 255, [0] * 256
    x = 1
    for i in range(255):
        exp[i] = x
        log[x] = i
        x ^= _xtime(x)
    sbox = [0] * 256
    for a in range(256):
        inv = 0 if a == 0 else exp[(255 - log[a]) % 255]
        s = inv
        for shift in range(1, 5):
            s ^= ((inv << shift) | (inv >> (8 - shift))) & 0xFF
        sbox[a] = s ^ 0x63
    return sbox


SBOX = _build_sbox()
INV_SBOX = [0] * 256
for _i, _s in enumerate(SBOX):
    INV_SBOX[_s] = _i


def _mul(a, b):
    out = 0
    while b:
        if b & 1:
            out ^= a
        a = _xtime(a)
        b >>= 1
    return out


def _rotr8(w):
    return ((w >> 8) | (w << 24)) & 0xFFFFFFFF


# encryption T-tables: column word of MixColumns(SubBytes(a)) with big-endian byte order
_TE0 = [(_mul(s, 2) << 24) | (s << 16) | (s << 8) | _mul(s, 3) for s in SBOX]
_TE1 = [_rotr8(w) for w in _TE0]
_TE2 = [_rotr8(w) for w in _TE1]
_TE3 = [_rotr8(w) for w in _TE2]
_TD0 = [
    (_mul(s, 14) << 24) | (_mul(s, 9) << 16) | (_mul(s, 13) << 8) | _mul(s, 11)
    for s in INV_SBOX
]
_TD1 = [_rotr8(w) for w in _TD0]
_TD2 = [_rotr8(w) for w in _TD1]
_TD3 = [_rotr8(w) for w in _TD2]
_RCON = [0x01, 0x02, 0x04, 0x08, 0x10, 0x20, 0x40, 0x80, 0x1B, 0x36]


def expand_key(key: bytes) -> list[int]:
    """44 round-key words for AES-128."""
    if len(key) != 16:
        raise UsageError(f"AES-128 key must be 16 bytes, got {len(key)}")
    w = [int.from_bytes(key[4 * i : 4 * i + 4], "big") for i in range(4)]
    for i in range(4, 44):
        t = w[i - 1]
        if i % 4 == 0:
            t = ((t << 8) | (t >> 24)) & 0xFFFFFFFF
            t = (
                (SBOX[t >> 24] << 24)
                | (SBOX[(t >> 16) & 0xFF] << 16)
                | (SBOX[(t >> 8) & 0xFF] << 8)
                | SBOX[t & 0xFF]
            )
            t ^= _RCON[i // 4 - 1] << 24
        w.append(w[i - 4] ^ t)
    return w


def _inv_mix_word(w):
    return (
        _TD0[SBOX[w >> 24]]
        ^ _TD1[SBOX[(w >> 16) & 0xFF]]
        ^ _TD2[SBOX[(w >> 8) & 0xFF]]
        ^ _TD3[SBOX[w & 0xFF]]
    )


def decryption_schedule(enc_words: list[int]) -> list[int]:
    """Round keys for the equivalent inverse cipher."""
    rounds = [enc_words[4 * r : 4 * r + 4] for r in range(11)]
    rounds.reverse()
    out = list(rounds[0])
    for r in range(1, 10):
        out.extend(_inv_mix_word(w) for w in rounds[r])
    out.extend(rounds[10])
    return out


def encrypt_block(round_keys: list[int], block: bytes) -> bytes:
    if len(block) != BLOCK_BYTES:
        raise UsageError(f"AES block must be 16 bytes, got {len(block)}")
    rk = round_keys
    s0 = int.from_bytes(block[0:4], "big") ^ rk[0]
    s1 = int.from_bytes(block[4:8], "big") ^ rk[1]
    s2 = int.from_bytes(block[8:12], "big") ^ rk[2]
    s3 = int.from_bytes(block[12:16], "big") ^ rk[3]
    te0, te1, te2, te3 = _TE0, _TE1, _TE2, _TE3
    for r in range(1, 10):
        k = 4 * r
        t0 = te0[s0 >> 24] ^ te1[(s1 >> 16) & 0xFF] ^ te2[(s2 >> 8) & 0xFF] ^ te3[s3 & 0xFF] ^ rk[k]
        t1 = te0[s1 >> 24] ^ te1[(s2 >> 16) & 0xFF] ^ te2[(s3 >> 8) & 0xFF] ^ te3[s0 & 0xFF] ^ rk[k + 1]
        t2 = te0[s2 >> 24] ^ te1[(s3 >> 16) & 0xFF] ^ te2[(s0 >> 8) & 0xFF] ^ te3[s1 & 0xFF] ^ rk[k + 2]
        t3 = te0[s3 >> 24] ^ te1[(s0 >> 16) & 0xFF] ^ te2[(s1 >> 8) & 0xFF] ^ te3[s2 & 0xFF] ^ rk[k + 3]
        s0, s1, s2, s3 = t0, t1, t2, t3
    sb = SBOX
    out = bytearray(16)
    for col, (a, b, c, d) in enumerate(((s0, s1, s2, s3), (s1, s2, s3, s0), (s2, s3, s0, s1), (s3, s0, s1, s2))):
        w = (
            (sb[a >> 24] << 24) | (sb[(b >> 16) & 0xFF] << 16) | (sb[(c >> 8) & 0xFF] << 8) | sb[d & 0xFF]
        ) ^ rk[40 + col]
        out[4 * col : 4 * col + 4] = w.to_bytes(4, "big")
    return bytes(out)


def decrypt_block(dec_keys: list[int], block: bytes) -> bytes:
    if len(block) != BLOCK_BYTES:
        raise UsageError(f"AES block must be 16 bytes, got {len(block)}")
    rk = dec_keys
    s0 = int.from_bytes(block[0:4], "big") ^ rk[0]
    s1 = int.from_bytes(block[4:8], "big") ^ rk[1]
    s2 = int.from_bytes(block[8:12], "big") ^ rk[2]
    s3 = int.from_bytes(block[12:16], "big") ^ rk[3]
    td0, td1, td2, td3 = _TD0, _TD1, _TD2, _TD3
    for r in range(1, 10):
        k = 4 * r
        t0 = td0[s0 >> 24] ^ td1[(s3 >> 16) & 0xFF] ^ td2[(s2 >> 8) & 0xFF] ^ td3[s1 & 0xFF] ^ rk[k]
        t1 = td0[s1 >> 24] ^ td1[(s0 >> 16) & 0xFF] ^ td2[(s3 >> 8) & 0xFF] ^ td3[s2 & 0xFF] ^ rk[k + 1]
        t2 = td0[s2 >> 24] ^ td1[(s1 >> 16) & 0xFF] ^ td2[(s0 >> 8) & 0xFF] ^ td3[s3 & 0xFF] ^ rk[k + 2]
        t3 = td0[s3 >> 24] ^ td1[(s2 >> 16) & 0xFF] ^ td2[(s1 >> 8) & 0xFF] ^ td3[s0 & 0xFF] ^ rk[k + 3]
        s0, s1, s2, s3 = t0, t1, t2, t3
    isb = INV_SBOX
    out = bytearray(16)
    for col, (a, b, c, d) in enumerate(((s0, s3, s2, s1), (s1, s0, s3, s2), (s2, s1, s0, s3), (s3, s2, s1, s0))):
        w = (
            (isb[a >> 24] << 24) | (isb[(b >> 16) & 0xFF] << 16) | (isb[(c >> 8) & 0xFF] << 8) | isb[d & 0xFF]
        ) ^ rk[40 + col]
        out[4 * col : 4 * col + 4] = w.to_bytes(4, "big")
    return bytes(out)


class Aes128:
    def __init__(self, key: bytes):
        self.key = bytes(key)
        self._enc = expand_key(self.key)
        self._dec = decryption_schedule(self._enc)

    def encrypt_block(self, block: bytes) -> bytes:
        return encrypt_block(self._enc, block)

    def decrypt_block(self, block: bytes) -> bytes:
        return decrypt_block(self._dec, block)
