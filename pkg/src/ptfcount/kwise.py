"""k-wise independent partition sample space.

The space assigns each of n items a bit, such that any k items receive
jointly uniform bits.  Construction: pick the binary field GF(2^m) with
2^m >= n, identify item i with field element i-1, and for each seed
(c_0, ..., c_{k-1}) in GF(2^m)^k map item i to one fixed balanced bit (the
low bit) of c_0 + c_1 x_i + ... + c_{k-1} x_i^{k-1}.
"""

from __future__ import annotations

# Irreducible polynomials over GF(2), degree m, as bitmasks including x^m.
_IRREDUCIBLE = {
    1: 0b11, 2: 0b111, 3: 0b1011, 4: 0b10011, 5: 0b100101,
    6: 0b1000011, 7: 0b10000011, 8: 0b100011011, 9: 0b1000010001,
    10: 0b10000001001, 11: 0b100000000101, 12: 0b1000001010011,
}


class GF2m:
    def __init__(self, m: int):
        if m not in _IRREDUCIBLE:
            raise ValueError(f"unsupported field degree {m}")
        self.m = m
        self.size = 1 << m
        self.mod = _IRREDUCIBLE[m]

    def mul(self, a: int, b: int) -> int:
        r = 0
        while b:
            if b & 1:
                r ^= a
            b >>= 1
            a <<= 1
            if a & self.size:
                a ^= self.mod
        return r


class KWiseSpace:
    """Enumerable k-wise independent space of partitions of {1..n}."""

    def __init__(self, n: int, k: int):
        m = 1
        while (1 << m) < n:
            m += 1
        self.field = GF2m(m)
        self.n = n
        self.k = k
        self.size = self.field.size ** k

    def assignment(self, seed: int) -> list[bool]:
        """Bit per item for the given seed index; True means side A1."""
        q = self.field.size
        coeffs = []
        s = seed
        for _ in range(self.k):
            coeffs.append(s % q)
            s //= q
        out = []
        for i in range(self.n):
            x = i  # item i+1 <-> field element i
            acc = 0
            power = 1
            for c in coeffs:
                acc ^= self.field.mul(c, power)
                power = self.field.mul(power, x)
            out.append(bool(acc & 1))
        return out
