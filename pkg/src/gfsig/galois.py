"""Finite fields GF(p) and GF(p^m) with dense exp/log tables.

Elements of GF(p^m) are coefficient vectors (c_0, ..., c_{m-1}) over Z_p,
stored as integer codes sum_i c_i * p**i. Code 0 is the zero element and
code 1 the multiplicative identity. Tables are built eagerly; the default
size cap q <= 2**20 keeps that cheap for every field this package touches.

The discrete logarithm uses the log(0) = 0 convention throughout, so any
character value derived from it equals 1 at the zero element.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

DEFAULT_MAX_Q = 1 << 20


def is_prime(n: int) -> bool:
    if n < 2:
        return False
    if n < 4:
        return True
    if n % 2 == 0:
        return False
    d = 3
    while d * d <= n:
        if n % d == 0:
            return False
        d += 2
    return True


def _prime_factors(n: int) -> list[int]:
    out = []
    d = 2
    while d * d <= n:
        if n % d == 0:
            out.append(d)
            while n % d == 0:
                n //= d
        d += 1
    if n > 1:
        out.append(n)
    return out


def find_primitive_root(p: int) -> int:
    """Smallest g >= 2 whose multiplicative order mod p is exactly p - 1."""
    if p == 2 or not is_prime(p):
        raise ValueError(f"p must be an odd prime, got {p}")
    factors = _prime_factors(p - 1)
    for g in range(2, p):
        if all(pow(g, (p - 1) // f, p) != 1 for f in factors):
            return g
    raise AssertionError("no primitive root found; p is not prime")


@dataclass(frozen=True)
class FieldElement:
    """Coefficient vector (c_0, ..., c_{m-1}) of a field element, low degree first."""

    coeffs: tuple[int, ...]


class PrimeField:
    """GF(p) for odd prime p, with a fixed primitive root alpha.

    log_table[x] = k for x = alpha**k mod p, and log_table[0] = 0.
    """

    def __init__(self, p: int, alpha: int | None = None):
        if p == 2 or not is_prime(p):
            raise ValueError(f"p must be an odd prime, got {p}")
        if alpha is None:
            alpha = find_primitive_root(p)
        else:
            factors = _prime_factors(p - 1)
            if not (2 <= alpha < p) or any(pow(alpha, (p - 1) // f, p) == 1 for f in factors):
                raise ValueError(f"{alpha} is not a primitive root of {p}")
        self.p = p
        self.alpha = alpha
        exp_table = np.empty(p - 1, dtype=np.int64)
        log_table = np.zeros(p, dtype=np.int64)
        x = 1
        for k in range(p - 1):
            exp_table[k] = x
            log_table[x] = k
            x = x * alpha % p
        self.exp_table = exp_table
        self.log_table = log_table

    def _as_int(self, x) -> int:
        if isinstance(x, FieldElement):
            if len(x.coeffs) != 1:
                raise ValueError("prime-field element must have a single coefficient")
            x = x.coeffs[0]
        x = int(x)
        if not 0 <= x < self.p:
            raise ValueError(f"element {x} outside [0, {self.p})")
        return x

    def discrete_log(self, x) -> int:
        return int(self.log_table[self._as_int(x)])

    def trace(self, x) -> int:
        return self._as_int(x)

    def __repr__(self):
        return f"PrimeField(p={self.p}, alpha={self.alpha})"


def _exp_codes(p: int, m: int, poly: tuple[int, ...]) -> list[int] | None:
    """Powers of the root of `poly` as element codes, or None if not primitive.

    Multiplies by x repeatedly with reduction mod poly; the root is primitive
    exactly when the first return to 1 happens after q - 1 steps, which also
    certifies irreducibility (units of a non-field quotient ring have order
    strictly below q - 1).
    """
    q = p**m
    if poly[0] % p == 0:
        return None  # x divides poly
    red = [(-poly[i]) % p for i in range(m)]  # x^m = sum red[i] x^i
    weights = [p**i for i in range(m)]
    cur = [0] * m
    cur[0] = 1
    one = list(cur)
    codes = []
    for k in range(q - 1):
        codes.append(sum(c * w for c, w in zip(cur, weights)))
        carry = cur[m - 1]
        cur = [0] + cur[: m - 1]
        if carry:
            cur = [(cur[i] + carry * red[i]) % p for i in range(m)]
        if cur == one and k + 1 < q - 1:
            return None
    if cur != one:
        return None
    return codes


def primitive_polynomials(p: int, m: int, max_q: int = DEFAULT_MAX_Q) -> list[tuple[int, ...]]:
    """All monic primitive polynomials of degree m over GF(p).

    Returned low-degree-first, ordered lexicographically by coefficients
    compared high degree first.
    """
    if p == 2 or not is_prime(p):
        raise ValueError(f"p must be an odd prime, got {p}")
    if m < 1:
        raise ValueError("m must be >= 1")
    q = p**m
    if q > max_q:
        raise ValueError(f"q = {p}^{m} = {q} exceeds the table-size cap {max_q}")
    found = []
    for n in range(q):
        digits = []
        nn = n
        for _ in range(m):
            digits.append(nn % p)
            nn //= p
        poly = tuple(digits) + (1,)  # digits are low-first; n iterates high digit slowest
        if _exp_codes(p, m, poly) is not None:
            found.append(poly)
    return found


class ExtField:
    """GF(p^m) defined by a monic primitive polynomial over GF(p).

    When no polynomial is given, the lexicographically smallest primitive
    polynomial (coefficients compared high degree first) is located by
    exhaustive search. For m = 1 the defining polynomial is x - alpha with
    alpha = find_primitive_root(p), so the field behaves exactly like
    PrimeField(p).
    """

    def __init__(self, p: int, m: int, poly=None, max_q: int = DEFAULT_MAX_Q):
        if p == 2 or not is_prime(p):
            raise ValueError(f"p must be an odd prime, got {p}")
        if m < 1:
            raise ValueError("m must be >= 1")
        q = p**m
        if q > max_q:
            raise ValueError(f"q = {p}^{m} = {q} exceeds the table-size cap {max_q}")
        self.p = p
        self.m = m
        self.q = q

        if poly is not None:
            poly = tuple(int(c) % p for c in poly)
            if len(poly) != m + 1 or poly[m] != 1:
                raise ValueError("poly must be monic of degree m, low-degree coefficients first")
            codes = _exp_codes(p, m, poly)
            if codes is None:
                raise ValueError(f"poly {poly} is not primitive over GF({p})")
        elif m == 1:
            poly = ((-find_primitive_root(p)) % p, 1)
            codes = _exp_codes(p, m, poly)
        else:
            codes = None
            for n in range(q):
                digits = []
                nn = n
                for _ in range(m):
                    digits.append(nn % p)
                    nn //= p
                cand = tuple(digits) + (1,)
                codes = _exp_codes(p, m, cand)
                if codes is not None:
                    poly = cand
                    break
            if codes is None:
                raise AssertionError(f"no primitive polynomial found for GF({p}^{m})")
        self.poly = poly

        exp_table = np.asarray(codes, dtype=np.int64)
        if len(set(codes)) != q - 1:
            raise AssertionError("exp table does not enumerate the multiplicative group")
        log_table = np.zeros(q, dtype=np.int64)
        log_table[exp_table] = np.arange(q - 1, dtype=np.int64)
        self.exp_table = exp_table
        self.log_table = log_table
        self.trace_table = self._build_trace_table()

    def _build_trace_table(self) -> np.ndarray:
        p, m, q = self.p, self.m, self.q
        js = np.arange(q - 1, dtype=np.int64)
        acc = np.zeros((q - 1, m), dtype=np.int64)
        for i in range(m):
            codes = self.exp_table[(js * p**i) % (q - 1)]
            for d in range(m):
                acc[:, d] = (acc[:, d] + (codes // p**d) % p) % p
        if m > 1 and acc[:, 1:].any():
            raise AssertionError("trace left the prime subfield")
        table = np.zeros(q, dtype=np.int64)
        table[self.exp_table] = acc[:, 0]
        return table

    # --- element handling -------------------------------------------------

    def encode(self, x) -> int:
        if isinstance(x, FieldElement):
            x = x.coeffs
        if isinstance(x, (int, np.integer)):
            code = int(x)
            if not 0 <= code < self.q:
                raise ValueError(f"code {code} outside [0, {self.q})")
            return code
        coeffs = list(x)
        if len(coeffs) != self.m:
            raise ValueError(f"expected {self.m} coefficients, got {len(coeffs)}")
        code = 0
        for i, c in enumerate(coeffs):
            c = int(c)
            if not 0 <= c < self.p:
                raise ValueError(f"coefficient {c} outside [0, {self.p})")
            code += c * self.p**i
        return code

    def coeffs(self, x) -> tuple[int, ...]:
        code = self.encode(x)
        out = []
        for _ in range(self.m):
            out.append(code % self.p)
            code //= self.p
        return tuple(out)

    def element(self, x) -> FieldElement:
        return FieldElement(self.coeffs(x))

    # --- arithmetic on codes ----------------------------------------------

    def add(self, a, b) -> int:
        ca, cb = self.coeffs(a), self.coeffs(b)
        return self.encode([(x + y) % self.p for x, y in zip(ca, cb)])

    def neg(self, a) -> int:
        return self.encode([(-x) % self.p for x in self.coeffs(a)])

    def sub(self, a, b) -> int:
        return self.add(a, self.neg(b))

    def mul(self, a, b) -> int:
        a, b = self.encode(a), self.encode(b)
        if a == 0 or b == 0:
            return 0
        k = (int(self.log_table[a]) + int(self.log_table[b])) % (self.q - 1)
        return int(self.exp_table[k])

    def inv(self, a) -> int:
        a = self.encode(a)
        if a == 0:
            raise ZeroDivisionError("zero has no multiplicative inverse")
        return int(self.exp_table[(-int(self.log_table[a])) % (self.q - 1)])

    def pow(self, a, e: int) -> int:
        a = self.encode(a)
        if a == 0:
            if e <= 0:
                raise ZeroDivisionError("0 cannot be raised to a non-positive power")
            return 0
        return int(self.exp_table[(int(self.log_table[a]) * e) % (self.q - 1)])

    @property
    def alpha(self) -> int:
        """Code of the primitive element (the root of the defining polynomial)."""
        return int(self.exp_table[1])

    def alpha_pow(self, k: int) -> int:
        return int(self.exp_table[k % (self.q - 1)])

    def discrete_log(self, x) -> int:
        return int(self.log_table[self.encode(x)])

    def trace(self, x) -> int:
        return int(self.trace_table[self.encode(x)])

    def __repr__(self):
        return f"ExtField(p={self.p}, m={self.m}, poly={self.poly})"


def build_ext_field(p: int, m: int, poly=None, max_q: int = DEFAULT_MAX_Q) -> ExtField:
    """Construct GF(p^m); see ExtField for the polynomial selection rule."""
    return ExtField(p, m, poly=poly, max_q=max_q)
