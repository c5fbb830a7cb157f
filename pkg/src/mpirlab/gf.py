"""Prime-field arithmetic and small exact linear algebra.

Field elements are plain ints in [0, q); a :class:`PrimeField` instance
carries the modulus q and provides scalar operations, matrix products and
exact matrix inversion by Gaussian elimination.  All operations are pure
and deterministic: the same inputs always take the same elimination path.

Only prime moduli q >= 3 are supported.
"""

from __future__ import annotations

FieldVector = list[int]
FieldMatrix = list[list[int]]


def is_prime(n: int) -> bool:
    """Deterministic primality test by trial division (desk-scale inputs)."""
    if n < 2:
        return False
    if n % 2 == 0:
        return n == 2
    d = 3
    while d * d <= n:
        if n % d == 0:
            return False
        d += 2
    return True


class PrimeField:
    """The finite field GF(q) for a prime q >= 3."""

    def __init__(self, order: int):
        if not is_prime(order) or order < 3:
            raise ValueError(f"field order must be a prime >= 3, got {order}")
        self.order = order

    def __repr__(self) -> str:
        return f"PrimeField({self.order})"

    def __eq__(self, other) -> bool:
        return isinstance(other, PrimeField) and other.order == self.order

    def _check(self, *elems: int) -> None:
        for a in elems:
            if not 0 <= a < self.order:
                raise ValueError(f"{a} is not an element of GF({self.order})")

    def add(self, a: int, b: int) -> int:
        self._check(a, b)
        return (a + b) % self.order

    def sub(self, a: int, b: int) -> int:
        self._check(a, b)
        return (a - b) % self.order

    def mul(self, a: int, b: int) -> int:
        self._check(a, b)
        return (a * b) % self.order

    def neg(self, a: int) -> int:
        self._check(a)
        return (-a) % self.order

    def inv(self, a: int) -> int:
        """Multiplicative inverse; raises ZeroDivisionError for a = 0."""
        self._check(a)
        if a == 0:
            raise ZeroDivisionError(f"0 has no inverse in GF({self.order})")
        return pow(a, -1, self.order)

    # -- vectors and matrices (lists of ints / lists of rows) --

    def vec_sub(self, u: FieldVector, v: FieldVector) -> FieldVector:
        if len(u) != len(v):
            raise ValueError(f"vector length mismatch: {len(u)} vs {len(v)}")
        return [(x - y) % self.order for x, y in zip(u, v)]

    def mat_vec(self, m: FieldMatrix, v: FieldVector) -> FieldVector:
        q = self.order
        if any(len(row) != len(v) for row in m):
            raise ValueError("matrix/vector shape mismatch")
        return [sum(c * x for c, x in zip(row, v)) % q for row in m]

    def mat_mul(self, a: FieldMatrix, b: FieldMatrix) -> FieldMatrix:
        q = self.order
        if not a or not b or len(a[0]) != len(b):
            raise ValueError("matrix shape mismatch")
        cols = list(zip(*b))
        return [[sum(x * y for x, y in zip(row, col)) % q for col in cols] for row in a]

    @staticmethod
    def identity(n: int) -> FieldMatrix:
        return [[1 if i == j else 0 for j in range(n)] for i in range(n)]

    def invert(self, m: FieldMatrix) -> FieldMatrix | None:
        """Invert a square matrix, or return None when it is singular.

        Gaussian elimination with first-nonzero pivoting.  The None return
        is a normal outcome, not an error: callers doing rejection sampling
        consume it directly.
        """
        n = len(m)
        if n == 0 or any(len(row) != n for row in m):
            raise ValueError("matrix must be square and non-empty")
        q = self.order
        self._check(*(a for row in m for a in row))
        # Augment with the identity and reduce in place.
        aug = [list(row) + [1 if i == j else 0 for j in range(n)]
               for i, row in enumerate(m)]
        for col in range(n):
            pivot = next((r for r in range(col, n) if aug[r][col] != 0), None)
            if pivot is None:
                return None
            if pivot != col:
                aug[col], aug[pivot] = aug[pivot], aug[col]
            scale = pow(aug[col][col], -1, q)
            aug[col] = [(x * scale) % q for x in aug[col]]
            for r in range(n):
                if r != col and aug[r][col] != 0:
                    factor = aug[r][col]
                    aug[r] = [(x - factor * p) % q for x, p in zip(aug[r], aug[col])]
        return [row[n:] for row in aug]
