"""Exact-rational probability tables, rates and capacity bounds.

Everything in this module is computed with :class:`fractions.Fraction`;
no floating point appears anywhere.  The objects built here drive the
randomized retrieval protocol:

* a D x D *mixing matrix* M whose first row is constant 1/beta_1 and whose
  subdiagonal carries beta_j / beta_{j+1}, where beta_j = D*L / C(D, j);
* the pair of weight vectors obtained as column sums of M^(K-D) and of
  (I + M)^(K-D), which act as objective and normalizer of a small linear
  program over the last table row;
* the probability table P[i][j] (0 <= i <= K-D, 1 <= j <= D) from which
  the protocol samples its sparsity pair: the last row puts mass
  1/normalizer[j*] on the best column j*, and every earlier row i follows
  the recursion P_i = C(K-D, i) * M^(K-D-i) * P_{K-D};
* the achievable download rate D*L / (N - max_j objective_j/normalizer_j)
  together with two capacity expressions it is compared against.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from fractions import Fraction
from math import comb, lcm

from .gf import is_prime

ZERO = Fraction(0)
ONE = Fraction(1)


@dataclass
class SchemeParams:
    """Parameters of one protocol instance.

    Field name        CLI flag   meaning
    ----------        --------   -------
    num_messages      --K        messages stored by every server
    num_demands       --D        messages the user wants (1 <= D <= K)
    subpacket_count   --L        subpackets per message; N = D*L + 1 servers
    field_order       --q        prime field order, q >= 3
    message_len       --m        symbols per message; divisible by L

    field_order and message_len default to the smallest legal values so
    that probability-only computations (which ignore both) can be run
    from just K, D, L.
    """

    num_messages: int
    num_demands: int
    subpacket_count: int
    field_order: int = 3
    message_len: int | None = None

    def __post_init__(self):
        if self.num_demands < 1 or self.num_demands > self.num_messages:
            raise ValueError(
                f"need 1 <= D <= K, got D={self.num_demands}, K={self.num_messages}")
        if self.subpacket_count < 1:
            raise ValueError(f"subpacket count must be >= 1, got {self.subpacket_count}")
        if not is_prime(self.field_order) or self.field_order < 3:
            raise ValueError(f"field order must be a prime >= 3, got {self.field_order}")
        if self.message_len is None:
            self.message_len = self.subpacket_count
        if self.message_len < self.subpacket_count or self.message_len % self.subpacket_count:
            raise ValueError(
                f"message length {self.message_len} must be a positive multiple "
                f"of the subpacket count {self.subpacket_count}")

    @property
    def num_servers(self) -> int:
        return self.num_demands * self.subpacket_count + 1

    @property
    def num_interference(self) -> int:
        return self.num_messages - self.num_demands

    @property
    def subpacket_len(self) -> int:
        return self.message_len // self.subpacket_count


@dataclass
class MixingMatrix:
    """The D x D rational matrix whose powers generate the sampling table."""

    dim: int
    entries: tuple[tuple[Fraction, ...], ...]
    betas: tuple[Fraction, ...]


@dataclass
class ProbabilityTable:
    """Exact sampling distribution over pairs (i, j).

    probs[i][j-1] is the probability of drawing i interference messages and
    demand row-weight j.  objective/normalizer are the column-sum vectors
    described in the module docstring; best_index is the 1-based column j*
    maximizing objective[j]/normalizer[j] (smallest index on ties).
    """

    params: SchemeParams
    probs: tuple[tuple[Fraction, ...], ...]
    objective: tuple[Fraction, ...]
    normalizer: tuple[Fraction, ...]
    best_index: int

    def prob(self, i: int, j: int) -> Fraction:
        """Probability of the pair (i, j); j is 1-based."""
        return self.probs[i][j - 1]

    def zero_row_mass(self) -> Fraction:
        """Total mass of row i = 0 (the no-interference pairs)."""
        return sum(self.probs[0], ZERO)

    @property
    def alphas(self) -> tuple[Fraction, ...]:
        """alphas[i] = 1 / C(K-D, i), the per-support weight of row i."""
        r = self.params.num_interference
        return tuple(Fraction(1, comb(r, i)) for i in range(r + 1))


# -- rational matrix helpers (plain nested tuples/lists of Fraction) --

def _mat_mul(a, b):
    cols = list(zip(*b))
    return [[sum((x * y for x, y in zip(row, col)), ZERO) for col in cols] for row in a]


def _mat_vec(a, v):
    return [sum((x * y for x, y in zip(row, v)), ZERO) for row in a]


def _mat_pow(m, exponent: int):
    # Repeated multiplication; exponents are desk-scale (K - D).
    n = len(m)
    out = [[ONE if i == j else ZERO for j in range(n)] for i in range(n)]
    for _ in range(exponent):
        out = _mat_mul(out, m)
    return out


def _col_sums(m):
    return [sum(col, ZERO) for col in zip(*m)]


def build_mixing_matrix(params: SchemeParams) -> MixingMatrix:
    """Build the mixing matrix and its column weights beta_j = D*L/C(D, j)."""
    d = params.num_demands
    dl = d * params.subpacket_count
    betas = tuple(Fraction(dl, comb(d, j)) for j in range(1, d + 1))
    rows = [[1 / betas[0]] * d]
    for j in range(1, d):
        row = [ZERO] * d
        row[j - 1] = betas[j - 1] / betas[j]
        rows.append(row)
    return MixingMatrix(dim=d, entries=tuple(tuple(r) for r in rows), betas=betas)


def lp_vectors(params: SchemeParams,
               mix: MixingMatrix | None = None) -> tuple[tuple[Fraction, ...], tuple[Fraction, ...]]:
    """Column sums of M^(K-D) and (I+M)^(K-D): the LP objective/normalizer."""
    mix = mix or build_mixing_matrix(params)
    d = params.num_demands
    e = params.num_interference
    m = [list(row) for row in mix.entries]
    i_plus_m = [[m[r][c] + (ONE if r == c else ZERO) for c in range(d)] for r in range(d)]
    objective = tuple(_col_sums(_mat_pow(m, e)))
    normalizer = tuple(_col_sums(_mat_pow(i_plus_m, e)))
    return objective, normalizer


def select_best_column(objective, normalizer) -> int:
    """Smallest 1-based index maximizing objective[j]/normalizer[j]."""
    if any(g <= 0 for g in normalizer):
        raise ValueError("normalizer entries must be positive")
    ratios = [f / g for f, g in zip(objective, normalizer)]
    return ratios.index(max(ratios)) + 1


def compute_ptable(params: SchemeParams) -> ProbabilityTable:
    """Build the exact sampling table over pairs (i, j)."""
    mix = build_mixing_matrix(params)
    objective, normalizer = lp_vectors(params, mix)
    jstar = select_best_column(objective, normalizer)
    d = params.num_demands
    e = params.num_interference

    last = [ZERO] * d
    last[jstar - 1] = 1 / normalizer[jstar - 1]
    m = [list(row) for row in mix.entries]
    rows = []
    for i in range(e):
        scaled = _mat_vec(_mat_pow(m, e - i), last)
        rows.append(tuple(comb(e, i) * p for p in scaled))
    rows.append(tuple(last))
    return ProbabilityTable(params=params, probs=tuple(rows),
                            objective=objective, normalizer=normalizer,
                            best_index=jstar)


def achievable_rate(params: SchemeParams) -> Fraction:
    """Download rate D*L / (N - max_j objective_j/normalizer_j), exact."""
    objective, normalizer = lp_vectors(params)
    jstar = select_best_column(objective, normalizer)
    best = objective[jstar - 1] / normalizer[jstar - 1]
    dl = params.num_demands * params.subpacket_count
    return Fraction(dl, 1) / (params.num_servers - best)


def capacity_upper_bound(num_messages: int, num_demands: int, num_servers: int) -> Fraction:
    """General capacity upper bound for K messages, D demands, N servers."""
    if num_servers < 2 or not 1 <= num_demands <= num_messages:
        raise ValueError("need N >= 2 and 1 <= D <= K")
    n = Fraction(num_servers)
    whole = num_messages // num_demands
    frac_part = Fraction(num_messages, num_demands) - whole
    geometric = (1 - n ** -whole) / (1 - 1 / n)
    return 1 / (geometric + frac_part * n ** -whole)


def capacity_divisible(num_messages: int, num_demands: int, num_servers: int) -> Fraction:
    """Exact capacity (1 - 1/N) / (1 - 1/N^(K/D)); requires D | K."""
    if num_messages % num_demands:
        raise ValueError(
            f"D={num_demands} must divide K={num_messages} for the exact capacity")
    n = Fraction(num_servers)
    return (1 - 1 / n) / (1 - n ** -(num_messages // num_demands))


def verify_distribution(table: ProbabilityTable) -> tuple[bool, list[str]]:
    """Check that the table is a valid distribution with the right structure.

    Verifies, all in exact arithmetic: non-negativity, unit total mass,
    normalizer . last_row = 1, and the row recursion
    P_i = C(K-D, i) * M^(K-D-i) * P_{K-D} for every i < K-D.
    Violations are returned as human-readable findings, never raised.
    """
    problems: list[str] = []
    params = table.params
    e = params.num_interference
    for i, row in enumerate(table.probs):
        for j, p in enumerate(row, start=1):
            if p < 0:
                problems.append(f"P[{i}][{j}] = {p} is negative")
    total = sum((p for row in table.probs for p in row), ZERO)
    if total != 1:
        problems.append(f"total mass is {total}, expected 1")
    last = list(table.probs[e])
    pinned = sum((g * p for g, p in zip(table.normalizer, last)), ZERO)
    if pinned != 1:
        problems.append(f"normalizer . last_row = {pinned}, expected 1")
    mix = build_mixing_matrix(params)
    m = [list(row) for row in mix.entries]
    for i in range(e):
        expect = [comb(e, i) * p for p in _mat_vec(_mat_pow(m, e - i), last)]
        if list(table.probs[i]) != expect:
            problems.append(f"row {i} breaks the recursion: {list(table.probs[i])} != {expect}")
    return (not problems), problems


def verify_divisible_identity(params: SchemeParams) -> bool:
    """Check sum_j P[0][j] = (D*L+1)^(1 - K/D) exactly; requires D | K."""
    if params.num_messages % params.num_demands:
        raise ValueError("the identity requires D | K")
    table = compute_ptable(params)
    power = params.num_messages // params.num_demands - 1
    return table.zero_row_mass() == Fraction(1, params.num_servers ** power)


def lp_optimality_check(params: SchemeParams, trials: int, seed: int | str = 0) -> bool:
    """Confirm the last table row solves its defining linear program.

    The program maximizes objective . p subject to normalizer . p = 1 and
    p >= 0.  Its feasible set is a simplex with vertices e_j/normalizer[j],
    so it suffices that (a) no vertex beats the chosen column j*, and
    (b) no random convex combination of vertices does either.  The random
    feasible points use exact rational weights; nothing is approximate.
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    objective, normalizer = lp_vectors(params)
    jstar = select_best_column(objective, normalizer)
    optimum = objective[jstar - 1] / normalizer[jstar - 1]
    ratios = [f / g for f, g in zip(objective, normalizer)]
    if any(r > optimum for r in ratios):
        return False
    rng = random.Random(seed)
    d = params.num_demands
    for _ in range(trials):
        weights = [rng.randrange(0, 1000) for _ in range(d)]
        if not any(weights):
            weights[rng.randrange(d)] = 1
        total = sum(weights)
        value = sum((Fraction(w, total) * r for w, r in zip(weights, ratios)), ZERO)
        if value > optimum:
            return False
    return True


def pair_sampling_weights(table: ProbabilityTable) -> tuple[int, list[tuple[int, int, int]]]:
    """Integer sampling weights for exact pair draws.

    Returns (den, atoms) where den is the common denominator of all table
    entries and atoms lists (i, j, weight) with weight = P[i][j] * den for
    every nonzero entry, in fixed (i asc, j asc) order.  A uniform integer
    draw from [0, den) then realizes the distribution exactly.

    The result is cached on the table instance: samplers call this once
    per draw and the lcm work would otherwise dominate tight loops.
    """
    cached = table.__dict__.get("_pair_weights")
    if cached is not None:
        return cached
    den = lcm(*(p.denominator for row in table.probs for p in row))
    atoms = []
    for i, row in enumerate(table.probs):
        for j, p in enumerate(row, start=1):
            if p > 0:
                atoms.append((i, j, int(p * den)))
    table._pair_weights = (den, atoms)
    return den, atoms
