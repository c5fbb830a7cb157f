"""Privacy auditing: does a server's query distribution depend on the demand?

The protocol is private when the query any single server receives is
distributed identically for every possible demand set.  Each query's
*message support* -- the set of messages with one contributing subpacket
-- carries all demand-dependent structure, because the nonzero values and
the secret subpacket relabeling are drawn independently of the demand.
This module therefore audits at two levels:

* ``exact_support_distribution`` enumerates the scheme's randomness
  (sampling pair, interference support, demand row pattern and its
  circular shifts, vector-to-server assignment) and produces each
  support's exact rational probability.  ``audit_privacy`` runs it for
  every demand set and requires the distributions to agree support for
  support, and additionally to match the closed-form prediction that only
  depends on the counts I = |S \\ W| and J = |S intersect W|:

      J  = 0:          1/N * 1/C(K-D, I) * sum_j P[I][j]
      0 < J < D:       L/N * 1/C(K-D, I) * D/C(D, J) * P[I][J]
      J  = D:          D*L/N * 1/C(K-D, I) * P[I][D]

* ``statistical_value_audit`` complements this with a sampled,
  value-level homogeneity chi-square over full query vectors at a
  parameter point small enough to tabulate, covering the part the exact
  support audit deliberately leaves out.
"""

from __future__ import annotations

import hashlib
import random
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import combinations
from math import comb

from scipy.stats import chi2_contingency

from .ratemath import ProbabilityTable, SchemeParams, compute_ptable, pair_sampling_weights
from .scheme import (
    interference_indices,
    sample_regular_matrix,
    sample_sparse_vector,
    shift_pattern,
)

SupportDistribution = dict[frozenset[int], Fraction]

# statistical_value_audit refuses query spaces larger than this.
MAX_VALUE_SPACE = 20_000


def exact_support_distribution(params: SchemeParams, table: ProbabilityTable,
                               demand) -> SupportDistribution:
    """Exact support distribution of one fixed server's query.

    Brute-force enumeration over the scheme's discrete randomness; the
    closed-form case probabilities above are never consulted, so this
    serves as an independent oracle for them.
    """
    demand = tuple(sorted(demand))
    others = interference_indices(params, demand)
    D, L, N = params.num_demands, params.subpacket_count, params.num_servers
    dist: SupportDistribution = {}

    def add(s: frozenset[int], p: Fraction) -> None:
        dist[s] = dist.get(s, Fraction(0)) + p

    for i in range(params.num_interference + 1):
        for j in range(1, D + 1):
            p = table.prob(i, j)
            if p == 0:
                continue
            atom = p / (comb(len(others), i) * comb(D, j) * N)
            for chosen in combinations(others, i):
                base = frozenset(chosen)
                for pattern in combinations(range(D), j):
                    add(base, atom)  # the base vector, one server slot
                    for row in range(D):
                        hit = frozenset(demand[pos] for pos
                                        in shift_pattern(pattern, row, D))
                        add(base | hit, atom * L)  # L slots share this support
    return dist


def closed_form_support_probability(params: SchemeParams, table: ProbabilityTable,
                                    interference_hits: int, demand_hits: int) -> Fraction:
    """Predicted probability of a support with I interference and J demand messages."""
    i, j = interference_hits, demand_hits
    if not 0 <= i <= params.num_interference or not 0 <= j <= params.num_demands:
        return Fraction(0)
    D, L, N = params.num_demands, params.subpacket_count, params.num_servers
    alpha = Fraction(1, comb(params.num_interference, i))
    if j == 0:
        return Fraction(1, N) * alpha * sum(table.probs[i], Fraction(0))
    if j < D:
        return Fraction(L, N) * alpha * Fraction(D, comb(D, j)) * table.prob(i, j)
    return Fraction(D * L, N) * alpha * table.prob(i, D)


@dataclass
class PrivacyAuditReport:
    """Outcome of the exact support-level audit across all demand sets."""

    params: SchemeParams
    passed: bool
    num_demand_sets: int
    digests: dict[tuple[int, ...], str] = field(default_factory=dict)
    witness: tuple | None = None  # (demand, support, got, expected, what)

    def records(self) -> list[dict]:
        rows = [{"record": "verdict", "passed": self.passed,
                 "demand_sets": self.num_demand_sets}]
        for demand, digest in self.digests.items():
            rows.append({"record": "distribution",
                         "demand": list(demand), "digest": digest})
        if self.witness:
            demand, sup, got, expected, what = self.witness
            rows.append({"record": "witness", "demand": list(demand),
                         "support": sorted(sup), "probability": str(got),
                         "expected": str(expected), "check": what})
        return rows

    def format_text(self) -> str:
        lines = [f"privacy audit: {'pass' if self.passed else 'FAIL'} "
                 f"({self.num_demand_sets} demand sets)"]
        for demand, digest in self.digests.items():
            lines.append(f"  demand {set(demand)}: digest {digest}")
        if self.witness:
            demand, sup, got, expected, what = self.witness
            lines.append(f"  witness: demand {set(demand)}, support "
                         f"{set(sup) or '{}'}: {got} != {expected} ({what})")
        return "\n".join(lines)


def _digest(dist: SupportDistribution) -> str:
    text = ";".join(f"{sorted(s)}={p}" for s, p in sorted(dist.items(),
                                                          key=lambda kv: sorted(kv[0])))
    return hashlib.sha256(text.encode()).hexdigest()[:12]


def audit_privacy(params: SchemeParams, table: ProbabilityTable) -> PrivacyAuditReport:
    """Exact support-level privacy audit over every possible demand set.

    For each demand set the oracle distribution must (a) sum to one,
    (b) match the closed-form (I, J) prediction entry for entry, and
    (c) equal the first demand set's distribution support for support.
    The first violation becomes the report's witness.
    """
    demand_sets = list(combinations(range(1, params.num_messages + 1),
                                    params.num_demands))
    report = PrivacyAuditReport(params=params, passed=True,
                                num_demand_sets=len(demand_sets))
    reference: SupportDistribution | None = None
    for demand in demand_sets:
        dist = exact_support_distribution(params, table, demand)
        report.digests[demand] = _digest(dist)
        total = sum(dist.values(), Fraction(0))
        if total != 1:
            report.passed = False
            report.witness = (demand, frozenset(), total, Fraction(1), "total mass")
            return report
        for sup, p in dist.items():
            want = closed_form_support_probability(
                params, table, len(sup - set(demand)), len(sup & set(demand)))
            if p != want:
                report.passed = False
                report.witness = (demand, sup, p, want, "closed form")
                return report
        if reference is None:
            reference = dist
            continue
        for sup in set(dist) | set(reference):
            got = dist.get(sup, Fraction(0))
            want = reference.get(sup, Fraction(0))
            if got != want:
                report.passed = False
                report.witness = (demand, sup, got, want,
                                  f"differs from demand {set(demand_sets[0])}")
                return report
    return report


def sample_server_query(params: SchemeParams, table: ProbabilityTable, demand,
                        rng: random.Random) -> tuple[int, ...]:
    """Sample the query one fixed server receives, values included.

    Distributionally faithful shortcut for statistical auditing: instead
    of materializing all N vectors it draws the server's uniform vector
    slot directly, and only the physical subpacket indices of touched
    messages (each uniform and independent, exactly as the full secret
    labeling would route them).
    """
    demand = tuple(sorted(demand))
    others = interference_indices(params, demand)
    D, L, q = params.num_demands, params.subpacket_count, params.field_order
    den, atoms = pair_sampling_weights(table)
    draw = rng.randrange(den)
    acc = 0
    for i, j, weight in atoms:
        acc += weight
        if draw < acc:
            break
    slot = rng.randrange(params.num_servers)
    coeffs = sample_sparse_vector(i, len(others), q, rng)
    matrix = sample_regular_matrix(j, D, q, rng)

    query = [0] * (params.num_messages * L)
    for c, message in zip(coeffs, others):
        if c:
            phys = rng.randrange(L)
            query[(message - 1) * L + phys] = c
    if slot > 0:
        row = matrix[(slot - 1) % D]
        for c, message in zip(row, demand):
            if c:
                phys = rng.randrange(L)
                query[(message - 1) * L + phys] = c
    return tuple(query)


@dataclass
class ValueAuditReport:
    """Outcome of the sampled value-level homogeneity test."""

    params: SchemeParams
    passed: bool
    p_value: float
    statistic: float
    dof: int
    trials_per_group: int
    num_groups: int
    num_categories: int
    significance: float

    def format_text(self) -> str:
        return (f"value audit: {'pass' if self.passed else 'FAIL'} "
                f"(chi2={self.statistic:.2f}, dof={self.dof}, "
                f"p={self.p_value:.4g}, alpha={self.significance}, "
                f"{self.num_groups} demand sets x {self.trials_per_group} trials, "
                f"{self.num_categories} distinct queries)")


def statistical_value_audit(params: SchemeParams, trials: int,
                            significance: float = 0.001,
                            seed: int | str = 0,
                            sampler=None) -> ValueAuditReport:
    """Chi-square homogeneity of sampled query values across demand sets.

    Draws ``trials`` queries per demand set with ``sampler`` (the faithful
    one by default; tests inject biased ones as controls) and tests
    whether the tabulated query distributions are homogeneous.  Passing
    means p-value >= significance; a correct scheme fails spuriously with
    probability ~significance, which bounds the flakiness of this check.
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    space = params.field_order ** (params.num_messages * params.subpacket_count)
    if space > MAX_VALUE_SPACE:
        raise ValueError(
            f"query-value space of size {space} is too large to tabulate "
            f"(limit {MAX_VALUE_SPACE}); pick smaller K, L or q")
    sampler = sampler or sample_server_query
    table = compute_ptable(params)
    demand_sets = list(combinations(range(1, params.num_messages + 1),
                                    params.num_demands))
    counts = []
    for g, demand in enumerate(demand_sets):
        rng = random.Random(f"{seed}:group:{g}")
        tally: dict[tuple[int, ...], int] = {}
        for _ in range(trials):
            query = sampler(params, table, demand, rng)
            tally[query] = tally.get(query, 0) + 1
        counts.append(tally)
    categories = sorted(set().union(*counts))
    matrix = [[tally.get(c, 0) for c in categories] for tally in counts]
    if len(demand_sets) == 1 or len(categories) == 1:
        # A single group (K = D) or a single observed query: nothing to compare.
        statistic, p_value, dof = 0.0, 1.0, 0
    else:
        statistic, p_value, dof, _ = chi2_contingency(matrix)
    return ValueAuditReport(params=params, passed=bool(p_value >= significance),
                            p_value=float(p_value), statistic=float(statistic),
                            dof=int(dof), trials_per_group=trials,
                            num_groups=len(demand_sets),
                            num_categories=len(categories),
                            significance=significance)
