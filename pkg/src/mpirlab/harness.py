"""End-to-end protocol driver, rate measurement and answer-type tables.

Download accounting works in *message units*: one unit is m symbols (one
whole message), so each nonzero answer of m/L symbols contributes 1/L of
a unit and the rate is simply D / (downloaded units).  The unit-free
bookkeeping makes the exact and empirical numbers directly comparable.
"""

from __future__ import annotations

import random
import statistics
from dataclasses import dataclass
from fractions import Fraction
from itertools import combinations
from math import comb

from .ratemath import (
    ProbabilityTable,
    SchemeParams,
    achievable_rate,
    capacity_divisible,
    capacity_upper_bound,
    compute_ptable,
)
from .scheme import build_query_plan, decode
from .server import MessageStore, answer, generate_store


@dataclass
class TrialResult:
    """One full retrieval: plan, N answers, decode, compare to ground truth."""

    demand: tuple[int, ...]
    downloaded_subpacket_units: int  # number of nonzero answers
    decoded_ok: bool
    seed: int | str


@dataclass
class RateReport:
    """Exact rate numbers, optionally alongside an empirical measurement."""

    params: SchemeParams
    theoretical_rate: Fraction
    expected_download_units: Fraction
    capacity_upper: Fraction
    capacity_exact: Fraction | None
    trials: int = 0
    empirical_rate: float | None = None
    empirical_se: float | None = None
    decode_failures: int = 0

    def __post_init__(self):
        if self.theoretical_rate > self.capacity_upper:
            raise ValueError(
                f"rate {self.theoretical_rate} exceeds the capacity bound "
                f"{self.capacity_upper}; the table construction is broken")


def run_trial(store: MessageStore, demand, table: ProbabilityTable,
              seed: int | str) -> TrialResult:
    """Build a plan, query all servers in-process, decode and verify."""
    plan = build_query_plan(store.params, demand, table, random.Random(seed))
    answers = [answer(store, query) for query in plan.queries]
    decoded = decode(plan, answers)
    truth = [store.messages[w - 1] for w in plan.demand]
    return TrialResult(demand=plan.demand,
                       downloaded_subpacket_units=sum(1 for a in answers if a),
                       decoded_ok=decoded == truth,
                       seed=seed)


def rate_report(params: SchemeParams,
                table: ProbabilityTable | None = None) -> RateReport:
    """The exact-only report: rate, expected download, capacity bounds."""
    table = table or compute_ptable(params)
    expected_units = Fraction(params.num_servers - table.zero_row_mass(),
                              params.subpacket_count)
    exact = None
    if params.num_messages % params.num_demands == 0:
        exact = capacity_divisible(params.num_messages, params.num_demands,
                                   params.num_servers)
    return RateReport(
        params=params,
        theoretical_rate=achievable_rate(params),
        expected_download_units=expected_units,
        capacity_upper=capacity_upper_bound(params.num_messages,
                                            params.num_demands,
                                            params.num_servers),
        capacity_exact=exact)


def empirical_rate(params: SchemeParams, trials: int, seed: int | str = 0,
                   store: MessageStore | None = None) -> RateReport:
    """Measure the rate over seeded trials with uniformly random demands.

    Trial t is driven by a seed derived from (seed, t), so runs are
    reproducible and could be fanned out.  The standard error of the rate
    comes from the per-trial download variance via the delta method.
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    store = store or generate_store(params, random.Random(f"{seed}:store"))
    table = compute_ptable(params)
    report = rate_report(params, table)
    unit_counts = []
    failures = 0
    for t in range(trials):
        rng = random.Random(f"{seed}:demand:{t}")
        demand = tuple(sorted(rng.sample(range(1, params.num_messages + 1),
                                         params.num_demands)))
        result = run_trial(store, demand, table, f"{seed}:trial:{t}")
        unit_counts.append(result.downloaded_subpacket_units)
        failures += not result.decoded_ok
    L, D = params.subpacket_count, params.num_demands
    mean_units = statistics.fmean(unit_counts) / L
    rate = D / mean_units
    if trials > 1:
        se_mean = statistics.stdev(unit_counts) / L / trials ** 0.5
        se_rate = D / mean_units ** 2 * se_mean
    else:
        se_rate = None
    report.trials = trials
    report.empirical_rate = rate
    report.empirical_se = se_rate
    report.decode_failures = failures
    return report


@dataclass
class AnswerTypeRow:
    """One realizable class of answer sets and its exact probability.

    A class fixes the sampled pair, the interference messages chosen
    (1-based positions into the ascending interference list) and the
    first demand row's support pattern (positions into the ascending
    demand list); its circular shifts belong to the same class.
    """

    pair: tuple[int, int]
    interference_choice: tuple[int, ...]
    demand_pattern: tuple[int, ...]
    probability: Fraction

    def describe(self) -> str:
        i, j = self.pair
        inter = "{" + ",".join(map(str, self.interference_choice)) + "}"
        pattern = "{" + ",".join(map(str, self.demand_pattern)) + "}"
        tag = "" if self.probability else "  [zero probability]"
        return (f"(i={i}, j={j}) interference {inter} demand pattern {pattern}: "
                f"{self.probability}{tag}")


def enumerate_answer_types(params: SchemeParams) -> list[AnswerTypeRow]:
    """All (pair, interference choice, demand pattern) classes with probabilities.

    Each pair (i, j) splits evenly into C(K-D, i) * C(D, j) equally likely
    classes; zero-probability pairs still contribute (flagged) rows so the
    enumeration is visibly exhaustive.  Probabilities over all rows sum
    to exactly 1.
    """
    table = compute_ptable(params)
    rows = []
    e, D = params.num_interference, params.num_demands
    for i in range(e + 1):
        for j in range(1, D + 1):
            share = table.prob(i, j) / (comb(e, i) * comb(D, j))
            for chosen in combinations(range(1, e + 1), i):
                for pattern in combinations(range(1, D + 1), j):
                    rows.append(AnswerTypeRow(pair=(i, j),
                                              interference_choice=chosen,
                                              demand_pattern=pattern,
                                              probability=share))
    return rows
