"""User side of the retrieval protocol: query construction and decoding.

A query plan is built in three steps.  First the user samples a pair
(i, j) from the exact table of :mod:`mpirlab.ratemath`, an i-sparse
interference coefficient vector h of length K-D, and a j-regular
invertible D x D demand coefficient matrix G whose row supports are
successive circular shifts of a uniformly chosen first row.  It then lays
out N = D*L + 1 coefficient vectors of length K*L:

* vector 1 combines the (secretly relabeled) first subpackets of the i
  chosen interference messages with the coefficients of h (all-zero when
  i = 0);
* vector (l-1)*D + m + 1 adds, on top of vector 1, row m of G applied to
  logical subpacket l of the D demand messages.

Finally a uniform permutation assigns one vector to each server.  The
decoder subtracts the base vector's answer from every other answer and
solves one D x D system per subpacket index with G's inverse.

Randomness contract: one ``random.Random`` stream drives a plan, consumed
in this fixed order -- pair, h support, h values, G row-1 support, G
values (with rejection until invertible), per-message subpacket
labelings for messages 1..K, server permutation.  Same seed, same plan.
"""

from __future__ import annotations

import random
from dataclasses import dataclass

from .gf import PrimeField
from .ratemath import ProbabilityTable, SchemeParams, pair_sampling_weights


class IntegrityError(Exception):
    """Answers are inconsistent with the plan (never fires on honest servers)."""


class MatrixConstructionError(Exception):
    """No invertible regular matrix found within the rejection cap."""


# Rejection-sampling cap for the demand matrix; a hard failure beats
# looping forever on parameter points where such matrices may not exist.
MAX_MATRIX_ATTEMPTS = 1000

# PrimeField instances are immutable; reuse them across the hot
# rejection/decoding loops instead of revalidating the order each time.
_FIELD_CACHE: dict[int, PrimeField] = {}


def _field(order: int) -> PrimeField:
    cached = _FIELD_CACHE.get(order)
    if cached is None:
        cached = _FIELD_CACHE[order] = PrimeField(order)
    return cached


@dataclass
class QueryPlan:
    """Everything the user keeps to issue queries and decode the answers.

    ``queries[n]`` is the vector served to server n; ``permutation[n]`` is
    the index of that vector in construction order (0 = the base vector).
    ``labeling[k-1][l-1]`` is the physical subpacket that message k's
    logical subpacket l was routed to; servers never see it.
    """

    params: SchemeParams
    demand: tuple[int, ...]
    labeling: tuple[tuple[int, ...], ...]
    pair: tuple[int, int]
    interference_coeffs: tuple[int, ...]
    demand_matrix: tuple[tuple[int, ...], ...]
    permutation: tuple[int, ...]
    queries: tuple[tuple[int, ...], ...]


def sample_pair(table: ProbabilityTable, rng: random.Random) -> tuple[int, int]:
    """Draw (i, j) with the table's exact probabilities.

    A single uniform integer from [0, common denominator) is mapped onto
    integer weights, so the distribution is realized exactly -- no floats.
    """
    den, atoms = pair_sampling_weights(table)
    draw = rng.randrange(den)
    acc = 0
    for i, j, weight in atoms:
        acc += weight
        if draw < acc:
            return i, j
    raise AssertionError("sampling weights do not cover the denominator")


def sample_sparse_vector(num_nonzero: int, length: int, field_order: int,
                         rng: random.Random) -> tuple[int, ...]:
    """Vector with exactly ``num_nonzero`` nonzero entries.

    The support is uniform over all subsets of that size; values are
    independent uniform draws from the nonzero field elements.  Support
    positions are consumed before values.
    """
    if not 0 <= num_nonzero <= length:
        raise ValueError(f"need 0 <= nonzeros <= {length}, got {num_nonzero}")
    out = [0] * length
    support = sorted(rng.sample(range(length), num_nonzero))
    for pos in support:
        out[pos] = rng.randrange(1, field_order)
    return tuple(out)


def shift_pattern(positions, steps: int, dim: int) -> frozenset[int]:
    """Circularly shift a set of 0-based positions by ``steps`` mod dim."""
    return frozenset((p + steps) % dim for p in positions)


def sample_regular_matrix(row_weight: int, dim: int, field_order: int,
                          rng: random.Random) -> tuple[tuple[int, ...], ...]:
    """Invertible dim x dim matrix with ``row_weight`` nonzeros per row.

    Row 1's support is uniform over all subsets of the given size and each
    later row's support is the one-step circular shift of the previous
    row's.  Values are uniform over the nonzero elements, redrawn whole
    until the matrix is invertible; the support is kept fixed across
    redraws, so conditioning is on values only and is independent of which
    messages are being retrieved.
    """
    if not 1 <= row_weight <= dim:
        raise ValueError(f"need 1 <= row weight <= {dim}, got {row_weight}")
    field = _field(field_order)
    base = sorted(rng.sample(range(dim), row_weight))
    supports = [sorted(shift_pattern(base, r, dim)) for r in range(dim)]
    for _ in range(MAX_MATRIX_ATTEMPTS):
        rows = []
        for support in supports:
            row = [0] * dim
            for pos in support:
                row[pos] = rng.randrange(1, field_order)
            rows.append(row)
        if field.invert(rows) is not None:
            return tuple(tuple(r) for r in rows)
    raise MatrixConstructionError(
        f"no invertible {row_weight}-regular {dim}x{dim} matrix over "
        f"GF({field_order}) after {MAX_MATRIX_ATTEMPTS} attempts")


def interference_indices(params: SchemeParams, demand) -> tuple[int, ...]:
    """The ascending message indices outside the demand set."""
    chosen = set(demand)
    return tuple(k for k in range(1, params.num_messages + 1) if k not in chosen)


def _slot(params: SchemeParams, message: int, physical_subpacket: int) -> int:
    return (message - 1) * params.subpacket_count + (physical_subpacket - 1)


def _validated_demand(params: SchemeParams, demand) -> tuple[int, ...]:
    indices = tuple(sorted(demand))
    if len(indices) != params.num_demands or len(set(indices)) != len(indices):
        raise ValueError(f"demand must be {params.num_demands} distinct indices")
    if indices and (indices[0] < 1 or indices[-1] > params.num_messages):
        raise ValueError(f"demand indices must lie in [1, {params.num_messages}]")
    return indices


def build_query_plan(params: SchemeParams, demand, table: ProbabilityTable,
                     rng: random.Random) -> QueryPlan:
    """Construct the per-server coefficient vectors for one retrieval."""
    demand = _validated_demand(params, demand)
    others = interference_indices(params, demand)
    K, D, L, q = (params.num_messages, params.num_demands,
                  params.subpacket_count, params.field_order)

    i, j = sample_pair(table, rng)
    coeffs = sample_sparse_vector(i, K - D, q, rng)
    matrix = sample_regular_matrix(j, D, q, rng)
    labeling = tuple(tuple(rng.sample(range(1, L + 1), L)) for _ in range(K))

    base = [0] * (K * L)
    for c, message in zip(coeffs, others):
        if c:
            base[_slot(params, message, labeling[message - 1][0])] = c
    vectors = [tuple(base)]
    for l in range(1, L + 1):
        for row in matrix:
            vec = list(base)
            for c, message in zip(row, demand):
                if c:
                    vec[_slot(params, message, labeling[message - 1][l - 1])] = c
            vectors.append(tuple(vec))

    permutation = list(range(params.num_servers))
    rng.shuffle(permutation)
    queries = tuple(vectors[v] for v in permutation)
    return QueryPlan(params=params, demand=demand, labeling=labeling,
                     pair=(i, j), interference_coeffs=coeffs,
                     demand_matrix=matrix, permutation=tuple(permutation),
                     queries=queries)


def decode(plan: QueryPlan, answers) -> list[tuple[int, ...]]:
    """Recover the demand messages from the per-server answers.

    ``answers[n]`` must correspond to ``plan.queries[n]``: a vector of
    m/L symbols, or empty exactly where the query is all-zero.  Returns
    the demand messages in ascending index order, each of m symbols.
    """
    params = plan.params
    N, q, spl = params.num_servers, params.field_order, params.subpacket_len
    D, L = params.num_demands, params.subpacket_count
    if len(answers) != N:
        raise ValueError(f"expected {N} answers, got {len(answers)}")
    server_of = [0] * N  # construction-order vector -> server index
    for server, vec_index in enumerate(plan.permutation):
        server_of[vec_index] = server
    for server, share in enumerate(answers):
        if any(plan.queries[server]):
            if len(share) != spl:
                raise ValueError(
                    f"answer {server} has {len(share)} symbols, expected {spl}")
        elif len(share) != 0:
            raise ValueError(f"answer {server} must be empty for an all-zero query")

    field = PrimeField(q)
    inverse = field.invert([list(r) for r in plan.demand_matrix])
    if inverse is None:
        raise IntegrityError("demand matrix is singular; answers cannot be trusted")

    base = list(answers[server_of[0]]) or [0] * spl
    logical: dict[tuple[int, int], list[int]] = {}
    for l in range(1, L + 1):
        diffs = []
        for m in range(1, D + 1):
            share = answers[server_of[(l - 1) * D + m]]
            diffs.append([(a - b) % q for a, b in zip(share, base)])
        for d in range(D):
            logical[(d, l)] = [
                sum(inverse[d][r] * diffs[r][s] for r in range(D)) % q
                for s in range(spl)
            ]

    messages = []
    for d, message in enumerate(plan.demand):
        symbols = [0] * params.message_len
        for l in range(1, L + 1):
            phys = plan.labeling[message - 1][l - 1]
            symbols[(phys - 1) * spl:phys * spl] = logical[(d, l)]
        messages.append(tuple(symbols))
    return messages
