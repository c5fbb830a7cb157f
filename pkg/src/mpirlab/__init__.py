"""Multi-message private information retrieval laboratory.

A user retrieves D of K replicated messages from N = D*L + 1 servers
without revealing which ones: each message splits into L subpackets, each
server returns one linear combination over GF(q), and a carefully chosen
exact-rational distribution over query shapes makes every server's view
independent of the demand.  This package computes those distributions and
rates exactly, runs the full protocol end to end, and audits the privacy
and recoverability guarantees.
"""

from .audit import (
    PrivacyAuditReport,
    ValueAuditReport,
    audit_privacy,
    closed_form_support_probability,
    exact_support_distribution,
    sample_server_query,
    statistical_value_audit,
)
from .gf import PrimeField, is_prime
from .harness import (
    AnswerTypeRow,
    RateReport,
    TrialResult,
    empirical_rate,
    enumerate_answer_types,
    rate_report,
    run_trial,
)
from .ratemath import (
    MixingMatrix,
    ProbabilityTable,
    SchemeParams,
    achievable_rate,
    build_mixing_matrix,
    capacity_divisible,
    capacity_upper_bound,
    compute_ptable,
    lp_optimality_check,
    lp_vectors,
    select_best_column,
    verify_distribution,
    verify_divisible_identity,
)
from .scheme import (
    IntegrityError,
    MatrixConstructionError,
    QueryPlan,
    build_query_plan,
    decode,
    sample_pair,
    sample_regular_matrix,
    sample_sparse_vector,
)
from .server import MessageStore, answer, generate_store, read_store, write_store

__version__ = "0.1.0"

__all__ = [
    "AnswerTypeRow",
    "IntegrityError",
    "MatrixConstructionError",
    "MessageStore",
    "MixingMatrix",
    "PrimeField",
    "PrivacyAuditReport",
    "ProbabilityTable",
    "QueryPlan",
    "RateReport",
    "SchemeParams",
    "TrialResult",
    "ValueAuditReport",
    "achievable_rate",
    "answer",
    "audit_privacy",
    "build_mixing_matrix",
    "build_query_plan",
    "capacity_divisible",
    "capacity_upper_bound",
    "closed_form_support_probability",
    "compute_ptable",
    "decode",
    "empirical_rate",
    "enumerate_answer_types",
    "exact_support_distribution",
    "generate_store",
    "is_prime",
    "lp_optimality_check",
    "lp_vectors",
    "rate_report",
    "read_store",
    "run_trial",
    "sample_pair",
    "sample_regular_matrix",
    "sample_server_query",
    "sample_sparse_vector",
    "select_best_column",
    "statistical_value_audit",
    "verify_distribution",
    "verify_divisible_identity",
    "write_store",
]
