"""rlakit: a risk-limiting post-election audit engine.

Plans batch-comparison audits, draws publicly verifiable random
samples, evaluates hand-count discrepancies with conservative tests,
and drives the stop/escalate/full-count workflow over a tamper-evident
log.  See README.md for the tour.
"""

__version__ = "0.1.0"

from .model import (  # noqa: F401
    AuditPlan,
    Batch,
    Contest,
    HandCount,
    MarginSet,
    Rule,
    decode_election,
    encode_election,
    validate_contest,
)
