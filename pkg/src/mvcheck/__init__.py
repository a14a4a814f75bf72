"""Correctness checking for multi-version transactional memory histories."""

from .conflicts import ConflictKind, ConflictPair, ConflictSet, OpRef, conflict_order, equivalent, mvc_order, satisfies
from .dsl import DslError, parse_history, parse_workload, serialize_history
from .graph import MVCG, EdgeReason, build_mvcg, is_acyclic, serialization_witness, to_dot
from .history import (
    CommitRef,
    Event,
    History,
    InvalidHistoryError,
    TxnStatus,
    WellFormednessError,
    completion,
    is_legal,
    is_multi_versioned,
    is_valid,
    last_write,
    real_time_pairs,
    valid_write,
    validate_well_formed,
)

__version__ = "0.1.0"

__all__ = [
    "CommitRef", "ConflictKind", "ConflictPair", "ConflictSet", "DslError", "EdgeReason", "Event", "History",
    "InvalidHistoryError", "MVCG", "OpRef", "TxnStatus", "WellFormednessError", "build_mvcg", "completion",
    "conflict_order", "equivalent", "is_acyclic", "is_legal", "is_multi_versioned", "is_valid", "last_write",
    "mvc_order", "parse_history", "parse_workload", "real_time_pairs", "satisfies", "serialization_witness",
    "serialize_history", "to_dot", "valid_write", "validate_well_formed",
]
