"""provledger: a layered IoT data-provenance ledger on a simulated block chain."""

from . import errors
from .bench import BenchmarkReport, run_benchmark
from .canonical import canonical_json, digest_of
from .ledger import (
    Block,
    ChainVerification,
    Ledger,
    SimConfig,
    Transaction,
    init_ledger_dir,
    load_ledger,
    verify_chain,
)
from .policy import (
    AssignmentStrategy,
    ContextSchema,
    ExposureFlags,
    PolicyLayer,
    UseCasePolicy,
    policy_from_dict,
)
from .provenance import ProvenanceLayer
from .query import ProvenanceGraph, Trace, derivation_graph, lineage, traces
from .records import Context, ProvenanceRecord, RecordStatus, RecordStore
from .scenario import ScenarioStep, StepOutcome, load_scenario, run_scenario
from .tokens import ClientId, Token, TokenRegistry, ZERO_CLIENT

__version__ = "0.1.0"

__all__ = [
    "AssignmentStrategy",
    "BenchmarkReport",
    "Block",
    "ChainVerification",
    "ClientId",
    "Context",
    "ContextSchema",
    "ExposureFlags",
    "Ledger",
    "PolicyLayer",
    "ProvenanceGraph",
    "ProvenanceLayer",
    "ProvenanceRecord",
    "RecordStatus",
    "RecordStore",
    "ScenarioStep",
    "SimConfig",
    "StepOutcome",
    "Token",
    "TokenRegistry",
    "Trace",
    "Transaction",
    "UseCasePolicy",
    "ZERO_CLIENT",
    "canonical_json",
    "derivation_graph",
    "digest_of",
    "errors",
    "init_ledger_dir",
    "lineage",
    "load_ledger",
    "load_scenario",
    "policy_from_dict",
    "run_benchmark",
    "run_scenario",
    "traces",
    "verify_chain",
]
