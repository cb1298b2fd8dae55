"""Causal discovery and root cause analysis benchmark toolkit."""

from ._core import (
    Case,
    CaseMetadata,
    CausalGraph,
    Dataset,
    RcakitError,
    ac_at_k,
    avg_at_k,
    discover,
    discovery_methods,
    generate_case,
    graph_f1,
    load_case,
    random_dag,
    rca,
    rca_methods,
    run_suite,
    shd,
    write_case,
)

__all__ = [
    "Case",
    "CaseMetadata",
    "CausalGraph",
    "Dataset",
    "RcakitError",
    "ac_at_k",
    "avg_at_k",
    "discover",
    "discovery_methods",
    "generate_case",
    "graph_f1",
    "load_case",
    "random_dag",
    "rca",
    "rca_methods",
    "run_suite",
    "shd",
    "write_case",
]
