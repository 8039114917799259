"""TTIQ: a type system for integrating heterogeneous linked-data sources.

Subtype proofs between schema types yield executable coercions, which a
dataspace uses to answer queries over sources with different schemas.
"""

from .coercion import (
    Coercion,
    OrderResult,
    apply,
    compose,
    extract,
    format_coercion,
    natural_leq,
)
from .core import (
    Environment,
    Named,
    Schema,
    expand,
    resolve,
)
from .dataspace import AnalyticManifest, DataSource, DataSpace, parse_query
from .interp import SymbolRegistry, check_membership, default_registry, evaluate, register_symbol
from .prover import ProofTree, ProverLimits, check_rule, enumerate_proofs, format_proof, prove
from .syntax import format_term, format_type, load_schema, parse_schema, parse_term, parse_type
from .taxonomy import Taxonomy, load_taxonomy, parse_taxonomy

__version__ = "0.1.0"

__all__ = [
    "AnalyticManifest",
    "Coercion",
    "DataSource",
    "DataSpace",
    "Environment",
    "Named",
    "OrderResult",
    "ProofTree",
    "ProverLimits",
    "Schema",
    "SymbolRegistry",
    "Taxonomy",
    "apply",
    "check_membership",
    "check_rule",
    "compose",
    "default_registry",
    "enumerate_proofs",
    "evaluate",
    "expand",
    "extract",
    "format_coercion",
    "format_proof",
    "format_term",
    "format_type",
    "load_schema",
    "load_taxonomy",
    "natural_leq",
    "parse_query",
    "parse_schema",
    "parse_taxonomy",
    "parse_term",
    "parse_type",
    "prove",
    "register_symbol",
    "resolve",
]
