"""Stage-based trial-and-error theory builders: dialectical, q- and p-dialectical systems."""
from .codec import CONTRADICTION, atom, conj, decode, disj, encode, imp, neg, pair, parse, pretty, unpair
from .engine import characterization_check, limit_report, run
from .systems import ProposingFunction, RevisingFunction, SystemSpec, consistency, spec_from_json, validate

__all__ = [
    "CONTRADICTION",
    "ProposingFunction",
    "RevisingFunction",
    "SystemSpec",
    "atom",
    "characterization_check",
    "conj",
    "consistency",
    "decode",
    "disj",
    "encode",
    "imp",
    "limit_report",
    "neg",
    "pair",
    "parse",
    "pretty",
    "run",
    "spec_from_json",
    "unpair",
    "validate",
]
