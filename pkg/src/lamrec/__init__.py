"""A lambda calculus with records and merge, intersection types with field
types, and an encoding of classes and mixins as recursive records."""

from .assignment import (
    Context,
    Derivation,
    Hints,
    Judgment,
    VerificationError,
    check,
    derivation_from_json,
    derivation_to_json,
    dump_derivation,
    enumerate_types,
    invariance_test,
    load_derivation,
    verify,
)
from .reduction import (
    DEFAULT_FUEL,
    FuelExhausted,
    NormalForm,
    normalize,
    step,
    whnf,
    whnf_record,
)
from .syntax import (
    LamRecError,
    MergeOperandError,
    ParseError,
    Term,
    alpha_eq,
    free_vars,
    parse_term,
    print_term,
    subst,
)
from .types import Type, normalize_type, parse_type, print_type, subtype, type_eq

__version__ = "0.1.0"

__all__ = [
    "Context",
    "DEFAULT_FUEL",
    "Derivation",
    "FuelExhausted",
    "Hints",
    "Judgment",
    "LamRecError",
    "MergeOperandError",
    "NormalForm",
    "ParseError",
    "Term",
    "Type",
    "VerificationError",
    "alpha_eq",
    "check",
    "derivation_from_json",
    "derivation_to_json",
    "dump_derivation",
    "enumerate_types",
    "free_vars",
    "invariance_test",
    "load_derivation",
    "normalize",
    "normalize_type",
    "parse_term",
    "parse_type",
    "print_term",
    "print_type",
    "step",
    "subst",
    "subtype",
    "type_eq",
    "verify",
    "whnf",
    "whnf_record",
]
