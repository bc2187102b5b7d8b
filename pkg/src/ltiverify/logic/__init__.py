"""Safety-fragment formulas and their compilation to parameter constraints."""

from .compile import (
    CompileError,
    ConstraintSystem,
    compile_formula,
    denormalize,
    feasible_set,
    normalize,
)
from .formula import (
    Always,
    And,
    Atom,
    AtomicProposition,
    BoundedAlways,
    Formula,
    Letter,
    Next,
    ParseError,
    Top,
    atomic_propositions,
    conjunction,
    expand_bounded,
    horizon,
    next_power,
    parse,
)
from .invariance import InvarianceResult, VerificationSetup, feasible_set_always, verify_formula

__all__ = [
    "Always", "And", "Atom", "AtomicProposition", "BoundedAlways", "CompileError",
    "ConstraintSystem", "Formula", "InvarianceResult", "Letter", "Next", "ParseError",
    "Top", "VerificationSetup", "atomic_propositions", "compile_formula", "conjunction",
    "denormalize", "expand_bounded", "feasible_set", "feasible_set_always", "horizon",
    "next_power", "normalize", "parse", "verify_formula",
]
