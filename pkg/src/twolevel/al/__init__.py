"""Action-language core: parsing, grounding and transition semantics."""
from .domain import (
    Atom,
    DomainDescription,
    GroundDefault,
    Literal,
    Signature,
    atom_str,
    load_domain,
    parse_atom,
    parse_domain,
    parse_literal,
    pretty_print,
)
from .semantics import (
    Inconsistent,
    InconsistentEffects,
    SizeLimitExceeded,
    State,
    closure,
    complete_states,
    derive_defined,
    direct_effects,
    enumerate_states,
    executable,
    is_valid_state,
    make_state,
    successor,
    successors,
)
from .syntax import DomainError

__all__ = [
    "Atom", "DomainDescription", "DomainError", "GroundDefault", "Inconsistent", "InconsistentEffects",
    "Literal", "Signature", "SizeLimitExceeded", "State", "atom_str", "closure", "complete_states",
    "derive_defined", "direct_effects", "enumerate_states", "executable", "is_valid_state", "load_domain",
    "make_state", "parse_atom", "parse_domain", "parse_literal", "pretty_print", "successor", "successors",
]
