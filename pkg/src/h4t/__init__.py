"""Finite H4-free 3-hypertournaments: structures, solving, and witness checks."""

from .core import (
    ALL_CLASSES,
    BudgetError,
    DomainError,
    FourClass,
    H4_CANONICAL,
    H4_FREE,
    Hypergraph3,
    Hypertournament,
    LinearOrder,
    Orientation,
    PartialHypertournament,
    QfType,
    decode,
    encode,
    find_isomorphism,
    qf_type,
)

__all__ = [
    "ALL_CLASSES",
    "BudgetError",
    "DomainError",
    "FourClass",
    "H4_CANONICAL",
    "H4_FREE",
    "Hypergraph3",
    "Hypertournament",
    "LinearOrder",
    "Orientation",
    "PartialHypertournament",
    "QfType",
    "decode",
    "encode",
    "find_isomorphism",
    "qf_type",
]
