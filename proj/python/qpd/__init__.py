"""Ground states and finite-size phase diagrams of three-level atoms in two-mode cavities."""

from ._core import (
    ConfigError,
    DerivativeUndefined,
    DomainError,
    GroundState,
    ModelSpec,
    Solver,
    SolverError,
    UnsupportedError,
    bures,
    bures_from_overlap_squared,
    candidate_sectors,
    fidelity,
    linear_entropy_diagonal,
    scan,
    sector_dimension,
    simplex_coords,
)

__version__ = "0.1.0"

__all__ = [
    "ConfigError",
    "DerivativeUndefined",
    "DomainError",
    "GroundState",
    "ModelSpec",
    "Solver",
    "SolverError",
    "UnsupportedError",
    "bures",
    "bures_from_overlap_squared",
    "candidate_sectors",
    "fidelity",
    "linear_entropy_diagonal",
    "scan",
    "sector_dimension",
    "simplex_coords",
]
