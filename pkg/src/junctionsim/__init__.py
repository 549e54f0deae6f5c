"""Finite-lattice BCS junction toolkit.

Exact Fock-space and quasi-free (Wick) computations of the tunneling current
between two superconducting regions, with numerical checks of the dc, ac and
junction-energy laws.
"""
from ._backend import BACKEND
from .errors import (CapacityError, IntegrationError, JunctionError,
                     ModelInconsistencyError, SolverError, StructuralError,
                     ValidationError)
from .evolution import evolve
from .fock import (FockBasis, SparseOperator, StateVector, build_basis, car_defect,
                   expectation, ladder_op, number_op, op_algebra)
from .model import JunctionSpec

__version__ = "0.1.0"

__all__ = [
    "BACKEND", "CapacityError", "FockBasis", "IntegrationError", "JunctionError",
    "JunctionSpec", "car_defect",
    "ModelInconsistencyError", "SolverError", "SparseOperator", "StateVector",
    "StructuralError", "ValidationError", "build_basis", "evolve", "expectation",
    "ladder_op", "number_op", "op_algebra",
]
