"""Geometric-optics plane wave (GOPW) bases and a stabilized Trefftz-DG solver
for the 2D Helmholtz equation with smoothly varying wave number."""

from .amplitude import AmplitudePolynomial, build_amplitude
from .basis import GopwBasisSet, approximation_oracle, build_space, select_q
from .coeff import CoefficientField, ConstantField, FiniteDifferenceField, GaussianLensField, GradientField
from .dg import DgParameters, DgSystem, assemble, assemble_rhs, solve
from .local import SpectralLocalSolution, solve_local
from .mesh import MeshPartition, build_mesh
from .phase import PhasePolynomial, build_phase
from .poly import CenteredPolynomial

__version__ = "0.1.0"

__all__ = [
    "AmplitudePolynomial",
    "CenteredPolynomial",
    "CoefficientField",
    "ConstantField",
    "DgParameters",
    "DgSystem",
    "FiniteDifferenceField",
    "GaussianLensField",
    "GopwBasisSet",
    "GradientField",
    "MeshPartition",
    "PhasePolynomial",
    "SpectralLocalSolution",
    "approximation_oracle",
    "assemble",
    "assemble_rhs",
    "build_amplitude",
    "build_mesh",
    "build_phase",
    "build_space",
    "select_q",
    "solve",
    "solve_local",
]
