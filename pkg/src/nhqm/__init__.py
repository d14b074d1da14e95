"""Scattering, localized states, Bloch bands and wave-packet dynamics for
one-dimensional piecewise-constant complex potentials."""
from .core import (PhysicalParams, PiecewisePotential, Segment, build_pt_unit_cell,
                   is_pt_symmetric, momentum_in_region, principal_sqrt, single_barrier)
from .errors import NumericalError

__all__ = ["PhysicalParams", "PiecewisePotential", "Segment", "build_pt_unit_cell",
           "is_pt_symmetric", "momentum_in_region", "principal_sqrt", "single_barrier",
           "NumericalError"]
