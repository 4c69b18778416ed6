"""Optical deflectometric tomography: phantoms, forward model, noise budgets and
regularized reconstruction."""
from .data import FdmVector, RimImage, Sinogram
from .errors import CalibrationUndefined, DeflectoError, InvalidArgument, NumericalFailure
from .grids import (CartesianGrid, FrequencyPolarGrid, PolarGrid, build_cartesian,
                    build_frequency_grid, build_polar, paired_grids)

__version__ = "0.1.0"
