"""Measurement chain: deflection sinograms, radial DFT, polar NDFT/NFFT,
the gradient weighting ``D``, half-grid packing and the composed operator."""
from .deflection import fold_full_circle, simulate_deflections
from .fourier import (apply_d, apply_d_inverse, d_weights, inverse_radial_dft, ndft_adjoint_exact,
                      ndft_exact, pack_half, radial_dft, radial_spectrum, theta_adjoint,
                      theta_pack, theta_unpack, unpack_half)
from .nfft import GaussianNfft, nfft_forward, window_cutoff
from .operator import ForwardOperator, forward_adjoint, forward_apply

__all__ = [
    "simulate_deflections", "fold_full_circle",
    "radial_dft", "radial_spectrum", "inverse_radial_dft",
    "ndft_exact", "ndft_adjoint_exact", "nfft_forward", "GaussianNfft", "window_cutoff",
    "apply_d", "apply_d_inverse", "d_weights",
    "theta_pack", "theta_unpack", "theta_adjoint", "pack_half", "unpack_half",
    "ForwardOperator", "forward_apply", "forward_adjoint",
]
