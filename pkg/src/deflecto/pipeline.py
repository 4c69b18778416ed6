"""End-to-end helpers shared by the command line and the experiment tests."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .data import FdmVector, RimImage, Sinogram
from .forward import ForwardOperator, forward_apply, inverse_radial_dft, radial_dft
from .errors import InvalidArgument
from .grids import FrequencyPolarGrid
from .noise import NoiseBudget, add_awgn, build_budget

ACQUISITION_EPS = 1e-14
RECON_EPS = 1e-10


@dataclass
class Measurement:
    """Noisy FDM data together with the quantities needed to size the fidelity ball."""

    y: FdmVector
    y_clean: FdmVector
    sinogram: Sinogram
    sinogram_clean: Sinogram
    sigma_z: float
    msnr_db: float
    sigma_obs: float = 0.0
    noise_domain: str = "fdm"


def synthesize(image: RimImage, freq: FrequencyPolarGrid, n_r: float = 1.0,
               msnr_db: float = math.inf, seed: int = 0, include_d: bool = True,
               acquisition_eps: float = ACQUISITION_EPS, noise_domain: str = "fdm") -> Measurement:
    """Measure ``image`` with the accurate operator and add white Gaussian noise.

    With ``noise_domain="fdm"`` every packed FDM entry receives iid noise of
    level ``sigma_obs`` set by ``msnr_db``; the sinogram is the inverse radial
    DFT of the noisy data and ``sigma_z = sigma_obs / (delta_tau sqrt(n_tau))``.
    With ``"sinogram"`` the noise is drawn on the deflections instead. The
    packed image of white sinogram noise then has per-entry level
    ``sigma_obs / sqrt(2)``, which makes the budget of :func:`synthetic_budget`
    loose by that factor.
    """
    if noise_domain not in ("fdm", "sinogram"):
        raise InvalidArgument(f"unknown noise domain {noise_domain!r}")
    op = ForwardOperator(image.grid, freq, n_r, "nfft", acquisition_eps, include_d=include_d)
    y_clean = forward_apply(op, image)
    sino_clean = inverse_radial_dft(y_clean)
    scale = freq.delta_tau * math.sqrt(freq.n_tau)
    if noise_domain == "fdm":
        y, s_obs = add_awgn(y_clean, msnr_db, seed)
        sino = sino_clean if s_obs == 0 else inverse_radial_dft(y)
        sigma_z = s_obs / scale
    else:
        sino, sigma_z = add_awgn(sino_clean, msnr_db, seed)
        y = y_clean if sigma_z == 0 else radial_dft(sino)
        s_obs = sigma_z * scale
    return Measurement(y, y_clean, sino, sino_clean, sigma_z, msnr_db, s_obs, noise_domain)


def synthetic_budget(meas: Measurement, op: ForwardOperator, image_bound_l1: float,
                     chernoff_c: float = 2.0) -> NoiseBudget:
    """Fidelity radius for data produced by :func:`synthesize` and solved with ``op``.

    The model term is off (the operator generated the data); the NFFT term
    uses ``op.epsilon`` and the bound on ``|n|_1``.
    """
    return build_budget(meas.y, op.freq, op.cart, op.n_r, sigma_z=meas.sigma_z,
                        sigma_obs_value=meas.sigma_obs,
                        model_snr_db=math.inf, nfft_eps=op.epsilon,
                        image_bound_l1=image_bound_l1, chernoff_c=chernoff_c)


def l1_bound(image: RimImage) -> float:
    """``N * max|n|``, the a-priori bound used for the NFFT error term."""
    return float(image.grid.N * np.abs(image.values).max())
