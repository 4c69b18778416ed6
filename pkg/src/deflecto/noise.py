"""Synthetic measurement noise and the fidelity radius of the reconstruction."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .data import FdmVector, Sinogram
from .errors import InvalidArgument
from .grids import CartesianGrid, FrequencyPolarGrid

MAD_TO_SIGMA = 0.6745


@dataclass(frozen=True)
class NoiseBudget:
    eps_obs: float
    eps_model: float
    eps_nfft: float
    sigma_z: float
    chernoff_c: float = 2.0

    @property
    def eps_total(self) -> float:
        return math.sqrt(self.eps_obs ** 2 + self.eps_model ** 2 + self.eps_nfft ** 2)


def awgn_sigma(signal_norm: float, size: int, msnr_db: float) -> float:
    """Noise level whose expected norm sits ``msnr_db`` below ``signal_norm``."""
    if math.isinf(msnr_db) and msnr_db > 0:
        return 0.0
    return signal_norm / (math.sqrt(size) * 10.0 ** (msnr_db / 20.0))


def add_awgn(data, msnr_db: float, seed: int | None = None):
    """Add white Gaussian noise at measurement SNR ``msnr_db``.

    ``data`` is a :class:`Sinogram`, :class:`FdmVector` or plain array. The
    level ``sigma = |data| / (sqrt(M) 10**(msnr/20))`` depends only on the
    data and the target, so ``|noise| / |data|`` equals ``10**(-msnr/20)`` up
    to sampling variability. Returns ``(noisy, sigma)`` with the input's type.
    """
    values = data.values if hasattr(data, "values") else np.asarray(data, dtype=float)
    if math.isnan(msnr_db) or msnr_db == -math.inf:
        raise InvalidArgument(f"invalid MSNR {msnr_db!r}")
    if msnr_db == math.inf:
        return data, 0.0
    norm = float(np.linalg.norm(values))
    if norm == 0.0:
        raise InvalidArgument("cannot set an MSNR on all-zero data")
    sigma = awgn_sigma(norm, values.size, msnr_db)
    rng = np.random.default_rng(seed)
    noisy = values + sigma * rng.standard_normal(values.shape)
    if isinstance(data, (Sinogram, FdmVector)):
        return type(data)(data.grid, noisy), sigma
    return noisy, sigma


def estimate_sigma(sinogram: Sinogram) -> float:
    """Robust median estimate of white-noise level from finest-scale Haar details along tau."""
    g = sinogram.grid
    if g.n_tau < 4:
        raise InvalidArgument("need at least 4 rays per angle")
    s = sinogram.as_2d()
    d = (s[:, 0::2] - s[:, 1::2]) / math.sqrt(2.0)
    return float(np.median(np.abs(d)) / MAD_TO_SIGMA)


def sigma_obs(sigma_z: float, freq: FrequencyPolarGrid) -> float:
    """Per-entry noise level of the complex radial DFT of white sinogram noise."""
    return freq.delta_tau * math.sqrt(freq.n_tau) * sigma_z


def build_budget(fdm: FdmVector, freq: FrequencyPolarGrid, cart: CartesianGrid, n_r: float, *,
                 sigma_z: float = 0.0, sigma_obs_value: float | None = None,
                 model_snr_db: float = 10.0, nfft_eps: float = 0.0,
                 image_bound_l1: float = 0.0, chernoff_c: float = 2.0) -> NoiseBudget:
    """Assemble ``eps = sqrt(eps_obs**2 + eps_model**2 + eps_nfft**2)``.

    * ``eps_obs**2 = sigma_obs**2 (M + c sqrt(M))`` with
      ``sigma_obs = delta_tau sqrt(n_tau) sigma_z`` unless given directly.
    * ``eps_model = |y| 10**(-model_snr_db / 20)``; ``inf`` disables it.
    * ``eps_nfft = pi delta_r / (sqrt(3) n_r) * eps * C * sqrt(M + c sqrt(M))``
      where ``C`` bounds ``|n|_1``.
    """
    for name, val in (("sigma_z", sigma_z), ("nfft_eps", nfft_eps),
                      ("image_bound_l1", image_bound_l1), ("chernoff_c", chernoff_c)):
        if not val >= 0:
            raise InvalidArgument(f"{name} must be >= 0, got {val!r}")
    if sigma_obs_value is not None and not sigma_obs_value >= 0:
        raise InvalidArgument("sigma_obs must be >= 0")
    if not n_r > 0:
        raise InvalidArgument("n_r must be > 0")
    if math.isnan(model_snr_db):
        raise InvalidArgument("model_snr_db is NaN")
    M = freq.M
    chern = M + chernoff_c * math.sqrt(M)
    s_obs = sigma_obs(sigma_z, freq) if sigma_obs_value is None else float(sigma_obs_value)
    eps_obs = s_obs * math.sqrt(chern)
    if model_snr_db == math.inf:
        eps_model = 0.0
    else:
        eps_model = float(np.linalg.norm(fdm.values)) * 10.0 ** (-model_snr_db / 20.0)
    eps_nfft = math.pi * cart.delta_r / (math.sqrt(3.0) * n_r) * nfft_eps * image_bound_l1 * math.sqrt(chern)
    return NoiseBudget(eps_obs, eps_model, eps_nfft, float(sigma_z), float(chernoff_c))


def budget_msnr(y_norm: float, budget: NoiseBudget) -> float:
    """Measurement SNR implied by a budget, ``20 log10(|y| / eps_total)``."""
    if budget.eps_total == 0:
        return math.inf
    return 20.0 * math.log10(y_norm / budget.eps_total)
