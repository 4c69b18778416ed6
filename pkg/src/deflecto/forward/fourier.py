"""Exact polar Fourier transforms, the radial DFT, the gradient weighting ``D``
and the half-grid packing ``Theta``."""
from __future__ import annotations

import numpy as np

from ..data import FdmVector, RimImage, Sinogram
from ..errors import InvalidArgument
from ..grids import CartesianGrid, FrequencyPolarGrid

_CHUNK = 4096


def _phase_factors(nodes: np.ndarray, cart: CartesianGrid):
    k = cart.pixel_range * cart.delta_r
    A = np.exp(-2j * np.pi * np.outer(nodes[:, 0], k))  # along r1 (columns)
    B = np.exp(-2j * np.pi * np.outer(nodes[:, 1], k))  # along r2 (rows)
    return A, B


def ndft_nodes(u: np.ndarray, nodes: np.ndarray, cart: CartesianGrid) -> np.ndarray:
    """Direct sum ``sum_j u_j exp(-2 pi i k . r_j)`` at arbitrary nodes ``k``.

    ``u`` is an image (flat or 2-D, real or complex). Separable in the two
    coordinates, evaluated in chunks of nodes to bound memory.
    """
    U = np.asarray(u).reshape(cart.shape)
    out = np.empty(nodes.shape[0], dtype=complex)
    for start in range(0, nodes.shape[0], _CHUNK):
        A, B = _phase_factors(nodes[start:start + _CHUNK], cart)
        out[start:start + _CHUNK] = np.einsum("in,in->i", A @ U.T, B)
    return out


def ndft_adjoint_nodes(v: np.ndarray, nodes: np.ndarray, cart: CartesianGrid) -> np.ndarray:
    """Conjugate transpose of :func:`ndft_nodes`; returns a complex ``(n0, n0)`` image."""
    v = np.asarray(v, dtype=complex).reshape(-1)
    if v.size != nodes.shape[0]:
        raise InvalidArgument(f"spectrum has {v.size} entries for {nodes.shape[0]} nodes")
    out = np.zeros(cart.shape, dtype=complex)
    for start in range(0, nodes.shape[0], _CHUNK):
        A, B = _phase_factors(nodes[start:start + _CHUNK], cart)
        out += (B.conj() * v[start:start + _CHUNK, None]).T @ A.conj()
    return out


def ndft_exact(image: RimImage, freq: FrequencyPolarGrid) -> np.ndarray:
    """Exact NDFT of ``image`` at all ``M`` nodes of the frequency polar grid, O(MN)."""
    return ndft_nodes(image.values, freq.nodes(), image.grid)


def ndft_adjoint_exact(spectrum, freq: FrequencyPolarGrid, cart: CartesianGrid) -> np.ndarray:
    """Exact adjoint of :func:`ndft_exact`; a complex vector of length ``N``."""
    spectrum = np.asarray(spectrum)
    if spectrum.size != freq.M:
        raise InvalidArgument(f"spectrum needs {freq.M} entries, got {spectrum.size}")
    return ndft_adjoint_nodes(spectrum, freq.nodes(), cart).reshape(-1)


def d_weights(freq: FrequencyPolarGrid, delta_r: float, n_r: float, half: bool = False) -> np.ndarray:
    """Diagonal of ``D``: ``2 pi i delta_r**2 omega / n_r`` per node."""
    if not n_r > 0:
        raise InvalidArgument(f"n_r must be > 0, got {n_r!r}")
    om = freq.half_node_omegas() if half else freq.node_omegas()
    return 2j * np.pi * delta_r ** 2 * om / n_r


def apply_d(spectrum, freq: FrequencyPolarGrid, n_r: float, delta_r: float = 1.0) -> np.ndarray:
    spectrum = np.asarray(spectrum, dtype=complex).reshape(-1)
    if spectrum.size != freq.M:
        raise InvalidArgument(f"spectrum needs {freq.M} entries, got {spectrum.size}")
    return spectrum * d_weights(freq, delta_r, n_r)


def apply_d_inverse(spectrum, freq: FrequencyPolarGrid, n_r: float, delta_r: float = 1.0) -> np.ndarray:
    """Elementwise inverse of ``D`` away from ``omega = 0``; those entries map to 0."""
    spectrum = np.asarray(spectrum, dtype=complex).reshape(-1)
    if spectrum.size != freq.M:
        raise InvalidArgument(f"spectrum needs {freq.M} entries, got {spectrum.size}")
    d = d_weights(freq, delta_r, n_r)
    out = np.zeros_like(spectrum)
    nz = d != 0
    out[nz] = spectrum[nz] / d[nz]
    return out


def _half_view(full: np.ndarray, freq: FrequencyPolarGrid) -> np.ndarray:
    h = freq.n_tau // 2
    return full.reshape(freq.n_theta, freq.n_tau)[:, h:]


def pack_half(half: np.ndarray, freq: FrequencyPolarGrid) -> FdmVector:
    """Stack a complex half-grid vector as ``[real; imag]``."""
    half = np.asarray(half).reshape(-1)
    if half.size != freq.half:
        raise InvalidArgument(f"half-grid vector needs {freq.half} entries, got {half.size}")
    return FdmVector(freq, np.concatenate([half.real, half.imag]))


def unpack_half(fdm: FdmVector) -> np.ndarray:
    """Complex half-grid vector ``a + i b`` from a packed vector."""
    return fdm.values[: fdm.grid.half] + 1j * fdm.values[fdm.grid.half:]


def theta_pack(spectrum, freq: FrequencyPolarGrid) -> FdmVector:
    """Restrict a full-grid spectrum to ``s' >= 0`` and stack real and imaginary parts."""
    spectrum = np.asarray(spectrum, dtype=complex).reshape(-1)
    if spectrum.size != freq.M:
        raise InvalidArgument(f"spectrum needs {freq.M} entries, got {spectrum.size}")
    return pack_half(_half_view(spectrum, freq), freq)


def theta_unpack(fdm: FdmVector) -> np.ndarray:
    """Hermitian completion: rebuild the full grid with ``y(-omega) = conj y(omega)``.

    The node ``s' = -n_tau/2`` has no partner on the half grid and is set to 0.
    ``theta_pack(theta_unpack(v)) == v`` for every packed vector ``v``.
    """
    freq = fdm.grid
    h = freq.n_tau // 2
    half = unpack_half(fdm).reshape(freq.n_theta, h)
    full = np.zeros((freq.n_theta, freq.n_tau), dtype=complex)
    full[:, h:] = half
    full[:, 1:h] = half[:, :0:-1].conj()
    return full.reshape(-1)


def theta_adjoint(fdm: FdmVector) -> np.ndarray:
    """Adjoint of :func:`theta_pack` for ``<x, z> = Re sum x conj(z)`` on the full
    grid: the half-grid values embedded with zeros elsewhere."""
    freq = fdm.grid
    h = freq.n_tau // 2
    full = np.zeros((freq.n_theta, freq.n_tau), dtype=complex)
    full[:, h:] = unpack_half(fdm).reshape(freq.n_theta, h)
    return full.reshape(-1)


def _radial_phase(n_tau: int) -> np.ndarray:
    # exp(-2 pi i s s' / n_tau) over signed s equals the FFT over s + n_tau/2
    # times (-1)**s'
    return np.where(np.arange(n_tau) % 2, -1.0, 1.0)


def radial_spectrum(sinogram: Sinogram) -> np.ndarray:
    """Full signed-grid radial DFT ``delta_tau sum_s Delta(tau_s) e^{-2 pi i s s'/n_tau}``,
    shape ``(n_theta, n_tau)`` with ``s'`` ascending from ``-n_tau/2``."""
    g = sinogram.grid
    if g.full_circle:
        raise InvalidArgument("fold a full-circle sinogram to [0, pi) first")
    F = np.fft.fft(sinogram.as_2d(), axis=1) * _radial_phase(g.n_tau) * g.delta_tau
    return np.fft.fftshift(F, axes=1)


def radial_dft(sinogram: Sinogram) -> FdmVector:
    """Per-angle Riemann-sum Fourier transform of the sinogram, packed on the half grid."""
    freq = FrequencyPolarGrid.from_polar(sinogram.grid)
    return theta_pack(radial_spectrum(sinogram), freq)


def inverse_radial_dft(fdm: FdmVector) -> Sinogram:
    """Sinogram whose radial DFT is ``fdm`` after Hermitian completion.

    Exact inverse of :func:`radial_dft` on packed vectors whose ``omega = 0``
    imaginary parts vanish (as they do for any real sinogram).
    """
    freq = fdm.grid
    full = theta_unpack(fdm).reshape(freq.n_theta, freq.n_tau)
    F = np.fft.ifftshift(full, axes=1) * _radial_phase(freq.n_tau)
    sino = np.fft.ifft(F, axis=1).real / freq.delta_tau
    return Sinogram.from_2d(freq.polar, sino)
