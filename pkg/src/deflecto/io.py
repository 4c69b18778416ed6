"""Binary and text file formats used by the command line.

Images (``ODTI``), sinograms (``ODTS``) and FDM vectors (``ODTF``) are stored
as little-endian doubles behind a small fixed header, so a write followed by
a read reproduces every value bit for bit. Budgets and configs are plain
``key = value`` text; traces are CSV.
"""
from __future__ import annotations

import csv
import math
import struct
from pathlib import Path

import numpy as np

from .data import FdmVector, RimImage, Sinogram
from .errors import DeflectoError
from .grids import CartesianGrid, FrequencyPolarGrid, PolarGrid
from .metrics import TraceRecord
from .noise import NoiseBudget

IMAGE_MAGIC = b"ODTI"
SINOGRAM_MAGIC = b"ODTS"
FDM_MAGIC = b"ODTF"
IMAGE_VERSION = 1

_IMAGE_HEADER = struct.Struct("<4sHId")
_POLAR_HEADER = struct.Struct("<4sIId")
_F64 = np.dtype("<f8")


class FormatError(DeflectoError, OSError):
    """A file is missing, truncated or does not carry the expected header."""


def _read_bytes(path) -> bytes:
    try:
        return Path(path).read_bytes()
    except OSError as exc:
        raise FormatError(f"cannot read {path}: {exc.strerror or exc}") from exc


def _write_bytes(path, payload: bytes) -> None:
    try:
        Path(path).write_bytes(payload)
    except OSError as exc:
        raise FormatError(f"cannot write {path}: {exc.strerror or exc}") from exc


def _payload(raw: bytes, offset: int, count: int, path) -> np.ndarray:
    if len(raw) != offset + 8 * count:
        raise FormatError(f"{path}: expected {count} values, file size does not match")
    return np.frombuffer(raw, dtype=_F64, count=count, offset=offset).astype(float)


def write_image(path, image: RimImage) -> None:
    g = image.grid
    head = _IMAGE_HEADER.pack(IMAGE_MAGIC, IMAGE_VERSION, g.n0, g.delta_r)
    _write_bytes(path, head + image.values.astype(_F64).tobytes())


def read_image(path) -> RimImage:
    raw = _read_bytes(path)
    if len(raw) < _IMAGE_HEADER.size:
        raise FormatError(f"{path}: truncated header")
    magic, version, n0, delta_r = _IMAGE_HEADER.unpack_from(raw)
    if magic != IMAGE_MAGIC:
        raise FormatError(f"{path}: not an image file")
    if version != IMAGE_VERSION:
        raise FormatError(f"{path}: unsupported image version {version}")
    grid = CartesianGrid(n0, delta_r)
    return RimImage(grid, _payload(raw, _IMAGE_HEADER.size, grid.N, path))


def _write_polar(path, magic: bytes, grid, values: np.ndarray) -> None:
    head = _POLAR_HEADER.pack(magic, grid.n_tau, grid.n_theta, grid.delta_tau)
    _write_bytes(path, head + np.asarray(values).astype(_F64).tobytes())


def _read_polar(path, magic: bytes, kind: str):
    raw = _read_bytes(path)
    if len(raw) < _POLAR_HEADER.size:
        raise FormatError(f"{path}: truncated header")
    got, n_tau, n_theta, delta_tau = _POLAR_HEADER.unpack_from(raw)
    if got != magic:
        raise FormatError(f"{path}: not a {kind} file")
    return n_tau, n_theta, delta_tau, raw


def write_sinogram(path, sinogram: Sinogram) -> None:
    _write_polar(path, SINOGRAM_MAGIC, sinogram.grid, sinogram.values)


def read_sinogram(path, full_circle: bool = False) -> Sinogram:
    """Read an ``ODTS`` file; the header does not record the angular range."""
    n_tau, n_theta, delta_tau, raw = _read_polar(path, SINOGRAM_MAGIC, "sinogram")
    grid = PolarGrid(n_tau, n_theta, delta_tau, full_circle)
    return Sinogram(grid, _payload(raw, _POLAR_HEADER.size, grid.M, path))


def write_fdm(path, fdm: FdmVector) -> None:
    _write_polar(path, FDM_MAGIC, fdm.grid, fdm.values)


def read_fdm(path) -> FdmVector:
    n_tau, n_theta, delta_tau, raw = _read_polar(path, FDM_MAGIC, "FDM")
    grid = FrequencyPolarGrid(n_tau, n_theta, delta_tau)
    return FdmVector(grid, _payload(raw, _POLAR_HEADER.size, grid.M, path))


def write_pgm(path, array: np.ndarray) -> None:
    """16-bit binary PGM of a 2-D array, min-max scaled; a constant array maps to 0."""
    a = np.asarray(array, dtype=float)
    lo, hi = float(a.min()), float(a.max())
    scaled = np.zeros(a.shape) if hi == lo else (a - lo) / (hi - lo) * 65535.0
    pix = np.rint(scaled).astype(">u2")
    head = f"P5\n{a.shape[1]} {a.shape[0]}\n65535\n".encode("ascii")
    _write_bytes(path, head + pix.tobytes())


def read_pgm(path) -> np.ndarray:
    raw = _read_bytes(path)
    parts = raw.split(maxsplit=4)
    if len(parts) < 5 or parts[0] != b"P5":
        raise FormatError(f"{path}: not a binary PGM")
    w, h, maxval = int(parts[1]), int(parts[2]), int(parts[3])
    dtype = ">u2" if maxval > 255 else "u1"
    return np.frombuffer(parts[4], dtype=dtype, count=w * h).reshape(h, w)


def _fmt(v) -> str:
    # repr round-trips doubles exactly; None becomes an empty cell
    return "" if v is None else repr(float(v)) if isinstance(v, float) else str(v)


def write_trace(path, trace) -> None:
    try:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(TraceRecord.FIELDS)
            for rec in trace:
                w.writerow([_fmt(getattr(rec, f)) for f in TraceRecord.FIELDS])
    except OSError as exc:
        raise FormatError(f"cannot write {path}: {exc.strerror or exc}") from exc


def read_trace(path) -> list[TraceRecord]:
    try:
        with open(path, newline="") as fh:
            rows = list(csv.reader(fh))
    except OSError as exc:
        raise FormatError(f"cannot read {path}: {exc.strerror or exc}") from exc
    if not rows or tuple(rows[0]) != TraceRecord.FIELDS:
        raise FormatError(f"{path}: unexpected trace header")
    out = []
    for row in rows[1:]:
        vals = [int(row[0])] + [float(v) for v in row[1:7]]
        vals.append(float(row[7]) if row[7] else None)
        out.append(TraceRecord(*vals))
    return out


def write_keyvalues(path, items: dict) -> None:
    lines = [f"{k} = {_fmt(v)}" for k, v in items.items()]
    _write_bytes(path, ("\n".join(lines) + "\n").encode("utf-8"))


def read_keyvalues(path) -> dict[str, str]:
    """``key = value`` lines; blank lines and ``#`` comments are skipped."""
    text = _read_bytes(path).decode("utf-8")
    out = {}
    for no, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise FormatError(f"{path}:{no}: expected 'key = value'")
        key, value = line.split("=", 1)
        out[key.strip().replace("-", "_")] = value.strip()
    return out


def write_budget(path, budget: NoiseBudget, sigma_obs: float | None = None) -> None:
    items = {"eps_obs": budget.eps_obs, "eps_model": budget.eps_model,
             "eps_nfft": budget.eps_nfft, "eps_total": budget.eps_total,
             "sigma_z": budget.sigma_z, "chernoff_c": budget.chernoff_c}
    if sigma_obs is not None:
        items["sigma_obs"] = float(sigma_obs)
    write_keyvalues(path, items)


def read_budget(path) -> tuple[NoiseBudget, dict[str, float]]:
    """The budget and every numeric field of the file (including ``eps_total``)."""
    kv = read_keyvalues(path)
    try:
        nums = {k: float(v) for k, v in kv.items()}
        budget = NoiseBudget(nums["eps_obs"], nums["eps_model"], nums["eps_nfft"],
                             nums["sigma_z"], nums.get("chernoff_c", 2.0))
    except (KeyError, ValueError) as exc:
        raise FormatError(f"{path}: malformed budget ({exc})") from exc
    if not all(math.isfinite(v) for v in nums.values()):
        raise FormatError(f"{path}: non-finite budget entry")
    return budget, nums
