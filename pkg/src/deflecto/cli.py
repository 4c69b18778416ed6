"""Command line: ``deflecto {phantom,simulate,reconstruct,evaluate,sweep,calibrate}``.

Settings come from built-in defaults, then an optional ``--config`` file of
``key = value`` lines, then explicit flags. Outputs go to ``--out`` and are
never overwritten unless ``--force`` is given.

Exit codes: 0 success, 2 invalid arguments, 3 file errors, 4 numerical failure.
"""
from __future__ import annotations

import argparse
import csv
import dataclasses
import math
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import io
from .data import RimImage
from .errors import CalibrationUndefined, InvalidArgument, NumericalFailure
from .forward import ForwardOperator
from .grids import CartesianGrid, FrequencyPolarGrid, default_n_tau
from .metrics import rsnr
from .noise import NoiseBudget
from .phantoms import PhantomSpec
from .pipeline import RECON_EPS, Measurement, l1_bound, synthesize, synthetic_budget
from .solvers import (SolverParams, calibrate_center, reconstruct_at_baseline, reconstruct_fbp,
                      reconstruct_me, reconstruct_tv_l2, remove_d, remove_d_eps)

EXIT_OK, EXIT_INVALID, EXIT_IO, EXIT_NUMERIC = 0, 2, 3, 4
METHODS = ("fbp", "me", "tvl2", "at-me", "odt-no-d")
SWEEP_COLUMNS = ("method", "n_theta", "msnr_db", "seed", "rsnr_db", "iterations",
                 "stop_reason", "wall_time")


@dataclass
class ExperimentConfig:
    """Every setting of an experiment. ``None`` means "derive from the other fields"."""

    kind: str = "fibers"
    delta_n: float | None = None      # phantom default
    n0: int = 256
    n_tau: int | None = None          # default_n_tau(n0)
    n_theta: list = field(default_factory=lambda: [4, 18, 90, 180, 360])
    delta_r: float = 1.0
    delta_tau: float | None = None    # delta_r
    n_r: float = 1.0
    msnr: list = field(default_factory=lambda: [math.inf])
    methods: list = field(default_factory=lambda: ["fbp", "me", "tvl2"])
    seeds: list = field(default_factory=lambda: [0])
    threshold: float = 1e-5
    max_iter: int = 20000
    adaptive: bool = True
    c_balance: float | None = None    # 1000, or 250 for Shepp-Logan
    recon_eps: float = RECON_EPS
    chernoff_c: float = 2.0
    noise_domain: str = "fdm"
    out: str = "out"

    @property
    def tau_count(self) -> int:
        return self.n_tau if self.n_tau is not None else default_n_tau(self.n0)

    @property
    def tau_step(self) -> float:
        return self.delta_tau if self.delta_tau is not None else self.delta_r

    def cartesian(self) -> CartesianGrid:
        return CartesianGrid(self.n0, self.delta_r)

    def frequency_grid(self, n_theta: int) -> FrequencyPolarGrid:
        return FrequencyPolarGrid(self.tau_count, n_theta, self.tau_step)

    @property
    def balance_constant(self) -> float:
        if self.c_balance is not None:
            return self.c_balance
        return 250.0 if self.kind == "shepp_logan" else 1000.0

    def solver_params(self, adaptive: bool | None = None) -> SolverParams:
        return SolverParams(max_iter=self.max_iter, threshold=self.threshold,
                            adaptive=self.adaptive if adaptive is None else adaptive,
                            c_balance=self.balance_constant)


_LISTS = {"n_theta": int, "msnr": float, "methods": str, "seeds": int}
_SCALARS = {"kind": str, "delta_n": float, "n0": int, "n_tau": int, "delta_r": float,
            "delta_tau": float, "n_r": float, "threshold": float, "max_iter": int,
            "adaptive": "bool", "c_balance": float, "recon_eps": float,
            "chernoff_c": float, "noise_domain": str, "out": str}
_ALIASES = {"method": "methods", "seed": "seeds", "phantom": "kind", "n_thetas": "n_theta"}


def _convert(kind, text: str, key: str):
    text = text.strip()
    try:
        if kind == "bool":
            low = text.lower()
            if low not in ("true", "false", "1", "0", "yes", "no"):
                raise ValueError(text)
            return low in ("true", "1", "yes")
        if kind is float:
            return float(text)   # accepts "inf"
        if kind is int:
            return int(text)
        return text
    except ValueError:
        raise InvalidArgument(f"bad value for {key}: {text!r}") from None


def apply_settings(cfg: ExperimentConfig, settings: dict) -> ExperimentConfig:
    """Return ``cfg`` updated from raw ``{key: text}`` pairs (config file or flags)."""
    updates = {}
    for raw_key, text in settings.items():
        key = raw_key.strip().replace("-", "_")
        key = _ALIASES.get(key, key)
        if key in _LISTS:
            updates[key] = [_convert(_LISTS[key], t, key) for t in str(text).split(",") if t.strip()]
        elif key in _SCALARS:
            none_ok = getattr(ExperimentConfig, key, 0) is None
            if none_ok and str(text).strip().lower() in ("", "none", "auto"):
                updates[key] = None
            else:
                updates[key] = _convert(_SCALARS[key], str(text), key)
        else:
            raise InvalidArgument(f"unknown setting {raw_key!r}")
    cfg = dataclasses.replace(cfg, **updates)
    validate(cfg)
    return cfg


def validate(cfg: ExperimentConfig) -> None:
    for m in cfg.methods:
        if m not in METHODS:
            raise InvalidArgument(f"unknown method {m!r}; choose from {', '.join(METHODS)}")
    if cfg.noise_domain not in ("fdm", "sinogram"):
        raise InvalidArgument(f"unknown noise domain {cfg.noise_domain!r}")
    if not cfg.n_theta or any(n < 1 for n in cfg.n_theta):
        raise InvalidArgument("n_theta needs positive entries")
    if not cfg.msnr or not cfg.seeds:
        raise InvalidArgument("msnr and seeds must not be empty")
    if any(math.isnan(v) or v == -math.inf for v in cfg.msnr):
        raise InvalidArgument("msnr entries must be finite or inf")
    if any(s < 0 for s in cfg.seeds):
        raise InvalidArgument("seeds must be >= 0")


def load_config(path) -> ExperimentConfig:
    return apply_settings(ExperimentConfig(), io.read_keyvalues(path))


# ---------------------------------------------------------------- helpers

def msnr_tag(msnr_db: float) -> str:
    return "inf" if msnr_db == math.inf else f"{msnr_db:g}"


def cell_stem(n_theta: int, msnr_db: float, seed: int) -> str:
    return f"meas_nt{n_theta}_msnr{msnr_tag(msnr_db)}_seed{seed}"


class Outputs:
    """Output directory that refuses to clobber files unless ``force`` is set."""

    def __init__(self, root, force: bool):
        self.root = Path(root)
        self.force = force

    def path(self, name: str) -> Path:
        return self.root / name

    def claim(self, *names: str) -> list[Path]:
        paths = [self.path(n) for n in names]
        if not self.force:
            taken = [str(p) for p in paths if p.exists()]
            if taken:
                raise io.FormatError(f"refusing to overwrite {', '.join(taken)} (use --force)")
        try:
            self.root.mkdir(parents=True, exist_ok=True)
        except OSError as exc:
            raise io.FormatError(f"cannot create {self.root}: {exc.strerror or exc}") from exc
        return paths


def build_phantom(cfg: ExperimentConfig) -> RimImage:
    kw = {} if cfg.delta_n is None else {"delta_n": cfg.delta_n}
    return PhantomSpec(cfg.kind, **kw).build(cfg.cartesian())


@dataclass
class Inputs:
    """What a reconstruction needs for one (N_theta, MSNR, seed) cell."""

    meas: Measurement
    budget: NoiseBudget
    sigma_obs: float
    y_at: object = None
    budget_at: NoiseBudget | None = None
    sigma_obs_at: float | None = None


def simulate_cell(cfg: ExperimentConfig, image: RimImage, n_theta: int, msnr_db: float,
                  seed: int) -> Inputs:
    freq = cfg.frequency_grid(n_theta)
    cart = image.grid
    meas = synthesize(image, freq, cfg.n_r, msnr_db, seed, noise_domain=cfg.noise_domain)
    op = ForwardOperator(cart, freq, cfg.n_r, "nfft", cfg.recon_eps)
    bound = l1_bound(image)
    budget = synthetic_budget(meas, op, bound, cfg.chernoff_c)
    meas_at = synthesize(image, freq, cfg.n_r, msnr_db, seed, include_d=False,
                         noise_domain=cfg.noise_domain)
    op_at = ForwardOperator(cart, freq, cfg.n_r, "nfft", cfg.recon_eps, include_d=False)
    budget_at = synthetic_budget(meas_at, op_at, bound, cfg.chernoff_c)
    return Inputs(meas, budget, meas.sigma_obs, meas_at.y, budget_at, meas_at.sigma_obs)


def run_method(method: str, cfg: ExperimentConfig, cart: CartesianGrid, inputs: Inputs,
               truth: RimImage | None = None):
    """Reconstruct one cell. Returns ``(image, trace, iterations, stop_reason, wall, rsnr_db)``."""
    meas = inputs.meas
    freq = meas.y.grid
    op = ForwardOperator(cart, freq, cfg.n_r, "nfft", cfg.recon_eps)
    mean_removed = method != "tvl2"
    if method == "fbp":
        t0 = time.perf_counter()
        image = reconstruct_fbp(meas.sinogram, cart, cfg.n_r)
        wall = time.perf_counter() - t0
        trace, iters, reason = [], 0, "direct"
    elif method == "me":
        res = reconstruct_me(meas.y, op, inputs.budget.eps_total, cfg.solver_params(False), truth)
        image, trace, iters, reason, wall = res.image, res.trace, res.iterations, res.stop_reason, res.wall_time
    elif method == "tvl2":
        res = reconstruct_tv_l2(meas.y, op, inputs.budget.eps_total, cfg.solver_params(), truth)
        image, trace, iters, reason, wall = res.image, res.trace, res.iterations, res.stop_reason, res.wall_time
    elif method in ("at-me", "odt-no-d"):
        op_at = ForwardOperator(cart, freq, cfg.n_r, "nfft", cfg.recon_eps, include_d=False)
        if method == "at-me":
            if inputs.y_at is None or inputs.budget_at is None:
                raise InvalidArgument("at-me needs absorption data (simulate writes *_at files)")
            y, eps = inputs.y_at, inputs.budget_at.eps_total
        else:
            y = remove_d(meas.y, op_at)
            eps = math.hypot(remove_d_eps(inputs.sigma_obs, op_at, cfg.chernoff_c),
                             inputs.budget.eps_nfft)
        res = reconstruct_at_baseline(y, op_at, eps, cfg.solver_params(False), "me", truth)
        image, trace, iters, reason, wall = res.image, res.trace, res.iterations, res.stop_reason, res.wall_time
    else:
        raise InvalidArgument(f"unknown method {method!r}")
    score = rsnr(truth, image, mean_removed=mean_removed) if truth is not None else math.nan
    return image, trace, iters, reason, wall, score


def summary_line(method, n_theta, msnr_db, score, iterations, wall) -> str:
    return (f"method={method} n_theta={n_theta} msnr_db={msnr_tag(msnr_db)} "
            f"rsnr_db={score:.4f} iterations={iterations} wall_time={wall:.3f}")


# ---------------------------------------------------------------- commands

def cmd_phantom(cfg: ExperimentConfig, args, out: Outputs) -> int:
    image = build_phantom(cfg)
    odti, pgm = out.claim("phantom.odti", "phantom.pgm")
    io.write_image(odti, image)
    io.write_pgm(pgm, image.as_2d())
    print(f"wrote {odti} (max {image.values.max():.6g})")
    return EXIT_OK


def _load_truth(path, required: bool) -> RimImage | None:
    if path is None:
        return None
    p = Path(path)
    if not p.exists() and not required:
        return None
    return io.read_image(p)


def cmd_simulate(cfg: ExperimentConfig, args, out: Outputs) -> int:
    image = io.read_image(args.phantom or out.path("phantom.odti"))
    cfg = dataclasses.replace(cfg, n0=image.grid.n0, delta_r=image.grid.delta_r)
    for nt in cfg.n_theta:
        for msnr_db in cfg.msnr:
            for seed in cfg.seeds:
                stem = cell_stem(nt, msnr_db, seed)
                names = [f"{stem}{suf}" for suf in (".odts", ".odtf", ".budget", "_at.odtf", "_at.budget")]
                sino_p, fdm_p, bud_p, at_p, atb_p = out.claim(*names)
                cell = simulate_cell(cfg, image, nt, msnr_db, seed)
                io.write_sinogram(sino_p, cell.meas.sinogram)
                io.write_fdm(fdm_p, cell.meas.y)
                io.write_budget(bud_p, cell.budget, cell.sigma_obs)
                io.write_fdm(at_p, cell.y_at)
                io.write_budget(atb_p, cell.budget_at, cell.sigma_obs_at)
                print(f"wrote {fdm_p} eps_total={cell.budget.eps_total:.6g}")
    return EXIT_OK


def _read_cell(cfg: ExperimentConfig, args, out: Outputs) -> tuple[Inputs, str, int, float]:
    nt, msnr_db, seed = cfg.n_theta[0], cfg.msnr[0], cfg.seeds[0]
    stem = cell_stem(nt, msnr_db, seed)
    fdm_path = Path(args.fdm) if args.fdm else out.path(stem + ".odtf")
    base = fdm_path.with_suffix("")
    stem = base.name
    y = io.read_fdm(fdm_path)
    sino_path = Path(args.sinogram) if args.sinogram else base.with_suffix(".odts")
    bud_path = Path(args.budget) if args.budget else base.with_suffix(".budget")
    budget, nums = io.read_budget(bud_path)
    sigma_obs = nums.get("sigma_obs", budget.sigma_z * y.grid.delta_tau * math.sqrt(y.grid.n_tau))
    sino = io.read_sinogram(sino_path) if sino_path.exists() else None
    meas = Measurement(y, y, sino, sino, budget.sigma_z, msnr_db, sigma_obs)
    inputs = Inputs(meas, budget, sigma_obs)
    at_path = base.parent / (stem + "_at.odtf")
    if at_path.exists():
        inputs.y_at = io.read_fdm(at_path)
        inputs.budget_at = io.read_budget(base.parent / (stem + "_at.budget"))[0]
    return inputs, stem, y.grid.n_theta, msnr_db


def cmd_reconstruct(cfg: ExperimentConfig, args, out: Outputs) -> int:
    method = args.method or cfg.methods[0]
    if method not in METHODS:
        raise InvalidArgument(f"unknown method {method!r}; choose from {', '.join(METHODS)}")
    inputs, stem, nt, msnr_db = _read_cell(cfg, args, out)
    if method == "fbp" and inputs.meas.sinogram is None:
        raise io.FormatError(f"fbp needs the sinogram file next to {stem}.odtf")
    truth = _load_truth(args.truth or out.path("phantom.odti"), required=args.truth is not None)
    n0 = truth.grid.n0 if truth is not None else cfg.n0
    dr = truth.grid.delta_r if truth is not None else cfg.delta_r
    cart = CartesianGrid(n0, dr)
    name = f"recon_{method}_{stem}"
    img_p, pgm_p, trace_p, sum_p = out.claim(name + ".odti", name + ".pgm", name + ".csv", name + ".summary")
    image, trace, iters, reason, wall, score = run_method(method, cfg, cart, inputs, truth)
    io.write_image(img_p, image)
    io.write_pgm(pgm_p, image.as_2d())
    io.write_trace(trace_p, trace)
    line = summary_line(method, nt, msnr_db, score, iters, wall)
    io.write_keyvalues(sum_p, dict(kv.split("=", 1) for kv in line.split()) | {"stop_reason": reason})
    print(line)
    return EXIT_OK


def cmd_evaluate(cfg: ExperimentConfig, args, out: Outputs) -> int:
    truth = io.read_image(args.truth or out.path("phantom.odti"))
    if args.image is None:
        raise InvalidArgument("evaluate needs --image")
    est = io.read_image(args.image)
    if est.grid != truth.grid:
        raise InvalidArgument("image and ground truth grids differ")
    raw = rsnr(truth, est)
    centered = rsnr(truth, est, mean_removed=True)
    print(f"rsnr_db={raw:.4f} rsnr_mean_removed_db={centered:.4f}")
    if args.trace:
        trace = io.read_trace(args.trace)
        if trace:
            last = trace[-1]
            print(f"iterations={last.iter} p_res={last.p_res:.6g} d_res={last.d_res:.6g} "
                  f"rel_change={last.rel_change:.6g}")
    return EXIT_OK


def cmd_sweep(cfg: ExperimentConfig, args, out: Outputs) -> int:
    (csv_path,) = out.claim("sweep.csv")
    truth = build_phantom(cfg)
    rows = []
    for nt in cfg.n_theta:
        for msnr_db in cfg.msnr:
            for seed in cfg.seeds:
                cell = simulate_cell(cfg, truth, nt, msnr_db, seed)
                for method in cfg.methods:
                    _, _, iters, reason, wall, score = run_method(method, cfg, truth.grid, cell, truth)
                    rows.append((method, nt, msnr_db, seed, score, iters, reason, wall))
                    print(summary_line(method, nt, msnr_db, score, iters, wall), flush=True)
    rows.sort(key=lambda r: (r[0], r[1], -r[2], r[3]))
    try:
        with open(csv_path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(SWEEP_COLUMNS)
            for m, nt, msnr_db, seed, score, iters, reason, wall in rows:
                w.writerow([m, nt, msnr_tag(msnr_db), seed, repr(float(score)), iters, reason,
                            f"{wall:.3f}"])
    except OSError as exc:
        raise io.FormatError(f"cannot write {csv_path}: {exc.strerror or exc}") from exc
    print(f"wrote {csv_path} ({len(rows)} rows)")
    return EXIT_OK


def cmd_calibrate(cfg: ExperimentConfig, args, out: Outputs) -> int:
    if args.sinogram is None:
        raise InvalidArgument("calibrate needs --sinogram")
    sino = io.read_sinogram(args.sinogram, full_circle=args.full_circle)
    stem = Path(args.sinogram).with_suffix("").name
    sino_p, shift_p = out.claim(f"{stem}_centered.odts", f"{stem}_shifts.csv")
    centered, shifts = calibrate_center(sino, return_shifts=True)
    io.write_sinogram(sino_p, centered)
    try:
        with open(shift_p, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(("angle_index", "theta", "shift"))
            for t, (th, s) in enumerate(zip(sino.grid.thetas, shifts)):
                w.writerow((t, repr(float(th)), int(s)))
    except OSError as exc:
        raise io.FormatError(f"cannot write {shift_p}: {exc.strerror or exc}") from exc
    print(f"wrote {sino_p}; shifts in [{int(np.min(shifts))}, {int(np.max(shifts))}]")
    return EXIT_OK


COMMANDS = {"phantom": cmd_phantom, "simulate": cmd_simulate, "reconstruct": cmd_reconstruct,
            "evaluate": cmd_evaluate, "sweep": cmd_sweep, "calibrate": cmd_calibrate}

# flags that map one-to-one onto config keys
_SETTING_FLAGS = ("kind", "delta_n", "n0", "n_tau", "n_theta", "delta_r", "delta_tau", "n_r",
                  "msnr", "threshold", "max_iter", "adaptive", "c_balance", "recon_eps",
                  "chernoff_c", "noise_domain", "methods")


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    g = common.add_argument_group("global options")
    g.add_argument("--config", default=argparse.SUPPRESS, help="key = value settings file")
    g.add_argument("--out", default=argparse.SUPPRESS, help="output directory (default: out)")
    g.add_argument("--seed", type=int, default=argparse.SUPPRESS, help="noise seed (non-negative)")
    g.add_argument("--force", action="store_true", default=argparse.SUPPRESS,
                   help="overwrite existing outputs")
    s = common.add_argument_group("experiment settings (override --config)")
    for name in _SETTING_FLAGS:
        s.add_argument("--" + name.replace("_", "-"), dest=name, default=argparse.SUPPRESS,
                       metavar="VALUE")

    parser = argparse.ArgumentParser(prog="deflecto", parents=[common],
                                     description="Optical deflectometric tomography experiments.")
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("phantom", parents=[common], help="write a phantom image")
    p = sub.add_parser("simulate", parents=[common], help="simulate sinograms, FDM and budgets")
    p.add_argument("--phantom", help="phantom file (default: OUT/phantom.odti)")
    p = sub.add_parser("reconstruct", parents=[common], help="reconstruct one measurement")
    p.add_argument("--method", help="|".join(METHODS))
    p.add_argument("--fdm", help="FDM file (default: derived from the settings)")
    p.add_argument("--sinogram", help="sinogram file (default: next to the FDM file)")
    p.add_argument("--budget", help="budget file (default: next to the FDM file)")
    p.add_argument("--truth", help="ground truth image for RSNR (default: OUT/phantom.odti if present)")
    p = sub.add_parser("evaluate", parents=[common], help="RSNR of an image against the ground truth")
    p.add_argument("--image", help="reconstructed image")
    p.add_argument("--truth", help="ground truth (default: OUT/phantom.odti)")
    p.add_argument("--trace", help="optional trace CSV to summarize")
    sub.add_parser("sweep", parents=[common], help="RSNR over N_theta, MSNR, seeds and methods")
    p = sub.add_parser("calibrate", parents=[common], help="re-center a measured sinogram")
    p.add_argument("--sinogram", help="sinogram file")
    p.add_argument("--full-circle", action="store_true", help="angles span [0, 2 pi)")
    return parser


def resolve(args) -> tuple[ExperimentConfig, Outputs]:
    ns = vars(args)
    cfg = load_config(ns["config"]) if "config" in ns else ExperimentConfig()
    flags = {k: ns[k] for k in _SETTING_FLAGS if k in ns}
    if "seed" in ns:
        flags["seeds"] = str(ns["seed"])
    if "out" in ns:
        flags["out"] = ns["out"]
    cfg = apply_settings(cfg, flags)
    return cfg, Outputs(cfg.out, bool(ns.get("force", False)))


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code is not None else EXIT_OK
    try:
        cfg, out = resolve(args)
        return COMMANDS[args.command](cfg, args, out)
    except InvalidArgument as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except (io.FormatError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (NumericalFailure, CalibrationUndefined) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
