"""Reconstruction engines: FBP, minimum energy and adaptive primal-dual TV-l2."""
from .calibration import calibrate_center, center_shifts, decenter
from .cp import (DualBlock, ReconResult, SolverParams, SolverState, cp_iterate, init_state,
                 run_cp)
from .fbp import backproject, fbp_from_fdm, hilbert_filter, reconstruct_fbp
from .linear import GradientOperator, MatrixOperator, StackedOperator, operator_norm
from .recon import (reconstruct_at_baseline, reconstruct_me, reconstruct_tv_l2, remove_d,
                    remove_d_eps, tv_norms, tv_operator_norm)

__all__ = [
    "calibrate_center", "center_shifts", "decenter",
    "DualBlock", "ReconResult", "SolverParams", "SolverState", "cp_iterate", "init_state", "run_cp",
    "backproject", "fbp_from_fdm", "hilbert_filter", "reconstruct_fbp",
    "GradientOperator", "MatrixOperator", "StackedOperator", "operator_norm",
    "reconstruct_at_baseline", "reconstruct_me", "reconstruct_tv_l2", "remove_d", "remove_d_eps",
    "tv_norms", "tv_operator_norm",
]
