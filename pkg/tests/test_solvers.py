import math

import numpy as np
import pytest

from deflecto import CalibrationUndefined, InvalidArgument, NumericalFailure
from deflecto.data import FdmVector, RimImage, Sinogram
from deflecto.forward import ForwardOperator, forward_apply
from deflecto.grids import PolarGrid, paired_grids
from deflecto.metrics import rsnr
from deflecto.phantoms import PhantomSpec
from deflecto.pipeline import l1_bound, synthesize, synthetic_budget
from deflecto.prox import prox_l2_norm, tv_norm
from deflecto.solvers import (DualBlock, MatrixOperator, SolverParams, calibrate_center,
                              center_shifts, cp_iterate, decenter, init_state, operator_norm,
                              reconstruct_at_baseline, reconstruct_fbp, reconstruct_me,
                              reconstruct_tv_l2, remove_d, run_cp)
from deflecto.solvers.recon import fidelity_block


def dense(op):
    return np.stack([op.apply(e) for e in np.eye(op.cart.N)], axis=1)


# ------------------------------------------------------------------ operator norm

def test_operator_norm_examples():
    assert operator_norm(MatrixOperator(np.eye(5)), 20) == pytest.approx(1.01)
    assert operator_norm(MatrixOperator(np.diag([3.0, 1.0])), 60) == pytest.approx(3.03)
    assert operator_norm(MatrixOperator(np.zeros((3, 3))), 10) == 0.0


def test_operator_norm_matches_svd():
    A = np.random.default_rng(0).standard_normal((20, 12))
    est, hist = operator_norm(MatrixOperator(A), 200, safety=1.0, return_history=True)
    assert est == pytest.approx(np.linalg.svd(A, compute_uv=False)[0], abs=1e-6)
    assert all(b >= a - 1e-12 for a, b in zip(hist, hist[1:]))


def test_operator_norm_rejects_zero_iterations():
    with pytest.raises(InvalidArgument):
        operator_norm(MatrixOperator(np.eye(2)), 0)


# ------------------------------------------------------------------ generic iteration

def test_zero_functions_leave_state_unchanged():
    A = MatrixOperator(np.array([[1.0, 2.0], [0.0, 1.0]]))
    block = DualBlock(A.apply, A.adjoint, lambda s, nu: np.zeros_like(s), "zero")
    x0 = np.array([0.4, -1.2])
    state = init_state(x0, [block], 0.3, 0.3, 0.5)
    new, _ = cp_iterate(state, [block], lambda v, step: v, SolverParams(adaptive=False))
    np.testing.assert_array_equal(new.x, x0)
    assert not new.duals[0].any()


def _least_squares_block(A, y):
    # F = |. - y|^2 / 2, so prox_{nu F*}(v) = (v - nu y) / (1 + nu)
    return DualBlock(A.apply, A.adjoint, lambda v, nu: (v - nu * y) / (1 + nu), "ls")


def test_least_squares_converges_to_inverse():
    K = np.array([[2.0, 1.0], [0.5, 1.5]])
    y = np.array([1.0, -3.0])
    A = MatrixOperator(K)
    step = 0.9 / np.linalg.norm(K, 2)
    params = SolverParams(adaptive=False, max_iter=10_000, threshold=0.0)
    state = init_state(np.zeros(2), [_least_squares_block(A, y)], step, step, 0.5)
    state, _, _ = run_cp(state, [_least_squares_block(A, y)], lambda v, s: v, params)
    np.testing.assert_allclose(state.x, np.linalg.solve(K, y), atol=1e-8)


def test_residual_closed_forms():
    rng = np.random.default_rng(1)
    K = rng.standard_normal((3, 4))
    y = rng.standard_normal(3)
    A = MatrixOperator(K)
    block = _least_squares_block(A, y)
    state = init_state(rng.standard_normal(4), [block], 0.2, 0.3, 0.5)
    for _ in range(3):
        state, _ = cp_iterate(state, [block], lambda v, s: v, SolverParams(adaptive=False))
    new, rec = cp_iterate(state, [block], lambda v, s: v, SolverParams(adaptive=False))
    p = np.abs((state.x - new.x) / state.mu).sum()
    d = np.abs((state.duals[0] - new.duals[0]) / state.nu + K @ (state.x_bar - new.x)).sum()
    assert rec.p_res == pytest.approx(p, rel=1e-12)
    assert rec.d_res == pytest.approx(d, rel=1e-12)
    assert rec.rel_change == pytest.approx(np.linalg.norm(new.x - state.x) / np.linalg.norm(state.x))


def test_non_finite_iterates_raise():
    A = MatrixOperator(np.eye(2))
    block = _least_squares_block(A, np.array([np.nan, 0.0]))
    state = init_state(np.ones(2), [block], 0.5, 0.5, 0.5)
    with pytest.raises(NumericalFailure):
        cp_iterate(state, [block], lambda v, s: v, SolverParams())


@pytest.mark.parametrize("kw", [dict(gamma=1.0), dict(beta=1.0), dict(beta=0.0), dict(rho0=1.0),
                                dict(c_balance=0.0), dict(rule="both"), dict(max_iter=-1),
                                dict(threshold=-1e-3), dict(mu0=0.0)])
def test_params_validation(kw):
    with pytest.raises(InvalidArgument):
        SolverParams(**kw)


# ------------------------------------------------------------------ minimum energy

def test_me_machinery_matches_pseudo_inverse():
    rng = np.random.default_rng(3)
    Phi = rng.standard_normal((2, 4))
    y = rng.standard_normal(2)
    A = MatrixOperator(Phi)
    knorm = np.linalg.norm(Phi, 2)
    params = SolverParams(adaptive=False, max_iter=20_000, threshold=0.0)
    blocks = [fidelity_block(A, y, 0.0)]
    state = init_state(np.zeros(4), blocks, 0.9 / knorm, 0.9 / knorm, 0.5)
    state, _, _ = run_cp(state, blocks, prox_l2_norm, params)
    np.testing.assert_allclose(state.x, np.linalg.pinv(Phi) @ y, atol=1e-6)


@pytest.fixture(scope="module")
def tiny_problem():
    cart, polar, freq = paired_grids(8, 1)
    op = ForwardOperator(cart, freq, 1.0, "exact")
    return cart, freq, op, dense(op)


def test_me_matches_pseudo_inverse_on_forward_operator(tiny_problem):
    cart, freq, op, Phi = tiny_problem
    rng = np.random.default_rng(4)
    x = np.zeros(cart.shape)
    x[2:6, 2:6] = rng.random((4, 4))
    y = FdmVector(freq, Phi @ x.reshape(-1))
    res = reconstruct_me(y, op, 0.0, SolverParams(adaptive=False, max_iter=60_000, threshold=1e-14))
    expect = np.linalg.lstsq(Phi, y.values, rcond=None)[0]  # minimum-norm solution
    np.testing.assert_allclose(res.image.values, expect, atol=1e-6 * np.abs(expect).max())


def test_me_of_zero_data_is_zero(tiny_problem):
    cart, freq, op, _ = tiny_problem
    res = reconstruct_me(FdmVector(freq, np.zeros(freq.M)), op, 0.0, SolverParams(max_iter=50))
    assert not res.image.values.any()
    assert (res.iterations, res.stop_reason) == (1, "threshold")


def test_me_keeps_going_while_soft_threshold_holds_x_at_zero():
    # tiny data: thousands of prox steps return exactly 0 while the duals build up
    Phi = np.array([[1.0, 0.0], [0.0, 2.0]])
    y = np.array([1e-4, 2e-4])
    blocks = [fidelity_block(MatrixOperator(Phi), y, 0.0)]
    state = init_state(np.zeros(2), blocks, 0.45, 0.45, 0.5)
    first, rec = cp_iterate(state, blocks, prox_l2_norm, SolverParams(adaptive=False))
    assert not first.x.any() and rec.rel_change == np.inf
    state, _, _ = run_cp(state, blocks, prox_l2_norm, SolverParams(adaptive=False, max_iter=20_000))
    held = [r.iter for r in state.trace if r.rel_change == np.inf]
    assert state.k > held[-1] and state.x.all()


def test_recon_input_checks(tiny_problem):
    cart, freq, op, _ = tiny_problem
    y = FdmVector(freq, np.zeros(freq.M))
    with pytest.raises(InvalidArgument):
        reconstruct_me(y, op, -1.0)
    with pytest.raises(InvalidArgument):
        reconstruct_tv_l2(FdmVector(paired_grids(8, 2)[2], np.zeros(2 * freq.M)), op, 0.1)
    with pytest.raises(InvalidArgument):
        reconstruct_at_baseline(y, op, 0.1)
    at = ForwardOperator(cart, freq, 1.0, "exact", include_d=False)
    with pytest.raises(InvalidArgument):
        reconstruct_at_baseline(y, at, 0.1, method="fbp")


# ------------------------------------------------------------------ TV-l2 on a small grid

@pytest.fixture(scope="module")
def ball32():
    cart, polar, freq = paired_grids(32, 20)
    img = PhantomSpec("ball", centers=((0, 0),), radius=9).build(cart)
    op = ForwardOperator(cart, freq, 1.0, "nfft", 1e-10)
    meas = synthesize(img, freq, 1.0, 30.0, seed=2)
    eps = synthetic_budget(meas, op, l1_bound(img)).eps_total
    params = SolverParams(max_iter=3000, threshold=1e-6)
    res = reconstruct_tv_l2(meas.y, op, eps, params, img)
    return cart, op, img, meas, eps, res


def test_tv_output_is_in_the_constraint_set(ball32):
    cart, op, img, meas, eps, res = ball32
    u = res.image.values.reshape(cart.shape)
    assert (u[cart.boundary_mask] == 0.0).all()
    assert not (u < 0).any()
    assert np.isfinite(u).all()


def test_tv_output_satisfies_fidelity_and_beats_me(ball32):
    cart, op, img, meas, eps, res = ball32
    assert np.linalg.norm(op.apply(res.image.values) - meas.y.values) <= 1.05 * eps
    me = reconstruct_me(meas.y, op, eps, SolverParams(adaptive=False, max_iter=3000), img)
    assert res.trace[-1].rsnr_db > me.trace[-1].rsnr_db + 10


def test_tv_constant_shift_leaves_feasible_set(ball32):
    cart, op, img, meas, eps, res = ball32
    shifted = (res.image.values + 1e-3).reshape(cart.shape)
    assert (shifted[cart.boundary_mask] != 0).all()


def test_tv_trace_and_stepsize_product(ball32):
    *_, res = ball32
    iters = [r.iter for r in res.trace]
    assert iters == list(range(1, len(iters) + 1))
    prod = [r.mu * r.nu for r in res.trace]
    np.testing.assert_allclose(prod, prod[0], rtol=1e-12)
    assert len({r.mu for r in res.trace}) > 1  # the adaptive rule did act


def test_tv_huge_eps_returns_zero(ball32):
    cart, op, img, meas, eps, res = ball32
    big = 2 * np.linalg.norm(meas.y.values)
    out = reconstruct_tv_l2(meas.y, op, big, SolverParams(max_iter=2000, threshold=0.0))
    assert tv_norm(out.image.values.reshape(cart.shape)) <= 1e-8 * img.values.max() * cart.N


# ------------------------------------------------------------------ FBP

def test_fbp_zero_and_full_circle_rejection():
    cart, polar, _ = paired_grids(16, 6)
    assert not reconstruct_fbp(Sinogram(polar, np.zeros(polar.M)), cart).values.any()
    with pytest.raises(InvalidArgument):
        reconstruct_fbp(Sinogram(PolarGrid(polar.n_tau, 12, full_circle=True), np.zeros(polar.M * 2)), cart)
    with pytest.raises(InvalidArgument):
        reconstruct_fbp(Sinogram(polar, np.zeros(polar.M)), cart, 0.0)


def test_fbp_ball_full_coverage():
    cart, polar, freq = paired_grids(256, 360)
    img = PhantomSpec("ball").build(cart)
    meas = synthesize(img, freq)
    assert rsnr(img, reconstruct_fbp(meas.sinogram, cart), mean_removed=True) >= 15.0


def test_fbp_scales_with_reference_index():
    cart, polar, freq = paired_grids(32, 30)
    img = PhantomSpec("ball", centers=((2, -1),), radius=8).build(cart)
    a = reconstruct_fbp(synthesize(img, freq, 1.0).sinogram, cart, 1.0).values
    b = reconstruct_fbp(synthesize(img, freq, 1.4).sinogram, cart, 1.4).values
    np.testing.assert_allclose(a, b, atol=1e-12 * np.abs(a).max())


# ------------------------------------------------------------------ AT baseline

def test_remove_d_turns_odt_into_at_data():
    cart, _, freq = paired_grids(16, 5)
    img = PhantomSpec("ball", centers=((0, 0),), radius=4).build(cart)
    op = ForwardOperator(cart, freq, 1.0, "exact")
    at = ForwardOperator(cart, freq, 1.0, "exact", include_d=False)
    got = remove_d(forward_apply(op, img), op)
    expect = forward_apply(at, img)
    assert not got.real[:, 0].any() and not got.imag[:, 0].any()
    np.testing.assert_allclose(got.real[:, 1:], expect.real[:, 1:], atol=1e-12)
    np.testing.assert_allclose(got.imag[:, 1:], expect.imag[:, 1:], atol=1e-12)


def test_noiseless_at_and_odt_me_agree():
    cart, _, freq = paired_grids(64, 90)
    img = PhantomSpec("ball", centers=((0, 0),), radius=18).build(cart)
    op = ForwardOperator(cart, freq, 1.0, "nfft", 1e-10)
    at = ForwardOperator(cart, freq, 1.0, "nfft", 1e-10, include_d=False)
    params = SolverParams(adaptive=False, max_iter=4000)
    odt = reconstruct_me(synthesize(img, freq).y, op, 0.0, params, img)
    atr = reconstruct_at_baseline(synthesize(img, freq, include_d=False).y, at, 0.0, params, "me", img)
    assert abs(odt.trace[-1].rsnr_db - atr.trace[-1].rsnr_db) <= 3.0


# ------------------------------------------------------------------ calibration

def _ball_sinogram(n0=64, n_theta=24):
    cart, polar, freq = paired_grids(n0, n_theta)
    img = PhantomSpec("ball", centers=((0, 0),), radius=n0 // 5).build(cart)
    return cart, freq, img, synthesize(img, freq).sinogram


def test_calibration_keeps_centered_trace():
    polar = PolarGrid(16, 2)
    row = np.zeros(16)
    row[6], row[10] = 1.0, -1.0  # midpoint at index 8, the central ray
    s = Sinogram.from_2d(polar, np.stack([row, -row]))
    np.testing.assert_array_equal(calibrate_center(s).values, s.values)


def test_calibration_recovers_known_shift():
    *_, sino = _ball_sinogram()
    moved = decenter(sino, 5)
    assert (center_shifts(moved) == -5).all()


def test_calibration_flat_trace():
    polar = PolarGrid(8, 2)
    data = np.zeros(polar.shape)
    data[0, 2] = 1.0
    with pytest.raises(CalibrationUndefined):
        calibrate_center(Sinogram.from_2d(polar, data))


def test_calibration_end_to_end():
    cart, freq, img, sino = _ball_sinogram(64, 30)
    shifts = np.random.default_rng(7).integers(-3, 4, freq.n_theta)
    fixed = calibrate_center(decenter(sino, shifts))
    op = ForwardOperator(cart, freq, 1.0, "nfft", 1e-10)
    from deflecto.forward import radial_dft
    params = SolverParams(max_iter=1500)
    eps = 0.05 * np.linalg.norm(radial_dft(sino).values)
    ref = reconstruct_tv_l2(radial_dft(sino), op, eps, params, img).trace[-1].rsnr_db
    got = reconstruct_tv_l2(radial_dft(fixed), op, eps, params, img).trace[-1].rsnr_db
    assert abs(ref - got) <= 1.0
