import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.stats import chi2

from sphtv.gradient import GradientField
from sphtv.grid import build_grid, quadrature_weights
from sphtv.harmonic import get_transform
from sphtv.inpaint import (
    dense_harmonic_synthesis,
    half_real_view,
    harmonic_synthesis_op,
    measurement_pair,
    pole_tying_op,
    random_mask,
)
from sphtv.prox import (
    DataBallProjection,
    LinearOpPair,
    SolverConfig,
    SolverDivergence,
    SVDBallProjection,
    TVProx,
    chi2_epsilon,
    chi2_quantile,
    dirac_coefficients,
    dirac_opnorm,
    douglas_rachford,
    identity_op,
    power_iteration_norm,
    project_data_ball,
    prox_tv,
)


def dense(op: LinearOpPair, n_in: int) -> np.ndarray:
    cols = []
    for j in range(n_in):
        e = np.zeros(n_in, complex)
        e[j] = 1
        cols.append(np.ravel(op(e)))
    return np.stack(cols, axis=1)


# -- chi-squared bound --------------------------------------------------------


def test_chi2_reference_value():
    assert chi2_epsilon(1, 100, 0.99) ** 2 == pytest.approx(135.807, abs=0.01)
    assert chi2_epsilon(1, 100, 0.99) == pytest.approx(11.654, abs=1e-3)


def test_chi2_zero_noise():
    assert chi2_epsilon(0, 50, 0.99) == 0


@pytest.mark.parametrize("alpha", [0, 1, -0.1, 1.5])
def test_chi2_rejects_alpha(alpha):
    with pytest.raises(ValueError):
        chi2_epsilon(1, 10, alpha)


@settings(max_examples=50, deadline=None)
@given(M=st.integers(1, 5000), alpha=st.floats(0.01, 0.999))
def test_chi2_quantile_matches_scipy(M, alpha):
    assert chi2_quantile(M, alpha) == pytest.approx(chi2.ppf(alpha, M), rel=1e-9)


# -- operator pairs and norms -------------------------------------------------


def test_linear_op_pair_rejects_wrong_adjoint():
    A = np.random.default_rng(0).standard_normal((4, 3))
    LinearOpPair(lambda x: A @ x, lambda y: A.T @ y, (3,), (4,))
    with pytest.raises(ValueError):
        LinearOpPair(lambda x: A @ x, lambda y: 2 * A.T @ y, (3,), (4,))


def test_power_iteration_identity_and_diagonal():
    assert power_iteration_norm(identity_op((10,)), iters=20) == pytest.approx(1.0, abs=1e-8)
    d = np.array([3.0, 1.0, 0.5])
    op = LinearOpPair(lambda x: d * x, lambda y: d * y, (3,), (3,))
    assert power_iteration_norm(op, iters=200) == pytest.approx(3.0, abs=1e-6)


def test_power_iteration_nondecreasing():
    A = np.random.default_rng(1).standard_normal((30, 20))
    op = LinearOpPair(lambda x: A @ x, lambda y: A.T @ y, (20,), (30,))
    ests = [power_iteration_norm(op, iters=k, seed=3) for k in (1, 2, 4, 8, 16, 32)]
    assert all(b >= a - 1e-12 for a, b in zip(ests, ests[1:]))


def test_tv_operator_norm_against_svd():
    g = build_grid("mw", 8)
    synth = harmonic_synthesis_op(g)
    op = TVProx(synth, quadrature_weights(g), iters=1, op_norm=1.0).grad_op()
    to_vec, from_vec = half_real_view(8)

    def real_map(v):
        f = op.apply(from_vec(v))
        return np.concatenate([f.u.ravel(), f.v.ravel()])

    cols = [real_map(e) for e in np.eye(64)]
    true = np.linalg.svd(np.stack(cols, axis=1), compute_uv=False)[0]
    assert power_iteration_norm(op, iters=500, seed=0) == pytest.approx(true, rel=1e-4)


def test_dirac_unit_norm():
    for L in (1, 5, 32):
        assert np.linalg.norm(dirac_coefficients(L)) == pytest.approx(1.0, abs=1e-15)


def _explicit_norm(L):
    return np.linalg.svd(dense(get_transform("mw", L).inverse, L * L), compute_uv=False)[0]


@pytest.mark.parametrize("L", [2, 4, 8, 16, 32])
def test_dirac_opnorm_tracks_explicit_norm(L):
    # the Dirac image is a feasible point, so it can only under-estimate
    true = _explicit_norm(L)
    est = dirac_opnorm(L)
    assert est <= true * (1 + 1e-12)
    assert est >= true * (1 - 6e-3)


@pytest.mark.xfail(strict=True, reason="the Dirac image is not the top singular vector; gap 2e-3 to 5e-3")
@pytest.mark.parametrize("L", [2, 4, 8, 16])
def test_dirac_opnorm_within_1e3(L):
    true = _explicit_norm(L)
    assert abs(dirac_opnorm(L) - true) <= 1e-3 * true


# -- TV prox ------------------------------------------------------------------


def _spatial_problem(L=4):
    g = build_grid("mw", L)
    return g, pole_tying_op(g), quadrature_weights(g)


def test_prox_tv_of_zero():
    g, synth, w = _spatial_problem()
    assert not np.any(prox_tv(np.zeros(g.n_distinct), 0.3, synth, w))


def test_prox_tv_vanishing_lambda():
    g, synth, w = _spatial_problem()
    z = np.random.default_rng(0).standard_normal(g.n_distinct)
    assert np.max(np.abs(prox_tv(z, 1e-12, synth, w) - z)) <= 1e-8


def test_prox_tv_rejects_nonfinite():
    g, synth, w = _spatial_problem()
    z = np.full(g.n_distinct, np.nan)
    with pytest.raises(SolverDivergence):
        prox_tv(z, 0.1, synth, w)


def _subgradient_oracle(z, lam, prox: TVProx, iters=100_000):
    op = prox.grad_op()
    x = z.copy()
    best = prox.objective(x, z, lam)
    for k in range(1, iters + 1):
        G = op.apply(x) * -1.0
        mag = G.magnitude()
        unit = GradientField(np.where(mag > 0, G.u / np.where(mag > 0, mag, 1), 0),
                             np.where(mag > 0, G.v / np.where(mag > 0, mag, 1), 0))
        sub = (x - z) + lam * op.adjoint(unit * -1.0)
        x = x - (2.0 / (k + 1)) * sub
        best = min(best, prox.objective(x, z, lam))
    return best


def test_prox_tv_against_subgradient_oracle():
    g, synth, w = _spatial_problem()
    z = np.random.default_rng(1).standard_normal(g.n_distinct)
    prox = TVProx(synth, w, iters=3000, warm_start=False)
    x = prox(z, 0.1)
    ref = _subgradient_oracle(z, 0.1, prox)
    got = prox.objective(x, z, 0.1)
    assert got <= ref * (1 + 1e-4)
    assert got >= ref * (1 - 1e-4)


@settings(max_examples=20, deadline=None)
@given(seed=st.integers(0, 2**31), lam=st.floats(1e-3, 10), iters=st.integers(1, 30))
def test_prox_never_worse_than_input(seed, lam, iters):
    g = build_grid("mw", 4)
    prox = TVProx(harmonic_synthesis_op(g), quadrature_weights(g), iters=iters, op_norm=None)
    z = harmonic_synthesis_op(g).random_in(np.random.default_rng(seed))
    x = prox(z, lam)
    assert prox.objective(x, z, lam) <= prox.objective(z, z, lam) + 1e-10


# -- data-ball projection -----------------------------------------------------


def test_ball_feasible_point_unchanged():
    A = identity_op((5,))
    y = np.ones(5)
    x = y + 0.01
    assert project_data_ball(x, y, A, 1.0) is x


def test_ball_identity_closed_form():
    rng = np.random.default_rng(2)
    y, x = rng.standard_normal(8), 5 * rng.standard_normal(8)
    eps = 0.7
    expect = y + (x - y) * min(1, eps / np.linalg.norm(x - y))
    for tight in (True, False):
        got = project_data_ball(x, y, identity_op((8,)), eps, tight=tight, max_iters=5000, tol=1e-14)
        assert np.max(np.abs(got - expect)) <= 1e-10


def _harmonic_ball_problem(M=20, seed=5, sigma=0.05):
    """Noisy measurements of a random signal; the ball then contains the truth."""
    g = build_grid("mw", 4)
    op = random_mask(g, M, seed)
    A = measurement_pair(op, g).compose(harmonic_synthesis_op(g))
    rng = np.random.default_rng(seed)
    y = A.apply(A.random_in(rng)) + sigma * rng.standard_normal(M)
    x = A.random_in(rng)
    return g, op, A, y, x, chi2_epsilon(sigma, M, 0.99)


def test_svd_projection_kkt():
    g, op, A, y, x, eps = _harmonic_ball_problem()
    to_vec, from_vec = half_real_view(4)
    Amat = dense_harmonic_synthesis(g.scheme, 4)[op.indices]
    assert np.linalg.norm(y - Amat @ to_vec(x)) > eps
    p = SVDBallProjection(y, Amat, eps, to_vec, from_vec)(x)
    r = y - Amat @ to_vec(p)
    assert np.linalg.norm(r) <= eps * (1 + 1e-6)
    assert np.linalg.norm(r) >= eps * (1 - 1e-6)
    # stationarity: p - x is a nonnegative multiple of A^T r
    d, gdir = to_vec(p) - to_vec(x), Amat.T @ r
    cos = d @ gdir / (np.linalg.norm(d) * np.linalg.norm(gdir))
    assert cos == pytest.approx(1.0, abs=1e-9)


def test_dual_forward_backward_matches_exact_projection():
    g, op, A, y, x, eps = _harmonic_ball_problem()
    to_vec, from_vec = half_real_view(4)
    Amat = dense_harmonic_synthesis(g.scheme, 4)[op.indices]
    exact = SVDBallProjection(y, Amat, eps, to_vec, from_vec)(x)
    long_run = DataBallProjection(y, A, eps, max_iters=100_000, tol=1e-15)(x)
    assert np.linalg.norm(long_run - exact) <= 1e-6 * max(1.0, np.linalg.norm(exact))
    default = DataBallProjection(y, A, eps)
    assert default.residual(default(x)) <= eps * (1 + 1e-6)


def test_projection_idempotent():
    g, op, A, y, x, eps = _harmonic_ball_problem(M=12, seed=9)
    P = DataBallProjection(y, A, eps, max_iters=5000, tol=1e-14)
    p = P(x)
    assert np.linalg.norm(P(p) - p) <= 1e-8 * max(1.0, np.linalg.norm(p))
    to_vec, from_vec = half_real_view(4)
    S = SVDBallProjection(y, dense_harmonic_synthesis(g.scheme, 4)[op.indices], eps, to_vec, from_vec)
    s = S(x)
    assert np.linalg.norm(S(s) - s) <= 1e-8 * max(1.0, np.linalg.norm(s))


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 2**31), M=st.integers(1, 60), n=st.integers(1, 40), frac=st.floats(0.05, 2.0))
def test_svd_projection_random_dense(seed, M, n, frac):
    rng = np.random.default_rng(seed)
    A = rng.standard_normal((M, n))
    y, x = rng.standard_normal(M), rng.standard_normal(n)
    floor = np.linalg.norm(y - A @ np.linalg.lstsq(A, y, rcond=None)[0])
    eps = floor + frac * (np.linalg.norm(y - A @ x) - floor)
    p = SVDBallProjection(y, A, eps)(x)
    assert np.linalg.norm(y - A @ p) <= eps * (1 + 1e-6) + 1e-12


# -- Douglas-Rachford ---------------------------------------------------------


def test_dr_fixed_point():
    centre = np.array([1.0, 2.0])
    proj = lambda v: centre + (v - centre) * min(1, 1.5 / max(np.linalg.norm(v - centre), 1e-300))
    x0 = np.array([1.5, 2.5])
    sol, rep = douglas_rachford(lambda z, g: proj(z), proj, x0, SolverConfig())
    assert rep.iterations == SolverConfig().stop_window and rep.converged
    np.testing.assert_allclose(sol, x0)


def test_dr_does_not_stop_at_objective_turning_point():
    # a single flat step at a turning point must not count as convergence
    values = iter([3.0, 2.0, 1.5, 1.5, 1.8, 1.2, 1.0, 1.0, 1.0, 1.0, 1.0])
    cfg = SolverConfig(rel_obj_tol=1e-9, stop_window=3)
    _, rep = douglas_rachford(lambda z, g: z, lambda v: v, np.zeros(1), cfg,
                              objective=lambda x: next(values))
    assert rep.converged and rep.iterations == 9
    assert rep.history[-1] == 1.0


def test_dr_one_dimensional():
    soft = lambda z, g: np.sign(z) * np.maximum(np.abs(z) - g, 0)
    clip = lambda v: np.clip(v, 2.0, 4.0)
    cfg = SolverConfig(rel_obj_tol=1e-12, max_iters=1000)
    sol, rep = douglas_rachford(soft, clip, np.array([10.0]), cfg, objective=lambda x: float(abs(x[0])))
    assert sol[0] == pytest.approx(2.0, abs=1e-6)


@pytest.mark.filterwarnings("ignore::RuntimeWarning")
def test_dr_divergence_reported():
    bad = lambda z, g: z * np.inf
    with pytest.raises(SolverDivergence):
        douglas_rachford(bad, lambda v: v, np.ones(3), SolverConfig())


@pytest.mark.parametrize("kw", [dict(gamma=0), dict(rel_obj_tol=0), dict(max_iters=0), dict(relaxation=2),
                                dict(stop_window=0)])
def test_solver_config_validation(kw):
    with pytest.raises(ValueError):
        SolverConfig(**kw)
