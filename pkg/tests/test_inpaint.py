import json

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from sphtv.gradient import tv_norm
from sphtv.grid import SamplingScheme, build_grid, quadrature_weights
from sphtv.harmonic import band_limit, conj_sym_extend, get_transform
from sphtv.inpaint import (
    CSV_COLUMNS,
    ExperimentConfig,
    MeasurementOp,
    add_noise,
    apply_mask,
    binarize,
    half_real_view,
    harmonic_synthesis_op,
    make_test_image,
    mask_adjoint,
    pole_tying_op,
    random_caps_map,
    random_mask,
    run_experiment,
    sample_raster,
    sea_level_image,
    snr_harmonic,
    snr_image,
    solve_harmonic,
    solve_spatial,
    solver_config_for,
    topography_map,
    trial_seed,
)
from sphtv.prox import SolverConfig, chi2_epsilon


# -- masks and noise ----------------------------------------------------------


def test_full_mask_covers_distinct_points():
    g = build_grid("mw", 6)
    op = random_mask(g, g.n_distinct, 0)
    assert sorted(op.indices.tolist()) == sorted(g.distinct_indices().tolist())
    x = np.arange(g.n_samples, dtype=float).reshape(g.shape)
    np.testing.assert_array_equal(np.sort(apply_mask(op, x)), np.sort(x.ravel()[g.distinct_indices()]))


def test_empty_mask():
    op = random_mask(build_grid("dh", 4), 0, 0)
    assert op.M == 0 and op.dense().shape == (0, op.N)


def test_mask_size_and_determinism():
    g = build_grid("mw", 32)
    a, b = random_mask(g, 512, 11), random_mask(g, 512, 11)
    assert a.M == 512 and np.unique(a.indices).size == 512
    np.testing.assert_array_equal(a.indices, b.indices)
    assert not np.array_equal(a.indices, random_mask(g, 512, 12).indices)


def test_mask_too_large():
    g = build_grid("mw", 4)
    with pytest.raises(ValueError):
        random_mask(g, g.n_distinct + 1, 0)


def test_measurement_op_validation():
    with pytest.raises(ValueError):
        MeasurementOp(np.array([0, 0]), 5)
    with pytest.raises(ValueError):
        MeasurementOp(np.array([5]), 5)
    D = MeasurementOp(np.array([3, 1]), 5).dense()
    np.testing.assert_array_equal(D.sum(axis=1), [1, 1])


def test_mask_adjoint_identity_and_indicator():
    g = build_grid("dh", 5)
    op = random_mask(g, 30, 3)
    rng = np.random.default_rng(0)
    for _ in range(100):
        x, y = rng.standard_normal(g.shape), rng.standard_normal(30)
        assert np.dot(apply_mask(op, x), y) == pytest.approx(np.sum(x * mask_adjoint(op, y, g.shape)), abs=1e-12)
    ind = mask_adjoint(op, apply_mask(op, np.ones(g.shape)), g.shape)
    assert ind.sum() == 30 and set(np.unique(ind)) == {0.0, 1.0}


def test_mask_dimension_errors():
    g = build_grid("mw", 4)
    op = random_mask(g, 5, 0)
    with pytest.raises(ValueError):
        apply_mask(op, np.zeros(10))
    with pytest.raises(ValueError):
        mask_adjoint(op, np.zeros(4))


def test_noise_zero_and_determinism():
    y = np.arange(5.0)
    np.testing.assert_array_equal(add_noise(y, 0, 1), y)
    np.testing.assert_array_equal(add_noise(y, 0.1, 7), add_noise(y, 0.1, 7))
    with pytest.raises(ValueError):
        add_noise(y, -1, 0)


def test_noise_variance():
    n = add_noise(np.zeros(1_000_000), 0.01, 123)
    assert abs(n.var() / 0.01**2 - 1) <= 0.01
    assert abs(n.mean()) <= 5 * 0.01 / 1000


# -- operators ----------------------------------------------------------------


@pytest.mark.parametrize("scheme", ["mw", "dh"])
def test_problem_operators_pass_adjoint_checks(scheme):
    g = build_grid(scheme, 6)
    assert pole_tying_op(g).adjoint_error(20) <= 1e-12
    assert harmonic_synthesis_op(g).adjoint_error(20) <= 1e-12


def test_pole_tying_copies_pole_value():
    g = build_grid("mw", 5)
    img = pole_tying_op(g).apply(np.arange(g.n_distinct, dtype=float))
    assert np.all(img[-1] == img[-1, 0])
    assert np.unique(img).size == g.n_distinct


@settings(max_examples=30, deadline=None)
@given(L=st.integers(1, 12), seed=st.integers(0, 2**31))
def test_half_real_view_isometry(L, seed):
    to_vec, from_vec = half_real_view(L)
    h = harmonic_synthesis_op(build_grid("mw", L)).random_in(np.random.default_rng(seed))
    v = to_vec(h)
    assert v.size == L * L
    np.testing.assert_allclose(from_vec(v), h)
    assert np.linalg.norm(v) == pytest.approx(np.linalg.norm(h), rel=1e-12)
    w = harmonic_synthesis_op(build_grid("mw", L)).random_in(np.random.default_rng(seed + 1))
    assert np.dot(v, to_vec(w)) == pytest.approx(np.vdot(w, h).real, rel=1e-9, abs=1e-9)


# -- solvers ------------------------------------------------------------------


def _noiseless_full(scheme, domain, L=8):
    g = build_grid(scheme, L)
    w = quadrature_weights(g)
    images, flm = make_test_image(L, random_caps_map(seed=1), sigma_s=0.002)
    x = images[SamplingScheme.parse(scheme)]
    op = random_mask(g, g.n_distinct, 0)
    y = apply_mask(op, x)
    cfg = solver_config_for(L, domain, {"max_iters": 200})
    solve = solve_spatial if domain == "spatial" else solve_harmonic
    return solve(y, op, g, w, cfg), flm, x, y, op, g


@pytest.mark.parametrize("domain", ["spatial", "harmonic"])
def test_noiseless_full_sampling_recovers_truth(domain):
    res, flm, *_ = _noiseless_full("mw", domain)
    assert snr_harmonic(flm, conj_sym_extend(res.half_coeffs, 8)) >= 80


def test_spatial_solution_band_limited_and_feasible():
    g = build_grid("mw", 8)
    w = quadrature_weights(g)
    images, flm = make_test_image(8, random_caps_map(seed=2))
    op = random_mask(g, 40, 1)
    y = add_noise(apply_mask(op, images[SamplingScheme.MW]), 0.01, 2)
    cfg = solver_config_for(8, "spatial")
    cfg.epsilon = chi2_epsilon(0.01, 40, 0.99)
    res = solve_spatial(y, op, g, w, cfg)
    assert np.max(np.abs(band_limit(res.image, g) - res.image)) <= 1e-9
    assert np.linalg.norm(y - apply_mask(op, res.raw_image)) <= cfg.epsilon * (1 + 1e-6)


def test_harmonic_solution_shape_and_reality():
    g = build_grid("dh", 8)
    w = quadrature_weights(g)
    images, flm = make_test_image(8, random_caps_map(seed=3))
    op = random_mask(g, 32, 4)
    y = add_noise(apply_mask(op, images[SamplingScheme.DH]), 0.01, 5)
    cfg = solver_config_for(8, "harmonic")
    cfg.epsilon = chi2_epsilon(0.01, 32, 0.99)
    res = solve_harmonic(y, op, g, w, cfg)
    assert res.half_coeffs.shape == (8 * 9 // 2,)
    synth = get_transform("dh", 8).inverse(conj_sym_extend(res.half_coeffs, 8))
    assert np.max(np.abs(synth.imag)) <= 1e-10
    np.testing.assert_allclose(res.image, synth.real, atol=1e-12)
    assert res.report.residual <= cfg.epsilon * (1 + 1e-6)


def test_solver_config_overrides():
    cfg = solver_config_for(32, "spatial", {"max_iters": 7, "harmonic": {"gamma": 3.0}})
    assert cfg.max_iters == 7 and cfg.gamma == 10.0
    assert solver_config_for(32, "harmonic", {"harmonic": {"gamma": 3.0}}).gamma == 3.0
    with pytest.raises(ValueError):
        solver_config_for(32, "spatial", {"nonsense": 1})
    assert isinstance(cfg, SolverConfig)


def test_default_step_follows_band_limit():
    assert solver_config_for(8, "harmonic").gamma == 1.0
    assert solver_config_for(32, "harmonic").gamma == 1.0
    assert solver_config_for(128, "harmonic").gamma == 0.25
    assert solver_config_for(64, "spatial").gamma == 5.0
    assert solver_config_for(128, "harmonic").inner_prox_iters == 20


# -- metrics ------------------------------------------------------------------


def test_snr_harmonic_formula():
    x = np.array([3.0, 4.0j])
    assert snr_harmonic(x, x) == float("inf")
    e = np.array([0.5, 0.0])  # ||e|| = 0.1 ||x||
    assert snr_harmonic(x, x + e) == pytest.approx(20.0)
    assert snr_harmonic(x, np.zeros(2)) == pytest.approx(0.0)


def test_snr_image_formula():
    g = build_grid("mw", 4)
    w = quadrature_weights(g)
    x = np.random.default_rng(0).standard_normal(g.shape)
    assert snr_image(x, x, w) == float("inf")
    assert snr_image(x, 1.1 * x, w) == pytest.approx(20.0)


# -- test images --------------------------------------------------------------


def test_make_test_image_bandlimited_and_smoother():
    L = 32
    base = random_caps_map(seed=0)
    images, flm = make_test_image(L, base, sigma_s=0.002)
    for s in (SamplingScheme.MW, SamplingScheme.DH):
        g = build_grid(s, L)
        x = images[s]
        np.testing.assert_allclose(get_transform(s, L).forward(x), flm, atol=1e-10)
        w = quadrature_weights(g)
        assert tv_norm(x, w) < tv_norm(sample_raster(binarize(base), g), w)


def test_make_test_image_large_sigma_is_constant():
    images, flm = make_test_image(8, random_caps_map(seed=0), sigma_s=1e6)
    assert np.max(np.abs(flm[1:])) == 0
    x = images[SamplingScheme.MW]
    assert np.ptp(x) <= 1e-12


def test_constant_base_rejected():
    with pytest.raises(ValueError):
        make_test_image(4, np.ones((10, 20)))


def test_caps_map_coverage():
    cov = [binarize(random_caps_map(seed=s)).mean() for s in range(5)]
    assert all(0.05 < c < 0.95 for c in cov)


def test_sea_level_image():
    g = build_grid("mw", 16)
    h = topography_map(g, seed=3)
    x = sea_level_image(h)
    assert x.min() == 0 and x.max() == 1
    mid = 0.5 * (h.min() + h.max())
    above = h > mid
    np.testing.assert_allclose(x[above], (h[above] - mid) / (h.max() - mid))


# -- experiments --------------------------------------------------------------


def test_config_validation():
    with pytest.raises(ValueError):
        ExperimentConfig(L=4, ratios=(0,))
    with pytest.raises(ValueError):
        ExperimentConfig(L=4, ratios=(3.0,), schemes=("mw",))  # 48 > 22 samples
    with pytest.raises(ValueError):
        ExperimentConfig(L=4, domains=("fourier",))
    cfg = ExperimentConfig(L=4, ratios=(0.5,), trials=2)
    assert ExperimentConfig.from_json(cfg.to_json()) == cfg


def test_full_protocol_row_count(monkeypatch):
    import sphtv.inpaint as mod

    n_mw = build_grid("mw", 32).n_distinct
    cfg = ExperimentConfig(L=32, ratios=(0.25, 0.5, 1.0, 1.5, n_mw / 32**2), trials=10)

    def fake_trial(config, flm, images, scheme, domain, ri, trial):
        return mod.TrialRecord(scheme, domain, config.ratios[ri], trial, config.measurements(config.ratios[ri]), 0.0, None)

    monkeypatch.setattr(mod, "run_trial", fake_trial)
    res = run_experiment(cfg)
    rows = res.to_csv().strip().split("\n")
    assert rows[0].split(",") == CSV_COLUMNS
    assert len(rows) - 1 == 200


def test_noiseless_single_cell():
    cfg = ExperimentConfig(L=8, schemes=("mw",), domains=("harmonic",), trials=1, sigma_n=0.0,
                           ratios=(build_grid("mw", 8).n_distinct / 64,))
    res = run_experiment(cfg)
    assert len(res.records) == 1
    assert res.records[0].snr_db >= 80


def test_experiment_deterministic_csv():
    cfg = ExperimentConfig(L=6, ratios=(0.5, 1.0), trials=2, solver={"max_iters": 40})
    a = run_experiment(cfg).to_csv()
    b = run_experiment(ExperimentConfig.from_json(cfg.to_json())).to_csv()
    assert a == b
    assert len(a.strip().split("\n")) == 1 + 2 * 2 * 2 * 2
    summary = run_experiment(cfg).summary()
    assert json.loads(json.dumps(summary))["cells"][0]["completed"] == 2


def test_trial_seeds_independent():
    seeds = {tuple(trial_seed(0, s, d, r, t).generate_state(2))
             for s in ("mw", "dh") for d in ("spatial", "harmonic") for r in range(3) for t in range(3)}
    assert len(seeds) == 36
