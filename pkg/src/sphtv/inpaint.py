"""Random-mask inpainting on the sphere: measurement model, solvers, experiments.

Two formulations share the Douglas-Rachford machinery:

* spatial: unknowns are the distinct samples of the image (the MW South-pole
  ring is one unknown copied across the ring); the recovered image is
  band-limited afterwards;
* harmonic: unknowns are the ``m >= 0`` harmonic coefficients, synthesised as
  a real image through conjugate-symmetric extension and the inverse transform.
"""

from __future__ import annotations

import csv
import io
import json
import logging
import time
from dataclasses import asdict, dataclass, field
from functools import lru_cache
from typing import Sequence

import numpy as np

from sphtv.gradient import tv_norm
from sphtv.grid import (
    SamplingScheme,
    SphereGrid,
    QuadratureWeights,
    build_grid,
    quadrature_weights,
)
from sphtv.harmonic import (
    band_limit,
    conj_sym_extend,
    conj_sym_restrict,
    get_transform,
    _half_layout,
)
from sphtv.prox import (
    DataBallProjection,
    LinearOpPair,
    SolverConfig,
    SolverDivergence,
    SolverReport,
    SVDBallProjection,
    TVProx,
    chi2_epsilon,
    douglas_rachford,
    power_iteration_norm,
)

log = logging.getLogger(__name__)

DOMAINS = ("spatial", "harmonic")
# harmonic problems with at most this many real unknowns get an exact SVD projection
DENSE_PROJECTION_MAX_DOFS = 1600
CSV_COLUMNS = ["scheme", "domain", "ratio", "trial", "M", "snr_db", "iterations", "residual", "wall_ms"]


# -- measurement model ----------------------------------------------------------


@dataclass(frozen=True)
class MeasurementOp:
    indices: np.ndarray
    N: int

    def __post_init__(self):
        idx = np.asarray(self.indices)
        if idx.size and (idx.min() < 0 or idx.max() >= self.N):
            raise ValueError("mask index out of range")
        if np.unique(idx).size != idx.size:
            raise ValueError("mask indices must be distinct")

    @property
    def M(self) -> int:
        return int(np.asarray(self.indices).size)

    def dense(self) -> np.ndarray:
        Phi = np.zeros((self.M, self.N))
        Phi[np.arange(self.M), self.indices] = 1.0
        return Phi


def random_mask(grid: SphereGrid, M: int, seed) -> MeasurementOp:
    """``M`` distinct sample positions drawn uniformly without replacement.

    Candidates are the grid's distinct points (one representative of the MW
    South pole); indices are flat positions in the stored lattice.
    """
    candidates = grid.distinct_indices()
    n = candidates.size
    if M > n:
        raise ValueError(f"cannot draw {M} distinct samples from {n} points")
    if M < 0:
        raise ValueError("M must be non-negative")
    rng = np.random.default_rng(seed)
    pool = candidates.copy()
    # partial Fisher-Yates: the first M slots end up a uniform random M-subset
    for i in range(M):
        j = i + int(rng.integers(n - i))
        pool[i], pool[j] = pool[j], pool[i]
    return MeasurementOp(pool[:M].copy(), grid.n_samples)


def apply_mask(op: MeasurementOp, x: np.ndarray) -> np.ndarray:
    x = np.asarray(x)
    if x.size != op.N:
        raise ValueError(f"image has {x.size} samples, mask expects {op.N}")
    return x.reshape(-1)[op.indices]


def mask_adjoint(op: MeasurementOp, y: np.ndarray, shape: tuple | None = None) -> np.ndarray:
    y = np.asarray(y)
    if y.shape != (op.M,):
        raise ValueError(f"expected {op.M} measurements, got shape {y.shape}")
    out = np.zeros(op.N, dtype=y.dtype)
    out[op.indices] = y
    return out.reshape(shape) if shape is not None else out


def add_noise(y: np.ndarray, sigma_n: float, seed) -> np.ndarray:
    """Add i.i.d. Gaussian noise generated by Box-Muller from a seeded uniform stream."""
    if sigma_n < 0:
        raise ValueError("sigma_n must be non-negative")
    y = np.asarray(y, dtype=float)
    if sigma_n == 0 or y.size == 0:
        return y.copy()
    rng = np.random.default_rng(seed)
    k = (y.size + 1) // 2
    u1 = 1.0 - rng.random(k)  # (0, 1]
    u2 = rng.random(k)
    r = np.sqrt(-2.0 * np.log(u1))
    z = np.concatenate([r * np.cos(2 * np.pi * u2), r * np.sin(2 * np.pi * u2)])[: y.size]
    return y + sigma_n * z


# -- problem assembly -----------------------------------------------------------


def pole_tying_op(grid: SphereGrid) -> LinearOpPair:
    """Distinct-sample vector -> stored lattice (copies the MW pole value across its ring)."""
    idx = grid.distinct_indices()
    n_d = idx.size
    pole = np.flatnonzero(grid.pole_rings)
    # lattice position -> position in the distinct vector
    src = np.full(grid.n_samples, -1)
    src[idx] = np.arange(n_d)
    lattice = src.reshape(grid.shape)
    for t in pole:
        lattice[t, :] = lattice[t, 0]
    src = lattice.ravel()

    def apply(x):
        return np.asarray(x)[src].reshape(grid.shape)

    def adjoint(img):
        return np.bincount(src, weights=np.asarray(img, dtype=float).ravel(), minlength=n_d)

    return LinearOpPair(apply, adjoint, (n_d,), grid.shape)


def _random_half(L: int):
    el, m = _half_layout(L)

    def draw(rng):
        z = rng.standard_normal(el.size) + 1j * rng.standard_normal(el.size)
        z[m == 0] = z[m == 0].real
        return z

    return draw


def harmonic_synthesis_op(grid: SphereGrid) -> LinearOpPair:
    """Half coefficients -> real image, ``Lambda Pi`` and ``Pi^T Lambda^T``."""
    tr = get_transform(grid.scheme, grid.L)
    L = grid.L

    def apply(h):
        return tr.inverse(conj_sym_extend(h, L)).real

    def adjoint(img):
        return conj_sym_restrict(tr.inverse_adjoint(np.asarray(img, dtype=complex)))

    return LinearOpPair(apply, adjoint, (L * (L + 1) // 2,), grid.shape, random_in=_random_half(L))


def measurement_pair(op: MeasurementOp, grid: SphereGrid) -> LinearOpPair:
    return LinearOpPair(
        apply=lambda img: apply_mask(op, img),
        adjoint=lambda y: mask_adjoint(op, np.asarray(y, dtype=float), grid.shape),
        in_shape=grid.shape,
        out_shape=(op.M,),
    )


@lru_cache(maxsize=32)
def _grad_opnorm(scheme: SamplingScheme, L: int, domain: str) -> float:
    grid = build_grid(scheme, L)
    synth = pole_tying_op(grid) if domain == "spatial" else harmonic_synthesis_op(grid)
    prox = TVProx(synth, quadrature_weights(grid), iters=1, op_norm=1.0)
    return power_iteration_norm(prox.grad_op(), iters=200, seed=7)


def half_real_view(L: int):
    """Isometric maps between half coefficients and a real vector of length ``L**2``."""
    _, m = _half_layout(L)
    zero = m == 0
    n0 = int(zero.sum())

    def to_vec(h):
        h = np.asarray(h)
        return np.concatenate([h[zero].real, h[~zero].real, h[~zero].imag])

    def from_vec(v):
        h = np.zeros(m.size, dtype=complex)
        h[zero] = v[:n0]
        h[~zero] = v[n0 : n0 + (m.size - n0)] + 1j * v[n0 + (m.size - n0) :]
        return h

    return to_vec, from_vec


@lru_cache(maxsize=4)
def dense_harmonic_synthesis(scheme: SamplingScheme, L: int) -> np.ndarray:
    """Matrix of the real-image synthesis acting on the real view of half coefficients."""
    grid = build_grid(scheme, L)
    synth = harmonic_synthesis_op(grid)
    _, from_vec = half_real_view(L)
    cols = np.empty((grid.n_samples, L * L))
    e = np.zeros(L * L)
    for j in range(L * L):
        e[j] = 1.0
        cols[:, j] = synth.apply(from_vec(e)).ravel()
        e[j] = 0.0
    cols.flags.writeable = False
    return cols


@dataclass
class InpaintResult:
    image: np.ndarray
    report: SolverReport
    unknowns: np.ndarray
    half_coeffs: np.ndarray | None = None
    raw_image: np.ndarray | None = None


def _solve(domain: str, y, op: MeasurementOp, grid: SphereGrid, weights: QuadratureWeights,
           config: SolverConfig) -> InpaintResult:
    synth = pole_tying_op(grid) if domain == "spatial" else harmonic_synthesis_op(grid)
    Phi = measurement_pair(op, grid)
    A = Phi.compose(synth)
    tv = TVProx(synth, weights, iters=config.inner_prox_iters,
                op_norm=_grad_opnorm(grid.scheme, grid.L, domain), seed=config.seed)
    if domain == "harmonic" and y.size and grid.L**2 <= DENSE_PROJECTION_MAX_DOFS:
        to_vec, from_vec = half_real_view(grid.L)
        rows = dense_harmonic_synthesis(grid.scheme, grid.L)[np.asarray(op.indices)]
        ball = SVDBallProjection(y, rows, config.epsilon, to_vec=to_vec, from_vec=from_vec)
    else:
        ball = DataBallProjection(
            y, A, config.epsilon,
            tight=(domain == "spatial"),
            max_iters=config.ball_max_iters, tol=config.ball_tol, seed=config.seed,
        )
    if y.size == 0:
        x0 = synth.adjoint(np.zeros(grid.shape))
        prox_g = lambda v: v
    else:
        x0 = A.adjoint(np.asarray(y, dtype=float))
        if domain == "harmonic":
            x0 = x0 / ball.op_norm**2
        prox_g = ball
    sol, report = douglas_rachford(
        prox_f=lambda z, g: tv(z, g),
        prox_g=prox_g,
        x0=x0,
        config=config,
        objective=tv.tv,
        residual=ball.residual if y.size else None,
    )
    return InpaintResult(image=synth.apply(sol), report=report, unknowns=sol)


def solve_spatial(y, op: MeasurementOp, grid: SphereGrid, weights: QuadratureWeights,
                  config: SolverConfig) -> InpaintResult:
    """TV-minimal image within the data ball, band-limited afterwards."""
    res = _solve("spatial", np.asarray(y, dtype=float), op, grid, weights, config)
    res.raw_image = res.image
    res.image = band_limit(res.image, grid)
    tr = get_transform(grid.scheme, grid.L)
    res.half_coeffs = conj_sym_restrict_half(tr.forward(res.image), grid.L)
    return res


def solve_harmonic(y, op: MeasurementOp, grid: SphereGrid, weights: QuadratureWeights,
                   config: SolverConfig) -> InpaintResult:
    """TV-minimal image over half coefficients within the data ball."""
    res = _solve("harmonic", np.asarray(y, dtype=float), op, grid, weights, config)
    res.half_coeffs = res.unknowns
    res.raw_image = res.image
    return res


def conj_sym_restrict_half(full: np.ndarray, L: int) -> np.ndarray:
    """The ``m >= 0`` entries of a full coefficient vector (selection, not the adjoint)."""
    el, m = _half_layout(L)
    out = np.asarray(full)[el * el + el + m].astype(complex)
    out[m == 0] = out[m == 0].real
    return out


# -- fidelity -------------------------------------------------------------------


def snr_harmonic(xh_true: np.ndarray, xh_rec: np.ndarray) -> float:
    err = np.linalg.norm(np.asarray(xh_rec) - np.asarray(xh_true))
    if err == 0:
        return float("inf")
    return float(20 * np.log10(np.linalg.norm(xh_true) / err))


def snr_image(x_true: np.ndarray, x_rec: np.ndarray, weights: QuadratureWeights) -> float:
    q = weights.q[:, None]
    d = np.asarray(x_rec) - np.asarray(x_true)
    den = float(np.sum(q * np.abs(d) ** 2))
    if den == 0:
        return float("inf")
    return float(10 * np.log10(np.sum(q * np.abs(x_true) ** 2) / den))


# -- test images ----------------------------------------------------------------


def colatitude_longitude(n_lat: int, n_lon: int) -> tuple[np.ndarray, np.ndarray]:
    """Cell-centre colatitudes (North to South) and longitudes of a plain raster."""
    return np.pi * (np.arange(n_lat) + 0.5) / n_lat, 2 * np.pi * np.arange(n_lon) / n_lon


def sample_raster(raster: np.ndarray, grid: SphereGrid) -> np.ndarray:
    """Nearest-neighbour lookup of a lat/lon raster at the grid's sample positions."""
    raster = np.asarray(raster, dtype=float)
    n_lat, n_lon = raster.shape
    i = np.clip(np.floor(grid.thetas / np.pi * n_lat).astype(int), 0, n_lat - 1)
    j = np.mod(np.rint(grid.phis / (2 * np.pi) * n_lon).astype(int), n_lon)
    return raster[np.ix_(i, j)]


def _random_directions(n: int, rng: np.random.Generator) -> np.ndarray:
    v = rng.standard_normal((n, 3))
    return v / np.linalg.norm(v, axis=1, keepdims=True)


def _unit_vectors(thetas: np.ndarray, phis: np.ndarray) -> np.ndarray:
    th, ph = np.meshgrid(thetas, phis, indexing="ij")
    return np.stack([np.sin(th) * np.cos(ph), np.sin(th) * np.sin(ph), np.cos(th)], axis=-1)


def random_caps_map(n_lat: int = 180, n_lon: int = 360, n_caps: int = 5, seed: int = 0,
                    min_radius: float = 0.3, max_radius: float = 0.9) -> np.ndarray:
    """Synthetic base map: union (indicator of at least one) of random spherical caps."""
    rng = np.random.default_rng(seed)
    centres = _random_directions(n_caps, rng)
    radii = rng.uniform(min_radius, max_radius, n_caps)
    xyz = _unit_vectors(*colatitude_longitude(n_lat, n_lon))
    out = np.zeros((n_lat, n_lon))
    for c, r in zip(centres, radii):
        out = np.maximum(out, (xyz @ c) >= np.cos(r))
    return out


def topography_map(grid: SphereGrid, n_bumps: int = 40, seed: int = 0) -> np.ndarray:
    """Continuous terrain-like height field sampled directly on ``grid``."""
    rng = np.random.default_rng(seed)
    centres = _random_directions(n_bumps, rng)
    widths = rng.uniform(0.15, 0.6, n_bumps)
    amps = rng.normal(0.0, 1.0, n_bumps)
    xyz = _unit_vectors(grid.thetas, grid.phis)
    h = np.zeros(grid.shape)
    for c, w, a in zip(centres, widths, amps):
        ang = np.arccos(np.clip(xyz @ c, -1.0, 1.0))
        h += a * np.exp(-0.5 * (ang / w) ** 2)
    return h


def sea_level_image(height: np.ndarray) -> np.ndarray:
    """Clamp everything below the midpoint to the midpoint, keep the rest, rescale to [0, 1]."""
    mid = 0.5 * (height.min() + height.max())
    out = np.maximum(height, mid) - mid
    return out / out.max()


def binarize(base: np.ndarray) -> np.ndarray:
    base = np.asarray(base, dtype=float)
    lo, hi = base.min(), base.max()
    if hi <= lo:
        raise ValueError("base map is constant; midpoint threshold is degenerate")
    return (base > 0.5 * (lo + hi)).astype(float)


def make_test_image(L: int, base_map: np.ndarray, sigma_s: float = 0.002, oversample: int = 4):
    """Binary-thresholded, Gaussian-smoothed test signal band-limited at ``L``.

    ``base_map`` is a plain lat/lon raster (rows North to South). Returns
    ``(images, coeffs)`` with ``images`` a dict keyed by scheme holding the
    synthesis of the shared coefficient vector on each grid.
    """
    binary = binarize(base_map)
    fine = build_grid(SamplingScheme.MW, max(oversample * L, L))
    flm_fine = get_transform(SamplingScheme.MW, fine.L).forward(sample_raster(binary, fine))
    el = np.repeat(np.arange(L), 2 * np.arange(L) + 1)
    flm = flm_fine[: L * L] * np.exp(-(el.astype(float) ** 2) * sigma_s)
    # exact conjugate symmetry (the fine-grid analysis is symmetric up to rounding)
    h = conj_sym_restrict_half(flm, L)
    flm = conj_sym_extend(h, L)
    images = {
        s: get_transform(s, L).inverse(flm).real for s in (SamplingScheme.MW, SamplingScheme.DH)
    }
    return images, flm


# -- experiments ----------------------------------------------------------------


@dataclass
class ExperimentConfig:
    L: int = 32
    schemes: Sequence[str] = ("mw", "dh")
    domains: Sequence[str] = DOMAINS
    ratios: Sequence[float] = (0.25, 0.5, 1.0, 1.5)
    trials: int = 10
    sigma_n: float = 0.01
    alpha: float = 0.99
    master_seed: int = 0
    sigma_s: float = 0.002
    base_map: str | None = None
    base_seed: int = 0
    record_timing: bool = False
    solver: dict = field(default_factory=dict)

    def __post_init__(self):
        self.schemes = tuple(SamplingScheme.parse(s).value for s in self.schemes)
        self.domains = tuple(self.domains)
        for d in self.domains:
            if d not in DOMAINS:
                raise ValueError(f"unknown domain {d!r}")
        self.ratios = tuple(float(r) for r in self.ratios)
        if any(r <= 0 for r in self.ratios):
            raise ValueError("measurement ratios must be positive")
        for s in self.schemes:
            n = build_grid(s, self.L).n_distinct
            for r in self.ratios:
                if self.measurements(r) > n:
                    raise ValueError(f"ratio {r} needs more than the {n} samples of {s} L={self.L}")
        if self.trials < 1:
            raise ValueError("trials must be >= 1")

    def measurements(self, ratio: float) -> int:
        return int(round(ratio * self.L * self.L))

    @classmethod
    def from_json(cls, text: str) -> "ExperimentConfig":
        return cls(**json.loads(text))

    def to_json(self) -> str:
        d = asdict(self)
        d["schemes"] = list(d["schemes"])
        d["domains"] = list(d["domains"])
        d["ratios"] = list(d["ratios"])
        return json.dumps(d, indent=2, sort_keys=True)


@dataclass
class TrialRecord:
    scheme: str
    domain: str
    ratio: float
    trial: int
    M: int
    snr_db: float
    report: SolverReport | None
    truth_feasible: bool = False
    tv_solution: float = float("nan")
    tv_truth: float = float("nan")
    error: str | None = None


@dataclass
class ExperimentResults:
    config: ExperimentConfig
    records: list[TrialRecord]

    def cell_means(self) -> dict[tuple[str, str, float], tuple[float, int]]:
        cells: dict[tuple[str, str, float], list[float]] = {}
        for r in self.records:
            cells.setdefault((r.scheme, r.domain, r.ratio), [])
            if r.error is None:
                cells[(r.scheme, r.domain, r.ratio)].append(r.snr_db)
        return {k: (float(np.mean(v)) if v else float("nan"), len(v)) for k, v in cells.items()}

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(CSV_COLUMNS)
        for r in self.records:
            rep = r.report
            wall = f"{rep.wall_time * 1e3:.1f}" if (rep and self.config.record_timing) else ""
            w.writerow([
                r.scheme, r.domain, repr(r.ratio), r.trial, r.M,
                f"{r.snr_db:.6f}" if r.error is None else "",
                rep.iterations if rep else "",
                f"{rep.residual:.9e}" if rep else "",
                wall,
            ])
        return buf.getvalue()

    def summary(self) -> dict:
        return {
            "config": json.loads(self.config.to_json()),
            "cells": [
                {"scheme": s, "domain": d, "ratio": r, "mean_snr_db": m, "completed": n}
                for (s, d, r), (m, n) in sorted(self.cell_means().items())
            ],
            "failures": [
                {"scheme": r.scheme, "domain": r.domain, "ratio": r.ratio, "trial": r.trial, "error": r.error}
                for r in self.records if r.error is not None
            ],
        }


def trial_seed(master_seed: int, scheme: str, domain: str, ratio_index: int, trial: int) -> np.random.SeedSequence:
    s = [SamplingScheme.MW.value, SamplingScheme.DH.value].index(scheme)
    d = DOMAINS.index(domain)
    return np.random.SeedSequence(entropy=master_seed, spawn_key=(s, d, ratio_index, trial))


def load_base_map(path: str) -> np.ndarray:
    if path.endswith(".npy"):
        return np.load(path)
    return np.loadtxt(path)


# Douglas-Rachford step per domain: spatial unknowns are samples, harmonic
# unknowns are orthonormal coefficients, so their norms differ by about N / 4pi
DEFAULT_GAMMA = {"spatial": 10.0, "harmonic": 1.0}


def solver_config_for(L: int, domain: str = "harmonic", overrides: dict | None = None) -> SolverConfig:
    """Default solver settings; ``overrides`` may hold flat keys or per-domain sub-dicts."""
    if domain not in DOMAINS:
        raise ValueError(f"unknown domain {domain!r}")
    # the lattice TV shrinks like 1/L against the unknowns, so the step follows it above L = 32
    gamma = DEFAULT_GAMMA[domain] * min(1.0, 32.0 / L)
    cfg = SolverConfig(gamma=gamma, inner_prox_iters=10 if L <= 64 else 20)
    overrides = dict(overrides or {})
    per_domain = {d: overrides.pop(d, None) or {} for d in DOMAINS}
    for k, v in {**overrides, **per_domain[domain]}.items():
        if not hasattr(cfg, k):
            raise ValueError(f"unknown solver option {k!r}")
        setattr(cfg, k, v)
    cfg.__post_init__()
    return cfg


def run_trial(config: ExperimentConfig, flm_true: np.ndarray, images: dict, scheme: str,
              domain: str, ratio_index: int, trial: int) -> TrialRecord:
    ratio = config.ratios[ratio_index]
    M = config.measurements(ratio)
    grid = build_grid(scheme, config.L)
    weights = quadrature_weights(grid)
    ss = trial_seed(config.master_seed, scheme, domain, ratio_index, trial)
    mask_seed, noise_seed = ss.spawn(2)
    op = random_mask(grid, M, mask_seed)
    x_true = images[SamplingScheme.parse(scheme)]
    y = add_noise(apply_mask(op, x_true), config.sigma_n, noise_seed)
    cfg = solver_config_for(config.L, domain, config.solver)
    cfg.epsilon = chi2_epsilon(config.sigma_n, max(M, 1), config.alpha)
    cfg.seed = int(ss.generate_state(1)[0])
    solve = solve_spatial if domain == "spatial" else solve_harmonic
    rec = TrialRecord(scheme, domain, ratio, trial, M, float("nan"), None)
    try:
        res = solve(y, op, grid, weights, cfg)
    except SolverDivergence as exc:
        rec.error = str(exc)
        return rec
    tr = get_transform(scheme, config.L)
    flm_rec = tr.forward(res.image) if domain == "spatial" else conj_sym_extend(res.half_coeffs, config.L)
    rec.snr_db = snr_harmonic(flm_true, flm_rec)
    rec.report = res.report
    rec.truth_feasible = bool(np.linalg.norm(y - apply_mask(op, x_true)) <= cfg.epsilon)
    # objective of the optimisation problem itself (pre band-limiting for spatial)
    rec.tv_solution = tv_norm(res.raw_image, weights)
    rec.tv_truth = tv_norm(x_true, weights)
    return rec


def run_experiment(config: ExperimentConfig, progress=None) -> ExperimentResults:
    if config.base_map:
        base = load_base_map(config.base_map)
    else:
        base = random_caps_map(seed=config.base_seed)
    images, flm_true = make_test_image(config.L, base, config.sigma_s)
    records = []
    for scheme in config.schemes:
        for domain in config.domains:
            for ri, _ in enumerate(config.ratios):
                for trial in range(config.trials):
                    rec = run_trial(config, flm_true, images, scheme, domain, ri, trial)
                    records.append(rec)
                    if progress is not None:
                        progress(rec)
    return ExperimentResults(config, records)


@dataclass
class SingleRun:
    result: InpaintResult
    op: MeasurementOp
    y: np.ndarray
    config: SolverConfig
    wall_time: float


def inpaint_once(x_true: np.ndarray, grid: SphereGrid, domain: str, M: int, seed: int = 0,
                 sigma_n: float = 0.01, alpha: float = 0.99, solver: dict | None = None) -> SingleRun:
    """Mask, add noise and solve once; the same seed gives the same run."""
    ss = trial_seed(seed, grid.scheme.value, domain, 0, 0)
    mask_seed, noise_seed = ss.spawn(2)
    op = random_mask(grid, M, mask_seed)
    y = add_noise(apply_mask(op, x_true), sigma_n, noise_seed)
    cfg = solver_config_for(grid.L, domain, solver)
    cfg.epsilon = chi2_epsilon(sigma_n, max(M, 1), alpha)
    cfg.seed = int(ss.generate_state(1)[0])
    solve = solve_spatial if domain == "spatial" else solve_harmonic
    t0 = time.perf_counter()
    res = solve(y, op, grid, quadrature_weights(grid), cfg)
    return SingleRun(res, op, y, cfg, time.perf_counter() - t0)
