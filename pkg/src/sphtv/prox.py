"""Proximity operators, Douglas-Rachford splitting and operator-norm tools.

All vector spaces here are real inner-product spaces: complex arrays are
treated as pairs of reals, with ``<a, b> = Re sum(a * conj(b))``.
"""

from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field
from typing import Any, Callable

import numpy as np
from scipy.special import gammainc

from sphtv.gradient import GradientField, weighted_gradient, weighted_gradient_adjoint
from sphtv.grid import QuadratureWeights
from sphtv.harmonic import get_transform

log = logging.getLogger(__name__)

OPNORM_SAFETY = 1.01


class SolverDivergence(RuntimeError):
    pass


def inner(a: Any, b: Any) -> float:
    if isinstance(a, GradientField):
        return a.vdot(b)
    return float(np.vdot(b, a).real)


def norm(a: Any) -> float:
    return float(np.sqrt(max(inner(a, a), 0.0)))


def _randn_like(shape, complex_, rng):
    x = rng.standard_normal(shape)
    if complex_:
        x = x + 1j * rng.standard_normal(shape)
    return x


@dataclass
class LinearOpPair:
    """A linear map and its adjoint, spot-checked on construction.

    ``random_in`` / ``random_out`` draw test vectors from the domain and
    codomain; the defaults draw real Gaussian arrays of ``in_shape`` /
    ``out_shape``.
    """

    apply: Callable[[Any], Any]
    adjoint: Callable[[Any], Any]
    in_shape: tuple
    out_shape: tuple
    random_in: Callable[[np.random.Generator], Any] | None = None
    random_out: Callable[[np.random.Generator], Any] | None = None
    check: bool = True
    tol: float = 1e-10

    def __post_init__(self):
        if self.random_in is None:
            self.random_in = lambda rng: _randn_like(self.in_shape, False, rng)
        if self.random_out is None:
            self.random_out = lambda rng: _randn_like(self.out_shape, False, rng)
        if self.check:
            err = self.adjoint_error(5, seed=1234)
            if err > self.tol:
                raise ValueError(f"adjoint check failed: relative error {err:.3e}")

    def adjoint_error(self, n_pairs: int = 5, seed: int = 0) -> float:
        rng = np.random.default_rng(seed)
        worst = 0.0
        for _ in range(n_pairs):
            a = self.random_in(rng)
            b = self.random_out(rng)
            lhs = inner(self.apply(a), b)
            rhs = inner(a, self.adjoint(b))
            scale = norm(a) * norm(b)
            worst = max(worst, abs(lhs - rhs) / scale if scale > 0 else abs(lhs - rhs))
        return worst

    def compose(self, inner_op: "LinearOpPair", check: bool = False) -> "LinearOpPair":
        """``self o inner_op``."""
        return LinearOpPair(
            apply=lambda x: self.apply(inner_op.apply(x)),
            adjoint=lambda y: inner_op.adjoint(self.adjoint(y)),
            in_shape=inner_op.in_shape,
            out_shape=self.out_shape,
            random_in=inner_op.random_in,
            random_out=self.random_out,
            check=check,
        )


def identity_op(shape: tuple) -> LinearOpPair:
    return LinearOpPair(lambda x: x, lambda y: y, shape, shape, check=False)


@dataclass
class SolverConfig:
    gamma: float = 1.0
    relaxation: float = 1.0
    max_iters: int = 500
    rel_obj_tol: float = 1e-5
    # consecutive iterations the objective test must hold; guards against turning points
    stop_window: int = 3
    inner_prox_iters: int = 50
    ball_max_iters: int = 200
    ball_tol: float = 1e-8
    epsilon: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if self.gamma <= 0:
            raise ValueError("gamma must be positive")
        if self.rel_obj_tol <= 0 or self.ball_tol <= 0:
            raise ValueError("tolerances must be positive")
        if self.max_iters < 1:
            raise ValueError("max_iters must be >= 1")
        if self.stop_window < 1:
            raise ValueError("stop_window must be >= 1")
        if not 0 < self.relaxation < 2:
            raise ValueError("relaxation must lie in (0, 2)")


@dataclass
class SolverReport:
    iterations: int
    objective: float
    residual: float
    converged: bool
    wall_time: float
    epsilon: float = 0.0
    history: list = field(default_factory=list, repr=False)

    def to_dict(self) -> dict:
        return {
            "iterations": self.iterations,
            "objective": self.objective,
            "residual": self.residual,
            "epsilon": self.epsilon,
            "converged": self.converged,
            "wall_time": self.wall_time,
        }


# -- noise bound ---------------------------------------------------------------


def chi2_quantile(M: int, alpha: float, tol: float = 1e-13, max_iter: int = 200) -> float:
    """Inverse CDF of chi^2(M): Newton on the regularised lower gamma, bisection fallback."""
    k = M / 2.0
    cdf = lambda x: gammainc(k, x / 2.0)
    # chi^2 density, in log form to survive large M
    from scipy.special import gammaln

    def pdf(x):
        return np.exp((k - 1) * np.log(x / 2.0) - x / 2.0 - gammaln(k)) / 2.0

    lo, hi = 0.0, max(1.0, float(M))
    while cdf(hi) < alpha:
        lo, hi = hi, 2 * hi
    # Wilson-Hilferty start
    from scipy.special import ndtri

    z = ndtri(alpha)
    x = M * (1 - 2 / (9 * M) + z * np.sqrt(2 / (9 * M))) ** 3
    if not lo < x < hi:
        x = 0.5 * (lo + hi)
    for _ in range(max_iter):
        f = cdf(x) - alpha
        if f > 0:
            hi = x
        else:
            lo = x
        d = pdf(x)
        step = f / d if d > 0 else np.inf
        x_new = x - step
        if not lo < x_new < hi:
            x_new = 0.5 * (lo + hi)
        if abs(x_new - x) <= tol * max(1.0, x):
            return float(x_new)
        x = x_new
    return float(x)


def chi2_epsilon(sigma_n: float, M: int, alpha: float) -> float:
    """Radius ``sigma_n * sqrt(chi2_M^{-1}(alpha))`` of the data-fidelity ball."""
    if not 0.0 < alpha < 1.0:
        raise ValueError(f"alpha must lie in (0, 1), got {alpha}")
    if sigma_n < 0:
        raise ValueError("sigma_n must be non-negative")
    if M < 1:
        raise ValueError("M must be >= 1")
    if sigma_n == 0:
        return 0.0
    return float(sigma_n * np.sqrt(chi2_quantile(int(M), alpha)))


# -- operator norms -------------------------------------------------------------


def power_iteration_norm(op: LinearOpPair, iters: int = 100, seed: int = 0, tol: float = 0.0) -> float:
    """Spectral-norm estimate ``||A x_k|| / ||x_k||`` with ``x_k = (A^T A)^k x_0``."""
    rng = np.random.default_rng(seed)
    x = op.random_in(rng)
    x = x / norm(x)
    est = 0.0
    for _ in range(iters):
        y = op.apply(x)
        new = norm(y)
        z = op.adjoint(y)
        nz = norm(z)
        if nz == 0:
            return new
        x = z / nz
        if tol and abs(new - est) <= tol * new:
            est = new
            break
        est = new
    return est


def dirac_coefficients(L: int) -> np.ndarray:
    """Unit-norm band-limited Dirac delta on the South pole."""
    el = np.arange(L)
    flm = np.zeros(L * L, dtype=complex)
    flm[el * el + el] = (-1.0) ** el * np.sqrt((2 * el + 1) / (4 * np.pi))
    return flm / np.linalg.norm(flm)


def dirac_opnorm(L: int) -> float:
    """Estimate ``||Lambda||_2`` for the MW inverse transform from a single synthesis."""
    if L < 1:
        raise ValueError("L must be >= 1")
    return float(np.linalg.norm(get_transform("mw", L).inverse(dirac_coefficients(L))))


# -- proximity operators --------------------------------------------------------


def _project_unit_disc(g: GradientField) -> GradientField:
    scale = np.maximum(1.0, g.magnitude())
    return GradientField(g.u / scale, g.v / scale)


class TVProx:
    """Prox of ``lam * ||synth(x)||_TV`` by fast gradient projection on the dual.

    The dual variable is a weighted gradient field constrained to per-sample unit
    discs. It is kept between calls so repeated evaluations (inside a splitting
    loop) start warm.
    """

    def __init__(self, synth: LinearOpPair, weights: QuadratureWeights, iters: int = 50,
                 op_norm: float | None = None, warm_start: bool = True, seed: int = 0):
        self.synth = synth
        self.weights = weights
        self.iters = iters
        self.warm_start = warm_start
        self._dual: GradientField | None = None
        if op_norm is None:
            op_norm = power_iteration_norm(self.grad_op(), iters=100, seed=seed)
        self.op_norm = op_norm * OPNORM_SAFETY

    def grad_op(self) -> LinearOpPair:
        """``x -> -grad~(synth x)`` and its adjoint ``g -> -synth^T grad~^T g``."""
        w = self.weights
        shape = (w.q.size, 2 * w.L - 1)
        return LinearOpPair(
            apply=lambda x: -1.0 * weighted_gradient(self.synth.apply(x), w),
            adjoint=lambda g: -self.synth.adjoint(weighted_gradient_adjoint(g, w)),
            in_shape=self.synth.in_shape,
            out_shape=shape,
            random_in=self.synth.random_in,
            random_out=lambda rng: GradientField(rng.standard_normal(shape), rng.standard_normal(shape)),
            check=False,
        )

    def tv(self, x) -> float:
        return float(weighted_gradient(self.synth.apply(x), self.weights).magnitude().sum())

    def objective(self, x, z, lam: float) -> float:
        return 0.5 * norm(x - z) ** 2 + lam * self.tv(x)

    def __call__(self, z, lam: float):
        if lam <= 0:
            raise ValueError("lambda must be positive")
        if not np.all(np.isfinite(z)):
            raise SolverDivergence("non-finite input to TV prox")
        w = self.weights
        # L p = -synth^T grad~^T p ; L^T x = -grad~ synth x
        L_op = lambda p: -self.synth.adjoint(weighted_gradient_adjoint(p, w))
        Lt_op = lambda x: -1.0 * weighted_gradient(self.synth.apply(x), w)
        shape = (w.q.size, 2 * w.L - 1)
        if self.warm_start and self._dual is not None:
            p = self._dual
        else:
            p = GradientField(np.zeros(shape), np.zeros(shape))
        r = p
        t = 1.0
        step = 1.0 / (lam * self.op_norm**2)
        for _ in range(self.iters):
            p_old = p
            p = _project_unit_disc(r + step * Lt_op(z - lam * L_op(r)))
            t_new = 0.5 * (1.0 + np.sqrt(1.0 + 4.0 * t * t))
            r = p + ((t - 1.0) / t_new) * (p - p_old)
            t = t_new
        self._dual = p
        x = z - lam * L_op(p)
        # never return something worse than the input itself
        if self.objective(x, z, lam) > lam * self.tv(z):
            return z.copy()
        return x


def prox_tv(z, lam: float, synth: LinearOpPair, weights: QuadratureWeights,
            iters: int = 50, op_norm: float | None = None):
    """One-shot prox of ``lam * ||synth(.)||_TV`` at ``z``."""
    return TVProx(synth, weights, iters=iters, op_norm=op_norm, warm_start=False)(z, lam)


class DataBallProjection:
    """Projection onto ``{x : ||y - A x||_2 <= eps}``.

    Tight operators (``A A^T = I``) use the closed form. Otherwise the dual
    problem is solved by accelerated forward-backward iterations (with
    gradient restarts) on the indicator of the ball, warm-started from the
    previous call; the result is then pulled onto the constraint set along
    the segment to a feasible anchor point if the inner loop stopped short of
    feasibility.
    """

    def __init__(self, y: np.ndarray, A: LinearOpPair, epsilon: float, tight: bool = False,
                 op_norm: float | None = None, max_iters: int = 200, tol: float = 1e-8,
                 anchor=None, seed: int = 0):
        if epsilon < 0:
            raise ValueError("epsilon must be non-negative")
        self.y = np.asarray(y)
        self.A = A
        self.epsilon = float(epsilon)
        self.tight = tight
        self.max_iters = max_iters
        self.tol = tol
        self._u = None
        self._anchor = anchor
        self.last_iters = 0
        if self.y.size == 0 and self.epsilon < 0:
            raise ValueError("infeasible constraint")
        if not tight:
            if op_norm is None:
                op_norm = power_iteration_norm(A, iters=50, seed=seed)
            self.op_norm = op_norm * OPNORM_SAFETY
        else:
            self.op_norm = 1.0

    def residual(self, x) -> float:
        return float(np.linalg.norm(self.y - self.A.apply(x)))

    def _ball(self, v):
        d = v - self.y
        nd = np.linalg.norm(d)
        if nd <= self.epsilon or nd == 0:
            return v
        return self.y + d * (self.epsilon / nd)

    def __call__(self, x):
        Ax = self.A.apply(x)
        if np.linalg.norm(self.y - Ax) <= self.epsilon:
            return x
        if self.tight:
            return x + self.A.adjoint(self._ball(Ax) - Ax)
        mu = 1.0 / self.op_norm**2
        u = np.zeros_like(self.y, dtype=float) if self._u is None else self._u
        # accelerated dual steps with gradient-based restart
        w, t = u, 1.0
        for self.last_iters in range(1, self.max_iters + 1):
            v = w + mu * self.A.apply(x - self.A.adjoint(w))
            u_new = v - mu * self._ball(v / mu)
            du = np.linalg.norm(u_new - u)
            if np.dot(w - u_new, u_new - u) > 0:
                t, w = 1.0, u_new
            else:
                t_new = 0.5 * (1 + np.sqrt(1 + 4 * t * t))
                w = u_new + ((t - 1) / t_new) * (u_new - u)
                t = t_new
            u = u_new
            if du <= self.tol * max(np.linalg.norm(u), 1e-300):
                break
        self._u = u
        return self._make_feasible(x - self.A.adjoint(u))

    def anchor(self):
        if self._anchor is None:
            self._anchor = least_squares_anchor(self.A, self.y)
        return self._anchor

    def _make_feasible(self, p):
        r = self.y - self.A.apply(p)
        if np.linalg.norm(r) <= self.epsilon:
            return p
        a = self.anchor()
        ra = self.y - self.A.apply(a)
        if np.linalg.norm(ra) > self.epsilon:
            log.debug("data constraint anchor is infeasible; returning inner iterate")
            return p
        # residual along p + s (a - p) is r + s (ra - r); solve ||.|| = eps for s in (0, 1]
        b = ra - r
        qa = np.dot(b, b)
        qb = 2 * np.dot(r, b)
        qc = np.dot(r, r) - self.epsilon**2
        disc = max(qb * qb - 4 * qa * qc, 0.0)
        s = (-qb - np.sqrt(disc)) / (2 * qa) if qa > 0 else 1.0
        # nudge inward so rounding cannot leave the ball
        s = min(1.0, max(s, 0.0) * (1 + 1e-12) + 1e-15)
        return p + s * (a - p)


class SVDBallProjection:
    """Exact projection onto ``{x : ||y - A x||_2 <= eps}`` for a small dense ``A``.

    ``A`` acts on a real parameter vector; ``to_vec``/``from_vec`` translate
    between that vector and the caller's representation. The projection is
    ``(I + nu A^T A)^{-1} (x + nu A^T y)`` with ``nu`` found by Newton steps on
    ``1/||r(nu)|| - 1/eps``, all in the singular basis of ``A``.
    """

    def __init__(self, y: np.ndarray, matrix: np.ndarray, epsilon: float,
                 to_vec=None, from_vec=None, max_newton: int = 100):
        if epsilon < 0:
            raise ValueError("epsilon must be non-negative")
        self.y = np.asarray(y, dtype=float)
        self.matrix = np.asarray(matrix, dtype=float)
        if self.matrix.shape[0] != self.y.size:
            raise ValueError("matrix rows must match the number of measurements")
        self.epsilon = float(epsilon)
        self.to_vec = to_vec or (lambda x: np.asarray(x, dtype=float).ravel())
        self.from_vec = from_vec or (lambda v: v)
        self.max_newton = max_newton
        U, self.s, self.Vt = np.linalg.svd(self.matrix, full_matrices=False)
        self.b = U.T @ self.y
        # part of y outside the range of A, never reachable
        self.rho2 = max(float(self.y @ self.y - self.b @ self.b), 0.0)
        self.op_norm = float(self.s[0]) if self.s.size else 0.0

    def residual(self, x) -> float:
        return float(np.linalg.norm(self.y - self.matrix @ self.to_vec(x)))

    def _res(self, e, nu):
        return np.sqrt(np.sum((e / (1 + nu * self.s**2)) ** 2) + self.rho2)

    def __call__(self, x):
        c = self.to_vec(x)
        a = self.Vt @ c
        e = self.b - self.s * a
        if self._res(e, 0.0) <= self.epsilon:
            return x
        target = self.epsilon * (1 - 1e-10)
        s2 = self.s**2
        floor = np.sqrt(self.rho2 + np.sum(e[s2 == 0] ** 2))
        if floor >= target:
            log.debug("data ball unreachable; projecting to the least-squares set")
            nu = np.inf
        else:
            nu = 0.0
            for _ in range(self.max_newton):
                d = 1 + nu * s2
                r = self._res(e, nu)
                if abs(r - target) <= 1e-13 * target:
                    break
                # d r / d nu = -sum(s^2 e^2 / d^3) / r
                dr = -np.sum(s2 * e**2 / d**3) / r
                step = -(1 / r - 1 / target) / (-dr / r**2)
                nu = max(nu + step, 0.0)
            while self._res(e, nu) > target and nu < 1e300:
                nu = nu * (1 + 1e-12) + 1e-300
        if np.isinf(nu):
            z = np.where(s2 > 0, self.b / np.where(s2 > 0, self.s, 1), a)
        else:
            z = (a + nu * self.s * self.b) / (1 + nu * s2)
        return self.from_vec(c + self.Vt.T @ (z - a))


def least_squares_anchor(A: LinearOpPair, y: np.ndarray, iters: int = 500, tol: float = 1e-12):
    """Least-squares solution of ``A x = y`` by conjugate gradients on the normal equations."""
    x = A.adjoint(np.zeros_like(y, dtype=float)) * 0.0
    r = A.adjoint(y)
    p = r
    rr = inner(r, r)
    rr0 = rr
    for _ in range(iters):
        if rr <= tol**2 * rr0 or rr == 0:
            break
        Ap = A.adjoint(A.apply(p))
        alpha = rr / inner(p, Ap)
        x = x + alpha * p
        r = r - alpha * Ap
        rr_new = inner(r, r)
        p = r + (rr_new / rr) * p
        rr = rr_new
    return x


def project_data_ball(x, y, A: LinearOpPair, epsilon: float, tight: bool = False, **kwargs):
    """Projection of ``x`` onto ``{z : ||y - A z||_2 <= epsilon}``."""
    y = np.asarray(y)
    if y.size == 0:
        return x
    return DataBallProjection(y, A, epsilon, tight=tight, **kwargs)(x)


def feasibility_bound(epsilon: float) -> float:
    """Residual allowed for a point to count as inside the data ball."""
    return epsilon * (1 + 1e-6) + 1e-12


# -- Douglas-Rachford -----------------------------------------------------------


def douglas_rachford(prox_f: Callable, prox_g: Callable, x0, config: SolverConfig,
                     objective: Callable | None = None, residual: Callable | None = None):
    """Minimise ``f + g`` given ``prox_f(z, gamma)`` and ``prox_g(z)`` (an indicator's projection).

    Returns ``(solution, report)``; the solution is the ``prox_g`` iterate, so it
    lies in the constraint set whenever ``prox_g`` is exact.
    """
    t0 = time.perf_counter()
    gamma, lam = config.gamma, config.relaxation
    objective = objective or (lambda x: 0.0)
    z = x0
    sol = x0
    prev_obj = objective(x0)
    history = []
    converged = False
    k = quiet = 0
    for k in range(1, config.max_iters + 1):
        x = prox_f(z, gamma)
        sol = prox_g(2 * x - z)
        z = z + lam * (sol - x)
        if not (np.all(np.isfinite(sol)) and np.all(np.isfinite(z))):
            raise SolverDivergence(f"non-finite iterate at Douglas-Rachford iteration {k}")
        obj = objective(sol)
        history.append(obj)
        change = abs(obj - prev_obj) / max(abs(obj), 1e-300)
        quiet = quiet + 1 if change <= config.rel_obj_tol else 0
        if quiet >= config.stop_window:
            converged = True
            break
        prev_obj = obj
    res = residual(sol) if residual is not None else 0.0
    if residual is not None:
        converged = converged and res <= feasibility_bound(config.epsilon)
    report = SolverReport(
        iterations=k,
        objective=float(objective(sol)),
        residual=float(res),
        converged=converged,
        wall_time=time.perf_counter() - t0,
        epsilon=config.epsilon,
        history=history,
    )
    return sol, report
