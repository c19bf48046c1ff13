"""Weighted nonlinear least squares (damped Gauss-Newton / Levenberg-Marquardt).

Models are plain callables ``model(params, x) -> y``; derivatives are taken
by central finite differences, so no model needs an analytic Jacobian.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

REL_STEP = 1e-6
ABS_STEP = 1e-12
CHI2_RTOL = 1e-10
GRAD_TOL = 1e-8
MAX_ITER = 500
LAMBDA0 = 1e-3
LAMBDA_MAX = 1e16


@dataclass
class FitProblem:
    """A weighted least-squares problem.

    ``bounds`` is a sequence of ``(lo, hi)`` pairs (``None`` entries mean
    unbounded); ``fixed`` masks parameters that are held at their initial
    values.
    """

    model: object
    x: np.ndarray
    y: np.ndarray
    initial: np.ndarray
    sigma: np.ndarray | None = None
    bounds: list | None = None
    fixed: np.ndarray | None = None
    names: list | None = None

    def __post_init__(self):
        self.x = np.asarray(self.x, dtype=float)
        self.y = np.asarray(self.y, dtype=float)
        self.initial = np.asarray(self.initial, dtype=float).copy()
        n, npar = self.y.size, self.initial.size
        if self.x.shape[:1] != (n,):
            raise ValueError("x and y must have the same length")
        self.sigma = np.ones(n) if self.sigma is None else np.asarray(self.sigma, dtype=float)
        if self.sigma.shape != (n,) or np.any(~(self.sigma > 0)):
            raise ValueError("sigma_y must be positive and match y")
        self.fixed = (np.zeros(npar, dtype=bool) if self.fixed is None
                      else np.asarray(self.fixed, dtype=bool))
        if self.fixed.shape != (npar,):
            raise ValueError("fixed mask must have one entry per parameter")
        n_free = int((~self.fixed).sum())
        if n_free == 0:
            raise ValueError("at least one parameter must be free")
        if n <= n_free:
            raise ValueError(f"{n} data points cannot constrain {n_free} free parameters")
        lo = np.full(npar, -np.inf)
        hi = np.full(npar, np.inf)
        for i, pair in enumerate(self.bounds or []):
            if pair is None:
                continue
            a, b = pair
            lo[i] = -np.inf if a is None else a
            hi[i] = np.inf if b is None else b
        if np.any(lo > hi):
            raise ValueError("lower bound above upper bound")
        self.lower, self.upper = lo, hi
        self.names = list(self.names) if self.names else [f"p{i}" for i in range(npar)]
        if len(self.names) != npar:
            raise ValueError("one name per parameter is required")


@dataclass
class FitResult:
    params: np.ndarray
    covariance: np.ndarray
    chi2: float
    reduced_chi2: float
    iterations: int
    converged: bool
    message: str
    names: list = field(default_factory=list)
    fixed: np.ndarray | None = None
    nfev: int = 0

    @property
    def errors(self):
        """One-sigma uncertainties, zero for fixed parameters."""
        err = np.zeros_like(self.params)
        free = ~self.fixed
        with np.errstate(invalid="ignore"):
            err[free] = np.sqrt(np.diag(self.covariance))
        return err

    def __getitem__(self, name):
        return float(self.params[self.names.index(name)])

    def error(self, name):
        return float(self.errors[self.names.index(name)])

    def to_dict(self):
        return {
            "parameters": [
                {"parameter": n, "value": float(v), "uncertainty": float(e), "fixed": bool(f)}
                for n, v, e, f in zip(self.names, self.params, self.errors, self.fixed)
            ],
            "chi2": self.chi2,
            "reduced_chi2": self.reduced_chi2,
            "iterations": self.iterations,
            "converged": self.converged,
            "message": self.message,
        }


def _residuals(problem, p):
    return (problem.y - np.asarray(problem.model(p, problem.x), dtype=float)) / problem.sigma


def _jacobian(problem, p, free_idx):
    # d(model)/dp divided by sigma, central differences projected onto bounds.
    jac = np.empty((problem.y.size, free_idx.size))
    for col, j in enumerate(free_idx):
        h = max(REL_STEP * abs(p[j]), ABS_STEP)
        # A step near the absolute floor can vanish against large model values;
        # widen it only when the difference rounds to exactly zero.
        for _ in range(4):
            jac[:, col] = _central_difference(problem, p, j, h)
            if np.any(jac[:, col]) or h >= REL_STEP:
                break
            h = min(h * 1e3, REL_STEP)
    return jac


def _central_difference(problem, p, j, h):
    up, down = p.copy(), p.copy()
    up[j] = min(p[j] + h, problem.upper[j])
    down[j] = max(p[j] - h, problem.lower[j])
    width = up[j] - down[j]
    if width == 0:
        return 0.0
    f_up = np.asarray(problem.model(up, problem.x), dtype=float)
    f_down = np.asarray(problem.model(down, problem.x), dtype=float)
    return (f_up - f_down) / width / problem.sigma


def fit(problem, max_iter=MAX_ITER):
    """Minimize ``sum(((y - model) / sigma)**2)`` over the free parameters."""
    order = np.lexsort((problem.sigma, problem.y, problem.x)) if problem.x.ndim == 1 else None
    if order is not None:
        # Canonical ordering makes the result independent of input order.
        problem = FitProblem(problem.model, problem.x[order], problem.y[order], problem.initial,
                             problem.sigma[order], list(zip(problem.lower, problem.upper)),
                             problem.fixed, problem.names)
    free_idx = np.flatnonzero(~problem.fixed)
    p = np.clip(problem.initial, problem.lower, problem.upper)
    r = _residuals(problem, p)
    chi2 = float(r @ r)
    nfev = 1
    lam = LAMBDA0
    converged = False
    message = f"maximum number of iterations ({max_iter}) reached"
    jac = _jacobian(problem, p, free_idx)
    nfev += 2 * free_idx.size
    it = 0
    while it < max_iter:
        if chi2 == 0.0:
            converged, message = True, "exact fit (chi-square is zero)"
            break
        grad = jac.T @ r
        alpha = jac.T @ jac
        scale = np.diag(alpha).copy()
        if np.any(scale <= 0):
            dead = [problem.names[free_idx[i]] for i in np.flatnonzero(scale <= 0)]
            message = f"singular normal equations: model insensitive to {dead}"
            break
        # Scale-free gradient: cosine between residual and each Jacobian column.
        if np.max(np.abs(grad) / np.sqrt(scale * chi2)) < GRAD_TOL:
            converged, message = True, "gradient below tolerance"
            break
        it += 1
        try:
            step = np.linalg.solve(alpha + lam * np.diag(scale), grad)
        except np.linalg.LinAlgError:
            message = "singular normal equations"
            break
        trial = p.copy()
        trial[free_idx] += step
        trial = np.clip(trial, problem.lower, problem.upper)
        r_trial = _residuals(problem, trial)
        nfev += 1
        chi2_trial = float(r_trial @ r_trial)
        if np.isfinite(chi2_trial) and chi2_trial < chi2:
            decrease = (chi2 - chi2_trial) / chi2
            p, r, chi2 = trial, r_trial, chi2_trial
            lam = max(lam / 10, 1e-12)
            jac = _jacobian(problem, p, free_idx)
            nfev += 2 * free_idx.size
            if decrease < CHI2_RTOL:
                converged, message = True, "relative chi-square decrease below tolerance"
                break
        else:
            lam *= 10
            if lam > LAMBDA_MAX:
                converged, message = True, "chi-square cannot be reduced further"
                break

    dof = problem.y.size - free_idx.size
    reduced = chi2 / dof
    alpha = jac.T @ jac
    try:
        # Invert the correlation-scaled matrix so the singularity test is unit-free.
        d = np.sqrt(np.diag(alpha))
        if np.any(d == 0):
            raise np.linalg.LinAlgError
        scaled = alpha / np.outer(d, d)
        if np.linalg.cond(scaled) > 1e15:
            raise np.linalg.LinAlgError
        cov = np.linalg.inv(scaled) / np.outer(d, d) * reduced
        cov = 0.5 * (cov + cov.T)
    except np.linalg.LinAlgError:
        cov = np.full((free_idx.size, free_idx.size), np.nan)
        if converged:
            converged, message = False, "singular normal equations at solution; covariance undefined"
    return FitResult(p, cov, chi2, reduced, it, converged, message, problem.names,
                     problem.fixed.copy(), nfev)


def least_squares_fit(model, x, y, initial, sigma=None, bounds=None, fixed=None, names=None,
                      max_iter=MAX_ITER):
    """Shorthand for ``fit(FitProblem(...))``."""
    return fit(FitProblem(model, x, y, initial, sigma, bounds, fixed, names), max_iter=max_iter)
