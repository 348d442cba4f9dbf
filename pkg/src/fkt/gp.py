"""Conjugate gradients over the fast operator and GP posterior-mean prediction."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import cho_factor, cho_solve

from .core import DimensionMismatch, FktPlan, dense_matrix, multiply, plan
from .kernels import IsotropicKernel, eval_kernel
from .tree import DEFAULT_LEAF_CAPACITY, DEFAULT_THETA


class NotConverged(RuntimeError):
    def __init__(self, message, diagnostics):
        super().__init__(message)
        self.diagnostics = diagnostics


@dataclass
class NoisyOperator:
    """x -> K x + noise * x, with K applied by an FKT plan or a dense matrix."""

    kernel_op: FktPlan | np.ndarray
    noise: np.ndarray

    def __post_init__(self):
        n = self.kernel_op.n if isinstance(self.kernel_op, FktPlan) else self.kernel_op.shape[0]
        noise = np.asarray(self.noise, dtype=float)
        self.noise = np.full(n, float(noise)) if noise.ndim == 0 else noise
        if self.noise.shape != (n,):
            raise DimensionMismatch(f"noise must have length {n}")
        if np.any(self.noise < 0):
            raise ValueError("noise variances must be nonnegative")

    @property
    def n(self) -> int:
        return len(self.noise)

    def kernel_diagonal(self) -> np.ndarray:
        if isinstance(self.kernel_op, FktPlan):
            return np.full(self.n, float(eval_kernel(self.kernel_op.kernel, np.zeros(1))[0]))
        return np.diag(self.kernel_op).copy()

    def __call__(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if isinstance(self.kernel_op, FktPlan):
            kx = multiply(self.kernel_op, x)
        else:
            kx = self.kernel_op @ x
        return kx + self.noise * x


@dataclass
class CgDiagnostics:
    iterations: int = 0
    residual: float = 0.0
    converged: bool = False
    restarts: int = 0
    history: list = field(default_factory=list)


def cg_solve(
    op,
    rhs,
    tol: float = 1e-8,
    max_iter: int | None = None,
    *,
    jacobi: bool = False,
    x0=None,
    raise_on_failure: bool = False,
) -> tuple[np.ndarray, CgDiagnostics]:
    """Solve op(x) = rhs for a symmetric positive definite operator.

    Plain CG residuals oscillate, so the returned iterate is the minimal-residual
    smoothing of the CG sequence, whose residual norm never increases.  When the
    recursively updated residual drifts away from the true one (or positivity is
    lost along a search direction), CG restarts from the smoothed iterate.
    """
    if tol <= 0:
        raise ValueError("tolerance must be positive")
    b = np.asarray(rhs, dtype=float)
    n = len(b)
    max_iter = 10 * n if max_iter is None else int(max_iter)
    diag = CgDiagnostics()
    bnorm = np.linalg.norm(b)
    if bnorm == 0:
        diag.converged = True
        diag.history.append(0.0)
        return np.zeros(n), diag
    if jacobi:
        dvec = op.kernel_diagonal() + op.noise
        if np.any(dvec <= 0):
            raise ValueError("Jacobi preconditioner needs a positive diagonal")
        precond = 1.0 / dvec
    else:
        precond = np.ones(n)

    best = np.zeros(n) if x0 is None else np.array(x0, dtype=float)
    best_r = b - op(best) if x0 is not None else b.copy()
    res = np.linalg.norm(best_r) / bnorm
    diag.history.append(res)
    while res > tol and diag.iterations < max_iter:
        # one CG run from the smoothed iterate
        x, r = best.copy(), best_r.copy()
        z = precond * r
        p = z.copy()
        rz = r @ z
        while res > tol and diag.iterations < max_iter:
            ap = op(p)
            pap = p @ ap
            if pap <= 0:
                break
            alpha = rz / pap
            x += alpha * p
            r -= alpha * ap
            diag.iterations += 1
            diff = r - best_r
            dd = diff @ diff
            if dd > 0:
                eta = -(best_r @ diff) / dd
                best = best + eta * (x - best)
                best_r = best_r + eta * diff
            res = np.linalg.norm(best_r) / bnorm
            diag.history.append(res)
            z = precond * r
            rz_new = r @ z
            p = z + (rz_new / rz) * p
            rz = rz_new
        true_r = b - op(best)
        true_res = np.linalg.norm(true_r) / bnorm
        if true_res <= max(tol, res * (1 + 1e-6)) or diag.iterations >= max_iter:
            res = min(res, true_res) if true_res <= tol else true_res
            break
        diag.restarts += 1
        best_r = true_r
        res = true_res
    diag.residual = float(res)
    diag.converged = bool(res <= tol)
    if raise_on_failure and not diag.converged:
        raise NotConverged(f"CG stopped at residual {res:.3e} after {diag.iterations} iterations", diag)
    return best, diag


@dataclass
class GpPrediction:
    test: np.ndarray
    mean: np.ndarray
    diagnostics: CgDiagnostics | None = None
    prior_mean: float = 0.0


def _as_noise(noise, n) -> np.ndarray:
    noise = np.asarray(noise, dtype=float)
    return np.full(n, float(noise)) if noise.ndim == 0 else noise


def gp_posterior_mean(
    train,
    y,
    noise,
    kernel: IsotropicKernel,
    test,
    *,
    p: int = 4,
    theta: float = DEFAULT_THETA,
    leaf_capacity: int = DEFAULT_LEAF_CAPACITY,
    compress="auto",
    threads: int = 1,
    tol: float = 1e-8,
    max_iter: int | None = None,
    jacobi: bool = False,
    prior_mean: float | None = None,
) -> GpPrediction:
    """mu + K(X*, X) (K(X, X) + diag(noise))^{-1} (y - mu) with fast products.

    The cross product runs the square operator on the stacked cloud [X; X*]
    with zero weights on the test rows, then reads off the test outputs.
    """
    train = np.asarray(train, dtype=float)
    test = np.asarray(test, dtype=float)
    y = np.asarray(y, dtype=float)
    if train.ndim != 2 or test.ndim != 2 or train.shape[1] != test.shape[1]:
        raise DimensionMismatch("train and test must be (N, d) arrays of the same dimension")
    if y.shape != (len(train),):
        raise DimensionMismatch("one target per training point")
    mu = float(y.mean()) if prior_mean is None else float(prior_mean)
    opts = dict(theta=theta, leaf_capacity=leaf_capacity, compress=compress, threads=threads)
    op = NoisyOperator(plan(train, kernel, p, **opts), _as_noise(noise, len(train)))
    weights, diag = cg_solve(op, y - mu, tol, max_iter, jacobi=jacobi)
    joint = plan(np.vstack([train, test]), kernel, p, **opts)
    padded = np.concatenate([weights, np.zeros(len(test))])
    cross = multiply(joint, padded)[len(train) :]
    return GpPrediction(test, mu + cross, diag, mu)


def gp_posterior_dense(train, y, noise, kernel: IsotropicKernel, test, *, prior_mean=None, covariance=False):
    """Cholesky-based reference; returns (mean, covariance or None)."""
    train = np.asarray(train, dtype=float)
    test = np.asarray(test, dtype=float)
    y = np.asarray(y, dtype=float)
    mu = float(y.mean()) if prior_mean is None else float(prior_mean)
    sigma = dense_matrix(train, kernel) + np.diag(_as_noise(noise, len(train)))
    factor = cho_factor(sigma)
    cross = dense_matrix(test, kernel, train)
    mean = mu + cross @ cho_solve(factor, y - mu)
    if not covariance:
        return mean, None
    cov = dense_matrix(test, kernel) - cross @ cho_solve(factor, cross.T)
    return mean, cov
