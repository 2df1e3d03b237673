"""Damped Gauss-Newton (Levenberg-Marquardt) for small real least-squares problems.

Contract: forward-difference Jacobian with a step of 1e-7 relative to each
parameter's typical magnitude (its ``scale``, by default |x0|), Marquardt
(diagonal) damping with the gain-ratio update of Nielsen, and
convergence only when the scaled step is below ``xtol`` (relative) *and* the
scaled gradient infinity norm is below ``gtol``.
"""

from dataclasses import dataclass

import numpy as np


@dataclass
class LMResult:
    x: np.ndarray
    cost: float
    jacobian: np.ndarray
    residuals: np.ndarray
    iterations: int
    nfev: int
    converged: bool
    message: str


def forward_jacobian(fun, x, f0=None, rel_step=1e-7, scale=None):
    x = np.asarray(x, dtype=float)
    if f0 is None:
        f0 = fun(x)
    if scale is None:
        scale = np.where(x != 0, np.abs(x), 1.0)
    scale = np.asarray(scale, dtype=float)
    jac = np.empty((f0.size, x.size))
    for i in range(x.size):
        # relative in u = x / scale, so an offset-like parameter (a resonance
        # at 7 GHz with a 50 kHz width) gets a step small against its width
        step = rel_step * scale[i]
        xp = x.copy()
        xp[i] += step
        # use the representable step to keep the difference quotient exact
        jac[:, i] = (fun(xp) - f0) / (xp[i] - x[i])
    return jac


def _cost(r):
    return 0.5 * float(r @ r) if np.all(np.isfinite(r)) else np.inf


def levenberg_marquardt(fun, x0, scale=None, max_iter=200, xtol=1e-10, gtol=1e-8,
                        rel_step=1e-7, damping=1e-3):
    """Minimize 0.5 * ||fun(x)||^2.

    ``scale`` gives typical parameter magnitudes; step and gradient tests are
    applied to u = x / scale so that parameters in Hz and rad/s mix cleanly.
    A step whose residual is non-finite is rejected like an uphill step,
    which lets models signal an invalid region by returning NaN.
    """
    x = np.asarray(x0, dtype=float).copy()
    scale = np.where(x != 0, np.abs(x), 1.0) if scale is None else np.asarray(scale, dtype=float)
    r = np.asarray(fun(x), dtype=float)
    nfev = 1
    cost = _cost(r)
    if not np.isfinite(cost):
        raise ValueError("residuals are not finite at the starting point")

    lam = None
    nu = 2.0
    message = "maximum iterations reached"
    converged = False
    it = 0
    jac_x = forward_jacobian(fun, x, r, rel_step, scale)
    nfev += x.size
    for it in range(1, max_iter + 1):
        jac_u = jac_x * scale
        grad = jac_u.T @ r
        hess = jac_u.T @ jac_u
        diag = np.maximum(np.diag(hess), 1e-300)
        if lam is None:
            lam = damping * np.max(diag)
        if np.max(np.abs(grad)) <= gtol and cost == 0.0:
            converged, message = True, "zero residual"
            break
        accepted = False
        while not accepted:
            try:
                du = np.linalg.solve(hess + lam * np.diag(diag), -grad)
            except np.linalg.LinAlgError:
                du = np.linalg.lstsq(hess + lam * np.diag(diag), -grad, rcond=None)[0]
            x_new = x + du * scale
            r_new = np.asarray(fun(x_new), dtype=float)
            nfev += 1
            cost_new = _cost(r_new)
            predicted = -(du @ grad) - 0.5 * du @ hess @ du
            gain = (cost - cost_new) / predicted if predicted > 0 else -1.0
            if np.isfinite(cost_new) and gain > 0:
                accepted = True
                lam *= max(1 / 3, 1 - (2 * gain - 1) ** 3)
                nu = 2.0
            else:
                lam *= nu
                nu *= 2
                if lam > 1e30 * np.max(diag) or not np.all(np.isfinite(du)):
                    break
        if not accepted:
            if np.max(np.abs(grad)) <= gtol:
                converged, message = True, "no further decrease; gradient below tolerance"
            else:
                message = "no further decrease possible"
            break
        u_norm = np.linalg.norm(x / scale)
        step_small = np.linalg.norm(du) <= xtol * (u_norm + xtol)
        x, r, cost = x_new, r_new, cost_new
        jac_x = forward_jacobian(fun, x, r, rel_step, scale)
        nfev += x.size
        grad_small = np.max(np.abs((jac_x * scale).T @ r)) <= gtol
        if step_small and grad_small:
            converged, message = True, "step and gradient below tolerance"
            break
        if cost == 0.0 and grad_small:
            converged, message = True, "zero residual"
            break
    return LMResult(x, cost, jac_x, r, it, nfev, converged, message)


def covariance(jacobian, residuals, n_params=None):
    """Linearized covariance (J^T J)^-1 scaled by the residual variance."""
    m, n = jacobian.shape
    n = n if n_params is None else n_params
    dof = max(m - n, 1)
    s2 = float(residuals @ residuals) / dof
    jtj = jacobian.T @ jacobian
    try:
        inv = np.linalg.inv(jtj)
    except np.linalg.LinAlgError:
        inv = np.linalg.pinv(jtj)
    return inv * s2
