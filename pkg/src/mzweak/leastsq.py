"""Small damped least-squares (Levenberg-Marquardt style) minimizer.

The fitting contracts in this package pin the damping schedule, the
iteration cap and the convergence rule, so the solver is implemented
here instead of delegating to an opaque library routine: damping is
multiplied by 10 on a rejected step and by 0.2 on an accepted one,
starting from 1e-3, and the fit converges when an accepted step improves
the sum of squared residuals by less than a relative tolerance.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

_DAMPING_MAX = 1e14


@dataclass
class LeastSquaresResult:
    params: np.ndarray
    ssr: float
    iterations: int
    converged: bool
    residual: np.ndarray
    jacobian: np.ndarray

    def covariance(self) -> np.ndarray:
        """Parameter covariance from the local quadratic model.

        Uses ``ssr / (n - p)`` as the noise variance estimate and the
        pseudo-inverse of J^T J, so unidentifiable directions come out
        with zero rather than infinite variance.
        """
        n, p = self.jacobian.shape
        dof = max(n - p, 1)
        jtj = self.jacobian.T @ self.jacobian
        return (self.ssr / dof) * np.linalg.pinv(jtj)

    def param_std(self) -> np.ndarray:
        return np.sqrt(np.clip(np.diag(self.covariance()), 0.0, None))


def damped_least_squares(
    residual_and_jacobian: Callable[[np.ndarray], tuple[np.ndarray, np.ndarray]],
    p0,
    max_iter: int = 200,
    rel_tol: float = 1e-10,
    damping0: float = 1e-3,
) -> LeastSquaresResult:
    """Minimize ``sum(r(p)**2)`` with damped Gauss-Newton steps.

    ``residual_and_jacobian(p)`` must return the residual vector and its
    Jacobian with respect to ``p`` in one call.  Every trial step counts
    toward ``max_iter``; the result reports ``converged=False`` when the
    cap is reached without meeting the tolerance.
    """
    p = np.asarray(p0, dtype=float).copy()
    r, jac = residual_and_jacobian(p)
    ssr = float(r @ r)
    lam = damping0
    iterations = 0
    converged = ssr == 0.0
    tiny = np.finfo(float).tiny
    while iterations < max_iter and not converged:
        iterations += 1
        jtj = jac.T @ jac
        jtr = jac.T @ r
        diag = np.real(np.diag(jtj)).copy()
        # floor the Marquardt scaling so flat directions stay solvable
        floor = 1e-14 * max(float(np.max(diag)), 1.0)
        scale = np.where(diag > floor, diag, floor)
        try:
            step = np.linalg.solve(jtj + lam * np.diag(scale), -jtr)
        except np.linalg.LinAlgError:
            lam *= 10.0
            if lam > _DAMPING_MAX:
                break
            continue
        r_try, jac_try = residual_and_jacobian(p + step)
        ssr_try = float(r_try @ r_try)
        if ssr_try <= ssr:
            improvement = ssr - ssr_try
            p = p + step
            r, jac, ssr = r_try, jac_try, ssr_try
            lam = max(lam * 0.2, 1e-14)
            if improvement <= rel_tol * max(ssr, tiny):
                converged = True
        else:
            lam *= 10.0
            if lam > _DAMPING_MAX:
                # steps have shrunk to nothing; treat as a stationary point
                converged = True
    return LeastSquaresResult(
        params=p, ssr=ssr, iterations=iterations, converged=converged, residual=r, jacobian=jac
    )
