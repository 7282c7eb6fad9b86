"""Projected-gradient minimization over the probability simplex.

Objectives are *batched*: they take a 2-D array whose rows are points
and return one value per row, so a finite-difference gradient costs a
single call.
"""

import logging

import numpy as np
from scipy.optimize import minimize as sequential_qp

from .utils import InvalidParameters, SolverNonConvergence

logger = logging.getLogger(__name__)


def project_simplex(v, total=1.0):
    """Euclidean projection of ``v`` onto ``{x >= 0, sum(x) = total}``.

    Sort-based: find the largest ``rho`` such that the shifted sorted
    entries stay positive, then clip at the common shift.
    """
    if total <= 0:
        raise InvalidParameters(
            "simplex total must be positive, got {}".format(total))
    v = np.asarray(v, dtype=float)
    u = np.sort(v)[::-1]
    css = np.cumsum(u) - total
    ind = np.arange(1, len(v) + 1)
    rho = np.nonzero(u - css / ind > 0)[0][-1]
    theta = css[rho] / (rho + 1.0)
    return np.maximum(v - theta, 0.0)


def vertices(n):
    return [row for row in np.eye(n)]


def centroid(n):
    return np.full(n, 1.0 / n)


class OptimizeResult(dict):
    """Result of :func:`minimize`, a dict with attribute access.

    Keys: ``x`` (solution), ``fun`` (objective at ``x``), ``nit``
    (iterations), ``nfev`` (points evaluated), ``success``, ``message``,
    ``residual`` (last objective decrease) and, for
    :func:`minimize_multistart`, ``start`` (index of the winning start).
    """
    def __getattr__(self, name):
        try:
            return self[name]
        except KeyError:
            raise AttributeError(name)

    __setattr__ = dict.__setitem__
    __delattr__ = dict.__delitem__

    def __repr__(self):
        if self.keys():
            m = max(map(len, list(self.keys()))) + 1
            return '\n'.join([k.rjust(m) + ': ' + repr(v)
                              for k, v in sorted(self.items())])
        else:
            return self.__class__.__name__ + "()"


def _gradient(fun, x, h):
    n = len(x)
    points = np.vstack([x + h * np.eye(n), x - h * np.eye(n)])
    values = fun(points)
    return (values[:n] - values[n:]) / (2 * h)


def polish(fun, x, fx, tol=1e-10, max_iter=200):
    """Finish a stalled descent with SLSQP from ``x``.

    The simplex enters as the bounds ``0 <= x_i <= 1`` and the equality
    ``sum(x) = 1``. The polished point is kept only if SLSQP reports
    success and does not end above ``fx``.

    :return: ``(x, fx, nfev)`` when polished, None otherwise.
    """
    n = len(x)
    result = sequential_qp(
        lambda point: float(fun(point[np.newaxis])[0]), x,
        method='SLSQP', bounds=[(0.0, 1.0)] * n,
        constraints=[{'type': 'eq', 'fun': lambda point: point.sum() - 1}],
        options={'ftol': tol, 'maxiter': max_iter})
    logger.debug("SLSQP polish: %s (status %d)", result.message,
                 result.status)
    if not result.success:
        return None
    x_new = project_simplex(result.x)
    f_new = float(fun(x_new[np.newaxis])[0])
    if f_new > fx + tol * (1 + abs(fx)):
        return None
    return x_new, f_new, result.nfev + 1


def minimize(fun, x0, tol=1e-10, max_iter=500, step=1.0, h=1e-6,
             max_backtrack=60, polish_stalled=True):
    """Minimize a batched objective over the unit simplex.

    Projected gradient descent with a central finite-difference
    gradient and Armijo backtracking on the projection arc. Each
    iteration tries four times the last accepted step first, halving it
    until the sufficient-decrease test passes. Stops when the decrease
    drops to ``tol * (1 + |f|)``, or when no step decreases the
    objective (a stationary point). A descent still creeping along a
    narrow valley at ``max_iter`` is handed to :func:`polish` unless
    ``polish_stalled`` is False.

    :param fun: callable mapping an ``(m, n)`` array to ``m`` values.
    :param x0: starting point, projected onto the simplex first.
    :return: an :class:`OptimizeResult`; ``success`` is False when
        ``max_iter`` was reached and the polish failed too.
    """
    x = project_simplex(x0)
    n = len(x)
    fx = float(fun(x[np.newaxis])[0])
    nfev = 1
    alpha = step
    residual = np.inf
    for nit in range(1, max_iter + 1):
        grad = _gradient(fun, x, h)
        nfev += 2 * n
        a = 4.0 * alpha
        accepted = False
        for _ in range(max_backtrack):
            x_new = project_simplex(x - a * grad)
            f_new = float(fun(x_new[np.newaxis])[0])
            nfev += 1
            dist2 = float(np.dot(x_new - x, x_new - x))
            if f_new <= fx - 1e-4 * dist2 / a:
                accepted = True
                break
            a *= 0.5
        if not accepted:
            return OptimizeResult(x=x, fun=fx, nit=nit, nfev=nfev,
                                  success=True, residual=0.0,
                                  message='no descent step')
        alpha = a
        residual = fx - f_new
        x, fx = x_new, f_new
        if residual <= tol * (1 + abs(fx)):
            return OptimizeResult(x=x, fun=fx, nit=nit, nfev=nfev,
                                  success=True, residual=residual,
                                  message='objective decrease below tol')
    polished = polish(fun, x, fx, tol=tol) if polish_stalled else None
    if polished is not None:
        x_new, f_new, extra = polished
        return OptimizeResult(x=x_new, fun=f_new, nit=max_iter,
                              nfev=nfev + extra, success=True,
                              residual=max(fx - f_new, 0.0),
                              message='polished by SLSQP')
    return OptimizeResult(x=x, fun=fx, nit=max_iter, nfev=nfev,
                          success=False, residual=residual,
                          message='iteration limit reached')


def minimize_multistart(fun, starts, **kwargs):
    """Run :func:`minimize` from every start and keep the best.

    The winner has the lowest objective; a later start must beat the
    current best by more than ``1e-12 * (1 + |best|)``, so ties go to
    the lowest start index.

    :raise SolverNonConvergence: if the winning run hit its iteration
        limit.
    """
    if not starts:
        raise InvalidParameters("no starting points")
    best = None
    runs = []
    for index, x0 in enumerate(starts):
        result = minimize(fun, x0, **kwargs)
        result.start = index
        runs.append(result)
        logger.debug("start %d: fun=%.12g nit=%d (%s)", index, result.fun,
                     result.nit, result.message)
        if best is None or \
                result.fun < best.fun - 1e-12 * (1 + abs(best.fun)):
            best = result
    best.runs = len(runs)
    if not best.success:
        raise SolverNonConvergence(
            "projected descent did not converge from start {} after {} "
            "iterations (last decrease {:.3g})".format(
                best.start, best.nit, best.residual),
            best=best, residual=best.residual)
    return best
