"""Dense two-phase simplex with Bland's anti-cycling rule.

Solves ``max c.x  s.t.  A_eq x = b_eq, x >= 0``.  Intended for the desk-scale
transshipment programs (a few hundred variables); every pivot is exact up to
the pivot tolerance and the tableau is kept dense.
"""

from dataclasses import dataclass

import numpy as np

from .errors import InfeasibleError, NoConvergenceError, UnboundedError


@dataclass(frozen=True, eq=False)
class LPResult:
    x: np.ndarray
    value: float
    iterations: int
    basis: tuple


def _pivot(T, row, col):
    T[row] /= T[row, col]
    factor = T[:, col].copy()
    factor[row] = 0.0
    T -= np.outer(factor, T[row])


def _run(T, basis, cost, n_cols, tol, max_iter, it):
    """Bland-rule iterations on tableau ``T`` (last column is the rhs)."""
    while True:
        reduced = cost[:n_cols] - cost[basis] @ T[:, :n_cols]
        entering = np.flatnonzero(reduced > tol)
        if entering.size == 0:
            return it
        col = int(entering[0])
        column = T[:, col]
        rows = np.flatnonzero(column > tol)
        if rows.size == 0:
            raise UnboundedError(f"objective unbounded along column {col}")
        ratios = T[rows, -1] / column[rows]
        best = ratios.min()
        ties = rows[ratios <= best + tol * max(1.0, abs(best))]
        row = int(min(ties, key=lambda i: basis[i]))
        _pivot(T, row, col)
        basis[row] = col
        it += 1
        if it >= max_iter:
            raise NoConvergenceError(f"simplex exceeded {max_iter} pivots")


def maximize(c, A_eq, b_eq, tol=1e-12, max_iter=100000):
    """Maximize ``c.x`` over ``{x >= 0 : A_eq x = b_eq}``.

    Raises
    ------
    InfeasibleError, UnboundedError
    """
    c = np.asarray(c, dtype=float)
    A = np.array(A_eq, dtype=float)
    b = np.array(b_eq, dtype=float)
    m, n = A.shape
    neg = b < 0
    A[neg] *= -1
    b[neg] *= -1

    # phase I: artificials n..n+m-1
    T = np.hstack([A, np.eye(m), b[:, None]])
    basis = list(range(n, n + m))
    cost1 = np.concatenate([np.zeros(n), -np.ones(m)])
    it = _run(T, basis, cost1, n + m, tol, max_iter, 0)
    scale = max(1.0, float(np.abs(b).max(initial=0.0)))
    if -cost1[basis] @ T[:, -1] > 1e3 * tol * scale:
        raise InfeasibleError("equality constraints have no nonnegative solution")

    # drive artificials out of the basis; drop redundant rows
    keep = []
    for i in range(m):
        if basis[i] < n:
            keep.append(i)
            continue
        cols = np.flatnonzero(np.abs(T[i, :n]) > tol)
        if cols.size:
            _pivot(T, i, int(cols[0]))
            basis[i] = int(cols[0])
            keep.append(i)
    T = np.hstack([T[keep, :n], T[keep, -1:]])
    basis = [basis[i] for i in keep]

    it = _run(T, basis, c, n, tol, max_iter, it)
    x = np.zeros(n)
    x[basis] = T[:, -1]
    x[np.abs(x) < tol] = 0.0
    return LPResult(x=x, value=float(c @ x), iterations=it, basis=tuple(basis))
