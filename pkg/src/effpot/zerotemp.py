"""Zero-temperature limit: beta sweeps, extrapolation of ``lambda_beta / beta``,
the max-plus operator ``Q`` and its additive eigenpair ``(V, c)``.

``Q(phi)(w)`` is the maximum of ``int (A(w, .) + phi) dmu`` over invariant
probabilities, which at finite range is the maximum mean cycle of the node
weights ``A(w, .) + phi`` on the block graph of the working depth.
"""

from dataclasses import dataclass, field

import numpy as np

from .effective import base_index, effective_family, solve_fixed_point, working_depth
from .ergopt import node_weight_cycle
from .errors import InsufficientRowsError, NoConvergenceError
from .potentials import XPotential, lip_constant, sup_norm

DEFAULT_GRID = tuple(2.0**k for k in range(13))


@dataclass(eq=False)
class SweepRow:
    beta: float
    lambda_over_beta: float
    phi_over_beta: XPotential
    lip_phi_over_beta: float
    iterations: int
    converged: bool
    residual: float = 0.0


def beta_sweep(A, grid=DEFAULT_GRID, tol=1e-10, w0=None, max_iter=10**5, depth=None):
    """Solve the fixed point of ``beta A`` for every ``beta`` in ``grid``.

    The residual target is ``tol * max(1, beta ||A||_0)``, i.e. ``tol`` is
    relative to the size of the scaled observable.  A row that fails to
    converge is kept with ``converged=False`` and the sweep carries on.
    """
    grid = [float(b) for b in grid]
    if any(b <= 0 for b in grid) or any(b2 <= b1 for b1, b2 in zip(grid, grid[1:])):
        raise ValueError("beta grid must be positive and strictly increasing")
    scale = sup_norm(A)
    rows = []
    for beta in grid:
        try:
            fp = solve_fixed_point(
                A.scaled(beta), w0=w0, tol=tol * max(1.0, beta * scale), max_iter=max_iter, depth=depth
            )
        except NoConvergenceError as exc:
            fp = exc.partial
            if fp is None:
                rows.append(SweepRow(beta, float("nan"), None, float("nan"), 0, False, float("nan")))
                continue
        phi = fp.phi_plus / beta
        rows.append(
            SweepRow(
                beta=beta,
                lambda_over_beta=fp.lambda_plus / beta,
                phi_over_beta=phi,
                lip_phi_over_beta=lip_constant(phi),
                iterations=fp.iterations,
                converged=fp.converged,
                residual=fp.residual,
            )
        )
    return rows


def extrapolate_c(rows):
    """Least-squares fit ``lambda / beta = c + b / beta`` over the top decade of ``beta``.

    Raises
    ------
    InsufficientRowsError
        Fewer than three converged rows in the top decade.
    """
    ok = [r for r in rows if r.converged]
    if not ok:
        raise InsufficientRowsError("no converged sweep rows")
    top = max(r.beta for r in ok)
    use = [r for r in ok if r.beta >= top / 10]
    if len(use) < 3:
        raise InsufficientRowsError(f"need 3 converged rows in the top decade, have {len(use)}")
    beta = np.array([r.beta for r in use])
    y = np.array([r.lambda_over_beta for r in use])
    X = np.stack([np.ones_like(beta), 1.0 / beta], axis=1)
    return float(np.linalg.lstsq(X, y, rcond=None)[0][0])


def _row_cycles(A, phi, depth=None):
    d = working_depth(A, phi, depth)
    g = A.spec.graph(d)
    phi_d = phi.lift(d).values
    return d, [node_weight_cycle(g, A.row(i, d).values + phi_d) for i in range(len(A.y_table))]


def maxplus_G(A, phi, depth=None):
    """``Q(phi)`` as a depth-``m`` table over y-words."""
    _, cycles = _row_cycles(A, phi, depth)
    return XPotential(A.spec, A.y_depth, [c.value for c in cycles])


@dataclass(eq=False)
class ZeroTempResult:
    c_maxplus: float
    V: XPotential
    eigen_residual: float
    converged: bool
    iterations: int
    method: str
    c_extrapolated: float = None
    rows: list = field(default_factory=list, repr=False)

    def to_dict(self):
        return {
            "c_extrapolated": self.c_extrapolated,
            "c_maxplus": self.c_maxplus,
            "V": self.V.to_dict(),
            "eigen_residual": self.eigen_residual,
            "converged": self.converged,
            "iterations": self.iterations,
            "method": self.method,
        }


def additive_eigen(A, w0=None, tol=1e-10, max_iter=10000, V0=None, depth=None):
    """Additive eigenpair ``Q(V) = V + c`` by relative value iteration.

    Iterates ``V <- Q(V) - Q(V)(w0)``.  If the iterates enter a periodic orbit
    the average over one period is tried as ``V``.  Otherwise ``c`` falls back
    to the growth rate ``Q^n(V0)(w0) / n`` and the result is flagged
    ``converged=False``; ``c`` is still meaningful, ``V`` is not an
    eigenfunction.
    """
    spec = A.spec
    i0 = base_index(A, w0)
    V = V0 if V0 is not None else XPotential(spec, A.y_depth, np.zeros(len(A.y_table)))
    V = V - V.values[i0]
    history = [V.values]
    total = 0.0
    for it in range(1, max_iter + 1):
        q = maxplus_G(A, V, depth)
        c = q.values[i0]
        total += c
        new = q - c
        if np.max(np.abs(new.values - V.values)) <= tol:
            V = new
            break
        period = next(
            (len(history) - j for j in range(len(history) - 1, -1, -1)
             if np.max(np.abs(new.values - history[j])) <= tol),
            None,
        )
        if period is not None and period > 1:
            avg = XPotential(spec, A.y_depth, np.mean(history[-period:], axis=0))
            avg = avg - avg.values[i0]
            qa = maxplus_G(A, avg, depth)
            if np.ptp(qa.values - avg.values) <= 2 * tol:
                V = avg
                break
        history.append(new.values)
        history = history[-256:]
        V = new
    else:
        return ZeroTempResult(
            c_maxplus=float(total / max_iter),
            V=V,
            eigen_residual=float(np.ptp((maxplus_G(A, V, depth) - V).values) / 2),
            converged=False,
            iterations=max_iter,
            method="growth-rate",
        )
    q = maxplus_G(A, V, depth)
    c = float(q.values[i0] - V.values[i0])
    return ZeroTempResult(
        c_maxplus=c,
        V=V,
        eigen_residual=sup_norm(q - V - c),
        converged=True,
        iterations=it,
        method="value-iteration",
    )


def zero_temperature(A, grid=DEFAULT_GRID, tol=1e-10, w0=None, max_iter=10**5, depth=None):
    """Sweep, extrapolation and additive eigenpair in one call."""
    rows = beta_sweep(A, grid, tol, w0, max_iter, depth)
    res = additive_eigen(A, w0=w0, tol=tol, depth=depth)
    try:
        res.c_extrapolated = extrapolate_c(rows)
    except InsufficientRowsError:
        res.c_extrapolated = None
    res.rows = rows
    return res


def accumulation_values(A, V, depth=None):
    """``max_mu int (A(w, .) + V - V(w)) dmu`` for each y-word ``w``."""
    return maxplus_G(A, V, depth).values - V.values


def concentration(A, beta, V, w0=None, depth=None, tol=1e-10, fp=None):
    """Mass of each effective probability of ``beta A`` on its maximizing cycle.

    For every y-word ``w`` the maximizing cycle of ``A(w, .) + V`` is computed
    on the working block graph, and the stationary mass of ``mu_{w, beta A}``
    on the cycle's nodes is returned.
    """
    B = A.scaled(beta)
    if fp is None:
        fp = solve_fixed_point(B, w0=w0, tol=tol * max(1.0, beta * sup_norm(A)), depth=depth)
    d = max(working_depth(A, V, depth), fp.phi_plus.depth)
    fam = effective_family(B, fp, depth=d)
    _, cycles = _row_cycles(A, V, d)
    masses = []
    for mu, cyc in zip(fam.measures, cycles):
        masses.append(float(mu.pi[list(set(cyc.cycle))].sum()))
    return np.array(masses), cycles
