"""The operator G+, its fixed point (effective potential and constant), and
the family of effective probabilities.

For a finite-range observable ``A`` of depths ``(m, n)``,
``G+(phi)(y) = P_top(A(y, .) + phi)`` only depends on the first ``m`` letters
of ``y``, so every iterate after the first is a depth-``m`` table and the
fixed point is computed exactly on the finite model.
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import NoConvergenceError
from .potentials import XPotential, quotient_norm, sup_norm
from .transfer import (
    DEFAULT_MAX_ITER,
    DEFAULT_TOL,
    _perron,
    equilibrium,
    integrate,
    ks_entropy,
)


def working_depth(A, phi=None, depth=None):
    d = max(A.y_depth, A.x_depth)
    if phi is not None:
        d = max(d, phi.depth)
    if depth is not None:
        d = max(d, int(depth))
    return d


def base_index(A, w0=None):
    """Ordinal of the normalization word (default: lexicographically first y-word)."""
    if w0 is None:
        return 0
    w0 = tuple(w0)
    if len(w0) < A.y_depth:
        raise ValueError(f"base word {w0} shorter than y-depth {A.y_depth}")
    try:
        return A.y_table.index[w0[: A.y_depth]]
    except KeyError:
        raise ValueError(f"base word {w0} is not allowed") from None


def x_potential(A, i, phi, d):
    """``x -> A(w_i, x) M(w_i0, x0) + phi(x)`` on depth-``d`` words."""
    return XPotential(A.spec, d, A.row(i, d).values + phi.lift(d).values)


def apply_G_plus(A, phi, depth=None, tol=DEFAULT_TOL, max_iter=DEFAULT_MAX_ITER):
    """``G+(phi)`` as a depth-``m`` table over y-words.

    Each entry is the pressure of ``A(w, .) + phi`` computed on the block graph
    of the working depth ``max(m, n, depth(phi))``.

    Raises
    ------
    NoConvergenceError
        From the pressure solve; the message names the y-word.
    """
    d = working_depth(A, phi, depth)
    g = A.spec.graph(d)
    phi_d = phi.lift(d).values
    out = np.empty(len(A.y_table))
    for i, w in enumerate(A.y_table.words):
        psi = A.row(i, d).values + phi_d
        try:
            out[i] = _perron(g, psi, tol, max_iter)[0]
        except NoConvergenceError as exc:
            raise NoConvergenceError(f"pressure at y-word {w}: {exc}", exc.residual) from exc
    return XPotential(A.spec, A.y_depth, out)


@dataclass(eq=False)
class FixedPointResult:
    phi_plus: XPotential
    lambda_plus: float
    residual: float
    iterations: int
    contraction_trace: list
    converged: bool
    base_index: int = 0
    iterates: list = field(default_factory=list, repr=False)


def solve_fixed_point(
    A,
    w0=None,
    tol=1e-10,
    max_iter=DEFAULT_MAX_ITER,
    accel=False,
    phi0=None,
    depth=None,
    pressure_tol=DEFAULT_TOL,
    keep_history=False,
):
    """Effective potential and effective constant of ``A``.

    Iterates ``phi <- G+(phi) - G+(phi)(w0)`` from ``phi0`` (default 0)
    until the pair ``(phi, lambda = G+(phi)(w0))`` satisfies
    ``||G+(phi) - phi - lambda||_0 <= tol``.

    Parameters
    ----------
    A : PairPotential
    w0 : word, optional
        Normalization word, ``phi_plus(w0) = 0``.
    tol : float
        Sup-norm residual target.
    accel : bool
        Anderson-type extrapolation on the residual sequence, with a fallback
        to the plain step whenever it does not reduce the residual.
    phi0 : XPotential, optional
        Starting iterate.
    keep_history : bool
        Store every iterate in ``result.iterates``.

    Returns
    -------
    FixedPointResult

    Raises
    ------
    NoConvergenceError
        After ``max_iter`` iterations; ``exc.partial`` holds the last result.
    """
    spec = A.spec
    i0 = base_index(A, w0)
    phi = phi0 if phi0 is not None else XPotential(spec, A.y_depth, np.zeros(len(A.y_table)))

    def G(f):
        return apply_G_plus(A, f, depth, pressure_tol)

    g = G(phi)
    trace, history = [], [phi] if keep_history else []
    res = np.inf
    # Anderson memory: residuals and images of the normalized map
    mem_f, mem_x = [], []
    it = 0
    converged = False
    for it in range(1, int(max_iter) + 1):
        new = g - g.values[i0]
        if accel:
            f = (new - phi.lift(new.depth)).values if phi.depth <= new.depth else None
            if f is not None:
                mem_f.append(f)
                mem_x.append(new.values)
                mem_f, mem_x = mem_f[-4:], mem_x[-4:]
                if len(mem_f) >= 2:
                    dF = np.diff(np.array(mem_f), axis=0).T
                    dX = np.diff(np.array(mem_x), axis=0).T
                    gamma = np.linalg.lstsq(dF, f, rcond=None)[0]
                    cand = new.values - dX @ gamma
                    cand = cand - cand[i0]
                    g_cand = G(XPotential(spec, new.depth, cand))
                    res_cand = sup_norm(g_cand - g_cand.values[i0] - XPotential(spec, new.depth, cand))
                    if res_cand < res:
                        new = XPotential(spec, new.depth, cand)
                        g_new = g_cand
                        trace.append(quotient_norm(new - phi))
                        phi, g, res = new, g_new, res_cand
                        if keep_history:
                            history.append(phi)
                        if res <= tol:
                            converged = True
                            break
                        continue
                    mem_f, mem_x = mem_f[-1:], mem_x[-1:]
        g_new = G(new)
        res = sup_norm(g_new - g_new.values[i0] - new)
        trace.append(quotient_norm(new - phi))
        phi, g = new, g_new
        if keep_history:
            history.append(phi)
        if res <= tol:
            converged = True
            break
    result = FixedPointResult(
        phi_plus=phi,
        lambda_plus=float(g.values[i0]),
        residual=float(res),
        iterations=it,
        contraction_trace=trace,
        converged=converged,
        base_index=i0,
        iterates=history,
    )
    if not converged:
        raise NoConvergenceError(
            f"fixed point not reached in {max_iter} iterations (residual {res:.3e})",
            residual=float(res),
            partial=result,
        )
    return result


@dataclass(eq=False)
class EffectiveFamily:
    """Effective probability at each y-word and its defining-identity residual."""

    y_words: tuple
    measures: list
    residuals: np.ndarray

    def __getitem__(self, word):
        return self.measures[self.y_words.index(tuple(word))]


def effective_family(A, fp, depth=None, tol=DEFAULT_TOL):
    """Equilibrium states of ``A(w, .) + phi_plus`` for every y-word ``w``.

    The residual recorded for ``w`` is
    ``|int (A(w, .) + phi_plus) dmu_w + h(mu_w) - phi_plus(w) - lambda_plus|``.
    """
    phi = fp.phi_plus
    d = working_depth(A, phi, depth)
    measures, residuals = [], []
    for i, w in enumerate(A.y_table.words):
        psi = x_potential(A, i, phi, d)
        mu = equilibrium(A.spec, psi, tol)
        lhs = integrate(mu, psi) + ks_entropy(mu)
        measures.append(mu)
        residuals.append(abs(lhs - phi.at(w) - fp.lambda_plus))
    return EffectiveFamily(A.y_table.words, measures, np.array(residuals))


def contraction_probe(A, phi, psi, depth=None, tol=DEFAULT_TOL):
    """Distances before and after one application of G+.

    Returns
    -------
    (c_before, c_after, sup_before, sup_after)
    """
    Gphi = apply_G_plus(A, phi, depth, tol)
    Gpsi = apply_G_plus(A, psi, depth, tol)
    before = phi - psi
    after = Gphi - Gpsi
    return quotient_norm(before), quotient_norm(after), sup_norm(before), sup_norm(after)
