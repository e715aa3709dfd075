"""Ergodic optimization at finite range and the ergodic transshipment program.

Contents: Karp's maximum mean cycle, calibrated sub-actions by Lax-Oleinik
value iteration, the cost ``C(y, x) = A(y, x) + U_y(x) - U_y(sigma x)``, the
equal-marginal transshipment LP, and the check that the additive eigenvalue,
the LP value and the cycle value of ``C`` coincide.

Finite model: y-words have depth ``m`` and x-words depth ``d + 1``, where
``d`` is the working depth of the sub-actions, so ``U(sigma x)`` is defined.
A pair is admissible when ``M(y0, x0) = 1``.
"""

from dataclasses import dataclass, field
from math import fsum

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components

from . import simplex
from .errors import (
    NotStronglyConnectedError,
    VerificationError,
    WrongCError,
)
from .potentials import XPotential
from .sft import format_word

SUBACTION_TOL = 1e-9


# ---------------------------------------------------------------------------
# maximum mean cycle


@dataclass(frozen=True)
class MaxMeanCycleResult:
    value: float
    cycle: tuple
    length: int


def _is_strongly_connected(n, edges):
    if n == 0:
        return False
    g = csr_matrix((np.ones(len(edges)), (edges[:, 0], edges[:, 1])), shape=(n, n))
    return connected_components(g, directed=True, connection="strong")[0] == 1


def _maxplus_matmul(X, W):
    return np.max(X[:, :, None] + W[None, :, :], axis=1)


def karp_max_mean_cycle(n_nodes, edges, weights):
    """Maximum mean cycle of a strongly connected weighted digraph.

    The value comes from Karp's recurrence on walks from node 0.  The witness
    is the shortest optimal cycle; ties are broken by the lexicographically
    smallest node sequence written from its smallest node.  The reported
    ``value`` is the correctly rounded mean of that cycle's weights.

    Parameters
    ----------
    n_nodes : int
    edges : (E, 2) array_like of int
    weights : (E,) array_like of float

    Raises
    ------
    NotStronglyConnectedError
    """
    n = int(n_nodes)
    edges = np.asarray(edges, dtype=np.intp).reshape(-1, 2)
    weights = np.asarray(weights, dtype=float)
    if not _is_strongly_connected(n, edges):
        raise NotStronglyConnectedError("graph is not strongly connected")
    W = np.full((n, n), -np.inf)
    np.maximum.at(W, (edges[:, 0], edges[:, 1]), weights)

    D = np.full((n + 1, n), -np.inf)
    D[0, 0] = 0.0
    for k in range(1, n + 1):
        D[k] = np.max(D[k - 1][:, None] + W, axis=0)
    best = -np.inf
    for v in range(n):
        if not np.isfinite(D[n, v]):
            continue
        ks = [k for k in range(n) if np.isfinite(D[k, v])]
        best = max(best, min((D[n, v] - D[k, v]) / (n - k) for k in ks))

    scale = max(1.0, float(np.max(np.abs(weights))))
    eps = 1e-11 * scale
    # shortest length carrying an optimal closed walk
    power = W.copy()
    length = 1
    while np.max(np.diag(power)) < length * (best - eps):
        power = _maxplus_matmul(power, W)
        length += 1
        if length > n:  # pragma: no cover - Karp guarantees a cycle of length <= n
            raise RuntimeError("no optimal cycle found")
    target = length * best - length * eps
    cycle = _lexicographic_cycle(W, length, target)
    value = fsum(W[a, b] for a, b in zip(cycle, cycle[1:] + cycle[:1])) / length
    return MaxMeanCycleResult(value=value, cycle=tuple(int(v) for v in cycle), length=length)


def _lexicographic_cycle(W, length, target):
    n = W.shape[0]
    for v in range(n):
        sub = W.copy()
        sub[:v, :] = -np.inf
        sub[:, :v] = -np.inf
        # reach[j][u] = best walk of exactly j edges from u to v inside the subgraph
        reach = np.full((length + 1, n), -np.inf)
        reach[0, v] = 0.0
        for j in range(1, length + 1):
            reach[j] = np.max(sub + reach[j - 1][None, :], axis=1)
        if reach[length, v] < target:
            continue
        cycle, cur, acc = [v], v, 0.0
        for step in range(1, length):
            remaining = length - step
            for u in range(v + 1, n):
                if acc + sub[cur, u] + reach[remaining, u] >= target:
                    acc += sub[cur, u]
                    cycle.append(u)
                    cur = u
                    break
        return cycle
    raise RuntimeError("no optimal cycle found")  # pragma: no cover


def node_weight_cycle(graph, psi_values):
    """Max mean cycle of node weights pushed onto out-edges of a block graph."""
    psi_values = np.asarray(psi_values, dtype=float)
    return karp_max_mean_cycle(graph.n_nodes, graph.edges, psi_values[graph.src])


# ---------------------------------------------------------------------------
# sub-actions


@dataclass(eq=False)
class SubAction:
    """Sub-action ``U`` for a potential ``psi`` with ergodic maximum ``c``.

    ``slack[e] = c - (psi(w) + U(w) - U(w'))`` on every block-graph edge
    ``e = (w, w')``; ``equality_set`` lists the edges with ``|slack| <= 1e-9``.
    """

    U: XPotential
    c: float
    calibration_residual: float
    slack: np.ndarray
    equality_set: np.ndarray
    cycle: MaxMeanCycleResult
    calibrated: bool
    converged: bool
    iterations: int

    @property
    def min_slack(self):
        return float(self.slack.min())


def _lax_oleinik(graph, weights):
    """``(T U)(z) = max over predecessors w of z of weights(w) + U(w)``."""
    src = graph.src[graph.in_order]

    def T(U):
        return np.maximum.reduceat((weights + U)[src], graph.in_starts)

    return T


def calibrated_subaction(spec, psi, c, w0=None, tol=1e-12, max_iter=10000, check_tol=1e-9):
    """Calibrated sub-action of ``psi`` by relative value iteration.

    Iterates ``U <- T U - (T U)(w0)`` with ``T`` the Lax-Oleinik operator of
    ``psi - c``.  When the iterates fall into a periodic orbit (the critical
    cycles have period > 1) they are averaged over one period; the average is
    always a sub-action and usually a fixed point.  If neither happens within
    ``max_iter`` the last iterate is repaired by ``U <- max(U, T U)``.

    Raises
    ------
    WrongCError
        ``c`` differs from the maximum mean cycle of ``psi`` by more than
        ``check_tol``.
    """
    g = spec.graph(psi.depth)
    vals = psi.values
    cyc = node_weight_cycle(g, vals)
    if abs(cyc.value - c) > check_tol:
        raise WrongCError(f"c = {c!r} but the maximum cycle mean is {cyc.value!r}")
    i0 = 0 if w0 is None else g.nodes.index[tuple(w0)[: psi.depth]]
    T = _lax_oleinik(g, vals - c)

    U = np.zeros(g.n_nodes)
    history = [U]
    converged = False
    it = 0
    for it in range(1, max_iter + 1):
        TU = T(U)
        new = TU - TU[i0]
        if np.max(np.abs(new - U)) <= tol:
            U, converged = new, True
            break
        period = next(
            (len(history) - j for j in range(len(history) - 1, -1, -1)
             if np.max(np.abs(new - history[j])) <= tol),
            None,
        )
        if period is not None:
            U = np.mean(history[-period:], axis=0)
            U = U - U[i0]
            converged = True
            break
        history.append(new)
        history = history[-256:]
        U = new
    if not converged:
        for _ in range(g.n_nodes + 1):
            U = np.maximum(U, T(U))
        U = U - U[i0]
    resid = float(np.max(np.abs(T(U) - U)))
    slack = c - (vals[g.src] + U[g.src] - U[g.dst])
    return SubAction(
        U=XPotential(spec, psi.depth, U),
        c=float(c),
        calibration_residual=resid,
        slack=slack,
        equality_set=g.edges[np.abs(slack) <= check_tol],
        cycle=cyc,
        calibrated=resid <= check_tol,
        converged=converged,
        iterations=it,
    )


# ---------------------------------------------------------------------------
# cost table and transshipment


@dataclass(eq=False)
class CostTable:
    """``C`` over admissible (y-word, x-word) pairs; NaN marks inadmissible ones."""

    spec: object
    y_depth: int
    x_depth: int
    C: np.ndarray

    @property
    def admissible(self):
        return np.isfinite(self.C)

    @property
    def y_table(self):
        return self.spec.words(self.y_depth)

    @property
    def x_table(self):
        return self.spec.words(self.x_depth)

    def x_prefix(self):
        """Ordinal of each x-word's depth-``y_depth`` prefix among the y-words."""
        return self.x_table.prefix_map(self.y_table)


def cost_table_from_array(spec, y_depth, x_depth, C, admissible=None):
    C = np.array(C, dtype=float)
    if admissible is not None:
        C[~np.asarray(admissible, dtype=bool)] = np.nan
    return CostTable(spec, int(y_depth), int(x_depth), C)


def subaction_family(A, V, c, depth=None, w0=None, per_word_c=False):
    """Sub-actions of ``A(w, .) + V - V(w)`` for every y-word ``w``.

    With ``per_word_c`` the maximum mean of each potential is used instead of
    the common ``c`` (needed when ``V`` is not an exact eigenfunction).
    """
    d = max(A.y_depth, A.x_depth, V.depth, depth or 0)
    g = A.spec.graph(d)
    family = []
    for i, w in enumerate(A.y_table.words):
        psi = XPotential(A.spec, d, A.row(i, d).values + V.lift(d).values - V.at(w))
        ci = node_weight_cycle(g, psi.values).value if per_word_c else c
        family.append(calibrated_subaction(A.spec, psi, ci, w0=w0))
    return family


def build_cost_table(A, V, c, subactions):
    """Exact cost ``C(y, x) = A(y, x) + U_y(x) - U_y(sigma x)`` on admissible pairs.

    ``V`` and ``c`` are not needed to form ``C`` and are only used to check
    the bound ``C(y, x) + V(x) - V(y) <= c``.
    """
    spec = A.spec
    d = subactions[0].U.depth
    ys = A.y_table
    xs = spec.words(d + 1)
    head = xs.prefix_map(spec.words(d))
    tail_table = spec.words(d)
    tail = np.array([tail_table.index[x[1:]] for x in xs.words], dtype=np.intp)
    a_idx = xs.prefix_map(A.x_table)
    compat = spec.M[np.ix_(ys.letters[:, 0], xs.letters[:, 0])].astype(bool)
    C = np.full((len(ys), len(xs)), np.nan)
    for i in range(len(ys)):
        U = subactions[i].U.values
        row = A.effective[i, a_idx] + U[head] - U[tail]
        C[i, compat[i]] = row[compat[i]]
    table = CostTable(spec, A.y_depth, d + 1, C)
    table.bound_violation = float(
        np.nanmax(C + V.lift(A.y_depth).values[table.x_prefix()][None, :] - V.values[:, None]) - c
    )
    return table


@dataclass(eq=False)
class TransshipmentResult:
    kappa: float
    eta: np.ndarray
    marginal_gap: float
    lp_iterations: int
    support: list = field(default_factory=list)

    def to_dict(self):
        return {
            "kappa": self.kappa,
            "marginal_gap": self.marginal_gap,
            "lp_iterations": self.lp_iterations,
            "support": [{"y": y, "x": x, "mass": m} for y, x, m in self.support],
        }


def _marginals(costs, eta):
    prefix = costs.x_prefix()
    y_marg = np.nansum(eta, axis=1)
    x_marg = np.bincount(prefix, weights=np.nansum(eta, axis=0), minlength=len(costs.y_table))
    return y_marg, x_marg


def transshipment_lp(costs, tol=1e-12):
    """Ergodic transshipment value on the finite model.

    Maximizes ``sum C eta`` over probabilities ``eta`` on admissible pairs whose
    y-marginal equals the depth-``m`` prefix marginal of the x-words.

    Raises
    ------
    InfeasibleError, UnboundedError
        From the simplex; neither can occur for a well-formed table.
    """
    ii, jj = np.nonzero(costs.admissible)
    if ii.size == 0:
        raise ValueError("cost table has no admissible pair")
    prefix = costs.x_prefix()
    ny = len(costs.y_table)
    n_var = ii.size
    A_eq = np.zeros((ny + 1, n_var))
    A_eq[0] = 1.0
    np.add.at(A_eq, (1 + ii, np.arange(n_var)), 1.0)
    np.add.at(A_eq, (1 + prefix[jj], np.arange(n_var)), -1.0)
    b_eq = np.zeros(ny + 1)
    b_eq[0] = 1.0
    res = simplex.maximize(costs.C[ii, jj], A_eq, b_eq, tol=tol)
    eta = np.zeros_like(costs.C)
    eta[ii, jj] = res.x
    y_marg, x_marg = _marginals(costs, eta)
    support = [
        (format_word(costs.y_table[i]), format_word(costs.x_table[j]), float(eta[i, j]))
        for i, j in zip(*np.nonzero(eta > 0))
    ]
    return TransshipmentResult(
        kappa=res.value,
        eta=eta,
        marginal_gap=float(np.abs(y_marg - x_marg).sum()),
        lp_iterations=res.iterations,
        support=support,
    )


def pair_graph(costs):
    """Graph on y-words: ``u -> v`` weighted by the best admissible ``C(u, x)``, ``x`` extending ``v``."""
    prefix = costs.x_prefix()
    ny = len(costs.y_table)
    W = np.full((ny, ny), -np.inf)
    for i in range(ny):
        row = costs.C[i]
        ok = np.isfinite(row)
        np.maximum.at(W[i], prefix[ok], row[ok])
    src, dst = np.nonzero(np.isfinite(W))
    return ny, np.stack([src, dst], axis=1), W[src, dst]


def pair_graph_cycle(costs):
    return karp_max_mean_cycle(*pair_graph(costs))


def support_cycles(costs, result, tol=1e-12):
    """Decompose the LP optimum into cycles of the y-word graph.

    Returns a list of ``(cycle_of_y_words, mass)``; raises ``VerificationError`` if
    the flow is not conserved or leaves an undecomposable remainder.
    """
    prefix = costs.x_prefix()
    ny = len(costs.y_table)
    flow = np.zeros((ny, ny))
    ii, jj = np.nonzero(result.eta > tol)
    np.add.at(flow, (ii, prefix[jj]), result.eta[ii, jj])
    if np.max(np.abs(flow.sum(axis=1) - flow.sum(axis=0))) > 1e-9:
        raise VerificationError("support flow is not conserved")
    cycles = []
    remaining = flow.copy()
    while remaining.max() > tol:
        start = int(np.unravel_index(np.argmax(remaining), remaining.shape)[0])
        path, seen = [start], {start: 0}
        cur = start
        while True:
            nxt = int(np.argmax(remaining[cur]))
            if remaining[cur, nxt] <= tol:
                raise VerificationError("support is not a union of cycles")
            if nxt in seen:
                cyc = path[seen[nxt]:]
                break
            seen[nxt] = len(path)
            path.append(nxt)
            cur = nxt
        pairs = list(zip(cyc, cyc[1:] + cyc[:1]))
        mass = min(remaining[a, b] for a, b in pairs)
        for a, b in pairs:
            remaining[a, b] -= mass
        cycles.append((tuple(costs.y_table[v] for v in cyc), float(mass * len(cyc))))
    return cycles


# ---------------------------------------------------------------------------
# the identity c_A = kappa


@dataclass(eq=False)
class TripleEqualityReport:
    c_maxplus: float
    kappa: float
    cycle_value: float
    c_extrapolated: float
    lp_cycle_gap: float
    extrapolation_gap: float
    kappa_excess: float
    mode: str
    passed: bool
    transshipment: TransshipmentResult = None
    costs: CostTable = None

    def to_dict(self):
        return {
            "c_maxplus": self.c_maxplus,
            "kappa": self.kappa,
            "cycle_value": self.cycle_value,
            "c_extrapolated": self.c_extrapolated,
            "lp_cycle_gap": self.lp_cycle_gap,
            "extrapolation_gap": self.extrapolation_gap,
            "kappa_excess": self.kappa_excess,
            "mode": self.mode,
            "verdict": "pass" if self.passed else "fail",
        }


def verify_triple_equality(A, zt, depth=None, lp_tol=1e-9, extrap_tol=1e-3, strict=True):
    """Compare the additive eigenvalue, the LP value and the cycle value of ``C``.

    ``zt`` is a :class:`effpot.zerotemp.ZeroTempResult`.  The check requires
    ``|kappa - cycle_value| <= lp_tol`` and, when an extrapolated constant is
    available, ``|c_extrapolated - c_maxplus| <= extrap_tol``.  When the
    eigenfunction iteration did not converge the per-word maxima are used for
    the sub-actions and the verdict mode is ``"c-only"``.

    Raises
    ------
    VerificationError
        With ``strict`` and a failed comparison; ``exc.report`` has all values.
    """
    mode = "full" if zt.converged else "c-only"
    subs = subaction_family(A, zt.V, zt.c_maxplus, depth=depth, per_word_c=not zt.converged)
    costs = build_cost_table(A, zt.V, zt.c_maxplus, subs)
    lp = transshipment_lp(costs)
    cyc = pair_graph_cycle(costs)
    c_ex = zt.c_extrapolated
    extrap_gap = abs(c_ex - zt.c_maxplus) if c_ex is not None else float("nan")
    lp_gap = abs(lp.kappa - cyc.value)
    passed = lp_gap <= lp_tol and (c_ex is None or extrap_gap <= extrap_tol)
    report = TripleEqualityReport(
        c_maxplus=float(zt.c_maxplus),
        kappa=float(lp.kappa),
        cycle_value=float(cyc.value),
        c_extrapolated=None if c_ex is None else float(c_ex),
        lp_cycle_gap=float(lp_gap),
        extrapolation_gap=float(extrap_gap),
        kappa_excess=float(lp.kappa - zt.c_maxplus),
        mode=mode,
        passed=bool(passed),
        transshipment=lp,
        costs=costs,
    )
    if strict and not passed:
        raise VerificationError(
            f"triple equality failed: c={zt.c_maxplus!r}, kappa={lp.kappa!r}, "
            f"cycle={cyc.value!r}, extrapolated={c_ex!r}",
            report=report,
        )
    return report
