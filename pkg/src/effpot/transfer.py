"""Ruelle transfer matrices, pressure, equilibrium Markov measures and entropy.

Weight convention: on the depth-``k`` block graph the transfer matrix has
``L(w, w') = exp(psi(w))`` on every edge ``w -> w'`` (weight carried by the
source word) and 0 elsewhere.  The topological pressure of ``psi`` is the log
of the Perron root of ``L``.

Perron vectors are computed by power iteration on ``L + s I`` with ``s`` the
running Collatz-Wielandt estimate of the root; the shift makes the iteration
primitive even for periodic graphs.  The eigenvalue bracket
``min (Lv)/v <= rho <= max (Lv)/v`` is the stopping criterion.  When the
spread of ``psi`` exceeds :data:`LOG_DOMAIN_THRESHOLD` all vectors are kept
as logarithms.
"""

from dataclasses import dataclass

import numpy as np

from .errors import DepthMismatchError, DepthTooLargeError, NoConvergenceError
from .potentials import XPotential

LOG_DOMAIN_THRESHOLD = 200.0
DEFAULT_TOL = 1e-13
DEFAULT_MAX_ITER = 10**5


@dataclass(frozen=True, eq=False)
class TransferMatrix:
    depth: int
    entries: np.ndarray
    log_domain: bool


@dataclass(frozen=True, eq=False)
class PressureResult:
    """Perron data of a transfer matrix.

    ``log_right`` / ``log_left`` are normalized so their maximum is 0.
    ``residual`` is ``||L h - rho h||_inf / (rho ||h||_inf)``.
    """

    pressure: float
    log_right: np.ndarray
    log_left: np.ndarray
    iterations: int
    residual: float

    @property
    def right_vec(self):
        return np.exp(self.log_right)

    @property
    def left_vec(self):
        return np.exp(self.log_left)


@dataclass(frozen=True, eq=False)
class MarkovMeasure:
    """Stationary Markov measure on a block graph.

    ``p_edges`` holds the transition probabilities aligned with
    ``graph.edges``; ``log_p_edges`` keeps them without underflow.
    """

    graph: object
    pi: np.ndarray
    p_edges: np.ndarray
    log_p_edges: np.ndarray

    @property
    def depth(self):
        return self.graph.depth

    @property
    def P(self):
        n = self.graph.n_nodes
        P = np.zeros((n, n))
        P[self.graph.src, self.graph.dst] = self.p_edges
        return P

    def cylinder_mass(self, word):
        """Measure of the cylinder ``[word]`` for any word length."""
        word = tuple(word)
        k = self.depth
        table = self.graph.nodes
        if len(word) <= k:
            idx = [i for i, w in enumerate(table.words) if w[: len(word)] == word]
            return float(self.pi[idx].sum())
        logp = _edge_lookup(self.graph, self.log_p_edges)
        windows = [word[j : j + k] for j in range(len(word) - k + 1)]
        if any(w not in table.index for w in windows):
            return 0.0
        ids = [table.index[w] for w in windows]
        out = np.log(self.pi[ids[0]]) if self.pi[ids[0]] > 0 else -np.inf
        for a, b in zip(ids, ids[1:]):
            out += logp.get((a, b), -np.inf)
        return float(np.exp(out))


def _edge_lookup(graph, values):
    return {(int(a), int(b)): float(v) for (a, b), v in zip(graph.edges, values)}


# ---------------------------------------------------------------------------
# segment reductions over the edge list


def _seg_logsumexp(x, starts):
    m = np.maximum.reduceat(x, starts)
    seg = np.repeat(np.arange(len(starts)), np.diff(np.append(starts, len(x))))
    safe = np.where(np.isfinite(m), m, 0.0)
    return safe + np.log(np.add.reduceat(np.exp(x - safe[seg]), starts))


def _apply_right(graph, w, v, log_domain):
    """``(L v)(w) = exp(psi(w)) * sum_{w -> w'} v(w')``; ``w`` holds exp/psi weights."""
    if log_domain:
        return w + _seg_logsumexp(v[graph.dst], graph.out_starts)
    return w * np.add.reduceat(v[graph.dst], graph.out_starts)


def _apply_left(graph, w, v, log_domain):
    """``(v L)(w') = sum_{w -> w'} v(w) exp(psi(w))``."""
    src = graph.src[graph.in_order]
    if log_domain:
        return _seg_logsumexp((v + w)[src], graph.in_starts)
    return np.add.reduceat((v * w)[src], graph.in_starts)


def _perron(graph, psi, tol, max_iter, side="right", log_domain=None):
    """Shifted power iteration; returns ``(log_rho, log_vec, iterations, spread)``."""
    psi = np.asarray(psi, dtype=float)
    top = float(psi.max())
    spread_psi = float(psi.max() - psi.min())
    if log_domain is None:
        log_domain = spread_psi > LOG_DOMAIN_THRESHOLD
    scale = max(1.0, spread_psi)
    thresh = max(tol * scale, 64 * np.finfo(float).eps * max(1.0, abs(top), spread_psi))
    apply = _apply_right if side == "right" else _apply_left
    shifted = psi - top
    n = len(psi)
    if log_domain:
        w = shifted
        lv = np.zeros(n)
        for it in range(1, max_iter + 1):
            lLv = apply(graph, w, lv, True)
            lr = lLv - lv
            lo, hi = lr.min(), lr.max()
            if hi - lo <= thresh:
                return top + 0.5 * (lo + hi), lv, it, hi - lo
            lv = np.logaddexp(lLv, 0.5 * (lo + hi) + lv)
            lv -= lv.max()
    else:
        w = np.exp(shifted)
        v = np.ones(n)
        for it in range(1, max_iter + 1):
            Lv = apply(graph, w, v, False)
            ratio = Lv / v
            lo, hi = np.log(ratio.min()), np.log(ratio.max())
            if hi - lo <= thresh:
                return top + 0.5 * (lo + hi), np.log(v), it, hi - lo
            v = Lv + np.exp(0.5 * (lo + hi)) * v
            v /= v.max()
    raise NoConvergenceError(
        f"power iteration did not converge in {max_iter} iterations (spread {hi - lo:.3e})",
        residual=float(hi - lo),
    )


def _as_psi(spec, psi):
    if isinstance(psi, XPotential):
        return psi.depth, psi.values
    raise TypeError("psi must be an XPotential")


def transfer_matrix(spec, psi, log_domain=False):
    k, vals = _as_psi(spec, psi)
    g = spec.graph(k)
    if log_domain:
        L = np.full((g.n_nodes, g.n_nodes), -np.inf)
        L[g.src, g.dst] = vals[g.src]
    else:
        L = np.zeros((g.n_nodes, g.n_nodes))
        L[g.src, g.dst] = np.exp(vals[g.src])
    return TransferMatrix(depth=k, entries=L, log_domain=log_domain)


def log_perron_root(spec, psi, tol=DEFAULT_TOL, max_iter=DEFAULT_MAX_ITER):
    """Pressure only (right iteration); the fast path used by G+."""
    k, vals = _as_psi(spec, psi)
    return _perron(spec.graph(k), vals, tol, max_iter)[0]


def pressure(spec, psi, tol=DEFAULT_TOL, max_iter=DEFAULT_MAX_ITER):
    """Topological pressure of a locally constant potential.

    Parameters
    ----------
    spec : SubshiftSpec
    psi : XPotential
        Depth-``k`` potential; the depth-``k`` block graph is used.
    tol : float
        Relative bound on the Collatz-Wielandt spread (scaled by
        ``max(1, max psi - min psi)``).

    Returns
    -------
    PressureResult

    Raises
    ------
    NoConvergenceError
    """
    k, vals = _as_psi(spec, psi)
    g = spec.graph(k)
    log_rho, log_h, it_r, _ = _perron(g, vals, tol, max_iter, "right")
    _, log_l, it_l, _ = _perron(g, vals, tol, max_iter, "left")
    log_h = log_h - log_h.max()
    log_l = log_l - log_l.max()
    # relative residual of the right vector
    lLh = _apply_right(g, vals, log_h, True)
    h = np.exp(log_h)
    resid = float(np.max(h * np.abs(np.expm1(lLh - log_h - log_rho))))
    return PressureResult(float(log_rho), log_h, log_l, it_r + it_l, resid)


def stationary_distribution(graph, log_p_edges):
    """Stationary vector of an irreducible kernel by log-domain GTH elimination.

    Grassmann-Taksar-Heyman elimination is subtraction free; carrying it out on
    log-probabilities keeps transitions like ``exp(-4000)`` intact.
    """
    n = graph.n_nodes
    T = np.full((n, n), -np.inf)
    T[graph.src, graph.dst] = log_p_edges
    np.fill_diagonal(T, -np.inf)  # GTH never reads the diagonal
    for k in range(n - 1, 0, -1):
        s = np.logaddexp.reduce(T[k, :k])
        T[:k, k] -= s
        T[:k, :k] = np.logaddexp(T[:k, :k], T[:k, k][:, None] + T[k, :k][None, :])
    lpi = np.full(n, -np.inf)
    lpi[0] = 0.0
    for k in range(1, n):
        lpi[k] = np.logaddexp.reduce(lpi[:k] + T[:k, k])
    lpi -= np.logaddexp.reduce(lpi)
    return np.exp(lpi)


def markov_measure(graph, p_edges):
    """MarkovMeasure from transition probabilities on the edges of ``graph``."""
    p = np.asarray(p_edges, dtype=float)
    sums = np.add.reduceat(p, graph.out_starts)
    p = p / sums[graph.src]
    with np.errstate(divide="ignore"):
        lp = np.log(p)
    return MarkovMeasure(graph, stationary_distribution(graph, lp), p, lp)


def equilibrium(spec, psi, tol=DEFAULT_TOL, max_iter=DEFAULT_MAX_ITER):
    """Equilibrium state of ``psi`` as a Markov measure on its block graph.

    ``P(w, w') = L(w, w') h(w') / (rho h(w))`` with ``h`` the right Perron
    vector; the stationary vector is recomputed from ``P`` by GTH so that
    ``pi P = pi`` holds to rounding even at very large inverse temperature.
    """
    k, vals = _as_psi(spec, psi)
    g = spec.graph(k)
    _, log_h, _, _ = _perron(g, vals, tol, max_iter, "right")
    x = log_h[g.dst]
    lp = x - _seg_logsumexp(x, g.out_starts)[g.src]
    return MarkovMeasure(g, stationary_distribution(g, lp), np.exp(lp), lp)


def ks_entropy(mu):
    """``-sum_w pi(w) sum_w' P(w, w') log P(w, w')`` with ``0 log 0 = 0``."""
    p, lp = mu.p_edges, mu.log_p_edges
    terms = np.where(p > 0, p * np.where(np.isfinite(lp), lp, 0.0), 0.0)
    return float(-np.sum(mu.pi[mu.graph.src] * terms))


def integrate(mu, f):
    """``int f dmu`` for a potential of depth at most ``mu.depth + 1``."""
    k = mu.depth
    if f.depth <= k:
        vals = f.lift(k).values
        return float(np.dot(mu.pi, vals))
    if f.depth == k + 1:
        # an edge w -> w' is the (k+1)-word w + last letter of w'
        g = mu.graph
        words = g.nodes.words
        table = f.table
        idx = np.array([table.index[words[a] + words[b][-1:]] for a, b in g.edges])
        return float(np.sum(mu.pi[g.src] * mu.p_edges * f.values[idx]))
    raise DepthMismatchError(f"potential depth {f.depth} exceeds measure depth {k} + 1")


def gibbs_quotient_profile(spec, psi, mu, n_max, tol=DEFAULT_TOL):
    """Per-level ``(min, max)`` of ``mu[u] / exp(S psi(u) - (n + 1) P(psi))``.

    Level ``n`` uses every allowed word ``u`` spanning ``n`` steps of the
    depth-``k`` block graph (``n + k`` letters); ``S psi(u)`` sums ``psi``
    over the ``n + 1`` windows of ``u``, so the sum is exactly determined by
    the cylinder.  Levels run over ``k + 1 .. n_max``.

    Returns
    -------
    list of (n, min, max, min_mass)
    """
    k, vals = _as_psi(spec, psi)
    if mu.depth != k:
        raise DepthMismatchError("measure and potential depths differ")
    if n_max < k + 1:
        raise ValueError(f"n_max must be at least {k + 1}")
    if spec.r ** (n_max + k) > spec.word_cap:
        raise DepthTooLargeError(f"level {n_max} exceeds the word cap")
    P_top = pressure(spec, psi, tol).pressure
    g = mu.graph
    logP = np.full((g.n_nodes, g.n_nodes), -np.inf)
    logP[g.src, g.dst] = mu.log_p_edges
    with np.errstate(divide="ignore"):
        log_pi = np.log(mu.pi)
    # ordinal of a k-window from its base-r code
    lookup = np.full(spec.r**k, -1, dtype=np.intp)
    weights = spec.r ** np.arange(k - 1, -1, -1)
    lookup[g.nodes.letters @ weights] = np.arange(g.n_nodes)
    out = []
    for n in range(k + 1, n_max + 1):
        letters = spec.words(n + k).letters
        win = np.stack([lookup[letters[:, j : j + k] @ weights] for j in range(n + 1)], axis=1)
        log_mass = log_pi[win[:, 0]] + logP[win[:, :-1], win[:, 1:]].sum(axis=1)
        birkhoff = vals[win].sum(axis=1)
        q = log_mass - (birkhoff - (n + 1) * P_top)
        out.append((n, float(np.exp(q.min())), float(np.exp(q.max())), float(np.exp(log_mass.min()))))
    return out
