"""Locally constant potentials, observables on pairs, and their norms.

An :class:`XPotential` is a function of the first ``depth`` letters of a
sequence, stored as one value per allowed word.  A :class:`PairPotential` is a
finite-range observable ``A(y, x)`` on past/future pairs, stored as a
``(#y-words, #x-words)`` table.  With ``masked=True`` the table is read as
``A(y, x) * M(y0, x0)``, so incompatible pairs contribute 0.
"""

from dataclasses import dataclass

import numpy as np

from .errors import DepthMismatchError, MissingEntryError, NonFiniteError
from .sft import canonical_extension


@dataclass(frozen=True, eq=False)
class XPotential:
    """One real value per allowed word of ``depth`` letters."""

    spec: object
    depth: int
    values: np.ndarray

    def __post_init__(self):
        values = np.array(self.values, dtype=float)
        if values.shape != (len(self.spec.words(self.depth)),):
            raise DepthMismatchError(
                f"expected {len(self.spec.words(self.depth))} values for depth {self.depth}, "
                f"got shape {values.shape}"
            )
        if not np.all(np.isfinite(values)):
            raise NonFiniteError("potential values must be finite")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    @property
    def table(self):
        return self.spec.words(self.depth)

    def at(self, word):
        """Value on ``word`` (its depth-``self.depth`` prefix is used)."""
        word = tuple(word)
        if len(word) < self.depth:
            raise DepthMismatchError(
                f"word of length {len(word)} is shorter than potential depth {self.depth}"
            )
        return float(self.values[self.table.index[word[: self.depth]]])

    def lift(self, k):
        """Values re-indexed by the allowed words of depth ``k >= depth``."""
        if k < self.depth:
            raise DepthMismatchError(f"cannot evaluate depth-{self.depth} potential on depth {k}")
        if k == self.depth:
            return self
        idx = self.spec.words(k).prefix_map(self.table)
        return XPotential(self.spec, k, self.values[idx])

    def _coerce(self, other):
        if isinstance(other, XPotential):
            k = max(self.depth, other.depth)
            return self.lift(k), other.lift(k).values
        return self, float(other)

    def __add__(self, other):
        me, val = self._coerce(other)
        return XPotential(self.spec, me.depth, me.values + val)

    __radd__ = __add__

    def __sub__(self, other):
        me, val = self._coerce(other)
        return XPotential(self.spec, me.depth, me.values - val)

    def __rsub__(self, other):
        return XPotential(self.spec, self.depth, float(other) - self.values)

    def __mul__(self, scalar):
        return XPotential(self.spec, self.depth, self.values * float(scalar))

    __rmul__ = __mul__

    def __truediv__(self, scalar):
        return XPotential(self.spec, self.depth, self.values / float(scalar))

    def __neg__(self):
        return XPotential(self.spec, self.depth, -self.values)

    def to_dict(self):
        return {"".join(map(str, w)): float(v) for w, v in zip(self.table.words, self.values)}


def make_xpotential(spec, depth, values):
    """Build an :class:`XPotential` from an array or a ``{word: value}`` mapping."""
    if isinstance(values, dict):
        table = spec.words(depth)
        out = np.empty(len(table))
        for i, w in enumerate(table.words):
            try:
                out[i] = values[w]
            except KeyError:
                raise MissingEntryError(f"no value for word {w}") from None
        values = out
    return XPotential(spec, depth, values)


def constant(spec, c, depth=1):
    return XPotential(spec, depth, np.full(len(spec.words(depth)), float(c)))


@dataclass(frozen=True, eq=False)
class PairPotential:
    """Finite-range observable on compatible past/future pairs."""

    spec: object
    y_depth: int
    x_depth: int
    values: np.ndarray
    masked: bool = False

    def __post_init__(self):
        values = np.array(self.values, dtype=float)
        shape = (len(self.spec.words(self.y_depth)), len(self.spec.words(self.x_depth)))
        if values.shape != shape:
            raise MissingEntryError(f"table has shape {values.shape}, expected {shape}")
        if not np.all(np.isfinite(values)):
            raise NonFiniteError("observable values must be finite")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "masked", bool(self.masked))

    @property
    def y_table(self):
        return self.spec.words(self.y_depth)

    @property
    def x_table(self):
        return self.spec.words(self.x_depth)

    @property
    def compatible(self):
        """Boolean ``M(y0, x0)`` for every table entry."""
        y0 = self.y_table.letters[:, 0]
        x0 = self.x_table.letters[:, 0]
        return self.spec.M[np.ix_(y0, x0)].astype(bool)

    @property
    def effective(self):
        """Table as read by every consumer: masked entries set to 0."""
        if not self.masked:
            return self.values
        return np.where(self.compatible, self.values, 0.0)

    def with_mask(self, masked=True):
        return PairPotential(self.spec, self.y_depth, self.x_depth, self.values, masked)

    def scaled(self, beta):
        return PairPotential(self.spec, self.y_depth, self.x_depth, self.values * float(beta), self.masked)

    def row(self, i, depth=None):
        """``x -> A(w_i, x)`` (masked) as an XPotential, optionally lifted to ``depth``."""
        f = XPotential(self.spec, self.x_depth, self.effective[i])
        return f if depth is None else f.lift(depth)

    def value(self, y, x):
        y, x = tuple(y), tuple(x)
        i = self.y_table.index[y[: self.y_depth]]
        j = self.x_table.index[x[: self.x_depth]]
        return float(self.effective[i, j])


def make_pair_potential(spec, m, n, table, masked=False):
    """Build a :class:`PairPotential` of depths ``(m, n)``.

    ``table`` is either an ``(#y-words, #x-words)`` array or a mapping
    ``{(y_word, x_word): value}`` covering every allowed pair.

    Raises
    ------
    MissingEntryError
        A pair is absent from the mapping or the array has the wrong shape.
    NonFiniteError
        A value is NaN or infinite.
    """
    ys, xs = spec.words(m), spec.words(n)
    if isinstance(table, dict):
        arr = np.empty((len(ys), len(xs)))
        for i, y in enumerate(ys.words):
            for j, x in enumerate(xs.words):
                try:
                    arr[i, j] = table[(y, x)]
                except KeyError:
                    raise MissingEntryError(f"no value for pair y={y}, x={x}") from None
        table = arr
    return PairPotential(spec, int(m), int(n), table, masked)


# ---------------------------------------------------------------------------
# norms


@dataclass(frozen=True)
class NormReport:
    sup_norm: float
    lip: float
    quotient: float


def sup_norm(f):
    vals = f.effective if isinstance(f, PairPotential) else f.values
    return float(np.max(np.abs(vals)))


def quotient_norm(f):
    """``inf_gamma ||f + gamma||_0``, i.e. half the oscillation of the table."""
    vals = f.effective if isinstance(f, PairPotential) else np.asarray(getattr(f, "values", f))
    return float(0.5 * (np.max(vals) - np.min(vals)))


def _oscillation_by_group(vals, groups):
    n_groups = int(groups.max()) + 1
    hi = np.full(n_groups, -np.inf)
    lo = np.full(n_groups, np.inf)
    np.maximum.at(hi, groups, vals)
    np.minimum.at(lo, groups, vals)
    return float(np.max(hi - lo))


def lip_constant(f, lam=None):
    """Exact Lipschitz constant of a locally constant potential.

    For an :class:`XPotential` this is the maximum over word pairs first
    disagreeing at position ``j`` of ``|f(w) - f(w')| / lam**j``.  For a
    :class:`PairPotential` the pair metric is the max of the past and future
    distances, and the masked table is used when ``masked`` is set.

    Parameters
    ----------
    f : XPotential or PairPotential
    lam : float, optional
        Metric base; defaults to ``f.spec.lam``.
    """
    lam = f.spec.lam if lam is None else float(lam)
    if isinstance(f, PairPotential):
        vals = f.effective.ravel()
        ylet, xlet = f.y_table.letters, f.x_table.letters
        ny, nx = len(ylet), len(xlet)
        best = 0.0
        for j in range(max(f.y_depth, f.x_depth)):
            gy = _prefix_groups(ylet, min(j, f.y_depth))
            gx = _prefix_groups(xlet, min(j, f.x_depth))
            groups = (gy[:, None] * (int(gx.max()) + 1) + gx[None, :]).reshape(ny * nx)
            best = max(best, _oscillation_by_group(vals, groups) / lam**j)
        return best
    vals = f.values
    best = 0.0
    for j in range(f.depth):
        best = max(best, _oscillation_by_group(vals, _prefix_groups(f.table.letters, j)) / lam**j)
    return best


def _prefix_groups(letters, j):
    """Dense group id of each row's length-``j`` prefix."""
    if j == 0:
        return np.zeros(len(letters), dtype=np.intp)
    _, ids = np.unique(letters[:, :j], axis=0, return_inverse=True)
    return ids.reshape(-1).astype(np.intp)


def norm_report(f, lam=None):
    return NormReport(sup_norm(f), lip_constant(f, lam), quotient_norm(f))


def lip_bound(A):
    """``||A||_0 + Lip(A)``, the a priori Lipschitz bound on every output of G+."""
    return sup_norm(A) + lip_constant(A)


# ---------------------------------------------------------------------------
# truncation and builtin families


def truncate_to_range(spec, sampler, m, n, lip_A, lam=None, masked=False, horizon=64):
    """Tabulate a general Lipschitz observable at finite range ``(m, n)``.

    ``sampler(y, x)`` is called once per allowed pair of words with the
    canonical allowed extensions of both words to ``horizon`` letters (see
    :func:`effpot.sft.canonical_extension`).  Every point of the cylinder
    pair lies within ``lam**min(m, n)`` of the sampled point, hence the
    returned bound ``lip_A * lam**min(m, n)``.

    Returns
    -------
    (PairPotential, float)
    """
    lam = spec.lam if lam is None else float(lam)
    ys, xs = spec.words(m), spec.words(n)
    horizon = max(horizon, m, n)
    y_ext = [canonical_extension(spec, y, horizon) for y in ys.words]
    x_ext = [canonical_extension(spec, x, horizon) for x in xs.words]
    table = np.empty((len(ys), len(xs)))
    for i, y in enumerate(y_ext):
        for j, x in enumerate(x_ext):
            v = float(sampler(y, x))
            if not np.isfinite(v):
                raise NonFiniteError(f"sampler returned {v} at y={ys[i]}, x={xs[j]}")
            table[i, j] = v
    return PairPotential(spec, m, n, table, masked), float(lip_A) * lam ** min(m, n)


BUILTINS = ("zero", "x_only", "y_only", "diagonal", "sum")


def builtin_potential(spec, name, masked=False, **params):
    """Depth-(1, 1) observable families used throughout the tests and demos.

    ``zero``; ``x_only(values)``: ``A = values[x0]``; ``y_only(values)``:
    ``A = values[y0]``; ``diagonal(eps)``: ``A = eps * [y0 == x0]``;
    ``sum(x_values, y_values)``: ``A = x_values[x0] + y_values[y0]``.
    """
    r = spec.r

    def _vec(key):
        v = np.asarray(params[key], dtype=float)
        if v.shape != (r,):
            raise ValueError(f"{name}.{key} must have {r} entries")
        return v

    if name == "zero":
        table = np.zeros((r, r))
    elif name == "x_only":
        table = np.tile(_vec("values"), (r, 1))
    elif name == "y_only":
        table = np.tile(_vec("values")[:, None], (1, r))
    elif name == "diagonal":
        table = float(params.get("eps", 1.0)) * np.eye(r)
    elif name == "sum":
        table = _vec("x_values")[None, :] + _vec("y_values")[:, None]
    else:
        raise ValueError(f"unknown builtin potential {name!r}; choose from {BUILTINS}")
    return PairPotential(spec, 1, 1, table, masked)
