"""Subshifts of finite type, their allowed words and block graphs.

Letters are the integers ``1..r``.  A word is a tuple of letters.  Because the
transition matrix is symmetric, one word table serves both the future space
(words read ``x0, x1, ...``) and the past space (words read from the junction
outwards, ``y0, y1, ...``).

The metric base ``lam`` only enters distances and Lipschitz constants; it
never changes pressures, measures or cycle values.
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import (
    BadLambdaError,
    DepthMismatchError,
    DepthTooLargeError,
    ModelError,
    NonSymmetricError,
    ReducibleError,
)

DEFAULT_LAMBDA = 0.5
DEFAULT_WORD_CAP = 10**6


@dataclass(frozen=True, eq=False)
class SubshiftSpec:
    """Alphabet size, symmetric irreducible 0/1 matrix and metric base.

    Use :func:`build_sft` to construct a validated instance.
    """

    r: int
    M: np.ndarray
    lam: float = DEFAULT_LAMBDA
    word_cap: int = DEFAULT_WORD_CAP
    _cache: dict = field(default_factory=dict, repr=False)

    def allowed(self, a, b):
        """Whether letter ``b`` may follow letter ``a``."""
        return bool(self.M[a - 1, b - 1])

    def is_allowed(self, word):
        return all(self.M[a - 1, b - 1] for a, b in zip(word, word[1:]))

    def words(self, k):
        key = ("words", k)
        if key not in self._cache:
            self._cache[key] = enumerate_words(self, k)
        return self._cache[key]

    def graph(self, k):
        key = ("graph", k)
        if key not in self._cache:
            self._cache[key] = block_graph(self, k)
        return self._cache[key]


@dataclass(frozen=True, eq=False)
class WordTable:
    """All allowed words of one depth, in lexicographic order."""

    depth: int
    words: tuple
    index: dict
    letters: np.ndarray  # (N, depth) array of 0-based letters

    def __len__(self):
        return len(self.words)

    def __iter__(self):
        return iter(self.words)

    def __getitem__(self, i):
        return self.words[i]

    def ordinal(self, word):
        return self.index[tuple(word)]

    def prefix_map(self, table):
        """Ordinal in ``table`` of each word's prefix (``table`` must be shallower)."""
        if table.depth > self.depth:
            raise DepthMismatchError(
                f"cannot take depth-{table.depth} prefixes of depth-{self.depth} words"
            )
        return np.array([table.index[w[: table.depth]] for w in self.words], dtype=np.intp)


@dataclass(frozen=True, eq=False)
class BlockGraph:
    """Shift-successor graph on the allowed words of one depth.

    ``edges`` is an ``(E, 2)`` array of ordinals sorted by source then target.
    """

    depth: int
    nodes: WordTable
    edges: np.ndarray
    out_starts: np.ndarray
    in_order: np.ndarray
    in_starts: np.ndarray

    @property
    def n_nodes(self):
        return len(self.nodes)

    @property
    def src(self):
        return self.edges[:, 0]

    @property
    def dst(self):
        return self.edges[:, 1]

    def adjacency(self):
        adj = np.zeros((self.n_nodes, self.n_nodes), dtype=bool)
        adj[self.edges[:, 0], self.edges[:, 1]] = True
        return adj


def build_sft(r, M, lam=DEFAULT_LAMBDA, word_cap=DEFAULT_WORD_CAP):
    """Validate and build a :class:`SubshiftSpec`.

    Parameters
    ----------
    r : int
        Alphabet size, at least 2.
    M : array_like
        ``r x r`` transition matrix with entries in {0, 1}.
    lam : float
        Metric base in (0, 1).

    Raises
    ------
    NonSymmetricError, ReducibleError, BadLambdaError, ModelError
    """
    r = int(r)
    if r < 2:
        raise ModelError(f"alphabet size must be at least 2, got {r}")
    M = np.asarray(M)
    if M.shape != (r, r):
        raise ModelError(f"M must be {r}x{r}, got shape {M.shape}")
    if not np.all((M == 0) | (M == 1)):
        raise ModelError("M entries must be 0 or 1")
    M = M.astype(np.int8)
    if not np.array_equal(M, M.T):
        raise NonSymmetricError("M is not symmetric")
    if not is_irreducible(M):
        raise ReducibleError("M is reducible")
    lam = float(lam)
    if not 0.0 < lam < 1.0:
        raise BadLambdaError(f"lambda must lie in (0, 1), got {lam}")
    M.setflags(write=False)
    return SubshiftSpec(r=r, M=M, lam=lam, word_cap=int(word_cap))


def is_irreducible(M):
    """Boolean reachability through powers of ``I + M`` up to ``r``."""
    B = np.asarray(M, dtype=bool)
    r = B.shape[0]
    one_step = (np.eye(r, dtype=bool) | B).astype(np.int64)
    reach = one_step.copy()
    for _ in range(r - 1):
        reach = ((reach @ one_step) > 0).astype(np.int64)
    return bool(reach.all())


def enumerate_words(spec, k):
    """All allowed words of depth ``k``, lexicographically sorted."""
    k = int(k)
    if k < 1:
        raise ValueError(f"depth must be at least 1, got {k}")
    if spec.r**k > spec.word_cap:
        raise DepthTooLargeError(
            f"r^k = {spec.r}^{k} exceeds the word cap {spec.word_cap}"
        )
    words = [(a,) for a in range(1, spec.r + 1)]
    for _ in range(k - 1):
        words = [
            w + (b,) for w in words for b in range(1, spec.r + 1) if spec.M[w[-1] - 1, b - 1]
        ]
    words = tuple(words)
    letters = np.array(words, dtype=np.intp).reshape(len(words), k) - 1
    letters.setflags(write=False)
    return WordTable(depth=k, words=words, index={w: i for i, w in enumerate(words)}, letters=letters)


def block_graph(spec, k):
    """Depth-``k`` block graph: ``w -> w[1:] + (b,)`` whenever ``M(w[-1], b) = 1``."""
    table = spec.words(k)
    edges = []
    for i, w in enumerate(table.words):
        tail = w[1:]
        for b in range(1, spec.r + 1):
            if spec.M[w[-1] - 1, b - 1]:
                edges.append((i, table.index[tail + (b,)]))
    edges = np.array(sorted(edges), dtype=np.intp).reshape(-1, 2)
    n = len(table)
    out_starts = np.searchsorted(edges[:, 0], np.arange(n))
    in_order = np.lexsort((edges[:, 0], edges[:, 1]))
    in_starts = np.searchsorted(edges[in_order, 1], np.arange(n))
    for arr in (edges, out_starts, in_order, in_starts):
        arr.setflags(write=False)
    return BlockGraph(
        depth=k,
        nodes=table,
        edges=edges,
        out_starts=out_starts,
        in_order=in_order,
        in_starts=in_starts,
    )


def first_disagreement(w, v):
    """Index of the first differing letter, or ``len(w)`` if the words agree."""
    for j, (a, b) in enumerate(zip(w, v)):
        if a != b:
            return j
    return len(w)


def word_distance(w, v, lam):
    """``lam**j`` with ``j`` the first disagreement; ``lam**depth`` for equal words."""
    if len(w) != len(v):
        raise DepthMismatchError(f"words of depths {len(w)} and {len(v)}")
    return lam ** first_disagreement(w, v)


def canonical_extension(spec, word, length):
    """Deterministic allowed continuation of ``word`` to ``length`` letters.

    The word is repeated periodically; when its last letter cannot be followed
    by its first, the lexicographically first shortest connecting path is
    inserted so the result stays allowed.
    """
    word = tuple(word)
    if len(word) >= length:
        return word[:length]
    period = word + _connector(spec, word[-1], word[0])
    out = list(word)
    i = len(word)
    while len(out) < length:
        out.append(period[i % len(period)])
        i += 1
    return tuple(out)


def _connector(spec, a, b):
    """Shortest lexicographically-first letters ``c1..cj`` with ``a c1 .. cj b`` allowed."""
    if spec.M[a - 1, b - 1]:
        return ()
    frontier = [()]
    seen = {a}
    while frontier:
        nxt = []
        for path in frontier:
            last = path[-1] if path else a
            for c in range(1, spec.r + 1):
                if not spec.M[last - 1, c - 1] or c in seen:
                    continue
                if spec.M[c - 1, b - 1]:
                    return path + (c,)
                seen.add(c)
                nxt.append(path + (c,))
        frontier = nxt
    raise ModelError("no connecting path; M is reducible")  # pragma: no cover


def parse_word(text):
    """Digit string ``"121"`` to the word ``(1, 2, 1)``."""
    if not text or not text.isdigit() or "0" in text:
        raise ValueError(f"not a word: {text!r}")
    return tuple(int(ch) for ch in text)


def format_word(word):
    return "".join(str(a) for a in word)
