"""Orthogonal Weingarten calculus on pair partitions, up to eighth moments.

Covers enumeration of pair partitions, loop counts between two partitions,
the Gram matrix n^loop(sigma, tau), its (pseudo-)inverse, and the
fourth-order joint moment of a rotationally invariant vector.
"""

from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .errors import DegenerateSystem

MAX_HALF_ORDER = 4


@dataclass(frozen=True)
class PairPartition:
    """Partition of {1..2k} into k unordered pairs.

    Canonical form: a < b within each pair, pairs sorted by first element.
    """

    pairs: tuple

    @property
    def k(self) -> int:
        return len(self.pairs)

    def __str__(self) -> str:
        return "".join(f"({a}{b})" for a, b in self.pairs)


def enumerate_pair_partitions(k: int) -> list:
    """All (2k-1)!! pair partitions of {1..2k} in a fixed canonical order.

    The order pairs the smallest free index with each larger free index,
    ascending, then recurses; for k=2 this yields (12)(34), (13)(24),
    (14)(23).
    """
    if not 1 <= k <= MAX_HALF_ORDER:
        raise ValueError(f"half-order k must be in 1..{MAX_HALF_ORDER}, got {k}")
    out = []

    def rec(free, acc):
        if not free:
            out.append(PairPartition(pairs=tuple(acc)))
            return
        a = free[0]
        for b in free[1:]:
            rest = tuple(x for x in free if x != a and x != b)
            rec(rest, acc + [(a, b)])

    rec(tuple(range(1, 2 * k + 1)), [])
    return out


def loop_count(sigma: PairPartition, tau: PairPartition) -> int:
    """Connected components of the multigraph on {1..2k} whose edges are the
    pairs of both partitions.

    A pair present in both partitions contributes a double edge; multiplicity
    does not change connectivity, so only the union matters for the count.
    """
    if sigma.k != tau.k:
        raise ValueError("pair partitions have different half-orders")
    m = 2 * sigma.k
    parent = list(range(m + 1))

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for a, b in sigma.pairs + tau.pairs:
        ra, rb = find(a), find(b)
        if ra != rb:
            parent[ra] = rb
    return len({find(v) for v in range(1, m + 1)})


def gram_matrix(k: int, n: int, exact: bool = False) -> np.ndarray:
    """Gram matrix G[i, j] = n^loop(sigma_i, sigma_j) over the canonical
    partition list; Fraction entries in exact mode."""
    if n < 1:
        raise ValueError(f"dimension n must be >= 1, got {n}")
    parts = enumerate_pair_partitions(k)
    size = len(parts)
    base = Fraction(n) if exact else float(n)
    g = np.empty((size, size), dtype=object if exact else float)
    for i in range(size):
        for j in range(i, size):
            v = base ** loop_count(parts[i], parts[j])
            g[i, j] = v
            g[j, i] = v
    return g


def _exact_inverse(g: np.ndarray) -> np.ndarray:
    """Gauss-Jordan inverse over the rationals; raises if singular."""
    size = g.shape[0]
    a = [[Fraction(g[i, j]) for j in range(size)] for i in range(size)]
    inv = [[Fraction(int(i == j)) for j in range(size)] for i in range(size)]
    for col in range(size):
        piv = next((r for r in range(col, size) if a[r][col] != 0), None)
        if piv is None:
            raise DegenerateSystem(
                "gram matrix is singular over the rationals; "
                "use the floating pseudo-inverse instead"
            )
        a[col], a[piv] = a[piv], a[col]
        inv[col], inv[piv] = inv[piv], inv[col]
        scale = a[col][col]
        a[col] = [x / scale for x in a[col]]
        inv[col] = [x / scale for x in inv[col]]
        for r in range(size):
            if r != col and a[r][col] != 0:
                f = a[r][col]
                a[r] = [x - f * y for x, y in zip(a[r], a[col])]
                inv[r] = [x - f * y for x, y in zip(inv[r], inv[col])]
    out = np.empty((size, size), dtype=object)
    for i in range(size):
        for j in range(size):
            out[i, j] = inv[i][j]
    return out


def weingarten_matrix(k: int, n: int, exact: bool = False) -> np.ndarray:
    """Pseudo-inverse of the Gram matrix over pair partitions.

    For k=2 and n >= 2 the result has diagonal (n+1)/(n(n-1)(n+2)) and
    off-diagonal -1/(n(n-1)(n+2)).  Exact mode inverts over the rationals
    and requires an invertible Gram matrix; the floating path always works
    via the Moore-Penrose pseudo-inverse.
    """
    g = gram_matrix(k, n, exact=exact)
    if exact:
        return _exact_inverse(g)
    return np.linalg.pinv(g)


@dataclass(frozen=True)
class WeingartenTable:
    """Gram matrix and its (pseudo-)inverse at a fixed half-order and dimension."""

    k: int
    n: int
    gram: np.ndarray
    wg: np.ndarray


def weingarten_table(k: int, n: int, exact: bool = False) -> WeingartenTable:
    return WeingartenTable(
        k=k, n=n, gram=gram_matrix(k, n, exact), wg=weingarten_matrix(k, n, exact)
    )


def joint_moment_order4(i, m4: float, n: int) -> float:
    """E[xi_{i1} xi_{i2} xi_{i3} xi_{i4}] for a rotationally invariant vector
    in dimension n with E[|xi|^4] = m4.

    Writing xi = |xi| u with u uniform on the sphere, the moment reduces to
    the Weingarten row sum (alpha + 2 beta) times m4 times the number of
    surviving pairings of the four indices; alpha + 2 beta = 1/(n(n+2)).
    """
    idx = tuple(int(x) for x in i)
    if len(idx) != 4:
        raise ValueError(f"need exactly four indices, got {len(idx)}")
    if any(x < 1 or x > n for x in idx):
        raise ValueError(f"indices must lie in 1..{n}, got {idx}")
    wg = weingarten_matrix(2, n)
    row_sum = float(np.sum(wg[0]))
    i1, i2, i3, i4 = idx
    deltas = (
        int(i1 == i2 and i3 == i4)
        + int(i1 == i3 and i2 == i4)
        + int(i1 == i4 and i2 == i3)
    )
    return row_sum * m4 * deltas
