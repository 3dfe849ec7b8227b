"""Hot loops: pointwise k-nearest widths and sorted 1-D neighbour search.

Every kernel exists twice, as a numba ``@njit`` function and as a pure numpy
fallback.  The numba path is used when numba imports and the environment
variable ``LOCFDA_DISABLE_NUMBA`` is unset (or ``0``).  Both paths return
identical results, including tie-breaking.
"""

from __future__ import annotations

import os

import numpy as np

try:
    import numba
    from numba import njit

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is a hard dependency in CI
    HAVE_NUMBA = False

    def njit(*args, **kwargs):  # type: ignore[no-redef]
        def deco(fn):
            return fn

        if args and callable(args[0]):
            return args[0]
        return deco


def numba_enabled() -> bool:
    flag = os.environ.get("LOCFDA_DISABLE_NUMBA", "").strip().lower()
    return HAVE_NUMBA and flag in ("", "0", "false", "no")


# ---------------------------------------------------------------------------
# pointwise k-nearest widths
# ---------------------------------------------------------------------------


@njit(cache=True)
def _knn_widths_numba(pool, queries, kmax, exclude):
    n_q, m = queries.shape
    n_p = pool.shape[0]
    widths = np.empty((n_q, kmax, m))
    index = np.empty((n_q, kmax, m), dtype=np.int64)
    bd = np.empty((m, kmax))
    bi = np.empty((m, kmax), dtype=np.int64)
    for a in range(n_q):
        bd[:, :] = np.inf
        bi[:, :] = -1
        skip = exclude[a]
        for p in range(n_p):
            if p == skip:
                continue
            for r in range(m):
                d = abs(pool[p, r] - queries[a, r])
                # strict comparison: an equal distance never displaces an
                # earlier (smaller) pool position
                if d < bd[r, kmax - 1]:
                    pos = kmax - 1
                    while pos > 0 and bd[r, pos - 1] > d:
                        bd[r, pos] = bd[r, pos - 1]
                        bi[r, pos] = bi[r, pos - 1]
                        pos -= 1
                    bd[r, pos] = d
                    bi[r, pos] = p
        for j in range(kmax):
            for r in range(m):
                widths[a, j, r] = bd[r, j]
                index[a, j, r] = bi[r, j]
    return widths, index


def _knn_widths_numpy(pool, queries, kmax, exclude):
    n_q, m = queries.shape
    widths = np.empty((n_q, kmax, m))
    index = np.empty((n_q, kmax, m), dtype=np.int64)
    for a in range(n_q):
        d = np.abs(pool - queries[a])
        if exclude[a] >= 0:
            d[exclude[a]] = np.inf
        order = np.argsort(d, axis=0, kind="stable")[:kmax]
        index[a] = order
        widths[a] = np.take_along_axis(d, order, axis=0)
    return widths, index


def knn_widths(pool, queries, kmax, exclude=None):
    """Distances from each query to its 1st..kmax-th nearest pool value.

    Parameters
    ----------
    pool : (p, m) array
        Candidate values, one row per donor curve.
    queries : (q, m) array
        Query values on the same columns.
    kmax : int
        Largest order returned; must not exceed the number of usable donors.
    exclude : (q,) int array, optional
        Pool row to ignore for each query (``-1`` for none).

    Returns
    -------
    widths : (q, kmax, m) array
        ``widths[a, j, r]`` is the (j+1)-th smallest ``|pool[:, r] - queries[a, r]|``.
    index : (q, kmax, m) int array
        Pool row attaining it; ties go to the smaller row.
    """
    pool = np.ascontiguousarray(pool, dtype=np.float64)
    queries = np.ascontiguousarray(queries, dtype=np.float64)
    if exclude is None:
        exclude = np.full(queries.shape[0], -1, dtype=np.int64)
    exclude = np.ascontiguousarray(exclude, dtype=np.int64)
    if numba_enabled():
        return _knn_widths_numba(pool, queries, int(kmax), exclude)
    return _knn_widths_numpy(pool, queries, int(kmax), exclude)


# ---------------------------------------------------------------------------
# 1-D sorted neighbour search (thinned-sample checks)
# ---------------------------------------------------------------------------


@njit(cache=True)
def _kth_nn_sorted_numba(xs, queries, k, self_pos):
    n = xs.shape[0]
    out = np.empty(queries.shape[0])
    for a in range(queries.shape[0]):
        q = queries[a]
        if self_pos[a] >= 0:
            lo = self_pos[a] - 1
            hi = self_pos[a] + 1
        else:
            hi = np.searchsorted(xs, q)
            lo = hi - 1
        d = np.inf
        for _ in range(k):
            dl = q - xs[lo] if lo >= 0 else np.inf
            dr = xs[hi] - q if hi < n else np.inf
            if dl <= dr:
                d = dl
                lo -= 1
            else:
                d = dr
                hi += 1
        out[a] = d
    return out


def _kth_nn_sorted_numpy(xs, queries, k, self_pos):
    n = xs.shape[0]
    own = self_pos >= 0
    centre = np.where(own, self_pos, np.searchsorted(xs, queries))
    offs = np.arange(-k, k + 1)
    idx = centre[:, None] + offs[None, :]
    valid = (idx >= 0) & (idx < n)
    # for external queries the window [c-k, c+k] holds xs[c-k..c+k-1] plus one spare
    valid &= ~(own[:, None] & (offs[None, :] == 0))
    cand = np.where(valid, np.abs(xs[np.clip(idx, 0, n - 1)] - queries[:, None]), np.inf)
    return np.partition(cand, k - 1, axis=1)[:, k - 1]


def kth_nn_sorted(xs, queries, k, self_pos=None):
    """k-th nearest distance from each query to the sorted sample ``xs``.

    ``self_pos[a] >= 0`` marks a query that is ``xs[self_pos[a]]`` itself;
    that point is then excluded from its own neighbours.
    """
    xs = np.ascontiguousarray(xs, dtype=np.float64)
    queries = np.ascontiguousarray(queries, dtype=np.float64)
    if self_pos is None:
        self_pos = np.full(queries.shape[0], -1, dtype=np.int64)
    self_pos = np.ascontiguousarray(self_pos, dtype=np.int64)
    if numba_enabled():
        return _kth_nn_sorted_numba(xs, queries, int(k), self_pos)
    return _kth_nn_sorted_numpy(xs, queries, int(k), self_pos)
