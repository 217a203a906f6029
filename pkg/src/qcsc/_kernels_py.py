"""Pure-Python/numpy versions of the sparse kernels.

Every function here has a twin with the same signature in ``_kernels.pyx``.
Index arrays are ``int64``, value arrays ``float64``.  "Sorted" always means
strictly ascending with no duplicates.
"""
import numpy as np

BACKEND = "python"


def sum_duplicates(idx, vals, tol):
    """Sort ``idx``, sum values sharing an index, drop ``|v| <= tol``."""
    idx = np.asarray(idx, dtype=np.int64)
    vals = np.asarray(vals, dtype=np.float64)
    if idx.size == 0:
        return idx.copy(), vals.copy()
    order = np.argsort(idx, kind="stable")
    idx_s = idx[order]
    val_s = vals[order]
    uniq, starts = np.unique(idx_s, return_index=True)
    sums = np.add.reduceat(val_s, starts)
    keep = np.abs(sums) > tol
    return uniq[keep], sums[keep]


def sparse_dot(ia, va, ib, vb):
    """Inner product of two sorted sparse vectors."""
    _, pa, pb = np.intersect1d(ia, ib, assume_unique=True, return_indices=True)
    return float(np.dot(va[pa], vb[pb]))


def gather(idx, vals, query):
    """Look up ``query`` positions in a sorted sparse vector (0 if absent)."""
    query = np.asarray(query, dtype=np.int64)
    out = np.zeros(query.shape[0], dtype=np.float64)
    if idx.size == 0 or query.size == 0:
        return out
    pos = np.searchsorted(idx, query)
    pos_c = np.minimum(pos, idx.size - 1)
    hit = idx[pos_c] == query
    out[hit] = vals[pos_c[hit]]
    return out


def outer(ia, va, ib, vb, size_b):
    """Tensor product of two sorted sparse vectors, row-major flat indices."""
    idx = (ia[:, None] * size_b + ib[None, :]).ravel()
    vals = (va[:, None] * vb[None, :]).ravel()
    return idx.astype(np.int64), vals


def join_contract(key_a, rest_a, val_a, key_b, rest_b, val_b, size_rest_b, tol):
    """Contract two sparse tensors over matching keys.

    Each entry of ``a`` is paired with every entry of ``b`` holding the same
    key; the output index is ``rest_a * size_rest_b + rest_b``.  Duplicates
    are summed and the result is sorted.
    """
    key_a = np.asarray(key_a, dtype=np.int64)
    key_b = np.asarray(key_b, dtype=np.int64)
    order_b = np.argsort(key_b, kind="stable")
    kb = key_b[order_b]
    lo = np.searchsorted(kb, key_a, side="left")
    hi = np.searchsorted(kb, key_a, side="right")
    counts = hi - lo
    total = int(counts.sum())
    if total == 0:
        return np.zeros(0, np.int64), np.zeros(0, np.float64)
    a_pos = np.repeat(np.arange(key_a.size), counts)
    offsets = np.cumsum(counts) - counts
    b_pos = order_b[np.repeat(lo, counts) + (np.arange(total) - np.repeat(offsets, counts))]
    out_idx = rest_a[a_pos] * size_rest_b + rest_b[b_pos]
    out_val = val_a[a_pos] * val_b[b_pos]
    return sum_duplicates(out_idx, out_val, tol)


def median_estimates(true_vals, branch_u, offset_u, eps, p_success, wide):
    """Median-of-k noisy amplitude estimates, one per candidate.

    Sample ``r`` of candidate ``j`` is ``true_vals[j]`` shifted uniformly
    within ``+-eps`` when ``branch_u[j, r] < p_success`` and within
    ``+-wide*eps`` otherwise, clipped to ``[0, 1]``.
    """
    width = np.where(branch_u < p_success, eps, wide * eps)
    samples = true_vals[:, None] + (2.0 * offset_u - 1.0) * width
    samples = np.clip(samples, 0.0, 1.0)
    return np.median(samples, axis=1)
