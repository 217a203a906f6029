# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled sparse kernels.

Same signatures and semantics as ``_kernels_py``; see that module for the
contract of each function.
"""
import numpy as np
cimport numpy as cnp
from libc.math cimport fabs

cnp.import_array()

BACKEND = "cython"

ctypedef cnp.int64_t i64
ctypedef cnp.float64_t f64


def sum_duplicates(idx, vals, double tol):
    idx_a = np.ascontiguousarray(idx, dtype=np.int64)
    val_a = np.ascontiguousarray(vals, dtype=np.float64)
    cdef Py_ssize_t n = idx_a.shape[0]
    if n == 0:
        return idx_a.copy(), val_a.copy()
    order = np.argsort(idx_a, kind="stable").astype(np.int64)
    out_i = np.empty(n, dtype=np.int64)
    out_v = np.empty(n, dtype=np.float64)
    cdef const i64[::1] ii = idx_a
    cdef const f64[::1] vv = val_a
    cdef const i64[::1] oo = order
    cdef i64[::1] ri = out_i
    cdef f64[::1] rv = out_v
    cdef Py_ssize_t k, m = 0
    cdef i64 cur = ii[oo[0]]
    cdef double acc = vv[oo[0]]
    for k in range(1, n):
        if ii[oo[k]] == cur:
            acc += vv[oo[k]]
        else:
            if fabs(acc) > tol:
                ri[m] = cur
                rv[m] = acc
                m += 1
            cur = ii[oo[k]]
            acc = vv[oo[k]]
    if fabs(acc) > tol:
        ri[m] = cur
        rv[m] = acc
        m += 1
    return out_i[:m].copy(), out_v[:m].copy()


def sparse_dot(ia, va, ib, vb):
    cdef const i64[::1] a_i = np.ascontiguousarray(ia, dtype=np.int64)
    cdef const f64[::1] a_v = np.ascontiguousarray(va, dtype=np.float64)
    cdef const i64[::1] b_i = np.ascontiguousarray(ib, dtype=np.int64)
    cdef const f64[::1] b_v = np.ascontiguousarray(vb, dtype=np.float64)
    cdef Py_ssize_t p = 0, q = 0
    cdef Py_ssize_t na = a_i.shape[0], nb = b_i.shape[0]
    cdef double total = 0.0
    while p < na and q < nb:
        if a_i[p] == b_i[q]:
            total += a_v[p] * b_v[q]
            p += 1
            q += 1
        elif a_i[p] < b_i[q]:
            p += 1
        else:
            q += 1
    return total


def gather(idx, vals, query):
    cdef const i64[::1] s_i = np.ascontiguousarray(idx, dtype=np.int64)
    cdef const f64[::1] s_v = np.ascontiguousarray(vals, dtype=np.float64)
    cdef const i64[::1] q = np.ascontiguousarray(query, dtype=np.int64)
    cdef Py_ssize_t nq = q.shape[0], n = s_i.shape[0]
    out = np.zeros(nq, dtype=np.float64)
    cdef f64[::1] o = out
    cdef Py_ssize_t k, lo, hi, mid
    cdef i64 key
    for k in range(nq):
        key = q[k]
        lo = 0
        hi = n
        while lo < hi:
            mid = (lo + hi) >> 1
            if s_i[mid] < key:
                lo = mid + 1
            else:
                hi = mid
        if lo < n and s_i[lo] == key:
            o[k] = s_v[lo]
    return out


def outer(ia, va, ib, vb, i64 size_b):
    cdef const i64[::1] a_i = np.ascontiguousarray(ia, dtype=np.int64)
    cdef const f64[::1] a_v = np.ascontiguousarray(va, dtype=np.float64)
    cdef const i64[::1] b_i = np.ascontiguousarray(ib, dtype=np.int64)
    cdef const f64[::1] b_v = np.ascontiguousarray(vb, dtype=np.float64)
    cdef Py_ssize_t na = a_i.shape[0], nb = b_i.shape[0]
    out_i = np.empty(na * nb, dtype=np.int64)
    out_v = np.empty(na * nb, dtype=np.float64)
    cdef i64[::1] ri = out_i
    cdef f64[::1] rv = out_v
    cdef Py_ssize_t p, q, m = 0
    for p in range(na):
        for q in range(nb):
            ri[m] = a_i[p] * size_b + b_i[q]
            rv[m] = a_v[p] * b_v[q]
            m += 1
    return out_i, out_v


def join_contract(key_a, rest_a, val_a, key_b, rest_b, val_b, i64 size_rest_b, double tol):
    cdef const i64[::1] ka = np.ascontiguousarray(key_a, dtype=np.int64)
    cdef const i64[::1] ra = np.ascontiguousarray(rest_a, dtype=np.int64)
    cdef const f64[::1] va = np.ascontiguousarray(val_a, dtype=np.float64)
    cdef const i64[::1] kb_raw = np.ascontiguousarray(key_b, dtype=np.int64)
    cdef const i64[::1] order = np.argsort(np.asarray(kb_raw), kind="stable").astype(np.int64)
    cdef Py_ssize_t na = ka.shape[0], nb = kb_raw.shape[0]
    cdef i64[::1] kb = np.empty(nb, dtype=np.int64)
    cdef i64[::1] rb = np.empty(nb, dtype=np.int64)
    cdef f64[::1] vb = np.empty(nb, dtype=np.float64)
    cdef const i64[::1] rb_raw = np.ascontiguousarray(rest_b, dtype=np.int64)
    cdef const f64[::1] vb_raw = np.ascontiguousarray(val_b, dtype=np.float64)
    cdef Py_ssize_t p, q, lo, hi, mid, total = 0
    for q in range(nb):
        kb[q] = kb_raw[order[q]]
        rb[q] = rb_raw[order[q]]
        vb[q] = vb_raw[order[q]]
    starts = np.empty(na, dtype=np.int64)
    stops = np.empty(na, dtype=np.int64)
    cdef i64[::1] st = starts
    cdef i64[::1] sp = stops
    cdef i64 key
    for p in range(na):
        key = ka[p]
        lo = 0
        hi = nb
        while lo < hi:
            mid = (lo + hi) >> 1
            if kb[mid] < key:
                lo = mid + 1
            else:
                hi = mid
        st[p] = lo
        while lo < nb and kb[lo] == key:
            lo += 1
        sp[p] = lo
        total += sp[p] - st[p]
    out_i = np.empty(total, dtype=np.int64)
    out_v = np.empty(total, dtype=np.float64)
    cdef i64[::1] ri = out_i
    cdef f64[::1] rv = out_v
    cdef Py_ssize_t m = 0
    for p in range(na):
        for q in range(st[p], sp[p]):
            ri[m] = ra[p] * size_rest_b + rb[q]
            rv[m] = va[p] * vb[q]
            m += 1
    return sum_duplicates(out_i, out_v, tol)


def median_estimates(true_vals, branch_u, offset_u, double eps, double p_success, double wide):
    cdef const f64[::1] tv = np.ascontiguousarray(true_vals, dtype=np.float64)
    cdef const f64[:, ::1] bu = np.ascontiguousarray(branch_u, dtype=np.float64)
    cdef const f64[:, ::1] ou = np.ascontiguousarray(offset_u, dtype=np.float64)
    cdef Py_ssize_t m = bu.shape[0], k = bu.shape[1]
    buf = np.empty(k, dtype=np.float64)
    cdef f64[::1] b = buf
    out = np.empty(m, dtype=np.float64)
    cdef f64[::1] o = out
    cdef Py_ssize_t j, r, h
    cdef double width, x
    for j in range(m):
        for r in range(k):
            width = eps if bu[j, r] < p_success else wide * eps
            x = tv[j] + (2.0 * ou[j, r] - 1.0) * width
            if x < 0.0:
                x = 0.0
            elif x > 1.0:
                x = 1.0
            # insertion sort; k is a few dozen
            h = r
            while h > 0 and b[h - 1] > x:
                b[h] = b[h - 1]
                h -= 1
            b[h] = x
        h = k // 2
        if k % 2 == 1:
            o[j] = b[h]
        else:
            o[j] = (b[h - 1] + b[h]) / 2.0
    return out
