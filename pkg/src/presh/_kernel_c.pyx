# cython: language_level=3, boundscheck=False, wraparound=False
"""Compiled section enumeration kernel.

Contract and emission order are identical to ``_kernel_py.enumerate_assignments``;
the Python fallback stays the reference. Checks are flattened into C arrays up
front so the backtracking loop runs without touching Python objects.
"""

from cpython.bytes cimport PyBytes_AsString, PyBytes_Check
from cpython.ref cimport Py_INCREF
from cpython.tuple cimport PyTuple_New, PyTuple_SET_ITEM
from libc.stdlib cimport free, malloc


cdef inline object _emit_indices(Py_ssize_t n, int *vals):
    cdef object out = PyTuple_New(n)
    cdef object item
    cdef Py_ssize_t m
    for m in range(n):
        item = vals[m]
        Py_INCREF(item)
        PyTuple_SET_ITEM(out, m, item)
    return out


cdef inline object _emit_decoded(Py_ssize_t n, int *vals, list decs):
    cdef object out = PyTuple_New(n)
    cdef tuple dec
    cdef object item
    cdef Py_ssize_t m
    for m in range(n):
        dec = <tuple>decs[m]
        item = dec[vals[m]]
        Py_INCREF(item)
        PyTuple_SET_ITEM(out, m, item)
    return out


def enumerate_assignments(sizes, checks, decoders=None):
    cdef Py_ssize_t n = len(sizes)
    if n == 0:
        return [()]

    cdef list decs = None
    if decoders is not None:
        decs = [tuple(d) for d in decoders]

    cdef Py_ssize_t total_checks = 0
    cdef Py_ssize_t total_pos = 0
    cdef Py_ssize_t j, k, m
    for j in range(n):
        for check in checks[j]:
            total_checks += 1
            total_pos += len(check[0])

    cdef int *csizes = <int *> malloc(n * sizeof(int))
    # per step: [start, end) window into the flattened check arrays
    cdef Py_ssize_t *step_lo = <Py_ssize_t *> malloc(n * sizeof(Py_ssize_t))
    cdef Py_ssize_t *step_hi = <Py_ssize_t *> malloc(n * sizeof(Py_ssize_t))
    cdef Py_ssize_t *chk_npos = NULL
    cdef Py_ssize_t *chk_off = NULL
    cdef int *flat_pos = NULL
    cdef long *flat_stride = NULL
    cdef const char **chk_mask = NULL
    if total_checks:
        chk_npos = <Py_ssize_t *> malloc(total_checks * sizeof(Py_ssize_t))
        chk_off = <Py_ssize_t *> malloc(total_checks * sizeof(Py_ssize_t))
        chk_mask = <const char **> malloc(total_checks * sizeof(char *))
    if total_pos:
        flat_pos = <int *> malloc(total_pos * sizeof(int))
        flat_stride = <long *> malloc(total_pos * sizeof(long))
    cdef int *vals = <int *> malloc(n * sizeof(int))

    # keep the mask bytes objects alive for the duration of the call
    keepalive = []
    results = []
    cdef Py_ssize_t ci = 0, pi = 0
    cdef Py_ssize_t lo, hi, npos
    cdef long idx
    cdef bint ok, empty = False
    try:
        for j in range(n):
            csizes[j] = sizes[j]
            if csizes[j] <= 0:
                empty = True
            step_lo[j] = ci
            for check in checks[j]:
                positions, strides, mask = check
                if not PyBytes_Check(mask):
                    mask = bytes(mask)
                keepalive.append(mask)
                chk_npos[ci] = len(positions)
                chk_off[ci] = pi
                chk_mask[ci] = PyBytes_AsString(mask)
                for k in range(len(positions)):
                    flat_pos[pi] = positions[k]
                    flat_stride[pi] = strides[k]
                    pi += 1
                ci += 1
            step_hi[j] = ci
        if empty:
            return []

        j = 0
        vals[0] = -1
        while j >= 0:
            vals[j] += 1
            if vals[j] >= csizes[j]:
                j -= 1
                continue
            ok = True
            lo = step_lo[j]
            hi = step_hi[j]
            for ci in range(lo, hi):
                idx = 0
                npos = chk_npos[ci]
                pi = chk_off[ci]
                for k in range(npos):
                    idx += flat_stride[pi + k] * vals[flat_pos[pi + k]]
                if not chk_mask[ci][idx]:
                    ok = False
                    break
            if not ok:
                continue
            if j == n - 1:
                if decs is None:
                    results.append(_emit_indices(n, vals))
                else:
                    results.append(_emit_decoded(n, vals, decs))
            else:
                j += 1
                vals[j] = -1
        return results
    finally:
        free(csizes)
        free(step_lo)
        free(step_hi)
        free(chk_npos)
        free(chk_off)
        free(flat_pos)
        free(flat_stride)
        free(chk_mask)
        free(vals)
