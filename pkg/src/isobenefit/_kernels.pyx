# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled lattice kernels. See ``_kernels_py`` for the reference versions."""
from libc.math cimport sqrt, INFINITY
from libc.stdlib cimport malloc, realloc, free

import numpy as np
cimport numpy as cnp

cnp.import_array()


cdef struct Heap:
    double *key
    Py_ssize_t *val
    Py_ssize_t size
    Py_ssize_t cap


cdef int heap_push(Heap *h, double k, Py_ssize_t v) except -1 nogil:
    cdef Py_ssize_t i, parent
    cdef double *nk
    cdef Py_ssize_t *nv
    if h.size == h.cap:
        h.cap = h.cap * 2 + 16
        nk = <double *> realloc(h.key, h.cap * sizeof(double))
        nv = <Py_ssize_t *> realloc(h.val, h.cap * sizeof(Py_ssize_t))
        if nk == NULL or nv == NULL:
            with gil:
                raise MemoryError()
        h.key = nk
        h.val = nv
    i = h.size
    h.size += 1
    while i > 0:
        parent = (i - 1) >> 1
        if h.key[parent] <= k:
            break
        h.key[i] = h.key[parent]
        h.val[i] = h.val[parent]
        i = parent
    h.key[i] = k
    h.val[i] = v
    return 0


cdef void heap_pop(Heap *h, double *k, Py_ssize_t *v) noexcept nogil:
    cdef Py_ssize_t i = 0, child
    cdef double lk
    cdef Py_ssize_t lv
    k[0] = h.key[0]
    v[0] = h.val[0]
    h.size -= 1
    if h.size == 0:
        return
    lk = h.key[h.size]
    lv = h.val[h.size]
    child = 1
    while child < h.size:
        if child + 1 < h.size and h.key[child + 1] < h.key[child]:
            child += 1
        if lk <= h.key[child]:
            break
        h.key[i] = h.key[child]
        h.val[i] = h.val[child]
        i = child
        child = 2 * i + 1
    h.key[i] = lk
    h.val[i] = lv


def relax_field(double[::1] dist, Py_ssize_t height, Py_ssize_t width,
                double cell_size, seeds):
    cdef double ortho = cell_size
    cdef double diag = cell_size * sqrt(2.0)
    cdef Heap h
    cdef double du, nd, step
    cdef Py_ssize_t u, v, r, c, rr, cc, dr, dc, s
    cdef cnp.intp_t[::1] seed_arr = np.ascontiguousarray(seeds, dtype=np.intp)
    h.size = 0
    h.cap = 0
    h.key = NULL
    h.val = NULL
    try:
        for s in range(seed_arr.shape[0]):
            u = seed_arr[s]
            if dist[u] > 0.0:
                dist[u] = 0.0
            heap_push(&h, 0.0, u)
        with nogil:
            while h.size > 0:
                heap_pop(&h, &du, &u)
                if du > dist[u]:
                    continue
                r = u // width
                c = u - r * width
                for dr in range(-1, 2):
                    rr = r + dr
                    if rr < 0 or rr >= height:
                        continue
                    for dc in range(-1, 2):
                        if dr == 0 and dc == 0:
                            continue
                        cc = c + dc
                        if cc < 0 or cc >= width:
                            continue
                        v = rr * width + cc
                        step = diag if (dr != 0 and dc != 0) else ortho
                        nd = du + step
                        if nd < dist[v]:
                            dist[v] = nd
                            heap_push(&h, nd, v)
    finally:
        free(h.key)
        free(h.val)


def label_regions(const unsigned char[::1] mask, Py_ssize_t height, Py_ssize_t width):
    cdef Py_ssize_t n = height * width
    labels_np = np.full(n, -1, dtype=np.int32)
    cdef int[::1] labels = labels_np
    stack_np = np.empty(max(n, 1), dtype=np.intp)
    cdef cnp.intp_t[::1] stack = stack_np
    cdef Py_ssize_t start, top, u, v, r, c
    cdef int count = 0
    with nogil:
        for start in range(n):
            if mask[start] == 0 or labels[start] != -1:
                continue
            labels[start] = count
            stack[0] = start
            top = 1
            while top > 0:
                top -= 1
                u = stack[top]
                r = u // width
                c = u - r * width
                if r > 0:
                    v = u - width
                    if mask[v] and labels[v] == -1:
                        labels[v] = count
                        stack[top] = v
                        top += 1
                if r < height - 1:
                    v = u + width
                    if mask[v] and labels[v] == -1:
                        labels[v] = count
                        stack[top] = v
                        top += 1
                if c > 0:
                    v = u - 1
                    if mask[v] and labels[v] == -1:
                        labels[v] = count
                        stack[top] = v
                        top += 1
                if c < width - 1:
                    v = u + 1
                    if mask[v] and labels[v] == -1:
                        labels[v] = count
                        stack[top] = v
                        top += 1
            count += 1
    return labels_np, count
