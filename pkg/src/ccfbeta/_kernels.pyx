# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled evaluation kernels; semantics identical to ``_kernels_py``."""

import numpy as np
cimport numpy as cnp
from libc.stdint cimport uint64_t, int64_t, int32_t
from libc.stdlib cimport malloc, free
from libc.math cimport fabs

cnp.import_array()

cdef uint64_t GOLDEN = 0x9E3779B97F4A7C15ULL
cdef uint64_t SEED_SALT = 0x6A09E667F3BCC909ULL
cdef double INV53 = 1.0 / 9007199254740992.0


cdef inline uint64_t _mix(uint64_t z) noexcept nogil:
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL
    return z ^ (z >> 31)


cdef inline bint _top(const unsigned char* ev, unsigned char* nodes, int n_events,
                      int n_nodes, const int32_t* node_k, const int32_t* ptr,
                      const int32_t* idx) noexcept nogil:
    cdef int i, j, c, cnt
    for i in range(n_nodes):
        cnt = 0
        for j in range(ptr[i], ptr[i + 1]):
            c = idx[j]
            if c < n_events:
                cnt += ev[c]
            else:
                cnt += nodes[c - n_events]
        nodes[i] = 1 if cnt >= node_k[i] else 0
    return nodes[n_nodes - 1]


def exact_probability(probs, node_k, child_ptr, child_idx):
    cdef cnp.ndarray[cnp.float64_t, ndim=1] p = np.ascontiguousarray(probs, dtype=np.float64)
    cdef cnp.ndarray[int32_t, ndim=1] k = np.ascontiguousarray(node_k, dtype=np.int32)
    cdef cnp.ndarray[int32_t, ndim=1] ptr = np.ascontiguousarray(child_ptr, dtype=np.int32)
    cdef cnp.ndarray[int32_t, ndim=1] idx = np.ascontiguousarray(child_idx, dtype=np.int32)
    cdef int n = p.shape[0]
    cdef int n_nodes = k.shape[0]
    cdef int64_t mask, n_masks = (<int64_t>1) << n
    cdef int e
    cdef double w, total = 0.0, comp = 0.0, t
    cdef unsigned char* ev = <unsigned char*>malloc(n + 1)
    cdef unsigned char* nodes = <unsigned char*>malloc(n_nodes + 1)
    cdef const double* pp = &p[0] if n > 0 else NULL
    cdef const int32_t* kp = &k[0]
    cdef const int32_t* ptrp = &ptr[0]
    cdef const int32_t* idxp = &idx[0] if idx.shape[0] > 0 else NULL
    try:
        with nogil:
            for mask in range(n_masks):
                w = 1.0
                for e in range(n):
                    if (mask >> e) & 1:
                        ev[e] = 1
                        w *= pp[e]
                    else:
                        ev[e] = 0
                        w *= 1.0 - pp[e]
                if w == 0.0:
                    continue
                if _top(ev, nodes, n, n_nodes, kp, ptrp, idxp):
                    t = total + w
                    if fabs(total) >= fabs(w):
                        comp += (total - t) + w
                    else:
                        comp += (w - t) + total
                    total = t
    finally:
        free(ev)
        free(nodes)
    return total + comp


def mc_node_counts(probs, node_k, child_ptr, child_idx, seed, int64_t start, int64_t count):
    cdef cnp.ndarray[cnp.float64_t, ndim=1] p = np.ascontiguousarray(probs, dtype=np.float64)
    cdef cnp.ndarray[int32_t, ndim=1] k = np.ascontiguousarray(node_k, dtype=np.int32)
    cdef cnp.ndarray[int32_t, ndim=1] ptr = np.ascontiguousarray(child_ptr, dtype=np.int32)
    cdef cnp.ndarray[int32_t, ndim=1] idx = np.ascontiguousarray(child_idx, dtype=np.int32)
    cdef int n = p.shape[0]
    cdef int n_nodes = k.shape[0]
    cdef cnp.ndarray[int64_t, ndim=1] counts = np.zeros(n_nodes, dtype=np.int64)
    cdef uint64_t key = _mix((<uint64_t>(int(seed) & 0xFFFFFFFFFFFFFFFF)) ^ SEED_SALT)
    cdef uint64_t rep_key, h
    cdef int64_t r
    cdef int e, i
    cdef unsigned char* ev = <unsigned char*>malloc(n + 1)
    cdef unsigned char* nodes = <unsigned char*>malloc(n_nodes + 1)
    cdef const double* pp = &p[0] if n > 0 else NULL
    cdef const int32_t* kp = &k[0]
    cdef const int32_t* ptrp = &ptr[0]
    cdef const int32_t* idxp = &idx[0] if idx.shape[0] > 0 else NULL
    cdef int64_t* cp = &counts[0]
    try:
        with nogil:
            for r in range(start, start + count):
                rep_key = _mix(key ^ (<uint64_t>r * GOLDEN))
                for e in range(n):
                    h = _mix(rep_key + <uint64_t>(e + 1) * GOLDEN)
                    ev[e] = 1 if (<double>(h >> 11)) * INV53 < pp[e] else 0
                _top(ev, nodes, n, n_nodes, kp, ptrp, idxp)
                for i in range(n_nodes):
                    cp[i] += nodes[i]
    finally:
        free(ev)
        free(nodes)
    return counts
