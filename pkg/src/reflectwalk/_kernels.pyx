# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled inner loops: lattice walks and the cube flood fill.

Semantics match ``_fallback`` exactly; both consume pre-drawn uniforms so the
two backends produce identical trajectories.
"""
import numpy as np

from libc.stdint cimport int32_t, int64_t, uint8_t


cdef inline int32_t _step(const int64_t[::1] indptr, const int32_t[::1] indices,
                          int32_t v, double u) noexcept nogil:
    cdef int64_t lo = indptr[v]
    cdef int64_t deg = indptr[v + 1] - lo
    return indices[lo + <int64_t>(u * <double>deg)]


def walk_path(const int64_t[::1] indptr, const int32_t[::1] indices, int32_t start,
              const double[::1] uniforms):
    cdef Py_ssize_t n = uniforms.shape[0]
    out = np.empty(n + 1, dtype=np.int32)
    cdef int32_t[::1] o = out
    cdef Py_ssize_t j
    cdef int32_t v = start
    with nogil:
        o[0] = v
        for j in range(n):
            v = _step(indptr, indices, v, uniforms[j])
            o[j + 1] = v
    return out


def walk_record(const int64_t[::1] indptr, const int32_t[::1] indices,
                const int32_t[::1] starts, const double[:, ::1] uniforms,
                const int64_t[:, ::1] record):
    cdef Py_ssize_t R = uniforms.shape[0]
    cdef Py_ssize_t M = record.shape[1]
    out = np.empty((R, M), dtype=np.int32)
    cdef int32_t[:, ::1] o = out
    cdef Py_ssize_t r, m
    cdef int64_t step, target
    cdef int32_t v
    with nogil:
        for r in range(R):
            v = starts[r]
            step = 0
            for m in range(M):
                target = record[r, m]
                while step < target:
                    v = _step(indptr, indices, v, uniforms[r, step])
                    step += 1
                o[r, m] = v
    return out


def exit_walk(const int64_t[::1] indptr, const int32_t[::1] indices,
              const int32_t[::1] starts, const double[:, ::1] uniforms,
              const uint8_t[::1] inside):
    cdef Py_ssize_t R = uniforms.shape[0]
    cdef Py_ssize_t n = uniforms.shape[1]
    steps = np.full(R, -1, dtype=np.int64)
    pos = np.empty(R, dtype=np.int32)
    cdef int64_t[::1] s = steps
    cdef int32_t[::1] p = pos
    cdef Py_ssize_t r, j
    cdef int32_t v
    with nogil:
        for r in range(R):
            v = starts[r]
            for j in range(n):
                v = _step(indptr, indices, v, uniforms[r, j])
                if not inside[v]:
                    s[r] = j + 1
                    break
            p[r] = v
    return steps, pos


def flood_fill(mask, seeds):
    """Face-connected component(s) of ``mask`` containing the seed cells."""
    mask = np.asarray(mask, dtype=bool)
    padded = np.pad(mask, 1).astype(np.uint8)
    shape = padded.shape
    strides = np.array([int(np.prod(shape[i + 1:])) for i in range(len(shape))], dtype=np.int64)
    seeds = np.asarray(seeds, dtype=np.int64).reshape(-1, mask.ndim) + 1
    flat_seeds = np.ascontiguousarray(seeds @ strides, dtype=np.int64)
    flat = padded.ravel()
    seen = np.zeros_like(flat)
    queue = np.empty(flat.size, dtype=np.int64)
    cdef uint8_t[::1] fm = flat
    cdef uint8_t[::1] sm = seen
    cdef int64_t[::1] q = queue
    cdef int64_t[::1] st = strides
    cdef int64_t[::1] sd = flat_seeds
    cdef Py_ssize_t head = 0, tail = 0, i, a
    cdef int64_t c, nb
    cdef Py_ssize_t d = strides.shape[0]
    with nogil:
        for i in range(sd.shape[0]):
            c = sd[i]
            if fm[c] and not sm[c]:
                sm[c] = 1
                q[tail] = c
                tail += 1
        while head < tail:
            c = q[head]
            head += 1
            for a in range(d):
                nb = c + st[a]
                if fm[nb] and not sm[nb]:
                    sm[nb] = 1
                    q[tail] = nb
                    tail += 1
                nb = c - st[a]
                if fm[nb] and not sm[nb]:
                    sm[nb] = 1
                    q[tail] = nb
                    tail += 1
    inner = tuple(slice(1, -1) for _ in range(mask.ndim))
    return seen.reshape(shape)[inner].astype(bool)
