# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled hot kernels: Metropolis sweeps and Gray-code enumeration.

Same contracts as _pyref; sweeps consume the random stream identically,
so trajectories match the Python backend bit for bit.
"""

from libc.math cimport exp, INFINITY

import numpy as np

BACKEND_NAME = "compiled"

cdef extern from *:
    """
    static inline int tc3d_ctzll(unsigned long long x) { return __builtin_ctzll(x); }
    static inline int tc3d_popcountll(unsigned long long x) { return __builtin_popcountll(x); }
    """
    int tc3d_ctzll(unsigned long long x) nogil
    int tc3d_popcountll(unsigned long long x) nogil


def metropolis_sweep(signed char[::1] spins, signed char[::1] u,
                     double[::1] coupl, int[::1] s2t_off, int[::1] s2t,
                     double[::1] uniforms, sites=None):
    cdef Py_ssize_t n = spins.shape[0]
    cdef Py_ssize_t nprop = uniforms.shape[0]
    cdef Py_ssize_t j, i, t, lo, hi
    cdef double h, delta
    cdef int accepted = 0
    cdef bint ok
    cdef int[::1] site_view
    cdef bint use_sites = sites is not None
    if use_sites:
        site_view = sites
    with nogil:
        for j in range(nprop):
            if use_sites:
                i = site_view[j]
            else:
                i = j % n
            lo = s2t_off[i]
            hi = s2t_off[i + 1]
            h = 0.0
            for t in range(lo, hi):
                h += coupl[s2t[t]] * u[s2t[t]]
            delta = 2.0 * h
            # zero-cost proposals take a fair coin: deterministic flips of
            # flat (gauge) directions would make fixed-order sweeps reducible
            if delta < 0.0:
                ok = True
            elif delta == 0.0:
                ok = uniforms[j] < 0.5
            else:
                ok = uniforms[j] < exp(-delta)
            if ok:
                spins[i] = -spins[i]
                for t in range(lo, hi):
                    u[s2t[t]] = -u[s2t[t]]
                accepted += 1
    return accepted


def sweep_record(signed char[::1] spins, signed char[::1] u,
                 double[::1] coupl, int[::1] s2t_off, int[::1] s2t,
                 double[::1] uniforms, sites, long long start_index,
                 long long[::1] out_idx):
    """Run len(out_idx) sweeps, recording the packed state index after
    each; the index is maintained incrementally (bit i <=> spin i down).
    Restricted to <= 63 spins."""
    cdef Py_ssize_t n = spins.shape[0]
    cdef Py_ssize_t n_sweeps = out_idx.shape[0]
    cdef Py_ssize_t sw, j, i, t, lo, hi, base
    cdef double h, delta
    cdef long long idx = start_index
    cdef bint ok
    cdef int[::1] site_view
    cdef bint use_sites = sites is not None
    if use_sites:
        site_view = sites
    with nogil:
        for sw in range(n_sweeps):
            base = sw * n
            for j in range(n):
                if use_sites:
                    i = site_view[base + j]
                else:
                    i = j
                lo = s2t_off[i]
                hi = s2t_off[i + 1]
                h = 0.0
                for t in range(lo, hi):
                    h += coupl[s2t[t]] * u[s2t[t]]
                delta = 2.0 * h
                if delta < 0.0:
                    ok = True
                elif delta == 0.0:
                    ok = uniforms[base + j] < 0.5
                else:
                    ok = uniforms[base + j] < exp(-delta)
                if ok:
                    spins[i] = -spins[i]
                    idx ^= (<long long> 1) << i
                    for t in range(lo, hi):
                        u[s2t[t]] = -u[s2t[t]]
            out_idx[sw] = idx
    return idx


def gray_logsumexp(signed char[::1] spins, signed char[::1] u,
                   double[::1] coupl, int[::1] s2t_off, int[::1] s2t,
                   double e0, long[::1] flip_spins):
    """Walk all 2^b states in Gray-code order, one spin flip per step,
    accumulating a streaming max-shifted sum of exp(E)."""
    cdef int b = flip_spins.shape[0]
    cdef double m = e0
    cdef double s = 1.0
    cdef double e = e0
    cdef unsigned long long steps, j
    cdef Py_ssize_t i, t, lo, hi
    if b == 0:
        return m, s
    steps = (<unsigned long long> 1) << b
    with nogil:
        for j in range(1, steps):
            i = flip_spins[tc3d_ctzll(j)]
            lo = s2t_off[i]
            hi = s2t_off[i + 1]
            for t in range(lo, hi):
                e -= 2.0 * coupl[s2t[t]] * u[s2t[t]]
                u[s2t[t]] = -u[s2t[t]]
            spins[i] = -spins[i]
            if e > m:
                s = s * exp(m - e) + 1.0
                m = e
            else:
                s += exp(e - m)
    return m, s


def coset_class_masses(unsigned long long[::1] basis_words,
                       unsigned char[::1] basis_labels,
                       unsigned long long x0_word, unsigned char x0_label,
                       double log_x, int n_labels):
    cdef int b = basis_words.shape[0]
    cdef unsigned long long steps, j, w = x0_word
    cdef unsigned char lab = x0_label
    cdef int g
    cdef double e
    m_arr = np.full(n_labels, -INFINITY)
    s_arr = np.zeros(n_labels)
    cdef double[::1] m = m_arr
    cdef double[::1] s = s_arr
    e = log_x * tc3d_popcountll(w)
    m[lab] = e
    s[lab] = 1.0
    steps = (<unsigned long long> 1) << b
    with nogil:
        for j in range(1, steps):
            g = tc3d_ctzll(j)
            w ^= basis_words[g]
            lab ^= basis_labels[g]
            e = log_x * tc3d_popcountll(w)
            if e > m[lab]:
                s[lab] = s[lab] * exp(m[lab] - e) + 1.0
                m[lab] = e
            else:
                s[lab] += exp(e - m[lab])
    return m_arr, s_arr
