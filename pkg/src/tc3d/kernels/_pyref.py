"""Pure-Python reference kernels.

Semantically identical to the compiled versions in _fast.pyx; the sweep
consumes the same random stream in the same order, so trajectories are
bit-identical across backends.  Enumeration sums in a different order
(vectorized chunks instead of a streaming Gray walk), so log-partition
values agree only to float round-off.
"""

from __future__ import annotations

import math

import numpy as np

BACKEND_NAME = "python"


def metropolis_sweep(spins, u, coupl, s2t_off, s2t, uniforms, sites=None):
    """One proposed flip per entry of `uniforms`.

    `spins` (+-1 int8) and per-term products `u` are updated in place.
    With sites=None spins are visited in index order; otherwise sites[j]
    is proposed at step j.  Returns the number of accepted flips.

    Zero-cost proposals are accepted with probability 1/2 instead of 1:
    reversibility allows any tie rule, and deterministic flipping of
    flat (gauge) directions makes fixed-order sweeps reducible.
    """
    n = spins.shape[0]
    accepted = 0
    for j in range(uniforms.shape[0]):
        i = j % n if sites is None else sites[j]
        lo, hi = s2t_off[i], s2t_off[i + 1]
        h = 0.0
        for t in s2t[lo:hi]:
            h += coupl[t] * u[t]
        delta = 2.0 * h
        if delta < 0.0:
            ok = True
        elif delta == 0.0:
            ok = uniforms[j] < 0.5
        else:
            ok = uniforms[j] < math.exp(-delta)
        if ok:
            spins[i] = -spins[i]
            for t in s2t[lo:hi]:
                u[t] = -u[t]
            accepted += 1
    return accepted


def sweep_record(spins, u, coupl, s2t_off, s2t, uniforms, sites,
                 start_index, out_idx):
    """Run len(out_idx) sweeps, recording the packed state index after
    each (bit i <=> spin i down).  Restricted to <= 63 spins."""
    n = spins.shape[0]
    idx = int(start_index)
    for sw in range(out_idx.shape[0]):
        base = sw * n
        for j in range(n):
            i = j if sites is None else sites[base + j]
            lo, hi = s2t_off[i], s2t_off[i + 1]
            h = 0.0
            for t in s2t[lo:hi]:
                h += coupl[t] * u[t]
            delta = 2.0 * h
            if delta < 0.0:
                ok = True
            elif delta == 0.0:
                ok = uniforms[base + j] < 0.5
            else:
                ok = uniforms[base + j] < math.exp(-delta)
            if ok:
                spins[i] = -spins[i]
                idx ^= 1 << int(i)
                for t in s2t[lo:hi]:
                    u[t] = -u[t]
        out_idx[sw] = idx
    return idx


def gray_logsumexp(spins, u, coupl, s2t_off, s2t, e0, flip_spins):
    """Streaming log-sum-exp of exp(E) over all 2^b states reachable by
    toggling `flip_spins`, starting from the current (spins, u, e0).

    Returns (m, s) with sum = exp(m) * s.  Vectorized in chunks here;
    the compiled twin walks a Gray code.
    """
    b = len(flip_spins)
    if b == 0:
        return float(e0), 1.0
    ku = coupl * u  # contribution of each term at the start state
    # parity matrix: how many flip spins each term contains, mod 2
    cols = np.zeros((b, coupl.shape[0]), dtype=np.int8)
    for j, sidx in enumerate(flip_spins):
        lo, hi = s2t_off[sidx], s2t_off[sidx + 1]
        for t in s2t[lo:hi]:
            cols[j, t] ^= 1
    base = float(ku.sum())
    m = -np.inf
    s = 0.0
    chunk_bits = min(b, 16)
    chunk = 1 << chunk_bits
    low = np.arange(chunk, dtype=np.uint32)
    low_bits = ((low[:, None] >> np.arange(chunk_bits, dtype=np.uint32)) & 1).astype(
        np.int8
    )
    for hi_part in range(1 << (b - chunk_bits)):
        hi_bits = np.array(
            [(hi_part >> j) & 1 for j in range(b - chunk_bits)], dtype=np.int8
        )
        offset_par = (hi_bits @ cols[chunk_bits:]) % 2 if b > chunk_bits else 0
        par = (low_bits @ cols[:chunk_bits] + offset_par) % 2
        energies = base - 2.0 * par @ ku
        mx = float(energies.max())
        if mx > m:
            s = s * math.exp(m - mx) + float(np.exp(energies - mx).sum())
            m = mx
        else:
            s += float(np.exp(energies - m).sum())
    return m, s


def coset_class_masses(basis_words, basis_labels, x0_word, x0_label, log_x, n_labels):
    """Per-class (m, s) log-sum-exp masses over the coset x0 + span(basis).

    States are 64-bit words; weight of a state is exp(log_x * popcount).
    """
    b = len(basis_words)
    m = np.full(n_labels, -np.inf)
    s = np.zeros(n_labels)
    chunk_bits = min(b, 16)
    chunk = 1 << chunk_bits
    low = np.arange(chunk, dtype=np.uint64)
    low_sel = ((low[:, None] >> np.arange(chunk_bits, dtype=np.uint64)) & 1).astype(
        bool
    )
    words = np.asarray(basis_words, dtype=np.uint64)
    labels = np.asarray(basis_labels, dtype=np.uint8)
    for hi_part in range(1 << (b - chunk_bits)):
        w = np.full(chunk, x0_word, dtype=np.uint64)
        lab = np.full(chunk, x0_label, dtype=np.uint8)
        for j in range(chunk_bits, b):
            if (hi_part >> (j - chunk_bits)) & 1:
                w ^= words[j]
                lab ^= labels[j]
        for j in range(chunk_bits):
            w[low_sel[:, j]] ^= words[j]
            lab[low_sel[:, j]] ^= labels[j]
        logw = log_x * np.bitwise_count(w).astype(np.float64)
        for c in range(n_labels):
            sel = lab == c
            if not sel.any():
                continue
            mx = float(logw[sel].max())
            if mx > m[c]:
                s[c] = s[c] * math.exp(m[c] - mx) + float(
                    np.exp(logw[sel] - mx).sum()
                )
                m[c] = mx
            else:
                s[c] += float(np.exp(logw[sel] - m[c]).sum())
    return m, s
