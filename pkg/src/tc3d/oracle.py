"""Brute-force ground truth on small instances.

Partition functions are exact sums over all spin states, walked in
Gray-code order with a streaming max-shifted log-sum-exp, so no scale
of beta overflows.  Gauge models are optionally quotiented by the span
of their gauge generators first (pivot spins frozen, orbit volume
multiplied back), which stretches the reach from ~20 raw spins to ~40.

The class-probability oracle enumerates every error chain compatible
with a syndrome on the static L=2 code, bins them by winding class,
and provides the matching normalized partition functions of the mapped
spin model at the matching coupling, which the mapping tests compare
at 1e-10.

Enumeration ranges are partitioned into fixed chunks merged in index
order, so results are identical no matter how many workers ran them.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import kernels
from .cells import Chain, dual_chain
from .errors import (
    DimensionMismatchError,
    InfeasibleSyndromeError,
    ResourceError,
)
from .gf2 import boundary_matrix, classify_cycle, gf2_nullspace, gf2_rank, gf2_solve
from .models import (
    build_model,
    couplings,
    disorder_from_error_chain,
    nishimori_beta,
)
from .toric import SECTOR_Z

LN2 = math.log(2.0)
_CHUNK_BITS = 16


@dataclass(frozen=True)
class EnumerationBudget:
    """State-count limits for exact sums."""

    max_states: int = 1 << 22
    hard_cap: int = 1 << 26
    gauge_fixing: bool = True

    def check(self, bits):
        cap = min(self.max_states, self.hard_cap)
        if (1 << bits) > cap:
            raise ResourceError(
                f"enumeration needs 2^{bits} states, budget allows {cap}",
                required_bits=bits,
            )


def _enumeration_spins(model, budget):
    """(spin indices to enumerate, ln multiplier for the quotient)."""
    if budget.gauge_fixing and model.kind.has_gauge_symmetry:
        pivots, free = model.gauge_pivots()
        return free, len(pivots) * LN2
    return np.arange(model.n_spins, dtype=np.int64), 0.0


def exact_log_partition(model, disorder, beta, budget=None, workers=1,
                        beta_temporal=None):
    """ln Z by exhaustive (optionally gauge-fixed) enumeration."""
    budget = budget or EnumerationBudget()
    coupl = couplings(model, disorder, beta, beta_temporal)
    spins_enum, ln_mult = _enumeration_spins(model, budget)
    bits = len(spins_enum)
    budget.check(bits)

    low = spins_enum[: min(bits, _CHUNK_BITS)]
    high = spins_enum[min(bits, _CHUNK_BITS):]

    def chunk(hi_pattern):
        spins = model.all_up()
        for j, s in enumerate(high):
            if (hi_pattern >> j) & 1:
                spins[s] = -1
        u = model.term_values(spins)
        e0 = float(np.dot(coupl, u.astype(np.float64)))
        return kernels.gray_logsumexp(
            spins, u, coupl, model.spin_term_offsets, model.spin_terms, e0, low
        )

    patterns = range(1 << len(high))
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            partials = list(pool.map(chunk, patterns))
    else:
        partials = [chunk(p) for p in patterns]
    m, s = kernels.merge_logsumexp(partials)
    return m + math.log(s) + ln_mult


def exact_state_distribution(model, disorder, beta, beta_temporal=None):
    """Boltzmann probability of every state; index bit j set <=> spin j = -1.

    Dense: restricted to <= 20 spins.
    """
    n = model.n_spins
    if n > 20:
        raise ResourceError(f"dense distribution limited to 20 spins, got {n}",
                            required_bits=n)
    coupl = couplings(model, disorder, beta, beta_temporal)
    states = (np.arange(1 << n, dtype=np.int64)[:, None] >> np.arange(n)) & 1
    spins = (1 - 2 * states).astype(np.int8)
    u = np.prod(spins[:, model.term_members], axis=2, dtype=np.int64)
    energies = u @ coupl
    w = np.exp(energies - energies.max())
    return w / w.sum()


def state_index(spins):
    n = spins.shape[0]
    bits = (spins < 0).astype(np.int64)
    return int(np.dot(bits, 1 << np.arange(n, dtype=np.int64)))


def mc_distribution_check(model, disorder, beta, n_sweeps, seed,
                          sweep_order="sequential", ladder=None, swap_every=1):
    """Total-variation distance between MC state visits and the exact
    Boltzmann distribution; with `ladder`, checks the marginal at each
    rung and returns the worst."""
    from . import kernels
    from .mc import ChainState, parallel_tempering_step

    exact = {}
    rng = np.random.default_rng(seed)
    betas = ladder if ladder else [beta]
    states = [
        ChainState(model, disorder, b, np.random.default_rng((seed, i)))
        for i, b in enumerate(betas)
    ]
    counts = np.zeros((len(betas), 1 << model.n_spins), dtype=np.int64)
    if ladder is None:
        # single chain: batch sweeps through the kernel, chunked
        st = states[0]
        n = model.n_spins
        idx = state_index(st.spins)
        done = 0
        while done < n_sweeps:
            chunk = min(4096, n_sweeps - done)
            uniforms = st.rng.random(chunk * n)
            sites = None
            if sweep_order == "random":
                sites = st.rng.integers(0, n, size=chunk * n).astype(np.int32)
            out = np.empty(chunk, dtype=np.int64)
            idx = kernels.sweep_record(
                st.spins, st.u, st.coupl, model.spin_term_offsets,
                model.spin_terms, uniforms, sites, idx, out,
            )
            counts[0] += np.bincount(out, minlength=counts.shape[1])
            done += chunk
    else:
        for _ in range(n_sweeps):
            for j, st in enumerate(states):
                st.sweep(sweep_order)
                counts[j, state_index(st.spins)] += 1
            parallel_tempering_step(states, rng)
    worst = 0.0
    for j, b in enumerate(betas):
        if b not in exact:
            exact[b] = exact_state_distribution(model, disorder, b)
        emp = counts[j] / counts[j].sum()
        tv = 0.5 * float(np.abs(emp - exact[b]).sum())
        worst = max(worst, tv)
    return worst


# -- homology-class probabilities -------------------------------------------


def _pack_bits(bits):
    if bits.shape[-1] > 64:
        raise ResourceError("bit-packing limited to 64 cells", required_bits=64)
    weights = (np.uint64(1) << np.arange(bits.shape[-1], dtype=np.uint64))
    return (bits.astype(np.uint64) * weights).sum(axis=-1, dtype=np.uint64)


def _class_setup(code, syndrome, sector):
    cx = code.complex
    rank = 1 if sector == SECTOR_Z else 2
    basis = code.string_basis if sector == SECTOR_Z else code.membrane_basis
    bm = boundary_matrix(cx, rank)
    x0 = gf2_solve(bm, syndrome.to_bits())
    if x0 is None:
        raise InfeasibleSyndromeError("syndrome has no compatible error chain")
    cycles = gf2_nullspace(bm)
    labels = np.array(
        [
            int.from_bytes(
                np.packbits(
                    classify_cycle(cx, basis, Chain.from_bits(cx, rank, row)),
                    bitorder="little",
                ).tobytes(),
                "little",
            )
            for row in cycles
        ],
        dtype=np.uint8,
    )
    return rank, basis, x0, cycles, labels


def exact_class_probabilities(code, syndrome, p, sector=SECTOR_Z, budget=None):
    """Probability of each winding class given a static syndrome.

    Sums p^|e| (1-p)^(n-|e|) over every compatible error chain e; class
    bits are intersection parities with the detector planes, so label 0
    is the class of the reference solution itself.
    """
    budget = budget or EnumerationBudget()
    rank, basis, x0, cycles, labels = _class_setup(code, syndrome, sector)
    budget.check(cycles.shape[0])
    n_labels = 1 << len(basis.representatives)
    log_x = math.log(p) - math.log1p(-p)
    m, s = kernels.coset_class_masses(
        _pack_bits(cycles),
        labels,
        np.uint64(_pack_bits(np.asarray(x0)[None, :])[0]),
        np.uint8(0),
        log_x,
        n_labels,
    )
    log_masses = np.where(s > 0, m + np.log(np.maximum(s, 1e-300)), -np.inf)
    shift = log_masses.max()
    probs = np.exp(log_masses - shift)
    return probs / probs.sum()


def class_free_energy_difference(code, syndrome, p, label, sector=SECTOR_Z,
                                 budget=None):
    """beta * dF = -ln(pr_label / pr_0); +inf flags an empty class."""
    probs = exact_class_probabilities(code, syndrome, p, sector, budget)
    if probs[label] == 0.0:
        return math.inf
    return -math.log(probs[label] / probs[0])


def mapped_model(code, sector):
    """The spin model whose disorder the sector's error chains feed.

    Z sector -> 4-body plaquette gauge model on the dual lattice, terms
    sitting on the dual faces of the qubit links; X sector -> bond Ising
    model whose bonds are the qubit links themselves.
    """
    if sector == SECTOR_Z:
        return build_model("RPGM3", code.complex)
    return build_model("RBIM3", code.complex)


def mapped_model_spacetime(layout, sector):
    """Spin model for T noisy rounds: term cells correspond one-to-one
    to spacetime error cells through the dual map, so the lattice must
    be fully periodic (periodic time)."""
    if not layout.complex.fully_periodic:
        raise DimensionMismatchError(
            "spacetime mapping needs periodic time (the dual transport "
            "of error cells onto term cells is torus-only)"
        )
    if sector == SECTOR_Z:
        return build_model("RCGM4", layout.complex)
    return build_model("RPGM4", layout.complex)


def error_to_disorder(model, error):
    """Transport an error chain to term-cell disorder via the dual map
    when the ranks call for it."""
    if error.rank == model.kind.term_rank:
        chain = error
    elif error.complex.dimension - error.rank == model.kind.term_rank:
        chain = dual_chain(error)
    else:
        raise DimensionMismatchError(
            f"rank-{error.rank} chain does not map onto {model.kind.name} terms"
        )
    return disorder_from_error_chain(model, chain)


def sm_class_probabilities(code, syndrome, p, sector=SECTOR_Z, budget=None,
                           workers=1):
    """Class probabilities the statistical-mechanics way: normalized
    partition functions of the mapped model, one disorder realization
    per class representative, at the matching coupling."""
    budget = budget or EnumerationBudget()
    rank, basis, x0, _, _ = _class_setup(code, syndrome, sector)
    cx = code.complex
    model = mapped_model(code, sector)
    beta = nishimori_beta(p)
    n_labels = 1 << len(basis.representatives)
    ln_z = np.empty(n_labels)
    x0_chain = Chain.from_bits(cx, rank, x0)
    for label in range(n_labels):
        rep = x0_chain
        for i in range(len(basis.representatives)):
            if (label >> i) & 1:
                rep = rep ^ basis.representatives[i]
        disorder = error_to_disorder(model, rep)
        ln_z[label] = exact_log_partition(model, disorder, beta, budget,
                                          workers=workers)
    shift = ln_z.max()
    probs = np.exp(ln_z - shift)
    return probs / probs.sum()


# -- Kramers-Wannier prefactor ----------------------------------------------


@dataclass(frozen=True)
class KWReport:
    """Two-sided enumeration against the duality counting identity."""

    beta: float
    beta_dual: float
    ln_z: float
    ln_z_dual: float
    ln_prefactor: float
    residual: float
    residual_density: float
    topological_obstruction: int
    exact_expected: bool


def _partner_log_z(cx, kt, beta_dual):
    """ln Z of the low-temperature partner: spins on (kt+1)-cells, term t
    coupling the cells of its coboundary (ragged near open boundaries,
    empty products count as +1).  Dense enumeration, partner side only.
    """
    n_terms = cx.n_cells(kt)
    n_spins = cx.n_cells(kt + 1) if kt + 1 <= cx.dimension else 0
    if n_spins > 20:
        raise ResourceError(
            f"partner side has {n_spins} spins, dense limit is 20",
            required_bits=n_spins,
        )
    if n_spins == 0:
        return n_terms * beta_dual, 0
    flat, offsets = cx.coboundary_indices(kt, np.arange(n_terms))
    states = (np.arange(1 << n_spins, dtype=np.int64)[:, None] >> np.arange(n_spins)) & 1
    spins = (1 - 2 * states).astype(np.int64)
    energies = np.zeros(states.shape[0])
    for t in range(n_terms):
        inc = flat[offsets[t] : offsets[t + 1]]
        v = np.prod(spins[:, inc], axis=1) if inc.size else np.ones(states.shape[0])
        energies += beta_dual * v
    mx = energies.max()
    return float(mx + np.log(np.exp(energies - mx).sum())), n_spins


def kw_prefactor_check(model, beta, dual_model=None, budget=None, workers=1):
    """Check ln Z(beta) = ln prefactor + ln Z_dual(beta_dual) at p = 0.

    The prefactor follows from the paired high/low-temperature
    expansions: the cycle-space weight enumerator of the term cells on
    the gauge side matches, up to counting factors, the coboundary
    enumerator on the partner side, and the two coincide exactly when
    the term-rank (co)homology vanishes — true on open slabs.  On tori
    the leftover winding sectors make it an O(1)/volume discrepancy,
    reported, not asserted.

    `dual_model` (e.g. from derive_dual_model, periodic complexes only)
    is used for the partner side when given; otherwise the partner is
    enumerated structurally from the complex, which also covers open
    slabs where the partner may have no spins at all.
    """
    from .duality import kw_dual_coupling
    from .models import DisorderSample

    budget = budget or EnumerationBudget()
    cx = model.complex
    kt = model.kind.term_rank
    beta_dual = kw_dual_coupling(beta)

    ln_z = exact_log_partition(
        model, DisorderSample(np.ones(model.n_terms, dtype=np.int8)), beta,
        budget, workers,
    )
    if dual_model is not None:
        if dual_model.n_terms != model.n_terms:
            raise DimensionMismatchError(
                "models are not a dual pair (term counts differ)"
            )
        ln_zd = exact_log_partition(
            dual_model,
            DisorderSample(np.ones(dual_model.n_terms, dtype=np.int8)),
            beta_dual,
            budget,
            workers,
        )
        n_dual_spins = dual_model.n_spins
    else:
        ln_zd, n_dual_spins = _partner_log_z(cx, kt, beta_dual)

    n_t = model.n_terms
    rank_down = gf2_rank(boundary_matrix(cx, kt))  # dim of coboundary image
    if kt + 1 <= cx.dimension:
        rank_up = gf2_rank(boundary_matrix(cx, kt + 1))
    else:
        rank_up = 0
    z_dim = n_t - rank_down  # cycle space of term chains
    obstruction = n_t - rank_up - rank_down  # term-rank betti number

    x = math.tanh(beta)
    ln_pref = (
        n_t * math.log(math.cosh(beta))
        + model.n_spins * LN2
        + (z_dim - n_t) * LN2
        + n_t * math.log1p(x)
        - n_t * math.log(math.cosh(beta_dual))
        - n_dual_spins * LN2
    )
    residual = abs(ln_z - (ln_pref + ln_zd))
    return KWReport(
        beta=beta,
        beta_dual=beta_dual,
        ln_z=ln_z,
        ln_z_dual=ln_zd,
        ln_prefactor=ln_pref,
        residual=residual,
        residual_density=residual / n_t,
        topological_obstruction=obstruction,
        exact_expected=obstruction == 0,
    )


def exact_wilson_means(model, disorder, beta, observables, budget=None):
    """Exact <W> for a list of ('loop', a, b) / ('surface', a, b, c)
    observables by direct enumeration (gauge-fixed)."""
    from .mc import loop_cells, surface_cells

    budget = budget or EnumerationBudget()
    spins_enum, _ = _enumeration_spins(model, budget)
    bits = len(spins_enum)
    budget.check(bits)
    if bits > 24:
        raise ResourceError("wilson enumeration limited to 24 effective spins",
                            required_bits=bits)
    coupl = couplings(model, disorder, beta)
    states = (np.arange(1 << bits, dtype=np.int64)[:, None] >> np.arange(bits)) & 1
    spins = np.ones((states.shape[0], model.n_spins), dtype=np.int8)
    spins[:, spins_enum] = (1 - 2 * states).astype(np.int8)
    u = np.prod(spins[:, model.term_members], axis=2, dtype=np.int64)
    energies = u @ coupl
    w = np.exp(energies - energies.max())
    z = w.sum()
    out = {}
    for obs in observables:
        if obs[0] == "loop":
            cells = loop_cells(model.complex, obs[1], obs[2])
            key = f"loop_{obs[1]}x{obs[2]}"
        else:
            cells = surface_cells(model.complex, obs[1], obs[2], obs[3])
            key = f"surf_{obs[1]}x{obs[2]}x{obs[3]}"
        vals = np.prod(spins[:, cells], axis=1, dtype=np.int64)
        out[key] = float((vals * w).sum() / z)
    return out
