"""Metropolis dynamics, parallel tempering, and observable measurement.

Sweeps propose one flip per spin (sequential site order by default;
random order is available and is used by the distribution tests to
guard against order artifacts).  Uniform variates are pre-drawn per
sweep from a seeded PCG64 generator and handed to the kernel, so a run
is reproducible bit for bit from its seed on either kernel backend.

Observables follow the models: energy per term and the per-term
disorder overlap <eta u> everywhere, magnetization for vertex-spin
models, Wilson loops for link-spin models, and Wilson surfaces (closed
box membranes) for the plaquette-spin model.  Disorder averaging takes
the thermal mean per sample first and reports mean +- standard error
across samples.
"""

from __future__ import annotations

import itertools
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from . import kernels
from .errors import (
    DegenerateStatisticsError,
    DimensionMismatchError,
    UndefinedCumulantError,
)
from .models import couplings, sample_disorder

SWEEP_SEQUENTIAL = "sequential"
SWEEP_RANDOM = "random"


@dataclass(frozen=True)
class MCConfig:
    """Knobs for one chain (or one ladder) on one disorder sample."""

    therm_sweeps: int = 1000
    sweeps: int = 10000
    interval: int = 10
    betas: tuple = ()
    seed: int = 0
    samples: int = 100
    sweep_order: str = SWEEP_SEQUENTIAL
    start: str = "cold"

    def __post_init__(self):
        if min(self.therm_sweeps, self.sweeps, self.interval, self.samples) < 1:
            raise DimensionMismatchError("all MC counts must be >= 1")
        betas = tuple(float(b) for b in self.betas)
        if list(betas) != sorted(set(betas)):
            raise DimensionMismatchError("beta ladder must be strictly sorted")
        object.__setattr__(self, "betas", betas)
        if self.sweep_order not in (SWEEP_SEQUENTIAL, SWEEP_RANDOM):
            raise DimensionMismatchError(f"unknown sweep order {self.sweep_order!r}")


@dataclass(frozen=True)
class MeasurePlan:
    """Which Wilson observables to record.

    loops: (a, b) rectangles in `loop_axes`; surfaces: (a, b, c) boxes in
    `surface_axes`.  By default a single anchored instance is measured
    per record (values are +-1); `average_anchors` replaces that with
    the translation average, which is what noisy decay-law sweeps need.
    """

    loops: tuple = ()
    surfaces: tuple = ()
    loop_axes: tuple = (0, 1)
    surface_axes: tuple = (0, 1, 2)
    average_anchors: bool = False


class ChainState:
    """One Markov chain: spins plus cached per-term products."""

    def __init__(self, model, disorder, beta, rng, start="cold", beta_temporal=None):
        self.model = model
        self.disorder = disorder
        self.beta = float(beta)
        self.coupl = couplings(model, disorder, beta, beta_temporal)
        self.rng = rng
        if start == "cold":
            self.spins = model.all_up()
        elif start == "hot":
            self.spins = model.random_state(rng)
        else:
            raise DimensionMismatchError(f"unknown start {start!r}")
        self.u = model.term_values(self.spins)

    def energy(self):
        """Model energy H at J=1 (not multiplied by beta)."""
        return -float(
            np.dot(self.disorder.eta.astype(np.float64), self.u.astype(np.float64))
        )

    def sweep(self, order=SWEEP_SEQUENTIAL):
        n = self.model.n_spins
        uniforms = self.rng.random(n)
        sites = None
        if order == SWEEP_RANDOM:
            sites = self.rng.integers(0, n, size=n).astype(np.int32)
        return kernels.metropolis_sweep(
            self.spins,
            self.u,
            self.coupl,
            self.model.spin_term_offsets,
            self.model.spin_terms,
            uniforms,
            sites,
        )


def metropolis_sweep(model, state, beta, disorder, rng, order=SWEEP_SEQUENTIAL):
    """Functional wrapper: one sweep over a raw spin vector."""
    cs = ChainState.__new__(ChainState)
    cs.model = model
    cs.disorder = disorder
    cs.beta = beta
    cs.coupl = couplings(model, disorder, beta)
    cs.rng = rng
    cs.spins = state
    cs.u = model.term_values(state)
    cs.sweep(order)
    return cs.spins


# -- Wilson observables ------------------------------------------------------


def _axis_link_grid(cx, axis):
    """Index grid of all links along `axis`, shaped like the lattice."""
    si = cx.axis_subsets(1).index((axis,))
    exts = cx._extents[1][si]
    grids = [np.arange(e) for e in exts]
    coords = np.stack(np.meshgrid(*grids, indexing="ij"), axis=-1).reshape(-1, cx.dimension)
    return np.asarray(
        cx.encode(1, np.full(coords.shape[0], si), coords)
    ).reshape(tuple(exts))


def _pair_face_grid(cx, axes):
    si = cx.axis_subsets(2).index(tuple(sorted(axes)))
    exts = cx._extents[2][si]
    grids = [np.arange(e) for e in exts]
    coords = np.stack(np.meshgrid(*grids, indexing="ij"), axis=-1).reshape(-1, cx.dimension)
    return np.asarray(
        cx.encode(2, np.full(coords.shape[0], si), coords)
    ).reshape(tuple(exts))


def loop_cells(cx, a, b, axes=(0, 1), anchor=None):
    """Link indices of an a x b rectangle in the (axes[0], axes[1]) plane."""
    mu, nu = axes
    d = cx.dimension
    if anchor is None:
        anchor = (0,) * d
    for size, ax in ((a, mu), (b, nu)):
        if not 1 <= size < cx.lengths[ax]:
            raise DimensionMismatchError(
                f"loop extent {size} does not fit axis {ax} (L={cx.lengths[ax]})"
            )
    base = np.asarray(anchor, dtype=np.int64)
    cells = []
    for j in range(a):  # mu-directed legs at nu = 0 and nu = b
        for off_nu in (0, b):
            c = base.copy()
            c[mu] += j
            c[nu] += off_nu
            cells.append(cx.index_of_coords(1, (mu,), c))
    for j in range(b):
        for off_mu in (0, a):
            c = base.copy()
            c[nu] += j
            c[mu] += off_mu
            cells.append(cx.index_of_coords(1, (nu,), c))
    return np.array(cells, dtype=np.int64)


def surface_cells(cx, a, b, c, axes=(0, 1, 2), anchor=None):
    """Face indices of the closed surface of an a x b x c box."""
    ax = tuple(axes)
    d = cx.dimension
    if anchor is None:
        anchor = (0,) * d
    sizes = (a, b, c)
    for size, axis in zip(sizes, ax):
        if not 1 <= size < cx.lengths[axis]:
            raise DimensionMismatchError(
                f"surface extent {size} does not fit axis {axis}"
            )
    base = np.asarray(anchor, dtype=np.int64)
    cells = []
    for k in range(3):  # face pair orthogonal to ax[k]
        u_ax, v_ax = (ax[(k + 1) % 3], ax[(k + 2) % 3])
        u_sz, v_sz = sizes[(k + 1) % 3], sizes[(k + 2) % 3]
        face_axes = tuple(sorted((u_ax, v_ax)))
        for off in (0, sizes[k]):
            for iu in range(u_sz):
                for iv in range(v_sz):
                    cc = base.copy()
                    cc[ax[k]] += off
                    cc[u_ax] += iu
                    cc[v_ax] += iv
                    cells.append(cx.index_of_coords(2, face_axes, cc))
    return np.array(cells, dtype=np.int64)


def wilson_loop(model, spins, a, b, axes=(0, 1), anchor=None):
    """Product of link spins around a non-winding rectangle; +-1."""
    cells = loop_cells(model.complex, a, b, axes, anchor)
    return int(np.prod(spins[cells].astype(np.int64)))


def wilson_surface(model, spins, a, b, c, axes=(0, 1, 2), anchor=None):
    """Product of face spins over a closed box membrane; +-1."""
    cells = surface_cells(model.complex, a, b, c, axes, anchor)
    return int(np.prod(spins[cells].astype(np.int64)))


def wilson_loop_average(model, spins, a, b, axes=(0, 1)):
    """Translation-averaged rectangle product (real-valued)."""
    mu, nu = axes
    cx = model.complex
    grid_mu = spins[_axis_link_grid(cx, mu)].astype(np.float64)
    grid_nu = spins[_axis_link_grid(cx, nu)].astype(np.float64)
    run_mu = np.ones_like(grid_mu)
    for j in range(a):
        run_mu = run_mu * np.roll(grid_mu, -j, axis=mu)
    run_nu = np.ones_like(grid_nu)
    for j in range(b):
        run_nu = run_nu * np.roll(grid_nu, -j, axis=nu)
    w = (
        run_mu
        * np.roll(run_mu, -b, axis=nu)
        * run_nu
        * np.roll(run_nu, -a, axis=mu)
    )
    return float(w.mean())


def wilson_surface_average(model, spins, a, b, c, axes=(0, 1, 2)):
    ax = tuple(axes)
    cx = model.complex
    sizes = (a, b, c)
    total = None
    for k in range(3):
        u_ax, v_ax = ax[(k + 1) % 3], ax[(k + 2) % 3]
        face_axes = tuple(sorted((u_ax, v_ax)))
        grid = spins[_pair_face_grid(cx, face_axes)].astype(np.float64)
        slab = np.ones_like(grid)
        for iu in range(sizes[(k + 1) % 3]):
            for iv in range(sizes[(k + 2) % 3]):
                slab = slab * np.roll(
                    np.roll(grid, -iu, axis=u_ax), -iv, axis=v_ax
                )
        pair = slab * np.roll(slab, -sizes[k], axis=ax[k])
        total = pair if total is None else total * pair
    return float(total.mean())


# -- series and averaging ----------------------------------------------------


@dataclass
class ObservableSeries:
    """Per-measurement records of one chain on one disorder sample."""

    kind: str
    shape: tuple
    beta: float
    p: float
    seed: int
    therm_sweeps: int
    interval: int
    records: dict = field(default_factory=dict)

    def mean(self, key):
        return float(np.mean(self.records[key]))

    def keys(self):
        return list(self.records)

    def __len__(self):
        return len(next(iter(self.records.values()))) if self.records else 0


def _measure(model, state, plan):
    out = {
        "energy_per_term": state.energy() / model.n_terms,
        "overlap": -state.energy() / model.n_terms,
    }
    if model.kind.spin_rank == 0:
        out["magnetization"] = float(state.spins.mean())
    for a, b in plan.loops:
        key = f"loop_{a}x{b}"
        if plan.average_anchors:
            out[key] = wilson_loop_average(model, state.spins, a, b, plan.loop_axes)
        else:
            out[key] = wilson_loop(model, state.spins, a, b, plan.loop_axes)
    for a, b, c in plan.surfaces:
        key = f"surf_{a}x{b}x{c}"
        if plan.average_anchors:
            out[key] = wilson_surface_average(
                model, state.spins, a, b, c, plan.surface_axes
            )
        else:
            out[key] = wilson_surface(model, state.spins, a, b, c, plan.surface_axes)
    return out


def run_chain(model, disorder, beta, cfg, plan=None, beta_temporal=None):
    """Thermalize, then record observables every `interval` sweeps."""
    plan = plan or MeasurePlan()
    rng = np.random.default_rng(cfg.seed)
    state = ChainState(model, disorder, beta, rng, cfg.start, beta_temporal)
    for _ in range(cfg.therm_sweeps):
        state.sweep(cfg.sweep_order)
    n_meas = cfg.sweeps // cfg.interval
    records = None
    for i in range(n_meas):
        for _ in range(cfg.interval):
            state.sweep(cfg.sweep_order)
        vals = _measure(model, state, plan)
        if records is None:
            records = {k: np.empty(n_meas) for k in vals}
        for k, v in vals.items():
            records[k][i] = v
    series = ObservableSeries(
        kind=model.kind.name,
        shape=model.complex.shape_key(),
        beta=beta,
        p=disorder.p if disorder.p is not None else math.nan,
        seed=cfg.seed,
        therm_sweeps=cfg.therm_sweeps,
        interval=cfg.interval,
        records=records or {},
    )
    return series


def parallel_tempering_step(states, rng):
    """Propose adjacent swaps across the ladder; accept with
    min(1, exp(dbeta * dE)).  States exchange configurations in place."""
    if len(states) < 2:
        raise DimensionMismatchError("parallel tempering needs >= 2 chains")
    model = states[0].model
    for st in states[1:]:
        if st.model is not model:
            raise DimensionMismatchError("ladder chains must share one model")
    n_swap = 0
    for i in range(len(states) - 1):
        a, b = states[i], states[i + 1]
        arg = (a.beta - b.beta) * (a.energy() - b.energy())
        if arg >= 0.0 or rng.random() < math.exp(arg):
            a.spins, b.spins = b.spins, a.spins
            a.u, b.u = b.u, a.u
            n_swap += 1
    return n_swap


def run_ladder(model, disorder, cfg, plan=None, swap_every=1, beta_temporal=None):
    """Parallel-tempering run over cfg.betas; returns one series per rung."""
    if len(cfg.betas) < 2:
        raise DimensionMismatchError("ladder needs >= 2 betas in cfg.betas")
    plan = plan or MeasurePlan()
    rng = np.random.default_rng(cfg.seed)
    chain_rngs = [np.random.default_rng((cfg.seed, 1 + i)) for i in range(len(cfg.betas))]
    states = [
        ChainState(model, disorder, b, r, cfg.start, beta_temporal)
        for b, r in zip(cfg.betas, chain_rngs)
    ]

    def advance(n):
        done = 0
        while done < n:
            step = min(swap_every, n - done)
            for st in states:
                for _ in range(step):
                    st.sweep(cfg.sweep_order)
            parallel_tempering_step(states, rng)
            done += step

    advance(cfg.therm_sweeps)
    n_meas = cfg.sweeps // cfg.interval
    records = [None] * len(states)
    for i in range(n_meas):
        advance(cfg.interval)
        for j, st in enumerate(states):
            vals = _measure(model, st, plan)
            if records[j] is None:
                records[j] = {k: np.empty(n_meas) for k in vals}
            for k, v in vals.items():
                records[j][k][i] = v
    return [
        ObservableSeries(
            kind=model.kind.name,
            shape=model.complex.shape_key(),
            beta=b,
            p=disorder.p if disorder.p is not None else math.nan,
            seed=cfg.seed,
            therm_sweeps=cfg.therm_sweeps,
            interval=cfg.interval,
            records=rec,
        )
        for b, rec in zip(cfg.betas, records)
    ]


@dataclass(frozen=True)
class DisorderAverage:
    mean: float
    stderr: float
    n_samples: int


def disorder_average(series_list, key):
    """Mean and standard error across per-sample thermal means."""
    if len(series_list) < 2:
        raise DegenerateStatisticsError("disorder average needs >= 2 samples")
    means = np.array([s.mean(key) for s in series_list])
    return DisorderAverage(
        mean=float(means.mean()),
        stderr=float(means.std(ddof=1) / math.sqrt(len(means))),
        n_samples=len(means),
    )


def binder_cumulant(m_values):
    """1 - <m^4> / (3 <m^2>^2) of one magnetization series."""
    m = np.asarray(m_values, dtype=np.float64)
    m2 = float(np.mean(m * m))
    if m2 == 0.0:
        raise UndefinedCumulantError("magnetization is identically zero")
    m4 = float(np.mean(m**4))
    return 1.0 - m4 / (3.0 * m2 * m2)


# -- disorder ensembles ------------------------------------------------------


def _one_sample(args):
    (model, p, beta, cfg, plan, index, use_ladder, swap_every, beta_temporal) = args
    rng = np.random.default_rng((cfg.seed, index))
    disorder = sample_disorder(model, p, rng)
    sub = np.random.SeedSequence(entropy=cfg.seed, spawn_key=(index,)).generate_state(1)[0]
    sample_cfg = replace(cfg, seed=int(sub))
    if use_ladder:
        series = run_ladder(model, disorder, sample_cfg, plan, swap_every, beta_temporal)
    else:
        series = run_chain(model, disorder, beta, sample_cfg, plan, beta_temporal)
    return index, series


def run_disorder_ensemble(
    model,
    p,
    beta,
    cfg,
    plan=None,
    workers=1,
    use_ladder=False,
    swap_every=1,
    beta_temporal=None,
):
    """Independent disorder samples, deterministic by sample index.

    Seeds derive from (cfg.seed, index) via SeedSequence, so the result
    does not depend on the worker count; reduction is in index order.
    """
    plan = plan or MeasurePlan()
    jobs = [
        (model, p, beta, cfg, plan, i, use_ladder, swap_every, beta_temporal)
        for i in range(cfg.samples)
    ]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_one_sample, jobs, chunksize=1))
    else:
        results = [_one_sample(j) for j in jobs]
    results.sort(key=lambda pair: pair[0])
    return [series for _, series in results]


def ensemble_binder(series_list):
    """Disorder-averaged Binder cumulant with per-sample values."""
    per_sample = np.array(
        [binder_cumulant(s.records["magnetization"]) for s in series_list]
    )
    return per_sample


def grid_sizes(max_size, limit):
    """Loop/surface size grids 1..min(max_size, limit)."""
    top = min(max_size, limit)
    return list(itertools.product(range(1, top + 1), repeat=2))
