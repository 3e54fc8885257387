"""Experiment orchestration: Nishimori sweeps and threshold reports.

A threshold run simulates one model of a dual pair along the
e^{-2bJ} = p/(1-p) line, locates the crossing of the per-size Binder
curves, and converts the critical rate to the partner's through the
entropy relation.  A self-dual model needs no simulation at all: its
transition is pinned to the rate where the binary entropy is 1/2.

All seeds derive from one master seed by (size index, grid index,
sample index), so a sweep is reproducible regardless of worker count.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .analysis import CurveFamily, estimate_crossing
from .cells import build_complex
from .duality import DUAL_KIND, dual_critical_p, self_dual_critical_p, shannon_entropy
from .errors import ConfigError
from .mc import MCConfig, MeasurePlan, ensemble_binder, run_disorder_ensemble
from .models import build_model, kind_of, nishimori_beta


def _model_for_size(kind_name, L):
    kind = kind_of(kind_name)
    return build_model(kind, build_complex(kind.dimension, L))


def _sweep_seed(master, size_index, grid_index):
    return int(
        np.random.SeedSequence(
            entropy=master, spawn_key=(size_index, grid_index)
        ).generate_state(1)[0]
    )


@dataclass
class SweepPoint:
    size: int
    x: float
    beta: float
    binder_mean: float
    binder_err: float
    samples: np.ndarray = field(repr=False, default=None)


def binder_curve(
    kind_name,
    L,
    xs,
    mode,
    cfg,
    size_index=0,
    workers=1,
    p_fixed=0.0,
    use_ladder=False,
):
    """Binder cumulant vs p (mode='nishimori') or vs beta (mode='beta').

    Per grid point: `cfg.samples` disorder samples (thermal-only
    replicas when the rate is 0), one Binder value per sample.
    """
    model = _model_for_size(kind_name, L)
    if model.kind.spin_rank != 0:
        raise ConfigError("binder sweeps need a vertex-spin (magnetized) model")
    points = []
    for gi, x in enumerate(xs):
        if mode == "nishimori":
            p, beta = float(x), nishimori_beta(float(x))
        elif mode == "beta":
            p, beta = p_fixed, float(x)
        else:
            raise ConfigError(f"unknown sweep mode {mode!r}")
        seeded = MCConfig(
            therm_sweeps=cfg.therm_sweeps,
            sweeps=cfg.sweeps,
            interval=cfg.interval,
            betas=cfg.betas,
            seed=_sweep_seed(cfg.seed, size_index, gi),
            samples=cfg.samples,
            sweep_order=cfg.sweep_order,
            start=cfg.start,
        )
        series = run_disorder_ensemble(
            model, p, beta, seeded, MeasurePlan(), workers=workers,
            use_ladder=use_ladder,
        )
        if use_ladder:
            series = [s for ladder in series for s in ladder if s.beta == beta]
        values = ensemble_binder(series)
        points.append(
            SweepPoint(
                size=L,
                x=float(x),
                beta=beta,
                binder_mean=float(values.mean()),
                binder_err=float(values.std(ddof=1) / math.sqrt(len(values)))
                if len(values) > 1
                else 0.0,
                samples=values[:, None],
            )
        )
    xs_arr = np.array([pt.x for pt in points])
    samples = np.concatenate([pt.samples for pt in points], axis=1)
    return (
        CurveFamily(
            size=L,
            xs=xs_arr,
            means=np.array([pt.binder_mean for pt in points]),
            stderrs=np.array([pt.binder_err for pt in points]),
            samples=samples,
        ),
        points,
    )


def binder_sweep(kind_name, sizes, xs, mode, cfg, workers=1, p_fixed=0.0,
                 use_ladder=False):
    curves = []
    all_points = []
    for si, L in enumerate(sizes):
        curve, points = binder_curve(
            kind_name, L, xs, mode, cfg, size_index=si, workers=workers,
            p_fixed=p_fixed, use_ladder=use_ladder,
        )
        curves.append(curve)
        all_points.extend(points)
    return curves, all_points


DEFAULT_MC = {
    "therm_sweeps": 1000,
    "sweeps": 10000,
    "interval": 10,
    "samples": 100,
}


def mc_config_from(config, master_seed):
    mc_dict = dict(DEFAULT_MC)
    mc_dict.update(config.get("mc", {}))
    allowed = {"therm_sweeps", "sweeps", "interval", "samples", "sweep_order",
               "start", "betas"}
    unknown = set(mc_dict) - allowed
    if unknown:
        raise ConfigError(f"mc: unknown keys {sorted(unknown)}")
    return MCConfig(seed=master_seed, **mc_dict)


def threshold_pipeline(config):
    """Full threshold determination from a config dict.

    Modes:
      * self-dual model (RPGM4): analytic, H(p*) = 1/2, no simulation;
      * explicit "p_c": duality inference only (known critical point);
      * otherwise: Nishimori Binder sweep over "sizes" x "p_grid",
        crossing estimate, then duality inference.
    """
    if "model" not in config:
        raise ConfigError("threshold config: missing required key 'model'")
    kind = kind_of(config["model"])
    dual_name = DUAL_KIND[kind.name]
    report = {
        "model": kind.name,
        "dual_model": dual_name,
        "mode": None,
    }

    if dual_name == kind.name:
        p_star = self_dual_critical_p()
        report.update(
            mode="self-dual",
            p_c=p_star,
            p_c_sigma=0.0,
            dual_p_c=p_star,
            entropy=shannon_entropy(p_star),
            note="transition pinned by self-duality; no simulation run",
        )
        return report

    if "p_c" in config:
        p_c = float(config["p_c"])
        report.update(
            mode="inference",
            p_c=p_c,
            p_c_sigma=float(config.get("p_c_sigma", 0.0)),
            dual_p_c=dual_critical_p(p_c),
            entropy_sum=shannon_entropy(p_c)
            + shannon_entropy(dual_critical_p(p_c)),
        )
        return report

    for key in ("sizes", "p_grid", "seed"):
        if key not in config:
            raise ConfigError(f"threshold config: missing required key '{key}'")
    cfg = mc_config_from(config, int(config["seed"]))
    curves, points = binder_sweep(
        kind.name,
        [int(s) for s in config["sizes"]],
        [float(p) for p in config["p_grid"]],
        "nishimori",
        cfg,
        workers=int(config.get("workers", 1)),
    )
    crossing = estimate_crossing(curves, seed=int(config["seed"]))
    p_c = crossing.x_c
    report.update(
        mode="simulated",
        p_c=p_c,
        p_c_sigma=crossing.sigma,
        dual_p_c=dual_critical_p(p_c),
        entropy_sum=shannon_entropy(p_c) + shannon_entropy(dual_critical_p(p_c)),
        pair_crossings=list(crossing.pair_crossings),
        points=[
            {
                "L": pt.size,
                "p": pt.x,
                "beta": pt.beta,
                "binder": pt.binder_mean,
                "binder_err": pt.binder_err,
            }
            for pt in points
        ],
    )
    return report
