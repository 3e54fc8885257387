"""Decay-law extraction and crossing-based critical points.

Wilson means decay like exp(-(perimeter, area, volume) combinations);
finite differences of ln<W> over the size grid isolate the
coefficients: the mixed second difference annihilates perimeter and
constant terms and leaves the area coefficient, the mixed third
difference leaves the volume coefficient.  Synthetic exponential input
is recovered to machine precision, which the tests pin.

Non-positive means carry no usable log information at this noise level;
they are excluded and listed, never clipped.

Critical points come from pairwise crossings of per-size observable
curves (Binder cumulant or any dimensionless ratio) with linear
interpolation between grid points and bootstrap errors.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import NoCrossingError, UnfittableError


@dataclass(frozen=True)
class LawFit:
    """Decay coefficients of a Wilson observable family."""

    family: str  # "loops" or "surfaces"
    perimeter: float
    perimeter_err: float
    area: float
    area_err: float
    volume: float = 0.0
    volume_err: float = 0.0
    classification: str = ""
    excluded: tuple = ()

    def coefficient(self, name):
        return {
            "perimeter": (self.perimeter, self.perimeter_err),
            "area": (self.area, self.area_err),
            "volume": (self.volume, self.volume_err),
        }[name]


def _log_grid(means, errors, sizes_shape, min_size=1):
    """ln(mean) grid with per-point sigma; non-positive means excluded."""
    ln = np.full(sizes_shape, np.nan)
    sig = np.full(sizes_shape, np.nan)
    excluded = []
    for idx, mean in np.ndenumerate(means):
        err = errors[idx] if errors is not None else 0.0
        if not np.isfinite(mean) or mean <= 0.0:
            excluded.append(tuple(i + min_size for i in idx))
            continue
        ln[idx] = math.log(mean)
        sig[idx] = err / mean if err else 0.0
    return ln, sig, excluded


def fit_loop_law(means, errors=None, min_size=1):
    """Loop-decay fit from <W> on an n x n grid of consecutive sizes,
    means[i, j] = <W(min_size + i, min_size + j)>.

    Area coefficient: mean of chi(a,b) = -D_a D_b ln<W> over complete
    2x2 blocks.  Perimeter: least squares on the residual after the
    area term is removed.  Classified area-law when the area
    coefficient clears 3 sigma.
    """
    means = np.asarray(means, dtype=np.float64)
    if means.ndim != 2 or min(means.shape) < 3:
        raise UnfittableError("loop fit needs at least a 3x3 grid of sizes")
    ln, sig, excluded = _log_grid(means, errors, means.shape, min_size)
    chis = []
    chi_vars = []
    for a in range(means.shape[0] - 1):
        for b in range(means.shape[1] - 1):
            block = ln[a : a + 2, b : b + 2]
            if np.isnan(block).any():
                continue
            chis.append(-(block[1, 1] - block[1, 0] - block[0, 1] + block[0, 0]))
            chi_vars.append(float(np.nansum(sig[a : a + 2, b : b + 2] ** 2)))
    if len(chis) < 1:
        raise UnfittableError(
            "not enough positive means for any second difference", excluded
        )
    if np.isnan(ln).sum() and _largest_clean_square(ln) < 3:
        raise UnfittableError("positive means do not cover a 3x3 block", excluded)
    area, area_err = _pooled(chis, chi_vars if errors is not None else None)
    # residual = -ln W - area*ab ~ perimeter * 2(a+b) + const
    rows = []
    rhs = []
    for (i, j), value in np.ndenumerate(ln):
        if np.isnan(value):
            continue
        a, b = i + min_size, j + min_size
        rows.append([2.0 * (a + b), 1.0])
        rhs.append(-value - area * a * b)
    coef, res, *_ = np.linalg.lstsq(np.array(rows), np.array(rhs), rcond=None)
    dof = max(len(rhs) - 2, 1)
    scatter = math.sqrt(float(res[0]) / dof) if len(res) else 0.0
    classification = "area" if area_err and area > 3 * area_err else (
        "area" if area_err == 0.0 and area > 1e-9 else "perimeter"
    )
    return LawFit(
        family="loops",
        perimeter=float(coef[0]),
        perimeter_err=scatter,
        area=area,
        area_err=area_err,
        classification=classification,
        excluded=tuple(excluded),
    )


def _pooled(values, variances):
    """Combine finite-difference estimates of one coefficient.

    Inverse-variance weights when per-point errors came in (larger
    blocks of a decaying observable are much noisier than small ones);
    plain mean with scatter error otherwise, which keeps synthetic
    exact inputs exact.
    """
    values = np.asarray(values, dtype=np.float64)
    if variances is not None and min(variances) > 0.0:
        w = 1.0 / np.asarray(variances)
        return float(np.sum(w * values) / w.sum()), float(math.sqrt(1.0 / w.sum()))
    if len(values) > 1:
        return float(values.mean()), float(values.std(ddof=1) / math.sqrt(len(values)))
    return float(values[0]), 0.0


def _largest_clean_square(ln):
    best = 0
    n0, n1 = ln.shape
    for size in range(1, min(n0, n1) + 1):
        ok = False
        for a in range(n0 - size + 1):
            for b in range(n1 - size + 1):
                if not np.isnan(ln[a : a + size, b : b + size]).any():
                    ok = True
        if ok:
            best = size
    return best


def fit_surface_law(means, errors=None, min_size=1):
    """Surface-decay fit from <W> on an n^3 grid of box sizes.

    Volume coefficient: mean of -D_a D_b D_c ln<W> (kills area
    2(ab+bc+ca), edge, and constant terms exactly).  Area coefficient:
    mixed second differences of the volume-subtracted log, halved.
    """
    means = np.asarray(means, dtype=np.float64)
    if means.ndim != 3 or min(means.shape) < 3:
        raise UnfittableError("surface fit needs at least a 3x3x3 grid")
    ln, sig, excluded = _log_grid(means, errors, means.shape, min_size)
    vols = []
    vol_vars = []
    for a in range(means.shape[0] - 1):
        for b in range(means.shape[1] - 1):
            for c in range(means.shape[2] - 1):
                block = ln[a : a + 2, b : b + 2, c : c + 2]
                if np.isnan(block).any():
                    continue
                d3 = 0.0
                for i in range(2):
                    for j in range(2):
                        for k in range(2):
                            # odd corner count flips the sign: this sum is
                            # -D_a D_b D_c ln<W>, the volume coefficient
                            d3 += ((-1) ** (i + j + k)) * block[i, j, k]
                vols.append(d3)
                vol_vars.append(float(np.nansum(sig[a:a+2, b:b+2, c:c+2] ** 2)))
    if not vols:
        raise UnfittableError("not enough positive means for third differences",
                              excluded)
    volume, volume_err = _pooled(vols, vol_vars if errors is not None else None)
    # subtract the volume term, then area from second differences
    areas = []
    area_vars = []
    shape = means.shape
    g = ln + volume * (
        np.arange(min_size, shape[0] + min_size)[:, None, None]
        * np.arange(min_size, shape[1] + min_size)[None, :, None]
        * np.arange(min_size, shape[2] + min_size)[None, None, :]
    )
    for axis_pair in ((0, 1), (0, 2), (1, 2)):
        for idx in np.ndindex(*[s - (1 if ax in axis_pair else 0) for ax, s in
                                enumerate(shape)]):
            lo = list(idx)
            sl = []
            for ax in range(3):
                sl.append(slice(lo[ax], lo[ax] + (2 if ax in axis_pair else 1)))
            block = g[tuple(sl)].reshape(2, 2)
            if np.isnan(block).any():
                continue
            areas.append(
                -(block[1, 1] - block[1, 0] - block[0, 1] + block[0, 0]) / 2.0
            )
            area_vars.append(float(np.nansum(sig[tuple(sl)] ** 2)) / 4.0)
    if areas:
        area, area_err = _pooled(areas, area_vars if errors is not None else None)
    else:
        area, area_err = math.nan, 0.0
    if volume_err and volume > 3 * volume_err:
        classification = "volume"
    elif volume_err == 0.0 and volume > 1e-9:
        classification = "volume"
    else:
        classification = "area"
    return LawFit(
        family="surfaces",
        perimeter=0.0,
        perimeter_err=0.0,
        area=area,
        area_err=area_err,
        volume=volume,
        volume_err=volume_err,
        classification=classification,
        excluded=tuple(excluded),
    )


# -- crossings ----------------------------------------------------------------


@dataclass
class CurveFamily:
    """One observable-vs-parameter curve per system size."""

    size: int
    xs: np.ndarray
    means: np.ndarray
    stderrs: np.ndarray = None
    samples: np.ndarray = None  # (n_samples, n_x) per-sample values

    def __post_init__(self):
        self.xs = np.asarray(self.xs, dtype=np.float64)
        self.means = np.asarray(self.means, dtype=np.float64)
        if self.stderrs is not None:
            self.stderrs = np.asarray(self.stderrs, dtype=np.float64)
        if self.samples is not None:
            self.samples = np.asarray(self.samples, dtype=np.float64)


@dataclass(frozen=True)
class CrossingEstimate:
    x_c: float
    sigma: float
    pair_crossings: tuple
    n_bootstrap: int


def _pair_crossings(xs, ya, yb):
    diffs = ya - yb
    hits = []
    for k in range(len(xs) - 1):
        d0, d1 = diffs[k], diffs[k + 1]
        if d0 == 0.0:
            hits.append(float(xs[k]))
        elif d0 * d1 < 0.0:
            t = d0 / (d0 - d1)
            hits.append(float(xs[k] + t * (xs[k + 1] - xs[k])))
    if diffs[-1] == 0.0:
        hits.append(float(xs[-1]))
    return hits


def estimate_crossing(curves, n_bootstrap=300, seed=0):
    """Critical parameter from pairwise curve crossings.

    Bootstrap resamples disorder samples when per-sample values are
    available, otherwise perturbs the means by their standard errors.
    Raises NoCrossingError with the scanned bracket when no pair of
    curves intersects.
    """
    if len(curves) < 2:
        raise NoCrossingError("need >= 2 system sizes", bracket=None)
    xs = curves[0].xs
    for c in curves[1:]:
        if not np.array_equal(c.xs, xs):
            raise NoCrossingError("curves must share one parameter grid",
                                  bracket=None)
    if len(xs) < 4:
        raise NoCrossingError("need >= 4 grid points", bracket=None)

    centers = []
    pairs = []
    for i in range(len(curves)):
        for j in range(i + 1, len(curves)):
            hits = _pair_crossings(xs, curves[i].means, curves[j].means)
            if hits:
                centers.extend(hits)
                pairs.append((curves[i].size, curves[j].size, hits[0]))
    if not centers:
        raise NoCrossingError(
            "no curve pair crosses in the scanned range",
            bracket=(float(xs[0]), float(xs[-1])),
        )
    x_c = float(np.mean(centers))

    rng = np.random.default_rng(seed)
    boots = []
    for _ in range(n_bootstrap):
        resampled = []
        for c in curves:
            if c.samples is not None:
                pick = rng.integers(0, c.samples.shape[0], c.samples.shape[0])
                resampled.append(c.samples[pick].mean(axis=0))
            elif c.stderrs is not None:
                resampled.append(c.means + rng.normal(size=len(xs)) * c.stderrs)
            else:
                resampled.append(c.means)
        vals = []
        for i in range(len(curves)):
            for j in range(i + 1, len(curves)):
                vals.extend(_pair_crossings(xs, resampled[i], resampled[j]))
        if vals:
            boots.append(np.mean(vals))
    sigma = float(np.std(boots, ddof=1)) if len(boots) > 1 else 0.0
    return CrossingEstimate(
        x_c=x_c, sigma=sigma, pair_crossings=tuple(pairs), n_bootstrap=len(boots)
    )
