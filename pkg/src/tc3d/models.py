"""Randomly coupled Ising and Z2 gauge models on hypercubic complexes.

Five kinds, named by lattice dimension and where the spins sit:

    RBIM3 / RBIM4   spins on vertices, 2-body bond terms on links
    RPGM3 / RPGM4   spins on links, 4-body plaquette terms
    RCGM4           spins on plaquettes, 6-body cube terms (2-form gauge)

In every case a term lives on a (k+1)-cell and couples the spins on its
boundary k-cells, with a quenched sign eta = +-1 per term and J = 1;
the temperature carries the scale.  Error chains of the toric code map
onto the disorder: a term is frustrated exactly where the generating
error chain passes.  The matching coupling follows
exp(-2 beta J) = p / (1 - p), so a single rate p controls a sweep.

Gauge models are invariant under flipping the coboundary of any
(k-1)-cell, which is what makes Wilson loops/surfaces the right order
parameters and lets exact enumeration quotient out the gauge volume.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .cells import Chain
from .errors import (
    DimensionMismatchError,
    NoGaugeSymmetryError,
    RankError,
)
from .gf2 import GF2Matrix, gf2_rank, gf2_row_reduce
from .toric import TIME_AXIS


@dataclass(frozen=True)
class ModelKind:
    name: str
    dimension: int
    spin_rank: int

    @property
    def term_rank(self):
        return self.spin_rank + 1

    @property
    def arity(self):
        return 2 * self.term_rank

    @property
    def has_gauge_symmetry(self):
        return self.spin_rank >= 1


KINDS = {
    "RBIM3": ModelKind("RBIM3", 3, 0),
    "RPGM3": ModelKind("RPGM3", 3, 1),
    "RPGM4": ModelKind("RPGM4", 4, 1),
    "RCGM4": ModelKind("RCGM4", 4, 2),
    "RBIM4": ModelKind("RBIM4", 4, 0),
}

# kind of the Kramers-Wannier partner (structure realized by derive_dual_model)
DUAL_KIND = {
    "RBIM3": "RPGM3",
    "RPGM3": "RBIM3",
    "RPGM4": "RPGM4",
    "RCGM4": "RBIM4",
    "RBIM4": "RCGM4",
}


def kind_of(name):
    if isinstance(name, ModelKind):
        return name
    try:
        return KINDS[name]
    except KeyError:
        raise DimensionMismatchError(f"unknown model kind {name!r}") from None


class SpinModel:
    """Interaction hypergraph: spins on k-cells, terms on (k+1)-cells."""

    def __init__(self, kind, cx, term_members=None, term_cells=None):
        kind = kind_of(kind)
        if cx.dimension != kind.dimension:
            raise DimensionMismatchError(
                f"{kind.name} needs a {kind.dimension}D complex, got {cx.dimension}D"
            )
        self.kind = kind
        self.complex = cx
        self.n_spins = cx.n_cells(kind.spin_rank)
        if term_members is None:
            term_cells = np.arange(cx.n_cells(kind.term_rank), dtype=np.int64)
            term_members = cx.boundary_indices(kind.term_rank, term_cells)
        self.term_cells = term_cells
        self.term_members = np.ascontiguousarray(term_members, dtype=np.int32)
        self.n_terms = self.term_members.shape[0]

        # CSR of spin -> incident terms, used by the sweep kernels
        order = np.argsort(self.term_members.ravel(), kind="stable")
        spins_sorted = self.term_members.ravel()[order]
        terms_sorted = (order // self.term_members.shape[1]).astype(np.int32)
        counts = np.bincount(spins_sorted, minlength=self.n_spins)
        self.spin_term_offsets = np.concatenate(
            [[0], np.cumsum(counts)]
        ).astype(np.int32)
        self.spin_terms = np.ascontiguousarray(terms_sorted, dtype=np.int32)

    # -- state helpers -----------------------------------------------------

    def all_up(self):
        return np.ones(self.n_spins, dtype=np.int8)

    def random_state(self, rng):
        return np.where(rng.random(self.n_spins) < 0.5, 1, -1).astype(np.int8)

    def term_values(self, spins):
        """u_t = product of member spins, per term."""
        return np.prod(
            spins[self.term_members].astype(np.int64), axis=1
        ).astype(np.int8)

    # -- gauge structure -----------------------------------------------------

    def gauge_generators(self):
        """Flip sets (spin index arrays), one per (k-1)-cell.

        Each generator meets every term in an even number of spins, so
        flipping it leaves all term values unchanged.
        """
        if not self.kind.has_gauge_symmetry:
            raise NoGaugeSymmetryError(f"{self.kind.name} has no local gauge symmetry")
        cx = self.complex
        g_rank = self.kind.spin_rank - 1
        flat, offsets = cx.coboundary_indices(g_rank, np.arange(cx.n_cells(g_rank)))
        return [
            flat[offsets[i] : offsets[i + 1]].astype(np.int64)
            for i in range(cx.n_cells(g_rank))
        ]

    def gauge_rank(self):
        if not self.kind.has_gauge_symmetry:
            return 0
        gens = self.gauge_generators()
        return gf2_rank(GF2Matrix.from_index_rows(gens, self.n_spins))

    def gauge_pivots(self):
        """(pivot spin indices, free spin indices) of the gauge span."""
        gens = self.gauge_generators()
        _, pivots = gf2_row_reduce(GF2Matrix.from_index_rows(gens, self.n_spins))
        pivot_set = set(pivots)
        free = np.array(
            [i for i in range(self.n_spins) if i not in pivot_set], dtype=np.int64
        )
        return np.array(pivots, dtype=np.int64), free

    def __repr__(self):
        return (
            f"SpinModel({self.kind.name}, {self.complex!r}, "
            f"spins={self.n_spins}, terms={self.n_terms})"
        )


def build_model(kind, cx):
    return SpinModel(kind, cx)


@dataclass
class DisorderSample:
    """Quenched signs, one per interaction term."""

    eta: np.ndarray
    p: float = None
    source: str = "sampled"

    def __post_init__(self):
        eta = np.ascontiguousarray(self.eta, dtype=np.int8)
        if eta.size and not np.isin(eta, (-1, 1)).all():
            raise DimensionMismatchError("disorder signs must be +-1")
        self.eta = eta

    def minus_fraction(self):
        return float((self.eta == -1).mean()) if self.eta.size else 0.0

    def to_hex(self):
        bits = (self.eta == -1).astype(np.uint8)
        return "hex:" + np.packbits(bits, bitorder="little").tobytes().hex()

    @classmethod
    def from_hex(cls, n_terms, text, p=None):
        raw = bytes.fromhex(text.removeprefix("hex:").strip())
        bits = np.unpackbits(np.frombuffer(raw, dtype=np.uint8), bitorder="little")
        return cls(np.where(bits[:n_terms], -1, 1).astype(np.int8), p=p, source="hex")


def sample_disorder(model, p, rng):
    """i.i.d. signs: -1 with probability p."""
    if not 0.0 <= p <= 1.0:
        raise DimensionMismatchError(f"disorder rate {p} outside [0,1]")
    eta = np.where(rng.random(model.n_terms) < p, -1, 1).astype(np.int8)
    return DisorderSample(eta, p=p)


def disorder_from_error_chain(model, chain):
    """eta_t = -1 exactly on the term cells the error chain occupies."""
    if chain.complex != model.complex or chain.rank != model.kind.term_rank:
        raise RankError(
            f"error chain must be rank {model.kind.term_rank} on the model complex"
        )
    eta = np.ones(model.n_terms, dtype=np.int8)
    eta[chain.indices] = -1
    return DisorderSample(eta, p=None, source="error-chain")


@dataclass(frozen=True)
class NishimoriPoint:
    p: float
    beta: float


def nishimori_beta(p):
    """Coupling beta*J matching error rate p: exp(-2 beta J) = p/(1-p)."""
    if not 0.0 < p < 1.0:
        raise DimensionMismatchError(f"nishimori_beta needs 0 < p < 1, got {p}")
    return 0.5 * math.log((1.0 - p) / p)


def nishimori_point(p):
    return NishimoriPoint(p, nishimori_beta(p))


def p_of_beta(beta):
    return 1.0 / (1.0 + math.exp(2.0 * beta))


def energy(model, spins, disorder):
    """H = -J sum_t eta_t u_t with J = 1."""
    if spins.shape != (model.n_spins,):
        raise DimensionMismatchError("spin vector length mismatch")
    u = model.term_values(spins)
    return -float(np.dot(disorder.eta.astype(np.float64), u.astype(np.float64)))


def overlap(model, spins, disorder):
    """Mean satisfied-term signal <eta_t u_t>; equals -H / N_terms."""
    u = model.term_values(spins)
    return float(np.mean(disorder.eta.astype(np.float64) * u))


def delta_energy(model, spins, disorder, spin_index):
    """Energy change if spin_index flips; matches a full re-evaluation."""
    lo = model.spin_term_offsets[spin_index]
    hi = model.spin_term_offsets[spin_index + 1]
    terms = model.spin_terms[lo:hi]
    u = np.prod(spins[model.term_members[terms]].astype(np.int64), axis=1)
    return 2.0 * float(np.dot(disorder.eta[terms].astype(np.float64), u))


def temporal_term_mask(model, time_axis=TIME_AXIS):
    """Terms whose cell extends along the time axis (4D hosts only)."""
    cx = model.complex
    if cx.dimension <= time_axis:
        return np.zeros(model.n_terms, dtype=bool)
    cells = (
        model.term_cells
        if model.term_cells is not None
        else np.arange(model.n_terms, dtype=np.int64)
    )
    si, _ = cx.decode(model.kind.term_rank, cells)
    subsets = cx.axis_subsets(model.kind.term_rank)
    timelike = np.array([time_axis in subsets[int(s)] for s in si])
    return timelike


def couplings(model, disorder, beta, beta_temporal=None):
    """Per-term coupling K_t = beta_t * eta_t consumed by the kernels.

    A distinct temporal coupling (measurement rate q != p) is applied to
    time-extending terms; the default is the symmetric case.
    """
    if disorder.eta.shape != (model.n_terms,):
        raise DimensionMismatchError("disorder length mismatch")
    k = np.full(model.n_terms, float(beta)) * disorder.eta
    if beta_temporal is not None and beta_temporal != beta:
        mask = temporal_term_mask(model)
        k[mask] = float(beta_temporal) * disorder.eta[mask]
    return np.ascontiguousarray(k, dtype=np.float64)


def term_chain(model, term_indices):
    """Term index array -> chain on the model's term cells."""
    return Chain(model.complex, model.kind.term_rank, term_indices)
