"""Coupling and entropy dualities, and the structural dual constructor.

Two numeric maps carry the threshold bookkeeping:

  * sinh(2 bJ) sinh(2 b~J~) = 1 relates disorder-free couplings of a
    model and its partner (exact at p = 0);
  * H(p) + H(p~) = 1 relates the two critical rates along the
    e^{-2bJ} = p/(1-p) line, H the binary Shannon entropy.  This one is
    approximate by construction, which is why downstream targets carry
    a few-permille slack.

The structural constructor rebuilds a model on the dual lattice: every
interaction term moves to the dual cell of its own cell, and couples
the dual cells of the cells that contained it.  Because the dual map
here is an exact involution intertwining boundary and coboundary, the
double dual reproduces the original incidence verbatim, and the single
dual is cell-for-cell identical to building the partner kind directly.
"""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatchError, UnsupportedBoundaryError
from .models import DUAL_KIND, SpinModel, kind_of

DomainError = DimensionMismatchError  # numeric domain violations


def kw_dual_coupling(beta):
    """Partner coupling: solves sinh(2 beta) sinh(2 beta~) = 1; involutive."""
    if beta <= 0.0:
        raise DomainError(f"dual coupling needs beta > 0, got {beta}")
    return 0.5 * math.asinh(1.0 / math.sinh(2.0 * beta))


def self_dual_coupling():
    """Fixed point sinh(2 beta) = 1: beta = ln(1 + sqrt 2) / 2."""
    return 0.5 * math.log(1.0 + math.sqrt(2.0))


def shannon_entropy(p):
    """Binary entropy in bits, with 0 log 0 = 0."""
    if not 0.0 <= p <= 1.0:
        raise DomainError(f"entropy needs p in [0,1], got {p}")
    if p == 0.0 or p == 1.0:
        return 0.0
    return -p * math.log2(p) - (1.0 - p) * math.log2(1.0 - p)


def _entropy_inverse(target, tol=1e-12):
    """Unique p in (0, 1/2] with H(p) = target, by bisection.

    Bisection rather than Newton: H' diverges at 0, so gradient steps
    can escape the bracket while halving cannot.
    """
    lo, hi = 0.0, 0.5
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if shannon_entropy(mid) < target:
            lo = mid
        else:
            hi = mid
        if hi - lo < tol:
            break
    return 0.5 * (lo + hi)


def dual_critical_p(p_c):
    """Partner critical rate: H(p~) = 1 - H(p_c), p~ in (0, 1/2)."""
    if not 0.0 < p_c < 0.5:
        raise DomainError(
            f"dual_critical_p needs 0 < p_c < 0.5, got {p_c} "
            "(at 0.5 the two branches meet; pick one explicitly)"
        )
    return _entropy_inverse(1.0 - shannon_entropy(p_c))


def self_dual_critical_p():
    """Threshold a self-dual pair is pinned to: H(p*) = 1/2."""
    return _entropy_inverse(0.5)


@dataclass(frozen=True)
class DualityReport:
    input_kind: str
    dual_kind: str
    spin_rank_map: tuple
    term_rank_map: tuple
    witness: str
    input_hash: str
    dual_hash: str


def canonical_incidence_hash(model):
    """Hash of the sorted term-membership table; isomorphism fingerprint
    under the identity labelling of cells."""
    rows = sorted(tuple(sorted(map(int, row))) for row in model.term_members)
    digest = hashlib.sha256()
    digest.update(f"{model.kind.dimension}:{model.kind.spin_rank}".encode())
    for row in rows:
        digest.update(",".join(map(str, row)).encode())
        digest.update(b";")
    return digest.hexdigest()


def derive_dual_model(model):
    """Structural dual on the dual lattice, plus a report.

    Terms map through the dual-cell bijection; each dual term couples
    the dual cells of the coboundary of the original term cell, which
    by the intertwining property is exactly the boundary of the dual
    term cell.
    """
    cx = model.complex
    if not cx.fully_periodic:
        raise UnsupportedBoundaryError("dual model needs a fully periodic complex")
    kind = model.kind
    dual_kind = kind_of(DUAL_KIND[kind.name])
    kt = kind.term_rank
    term_cells = (
        model.term_cells
        if model.term_cells is not None
        else np.arange(model.n_terms, dtype=np.int64)
    )
    dual_terms = cx.dual_index(kt, term_cells)
    flat, offsets = cx.coboundary_indices(kt, term_cells)
    members = np.empty((model.n_terms, dual_kind.arity), dtype=np.int64)
    for i in range(model.n_terms):
        inc = flat[offsets[i] : offsets[i + 1]]
        if inc.size != dual_kind.arity:
            raise DimensionMismatchError(
                f"coboundary arity {inc.size} != dual arity {dual_kind.arity}"
            )
        members[i] = cx.dual_index(kt + 1, inc)
    order = np.argsort(dual_terms)
    dual = SpinModel(
        dual_kind,
        cx,
        term_members=members[order],
        term_cells=dual_terms[order],
    )
    report = DualityReport(
        input_kind=kind.name,
        dual_kind=dual_kind.name,
        spin_rank_map=(kind.spin_rank, dual_kind.spin_rank),
        term_rank_map=(kt, cx.dimension - kt),
        witness="dual_cell bijection (x, A) -> (-x, complement A)",
        input_hash=canonical_incidence_hash(model),
        dual_hash=canonical_incidence_hash(dual),
    )
    return dual, report


def duality_summary(kind_name, p_c=None, beta=None):
    """JSON-ready record tying a kind to its partner and the numeric maps."""
    kind = kind_of(kind_name)
    out = {
        "input_kind": kind.name,
        "dual_kind": DUAL_KIND[kind.name],
        "self_dual": DUAL_KIND[kind.name] == kind.name,
    }
    if beta is not None:
        out["beta"] = beta
        out["dual_beta"] = kw_dual_coupling(beta)
    if p_c is not None:
        out["p_c"] = p_c
        out["dual_p_c"] = dual_critical_p(p_c)
        out["entropy_sum"] = shannon_entropy(p_c) + shannon_entropy(out["dual_p_c"])
    if out["self_dual"]:
        out["self_dual_p"] = self_dual_critical_p()
    return out
