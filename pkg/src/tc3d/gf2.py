"""Bit-packed GF(2) linear algebra and lattice homology.

Matrices store one row per uint64-word block; elimination is plain
Gaussian with partial pivoting over columns, vectorized over rows with
XOR broadcasts.  Pivot order is an implementation detail; only ranks,
solutions, and spans are contractual.

Homology representatives and their intersection detectors are written
down analytically as straight axis-aligned windings / dual hyperplanes,
so class labels never depend on elimination order.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .cells import Chain, boundary, pairing
from .errors import DimensionMismatchError, RankError, UnsupportedBoundaryError


class GF2Matrix:
    """Dense GF(2) matrix with bit-packed rows."""

    def __init__(self, nrows, ncols, words=None):
        self.nrows = int(nrows)
        self.ncols = int(ncols)
        self.nwords = (self.ncols + 63) // 64
        if words is None:
            words = np.zeros((self.nrows, self.nwords), dtype=np.uint64)
        self.words = words

    @classmethod
    def from_dense(cls, arr):
        arr = np.asarray(arr, dtype=np.uint8) & 1
        m = cls(arr.shape[0], arr.shape[1])
        pad = m.nwords * 64 - m.ncols
        bits = np.pad(arr, ((0, 0), (0, pad)))
        m.words = np.packbits(bits, axis=1, bitorder="little").view(np.uint64).reshape(
            m.nrows, m.nwords
        )
        return m

    @classmethod
    def from_index_rows(cls, rows, ncols):
        """Rows given as iterables of set column indices."""
        m = cls(len(rows), ncols)
        for r, cols in enumerate(rows):
            for c in cols:
                m.set(r, c)
        return m

    def to_dense(self):
        bits = np.unpackbits(
            self.words.view(np.uint8).reshape(self.nrows, -1),
            axis=1,
            bitorder="little",
        )
        return bits[:, : self.ncols]

    def copy(self):
        return GF2Matrix(self.nrows, self.ncols, self.words.copy())

    def get(self, r, c):
        return int(self.words[r, c >> 6] >> np.uint64(c & 63)) & 1

    def set(self, r, c, value=1):
        bit = np.uint64(1) << np.uint64(c & 63)
        if value:
            self.words[r, c >> 6] |= bit
        else:
            self.words[r, c >> 6] &= ~bit

    def row_bits(self, r):
        return np.unpackbits(
            self.words[r].view(np.uint8), bitorder="little"
        )[: self.ncols]

    def __repr__(self):
        return f"GF2Matrix({self.nrows}x{self.ncols})"


def _eliminate(words, ncols, rhs=None):
    """In-place RREF on `words`; returns pivot column list."""
    nrows = words.shape[0]
    pivots = []
    row = 0
    for col in range(ncols):
        w, b = col >> 6, np.uint64(1) << np.uint64(col & 63)
        hit = np.nonzero(words[row:, w] & b)[0]
        if hit.size == 0:
            continue
        piv = row + hit[0]
        if piv != row:
            words[[row, piv]] = words[[piv, row]]
            if rhs is not None:
                rhs[[row, piv]] = rhs[[piv, row]]
        mask = (words[:, w] & b).astype(bool)
        mask[row] = False
        if mask.any():
            words[mask] ^= words[row]
            if rhs is not None:
                rhs[mask] ^= rhs[row]
        pivots.append(col)
        row += 1
        if row == nrows:
            break
    return pivots


def gf2_rank(matrix):
    """Rank over GF(2) via elimination."""
    work = matrix.words.copy()
    return len(_eliminate(work, matrix.ncols))


def gf2_solve(matrix, rhs):
    """Any solution x of M x = rhs, or None if rhs is outside the column space."""
    rhs = np.asarray(rhs, dtype=np.uint8) & 1
    if rhs.shape != (matrix.nrows,):
        raise DimensionMismatchError(
            f"rhs length {rhs.shape} does not match {matrix.nrows} rows"
        )
    work = matrix.words.copy()
    r = rhs.copy()
    pivots = _eliminate(work, matrix.ncols, rhs=r)
    x = np.zeros(matrix.ncols, dtype=np.uint8)
    for i, col in enumerate(pivots):
        x[col] = r[i]
    if r[len(pivots) :].any():
        return None
    # verify: guards against silent indexing bugs, cheap relative to elimination
    if np.any(_matvec(matrix, x) != rhs):
        return None
    return x


def _matvec(matrix, x):
    x = np.asarray(x, dtype=np.uint8) & 1
    cols = np.nonzero(x)[0]
    out = np.zeros(matrix.nrows, dtype=np.uint8)
    for c in cols:
        w, b = c >> 6, np.uint64(1) << np.uint64(c & 63)
        out ^= ((matrix.words[:, w] & b) != 0).astype(np.uint8)
    return out


def gf2_nullspace(matrix):
    """Basis of the kernel, one bit-vector per row of the returned array."""
    work = matrix.words.copy()
    pivots = _eliminate(work, matrix.ncols)
    pivot_set = set(pivots)
    free = [c for c in range(matrix.ncols) if c not in pivot_set]
    basis = np.zeros((len(free), matrix.ncols), dtype=np.uint8)
    dense = GF2Matrix(matrix.nrows, matrix.ncols, work).to_dense()
    for i, f in enumerate(free):
        basis[i, f] = 1
        for r, col in enumerate(pivots):
            if dense[r, f]:
                basis[i, col] = 1
    return basis


def gf2_row_reduce(matrix):
    """(RREF matrix, pivot columns); row space is preserved."""
    work = matrix.words.copy()
    pivots = _eliminate(work, matrix.ncols)
    return GF2Matrix(matrix.nrows, matrix.ncols, work), pivots


def boundary_matrix(cx, k):
    """Matrix of the boundary map: rank-k chains -> rank-(k-1) chains.

    Rows are (k-1)-cells, columns are k-cells; row r lists the k-cells
    whose boundary contains r, i.e. the coboundary of r.
    """
    if k < 1 or k > cx.dimension:
        raise RankError(f"boundary matrix needs 1 <= k <= {cx.dimension}")
    nr, nc = cx.n_cells(k - 1), cx.n_cells(k)
    m = GF2Matrix(nr, nc)
    flat, offsets = cx.coboundary_indices(k - 1, np.arange(nr))
    for r in range(nr):
        for c in flat[offsets[r] : offsets[r + 1]]:
            # a cell can appear twice in tight geometry (e.g. L=2 torus wrap);
            # incidence over GF(2) is the parity
            w, b = int(c) >> 6, np.uint64(1) << np.uint64(int(c) & 63)
            m.words[r, w] ^= b
    return m


# -- homology ---------------------------------------------------------------


@dataclass(frozen=True)
class HomologyBasis:
    """Representative nontrivial k-cycles and their intersection detectors.

    Detector i is the set of k-cells crossing a straight dual hyperplane;
    the pairing matrix <rep_i, det_j> is the identity, so labels are read
    off by counting overlaps mod 2.
    """

    rank: int
    representatives: tuple
    detectors: tuple

    def betti(self):
        return len(self.representatives)


def homology_basis(cx, k, verify=False):
    """Straight-winding basis of H_k on a fully periodic complex."""
    if not cx.fully_periodic:
        raise UnsupportedBoundaryError("homology basis needs a fully periodic complex")
    if not 0 <= k <= cx.dimension:
        raise RankError(f"rank {k} outside 0..{cx.dimension}")
    d = cx.dimension
    reps = []
    dets = []
    for axes in cx.axis_subsets(k):
        si = cx.axis_subsets(k).index(axes)
        exts = cx._extents[k][si]
        # representative: cells spanning `axes` with zero transverse coordinate
        grids = [np.arange(exts[a]) if a in axes else np.array([0]) for a in range(d)]
        coords = np.stack(np.meshgrid(*grids, indexing="ij"), axis=-1).reshape(-1, d)
        rep = Chain(cx, k, cx.encode(k, np.full(coords.shape[0], si), coords))
        # detector: cells spanning `axes` with zero longitudinal coordinate
        grids = [np.array([0]) if a in axes else np.arange(exts[a]) for a in range(d)]
        coords = np.stack(np.meshgrid(*grids, indexing="ij"), axis=-1).reshape(-1, d)
        det = Chain(cx, k, cx.encode(k, np.full(coords.shape[0], si), coords))
        reps.append(rep)
        dets.append(det)
    basis = HomologyBasis(k, tuple(reps), tuple(dets))
    if verify:
        for i, rep in enumerate(reps):
            if k >= 1 and not boundary(rep).is_empty():
                raise RankError("homology representative is not a cycle")
            for j, det in enumerate(dets):
                if pairing(rep, det) != (1 if i == j else 0):
                    raise RankError("representative/detector pairing is not identity")
    return basis


def classify_cycle(cx, basis, z):
    """Label bits of a k-cycle; trivial cycles map to all-zero."""
    if z.rank != basis.rank:
        raise RankError("chain rank does not match the basis")
    if z.rank >= 1 and not boundary(z).is_empty():
        raise RankError("classify_cycle needs a cycle (empty boundary)")
    return np.array([pairing(z, det) for det in basis.detectors], dtype=np.uint8)


def betti_numbers(cx):
    """b_k of the torus: C(d, k)."""
    if not cx.fully_periodic:
        raise UnsupportedBoundaryError("betti_numbers assumes the torus")
    from math import comb

    return tuple(comb(cx.dimension, k) for k in range(cx.dimension + 1))
