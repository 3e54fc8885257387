"""Hypercubic cell complexes in 3 and 4 dimensions over GF(2).

A complex is a product of per-axis intervals, each either periodic or
open.  k-cells are labelled by a base coordinate and a sorted subset of
k axes they extend along; the cell spans one unit along each axis in the
subset.  Indices are assigned lexicographically (axis subset first, then
base coordinate in C order), which keeps serialized chains stable
across runs.

Boundary and coboundary are computed arithmetically from the label, not
from stored matrices: a 4D lattice at L=5 already has ~10^4 cells per
rank and explicit incidence tables are only materialized where the GF(2)
linear algebra asks for them.

Chains are sets of same-rank cells; addition is symmetric difference.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .errors import (
    DegenerateLatticeError,
    DimensionMismatchError,
    RankError,
    ResourceError,
    UnsupportedBoundaryError,
)

DEFAULT_CELL_CAP = 1 << 26


@dataclass(frozen=True)
class CellId:
    """Label of one cell: rank, base coordinate, and spanned axes."""

    rank: int
    coords: tuple
    axes: tuple

    def __post_init__(self):
        if len(self.axes) != self.rank:
            raise RankError(f"axis subset {self.axes} does not match rank {self.rank}")
        if tuple(sorted(self.axes)) != tuple(self.axes):
            raise RankError(f"axis subset {self.axes} must be sorted")


class CellComplex:
    """d-dimensional hypercubic complex with per-axis boundary conditions."""

    def __init__(self, dimension, lengths, periodic=None, max_cells=DEFAULT_CELL_CAP):
        if dimension not in (3, 4):
            raise DimensionMismatchError(f"dimension must be 3 or 4, got {dimension}")
        lengths = tuple(int(x) for x in lengths)
        if len(lengths) != dimension:
            raise DimensionMismatchError(
                f"expected {dimension} lengths, got {len(lengths)}"
            )
        if periodic is None:
            periodic = (True,) * dimension
        periodic = tuple(bool(x) for x in periodic)
        if len(periodic) != dimension:
            raise DimensionMismatchError("periodic flags must match dimension")
        for ell, per in zip(lengths, periodic):
            if per and ell < 2:
                raise DegenerateLatticeError(
                    f"periodic axis needs length >= 2, got {ell}"
                )
            if not per and ell < 1:
                raise DegenerateLatticeError(f"axis length must be >= 1, got {ell}")

        self.dimension = dimension
        self.lengths = lengths
        self.periodic = periodic

        d = dimension
        self._subsets = [
            tuple(itertools.combinations(range(d), k)) for k in range(d + 1)
        ]
        # extent per axis: open axes lose one slot along spanned directions
        self._extents = []
        self._strides = []
        self._blocks = []
        self._offsets = []
        counts = []
        for k in range(d + 1):
            exts = np.empty((len(self._subsets[k]), d), dtype=np.int64)
            for si, axes in enumerate(self._subsets[k]):
                for a in range(d):
                    if periodic[a]:
                        exts[si, a] = lengths[a]
                    else:
                        exts[si, a] = lengths[a] - 1 if a in axes else lengths[a]
            strides = np.ones_like(exts)
            for a in range(d - 2, -1, -1):
                strides[:, a] = strides[:, a + 1] * exts[:, a + 1]
            blocks = exts.prod(axis=1)
            offsets = np.concatenate([[0], np.cumsum(blocks)])
            self._extents.append(exts)
            self._strides.append(strides)
            self._blocks.append(blocks)
            self._offsets.append(offsets)
            counts.append(int(blocks.sum()))
        self.cell_counts = tuple(counts)
        if sum(counts) > max_cells:
            raise ResourceError(
                f"complex has {sum(counts)} cells, cap is {max_cells}",
                required_bits=int(np.ceil(np.log2(max(sum(counts), 2)))),
            )

    # -- shape queries ------------------------------------------------

    @property
    def fully_periodic(self):
        return all(self.periodic)

    def n_cells(self, k):
        if not 0 <= k <= self.dimension:
            raise RankError(f"rank {k} outside 0..{self.dimension}")
        return self.cell_counts[k]

    def axis_subsets(self, k):
        return self._subsets[k]

    def euler_characteristic(self):
        return int(sum((-1) ** k * n for k, n in enumerate(self.cell_counts)))

    # -- index <-> label ----------------------------------------------

    def index_of(self, cell):
        """Index of a single CellId."""
        k = cell.rank
        axes = cell.axes
        si = self._subsets[k].index(tuple(axes))
        exts = self._extents[k][si]
        coords = np.asarray(cell.coords, dtype=np.int64)
        for a in range(self.dimension):
            c = coords[a]
            if self.periodic[a]:
                coords[a] = c % self.lengths[a]
            elif not 0 <= c < exts[a]:
                raise RankError(f"coordinate {c} outside open axis {a}")
        return int(self._offsets[k][si] + (coords * self._strides[k][si]).sum())

    def cell_of(self, k, index):
        """CellId of a single index."""
        si, coords = self.decode(k, np.asarray([index], dtype=np.int64))
        return CellId(k, tuple(int(c) for c in coords[0]), self._subsets[k][int(si[0])])

    def index_of_coords(self, k, axes, coords):
        """Index of the rank-k cell spanning `axes` at base `coords`."""
        si = self._subsets[k].index(tuple(axes))
        out = self.encode(
            k,
            np.array([si], dtype=np.int64),
            np.asarray(coords, dtype=np.int64).reshape(1, -1),
        )
        return int(out[0])

    def decode(self, k, idx):
        """Vectorized index -> (subset position, base coordinates)."""
        idx = np.asarray(idx, dtype=np.int64)
        if idx.size and (idx.min() < 0 or idx.max() >= self.cell_counts[k]):
            raise RankError(f"cell index outside rank-{k} range")
        si = np.searchsorted(self._offsets[k], idx, side="right") - 1
        rem = idx - self._offsets[k][si]
        coords = np.empty((idx.size, self.dimension), dtype=np.int64)
        strides = self._strides[k][si]
        exts = self._extents[k][si]
        for a in range(self.dimension):
            coords[:, a] = (rem // strides[:, a]) % exts[:, a]
        return si, coords

    def encode(self, k, si, coords):
        """Vectorized (subset position, coordinates) -> index.

        Coordinates are reduced modulo the extent on periodic axes; the
        caller is responsible for validity on open axes.
        """
        exts = self._extents[k][si]
        coords = np.mod(coords, exts)
        return self._offsets[k][si] + (coords * self._strides[k][si]).sum(axis=1)

    # -- incidence ------------------------------------------------------

    def boundary_indices(self, k, idx):
        """Boundary cells of each rank-k cell, shape (m, 2k).

        Every face exists even on open axes, so the result is rectangular.
        """
        if k < 1 or k > self.dimension:
            raise RankError(f"boundary needs 1 <= rank <= {self.dimension}, got {k}")
        idx = np.asarray(idx, dtype=np.int64)
        si, coords = self.decode(k, idx)
        out = np.empty((idx.size, 2 * k), dtype=np.int64)
        subs = self._subsets[k]
        subs_lo = self._subsets[k - 1]
        for s, axes in enumerate(subs):
            mask = si == s
            if not mask.any():
                continue
            c = coords[mask]
            for j, a in enumerate(axes):
                lo = subs_lo.index(tuple(x for x in axes if x != a))
                out[mask, 2 * j] = self.encode(k - 1, np.full(c.shape[0], lo), c)
                shifted = c.copy()
                shifted[:, a] += 1
                out[mask, 2 * j + 1] = self.encode(
                    k - 1, np.full(c.shape[0], lo), shifted
                )
        return out

    def coboundary_indices(self, k, idx):
        """Cells of rank k+1 containing each given cell.

        Returns (flat indices, offsets) in CSR form: the coboundary of
        cell idx[i] is flat[offsets[i]:offsets[i+1]].  Counts vary near
        open boundaries.
        """
        if k < 0 or k >= self.dimension:
            raise RankError(f"coboundary needs 0 <= rank < {self.dimension}, got {k}")
        idx = np.asarray(idx, dtype=np.int64)
        si, coords = self.decode(k, idx)
        subs = self._subsets[k]
        subs_hi = self._subsets[k + 1]
        pieces = [[] for _ in range(idx.size)]
        order = np.arange(idx.size)
        for s, axes in enumerate(subs):
            mask = si == s
            if not mask.any():
                continue
            rows = order[mask]
            c = coords[mask]
            for a in range(self.dimension):
                if a in axes:
                    continue
                hi = subs_hi.index(tuple(sorted(axes + (a,))))
                ext_a = self._extents[k + 1][hi][a]
                for shift in (0, -1):
                    cc = c.copy()
                    cc[:, a] += shift
                    if self.periodic[a]:
                        ok = np.ones(cc.shape[0], dtype=bool)
                    else:
                        ok = (cc[:, a] >= 0) & (cc[:, a] < ext_a)
                    if not ok.any():
                        continue
                    enc = self.encode(k + 1, np.full(int(ok.sum()), hi), cc[ok])
                    for r, e in zip(rows[ok], enc):
                        pieces[r].append(int(e))
        offsets = np.zeros(idx.size + 1, dtype=np.int64)
        for i, p in enumerate(pieces):
            offsets[i + 1] = offsets[i] + len(p)
        flat = np.fromiter(
            itertools.chain.from_iterable(pieces), dtype=np.int64, count=offsets[-1]
        )
        return flat, offsets

    # -- duality ----------------------------------------------------------

    def dual_index(self, k, idx):
        """Dual-cell indices (rank d-k) of rank-k cells; exact involution.

        The map (x, A) -> (-x mod L, complement of A) inverts the lattice
        through the origin, which makes it its own inverse while still
        exchanging boundary and coboundary relations.
        """
        if not self.fully_periodic:
            raise UnsupportedBoundaryError("dual cells need a fully periodic complex")
        idx = np.asarray(idx, dtype=np.int64)
        si, coords = self.decode(k, idx)
        d = self.dimension
        kd = d - k
        comp = {
            s: self._subsets[kd].index(
                tuple(a for a in range(d) if a not in axes)
            )
            for s, axes in enumerate(self._subsets[k])
        }
        si_dual = np.asarray([comp[int(s)] for s in si], dtype=np.int64)
        return self.encode(kd, si_dual, -coords)

    def dual_cell(self, cell):
        """CellId version of dual_index."""
        i = self.dual_index(cell.rank, [self.index_of(cell)])
        return self.cell_of(self.dimension - cell.rank, int(i[0]))

    # -- misc -------------------------------------------------------------

    def shape_key(self):
        return (
            self.dimension,
            self.lengths,
            tuple("p" if x else "o" for x in self.periodic),
        )

    def __eq__(self, other):
        return isinstance(other, CellComplex) and self.shape_key() == other.shape_key()

    def __hash__(self):
        return hash(self.shape_key())

    def __repr__(self):
        bcs = ",".join("P" if x else "O" for x in self.periodic)
        return f"CellComplex(d={self.dimension}, L={self.lengths}, bc={bcs})"


def build_complex(dimension, lengths, periodic=None, max_cells=DEFAULT_CELL_CAP):
    """Construct a complex; scalar `lengths` is broadcast to every axis."""
    if np.isscalar(lengths):
        lengths = (int(lengths),) * dimension
    return CellComplex(dimension, lengths, periodic, max_cells)


class Chain:
    """A GF(2) chain: a set of same-rank cells of one complex."""

    __slots__ = ("complex", "rank", "indices")

    def __init__(self, cx, rank, indices=()):
        if not 0 <= rank <= cx.dimension:
            raise RankError(f"rank {rank} outside 0..{cx.dimension}")
        idx = np.unique(np.asarray(list(indices), dtype=np.int64))
        if idx.size and (idx[0] < 0 or idx[-1] >= cx.n_cells(rank)):
            raise RankError("chain contains out-of-range cell indices")
        self.complex = cx
        self.rank = rank
        self.indices = idx

    @classmethod
    def from_bits(cls, cx, rank, bits):
        return cls(cx, rank, np.nonzero(np.asarray(bits))[0])

    def to_bits(self):
        bits = np.zeros(self.complex.n_cells(self.rank), dtype=np.uint8)
        bits[self.indices] = 1
        return bits

    def _check_mate(self, other):
        if self.complex != other.complex or self.rank != other.rank:
            raise DimensionMismatchError("chains live on different spaces")

    def __xor__(self, other):
        self._check_mate(other)
        return Chain(
            self.complex,
            self.rank,
            np.setxor1d(self.indices, other.indices, assume_unique=True),
        )

    __add__ = __xor__  # GF(2) addition

    def __eq__(self, other):
        return (
            isinstance(other, Chain)
            and self.complex == other.complex
            and self.rank == other.rank
            and np.array_equal(self.indices, other.indices)
        )

    def __len__(self):
        return int(self.indices.size)

    def __contains__(self, index):
        pos = np.searchsorted(self.indices, index)
        return pos < self.indices.size and self.indices[pos] == index

    def is_empty(self):
        return self.indices.size == 0

    def __repr__(self):
        return f"Chain(rank={self.rank}, weight={len(self)})"


def _parity_filter(values):
    uniq, counts = np.unique(values, return_counts=True)
    return uniq[counts % 2 == 1]


def boundary(chain):
    """GF(2) boundary of a chain; linear, and boundary(boundary(.)) = 0."""
    cx = chain.complex
    if chain.rank < 1:
        raise RankError("0-chains have no boundary")
    if chain.is_empty():
        return Chain(cx, chain.rank - 1)
    cells = cx.boundary_indices(chain.rank, chain.indices)
    return Chain(cx, chain.rank - 1, _parity_filter(cells.ravel()))


def coboundary(chain):
    """GF(2) adjoint of boundary: <coboundary(a), b> = <a, boundary(b)>."""
    cx = chain.complex
    if chain.rank >= cx.dimension:
        raise RankError("top-rank chains have no coboundary")
    if chain.is_empty():
        return Chain(cx, chain.rank + 1)
    flat, _ = cx.coboundary_indices(chain.rank, chain.indices)
    return Chain(cx, chain.rank + 1, _parity_filter(flat))


def dual_chain(chain):
    """Transport a chain to the dual lattice (same complex shape)."""
    cx = chain.complex
    return Chain(
        cx, cx.dimension - chain.rank, cx.dual_index(chain.rank, chain.indices)
    )


def pairing(a, b):
    """GF(2) overlap <a, b> of two same-rank chains."""
    a._check_mate(b)
    return int(
        np.intersect1d(a.indices, b.indices, assume_unique=True).size % 2
    )


# -- serialization ---------------------------------------------------------


def chain_to_text(chain, header=None):
    """One cell index per line; optional '#'-prefixed JSON-ish header."""
    lines = []
    if header:
        lines.append("# " + header)
    lines.extend(str(i) for i in chain.indices)
    return "\n".join(lines) + "\n"


def chain_from_text(cx, rank, text):
    indices = [
        int(line) for line in text.splitlines() if line.strip() and not line.startswith("#")
    ]
    return Chain(cx, rank, indices)


def chain_to_hex(chain):
    """Little-endian bit vector over all rank cells, hex encoded."""
    bits = chain.to_bits()
    return "hex:" + np.packbits(bits, bitorder="little").tobytes().hex()


def chain_from_hex(cx, rank, text):
    if not text.startswith("hex:"):
        raise DimensionMismatchError("hex chain must start with 'hex:'")
    raw = bytes.fromhex(text[4:].strip())
    bits = np.unpackbits(np.frombuffer(raw, dtype=np.uint8), bitorder="little")
    n = cx.n_cells(rank)
    if bits.size < n:
        bits = np.pad(bits, (0, n - bits.size))
    if bits[n:].any():
        raise RankError("hex chain has bits beyond the cell range")
    return Chain.from_bits(cx, rank, bits[:n])


def random_chain(cx, rank, rng, density=0.5):
    """Independent Bernoulli membership per cell; test helper."""
    bits = rng.random(cx.n_cells(rank)) < density
    return Chain.from_bits(cx, rank, bits)
