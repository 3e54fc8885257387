"""3D toric code: stabilizers, logical operators, noise, syndromes.

Qubits live on the links of an L^3 periodic cubic lattice.  Vertex
checks act on the 6-link star of a vertex with Pauli X; plaquette checks
act on the 4 links of a face with Pauli Z.  Being CSS, the X and Z
sectors are analyzed separately: Z errors are 1-chains on the lattice,
X errors are 2-chains on the dual lattice.

With repeated noisy measurements the bookkeeping moves to a 4D
spacetime complex (spatial torus x time).  Spacelike cells carry qubit
errors, timelike cells carry measurement faults, and the syndrome
history is the set of timelike cells where the *measured* check value
is -1 (the measured worldline/worldsheet of the excitations).  Error
plus syndrome is then the worldline of the genuine excitations; adding
a recovery chain that cancels the residual excitations on the closure
layer yields a closed cycle whose homology class decides success.

Time axis convention (axis 3):
  * open time (default): extent T+1; epoch-t qubit errors sit on
    spacelike cells of layer t-1, round-t faults on timelike cells with
    base time t-1; the final layer T carries the perfect readout, so
    E + S terminates there (residual excitations) and the recovery
    chain closes it.
  * periodic time: extent T; same assignments mod T, with the measured
    worldline integrated from a zero reference before round 1, which
    places any leftover boundary on the seam layer 0.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .cells import Chain, boundary, build_complex, dual_chain
from .errors import (
    DegenerateLatticeError,
    DimensionMismatchError,
    RankError,
)
from .gf2 import boundary_matrix, classify_cycle, gf2_solve, homology_basis

SECTOR_X = "X"
SECTOR_Z = "Z"
TIME_AXIS = 3


@dataclass(frozen=True)
class NoiseParams:
    """Qubit rate p, measurement rate q (defaults to p), rounds, sector."""

    p: float
    q: float = None
    rounds: int = 1
    sector: str = SECTOR_Z

    def __post_init__(self):
        if not 0.0 <= self.p < 1.0:
            raise DimensionMismatchError(f"qubit rate p={self.p} outside [0,1)")
        q = self.p if self.q is None else self.q
        if not 0.0 <= q < 1.0:
            raise DimensionMismatchError(f"measurement rate q={q} outside [0,1)")
        object.__setattr__(self, "q", q)
        if self.rounds < 1:
            raise DimensionMismatchError("rounds must be >= 1")
        if self.sector not in (SECTOR_X, SECTOR_Z):
            raise DimensionMismatchError(f"sector must be X or Z, got {self.sector}")


class ToricCode3D:
    """Stabilizer data of the L x L x L toric code."""

    def __init__(self, L):
        if L < 2:
            raise DegenerateLatticeError(f"toric code needs L >= 2, got {L}")
        self.L = int(L)
        cx = build_complex(3, L)
        self.complex = cx
        self.n_qubits = cx.n_cells(1)

        # vertex check supports: the 6-link star of each vertex
        flat, offsets = cx.coboundary_indices(0, np.arange(cx.n_cells(0)))
        self.vertex_support = flat.reshape(cx.n_cells(0), 6)
        # plaquette check supports: the 4 boundary links of each face
        self.plaquette_support = cx.boundary_indices(2, np.arange(cx.n_cells(2)))

        # logical operators: Z-strings are straight windings, X-membranes
        # are the full sets of parallel links crossed by a dual plane.
        # The string/membrane basis pair intersects in delta_ij qubits.
        self.string_basis = homology_basis(cx, 1)
        self.membrane_basis = homology_basis(cx, 2)
        self.logical_z = self.string_basis.representatives
        self.logical_x_support = self.string_basis.detectors

    @property
    def k_logical(self):
        return 3

    def spacetime(self, rounds, time_bc="open"):
        return SpacetimeLayout(self, rounds, time_bc)

    def __repr__(self):
        return f"ToricCode3D(L={self.L}, n={self.n_qubits})"


def build_code(L):
    return ToricCode3D(L)


def static_syndrome(code, error, sector):
    """Violated checks of a static error: the boundary of its chain.

    Z sector: 1-chain on the lattice -> 0-chain of vertices.
    X sector: 2-chain on the dual lattice -> 1-chain of dual links
    (one per violated plaquette check).
    """
    want = 1 if sector == SECTOR_Z else 2
    if error.rank != want:
        raise RankError(f"{sector}-sector error must have rank {want}")
    if error.complex != code.complex:
        raise DimensionMismatchError("error lives on a different lattice")
    return boundary(error)


def sample_pauli_error(code, p, rng, channel="independent"):
    """Static noise: returns (z_chain rank 1, x_chain rank 2 on the dual).

    'independent': X and Z each hit every qubit with probability p.
    'depolarizing': X, Y, Z each with probability p/3; a Y contributes
    to both sectors on the same qubit.
    """
    cx = code.complex
    n = code.n_qubits
    if channel == "independent":
        zbits = rng.random(n) < p
        xbits = rng.random(n) < p
    elif channel == "depolarizing":
        u = rng.random(n)
        zbits = (u < p / 3) | ((u >= 2 * p / 3) & (u < p))  # Z or Y
        xbits = (u >= p / 3) & (u < p)  # X or Y
    else:
        raise DimensionMismatchError(f"unknown channel {channel!r}")
    z_chain = Chain.from_bits(cx, 1, zbits)
    x_links = Chain.from_bits(cx, 1, xbits)
    return z_chain, dual_chain(x_links)


class SpacetimeLayout:
    """Geometry shared by both sectors for T rounds of noisy measurement."""

    def __init__(self, code, rounds, time_bc="open"):
        if rounds < 1:
            raise DimensionMismatchError("rounds must be >= 1")
        if time_bc not in ("open", "periodic"):
            raise DimensionMismatchError("time_bc must be 'open' or 'periodic'")
        if time_bc == "periodic" and rounds < 2:
            raise DegenerateLatticeError("periodic time needs >= 2 rounds")
        self.code = code
        self.rounds = int(rounds)
        self.time_bc = time_bc
        L = code.L
        t_ext = rounds + 1 if time_bc == "open" else rounds
        self.complex = build_complex(
            4, (L, L, L, t_ext), periodic=(True, True, True, time_bc == "periodic")
        )
        self.t_ext = t_ext
        d4 = self.complex
        cx3 = code.complex
        # subset-position translation tables between the 4D complex and the
        # 3D spatial complex, split by whether the cell extends along time
        self._space_pos = {}   # 4D subset pos -> 3D subset pos, same axes
        self._time_pos = {}    # 4D subset pos -> 3D subset pos of axes minus time
        for r in range(1, 4):
            subs4 = d4.axis_subsets(r)
            for s4, axes in enumerate(subs4):
                if TIME_AXIS in axes:
                    spatial = tuple(a for a in axes if a != TIME_AXIS)
                    self._time_pos[(r, s4)] = cx3.axis_subsets(r - 1).index(spatial)
                else:
                    self._space_pos[(r, s4)] = cx3.axis_subsets(r).index(axes)

    @property
    def closure_layer(self):
        return self.t_ext - 1 if self.time_bc == "open" else 0

    def error_rank(self, sector):
        return 1 if sector == SECTOR_Z else 2

    # -- cell bookkeeping ------------------------------------------------

    def split(self, chain):
        """(spacelike part, timelike part) of a spacetime chain."""
        d4 = self.complex
        si, _ = d4.decode(chain.rank, chain.indices)
        timelike = np.array(
            [(chain.rank, int(s)) in self._time_pos for s in si], dtype=bool
        )
        return (
            Chain(d4, chain.rank, chain.indices[~timelike]),
            Chain(d4, chain.rank, chain.indices[timelike]),
        )

    def spacelike_cells(self, rank, layer):
        """All spacelike rank cells with time coordinate `layer`."""
        d4 = self.complex
        out = []
        for (r, s4), _ in self._space_pos.items():
            if r != rank:
                continue
            exts = d4._extents[r][s4]
            grids = [np.arange(exts[a]) for a in range(3)] + [np.array([layer])]
            coords = np.stack(np.meshgrid(*grids, indexing="ij"), axis=-1).reshape(-1, 4)
            out.append(d4.encode(r, np.full(coords.shape[0], s4), coords))
        return np.sort(np.concatenate(out))

    def to_spatial(self, rank, idx):
        """Spacelike 4D cells -> (3D cell indices, layers)."""
        d4 = self.complex
        si, coords = d4.decode(rank, idx)
        cx3 = self.code.complex
        si3 = np.array([self._space_pos[(rank, int(s))] for s in si], dtype=np.int64)
        return cx3.encode(rank, si3, coords[:, :3]), coords[:, 3]

    def from_spatial(self, rank, idx3, layer):
        """3D cells -> spacelike 4D cells at a given layer."""
        cx3 = self.code.complex
        d4 = self.complex
        si3, coords3 = cx3.decode(rank, idx3)
        back = {v: k[1] for k, v in self._space_pos.items() if k[0] == rank}
        si4 = np.array([back[int(s)] for s in si3], dtype=np.int64)
        coords4 = np.concatenate(
            [coords3, np.full((coords3.shape[0], 1), layer, dtype=np.int64)], axis=1
        )
        return d4.encode(rank, si4, coords4)

    def timelike_to_check(self, rank, idx):
        """Timelike 4D cells -> (3D check-cell indices, round time coords)."""
        d4 = self.complex
        si, coords = d4.decode(rank, idx)
        cx3 = self.code.complex
        si3 = np.array([self._time_pos[(rank, int(s))] for s in si], dtype=np.int64)
        return cx3.encode(rank - 1, si3, coords[:, :3]), coords[:, 3]

    def check_to_timelike(self, rank, idx3, tcoord):
        cx3 = self.code.complex
        d4 = self.complex
        si3, coords3 = cx3.decode(rank - 1, idx3)
        back = {v: k[1] for k, v in self._time_pos.items() if k[0] == rank}
        si4 = np.array([back[int(s)] for s in si3], dtype=np.int64)
        coords4 = np.concatenate(
            [coords3, np.asarray(tcoord, dtype=np.int64).reshape(-1, 1)], axis=1
        )
        return d4.encode(rank, si4, coords4)


@dataclass
class SpacetimeErrorChain:
    """Total spacetime error: qubit errors + measurement faults."""

    layout: SpacetimeLayout
    sector: str
    chain: Chain

    def spatial_part(self):
        return self.layout.split(self.chain)[0]

    def temporal_part(self):
        return self.layout.split(self.chain)[1]


@dataclass
class SyndromeHistory:
    """Measured-excitation worldlines on timelike cells."""

    layout: SpacetimeLayout
    sector: str
    chain: Chain
    residual_bits: np.ndarray = field(repr=False, default=None)

    def residual_chain(self):
        """Leftover true excitations after the last round (3D chain)."""
        cx3 = self.layout.code.complex
        rank = self.layout.error_rank(self.sector) - 1
        return Chain.from_bits(cx3, rank, self.residual_bits)


def sample_spacetime_error(code, noise, rng, time_bc="open"):
    """i.i.d. qubit errors per epoch (rate p) and faults per round (rate q)."""
    layout = code.spacetime(noise.rounds, time_bc)
    rank = layout.error_rank(noise.sector)
    d4 = layout.complex
    picked = []
    for t in range(noise.rounds):  # epoch t+1 sits on layer t
        cells = layout.spacelike_cells(rank, t)
        hit = rng.random(cells.size) < noise.p
        picked.append(cells[hit])
    # timelike cells, all rounds; base time coordinate runs over 0..T-1
    n_checks = code.complex.n_cells(rank - 1)
    for t in range(noise.rounds):
        hit = rng.random(n_checks) < noise.q
        if hit.any():
            picked.append(
                layout.check_to_timelike(
                    rank, np.nonzero(hit)[0], np.full(int(hit.sum()), t)
                )
            )
    chain = Chain(d4, rank, np.concatenate(picked) if picked else [])
    return SpacetimeErrorChain(layout, noise.sector, chain)


def detection_events(code, err):
    """Syndrome history of a spacetime error.

    Integrates true excitations layer by layer, XORs in the faults, and
    returns the timelike cells where the measured check value is -1.
    E + S is then closed everywhere except the closure layer, which
    carries the residual true syndrome (read out by the final perfect
    round, or the periodic seam).
    """
    layout = err.layout
    sector = err.sector
    rank = layout.error_rank(sector)
    cx3 = code.complex
    n_checks = cx3.n_cells(rank - 1)
    T = layout.rounds

    space, time = layout.split(err.chain)
    idx3, layers = layout.to_spatial(rank, space.indices)
    chk3, tcoords = layout.timelike_to_check(rank, time.indices)

    cumulative = np.zeros(n_checks, dtype=np.uint8)
    syndrome_cells = []
    for t in range(1, T + 1):
        e_t = Chain(cx3, rank, idx3[layers == t - 1])
        if not e_t.is_empty():
            cumulative[boundary(e_t).indices] ^= 1
        fault = np.zeros(n_checks, dtype=np.uint8)
        fault[chk3[tcoords == t - 1]] = 1
        measured = cumulative ^ fault
        on = np.nonzero(measured)[0]
        if on.size:
            syndrome_cells.append(
                layout.check_to_timelike(rank, on, np.full(on.size, t - 1))
            )
    s_chain = Chain(
        layout.complex,
        rank,
        np.concatenate(syndrome_cells) if syndrome_cells else [],
    )
    return SyndromeHistory(layout, sector, s_chain, residual_bits=cumulative)


def canonical_recovery(code, synd):
    """A recovery chain closing E + S: solves for the residual syndrome
    and places the solution on the closure layer."""
    layout = synd.layout
    rank = layout.error_rank(synd.sector)
    cx3 = code.complex
    if not synd.residual_bits.any():
        return Chain(layout.complex, rank, [])
    x = gf2_solve(boundary_matrix(cx3, rank), synd.residual_bits)
    if x is None:
        raise RankError("residual syndrome outside the boundary image")
    idx3 = np.nonzero(x)[0]
    return Chain(
        layout.complex,
        rank,
        layout.from_spatial(rank, idx3, layout.closure_layer),
    )


def spacetime_class_label(layout, sector, cycle):
    """3-bit spatial winding label of a closed spacetime chain."""
    rank = layout.error_rank(sector)
    if cycle.rank != rank:
        raise RankError("cycle rank does not match the sector")
    if not boundary(cycle).is_empty():
        raise RankError("class label needs a cycle")
    d4 = layout.complex
    si, coords = d4.decode(rank, cycle.indices)
    label = np.zeros(3, dtype=np.uint8)
    spatial_sets = [
        axes
        for axes in d4.axis_subsets(rank)
        if TIME_AXIS not in axes
    ]
    for i, axes in enumerate(spatial_sets):
        s4 = d4.axis_subsets(rank).index(axes)
        sel = si == s4
        for a in axes:
            sel = sel & (coords[:, a] == 0)
        label[i] = int(sel.sum()) % 2
    return label


def logical_class(code, err, synd, recovery):
    """Homology class of E + S + R; all-zero label means success."""
    total = err.chain ^ synd.chain ^ recovery
    return spacetime_class_label(err.layout, err.sector, total)


def static_class_label(code, error, sector):
    """Winding label of a static cycle (empty static syndrome)."""
    basis = code.string_basis if sector == SECTOR_Z else code.membrane_basis
    return classify_cycle(code.complex, basis, error)
