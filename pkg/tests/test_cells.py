import numpy as np
import pytest

from tc3d.cells import (
    Chain,
    boundary,
    build_complex,
    chain_from_hex,
    chain_from_text,
    chain_to_hex,
    chain_to_text,
    coboundary,
    dual_chain,
    pairing,
    random_chain,
)
from tc3d.errors import (
    DegenerateLatticeError,
    RankError,
    ResourceError,
    UnsupportedBoundaryError,
)


def test_cell_counts_3d_torus():
    cx = build_complex(3, 3)
    assert cx.cell_counts == (27, 81, 81, 27)
    assert cx.euler_characteristic() == 0


def test_cell_counts_4d_torus():
    cx = build_complex(4, 2)
    assert cx.cell_counts == (16, 64, 96, 64, 16)
    assert cx.euler_characteristic() == 0


def test_counts_follow_binomial_times_volume():
    from math import comb

    for cx in (build_complex(3, (2, 3, 4)), build_complex(4, (2, 2, 3, 2))):
        vol = np.prod(cx.lengths)
        for k in range(cx.dimension + 1):
            assert cx.n_cells(k) == comb(cx.dimension, k) * vol


def test_single_layer_slab():
    cx = build_complex(3, (2, 2, 1), periodic=(True, True, False))
    # no cells extend along the open unit axis
    assert cx.cell_counts == (4, 8, 4, 0)
    # a 2-torus sheet: Euler characteristic still 0, by direct enumeration
    assert cx.euler_characteristic() == 0


def test_degenerate_periodic_axis_rejected():
    with pytest.raises(DegenerateLatticeError):
        build_complex(3, (1, 3, 3))


def test_cell_cap():
    with pytest.raises(ResourceError):
        build_complex(4, 5, max_cells=1000)


def test_index_roundtrip(rng):
    for cx in (build_complex(3, (3, 2, 4)),
               build_complex(3, (3, 3, 2), periodic=(True, False, True))):
        for k in range(cx.dimension + 1):
            n = cx.n_cells(k)
            idx = rng.integers(0, n, size=min(50, n))
            for i in idx:
                assert cx.index_of(cx.cell_of(k, int(i))) == int(i)


def test_boundary_of_plaquette_and_cube(torus3):
    p = Chain(torus3, 2, [0])
    assert len(boundary(p)) == 4
    cube = Chain(torus3, 3, [5])
    closed = boundary(cube)
    assert len(closed) == 6
    assert boundary(closed).is_empty()


def test_boundary_squared_vanishes(rng):
    shapes = [
        build_complex(3, 3),
        build_complex(4, 2),
        build_complex(3, (3, 3, 2), periodic=(True, True, False)),
    ]
    for cx in shapes:
        for k in range(2, cx.dimension + 1):
            for _ in range(40):
                c = random_chain(cx, k, rng)
                assert boundary(boundary(c)).is_empty()


def test_boundary_linear(rng, torus3):
    for k in (1, 2, 3):
        a = random_chain(torus3, k, rng)
        b = random_chain(torus3, k, rng)
        assert boundary(a ^ b) == boundary(a) ^ boundary(b)


def test_rank_errors(torus3):
    with pytest.raises(RankError):
        boundary(Chain(torus3, 0, [1]))
    with pytest.raises(RankError):
        coboundary(Chain(torus3, 3, [1]))


def test_vertex_star_and_4d_link(torus3, torus4):
    assert len(coboundary(Chain(torus3, 0, [0]))) == 6
    assert len(coboundary(Chain(torus4, 1, [0]))) == 6  # 2(d-1) plaquettes


def test_coboundary_is_adjoint(rng):
    for cx in (build_complex(3, 3),
               build_complex(3, (3, 2, 2), periodic=(False, True, True))):
        for k in range(cx.dimension):
            for _ in range(40):
                a = random_chain(cx, k, rng)
                b = random_chain(cx, k + 1, rng)
                assert pairing(coboundary(a), b) == pairing(a, boundary(b))


def test_dual_cell_ranks(torus3, torus4):
    # 3D: plaquette <-> dual link, vertex <-> dual cube
    p = torus3.cell_of(2, 7)
    assert torus3.dual_cell(p).rank == 1
    v = torus3.cell_of(0, 3)
    assert torus3.dual_cell(v).rank == 3
    # 4D: plaquettes are self-rank
    q = torus4.cell_of(2, 11)
    assert torus4.dual_cell(q).rank == 2


def test_dual_is_involution(rng, torus3, torus4):
    for cx in (torus3, torus4):
        for k in range(cx.dimension + 1):
            c = random_chain(cx, k, rng)
            assert dual_chain(dual_chain(c)) == c


def test_dual_intertwines_boundary_coboundary(rng, torus3, torus4):
    for cx in (torus3, torus4):
        for k in range(1, cx.dimension + 1):
            c = random_chain(cx, k, rng)
            assert dual_chain(boundary(c)) == coboundary(dual_chain(c))


def test_dual_needs_periodic():
    cx = build_complex(3, (3, 3, 2), periodic=(True, True, False))
    with pytest.raises(UnsupportedBoundaryError):
        cx.dual_index(1, [0])


def test_chain_algebra(rng, torus3):
    a = random_chain(torus3, 1, rng)
    empty = Chain(torus3, 1)
    assert a ^ a == empty
    assert a ^ empty == a
    assert len(a ^ a) == 0


def test_serialization_roundtrip(rng, torus3):
    c = random_chain(torus3, 2, rng, density=0.2)
    assert chain_from_text(torus3, 2, chain_to_text(c, header="rank=2")) == c
    assert chain_from_hex(torus3, 2, chain_to_hex(c)) == c
    # both formats agree on the empty chain too
    e = Chain(torus3, 1)
    assert chain_from_text(torus3, 1, chain_to_text(e)) == e
    assert chain_from_hex(torus3, 1, chain_to_hex(e)) == e
