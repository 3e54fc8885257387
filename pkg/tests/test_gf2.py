import numpy as np
import pytest

from tc3d.cells import Chain, boundary, build_complex, random_chain
from tc3d.errors import RankError, UnsupportedBoundaryError
from tc3d.gf2 import (
    GF2Matrix,
    betti_numbers,
    boundary_matrix,
    classify_cycle,
    gf2_nullspace,
    gf2_rank,
    gf2_solve,
    homology_basis,
)


def test_rank_identity_and_zero():
    assert gf2_rank(GF2Matrix.from_dense(np.eye(5, dtype=int))) == 5
    assert gf2_rank(GF2Matrix(4, 7)) == 0


def test_rank_gf2_not_real(rng):
    # a matrix of full real rank can drop rank mod 2
    m = GF2Matrix.from_dense([[1, 1, 0], [0, 1, 1], [1, 0, 1]])
    assert gf2_rank(m) == 2


def test_boundary2_rank_L2():
    # independent plaquette checks of the L=2 code: 2*2^3 - 2
    m = boundary_matrix(build_complex(3, 2), 2)
    assert gf2_rank(m) == 14


def test_solve_identity(rng):
    m = GF2Matrix.from_dense(np.eye(6, dtype=int))
    rhs = (rng.random(6) < 0.5).astype(np.uint8)
    assert np.array_equal(gf2_solve(m, rhs), rhs)


def test_solve_no_solution():
    # rows sum to zero, so any rhs with odd total parity is outside
    m = GF2Matrix.from_dense([[1, 1, 0], [0, 1, 1], [1, 0, 1]])
    assert gf2_solve(m, np.array([1, 0, 0], dtype=np.uint8)) is None


def test_solve_syndrome_realization(rng):
    cx = build_complex(3, 2)
    m = boundary_matrix(cx, 1)
    e = random_chain(cx, 1, rng, density=0.15)
    s = boundary(e)
    x = gf2_solve(m, s.to_bits())
    assert x is not None
    assert boundary(Chain.from_bits(cx, 1, x)) == s


def test_nullspace_annihilates(rng):
    cx = build_complex(3, 2)
    m = boundary_matrix(cx, 1)
    basis = gf2_nullspace(m)
    assert basis.shape[0] == 24 - gf2_rank(m)
    for row in basis:
        assert boundary(Chain.from_bits(cx, 1, row)).is_empty()
    # basis is independent
    assert gf2_rank(GF2Matrix.from_dense(basis)) == basis.shape[0]


@pytest.mark.parametrize("dim,L,k,count", [(3, 3, 1, 3), (3, 3, 2, 3),
                                           (4, 2, 1, 4), (4, 2, 2, 6)])
def test_betti_counts(dim, L, k, count):
    basis = homology_basis(build_complex(dim, L), k, verify=True)
    assert basis.betti() == count


def test_homology_needs_torus():
    cx = build_complex(3, (3, 3, 2), periodic=(True, True, False))
    with pytest.raises(UnsupportedBoundaryError):
        homology_basis(cx, 1)


def test_classify_boundaries_trivial(rng, torus3):
    basis = homology_basis(torus3, 1)
    for _ in range(20):
        z = boundary(random_chain(torus3, 2, rng))
        assert not classify_cycle(torus3, basis, z).any()


def test_classify_representatives_unit(torus3):
    basis = homology_basis(torus3, 1)
    for i, rep in enumerate(basis.representatives):
        label = classify_cycle(torus3, basis, rep)
        expected = np.zeros(3, dtype=np.uint8)
        expected[i] = 1
        assert np.array_equal(label, expected)


def test_classify_additive(rng, torus3):
    basis = homology_basis(torus3, 1)
    reps = basis.representatives
    z = reps[0] ^ reps[2] ^ boundary(random_chain(torus3, 2, rng))
    assert list(classify_cycle(torus3, basis, z)) == [1, 0, 1]


def test_classify_rejects_non_cycle(torus3):
    basis = homology_basis(torus3, 1)
    with pytest.raises(RankError):
        classify_cycle(torus3, basis, Chain(torus3, 1, [0]))


def test_rank_nullity_betti():
    for cx in (build_complex(3, 2), build_complex(3, 3), build_complex(4, 2)):
        expected = betti_numbers(cx)
        for k in range(cx.dimension + 1):
            r_down = gf2_rank(boundary_matrix(cx, k)) if k >= 1 else 0
            r_up = (
                gf2_rank(boundary_matrix(cx, k + 1))
                if k + 1 <= cx.dimension
                else 0
            )
            assert r_down + r_up + expected[k] == cx.n_cells(k)
