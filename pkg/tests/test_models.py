import math

import numpy as np
import pytest

from tc3d.cells import Chain, build_complex, dual_chain
from tc3d.errors import (
    DimensionMismatchError,
    NoGaugeSymmetryError,
    RankError,
)
from tc3d.models import (
    DisorderSample,
    build_model,
    couplings,
    delta_energy,
    disorder_from_error_chain,
    energy,
    kind_of,
    nishimori_beta,
    overlap,
    p_of_beta,
    sample_disorder,
    temporal_term_mask,
)


def test_nishimori_values():
    assert nishimori_beta(0.5) == 0.0
    assert abs(nishimori_beta(0.1) - 0.5 * math.log(9)) < 1e-14
    assert abs(nishimori_beta(0.02) - 0.5 * math.log(49)) < 1e-14


def test_nishimori_roundtrip():
    for p in (0.01, 0.11, 0.3, 0.49):
        assert abs(p_of_beta(nishimori_beta(p)) - p) < 1e-15


def test_nishimori_domain():
    for bad in (0.0, 1.0, -0.1, 1.3):
        with pytest.raises(DimensionMismatchError):
            nishimori_beta(bad)


@pytest.mark.parametrize("kind,L,n_spins,n_terms,arity", [
    ("RPGM3", 2, 24, 24, 4),
    ("RCGM4", 2, 96, 64, 6),
    ("RBIM3", 3, 27, 81, 2),
    ("RPGM4", 2, 64, 96, 4),
    ("RBIM4", 2, 16, 64, 2),
])
def test_model_shapes(kind, L, n_spins, n_terms, arity):
    model = build_model(kind, build_complex(kind_of(kind).dimension, L))
    assert model.n_spins == n_spins
    assert model.n_terms == n_terms
    assert model.term_members.shape == (n_terms, arity)


def test_dimension_mismatch():
    with pytest.raises(DimensionMismatchError):
        build_model("RPGM4", build_complex(3, 2))


def test_disorder_limits(rng):
    model = build_model("RPGM3", build_complex(3, 2))
    assert (sample_disorder(model, 0.0, rng).eta == 1).all()
    assert (sample_disorder(model, 1.0, rng).eta == -1).all()


def test_disorder_rate(rng):
    model = build_model("RBIM3", build_complex(3, 4))
    n = 0
    minus = 0
    for _ in range(600):
        d = sample_disorder(model, 0.1, rng)
        minus += (d.eta == -1).sum()
        n += d.eta.size
    sigma = math.sqrt(0.1 * 0.9 / n)
    assert abs(minus / n - 0.1) < 3 * sigma


def test_disorder_from_error_chain():
    cx = build_complex(3, 2)
    model = build_model("RPGM3", cx)
    empty = disorder_from_error_chain(model, Chain(cx, 2))
    assert (empty.eta == 1).all()
    full = disorder_from_error_chain(model, Chain(cx, 2, np.arange(24)))
    assert (full.eta == -1).all()
    single = disorder_from_error_chain(model, Chain(cx, 2, [17]))
    assert single.eta[17] == -1 and (single.eta == -1).sum() == 1
    with pytest.raises(RankError):
        disorder_from_error_chain(model, Chain(cx, 1, [0]))


def test_disorder_serialization(rng):
    model = build_model("RCGM4", build_complex(4, 2))
    d = sample_disorder(model, 0.3, rng)
    back = DisorderSample.from_hex(model.n_terms, d.to_hex())
    assert np.array_equal(d.eta, back.eta)


def test_energy_ground_state(rng):
    model = build_model("RPGM3", build_complex(3, 2))
    up = model.all_up()
    assert energy(model, up, DisorderSample(np.ones(24, dtype=np.int8))) == -24
    assert energy(model, up, DisorderSample(-np.ones(24, dtype=np.int8))) == 24


def test_local_field_consistency(rng):
    kinds = [("RBIM3", 3), ("RPGM3", 2), ("RPGM4", 2), ("RCGM4", 2),
             ("RBIM4", 2)]
    for name, L in kinds:
        model = build_model(name, build_complex(kind_of(name).dimension, L))
        dis = sample_disorder(model, 0.3, rng)
        spins = model.random_state(rng)
        for _ in range(15):
            i = int(rng.integers(model.n_spins))
            e0 = energy(model, spins, dis)
            de = delta_energy(model, spins, dis, i)
            spins[i] = -spins[i]
            assert abs(energy(model, spins, dis) - (e0 + de)) < 1e-9


def test_gauge_generators_even_overlap(rng):
    for name, L in (("RPGM3", 2), ("RPGM4", 2), ("RCGM4", 2)):
        model = build_model(name, build_complex(kind_of(name).dimension, L))
        members = [set(map(int, row)) for row in model.term_members]
        for g in model.gauge_generators():
            gset = set(map(int, g))
            assert all(len(gset & t) % 2 == 0 for t in members)


def test_gauge_energy_invariance(rng):
    for name, L in (("RPGM3", 2), ("RCGM4", 2)):
        model = build_model(name, build_complex(kind_of(name).dimension, L))
        gens = model.gauge_generators()
        for _ in range(20):
            dis = sample_disorder(model, 0.4, rng)
            spins = model.random_state(rng)
            e0 = energy(model, spins, dis)
            g = gens[int(rng.integers(len(gens)))]
            spins[g] = -spins[g]
            assert energy(model, spins, dis) == e0


def test_gauge_generator_shapes():
    rp = build_model("RPGM3", build_complex(3, 2))
    assert all(len(g) == 6 for g in rp.gauge_generators())
    rc = build_model("RCGM4", build_complex(4, 2))
    assert all(len(g) == 6 for g in rc.gauge_generators())
    # composing every generator flips each spin an even number of times
    flips = np.zeros(rp.n_spins, dtype=int)
    for g in rp.gauge_generators():
        flips[g] += 1
    assert (flips % 2 == 0).all()


def test_rbim_has_no_gauge_symmetry():
    model = build_model("RBIM3", build_complex(3, 2))
    with pytest.raises(NoGaugeSymmetryError):
        model.gauge_generators()


def test_overlap_equals_minus_energy_density(rng):
    model = build_model("RPGM3", build_complex(3, 2))
    dis = sample_disorder(model, 0.2, rng)
    spins = model.random_state(rng)
    assert abs(overlap(model, spins, dis) + energy(model, spins, dis) / 24) < 1e-12


def test_anisotropic_couplings():
    code_lengths = (2, 2, 2, 3)
    cx = build_complex(4, code_lengths)
    model = build_model("RCGM4", cx)
    dis = DisorderSample(np.ones(model.n_terms, dtype=np.int8))
    k = couplings(model, dis, 1.0, beta_temporal=0.5)
    mask = temporal_term_mask(model)
    assert mask.any() and not mask.all()
    assert np.allclose(k[mask], 0.5) and np.allclose(k[~mask], 1.0)
