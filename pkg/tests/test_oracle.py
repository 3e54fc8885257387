import math

import numpy as np
import pytest

from tc3d import oracle
from tc3d.cells import Chain, build_complex
from tc3d.errors import InfeasibleSyndromeError, ResourceError
from tc3d.models import DisorderSample, build_model, sample_disorder
from tc3d.toric import static_syndrome


def tiny_bond_model():
    cx = build_complex(3, (2, 1, 1), periodic=(False,) * 3)
    return build_model("RBIM3", cx)


def test_two_spin_closed_form():
    model = tiny_bond_model()
    dis = DisorderSample(np.ones(1, dtype=np.int8))
    for beta in (0.3, 0.7, 2.0, 25.0):
        lnz = oracle.exact_log_partition(model, dis, beta)
        assert abs(lnz - math.log(2.0) - beta - math.log1p(math.exp(-2 * beta))) < 1e-12


def test_beta_zero_counts_states(rng):
    model = build_model("RPGM3", build_complex(3, 2))
    dis = sample_disorder(model, 0.3, rng)
    budget = oracle.EnumerationBudget(max_states=1 << 24, gauge_fixing=False)
    lnz = oracle.exact_log_partition(model, dis, 0.0, budget)
    assert abs(lnz - 24 * math.log(2)) < 1e-9


def test_gauge_fixed_equals_raw(rng):
    model = build_model("RPGM3", build_complex(3, 2))
    dis = DisorderSample(np.ones(model.n_terms, dtype=np.int8))
    raw = oracle.exact_log_partition(
        model, dis, 0.9,
        oracle.EnumerationBudget(max_states=1 << 24, gauge_fixing=False),
    )
    fixed = oracle.exact_log_partition(model, dis, 0.9)
    assert abs(raw - fixed) < 1e-10


def test_worker_count_bit_identical(rng):
    model = build_model("RPGM3", build_complex(3, 2))
    dis = sample_disorder(model, 0.2, rng)
    a = oracle.exact_log_partition(model, dis, 1.1, workers=1)
    b = oracle.exact_log_partition(model, dis, 1.1, workers=2)
    assert a == b


def test_budget_error_reports_bits(rng):
    model = build_model("RPGM3", build_complex(3, 2))
    dis = sample_disorder(model, 0.2, rng)
    with pytest.raises(ResourceError) as err:
        oracle.exact_log_partition(
            model, dis, 0.5,
            oracle.EnumerationBudget(max_states=1 << 10, gauge_fixing=False),
        )
    assert err.value.required_bits == 24


def test_class_probabilities_normalized(code2, rng):
    for _ in range(5):
        e = Chain.from_bits(code2.complex, 1, rng.random(24) < 0.1)
        synd = static_syndrome(code2, e, "Z")
        probs = oracle.exact_class_probabilities(code2, synd, 0.08)
        assert probs.shape == (8,)
        assert abs(probs.sum() - 1.0) < 1e-12
        assert (probs >= 0).all()


def test_class_probabilities_uniform_at_half(code2, rng):
    e = Chain.from_bits(code2.complex, 1, rng.random(24) < 0.2)
    synd = static_syndrome(code2, e, "Z")
    probs = oracle.exact_class_probabilities(code2, synd, 0.5)
    assert np.abs(probs - 0.125).max() < 1e-12


def test_trivial_class_dominates_at_small_p(code2):
    probs = oracle.exact_class_probabilities(code2, Chain(code2.complex, 0), 0.001)
    assert probs[0] > 0.999


def test_trivial_mass_monotone_in_p(code2):
    masses = [
        oracle.exact_class_probabilities(code2, Chain(code2.complex, 0), p)[0]
        for p in (0.02, 0.1, 0.2, 0.3, 0.4, 0.5)
    ]
    assert all(a >= b - 1e-12 for a, b in zip(masses, masses[1:]))
    assert abs(masses[-1] - 0.125) < 1e-12


def test_class_labels_independent_of_reference(code2, rng):
    """Relabeling the reference solution within its class permutes
    nothing: probabilities are attached to detector labels."""
    e = Chain.from_bits(code2.complex, 1, rng.random(24) < 0.15)
    synd = static_syndrome(code2, e, "Z")
    p1 = oracle.exact_class_probabilities(code2, synd, 0.07)
    p2 = oracle.exact_class_probabilities(code2, synd, 0.07)
    assert np.array_equal(p1, p2)


def test_mapping_small_sample(code2, rng):
    """Class masses equal normalized partition functions of the mapped
    model at the matching coupling (the full 20-syndrome sweep runs in
    the acceptance suite)."""
    for sector, p in (("Z", 0.08), ("X", 0.1)):
        rank = 1 if sector == "Z" else 2
        e = Chain.from_bits(code2.complex, rank, rng.random(24) < p)
        synd = static_syndrome(code2, e, sector)
        pr = oracle.exact_class_probabilities(code2, synd, p, sector)
        pr_sm = oracle.sm_class_probabilities(code2, synd, p, sector)
        assert np.abs(pr - pr_sm).max() < 1e-10


def test_free_energy_difference(code2, rng):
    e = Chain.from_bits(code2.complex, 1, rng.random(24) < 0.1)
    synd = static_syndrome(code2, e, "Z")
    probs = oracle.exact_class_probabilities(code2, synd, 0.08)
    f3 = oracle.class_free_energy_difference(code2, synd, 0.08, 3)
    assert abs(math.exp(-f3) - probs[3] / probs[0]) < 1e-12
    # p = 0.5: all class free energies vanish
    for label in range(1, 8):
        assert abs(oracle.class_free_energy_difference(code2, synd, 0.5, label)) < 1e-9


def test_minimal_logical_weight_limit(code2):
    """Empty syndrome, p -> 0: the cheapest nontrivial class costs
    2 beta J per logical link (weight L = 2), with a degeneracy offset
    ln 4 from the four minimal windings at L = 2."""
    p = 1e-4
    beta = 0.5 * math.log((1 - p) / p)
    f = oracle.class_free_energy_difference(code2, Chain(code2.complex, 0), p, 1)
    assert abs(f - (2 * beta * 2 - math.log(4))) < 1e-6
    assert abs(f / (2 * beta * 2) - 1.0) < math.log(4) / (4 * beta) + 0.01


def test_infeasible_syndrome(code2):
    with pytest.raises(InfeasibleSyndromeError):
        oracle.exact_class_probabilities(code2, Chain(code2.complex, 0, [0]), 0.1)


def test_kw_exact_on_slabs():
    for lengths, beta in (((2, 2, 1), 0.6), ((3, 3, 2), 0.4), ((3, 3, 2), 0.05)):
        cx = build_complex(3, lengths, periodic=(False,) * 3)
        model = build_model("RPGM3", cx)
        rep = oracle.kw_prefactor_check(model, beta)
        assert rep.exact_expected
        assert rep.residual < 1e-9


def test_kw_torus_reported_not_exact():
    from tc3d.duality import derive_dual_model

    model = build_model("RPGM3", build_complex(3, 2))
    dual, _ = derive_dual_model(model)
    rep = oracle.kw_prefactor_check(model, 0.7, dual_model=dual)
    assert not rep.exact_expected
    assert rep.topological_obstruction == 3
    assert 0 < rep.residual_density < 0.2
    # the built-in partner path agrees with the explicit dual model
    rep2 = oracle.kw_prefactor_check(model, 0.7)
    assert abs(rep.residual - rep2.residual) < 1e-9


def test_mc_distribution_checks(rng):
    model = tiny_bond_model()
    dis = DisorderSample(np.ones(1, dtype=np.int8))
    # beta = 0: uniform target
    tv = oracle.mc_distribution_check(model, dis, 0.0, n_sweeps=200_000, seed=1)
    assert tv < 0.02
    # 2-spin at beta = 0.7
    tv = oracle.mc_distribution_check(model, dis, 0.7, n_sweeps=1_000_000, seed=2)
    assert tv < 0.01
    # deep order: mass concentrates on the two ground states (beta kept
    # low enough that tunneling between them still mixes the chain)
    probs = oracle.exact_state_distribution(model, dis, 2.5)
    assert probs[0b00] + probs[0b11] > 0.99
    tv = oracle.mc_distribution_check(model, dis, 2.5, n_sweeps=400_000, seed=3)
    assert tv < 0.02


def test_exact_wilson_means_strong_coupling():
    """Single-layer slab: <W(a x b)> = tanh(beta)^(ab) exactly."""
    cx = build_complex(3, (4, 4, 1), periodic=(False,) * 3)
    model = build_model("RPGM3", cx)
    dis = DisorderSample(np.ones(model.n_terms, dtype=np.int8))
    means = oracle.exact_wilson_means(
        model, dis, 0.35, [("loop", a, b) for a in (1, 2) for b in (1, 2)]
    )
    t = math.tanh(0.35)
    for a in (1, 2):
        for b in (1, 2):
            assert abs(means[f"loop_{a}x{b}"] - t ** (a * b)) < 1e-12
