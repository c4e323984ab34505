import json

import numpy as np
import pytest

from gwass.gw import (GwParams, _gw_dense_p1, _gw_parametric,
                      gw_brute_force, gw_distance)
from gwass.lab import box_closed_form, box_measure
from gwass.measures import (DiscreteMeasure, add, canonicalize, scale,
                            total_mass, tv_distance)


def random_instance(rng, dim=1, max_atoms=6):
    n = int(rng.integers(1, max_atoms + 1))
    return DiscreteMeasure(dim, rng.uniform(-2, 2, (n, dim)), rng.uniform(0.05, 2, n))


def test_params_validation():
    with pytest.raises(ValueError):
        GwParams(0.0, 1.0, 1.0)
    with pytest.raises(ValueError):
        GwParams(1.0, -1.0, 1.0)
    with pytest.raises(ValueError):
        GwParams(1.0, 1.0, 0.9)
    assert GwParams(1.0, 4.0).truncation_radius == 0.5


def test_dirac_formula():
    for a in (0.5, 1.0, 2.0):
        for b in (0.5, 1.0, 2.0):
            for x in np.arange(0.1, 5.05, 0.1):
                got = gw_distance(DiscreteMeasure.dirac(0.0),
                                  DiscreteMeasure.dirac(float(x)),
                                  GwParams(a, b, 1.0)).value
                assert got == pytest.approx(min(2 * a, b * x), abs=1e-9)


def test_dirac_tie_prefers_removal():
    r = gw_distance(DiscreteMeasure.dirac(0.0), DiscreteMeasure.dirac(2.0),
                    GwParams(1.0, 1.0, 1.0))
    assert r.value == pytest.approx(2.0, abs=1e-12)
    assert r.removed_source_mass == pytest.approx(1.0)
    assert r.removed_target_mass == pytest.approx(1.0)
    assert not r.plan.entries


def test_identical_measures_distance_zero():
    rng = np.random.default_rng(2)
    mu = random_instance(rng, dim=2)
    for p in (1.0, 2.0):
        r = gw_distance(mu, mu, GwParams(0.7, 1.3, p))
        assert r.value <= 1e-12
        assert r.removed_source_mass <= 1e-12


def test_zero_measure_gives_removal_cost():
    nu = DiscreteMeasure.from_atoms(1, [([0.0], 1.0), ([5.0], 2.0)])
    for p in (1.0, 2.0):
        r = gw_distance(DiscreteMeasure.zero(1), nu, GwParams(1.5, 1.0, p))
        assert r.value == pytest.approx(1.5 * 3.0, abs=1e-12)
    assert gw_distance(DiscreteMeasure.zero(1), DiscreteMeasure.zero(1),
                       GwParams(1.0, 1.0, 1.0)).value == 0.0


def test_two_atom_mixed_strategy_example():
    mu = DiscreteMeasure.from_atoms(1, [([1.0], 2.0)])
    nu = DiscreteMeasure.from_atoms(1, [([0.0], 1.0), ([2.0], 1.0)])
    r = gw_distance(mu, nu, GwParams(1.0, 1.0, 1.0))
    # transport both: 2b; remove all: 4a; mixed: b + 2a -> min is 2
    assert r.value == pytest.approx(2.0, abs=1e-12)


def test_box_example_matches_closed_form():
    for x in (0.0, 0.5, 1.0, 1.5, 2.0, 3.0):
        got = gw_distance(box_measure(-1.0), box_measure(x), GwParams(1.0, 1.0, 1.0)).value
        assert got == pytest.approx(box_closed_form(x), abs=0.02)
    assert box_closed_form(0.0) == pytest.approx(1.0)
    assert box_closed_form(1.0) == pytest.approx(1.75)
    assert box_closed_form(2.0) == pytest.approx(2.0)
    assert box_closed_form(3.0) == pytest.approx(2.0)


def test_box_closed_form_against_scalar_minimization():
    from scipy.optimize import minimize_scalar
    for x in (0.0, 0.5, 1.0, 1.5, 2.0, 3.0):
        res = minimize_scalar(lambda y: 2 - 2 * y + x * y + y * y,
                              bounds=(0.0, 1.0), method="bounded",
                              options={"xatol": 1e-12})
        assert box_closed_form(x) == pytest.approx(res.fun, abs=1e-8)


def test_solver_paths_agree():
    rng = np.random.default_rng(17)
    for _ in range(120):
        mu = random_instance(rng)
        nu = random_instance(rng)
        params = GwParams(rng.uniform(0.1, 10), rng.uniform(0.1, 10), 1.0)
        line = gw_distance(mu, nu, params).value
        dense = _gw_dense_p1(canonicalize(mu), canonicalize(nu), params).value
        scan = _gw_parametric(canonicalize(mu), canonicalize(nu), params).value
        assert line == pytest.approx(dense, abs=1e-9, rel=1e-9)
        assert line == pytest.approx(scan, abs=1e-9, rel=1e-9)


def test_oracle_bounds_solver():
    rng = np.random.default_rng(29)
    for _ in range(40):
        mu = random_instance(rng, max_atoms=2)
        nu = random_instance(rng, max_atoms=2)
        p = float(rng.choice([1.0, 2.0]))
        params = GwParams(rng.uniform(0.1, 5), rng.uniform(0.1, 5), p)
        sol = gw_distance(mu, nu, params).value
        oracle = gw_brute_force(mu, nu, params, 50)
        assert sol <= oracle + 1e-9
        n_arcs = canonicalize(mu).n_atoms * canonicalize(nu).n_atoms
        delta = min(total_mass(mu), total_mass(nu)) / 50
        assert oracle - sol <= 2 * params.a * n_arcs * delta + 1e-12


def test_oracle_examples_and_guards():
    params = GwParams(1.0, 1.0, 1.0)
    assert gw_brute_force(DiscreteMeasure.dirac(0.0), DiscreteMeasure.dirac(3.0),
                          params, 50) == pytest.approx(2.0, abs=1e-12)
    mu = DiscreteMeasure.from_atoms(1, [([0.0], 1.0), ([1.0], 1.0)])
    assert gw_brute_force(mu, mu, params, 20) == pytest.approx(0.0, abs=1e-12)
    big = DiscreteMeasure(1, np.zeros((4, 1)) + np.arange(4)[:, None], np.ones(4))
    with pytest.raises(ValueError):
        gw_brute_force(big, big, params, 10)  # 8 atoms in total
    with pytest.raises(ValueError):
        gw_brute_force(DiscreteMeasure.dirac(0.0), DiscreteMeasure.dirac(1.0), params, 51)


def test_metric_axioms_random():
    rng = np.random.default_rng(41)
    for _ in range(120):
        dim = int(rng.integers(1, 4))
        p = float(rng.choice([1.0, 2.0]))
        params = GwParams(rng.uniform(0.1, 10), rng.uniform(0.1, 10), p)
        mu, nu, eta = (random_instance(rng, dim) for _ in range(3))
        g_mn = gw_distance(mu, nu, params).value
        g_nm = gw_distance(nu, mu, params).value
        g_ne = gw_distance(nu, eta, params).value
        g_me = gw_distance(mu, eta, params).value
        scale_ref = max(1.0, g_me)
        assert abs(g_mn - g_nm) <= 1e-9 * max(1.0, g_mn)
        assert g_me <= g_mn + g_ne + 1e-9 * scale_ref
        wm, wn = total_mass(mu), total_mass(nu)
        assert params.a * abs(wm - wn) <= g_mn + 1e-9
        assert g_mn <= params.a * (wm + wn) + 1e-9
        g_sum = gw_distance(add(mu, nu), add(nu, eta), params).value
        assert g_sum <= g_mn + g_ne + 1e-9 * max(1.0, g_sum)
        k = float(rng.uniform(0, 3))
        g_k = gw_distance(scale(mu, k), scale(nu, k), params).value
        assert g_k <= max(k ** (1 / p), k) * g_mn + 1e-9 * max(1.0, g_k)


def test_identity_of_indiscernibles():
    rng = np.random.default_rng(43)
    for _ in range(60):
        mu = random_instance(rng)
        nu = random_instance(rng)
        g = gw_distance(mu, nu, GwParams(1.0, 1.0, 1.0)).value
        if g <= 1e-12:
            assert tv_distance(mu, nu) <= 1e-9
        if tv_distance(mu, nu) == 0.0:
            assert g <= 1e-12


def test_truncation_radius_p1():
    rng = np.random.default_rng(47)
    for _ in range(80):
        dim = int(rng.integers(1, 3))
        mu = random_instance(rng, dim)
        nu = random_instance(rng, dim)
        params = GwParams(rng.uniform(0.1, 3), rng.uniform(0.5, 5), 1.0)
        r = gw_distance(mu, nu, params)
        assert r.plan.max_arc_length() <= params.truncation_radius + 1e-9


def test_truncation_radius_p2_logged_not_assumed():
    # for p > 1 the per-arc bound is checked empirically; violations are
    # collected rather than asserted (open question on large atom masses)
    rng = np.random.default_rng(53)
    violations = []
    for _ in range(80):
        mu = random_instance(rng)
        nu = random_instance(rng)
        params = GwParams(rng.uniform(0.1, 3), rng.uniform(0.5, 5), 2.0)
        r = gw_distance(mu, nu, params)
        excess = r.plan.max_arc_length() - params.truncation_radius
        if excess > 1e-9:
            violations.append(excess)
    # report-only: the run must complete and produce consistent witnesses
    assert isinstance(violations, list)


def test_witness_consistency_and_domination():
    rng = np.random.default_rng(59)
    for p in (1.0, 2.0):
        for _ in range(40):
            mu = random_instance(rng, dim=2)
            nu = random_instance(rng, dim=2)
            params = GwParams(rng.uniform(0.2, 4), rng.uniform(0.2, 4), p)
            r = gw_distance(mu, nu, params)
            assert r.value == pytest.approx(r.value_from_parts(params),
                                            abs=1e-9, rel=1e-9)
            assert total_mass(r.kept_source) == pytest.approx(
                total_mass(r.kept_target), abs=1e-9)
            # kept measures are atomwise dominated by the canonical inputs
            mu_c = canonicalize(mu)
            for pos, w in zip(r.kept_source.positions, r.kept_source.weights):
                match = np.flatnonzero(np.all(mu_c.positions == pos, axis=1))
                assert match.size == 1 and w <= mu_c.weights[match[0]] + 1e-9
            r.plan.check_marginals(1e-7)
            assert r.removed_source_mass >= -1e-12
            assert r.removed_target_mass >= -1e-12


def test_value_invariant_under_permutation_and_duplicates():
    rng = np.random.default_rng(61)
    mu = random_instance(rng, max_atoms=5)
    nu = random_instance(rng, max_atoms=5)
    params = GwParams(1.0, 2.0, 1.0)
    base = gw_distance(mu, nu, params).value
    perm = rng.permutation(mu.n_atoms)
    shuffled = DiscreteMeasure(1, mu.positions[perm], mu.weights[perm])
    assert gw_distance(shuffled, nu, params).value == pytest.approx(base, abs=1e-12)
    split = DiscreteMeasure(
        1, np.concatenate([mu.positions, mu.positions]),
        np.concatenate([mu.weights / 2, mu.weights / 2]))
    assert gw_distance(split, nu, params).value == pytest.approx(base, abs=1e-9)


def test_result_serializes_to_json():
    r = gw_distance(DiscreteMeasure.dirac(0.0), DiscreteMeasure.dirac(0.5),
                    GwParams(1.0, 1.0, 1.0))
    blob = json.loads(json.dumps(r.to_json()))
    assert blob["value"] == pytest.approx(0.5)
    assert blob["kept_source"]["atoms"][0]["w"] == pytest.approx(1.0)
    assert blob["plan"] == [[0, 0, 1.0]]


def test_dimension_mismatch_rejected():
    with pytest.raises(ValueError):
        gw_distance(DiscreteMeasure.dirac(0.0), DiscreteMeasure.dirac([0.0, 1.0]),
                    GwParams(1.0, 1.0, 1.0))
