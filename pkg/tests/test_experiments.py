import numpy as np
import pytest

from junctionsim.errors import CapacityError, ImplementationDefectError, ValidationError
from junctionsim.experiments import (SweepResult, ac_run, cluster_check, dc_sweep,
                                     default_theta_grid, energy_sweep, entangled_pair_state,
                                     fit_trig, gauge_check, oracle_check, pair_ops,
                                     spec_with_gap, spectrum, wick_oracle_equivalence)
from junctionsim.fock import expectation, number_op
from junctionsim.meanfield import solve_region
from junctionsim.model import UP, JunctionSpec, random_spec

ENGINES = ["meanfield", "exact"]


def test_default_grid():
    g = default_theta_grid()
    assert g.size == 17 and g[0] == 0 and g[-1] < 2 * np.pi
    assert np.all(np.diff(g) > 0)


def test_fit_trig_recovers_coefficients():
    x = np.linspace(0, 6, 40)
    y = 0.3 - 0.2 * np.cos(x) + 1.5 * np.sin(x)
    coef, res = fit_trig(x, y)
    assert res < 1e-13
    assert abs(coef["const"] - 0.3) < 1e-13 and abs(coef["sin"] - 1.5) < 1e-13


def test_sweep_result_invariants():
    with pytest.raises(ValidationError):
        SweepResult("dc", [0, 1, 1], [0, 0, 0], {}, 0.0)
    with pytest.raises(ValidationError):
        SweepResult("dc", [0, 1], [0, np.nan], {}, 0.0)


@pytest.mark.parametrize("engine", ENGINES)
def test_two_site_dc_law(two_site, engine):
    spec, sols = two_site
    res = dc_sweep(spec, engine=engine, solutions=sols)
    assert res.passed
    np.testing.assert_allclose(res.values, -0.1 * np.sin(res.grid), atol=1e-12)
    assert abs(res.coefficients["sin"] + 0.1) < 1e-12
    assert abs(res.recompute_residual() - res.residual) < 1e-15
    at = dc_sweep(spec, [0.0, np.pi / 2], engine, sols).values
    assert at[0] == pytest.approx(0, abs=1e-15) and at[1] == pytest.approx(-0.1, abs=1e-12)


@pytest.mark.parametrize("engine", ENGINES)
def test_dc_vanishes_without_junction(engine):
    spec = JunctionSpec(2, 1, t_hop=1, g11=4, g22=3, g12=0.0)
    res = dc_sweep(spec, engine=engine)
    assert np.max(np.abs(res.values)) < 1e-15


def test_dc_odd_and_periodic():
    spec = JunctionSpec(3, 2, t_hop=1, mu=-0.3, g11=4, g22=3, g12=0.4)
    sols = solve_region(spec, 1), solve_region(spec, 2)
    grid = np.linspace(-3, 3, 13)
    J = dc_sweep(spec, grid, solutions=sols).values
    np.testing.assert_allclose(J, -J[::-1], atol=1e-10)
    J2 = dc_sweep(spec, grid + 2 * np.pi, solutions=sols).values
    np.testing.assert_allclose(J2, J, atol=1e-10)
    E = energy_sweep(spec, grid, solutions=sols).values
    E2 = energy_sweep(spec, grid + 2 * np.pi, solutions=sols).values
    np.testing.assert_allclose(E2, E, atol=1e-10)


def test_sign_of_g12_flips_current(two_site):
    spec, sols = two_site
    neg = JunctionSpec(1, 1, t_hop=0, g11=1, g22=1, g12=-0.1)
    np.testing.assert_allclose(dc_sweep(neg, solutions=sols).values,
                               -dc_sweep(spec, solutions=sols).values, atol=1e-15)


@pytest.mark.parametrize("engine", ENGINES)
def test_two_site_energy(two_site, engine):
    spec, sols = two_site
    res = energy_sweep(spec, engine=engine, solutions=sols)
    assert res.passed
    np.testing.assert_allclose(res.values, -0.05 * np.cos(res.grid), atol=1e-12)
    assert res.coefficients["cos"] < 0
    assert abs(energy_sweep(spec, [np.pi / 2], engine, sols).values[0]) < 1e-15


def test_energy_current_relation(two_site):
    spec, sols = two_site
    J = dc_sweep(spec, solutions=sols)
    E = energy_sweep(spec, solutions=sols)
    ratio = J.coefficients["sin"] / E.coefficients["cos"]
    assert abs(ratio - 2 * spec.charge_unit) < 1e-8
    # pointwise with a central difference of the energy: J = -2|e| d<H12>/dtheta
    h = 1e-4
    for th in (0.3, 1.7, 4.0):
        Ep, Em = energy_sweep(spec, [th - h, th + h], solutions=sols).values
        dE = (Em - Ep) / (2 * h)
        Jth = dc_sweep(spec, [th], solutions=sols).values[0]
        assert abs(Jth + 2 * spec.charge_unit * dE) < 1e-8


def test_energy_sign_over_random_specs():
    rng = np.random.default_rng(3)
    for _ in range(10):
        spec = spec_with_gap(random_spec(rng, g12=float(rng.uniform(0.05, 1.0))),
                             float(rng.uniform(0.2, 2.0)))
        res = energy_sweep(spec)
        assert res.passed
        assert res.coefficients["cos"] < 0


def test_exact_engine_capacity():
    spec = JunctionSpec(7, 6, g11=1, g22=1, g12=0.1)
    assert dc_sweep(spec, [0.5]).values.shape == (1,)
    with pytest.raises(CapacityError):
        dc_sweep(spec, [0.5], engine="exact")


def test_spectrum_peak():
    t = np.linspace(0, 100, 1000)
    omega, amp, bw = spectrum(t, np.sin(0.7 * t) + 3)
    assert abs(omega[np.argmax(amp)] - 0.7) <= bw


@pytest.fixture
def weak_two_site():
    return JunctionSpec(1, 1, t_hop=0, g11=1, g22=1, g12=0.01)


def test_ac_zero_voltage_symmetric_state_is_static(weak_two_site):
    res = ac_run(weak_two_site, 0.0, theta0=0.0, T=20.0, n_samples=64)
    assert res.extra["j_spread"] < 1e-10
    with pytest.raises(ValidationError):
        ac_run(weak_two_site, 0.0)


def test_ac_peak_and_linearity(weak_two_site):
    peaks = {}
    for V in (0.1, 0.2, 0.4):
        res = ac_run(weak_two_site, V, theta0=0.5, n_samples=512)
        assert res.passed, res.violations
        assert abs(res.extra["peak_omega"] - 2 * V) <= res.extra["binwidth"]
        assert res.extra["ehrenfest_max"] < 100 * 1e-8
        peaks[V] = res.extra
    assert abs(peaks[0.4]["peak_omega"] - 2 * peaks[0.2]["peak_omega"]) \
        <= 2 * peaks[0.4]["binwidth"]


def test_ac_period_coverage(weak_two_site):
    with pytest.raises(ValidationError):
        ac_run(weak_two_site, 0.25, T=10.0)


def test_ac_charge_series(weak_two_site):
    res = ac_run(weak_two_site, 0.25, theta0=0.5, n_samples=256)
    q = res.extra["charge_region1"]
    assert q.shape == res.values.shape
    # the charge derivative is the current (coarse check on the output grid)
    dq = np.gradient(q, res.grid)[1:-1]    # central differences only
    assert np.max(np.abs(dq - res.values[1:-1])) < 2e-2 * np.max(np.abs(res.values))


@pytest.mark.parametrize("phi", [0.0, np.pi / 4, np.pi / 2, np.pi])
def test_gauge_shift(two_site, phi):
    spec, sols = two_site
    assert gauge_check(spec, phi, solutions=sols) < 1e-10


def test_gauge_quarter_turn_matches_closed_form(two_site):
    spec, sols = two_site
    assert gauge_check(spec, 0.0, [0.7], sols) == 0
    J = dc_sweep(spec, [np.pi / 2], "exact", sols).values[0]
    assert abs(J + 0.1) < 1e-12
    assert gauge_check(spec, np.pi / 4, [0.0], sols) < 1e-10


def test_gauge_shift_larger_system():
    spec = JunctionSpec(2, 2, t_hop=1, mu=-0.2, g11=4, g22=3, g12=0.3)
    for phi in (np.pi / 4, np.pi / 2, np.pi):
        assert gauge_check(spec, phi, np.linspace(0, 6, 5)) < 1e-10


def test_cluster_product_state(two_site):
    spec, sols = two_site
    rep = cluster_check(spec, solutions=sols)
    assert len(rep.monomials) >= 50
    assert rep.max_defect < 1e-10
    assert rep.surviving_patterns == [(1, 1, 2, 2), (2, 2, 1, 1)]
    assert abs(rep.pattern_contributions[(1, 2, 1, 2)]) < 1e-10
    assert rep.max_forbidden_pattern < 1e-10


def test_cluster_number_operators():
    spec = JunctionSpec(2, 2, t_hop=1, mu=-0.2, g11=4, g22=3, g12=0.3)
    n1 = ((spec.mode(0, UP), True), (spec.mode(0, UP), False))
    n2 = ((spec.mode(2, UP), True), (spec.mode(2, UP), False))
    rep = cluster_check(spec, monomials=[(n1, n2)])
    assert rep.max_defect < 1e-10


def test_cluster_detects_entanglement():
    spec = JunctionSpec(1, 1, t_hop=0, g12=0.1)
    basis = spec.basis()
    state = entangled_pair_state(spec, basis)
    P1d, _ = pair_ops(spec, basis, 1)
    _, P2 = pair_ops(spec, basis, 2)
    ab = expectation(P1d @ P2, state)
    a, b = expectation(P1d, state), expectation(P2, state)
    assert abs(abs(ab - a * b) - 0.5) < 1e-12
    words = (((0, True), (1, True)), ((3, False), (2, False)))
    rep = cluster_check(spec, monomials=[words], state=state)
    assert abs(rep.max_defect - 0.5) < 1e-12
    assert abs(expectation(number_op(basis), state) - 2) < 1e-12


def test_cross_hop_contributes_nothing_in_product_state():
    spec = JunctionSpec(2, 2, t_hop=1, mu=-0.2, g11=4, g22=3, g12=0.0, cross_hop=0.5)
    assert np.max(np.abs(dc_sweep(spec, engine="exact").values)) < 1e-12


def test_oracle_examples(two_site):
    spec, sols = two_site
    assert oracle_check(spec, solutions=sols) < 1e-10
    assert oracle_check(JunctionSpec(1, 2, g11=2, g22=2, g12=0.0)) == 0


def test_oracle_seeded_twelve_modes():
    rng = np.random.default_rng(12)
    for _ in range(3):
        spec = JunctionSpec(3, 3, t_hop=float(rng.uniform(0.5, 1.5)),
                            mu=float(rng.uniform(-1, 1)), g11=float(rng.uniform(2, 6)),
                            g22=float(rng.uniform(2, 6)), g12=float(rng.uniform(-1, 1)),
                            boundary=str(rng.choice(["open", "periodic"])))
        assert oracle_check(spec, np.linspace(0, 6, 5)) < 1e-10


def test_oracle_raises_on_disagreement(two_site):
    spec, (s1, s2) = two_site
    with pytest.raises(ImplementationDefectError):
        oracle_check(spec, solutions=(s1, s2), threshold=-1.0)


def test_wick_oracle_small_family():
    spec = JunctionSpec(1, 2, t_hop=1, mu=-0.1, g11=3, g22=3)
    out = wick_oracle_equivalence(spec, max_len=4)
    assert out["max_diff"] < 1e-10
    assert out["n_nonzero"] > 0


def test_spec_with_gap():
    spec = spec_with_gap(JunctionSpec(8, 6, t_hop=1, mu=-0.5, boundary="periodic"), 0.7)
    assert abs(solve_region(spec, 1).delta - 0.7) < 1e-9
    assert abs(solve_region(spec, 2).delta - 0.7) < 1e-9
    with pytest.raises(ValidationError):
        spec_with_gap(spec, 0.0)
