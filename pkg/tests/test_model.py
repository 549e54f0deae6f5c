import numpy as np
import pytest

from junctionsim.errors import ModelInconsistencyError, StructuralError, ValidationError
from junctionsim.fock import (SparseOperator, StateVector, build_basis, commutator,
                              expectation, ladder_op, word_operator)
from junctionsim.model import (DOWN, UP, HamiltonianSplit, JunctionSpec, build_hamiltonian,
                               charge_op, current_op, gauge_rotation, random_spec,
                               verify_conservation)


def _pair_ops(spec, basis, site):
    create = ((spec.mode(site, UP), True), (spec.mode(site, DOWN), True))
    annihilate = ((spec.mode(site, DOWN), False), (spec.mode(site, UP), False))
    return word_operator(basis, create), word_operator(basis, annihilate)


def test_spec_validation():
    with pytest.raises(ValidationError, match="L1"):
        JunctionSpec(0, 1)
    with pytest.raises(ValidationError):
        JunctionSpec(1, 1, g11=-1)
    with pytest.raises(ValidationError):
        JunctionSpec(1, 1, boundary="twisted")
    spec = JunctionSpec(2, 3)
    assert spec.n_modes == 10 and spec.volume_norm == 5
    assert spec.modes(1) == [0, 1, 2, 3]
    assert spec.region_of_mode(4) == 2


def test_g12_zero_gives_zero_junction():
    spec = JunctionSpec(2, 1, g11=0.3, g22=0.7)
    split = build_hamiltonian(spec)
    assert split.H12.max_abs() == 0
    J = current_op(split, charge_op(spec, split.H_total.basis, 1))
    assert J.max_abs() == 0


def test_two_site_hamiltonian():
    # pair-transfer enters with its spin-summed weight 2 g12 / V
    spec = JunctionSpec(1, 1, t_hop=0, mu=0, g12=1.0, volume_norm=2.0)
    split = build_hamiltonian(spec)
    H = split.H_total.toarray()
    assert H.shape == (16, 16)
    off = H - np.diag(np.diag(H))
    nz = off[np.abs(off) > 0]
    assert nz.size == 2
    np.testing.assert_allclose(nz, [-1.0, -1.0])
    b = split.H_total.basis
    P1d, P1 = _pair_ops(spec, b, 0)
    P2d, P2 = _pair_ops(spec, b, 1)
    assert (split.H_total - (P1d @ P2 + P2d @ P1).scale(-1.0)).max_abs() < 1e-12


def test_split_consistency_random():
    rng = np.random.default_rng(11)
    for _ in range(10):
        spec = random_spec(rng, cross_hop=float(rng.normal()))
        split = build_hamiltonian(spec)
        assert split.split_defect() < 1e-12
        assert split.H_total.hermiticity_defect() < 1e-12


def test_basis_mismatch():
    with pytest.raises(StructuralError):
        build_hamiltonian(JunctionSpec(1, 1), build_basis(6))


def test_charge_examples():
    spec = JunctionSpec(1, 2, charge_unit=1.0)
    b = spec.basis()
    Q = charge_op(spec, b, "both")
    assert expectation(Q, StateVector.vacuum(b)) == 0
    full = StateVector.basis_state(b, range(spec.n_modes))
    assert expectation(Q, full) == -2 * spec.n_sites


def test_charge_generates_phase():
    spec = JunctionSpec(1, 1, charge_unit=1.7)
    b = spec.basis()
    Q1 = charge_op(spec, b, 1)
    c = ladder_op(b, spec.mode(0, UP), "creation")
    a = ladder_op(b, spec.mode(0, UP), "annihilation")
    # [iQ, a] = i|e| a and [iQ, a+] = -i|e| a+ since Q = -|e| N
    assert (commutator(Q1.scale(1j), a) - a.scale(1j * 1.7)).max_abs() < 1e-12
    assert (commutator(Q1.scale(1j), c) - c.scale(-1j * 1.7)).max_abs() < 1e-12
    assert (commutator(Q1, c) + c.scale(1.7)).max_abs() < 1e-12
    c2 = ladder_op(b, spec.mode(1, UP), "creation")
    assert commutator(Q1, c2).max_abs() == 0


def test_two_site_current_operator():
    spec = JunctionSpec(1, 1, t_hop=0, g12=0.1, charge_unit=1.3)
    split = build_hamiltonian(spec)
    b = split.H_total.basis
    J = current_op(split, charge_op(spec, b, 1))
    P1d, P1 = _pair_ops(spec, b, 0)
    P2d, P2 = _pair_ops(spec, b, 1)
    expected = (P1d @ P2 - P2d @ P1).scale(-1j * 1.3 * 0.1 * 4 / spec.volume_norm)
    assert (J - expected).max_abs() < 1e-12
    assert J.hermiticity_defect() < 1e-12


def test_current_residual_guard():
    spec = JunctionSpec(1, 1, t_hop=0, g12=0.1)
    split = build_hamiltonian(spec)
    b = split.H_total.basis
    # a regional term that moves charge out of region 1 breaks the reduction
    leak = word_operator(b, ((2, True), (0, False)))
    bad_H1 = split.H1 + leak + leak.adjoint()
    bad = HamiltonianSplit(split.H_total + leak + leak.adjoint(), bad_H1, split.H2,
                           split.H12, split.terms)
    with pytest.raises(ModelInconsistencyError):
        current_op(bad, charge_op(spec, b, 1))


def test_conservation_seeded_family():
    rng = np.random.default_rng(2024)
    for _ in range(100):
        spec = random_spec(rng)
        assert spec.n_modes <= 12
        b = spec.basis()
        split = build_hamiltonian(spec, b)
        res = verify_conservation(split, spec, b)
        assert max(res["total"], res["region1"], res["region2"], res["H12_total"]) < 1e-12
        _, residual = current_op(split, charge_op(spec, b, 1), return_residual=True)
        assert residual < 1e-12


def test_decoupled_regions_conserve_regional_charge():
    spec = JunctionSpec(2, 2, g11=1, g22=0.5, g12=0)
    b = spec.basis()
    res = verify_conservation(build_hamiltonian(spec, b), spec, b)
    assert res["total_vs_region1"] < 1e-12


def test_cross_hop_breaks_nothing_globally():
    spec = JunctionSpec(2, 1, g11=1, g12=0.2, cross_hop=0.4)
    b = spec.basis()
    split = build_hamiltonian(spec, b)
    assert verify_conservation(split, spec, b)["total"] < 1e-12
    assert verify_conservation(split, spec, b)["total_vs_region1"] > 0.1


def test_gauge_rotation_is_unitary_and_covariant():
    spec = JunctionSpec(1, 2, t_hop=0.5, g11=1, g22=1, g12=0.3)
    b = spec.basis()
    U = gauge_rotation(spec, b, 0.7, 1)
    eye = SparseOperator.identity(b)
    assert (U.adjoint() @ U - eye).max_abs() < 1e-12
    split = build_hamiltonian(spec, b)
    # regional charge conservation: H1 and H2 are invariant under the rotation
    assert (U.adjoint() @ split.H1 @ U - split.H1).max_abs() < 1e-12
    assert (U.adjoint() @ split.H2 @ U - split.H2).max_abs() < 1e-12
