import numpy as np
import pytest

from blochfeedback import omega_grid as og
from blochfeedback import rotation_field as rf
from blochfeedback.geometry import E1, E3, dot, rot_about_e1, wedge
from blochfeedback.scenarios import paper_target


def target(n=100):
    g = og.OmegaGrid(0.0, 1.0, n)
    return og.SpinProfile.from_function(g, paper_target)


@pytest.fixture(scope="module")
def mf():
    return target()


def test_sweep_south_pole():
    g = og.OmegaGrid(0.0, 1.0, 20)
    r = rf.build_sweep(og.SpinProfile.constant(g, -E3))
    np.testing.assert_allclose(r.mats @ -E3, np.tile(-E3, (21, 1)), atol=1e-12)


def test_sweep_e1():
    g = og.OmegaGrid(0.0, 1.0, 20)
    r = rf.build_sweep(og.SpinProfile.constant(g, E1))
    np.testing.assert_allclose(r.mats[:, 2], np.tile(-E1, (21, 1)), atol=0)
    np.testing.assert_allclose(r.mats @ E1, np.tile(-E3, (21, 1)), atol=1e-12)


def test_sweep_paper_target(mf):
    r = rf.build_sweep(mf)
    rep = rf.validate(r, mf)
    assert rep["flattening_residual"] <= 1e-12
    assert rep["orthogonality_defect"] <= 1e-12
    assert rep["det_defect"] <= 1e-12
    r1, r2, r3 = r.mats[:, 0], r.mats[:, 1], r.mats[:, 2]
    np.testing.assert_allclose(dot(r1, wedge(r2, r3)), 1.0, atol=1e-12)
    # continuity against a finite-difference bound on M_f'
    jumps = np.linalg.norm(np.diff(r.mats, axis=0), ord=2, axis=(1, 2))
    bound = 5 * mf.grid.step * np.linalg.norm(og.derivative(mf), axis=1).max()
    assert jumps.max() <= bound


def test_sweep_parallel_seed_raises():
    g = og.OmegaGrid(0.0, 1.0, 10)
    with pytest.raises(rf.SweepError, match="node 1"):
        rf.build_sweep(og.SpinProfile.constant(g, -E3), seed=E3)


def test_sweep_seed_choice():
    np.testing.assert_array_equal(rf.seed_axis(np.array([0.1, -0.9, 0.4])), E1)
    np.testing.assert_array_equal(rf.seed_axis(np.array([-0.5, 0.0, -0.8])), [0.0, 1.0, 0.0])


def test_ode_constant_target_is_constant_field():
    g = og.OmegaGrid(0.0, 1.0, 30)
    m = np.array([0.0, 0.6, -0.8])
    r = rf.build_ode(og.SpinProfile.constant(g, m))
    assert all(np.array_equal(r.mats[0], x) for x in r.mats)


def test_ode_paper_target(mf):
    r = rf.build_ode(mf)
    rep = rf.validate(r, mf)
    assert rep["flattening_residual"] <= 1e-6
    assert rep["orthogonality_defect"] <= 1e-10
    assert rep["det_defect"] <= 1e-10
    # same initial frame as the sweep
    np.testing.assert_array_equal(r.mats[0], rf.build_sweep(mf).mats[0])


def test_ode_and_sweep_act_alike(mf):
    for r in (rf.build_ode(mf), rf.build_sweep(mf)):
        flat = r.apply(mf).values
        np.testing.assert_allclose(flat, np.tile(-E3, (101, 1)), atol=1e-6)


def test_ode_residual_converges_second_order():
    res = [rf.validate(rf.build_ode(target(n)), target(n))["flattening_residual"] for n in (50, 100, 200)]
    assert 3.0 < res[0] / res[1] < 5.0
    assert 3.0 < res[1] / res[2] < 5.0


def test_derivative_field_constant():
    g = og.OmegaGrid(0.0, 1.0, 10)
    r = rf.RotationField.constant(g, rot_about_e1(0.3))
    assert np.array_equal(rf.derivative_field(r), np.zeros((11, 3, 3)))


def test_derivative_field_norm_matches_target_derivative(mf):
    # |R'| = |A| = |M_f'| in the continuum
    d = rf.derivative_field(rf.build_ode(mf))
    rn = np.linalg.norm(d, ord=2, axis=(1, 2))
    mn = np.linalg.norm(og.derivative(mf), axis=1)
    assert np.all(np.abs(rn[1:-1] / mn[1:-1] - 1.0) <= 0.1)


def test_derivative_field_refinement():
    d = {n: rf.derivative_field(rf.build_ode(target(n))) for n in (50, 100, 200)}
    e_coarse = np.abs(d[50] - d[100][::2]).max()
    e_fine = np.abs(d[100] - d[200][::2]).max()
    assert e_fine < 1e-3
    assert 3.0 < e_coarse / e_fine < 5.0


def test_validate_identity_and_defect():
    g = og.OmegaGrid(0.0, 1.0, 10)
    m = og.SpinProfile.constant(g, -E3)
    rep = rf.validate(rf.RotationField.constant(g, np.eye(3)), m)
    assert rep["flattening_residual"] == 0.0
    assert rep["orthogonality_defect"] == 0.0
    assert rep["det_defect"] == 0.0
    mats = np.tile(np.eye(3), (11, 1, 1))
    mats[4, 0, 0] += 0.5e-3
    rep = rf.validate(rf.RotationField(g, mats), m)
    assert rep["orthogonality_defect"] == pytest.approx(1e-3, rel=1e-3)


def test_h1_bound_constant(mf):
    for r in (rf.build_sweep(mf), rf.build_ode(mf)):
        assert rf.validate(r, mf)["h1_ratio"] <= 10.0


def test_field_csv_round_trip(tmp_path, mf):
    r = rf.build_sweep(mf)
    rf.write_field(tmp_path / "r.csv", r)
    header = (tmp_path / "r.csv").read_text().splitlines()[0]
    assert header == "omega,r11,r12,r13,r21,r22,r23,r31,r32,r33"
    back = rf.read_field(tmp_path / "r.csv")
    assert np.array_equal(back.mats, r.mats)


def test_field_csv_rejects_non_rotation(tmp_path):
    g = og.OmegaGrid(0.0, 1.0, 4)
    mats = np.tile(np.eye(3), (5, 1, 1))
    mats[2] *= 1.01
    rf.write_field(tmp_path / "r.csv", rf.RotationField(g, mats))
    with pytest.raises(ValueError, match="node 3"):
        rf.read_field(tmp_path / "r.csv")
