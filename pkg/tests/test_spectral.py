import numpy as np
import pytest

from otto_cavity.errors import ContractViolationError, InvalidArgumentError, NoCrossingError
from otto_cavity.model import ModelParams, build_H0, build_Hs
from otto_cavity.operators import ModeOperators, TruncationSpec
from otto_cavity.spectral import (
    SpectrumScan,
    eig_hermitian,
    find_avoided_crossing,
    locate_resonance,
    scan_spectrum,
    transition_amplitudes,
)

SPEC = TruncationSpec(6, 4, 4)


@pytest.fixture(scope="module")
def reference_scan():
    grid = np.linspace(0.9, 1.4, 101)
    return scan_spectrum(ModelParams(), grid, SPEC, n_levels=10)


def test_eig_diagonal():
    es = eig_hermitian(np.diag([0.0, 1.0, 2.0]))
    np.testing.assert_array_equal(es.energies, [0, 1, 2])
    np.testing.assert_array_equal(np.abs(es.states), np.eye(3))


def test_eig_rejects_non_hermitian():
    with pytest.raises(ContractViolationError):
        eig_hermitian(np.array([[0.0, 1.0], [0.0, 0.0]]))


def test_eig_invariants():
    H = build_Hs(ModelParams(omega_c=1.01), SPEC)
    es = eig_hermitian(H)
    assert np.all(np.diff(es.energies) >= 0)
    resid = np.max(np.abs(H @ es.states - es.states * es.energies))
    assert resid < 1e-9 * np.max(np.abs(H))
    np.testing.assert_allclose(es.states.conj().T @ es.states, np.eye(SPEC.total), atol=1e-10)


def test_eig_bare_spectrum():
    p = ModelParams(omega_c=1.01, g_1=0.0, g_2=0.0)
    es = eig_hermitian(build_Hs(p, SPEC))
    np.testing.assert_allclose(es.energies, np.sort(np.real(np.diag(build_H0(p, SPEC)))), atol=1e-13)


def test_split_pair_near_two_photons():
    es = eig_hermitian(build_Hs(ModelParams(omega_c=1.01), SPEC))
    near = es.energies[np.abs(es.energies - 2.02) < 0.1]
    assert len(near) == 2 and near[1] - near[0] > 0.01


def test_scan_validation():
    with pytest.raises(InvalidArgumentError):
        scan_spectrum(ModelParams(), [], SPEC)
    with pytest.raises(InvalidArgumentError):
        scan_spectrum(ModelParams(), [1.0, 0.9], SPEC)


def test_scan_single_point_bare():
    p = ModelParams(g_1=0.0, g_2=0.0)
    scan = scan_spectrum(p, [1.1], SPEC, n_levels=5)
    bare = np.sort(np.real(np.diag(build_H0(p.with_cavity(1.1), SPEC))))[:5]
    np.testing.assert_allclose(scan.energies[0], bare, atol=1e-13)


def test_scan_ascending(reference_scan):
    assert np.all(np.diff(reference_scan.energies, axis=1) >= 0)


def test_reference_crossings(reference_scan):
    r1 = locate_resonance(reference_scan, 1.0)
    r2 = locate_resonance(reference_scan, 1.3)
    assert abs(r1.omega_eff - 1.01) <= 0.01
    assert abs(r2.omega_eff - 1.31) <= 0.01
    for r in (r1, r2):
        assert r.gap > 0
        assert r.scan_range[0] < r.omega_eff < r.scan_range[1]
        assert r.level_pair[1] == r.level_pair[0] + 1
    # shifted away from the bare resonances
    assert r1.omega_eff != 1.0 and r2.omega_eff != 1.3


def test_crossing_requires_interior_minimum():
    grid = np.linspace(1.1, 1.2, 11)
    scan = scan_spectrum(ModelParams(), grid, SPEC, n_levels=6)
    with pytest.raises(NoCrossingError):
        locate_resonance(scan, 1.0)
    # monotone gap in a synthetic table
    fake = SpectrumScan(np.linspace(0, 1, 5), np.column_stack([np.zeros(5), np.linspace(1, 2, 5)]))
    with pytest.raises(NoCrossingError):
        find_avoided_crossing(fake, (0, 1))


def test_crossing_rejects_non_adjacent(reference_scan):
    with pytest.raises(InvalidArgumentError):
        find_avoided_crossing(reference_scan, (1, 3))


def test_parabolic_refinement_is_subgrid():
    grid = np.linspace(0.9, 1.1, 21)
    gap = np.sqrt(0.01 + (grid - 1.0037) ** 2)
    scan = SpectrumScan(grid, np.column_stack([np.zeros_like(grid), gap]))
    r = find_avoided_crossing(scan, (0, 1))
    assert abs(r.omega_eff - 1.0037) < 1e-3
    assert r.gap == pytest.approx(0.1, rel=1e-2)


def _wall1_gap(g):
    grid = np.linspace(0.95, 1.05, 41)
    scan = scan_spectrum(ModelParams(g_1=g, g_2=g), grid, TruncationSpec(5, 3, 3), n_levels=6)
    return locate_resonance(scan, 1.0)


def test_level_repulsion_grows_with_coupling():
    assert _wall1_gap(0.05).gap > _wall1_gap(0.01).gap > 0


def test_small_coupling_tends_to_bare_resonance():
    r = _wall1_gap(1e-4)
    assert abs(r.omega_eff - 1.0) < 2.5e-3
    assert r.gap < 1e-3


def test_transition_amplitudes():
    ops = ModeOperators.build(SPEC)
    xa = ops.positions()[0]
    es = eig_hermitian(build_Hs(ModelParams(omega_c=1.01), SPEC))
    t = transition_amplitudes(es, xa)
    np.testing.assert_allclose(t, es.states.conj().T @ xa @ es.states, atol=1e-10)
    np.testing.assert_allclose(t, t.conj().T, atol=0)
    assert np.all(np.imag(np.diag(t)) == 0)
    ground = es.states[:, 0]
    assert np.sum(np.abs(t[0]) ** 2) == pytest.approx(np.real(ground.conj() @ xa @ xa @ ground), rel=1e-10)


def test_transition_selection_rule_bare():
    spec = TruncationSpec(4, 2, 2)
    ops = ModeOperators.build(spec)
    p = ModelParams(omega_c=1.1, g_1=0.0, g_2=0.0)
    es = eig_hermitian(build_Hs(p, spec))
    t = transition_amplitudes(es, ops.positions()[0])
    labels = spec.labels()[np.argmax(np.abs(es.states), axis=0)]
    for i, j in zip(*np.nonzero(np.abs(t) > 1e-12)):
        dl, dm, dn = labels[i] - labels[j]
        assert abs(dl) == 1 and dm == 0 and dn == 0


def test_spectrum_csv(tmp_path, reference_scan):
    path = tmp_path / "s.csv"
    reference_scan.to_csv(path, comment="x")
    lines = path.read_text().splitlines()
    assert lines[0] == "# x"
    assert lines[1].split(",")[:2] == ["omega_c", "E_0"]
    assert float(lines[2].split(",")[0]) == 0.9
