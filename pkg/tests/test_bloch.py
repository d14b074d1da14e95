import math

import numpy as np
import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st

from nhqm.bloch import (band_edges, band_solve_complex, band_solve_real, bifurcated_K,
                        bloch_function, cell_amplitudes, complex_band_from_branch,
                        dispersion_lhs, find_branch_points, pt_band_function, pt_identity_check,
                        square_lattice_dispersion, stationary_points)
from nhqm.core import PhysicalParams, PiecewisePotential, build_pt_unit_cell, single_barrier
from nhqm.errors import IdentityViolationError
from nhqm.scattering import max_transmission
from oracles import free_bands

CELL = build_pt_unit_cell(5, 1)


@pytest.fixture(scope="module")
def branches():
    return find_branch_points(CELL, PhysicalParams(1.0), (0.01, 110))


def test_empty_cell_lhs(m1):
    free = PiecewisePotential.from_pairs([(1.3, 0), (0.7, 0)])
    for E in (0.4, 3.3 + 0.2j, 17.0):
        k = np.sqrt(2 * complex(E))
        assert dispersion_lhs(free, E, m1).lhs == pytest.approx(np.cos(k * 2.0), abs=1e-13)


def test_pt_lhs_is_real(m1):
    E = np.linspace(0.05, 120, 3000)
    T, Rr, Rl, k = cell_amplitudes(CELL, E, m1)
    lhs = ((T * T - Rr * Rl) * np.exp(2j * k) + np.exp(-2j * k)) / (2 * T)
    assert np.max(np.abs(lhs.imag)) < 1e-10
    assert np.allclose(lhs.real, pt_band_function(CELL, E, m1), atol=1e-10)


def test_pt_identity(m1):
    c = pt_identity_check(CELL, 7.0, m1)
    T, Rr, _, _ = cell_amplitudes(CELL, 7.0, m1)
    assert c.B == pytest.approx(np.conj(Rr)) and c.C == pytest.approx(np.conj(T))
    assert abs(c.B * T + c.C * Rr) < 1e-10
    free = pt_identity_check(PiecewisePotential.from_pairs([(2, 0)]), 3.0, m1)
    assert free.C == pytest.approx(1)
    with pytest.raises(IdentityViolationError):
        pt_identity_check(single_barrier(5, 1), 7.0, m1)


@settings(max_examples=200, deadline=None)
@given(st.floats(0.1, 60), st.floats(0, 20), st.floats(0.2, 3), st.floats(-10, 10))
def test_pt_identity_random(E, V0, a, U0):
    assume(abs(complex(E - U0, V0)) > 1e-3)  # zero interior momentum is degenerate
    pt_identity_check(build_pt_unit_cell(V0, a, U0), E, PhysicalParams(1.0), tol=1e-10)


def test_eq34_matches_general_formula_1000(m1):
    rng = np.random.default_rng(11)
    E = rng.uniform(0.1, 100, 1000) + 1j * rng.uniform(-5, 5, 1000)
    T, Rr, Rl, k = cell_amplitudes(CELL, E, m1)
    general = ((T * T - Rr * Rl) * np.exp(2j * k) + np.exp(-2j * k)) / (2 * T)
    closed = square_lattice_dispersion(E, 5, 1, m1)
    assert np.max(np.abs(general - closed) / np.maximum(1, np.abs(closed))) < 1e-10


def test_eq34_examples(m1):
    assert dispersion_lhs(CELL, 3 + 0.5j, m1).lhs == pytest.approx(
        square_lattice_dispersion(3 + 0.5j, 5, 1, m1), abs=1e-10)
    k = math.sqrt(2 * 4.0)
    assert square_lattice_dispersion(4.0, 0, 1, m1) == pytest.approx(math.cos(2 * k))
    # just above a branch point the lattice value is inside [-1, 1]
    assert abs(square_lattice_dispersion(10.39, 5, 1, m1)) <= 1


def test_branch_points(branches):
    assert len(branches) == 4
    for b in branches:
        assert abs(b.n_half - (round(b.n_half - 0.5) + 0.5)) < 0.02
        assert math.cos(b.K_star * 2) == pytest.approx(
            pt_band_function(CELL, np.array([b.energy]), PhysicalParams(1.0))[0], abs=1e-9)
    assert [round(b.energy, 1) for b in branches[1:]] == [30.7, 60.4, 99.9]
    assert branches[0].energy == pytest.approx(10.8876, abs=1e-3)


def test_no_branch_points_when_hermitian(m1):
    assert find_branch_points(build_pt_unit_cell(0, 1), m1, (0.01, 110)) == []
    edges = band_edges(build_pt_unit_cell(0, 1), m1, (0.01, 110))
    assert all(abs(abs(e.F) - 1) < 1e-6 for e in edges)


def test_empty_lattice_bands(m1):
    cell = build_pt_unit_cell(0, 1)
    K = np.linspace(0.05, math.pi / 2 - 0.05, 7)
    pts = band_solve_real(cell, m1, K, (0.01, 40))
    for Kv in K:
        got = sorted(p.energy.real for p in pts if p.K == Kv)
        want = [e for e in free_bands(Kv, 2.0, 1.0) if 0.01 < e < 40]
        assert got == pytest.approx(want, abs=1e-8)


def test_bifurcation_near_zone_edge(m1, branches):
    b = branches[0]
    K = np.array([b.K_star - 0.05, b.K_star + 0.05])
    pts = band_solve_real(CELL, m1, K, (0.01, 20))
    below = sorted(p.band_index for p in pts if p.K == K[0])
    above = sorted(p.band_index for p in pts if p.K == K[1])
    assert below[:2] == [1, 2]
    assert 1 not in above and 2 not in above


def test_first_band_complete_below_branch(m1, branches):
    K = np.linspace(0, branches[0].K_star - 1e-3, 30)
    pts = band_solve_real(CELL, m1, K, (0.01, branches[0].energy))
    assert {p.K for p in pts if p.band_index == 1} == set(K)


def test_band_residuals(m1):
    K = np.linspace(0, math.pi / 2, 9)
    for p in band_solve_real(CELL, m1, K, (0.01, 50)):
        lhs = dispersion_lhs(CELL, p.energy, m1).lhs
        assert abs(lhs - math.cos(2 * p.K)) < 1e-9


def test_complex_solve_real_band(m1):
    p_real = [p for p in band_solve_real(CELL, m1, [0.3], (0.01, 8)) if p.band_index == 1][0]
    p = band_solve_complex(CELL, m1, 0.3, p_real.energy + 0.05j)
    assert abs(p.energy.imag) < 1e-10
    assert p.energy.real == pytest.approx(p_real.energy.real, abs=1e-8)


def test_complex_continuation(m1, branches):
    b = branches[0]
    Ks = bifurcated_K(CELL, m1, b, np.linspace(0, math.pi / 2, 41))
    assert Ks[0] > b.K_star
    pts = complex_band_from_branch(CELL, m1, b, Ks)
    upper = [p for p in pts if p.energy.imag > 0]
    lower = [p for p in pts if p.energy.imag < 0]
    im = [p.energy.imag for p in upper]
    assert all(y > x for x, y in zip(im, im[1:]))
    assert im[0] < 0.3 and im[-1] > 1.0
    for u, l in zip(upper, lower):
        assert abs(l.energy - u.energy.conjugate()) < 1e-9
        assert abs(dispersion_lhs(CELL, u.energy, m1).lhs - math.cos(2 * u.K)) < 1e-9
    # seeding from the conjugate finds the partner
    u = upper[3]
    p = band_solve_complex(CELL, m1, u.K, u.energy.conjugate() + 1e-3)
    assert abs(p.energy - u.energy.conjugate()) < 1e-9


def test_no_bifurcation_guarantee(m1):
    # U0 = 50 with small gain/loss: max|T| <= 1 on the low window
    cell = build_pt_unit_cell(1e-6, 1, 50)
    window = (0.5, 40)
    assert max_transmission(cell, m1, *window, 2000)[0] <= 1
    assert all(abs(s.F) >= 1 - 1e-9 for s in stationary_points(cell, m1, window))
    K = np.linspace(0, math.pi / 2, 11)
    pts = band_solve_real(cell, m1, K, window)
    for band in {p.band_index for p in pts}:
        Ks = {p.K for p in pts if p.band_index == band}
        full = any(p.band_index == band and 0.6 < p.energy.real < 39.9 for p in pts)
        if full and band > 1:
            assert Ks == set(K)


def test_empty_lattice_limit(m1):
    K = 0.4
    errs = []
    for V0 in (0.1, 0.05, 0.025):
        cell = build_pt_unit_cell(V0, 1)
        e = min(p.energy.real for p in band_solve_real(cell, m1, [K], (0.01, 5)))
        errs.append(abs(e - free_bands(K, 2.0, 1.0)[0]))
    assert errs[1] / errs[0] == pytest.approx(0.25, abs=0.03)
    assert errs[2] / errs[1] == pytest.approx(0.25, abs=0.03)


def test_bloch_function_vectorised(m1):
    E = np.linspace(1, 30, 5)
    assert np.allclose(bloch_function(CELL, E, m1), pt_band_function(CELL, E, m1), atol=1e-10)
