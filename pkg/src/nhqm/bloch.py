"""Bloch bands of periodic complex potentials built from one unit cell.

The dispersion relation is written through the cell's scattering amplitudes,

    ((T^2 - Rr Rl) exp(ikd) + exp(-ikd)) / (2T) = cos(K d),

which is analytic in E and is used for everything off the real axis.  For a
PT-symmetric cell at real E it collapses to F(E) = cos(kd + theta) / |T| with
theta = arg T; stationary points of F with |F| <= 1 are branch points where
two real bands merge into a complex-conjugate pair.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq, minimize_scalar

from .core import PhysicalParams, PiecewisePotential, momentum_in_region
from .errors import IdentityViolationError, NonConvergenceError, TVanishingError
from .scattering import _amplitudes_from_matrix, transfer_matrix

T_FLOOR = 1e-13
BRANCH_TOL = 1e-9


@dataclass(frozen=True)
class DispersionSample:
    energy: complex
    lhs: complex
    k_exterior: complex


@dataclass(frozen=True)
class BandPoint:
    K: float
    energy: complex
    band_index: int

    def conjugate(self) -> BandPoint:
        return BandPoint(self.K, self.energy.conjugate(), self.band_index)


@dataclass(frozen=True)
class BranchPoint:
    energy: float
    K_star: float
    absT: float
    theta: float
    n_half: float


@dataclass(frozen=True)
class StationaryPoint:
    energy: float
    F: float
    is_branch_point: bool


@dataclass(frozen=True)
class PtConjugationCoefficients:
    B: complex
    C: complex


def cell_amplitudes(cell: PiecewisePotential, E, params: PhysicalParams):
    """(T, Rr, Rl, k) with reflections referred to the cell centre."""
    M = transfer_matrix(cell, E, params)
    k = momentum_in_region(E, 0.0, params)
    half = cell.width / 2
    T, Rr, Rl, _ = _amplitudes_from_matrix(M, k, -half, half)
    return T, Rr, Rl, k


def _lhs(cell, E, params):
    T, Rr, Rl, k = cell_amplitudes(cell, E, params)
    if np.any(np.abs(T) < T_FLOOR):
        raise TVanishingError(f"|T| < {T_FLOOR:g} near E = {E}")
    d = cell.width
    return ((T * T - Rr * Rl) * np.exp(1j * k * d) + np.exp(-1j * k * d)) / (2 * T), k


def dispersion_lhs(cell: PiecewisePotential, E, params: PhysicalParams) -> DispersionSample:
    """Left-hand side of the Bloch condition at (possibly complex) E."""
    if not cell.width > 0:
        raise ValueError("cell width must be positive")
    lhs, k = _lhs(cell, E, params)
    return DispersionSample(complex(E), complex(lhs), complex(k))


def bloch_function(cell: PiecewisePotential, E, params: PhysicalParams):
    """Real part of the dispersion LHS on real energies (vectorised)."""
    lhs, _ = _lhs(cell, np.asarray(E, dtype=float), params)
    return lhs.real


def pt_band_function(cell: PiecewisePotential, E, params: PhysicalParams):
    """F(E) = cos(kd + theta) / |T| on real energies (vectorised)."""
    T, _, _, k = cell_amplitudes(cell, np.asarray(E, dtype=float), params)
    return np.cos(k.real * cell.width + np.angle(T)) / np.abs(T)


def pt_identity_check(cell: PiecewisePotential, E: float, params: PhysicalParams,
                      tol: float = 1e-10) -> PtConjugationCoefficients:
    """Verify T* = T / (T^2 - Rr Rl) at real E and return B = Rr*, C = T*."""
    T, Rr, Rl, _ = cell_amplitudes(cell, E, params)
    T, Rr, Rl = complex(T), complex(Rr), complex(Rl)
    resid = abs(T.conjugate() - T / (T * T - Rr * Rl))
    if resid > tol * max(1.0, abs(T)):
        raise IdentityViolationError(f"T* - T/(T^2 - Rr Rl) = {resid:.3e} at E = {E}")
    return PtConjugationCoefficients(Rr.conjugate(), T.conjugate())


def square_lattice_dispersion(E, V0: float, a: float, params: PhysicalParams, U0: float = 0.0):
    """Closed-form Bloch LHS of the gain/loss square lattice (cell width 2a)."""
    kp = momentum_in_region(E, complex(U0, V0), params)
    km = momentum_in_region(E, complex(U0, -V0), params)
    prod = kp * km
    if np.any(np.abs(prod) < 1e-14):
        raise ZeroDivisionError("k+ k- vanishes")
    return np.cos((kp + km) * a) - (kp - km) ** 2 / (2 * prod) * np.sin(kp * a) * np.sin(km * a)


# ---------------------------------------------------------------- real bands

def stationary_points(cell: PiecewisePotential, params: PhysicalParams, E_window,
                      grid_points: int = 8000, rtol: float = 1e-9,
                      pt: bool = True) -> list[StationaryPoint]:
    """Interior extrema of F (``pt=True``) or of Re LHS on a real energy window."""
    f = (lambda e: pt_band_function(cell, e, params)) if pt else (
        lambda e: bloch_function(cell, e, params))
    E = np.linspace(E_window[0], E_window[1], grid_points)
    F = f(E)
    mx = (F[1:-1] > F[:-2]) & (F[1:-1] >= F[2:])
    mn = (F[1:-1] < F[:-2]) & (F[1:-1] <= F[2:])
    out = []
    for i in np.nonzero(mx | mn)[0] + 1:
        sgn = -1.0 if mx[i - 1] else 1.0
        res = minimize_scalar(lambda e: sgn * float(f(np.array([e]))[0]),
                              bracket=(E[i - 1], E[i], E[i + 1]), method="golden",
                              options={"xtol": rtol})
        e = float(res.x) if E[i - 1] <= res.x <= E[i + 1] else float(E[i])
        val = float(f(np.array([e]))[0])
        out.append(StationaryPoint(e, val, _is_branch(cell, e, val, params)))
    return out


def _is_branch(cell, E, F, params):
    # |F| = 1 within tolerance is a zone-centre/edge branch point only when
    # |T| > 1; with |T| = 1 it is an ordinary band touching (Hermitian case)
    if abs(F) < 1 - BRANCH_TOL:
        return True
    if abs(F) > 1 + BRANCH_TOL:
        return False
    return float(abs(cell_amplitudes(cell, E, params)[0])) > 1 + BRANCH_TOL


def find_branch_points(cell: PiecewisePotential, params: PhysicalParams, E_window,
                       grid_points: int = 8000) -> list[BranchPoint]:
    """Branch points of a PT-symmetric cell: stationary points of F with |F| <= 1.

    ``n_half = (d/2) sqrt(2 m E) / pi`` with d the cell width.
    """
    d = cell.width
    out = []
    for sp in stationary_points(cell, params, E_window, grid_points):
        if not sp.is_branch_point:
            continue
        T, _, _, k = cell_amplitudes(cell, sp.energy, params)
        F = min(1.0, max(-1.0, sp.F))
        out.append(BranchPoint(sp.energy, math.acos(F) / d, float(abs(T)),
                               float(np.angle(T)), (d / 2) * k.real / math.pi))
    return out


def band_edges(cell, params, E_window, grid_points: int = 8000) -> list[StationaryPoint]:
    """Stationary points of F outside [-1, 1]: ordinary gap extrema."""
    return [s for s in stationary_points(cell, params, E_window, grid_points) if not s.is_branch_point]


def band_solve_real(cell: PiecewisePotential, params: PhysicalParams, K_grid, E_window,
                    grid_points: int = 4000, xtol: float = 1e-10) -> list[BandPoint]:
    """All real energies with Re LHS(E) = cos(K d), for each K.

    A band is a monotone branch of Re LHS between consecutive stationary
    points, so ``band_index`` = 1 + number of stationary points below E.  K
    values whose branch has merged away (bifurcated region) produce no point.
    """
    d = cell.width
    E = np.linspace(E_window[0], E_window[1], grid_points)
    F = bloch_function(cell, E, params)
    stat = [s.energy for s in stationary_points(cell, params, E_window, grid_points, pt=False)]
    f = lambda e: float(bloch_function(cell, np.array([e]), params)[0])  # noqa: E731
    out = []
    for K in np.asarray(K_grid, dtype=float):
        c = math.cos(K * d)
        g = F - c
        roots = []
        for i in np.nonzero(np.sign(g[:-1]) * np.sign(g[1:]) < 0)[0]:
            roots.append(brentq(lambda e: f(e) - c, E[i], E[i + 1], xtol=xtol))
        roots += [e for e in E[g == 0]]
        # tangential (double) roots sit at stationary points
        for s in stat:
            if abs(f(s) - c) < BRANCH_TOL and all(abs(s - r) > 1e-6 for r in roots):
                roots.append(s)
        for r in sorted(roots):
            idx = 1 + sum(1 for s in stat if s < r - 1e-9)
            out.append(BandPoint(float(K), complex(r), idx))
    out.sort(key=lambda p: (p.band_index, p.K, p.energy.real))
    return out


# ---------------------------------------------------------------- complex bands

def band_solve_complex(cell: PiecewisePotential, params: PhysicalParams, K: float,
                       seed_E: complex, tol: float = 1e-11, maxiter: int = 200,
                       band_index: int = 1) -> BandPoint:
    """Newton solve of LHS(E) = cos(K d) in complex E from ``seed_E``.

    The conjugate energy solves the same equation for a PT cell; use
    ``BandPoint.conjugate`` for the partner.
    """
    c = math.cos(K * cell.width)
    g = lambda e: complex(_lhs(cell, e, params)[0]) - c  # noqa: E731
    z = complex(seed_E)
    for _ in range(maxiter):
        h = 1e-6 * max(1.0, abs(z))
        dg = (g(z + h) - g(z - h)) / (2 * h)
        if dg == 0 or not np.isfinite(dg):
            break
        dz = g(z) / dg
        z -= dz
        if abs(dz) < tol:
            if abs(z.imag) < 1e-10:
                z = complex(z.real, 0.0)
            return BandPoint(float(K), z, band_index)
    raise NonConvergenceError(f"band Newton did not converge at K={K} (last iterate {z})")


def complex_band_from_branch(cell: PiecewisePotential, params: PhysicalParams,
                             branch: BranchPoint, K_values, band_index: int = 1) -> list[BandPoint]:
    """Continue the conjugate pair born at ``branch`` along ``K_values``.

    ``K_values`` should move away from ``branch.K_star`` into the region
    without real solutions.  Returns the Im E > 0 member and its partner for
    each K.
    """
    d = cell.width
    Eb = branch.energy
    h = 1e-4 * max(1.0, Eb)
    f = lambda e: float(pt_band_function(cell, np.array([e]), params)[0])  # noqa: E731
    F0 = f(Eb)
    F2 = (f(Eb + h) - 2 * F0 + f(Eb - h)) / h ** 2
    out = []
    prev = None
    for K in K_values:
        if prev is None:
            # quadratic model of F about the stationary point
            delta = np.sqrt(complex(2 * (math.cos(K * d) - F0) / F2))
            seed = Eb + (delta if delta.imag >= 0 else -delta)
        else:
            seed = prev
        pt = band_solve_complex(cell, params, K, seed, band_index=band_index)
        if pt.energy.imag < 0:
            pt = pt.conjugate()
        out.append(pt)
        out.append(pt.conjugate())
        prev = pt.energy
    return out


def bifurcated_K(cell: PiecewisePotential, params: PhysicalParams, branch: BranchPoint,
                 K_values) -> np.ndarray:
    """The K values on the side of ``branch.K_star`` with no nearby real band,
    ordered moving away from the branch point."""
    d = cell.width
    Eb = branch.energy
    h = 1e-4 * max(1.0, Eb)
    f = lambda e: float(pt_band_function(cell, np.array([e]), params)[0])  # noqa: E731
    F2 = f(Eb + h) - 2 * f(Eb) + f(Eb - h)
    K = np.asarray(K_values, dtype=float)
    # F has a minimum (F2 > 0) -> no real root once cos(Kd) drops below it
    side = (np.cos(K * d) - np.cos(branch.K_star * d)) * np.sign(F2) < 0
    K = K[side & (np.abs(K - branch.K_star) > 1e-9)]
    return K[np.argsort(np.abs(K - branch.K_star), kind="stable")]
