"""Scattering by piecewise-constant complex potentials.

Transfer matrices use coefficients referenced locally: in a region starting
at ``x_j`` with wavenumber ``k_j`` the wavefunction is
``A exp(i k_j (x - x_j)) + B exp(-i k_j (x - x_j))``; the left exterior is
referenced at the left edge and the right exterior at the right edge.  The
matrices are therefore translation invariant and compose by plain
multiplication.

Amplitudes returned to callers use global plane waves instead, e.g. for left
incidence ``exp(ikx) + r exp(-ikx)`` on the left and ``t exp(ikx)`` on the
right, so free space gives ``t = 1`` and ``t`` is independent of where the
potential sits.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np
from scipy.optimize import bisect, minimize_scalar

from .core import PhysicalParams, PiecewisePotential, build_pt_unit_cell, momentum_in_region
from .errors import DegenerateInterfaceError, NoRootError

log = logging.getLogger(__name__)

DEGENERACY_TOL = 1e-14
NUDGE = 1e-9


@dataclass(frozen=True)
class InterfaceAmplitudes:
    t: complex
    r: complex


def interface_amplitudes(kL, kR) -> InterfaceAmplitudes:
    """Fresnel amplitudes for a wave hitting a step from the left."""
    s = kL + kR
    if np.any(np.abs(s) < DEGENERACY_TOL):
        raise DegenerateInterfaceError(f"kL + kR vanishes (kL={kL}, kR={kR})")
    return InterfaceAmplitudes(2 * kL / s, (kL - kR) / s)


@dataclass(frozen=True)
class TransferMatrix:
    """Maps (A, B) on the left of a potential to (A, B) on its right.

    Entries may be numpy arrays when built for an array of energies.
    """

    m11: complex
    m12: complex
    m21: complex
    m22: complex

    def __matmul__(self, other: TransferMatrix) -> TransferMatrix:
        return TransferMatrix(
            self.m11 * other.m11 + self.m12 * other.m21,
            self.m11 * other.m12 + self.m12 * other.m22,
            self.m21 * other.m11 + self.m22 * other.m21,
            self.m21 * other.m12 + self.m22 * other.m22,
        )

    @property
    def det(self):
        return self.m11 * self.m22 - self.m12 * self.m21

    def to_array(self) -> np.ndarray:
        return np.array([[self.m11, self.m12], [self.m21, self.m22]], dtype=complex)

    @classmethod
    def identity(cls, shape=()) -> TransferMatrix:
        one, zero = np.ones(shape, dtype=complex), np.zeros(shape, dtype=complex)
        if shape == ():
            one, zero = complex(1), complex(0)
        return cls(one, zero, zero, one)


def _interface_matrix(kL, kR) -> TransferMatrix:
    if np.any(np.abs(kR) < DEGENERACY_TOL):
        raise DegenerateInterfaceError(f"zero momentum at interface (kR={kR})")
    amp = interface_amplitudes(kL, kR)
    # seen from the right: t' = 2 kR / (kL + kR), r' = -r
    inv_tp = (kL + kR) / (2 * kR)
    return TransferMatrix(inv_tp, -amp.r * inv_tp, -amp.r * inv_tp, inv_tp)


def _propagation_matrix(k, w) -> TransferMatrix:
    p = np.exp(1j * k * w)
    z = np.zeros_like(p)
    return TransferMatrix(p, z, z, 1.0 / p)


def _region_momenta(pot: PiecewisePotential, E, params: PhysicalParams):
    """Exterior, segment..., exterior wavenumbers.

    Interior roots start on the principal branch and are then sign-aligned
    with the region to their left.  Matrices do not depend on that sign, but
    two nearly equal media on opposite sides of the cut (k and about -k)
    would otherwise make kL + kR vanish.
    """
    k0 = momentum_in_region(E, 0.0, params)
    ks = [k0]
    for s in pot.segments:
        k = momentum_in_region(E, s.potential, params)
        k = np.where(np.abs(ks[-1] + k) < 0.1 * np.abs(ks[-1] - k), -k, k)
        ks.append(complex(k) if np.ndim(k) == 0 else k)
    return ks + [k0]


def transfer_matrix(pot: PiecewisePotential, E, params: PhysicalParams) -> TransferMatrix:
    """Local-reference transfer matrix of ``pot`` at energy ``E`` (scalar or array).

    Raises DegenerateInterfaceError when a local momentum vanishes.
    """
    ks = _region_momenta(pot, E, params)
    shape = np.shape(E)
    M = TransferMatrix.identity(shape)
    for j, seg in enumerate(pot.segments):
        M = _interface_matrix(ks[j], ks[j + 1]) @ M
        M = _propagation_matrix(ks[j + 1], seg.width) @ M
    if pot.segments:
        M = _interface_matrix(ks[-2], ks[-1]) @ M
    return M


@dataclass(frozen=True)
class ScatteringSolution:
    """Amplitudes at one energy, global plane-wave convention about ``origin``.

    ``interior[j]`` holds the left-incidence coefficients (A, B) of segment j
    referenced at that segment's left boundary.
    """

    energy: float
    t: complex
    r_left: complex
    r_right: complex
    interior: tuple[tuple[complex, complex], ...]
    nudged: bool = False
    potential: PiecewisePotential = field(default=None, repr=False, compare=False)
    params: PhysicalParams = field(default=None, repr=False, compare=False)

    @property
    def T2(self) -> float:
        return abs(self.t) ** 2

    @property
    def R2(self) -> float:
        return abs(self.r_left) ** 2

    def wavefunction(self, x) -> np.ndarray:
        """Left-incidence state exp(ikx) + ... sampled at ``x``."""
        k = np.array([momentum_in_region(self.energy, 0.0, self.params)])
        return scattering_wavefunctions(self.potential, k.real, self.params, x)[0]


def _amplitudes_from_matrix(M: TransferMatrix, k, xl, xr):
    # det M = 1 exactly (interface dets kL/kR telescope), so t = 1/m22; the
    # cofactor det loses all digits when tunnelling makes the entries huge
    r_loc = -M.m21 / M.m22
    t_loc = 1 / M.m22
    rp_loc = M.m12 / M.m22
    t = t_loc * np.exp(1j * k * (xl - xr))
    r_left = r_loc * np.exp(2j * k * xl)
    r_right = rp_loc * np.exp(-2j * k * xr)
    return t, r_left, r_right, r_loc


def _left_incidence_coefficients(pot: PiecewisePotential, E, params: PhysicalParams):
    """Per-region (k, A, B) for a left-incident wave normalised to exp(ikx)."""
    ks = _region_momenta(pot, E, params)
    M = transfer_matrix(pot, E, params)
    k0 = ks[0]
    a = np.ones_like(np.asarray(k0, dtype=complex))
    b = -M.m21 / M.m22
    phase = np.exp(1j * k0 * pot.left_edge)
    out = [(k0, a * phase, b * phase)]
    for j, seg in enumerate(pot.segments):
        I = _interface_matrix(ks[j], ks[j + 1])
        if j > 0:
            w = pot.segments[j - 1].width
            a, b = a * np.exp(1j * ks[j] * w), b * np.exp(-1j * ks[j] * w)
        a, b = I.m11 * a + I.m12 * b, I.m21 * a + I.m22 * b
        out.append((ks[j + 1], a * phase, b * phase))
    t_loc = 1 / M.m22
    out.append((k0, t_loc * phase, np.zeros_like(t_loc * phase)))
    return out


def scattering_amplitudes(pot: PiecewisePotential, E: float, params: PhysicalParams,
                          origin: float = 0.0) -> ScatteringSolution:
    """t, r for left incidence (``r_left``) and right incidence (``r_right``).

    Transmission is the same from both sides.  An energy that hits a zero
    local momentum is moved by a relative 1e-9 and flagged ``nudged``.
    """
    if not E > 0:
        raise ValueError("scattering energy must be positive")
    nudged = False
    try:
        M = transfer_matrix(pot, E, params)
    except DegenerateInterfaceError:
        E = E * (1 + NUDGE)
        nudged = True
        log.warning("degenerate interface; energy nudged to %r", E)
        M = transfer_matrix(pot, E, params)
    k = momentum_in_region(E, 0.0, params)
    xl, xr = pot.left_edge - origin, pot.right_edge - origin
    t, r_left, r_right, _ = _amplitudes_from_matrix(M, k, xl, xr)
    coefs = _left_incidence_coefficients(pot, E, params)
    interior = tuple((complex(A), complex(B)) for _, A, B in coefs[1:-1])
    return ScatteringSolution(float(E), complex(t), complex(r_left), complex(r_right),
                              interior, nudged, pot, params)


def transmission_reflection(pot: PiecewisePotential, energies, params: PhysicalParams):
    """Vectorised (t, r_left) over an array of energies, global convention."""
    E = np.asarray(energies, dtype=float)
    M = transfer_matrix(pot, E, params)
    k = momentum_in_region(E, 0.0, params)
    t, r_left, _, _ = _amplitudes_from_matrix(M, k, pot.left_edge, pot.right_edge)
    return t, r_left


def scattering_wavefunctions(pot: PiecewisePotential, ks, params: PhysicalParams, x) -> np.ndarray:
    """Scattering states sampled on ``x``, one row per exterior wavenumber.

    ``k > 0``: incident from the left, ``exp(ikx) + r exp(-ikx)`` / ``t exp(ikx)``.
    ``k < 0``: incident from the right, ``exp(ikx) + r' exp(-ikx)`` on the right
    and ``t exp(ikx)`` on the left.
    """
    ks = np.asarray(ks, dtype=float)
    x = np.asarray(x, dtype=float)
    out = np.empty((ks.size, x.size), dtype=complex)
    pos = ks > 0
    if np.any(pos):
        out[pos] = _left_states(pot, ks[pos], params, x)
    if np.any(~pos):
        # right incidence = left incidence on the mirrored potential, read at -x
        out[~pos] = _left_states(pot.mirrored(), -ks[~pos], params, -x)
    return out


def _left_states(pot, ks, params, x):
    E = ks ** 2 / (2 * params.mass)
    coefs = _left_incidence_coefficients(pot, E, params)
    edges = pot.boundaries
    out = np.empty((ks.size, x.size), dtype=complex)
    region = np.searchsorted(edges, x, side="right")  # 0 = left exterior
    refs = np.concatenate(([edges[0]], edges[:-1], [edges[-1]]))
    for j, (kj, A, B) in enumerate(coefs):
        sel = region == j
        if not np.any(sel):
            continue
        kj = np.broadcast_to(kj, ks.shape)[:, None]
        dx = (x[sel] - refs[j])[None, :]
        out[:, sel] = A[:, None] * np.exp(1j * kj * dx) + B[:, None] * np.exp(-1j * kj * dx)
    return out


def barrier_amplitudes_from_momenta(k, kp, a):
    """Closed-form (t, r) of one barrier on [0, a] given outside/inside momenta.

    Global convention: ``exp(ikx) + r exp(-ikx)`` for x <= 0 and ``t exp(ikx)``
    for x >= a, so ``kp == k`` gives ``(1, 0)``.  The textbook expressions
    carry extra phases exp(-ika) on t and exp(-2ika) on r relative to this.
    Both amplitudes are even in ``kp``.
    """
    den = np.exp(1j * (k + kp) * a) * (k - kp) ** 2 - np.exp(1j * (k - kp) * a) * (k + kp) ** 2
    t = -4 * k * kp / den
    r = 2j * (k ** 2 - kp ** 2) * np.sin(kp * a) * np.exp(1j * k * a) / den
    return t, r


def single_barrier_closed_form(V0: float, a: float, E: float, params: PhysicalParams,
                               U0: float = 0.0):
    """(t, r) for the barrier ``U0 + i V0`` on [0, a] from the analytic formulas."""
    if not (E > 0 and a > 0):
        raise ValueError("need E > 0 and a > 0")
    k = momentum_in_region(E, 0.0, params)
    kp = momentum_in_region(E, complex(U0, V0), params)
    t, r = barrier_amplitudes_from_momenta(k, kp, a)
    return complex(t), complex(r)


class SeriesSum(NamedTuple):
    value: complex
    ratio: complex


def reflection_series_partial_sum(pot: PiecewisePotential, E, params: PhysicalParams,
                                  N: int) -> SeriesSum:
    """First ``N`` terms of the multiple-reflection expansion of t.

    Terms are ``t1 t2 exp(i k' a) * rho**j`` with ``rho = r1 r2 exp(2 i k' a)``,
    the phase convention of a barrier starting at x = 0 viewed locally; the
    limit equals the canonical t times ``exp(i k a)``.
    """
    if len(pot.segments) != 1:
        raise ValueError("series expansion needs exactly one segment")
    if N < 1:
        raise ValueError("N must be >= 1")
    a = pot.segments[0].width
    k = momentum_in_region(E, 0.0, params)
    kp = momentum_in_region(E, pot.segments[0].potential, params)
    t1 = interface_amplitudes(k, kp).t
    t2 = interface_amplitudes(kp, k).t
    r_in = interface_amplitudes(kp, k).r  # reflection inside, at either wall
    rho = r_in * r_in * np.exp(2j * kp * a)
    first = t1 * t2 * np.exp(1j * kp * a)
    if rho == 1:
        total = first * N
    else:
        total = first * (1 - rho ** N) / (1 - rho)
    return SeriesSum(complex(total), complex(rho))


@dataclass(frozen=True)
class ResonancePeak:
    energy: float
    peak_T2: float
    n_index: float


def _n_index(pot, E, params):
    # optical path length / pi; a * Re k' / pi for a single segment
    ks = [momentum_in_region(E, s.potential, params) for s in pot.segments]
    return sum(s.width * k.real for s, k in zip(pot.segments, ks)) / math.pi


def _refine_max(f, lo, mid, hi, rtol):
    res = minimize_scalar(lambda e: -f(e), bracket=(lo, mid, hi), method="golden",
                          options={"xtol": rtol})
    x = float(res.x)
    if not lo <= x <= hi:  # golden may wander when the bracket is flat
        x = mid
    return x, f(x)


def resonance_scan(pot: PiecewisePotential, params: PhysicalParams, E_min: float,
                   E_max: float, grid_points: int = 4000, rtol: float = 1e-8) -> list[ResonancePeak]:
    """Strict local maxima of |t(E)|^2 on a uniform grid, golden-section refined."""
    if not 0 < E_min < E_max:
        raise ValueError("need 0 < E_min < E_max")
    if grid_points < 100:
        raise ValueError("grid_points must be >= 100")
    E = np.linspace(E_min, E_max, grid_points)
    t, _ = transmission_reflection(pot, E, params)
    T2 = np.abs(t) ** 2
    idx = np.nonzero((T2[1:-1] > T2[:-2]) & (T2[1:-1] > T2[2:]))[0] + 1

    def f(e):
        return abs(transmission_reflection(pot, np.array([e]), params)[0][0]) ** 2

    peaks = []
    for i in idx:
        e, val = _refine_max(f, E[i - 1], E[i], E[i + 1], rtol)
        peaks.append(ResonancePeak(e, val, _n_index(pot, e, params)))
    return sorted(peaks, key=lambda p: p.energy)


def common_ratio_log_magnitude(V0: float, U0: float, a: float, E: float,
                               params: PhysicalParams) -> float:
    """log |r1 r2 exp(2 i k' a)| for the gain/loss pair at energy E.

    r1 is the outside-to-gain step, r2 the gain-to-loss step, k' the gain-side
    momentum.  Computed in log form since exp(2 i k' a) overflows easily.
    """
    k = momentum_in_region(E, 0.0, params)
    kp = momentum_in_region(E, complex(U0, V0), params)
    km = momentum_in_region(E, complex(U0, -V0), params)
    r1 = interface_amplitudes(k, kp).r
    r2 = interface_amplitudes(kp, km).r
    return math.log(abs(r1)) + math.log(abs(r2)) - 2 * a * kp.imag


def critical_strength(U0: float, a: float, params: PhysicalParams,
                      eps_rel: float = 1e-9, rtol: float = 1e-10) -> float:
    """V0 at which the common ratio of the gain/loss pair reaches modulus 1 as E -> 0+.

    The limit is taken at E = eps_rel * U0 on the principal branch.  Raises
    NoRootError (with the endpoint values) when [1e-12, U0] does not bracket.
    """
    if not (U0 > 0 and a > 0):
        raise ValueError("need U0 > 0 and a > 0")
    E = eps_rel * U0

    def g(V0):
        return common_ratio_log_magnitude(V0, U0, a, E, params)

    lo, hi = 1e-12, U0
    glo, ghi = g(lo), g(hi)
    if glo * ghi > 0:
        raise NoRootError(
            f"|rho| - 1 does not change sign on V0 in [{lo:g}, {hi:g}]: "
            f"|rho|({lo:g}) = exp({glo:.6g}), |rho|({hi:g}) = exp({ghi:.6g})"
        )
    return float(bisect(g, lo, hi, xtol=1e-300, rtol=max(rtol, 4 * np.finfo(float).eps)))


def max_transmission(pot: PiecewisePotential, params: PhysicalParams, E_min: float,
                     E_max: float, grid_points: int = 4000, rtol: float = 1e-10):
    """(max |t|, argmax E) over [E_min, E_max]; every grid maximum is refined."""
    E = np.linspace(E_min, E_max, grid_points)
    t, _ = transmission_reflection(pot, E, params)
    absT = np.abs(t)
    best = (float(absT.max()), float(E[absT.argmax()]))
    idx = np.nonzero((absT[1:-1] >= absT[:-2]) & (absT[1:-1] >= absT[2:]))[0] + 1

    def f(e):
        return abs(transmission_reflection(pot, np.array([e]), params)[0][0])

    for i in idx:
        e, val = _refine_max(f, E[i - 1], E[i], E[i + 1], rtol)
        if val > best[0]:
            best = (val, e)
    return best


def threshold_by_transmission(U0: float, a: float, params: PhysicalParams,
                              E_max: float | None = None, margin: float = 1e-10,
                              rtol: float = 1e-6, grid_points: int = 4000) -> float:
    """Smallest V0 for which max_E |t| of the gain/loss pair exceeds ``1 + margin``.

    ``margin`` sits above the round-off floor of |t|.  Bisection runs in log V0
    over [1e-12, U0]; a failed bracket raises NoRootError.
    """
    if not a > 0:
        raise ValueError("a must be positive")
    if not U0 > 0:
        raise NoRootError(f"no bracket for U0 = {U0!r}: the search interval [1e-12, U0] is empty")
    E_max = 10 * U0 if E_max is None else E_max
    E_min = E_max / grid_points / 10

    def excess(log_v0):
        cell = build_pt_unit_cell(math.exp(log_v0), a, U0)
        return max_transmission(cell, params, E_min, E_max, grid_points)[0] - 1 - margin

    lo, hi = math.log(1e-12), math.log(U0)
    elo, ehi = excess(lo), excess(hi)
    if not (elo <= 0 < ehi):
        raise NoRootError(
            f"max|t| - 1 - margin does not bracket on V0 in [1e-12, {U0:g}]: "
            f"{elo:.3g} at the low end, {ehi:.3g} at the high end"
        )
    return math.exp(bisect(excess, lo, hi, xtol=rtol))
