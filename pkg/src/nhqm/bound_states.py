"""Localized states of a single imaginary barrier (+iV0) or well (-iV0).

For a barrier on [x_l, x_l + a] the states are symmetric or antisymmetric
about the centre c.  Outside they behave like exp(i kappa |x - c|) with
Im kappa = q > 0 (decay); inside like cos(p (x - c)) or sin(p (x - c)).
Roots of the matching condition are found with an argument-principle count
on a rectangle of the complex E plane, rectangle bisection, and Newton
polishing.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from .core import PhysicalParams, PiecewisePotential, principal_sqrt
from .errors import (CountMismatchError, GridMismatchError, InvalidRegionError,
                     NonConvergenceError)

log = logging.getLogger(__name__)

EVEN, ODD = "even", "odd"
MERGE_TOL = 1e-8


def _sinc(z):
    return np.sinc(z / np.pi)


def exterior_wavenumber(E, params: PhysicalParams):
    """kappa = k + i q with q > 0 whenever Im E != 0 (sign of k follows Im E)."""
    s = principal_sqrt(2 * params.mass * np.asarray(E, dtype=complex))
    return np.where(s.imag < 0, -s, s)


def _residual(E, parity, V0, a, params):
    E = np.asarray(E, dtype=complex)
    kap = exterior_wavenumber(E, params)
    p2 = 2 * params.mass * (E - 1j * V0)
    p = principal_sqrt(p2)
    h = a / 2
    if parity == EVEN:
        # p sin(p h) + i kappa cos(p h), written through p^2 so it is entire in p
        return p2 * h * _sinc(p * h) + 1j * kap * np.cos(p * h)
    # (p cos(p h) - i kappa sin(p h)) / p
    return np.cos(p * h) - 1j * kap * h * _sinc(p * h)


def parity_matching_residual(E: complex, parity: str, V0: float, a: float,
                             params: PhysicalParams) -> complex:
    """Matching residual whose zeros are the localized states of given parity."""
    if parity not in (EVEN, ODD):
        raise ValueError(f"parity must be 'even' or 'odd', got {parity!r}")
    if not a > 0:
        raise ValueError("a must be positive")
    q = exterior_wavenumber(E, params).imag
    if not q > 0:
        raise InvalidRegionError(f"exterior decay q = {q:g} <= 0 at E = {E}")
    return complex(_residual(E, parity, V0, a, params))


@dataclass(frozen=True)
class LocalizedState:
    index: int
    energy: complex
    exterior_k: float
    exterior_q: float
    interior_p: complex
    parity: str
    interior_amp: complex
    V0: float
    a: float
    left_edge: float = 0.0
    multiplicity: int = 1

    @property
    def kappa(self) -> complex:
        # outgoing for a barrier, incoming for a well
        return complex(np.sign(self.V0) * self.exterior_k, self.exterior_q)

    @property
    def center(self) -> float:
        return self.left_edge + self.a / 2

    def wavefunction(self, x, t: float = 0.0, derivative: bool = False) -> np.ndarray:
        """phi(x) exp(-i E t), or its x-derivative; exterior amplitude is 1."""
        y = np.asarray(x, dtype=float) - self.center
        kap, p, A = self.kappa, self.interior_p, self.interior_amp
        sgn = 1.0 if self.parity == EVEN else -1.0
        h = self.a / 2
        inside = np.abs(y) <= h
        out = np.empty(y.shape, dtype=complex)
        yo = y[~inside]
        side = np.where(yo > 0, 1.0, sgn)
        yi = y[inside]
        if derivative:
            out[~inside] = side * 1j * kap * np.sign(yo) * np.exp(1j * kap * np.abs(yo))
            out[inside] = A * 1j * p * (np.exp(1j * p * yi) - sgn * np.exp(-1j * p * yi))
        else:
            out[~inside] = side * np.exp(1j * kap * np.abs(yo))
            out[inside] = A * (np.exp(1j * p * yi) + sgn * np.exp(-1j * p * yi))
        return out * np.exp(-1j * self.energy * t)

    def potential(self) -> PiecewisePotential:
        return PiecewisePotential.from_pairs([(self.a, 1j * self.V0)], self.left_edge)


def _make_state(E, parity, V0, a, params, left_edge, multiplicity=1):
    kap = complex(exterior_wavenumber(E, params))
    p = complex(principal_sqrt(2 * params.mass * (E - 1j * V0)))
    h = a / 2
    if parity == EVEN:
        A = np.exp(1j * kap * h) / (2 * np.cos(p * h))
    else:
        A = np.exp(1j * kap * h) / (2j * np.sin(p * h))
    return LocalizedState(0, complex(E), abs(kap.real), kap.imag, p, parity, complex(A),
                          V0, a, left_edge, multiplicity)


# ---------------------------------------------------------------- root finding

def _contour_point(rect, s):
    """Point at parameter s in [0, 4) on the counter-clockwise boundary."""
    x0, x1, y0, y1 = rect
    side, u = np.divmod(s, 1.0)
    return np.select(
        [side == 0, side == 1, side == 2],
        [x0 + (x1 - x0) * u + 1j * y0, x1 + 1j * (y0 + (y1 - y0) * u),
         x1 - (x1 - x0) * u + 1j * y1],
        x0 + 1j * (y1 - (y1 - y0) * u),
    )


def winding_number(f, rect, n0: int = 1024, max_n: int = 1 << 21) -> int:
    """Zeros of analytic ``f`` inside ``rect = (re0, re1, im0, im1)``.

    Boundary intervals where f changes by half its size or more are bisected
    until none do (this also catches a sharp dip in |f| hiding a full turn),
    and the count must survive one further refinement of every interval.
    """
    s = np.arange(4 * n0) / n0
    w = f(_contour_point(rect, s))
    prev = None
    while s.size <= max_n:
        wc = np.append(w, w[0])
        dphi = np.angle(wc[1:] / wc[:-1])
        count = int(round(dphi.sum() / (2 * np.pi)))
        bad = np.abs(wc[1:] / wc[:-1] - 1) >= 0.5
        if not bad.any():
            if count == prev:
                return count
            prev = count
            bad[:] = True
        ends = np.append(s[1:], 4.0)
        mid = (s[bad] + ends[bad]) / 2
        s = np.concatenate([s, mid])
        w = np.concatenate([w, f(_contour_point(rect, mid))])
        order = np.argsort(s)
        s, w = s[order], w[order]
    raise NonConvergenceError(f"winding count did not stabilise on {rect}")


def _newton(f, z0, tol=1e-12, maxiter=200, where=""):
    z = complex(z0)
    for _ in range(maxiter):
        h = 1e-6 * max(1.0, abs(z))
        df = (f(z + h) - f(z - h)) / (2 * h)
        if df == 0 or not np.isfinite(df):
            break
        dz = f(z) / df
        z -= dz
        if abs(dz) < tol:
            return z
    raise NonConvergenceError(f"Newton failed to converge in {where} (last iterate {z})")


def _inside(z, rect, pad=0.0):
    x0, x1, y0, y1 = rect
    return x0 - pad <= z.real <= x1 + pad and y0 - pad <= z.imag <= y1 + pad


def _split(rect):
    x0, x1, y0, y1 = rect
    # off-centre cut keeps symmetric root configurations off the new edge
    c = 0.5 + 0.0137
    if (x1 - x0) >= (y1 - y0):
        xm = x0 + c * (x1 - x0)
        return (x0, xm, y0, y1), (xm, x1, y0, y1)
    ym = y0 + c * (y1 - y0)
    return (x0, x1, y0, ym), (x0, x1, ym, y1)


def complex_roots(f, rect, min_size: float = 1e-3, max_depth: int = 60):
    """All zeros of analytic ``f`` inside ``rect`` as ``[(root, multiplicity)]``.

    Raises CountMismatchError if the polished roots do not add up to the
    winding count of ``rect``.
    """
    fs = lambda z: complex(f(np.asarray(z)))  # noqa: E731
    total = winding_number(f, rect)
    found = []
    stack = [(rect, total, 0)]
    while stack:
        r, count, depth = stack.pop()
        if count == 0:
            continue
        size = max(r[1] - r[0], r[3] - r[2])
        center = complex((r[0] + r[1]) / 2, (r[2] + r[3]) / 2)
        if count == 1:
            try:
                z = _newton(fs, center, where=str(r))
                if _inside(z, r, pad=1e-9 * max(1.0, abs(z))):
                    found.append((z, 1))
                    continue
            except NonConvergenceError:
                pass
            if depth >= max_depth:
                raise NonConvergenceError(f"could not isolate the root in {r}")
        elif size < min_size * 1e-6 or depth >= max_depth:
            # clustered (or multiple) root
            found.append((_newton(fs, center, where=str(r)), count))
            continue
        for sub in _split(r):
            stack.append((sub, winding_number(f, sub), depth + 1))
    roots = _merge(found)
    n = sum(m for _, m in roots)
    if n != total:
        raise CountMismatchError(f"winding count {total} but polished {n} roots in {rect}")
    return roots


def _merge(found):
    out = []
    for z, m in sorted(found, key=lambda zm: (zm[0].real, zm[0].imag)):
        for i, (w, mw) in enumerate(out):
            if abs(z - w) < MERGE_TOL * max(1.0, abs(z)):
                out[i] = ((w * mw + z * m) / (mw + m), mw + m)
                break
        else:
            out.append((z, m))
    return out


def default_search_rect(V0: float, inset: float = 1e-9, reach: float = 20.0):
    """0 < Re E < reach |V0| and the open strip between 0 and the imaginary height."""
    h = abs(V0)
    if V0 > 0:
        return (inset * h, reach * h, inset * h, (1 - inset) * h)
    return (inset * h, reach * h, -(1 - inset) * h, -inset * h)


def _states_in(rect, V0, a, params, left_edge):
    states = []
    for parity in (EVEN, ODD):
        f = lambda E, parity=parity: _residual(E, parity, V0, a, params)  # noqa: E731
        for E, mult in complex_roots(f, rect):
            st = _make_state(E, parity, V0, a, params, left_edge, mult)
            if not st.exterior_q > 0:
                raise InvalidRegionError(f"root {E} has q <= 0")
            states.append(st)
    states.sort(key=lambda s: (s.energy.real, s.parity != EVEN))
    return states


def find_localized_states(V0: float, a: float, params: PhysicalParams, search_rect=None,
                          left_edge: float = 0.0) -> list[LocalizedState]:
    """Localized states of ``i V0`` on [left_edge, left_edge + a], both parities.

    Sorted by Re E then parity (even first) and indexed from 0.
    """
    if V0 == 0:
        raise ValueError("V0 must be nonzero")
    if not a > 0:
        raise ValueError("a must be positive")
    rect = default_search_rect(V0) if search_rect is None else tuple(map(float, search_rect))
    if V0 > 0 and not (rect[2] > 0 and rect[3] < V0):
        log.warning("search rectangle leaves the strip 0 < Im E < V0")
    if V0 < 0 and not (rect[3] < 0 and rect[2] > V0):
        log.warning("search rectangle leaves the strip -|V0| < Im E < 0")
    if search_rect is not None:
        states = _states_in(rect, V0, a, params, left_edge)
    else:
        # the default window is arbitrary: a root sitting on one of its edges
        # stalls the winding count, so nudge the edges and try again
        for attempt in range(4):
            try:
                states = _states_in(rect, V0, a, params, left_edge)
                break
            except NonConvergenceError:
                if attempt == 3:
                    raise
                rect = default_search_rect(V0, inset=1e-9 * 30 ** (attempt + 1),
                                           reach=20 * (1 + 0.0173 * (attempt + 1)))
                log.info("retrying localized-state search on %s", rect)
    return [
        LocalizedState(i, s.energy, s.exterior_k, s.exterior_q, s.interior_p, s.parity,
                       s.interior_amp, s.V0, s.a, s.left_edge, s.multiplicity)
        for i, s in enumerate(states)
    ]


def localized_current(state: LocalizedState, x, t: float, params: PhysicalParams):
    """Conventional current j0 = Im(psi* dpsi/dx) / m of the analytic state.

    Outside the barrier it equals sign(x - c) * (k/m) exp(-2q|x - c| + 2 Im E t)
    for a barrier (outward flow); a well reverses the sign.
    """
    psi = state.wavefunction(x, t)
    dpsi = state.wavefunction(x, t, derivative=True)
    j = (np.conj(psi) * dpsi).imag / params.mass
    return float(j) if np.ndim(j) == 0 else j


# ---------------------------------------------------------------- norm balance

def _segment_integral(x, f, lo, hi):
    """Trapezoid of samples ``f`` over [lo, hi] with linear interpolation at the ends."""
    sel = (x > lo) & (x < hi)
    xs = np.concatenate(([lo], x[sel], [hi]))
    fs = np.concatenate(([np.interp(lo, x, f)], f[sel], [np.interp(hi, x, f)]))
    return np.trapezoid(fs, xs)


def norm_balance_terms(psi, dpsi_dt, pot: PiecewisePotential, x=None):
    """(d/dt int |psi|^2, 2 int Im V |psi|^2) by trapezoidal quadrature.

    ``psi`` may be an object with ``grid`` and ``values`` or a plain array
    sampled on ``x``.  The Im V integral is split at the segment boundaries.
    """
    if hasattr(psi, "values"):
        x = psi.grid if x is None else x
        psi = psi.values
    if hasattr(dpsi_dt, "values"):
        dpsi_dt = dpsi_dt.values
    if x is None:
        raise GridMismatchError("no grid supplied")
    x = np.asarray(x, dtype=float)
    psi = np.asarray(psi, dtype=complex)
    dpsi_dt = np.asarray(dpsi_dt, dtype=complex)
    if not (psi.shape == dpsi_dt.shape == x.shape):
        raise GridMismatchError(f"shapes differ: x{x.shape} psi{psi.shape} dpsi{dpsi_dt.shape}")
    dnorm = np.trapezoid(2 * (np.conj(psi) * dpsi_dt).real, x)
    dens = np.abs(psi) ** 2
    edges = pot.boundaries
    source = 0.0
    for j, seg in enumerate(pot.segments):
        lo, hi = max(edges[j], x[0]), min(edges[j + 1], x[-1])
        if seg.potential.imag != 0 and hi > lo:
            source += seg.potential.imag * _segment_integral(x, dens, lo, hi)
    return float(dnorm), float(2 * source)


def norm_balance_residual(psi, dpsi_dt, pot: PiecewisePotential, x=None) -> float:
    """|d/dt int |psi|^2 - 2 int Im V |psi|^2|."""
    dnorm, source = norm_balance_terms(psi, dpsi_dt, pot, x)
    return abs(dnorm - source)
