"""Gaussian wave packets hitting complex potentials.

Two independent evolvers:

* ``evolve_direct`` - Crank-Nicolson on a uniform grid with hard walls.
* ``expand_packet`` / ``evolve_expansion`` - biorthogonal expansion over
  right eigenstates (scattering states plus localized states), with
  coefficients from c-products against the left eigenstates, i.e. the
  eigenstates of the conjugated potential.

Continuum states are plane-wave normalised, so their c-product is
2 pi delta(k - k') and the continuum coefficient density is
``C(k) = (1/2pi) int conj(phiL_k) Psi dx``.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sparse
from scipy.sparse.linalg import splu

from .bound_states import LocalizedState, _make_state, find_localized_states
from .core import PhysicalParams, PiecewisePotential
from .errors import DenominatorUnderflowError, NotSeparatedError, StabilityError
from .scattering import scattering_wavefunctions

log = logging.getLogger(__name__)

DEFAULT_BOX = (-40.0, 120.0)
DEFAULT_DX = 0.02
DEFAULT_DT = 5e-4


@dataclass(frozen=True)
class GaussianPacket:
    x0: float
    p0: float
    b: float

    def __post_init__(self):
        if not self.b > 0:
            raise ValueError("b must be positive")

    @property
    def peak_amplitude(self) -> float:
        return (2 * self.b / math.pi) ** 0.25

    @property
    def width(self) -> float:
        return 1 / (2 * math.sqrt(self.b))

    def __call__(self, x):
        return gaussian_packet_sample(self, x)

    def spectrum(self, k):
        """Fourier transform int exp(-ikx) Psi(x, 0) dx."""
        k = np.asarray(k, dtype=float)
        return (self.peak_amplitude * math.sqrt(math.pi / self.b)
                * np.exp(-((k - self.p0) ** 2) / (4 * self.b) - 1j * k * self.x0))

    def free_evolution(self, x, t: float, params: PhysicalParams):
        """Exact free-space Psi(x, t)."""
        y = np.asarray(x, dtype=float) - self.x0
        m = params.mass
        alpha = 1 / (4 * self.b) + 1j * t / (2 * m)
        pref = self.peak_amplitude / (2 * math.sqrt(self.b)) / np.sqrt(alpha)
        return pref * np.exp(-((y - self.p0 * t / m) ** 2) / (4 * alpha)
                             + 1j * self.p0 * y - 1j * self.p0 ** 2 * t / (2 * m))


def gaussian_packet_sample(p: GaussianPacket, x):
    y = np.asarray(x, dtype=float) - p.x0
    return p.peak_amplitude * np.exp(-p.b * y ** 2 + 1j * p.p0 * y)


@dataclass(frozen=True)
class WaveField:
    grid: np.ndarray
    values: np.ndarray
    time: float

    @property
    def norm(self) -> float:
        return float(np.trapezoid(np.abs(self.values) ** 2, self.grid))

    @property
    def dx(self) -> float:
        return float(self.grid[1] - self.grid[0])


def make_grid(box=DEFAULT_BOX, dx: float = DEFAULT_DX) -> np.ndarray:
    n = int(round((box[1] - box[0]) / dx))
    return np.linspace(box[0], box[1], n + 1)


# ---------------------------------------------------------------- direct stepping

def cell_averaged_potential(pot: PiecewisePotential, x: np.ndarray) -> np.ndarray:
    """Average of V over [x_i - dx/2, x_i + dx/2] for a uniform grid."""
    dx = x[1] - x[0]
    lo, hi = x - dx / 2, x + dx / 2
    V = np.zeros(x.shape, dtype=complex)
    edges = pot.boundaries
    for j, seg in enumerate(pot.segments):
        overlap = np.clip(np.minimum(hi, edges[j + 1]) - np.maximum(lo, edges[j]), 0, None)
        V += seg.potential * overlap / dx
    return V


class CrankNicolson:
    """Implicit-midpoint stepping of i dpsi/dt = -psi''/2m + V psi, psi = 0 at the walls."""

    def __init__(self, pot: PiecewisePotential, params: PhysicalParams, grid: np.ndarray,
                 dt: float = DEFAULT_DT):
        self.grid = grid
        self.dt = dt
        dx = grid[1] - grid[0]
        n = grid.size
        V = cell_averaged_potential(pot, grid)
        kin = 1 / (2 * params.mass * dx ** 2)
        off = np.full(n - 1, -kin, dtype=complex)
        H = sparse.diags([off, 2 * kin + V, off], [-1, 0, 1], format="csc")
        eye = sparse.identity(n, dtype=complex, format="csc")
        self._lu = splu((eye + 0.5j * dt * H).tocsc())
        self._rhs = (eye - 0.5j * dt * H).tocsr()

    def step(self, psi: np.ndarray) -> np.ndarray:
        return self._lu.solve(self._rhs @ psi)


def propagate_direct(packet: GaussianPacket, pot: PiecewisePotential, params: PhysicalParams,
                     times, dt: float = DEFAULT_DT, box=DEFAULT_BOX,
                     dx: float = DEFAULT_DX) -> list[WaveField]:
    """Snapshots of the Crank-Nicolson evolution at each of ``times`` (ascending)."""
    times = sorted(float(t) for t in times)
    t_final = times[-1]
    need = (packet.x0 - 10 / math.sqrt(packet.b),
            packet.x0 + packet.p0 / params.mass * t_final + 10 / math.sqrt(packet.b))
    if need[0] < box[0] or need[1] > box[1]:
        log.warning("box %s is narrower than the recommended %s", box, need)
    x = make_grid(box, dx)
    cn = CrankNicolson(pot, params, x, dt)
    psi = gaussian_packet_sample(packet, x)
    psi[0] = psi[-1] = 0
    norm0 = float(np.trapezoid(np.abs(psi) ** 2, x))
    out, step, t = [], 0, 0.0
    for target in times:
        nsteps = int(round(target / dt))
        while step < nsteps:
            psi = cn.step(psi)
            step += 1
        t = step * dt
        out.append(WaveField(x, psi.copy(), t))
    if pot.is_real and t_final > 0:
        drift = abs(out[-1].norm - norm0) / t_final
        if drift > 1e-6:
            raise StabilityError(f"norm drift {drift:.3e} per unit time for a real potential")
    return out


def evolve_direct(packet: GaussianPacket, pot: PiecewisePotential, params: PhysicalParams,
                  t_final: float, dt: float = DEFAULT_DT, box=DEFAULT_BOX,
                  dx: float = DEFAULT_DX) -> WaveField:
    return propagate_direct(packet, pot, params, [t_final], dt, box, dx)[-1]


# ---------------------------------------------------------------- analysis

def _lump(profile, negligible):
    """(peak, valley) of the outgoing lump along a profile ordered outward."""
    if profile.size == 0 or profile.max() <= negligible:
        return (float(profile.max()) if profile.size else 0.0), 0.0
    rise = profile - np.minimum.accumulate(profile)
    i = int(np.argmax(rise))
    return float(profile[i]), float(profile[: i + 1].min())


def amplification_factors(field: WaveField, barrier_extent, reference_amplitude: float,
                          quantity: str = "amplitude", max_valley_ratio: float = 0.5):
    """(transmitted, reflected) lump peaks relative to ``reference_amplitude``.

    Each lump is the largest rise of |psi| over its running minimum walking
    away from the barrier, so a growing localized mode hugging the barrier is
    not mistaken for it.  ``quantity="density"`` compares |psi|^2 instead.
    Raises NotSeparatedError when the valley between barrier and lump is
    deeper than ``max_valley_ratio`` of the lump peak.
    """
    lo, hi = barrier_extent
    x, a = field.grid, np.abs(field.values)
    negligible = 1e-8 * reference_amplitude
    right = a[x > hi]
    left = a[x < lo][::-1]
    result = []
    for name, prof in (("transmitted", right), ("reflected", left)):
        peak, valley = _lump(prof, negligible)
        if peak > negligible and valley > max_valley_ratio * peak:
            raise NotSeparatedError(f"{name} lump not separated: valley {valley:.3g}, peak {peak:.3g}")
        f = peak / reference_amplitude
        result.append(f * f if quantity == "density" else f)
    return tuple(result)


def interior_local_maxima(field: WaveField, extent) -> int:
    a = np.abs(field.values[(field.grid >= extent[0]) & (field.grid <= extent[1])])
    return int(np.sum((a[1:-1] > a[:-2]) & (a[1:-1] > a[2:])))


# ---------------------------------------------------------------- biorthogonal expansion

def left_eigenstate(which, pot: PiecewisePotential, params: PhysicalParams, x) -> np.ndarray:
    """Left eigenstate in position space: the eigenstate of V* at E*.

    ``which`` is a real exterior wavenumber (scattering state) or a
    LocalizedState of ``pot``.
    """
    if isinstance(which, LocalizedState):
        dual = _make_state(which.energy.conjugate(), which.parity, -which.V0, which.a,
                           params, which.left_edge)
        return dual.wavefunction(x)
    return scattering_wavefunctions(pot.conjugate(), [float(which)], params, x)[0]


def simpson_weights(n: int, h: float) -> np.ndarray:
    if n % 2 == 0 or n < 3:
        raise ValueError("Simpson's rule needs an odd number >= 3 of nodes")
    w = np.ones(n)
    w[1:-1:2] = 4
    w[2:-1:2] = 2
    return w * h / 3


def c_product(phiL: np.ndarray, phiR: np.ndarray, x: np.ndarray) -> complex:
    """int conj(phiL) phiR dx by composite Simpson on a uniform odd grid."""
    return complex(np.sum(simpson_weights(x.size, x[1] - x[0]) * np.conj(phiL) * phiR))


def _localized_basis(pot: PiecewisePotential, params: PhysicalParams) -> list[LocalizedState]:
    if not pot.segments or all(s.potential.imag == 0 and s.potential.real >= 0 for s in pot.segments):
        return []
    if len(pot.segments) == 1 and pot.segments[0].potential.real == 0:
        seg = pot.segments[0]
        return find_localized_states(seg.potential.imag, seg.width, params, left_edge=pot.left_edge)
    raise NotImplementedError("localized states are only available for a single imaginary barrier/well")


@dataclass
class SpectralExpansion:
    k: np.ndarray
    weights: np.ndarray
    C_k: np.ndarray
    states: list[LocalizedState]
    C_n: np.ndarray
    potential: PiecewisePotential
    params: PhysicalParams
    grid: np.ndarray = field(repr=False)

    def energies(self) -> np.ndarray:
        return self.k ** 2 / (2 * self.params.mass)


def default_k_nodes(packet: GaussianPacket, n: int = 2049, span: float | None = None):
    """Both signs of k around +-p0 with Simpson weights; ``n`` odd nodes per sign."""
    span = 16 * math.sqrt(packet.b) if span is None else span
    lo, hi = abs(packet.p0) - span, abs(packet.p0) + span
    lo = max(lo, 1e-3)
    kp = np.linspace(lo, hi, n)
    w = simpson_weights(n, kp[1] - kp[0])
    return np.concatenate((-kp[::-1], kp)), np.concatenate((w[::-1], w))


def expand_function(psi: np.ndarray, pot: PiecewisePotential, params: PhysicalParams,
                    grid: np.ndarray, k: np.ndarray, weights: np.ndarray,
                    chunk: int = 256) -> SpectralExpansion:
    """Biorthogonal coefficients of an arbitrary sampled state."""
    wx = simpson_weights(grid.size, grid[1] - grid[0])
    conj_pot = pot.conjugate()
    C_k = np.empty(k.size, dtype=complex)
    for s in range(0, k.size, chunk):
        phiL = scattering_wavefunctions(conj_pot, k[s:s + chunk], params, grid)
        C_k[s:s + chunk] = (np.conj(phiL) * (wx * psi)).sum(axis=1) / (2 * math.pi)
    states = _localized_basis(pot, params)
    C_n = np.empty(len(states), dtype=complex)
    for i, st in enumerate(states):
        phiL = left_eigenstate(st, pot, params, grid)
        den = c_product(phiL, st.wavefunction(grid), grid)
        if abs(den) < 1e-12:
            raise DenominatorUnderflowError(f"c-norm {abs(den):.3e} of state {st.index} (E={st.energy})")
        C_n[i] = c_product(phiL, psi, grid) / den
    return SpectralExpansion(k, weights, C_k, states, C_n, pot, params, grid)


def expand_packet(packet: GaussianPacket, pot: PiecewisePotential, params: PhysicalParams,
                  box=DEFAULT_BOX, dx: float = DEFAULT_DX, n_k: int = 2049,
                  k_span: float | None = None) -> SpectralExpansion:
    grid = make_grid(box, dx)
    k, w = default_k_nodes(packet, n_k, k_span)
    return expand_function(gaussian_packet_sample(packet, grid), pot, params, grid, k, w)


def evolve_expansion(exp: SpectralExpansion, t: float, x=None, chunk: int = 256,
                     include_localized: bool = True) -> WaveField:
    """Psi(x, t) from the expansion; localized terms grow like exp(Im E_n t)."""
    x = exp.grid if x is None else np.asarray(x, dtype=float)
    E = exp.energies()
    amp = exp.weights * exp.C_k * np.exp(-1j * E * t)
    out = np.zeros(x.size, dtype=complex)
    for s in range(0, exp.k.size, chunk):
        phiR = scattering_wavefunctions(exp.potential, exp.k[s:s + chunk], exp.params, x)
        out += amp[s:s + chunk] @ phiR
    if include_localized:
        for c, st in zip(exp.C_n, exp.states):
            out += c * st.wavefunction(x, t)
    return WaveField(x, out, float(t))
