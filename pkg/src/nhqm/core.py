"""Shared types: physical parameters, piecewise-constant complex potentials,
and the square-root branch convention used for every local momentum.

Units are hbar = 1 with a user-chosen mass.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np


@dataclass(frozen=True)
class PhysicalParams:
    mass: float = 1.0

    def __post_init__(self):
        if not (math.isfinite(self.mass) and self.mass > 0):
            raise ValueError(f"mass must be positive and finite, got {self.mass!r}")


@dataclass(frozen=True)
class Segment:
    width: float
    potential: complex

    def __post_init__(self):
        if not (math.isfinite(self.width) and self.width > 0):
            raise ValueError(f"segment width must be positive, got {self.width!r}")
        v = complex(self.potential)
        if not (math.isfinite(v.real) and math.isfinite(v.imag)):
            raise ValueError(f"segment potential must be finite, got {v!r}")
        object.__setattr__(self, "potential", v)


@dataclass(frozen=True)
class PiecewisePotential:
    """Constant complex potential on consecutive segments, zero outside.

    An empty segment tuple is allowed and means free space (zero width).
    """

    segments: tuple[Segment, ...] = ()
    left_edge: float = 0.0
    _boundaries: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        segs = tuple(s if isinstance(s, Segment) else Segment(*s) for s in self.segments)
        object.__setattr__(self, "segments", segs)
        if not math.isfinite(self.left_edge):
            raise ValueError("left_edge must be finite")
        edges = self.left_edge + np.concatenate(([0.0], np.cumsum([s.width for s in segs])))
        edges.setflags(write=False)
        object.__setattr__(self, "_boundaries", edges)

    @classmethod
    def from_pairs(cls, pairs, left_edge=0.0):
        """Build from ``[(width, potential), ...]``."""
        return cls(tuple(Segment(float(w), complex(v)) for w, v in pairs), float(left_edge))

    @property
    def width(self) -> float:
        return float(self._boundaries[-1] - self._boundaries[0])

    @property
    def right_edge(self) -> float:
        return float(self._boundaries[-1])

    @property
    def center(self) -> float:
        return self.left_edge + 0.5 * self.width

    @property
    def boundaries(self) -> np.ndarray:
        return self._boundaries

    @property
    def widths(self) -> np.ndarray:
        return np.array([s.width for s in self.segments])

    @property
    def values(self) -> np.ndarray:
        return np.array([s.potential for s in self.segments], dtype=complex)

    @property
    def is_real(self) -> bool:
        return all(s.potential.imag == 0 for s in self.segments)

    def __len__(self):
        return len(self.segments)

    def __call__(self, x):
        """V(x); segments are closed on the left, zero outside the support."""
        x = np.asarray(x, dtype=float)
        out = np.zeros(x.shape, dtype=complex)
        if not self.segments:
            return out
        idx = np.searchsorted(self._boundaries, x, side="right") - 1
        inside = (idx >= 0) & (idx < len(self.segments))
        out[inside] = self.values[idx[inside]]
        return out

    def conjugate(self) -> PiecewisePotential:
        return PiecewisePotential(
            tuple(Segment(s.width, s.potential.conjugate()) for s in self.segments), self.left_edge
        )

    def mirrored(self) -> PiecewisePotential:
        """The potential V(-x)."""
        return PiecewisePotential(tuple(reversed(self.segments)), -self.right_edge)

    def shifted(self, dx: float) -> PiecewisePotential:
        return PiecewisePotential(self.segments, self.left_edge + dx)

    def concat(self, other: PiecewisePotential) -> PiecewisePotential:
        """Place ``other`` immediately to the right of ``self``."""
        return PiecewisePotential(self.segments + other.segments, self.left_edge)

    def to_dict(self) -> dict:
        return {
            "left_edge": self.left_edge,
            "segments": [
                {"width": s.width, "re": s.potential.real, "im": s.potential.imag}
                for s in self.segments
            ],
        }

    @classmethod
    def from_dict(cls, doc: dict) -> PiecewisePotential:
        try:
            segs = tuple(
                Segment(float(s["width"]), complex(float(s["re"]), float(s["im"])))
                for s in doc["segments"]
            )
            return cls(segs, float(doc.get("left_edge", 0.0)))
        except (KeyError, TypeError) as exc:
            raise ValueError(f"malformed potential document: {exc}") from exc

    @classmethod
    def from_json(cls, text_or_path) -> PiecewisePotential:
        if isinstance(text_or_path, Path) or (
            isinstance(text_or_path, str) and not text_or_path.lstrip().startswith("{")
        ):
            text_or_path = Path(text_or_path).read_text()
        return cls.from_dict(json.loads(text_or_path))


def principal_sqrt(z):
    """Square root with Re >= 0; purely imaginary roots are put on the +i side.

    numpy already returns Re >= 0, but a negative real argument carrying a
    signed zero imaginary part (-0.0) comes back as -i*sqrt(|z|).
    """
    w = np.sqrt(np.asarray(z, dtype=complex))
    flip = (w.real == 0) & (w.imag < 0)
    w = np.where(flip, -w, w)
    return w[()] if w.ndim == 0 else w


def momentum_in_region(E, V, params: PhysicalParams):
    """Local wavenumber sqrt(2 m (E - V)) on the principal branch.

    Works elementwise on arrays; returns a Python ``complex`` for scalars.
    """
    k = principal_sqrt(2.0 * params.mass * (np.asarray(E, dtype=complex) - V))
    return complex(k) if np.ndim(k) == 0 else k


def build_pt_unit_cell(V0: float, a: float, U0: float = 0.0) -> PiecewisePotential:
    """Gain half ``U0 + i V0`` on [-a, 0], loss half ``U0 - i V0`` on [0, a]."""
    if not a > 0:
        raise ValueError("a must be positive")
    return PiecewisePotential(
        (Segment(a, complex(U0, V0)), Segment(a, complex(U0, -V0))), left_edge=-a
    )


def single_barrier(V0: float, a: float, U0: float = 0.0, left_edge: float = 0.0) -> PiecewisePotential:
    """One segment of height ``U0 + i V0`` on [left_edge, left_edge + a]."""
    return PiecewisePotential((Segment(a, complex(U0, V0)),), left_edge)


def is_pt_symmetric(pot: PiecewisePotential, tol: float = 1e-12) -> bool:
    """True when reversing the segment order and conjugating reproduces ``pot``."""
    segs = pot.segments
    for s, r in zip(segs, reversed(segs)):
        if abs(s.width - r.width) > tol or abs(s.potential - r.potential.conjugate()) > tol:
            return False
    return True
