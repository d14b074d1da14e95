"""Command-line front end.

    python3 -m nhqm transmit --v0 40 --a 2 --m 1 --emin 1 --emax 400 --n 4000 --out t.csv

Every run writes its data file(s) plus ``<stem>.config.json`` holding the
fully resolved configuration, which can be fed back with ``--config``.
Exit status: 0 ok, 2 bad arguments or config, 3 numerical failure.
"""
from __future__ import annotations

import argparse
import dataclasses
import json
import math
import os
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import bloch, bound_states, scattering, wavepacket
from .core import PhysicalParams, PiecewisePotential, build_pt_unit_cell, single_barrier
from .errors import NumericalError
from .io import write_csv, write_json

COMMANDS = ("transmit", "resonances", "bound", "critical", "bands", "branch", "packet")

# energy windows used when --emin/--emax are not given
DEFAULT_WINDOWS = {
    "transmit": (1.0, 400.0),
    "resonances": (150.0, 400.0),
    "bands": (0.01, 110.0),
    "branch": (0.01, 110.0),
}


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    command: str
    out: str
    v0: float = 5.0
    a: float = 1.0
    u0: float = 0.0
    m: float = 1.0
    emin: float | None = None
    emax: float | None = None
    n: int = 4000
    kpoints: int = 41
    x0: float = -10.0
    p0: float = 5.23
    b: float = 0.08
    times: list[float] = dataclasses.field(default_factory=lambda: [0.0, 2.0, 5.0])
    potential: dict | None = None

    @property
    def params(self) -> PhysicalParams:
        return PhysicalParams(self.m)

    def barrier(self) -> PiecewisePotential:
        if self.potential is not None:
            return PiecewisePotential.from_dict(self.potential)
        return single_barrier(self.v0, self.a, self.u0)

    def cell(self) -> PiecewisePotential:
        if self.potential is not None:
            return PiecewisePotential.from_dict(self.potential)
        return build_pt_unit_cell(self.v0, self.a, self.u0)

    def validate(self) -> RunConfig:
        if self.command not in COMMANDS:
            raise ConfigError(f"unknown command {self.command!r}")
        try:
            PhysicalParams(self.m)
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
        if self.command in DEFAULT_WINDOWS:
            lo, hi = DEFAULT_WINDOWS[self.command]
            self.emin = lo if self.emin is None else self.emin
            self.emax = hi if self.emax is None else self.emax
            if not self.emin < self.emax:
                raise ConfigError(f"empty energy range [{self.emin}, {self.emax}]")
        if self.n < 2 or self.kpoints < 2:
            raise ConfigError("grid sizes --n and --kpoints must be >= 2")
        if not self.a > 0:
            raise ConfigError("--a must be positive")
        if not self.b > 0:
            raise ConfigError("--b must be positive")
        if not self.times or any(t < 0 or not math.isfinite(t) for t in self.times):
            raise ConfigError("--times must be a nonempty list of non-negative numbers")
        self.times = sorted(float(t) for t in self.times)
        if self.potential is not None:
            try:
                PiecewisePotential.from_dict(self.potential)
            except ValueError as exc:
                raise ConfigError(str(exc)) from None
        parent = Path(self.out).resolve().parent
        if not (parent.is_dir() and os.access(parent, os.W_OK)):
            raise ConfigError(f"output directory {parent} is not writable")
        return self


def _stem(out: str) -> Path:
    p = Path(out)
    return p.with_suffix("") if p.suffix else p


# ---------------------------------------------------------------- commands

def _transmit(cfg: RunConfig):
    E = np.linspace(cfg.emin, cfg.emax, cfg.n)
    t, r = scattering.transmission_reflection(cfg.barrier(), E, cfg.params)
    write_csv(cfg.out, ("E", "T2", "R2"), zip(E, np.abs(t) ** 2, np.abs(r) ** 2))
    return f"{cfg.n} energies, max |t|^2 = {np.max(np.abs(t) ** 2):.6g}"


def _resonances(cfg: RunConfig):
    peaks = scattering.resonance_scan(cfg.barrier(), cfg.params, cfg.emin, cfg.emax, cfg.n)
    write_csv(cfg.out, ("E", "T2", "n_index"), ((p.energy, p.peak_T2, p.n_index) for p in peaks))
    return f"{len(peaks)} resonance peaks"


def _bound(cfg: RunConfig):
    states = bound_states.find_localized_states(cfg.v0, cfg.a, cfg.params)
    write_csv(cfg.out, ("n", "parity", "ReE", "ImE", "k", "q"),
              ((s.index, s.parity, s.energy.real, s.energy.imag, s.exterior_k, s.exterior_q)
               for s in states))
    return f"{len(states)} localized states"


def _critical(cfg: RunConfig):
    rows, failures = [], []
    for name, fn in (("critical_strength", scattering.critical_strength),
                     ("threshold_by_transmission", scattering.threshold_by_transmission)):
        try:
            rows.append((name, fn(cfg.u0, cfg.a, cfg.params), "ok"))
        except NumericalError as exc:
            rows.append((name, "nan", "no_root"))
            failures.append(f"{name}: {type(exc).__name__}: {exc}")
    write_csv(cfg.out, ("method", "V0", "status"), rows)
    if failures:
        raise NumericalError("; ".join(failures))
    return "critical strengths " + ", ".join(f"{r[0]}={r[1]:.6g}" for r in rows)


def _bands(cfg: RunConfig):
    cell, params = cfg.cell(), cfg.params
    K = np.linspace(0.0, math.pi / cell.width, cfg.kpoints)
    pts = bloch.band_solve_real(cell, params, K, (cfg.emin, cfg.emax), cfg.n)
    stat = [s.energy for s in bloch.stationary_points(cell, params, (cfg.emin, cfg.emax), cfg.n, pt=False)]
    for br in bloch.find_branch_points(cell, params, (cfg.emin, cfg.emax), max(cfg.n, 8000)):
        idx = 1 + sum(1 for s in stat if s < br.energy - 1e-6)
        Ks = bloch.bifurcated_K(cell, params, br, K)
        if Ks.size:
            pts += bloch.complex_band_from_branch(cell, params, br, Ks, band_index=idx)
    pts.sort(key=lambda p: (p.band_index, p.K, p.energy.real, p.energy.imag))
    write_csv(cfg.out, ("band", "K", "ReE", "ImE"),
              ((p.band_index, p.K, p.energy.real, p.energy.imag) for p in pts))
    return f"{len(pts)} band points"


def _branch(cfg: RunConfig):
    bps = bloch.find_branch_points(cfg.cell(), cfg.params, (cfg.emin, cfg.emax), max(cfg.n, 8000))
    write_csv(cfg.out, ("E", "absT", "theta", "n_half", "K_star"),
              ((b.energy, b.absT, b.theta, b.n_half, b.K_star) for b in bps))
    return f"{len(bps)} branch points"


def _packet(cfg: RunConfig):
    pk = wavepacket.GaussianPacket(cfg.x0, cfg.p0, cfg.b)
    fields = wavepacket.propagate_direct(pk, cfg.barrier(), cfg.params, cfg.times)
    stem = _stem(cfg.out)
    for f in fields:
        v = f.values
        write_csv(f"{stem}_t{f.time:g}.csv", ("x", "RePsi", "ImPsi", "AbsPsi2"),
                  zip(f.grid, v.real, v.imag, np.abs(v) ** 2))
    write_json(cfg.out, {"times": [f.time for f in fields], "norms": [f.norm for f in fields]})
    return f"{len(fields)} snapshots, final norm {fields[-1].norm:.6g}"


HANDLERS = {"transmit": _transmit, "resonances": _resonances, "bound": _bound,
            "critical": _critical, "bands": _bands, "branch": _branch, "packet": _packet}


# ---------------------------------------------------------------- entry point

def _times(text: str) -> list[float]:
    try:
        return [float(s) for s in text.split(",") if s.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad time list {text!r}") from None


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="nhqm", description=__doc__.split("\n")[0])
    ap.add_argument("command", nargs="?", choices=COMMANDS)
    for flag, typ in (("--v0", float), ("--a", float), ("--u0", float), ("--m", float),
                      ("--emin", float), ("--emax", float), ("--n", int), ("--kpoints", int),
                      ("--x0", float), ("--p0", float), ("--b", float), ("--times", _times),
                      ("--config", str), ("--out", str)):
        ap.add_argument(flag, type=typ, default=None)
    return ap


def resolve_config(ns: argparse.Namespace) -> RunConfig:
    doc = {}
    if ns.config:
        try:
            doc = json.loads(Path(ns.config).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {ns.config}: {exc}") from None
        if not isinstance(doc, dict):
            raise ConfigError("config must be a JSON object")
        known = {f.name for f in dataclasses.fields(RunConfig)}
        unknown = set(doc) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    for key, val in vars(ns).items():
        if key != "config" and val is not None:
            doc[key] = val
    if "command" not in doc:
        raise ConfigError("no command given")
    if "out" not in doc:
        raise ConfigError("--out is required")
    try:
        cfg = RunConfig(**doc)
    except TypeError as exc:
        raise ConfigError(str(exc)) from None
    return cfg.validate()


def main(argv=None) -> int:
    ns = build_parser().parse_args(argv)
    try:
        cfg = resolve_config(ns)
    except ConfigError as exc:
        print(f"nhqm: error: {exc}", file=sys.stderr)
        return 2
    write_json(f"{_stem(cfg.out)}.config.json", dataclasses.asdict(cfg))
    try:
        summary = HANDLERS[cfg.command](cfg)
    except NumericalError as exc:
        print(f"nhqm: numerical failure in {cfg.command}: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 3
    print(f"{cfg.command}: {summary} -> {cfg.out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
