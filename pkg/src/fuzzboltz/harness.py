"""Configuration parsing, sigma-sweep convergence studies, and rate fitting."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .dynamics import SimConfig, Trajectory, run
from .grid import l1_distance
from .io import format_float

__all__ = [
    "ConfigError",
    "parse_config",
    "DEFAULTS",
    "fit_rate",
    "run_sweep",
    "SweepReport",
    "sweep_report_lines",
]


class ConfigError(ValueError):
    """Config file problem; message names the offending key and line."""


def _parse_bool(s: str) -> bool:
    if s.lower() in ("true", "1", "yes", "on"):
        return True
    if s.lower() in ("false", "0", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {s!r}")


def _parse_float_list(s: str) -> tuple:
    s = s.strip()
    if not s:
        return ()
    return tuple(float(tok) for tok in s.split(","))


# key -> (type tag, default).  None default means "computed" or "unset".
DEFAULTS = {
    "grid.dx": ("int", 1),
    "grid.Lx": ("float", 1.0),
    "grid.Nx": ("int", 32),
    "grid.vmax": ("float", 6.0),
    "grid.Nv": ("int", 32),
    "grid.Nomega": ("int", 16),
    "kernel.mu": ("float", 0.0),
    "kernel.b_profile": ("str", "constant"),
    "kernel.b_value": ("float", 1.0 / (2.0 * math.pi)),
    "sim.mode": ("str", "fuzzy"),
    "sim.sigma": ("float", 0.4),
    "sim.K_images": ("int", 3),
    "sim.T_final": ("float", 1.0),
    "sim.dt": ("float", None),  # default from the cfl preview below
    "sim.cfl_eta": ("float", 0.5),
    "sim.output_stride": ("int", 1),
    "sim.seed": ("int", 0),
    "ic.id": ("str", "maxwellian"),
    "ic.rho": ("float", None),
    "ic.T": ("float", None),
    "ic.ux": ("float", None),
    "ic.uy": ("float", None),
    "ic.a": ("float", None),
    "ic.u0": ("float", None),
    "ic.v1_lo": ("float", None),
    "ic.v1_hi": ("float", None),
    "ic.v2_lo": ("float", None),
    "ic.v2_hi": ("float", None),
    "ic.mass": ("float", None),
    "ic.path": ("str", None),
    "diag.s_moments": ("floats", ()),
    "diag.dissipation": ("bool", False),
    "diag.dissipation_stride": ("int", 5),
}

_PARSERS = {
    "int": int,
    "float": float,
    "str": str,
    "bool": _parse_bool,
    "floats": _parse_float_list,
}


def _cfl_preview_dt(cfg: dict) -> float:
    """Default dt when none is given: cfl_eta over a loss-rate estimate.

    The estimate is 2*pi*supb*<2*vmax>^mu*rho with rho the nominal initial
    density (ic.rho or 1), then dt is shrunk so T_final is an integer
    number of steps.
    """
    supb = cfg["kernel.b_value"]
    if cfg["kernel.b_profile"] == "cosine_squared":
        supb = 2.0 * supb
    rho = cfg["ic.rho"] if cfg["ic.rho"] is not None else 1.0
    bracket = (1.0 + (2.0 * cfg["grid.vmax"]) ** 2) ** (cfg["kernel.mu"] / 2.0)
    l_est = 2.0 * math.pi * supb * bracket * max(rho, 1e-12)
    dt = cfg["sim.cfl_eta"] / l_est
    T = cfg["sim.T_final"]
    if T > 0:
        n = max(1, math.ceil(T / dt))
        dt = T / n
    return dt


def parse_config(path) -> SimConfig:
    """Parse the flat key=value config format into a validated SimConfig.

    Lines are `section.key = value` with `#` comments; unknown keys,
    duplicate keys, and type mismatches are errors naming the key and line.
    """
    p = Path(path)
    if not p.exists():
        raise ConfigError(f"config file not found: {path}")
    seen: dict = {}
    values = {k: d for k, (_t, d) in DEFAULTS.items()}
    for lineno, raw in enumerate(p.read_text().splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected key=value, got {raw!r}")
        key, _, val = line.partition("=")
        key = key.strip()
        val = val.strip()
        if key not in DEFAULTS:
            raise ConfigError(f"{path}:{lineno}: unknown key {key!r}")
        if key in seen:
            raise ConfigError(
                f"{path}:{lineno}: duplicate key {key!r} (first seen on line {seen[key]})"
            )
        seen[key] = lineno
        ttag = DEFAULTS[key][0]
        try:
            values[key] = _PARSERS[ttag](val)
        except ValueError:
            raise ConfigError(
                f"{path}:{lineno}: key {key!r} expects a {ttag}, got {val!r}"
            ) from None

    if values["sim.mode"] == "fuzzy" and values["sim.sigma"] == 0.0:
        line = seen.get("sim.sigma", "?")
        raise ConfigError(
            f"{path}:{line}: sim.sigma = 0 is invalid; use mode=local for the classical limit"
        )

    if values["sim.dt"] is None:
        values["sim.dt"] = _cfl_preview_dt(values)

    ic_params = {}
    for key, val in values.items():
        if key.startswith("ic.") and key != "ic.id" and val is not None:
            ic_params[key[3:]] = val

    cfg = SimConfig(
        dx=values["grid.dx"],
        Lx=values["grid.Lx"],
        Nx=values["grid.Nx"],
        vmax=values["grid.vmax"],
        Nv=values["grid.Nv"],
        Nomega=values["grid.Nomega"],
        mu=values["kernel.mu"],
        b_profile=values["kernel.b_profile"],
        b_value=values["kernel.b_value"],
        mode=values["sim.mode"],
        sigma=values["sim.sigma"] if values["sim.mode"] == "fuzzy" else None,
        K_images=values["sim.K_images"],
        ic_id=values["ic.id"],
        ic_params=ic_params,
        T_final=values["sim.T_final"],
        dt=values["sim.dt"],
        cfl_eta=values["sim.cfl_eta"],
        output_stride=values["sim.output_stride"],
        seed=values["sim.seed"],
        s_moments=values["diag.s_moments"],
        dissipation=values["diag.dissipation"],
        dissipation_stride=values["diag.dissipation_stride"],
    )
    try:
        cfg.validate()
    except ValueError as e:
        raise ConfigError(f"{path}: {e}") from None
    return cfg


def fit_rate(distances, sigmas):
    """Least-squares slope of log(distance) vs log(sigma) and its R^2.

    Zero distances are excluded (flagged by the caller); fewer than two
    usable points yields (nan, nan).
    """
    d = np.asarray(distances, dtype=np.float64)
    s = np.asarray(sigmas, dtype=np.float64)
    if np.any(d < 0):
        raise ValueError("distances must be nonnegative")
    keep = d > 0
    if keep.sum() < 2:
        return float("nan"), float("nan")
    ld = np.log(d[keep])
    ls = np.log(s[keep])
    slope, intercept = np.polyfit(ls, ld, 1)
    pred = slope * ls + intercept
    ss_res = float(((ld - pred) ** 2).sum())
    ss_tot = float(((ld - ld.mean()) ** 2).sum())
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else 1.0
    return float(slope), float(r2)


def _vavg_distance(fa, fb, phi) -> float:
    """sum_x |sum_v (fa - fb) phi(v) dv^2| dx^dx for a velocity test phi."""
    g = fa.grid
    diff = (fa.values - fb.values) @ phi * g.wv
    return float(np.abs(diff).sum()) * g.wx


@dataclass
class SweepReport:
    sigma_list: tuple
    sup_l1: tuple
    final_l1: tuple
    vavg_l1: tuple  # max over the two velocity averages, sup over time
    p_hat: float
    r_squared: float
    flags: tuple
    reference: str


def run_sweep(base_config: SimConfig, sigma_list, threads: int | None = None) -> SweepReport:
    """Classical reference once, one fuzzy run per sigma, distance tables.

    All runs share the grid, initial condition, and timestep; only sigma
    varies.  Snapshots are compared at every snapshot time.
    """
    sig = tuple(float(s) for s in sigma_list)
    if not sig:
        raise ValueError("sigma_list must be nonempty")
    for s in sig:
        if not 0.0 < s <= 1.0:
            raise ValueError(f"sigma values must lie in (0, 1], got {s}")
    if any(b >= a for a, b in zip(sig, sig[1:])):
        raise ValueError("sigma_list must be strictly decreasing")

    from dataclasses import replace

    ref_cfg = replace(base_config, mode="local", sigma=None)
    ref = run(ref_cfg, threads=threads)

    g = ref.snapshots[0].grid
    phi_decay = 1.0 / (1.0 + g.vsq)  # <v>^-2
    phi_one = np.ones(g.n_vcells)

    sup_l1 = []
    final_l1 = []
    vavg = []
    flags = []
    for s in sig:
        cfg = replace(base_config, mode="fuzzy", sigma=s)
        traj = run(cfg, threads=threads)
        if len(traj.snapshots) != len(ref.snapshots):
            raise RuntimeError("sweep runs produced mismatched snapshot counts")
        dists = [
            l1_distance(a, b) for a, b in zip(traj.snapshots, ref.snapshots)
        ]
        va = max(
            max(_vavg_distance(a, b, phi_decay) for a, b in zip(traj.snapshots, ref.snapshots)),
            max(_vavg_distance(a, b, phi_one) for a, b in zip(traj.snapshots, ref.snapshots)),
        )
        sup_l1.append(max(dists))
        final_l1.append(dists[-1])
        vavg.append(va)

    if len(sig) < 2:
        p_hat, r2 = float("nan"), float("nan")
        flags.append("single-sigma: rate undefined")
    else:
        if any(d == 0.0 for d in sup_l1):
            flags.append("zero distances excluded from rate fit")
        p_hat, r2 = fit_rate(sup_l1, sig)
        if math.isnan(p_hat):
            flags.append("rate fit degenerate")

    return SweepReport(
        sigma_list=sig,
        sup_l1=tuple(sup_l1),
        final_l1=tuple(final_l1),
        vavg_l1=tuple(vavg),
        p_hat=p_hat,
        r_squared=r2,
        flags=tuple(flags),
        reference=f"local reference: {ref_cfg!r}",
    )


def sweep_report_lines(report: SweepReport) -> list:
    """CSV lines: per-sigma rows plus p_hat / r_squared footer rows."""
    lines = ["sigma,sup_l1,final_l1,vavg_l1"]
    for s, a, b, c in zip(report.sigma_list, report.sup_l1, report.final_l1, report.vavg_l1):
        lines.append(
            ",".join([format_float(s), format_float(a), format_float(b), format_float(c)])
        )
    lines.append(f"p_hat,{format_float(report.p_hat)}")
    lines.append(f"r_squared,{format_float(report.r_squared)}")
    return lines
