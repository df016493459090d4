"""Command-line interface.

Subcommands: run, sweep, diag, oracle, residual.  Exit codes: 0 success,
1 validation error, 2 numerical abort / oracle mismatch.
"""
from __future__ import annotations

import argparse
import math
import sys
from pathlib import Path

import numpy as np

from .diagnostics import dissipation, entropy, moment_s, renorm_residual
from .dynamics import DynamicsError, SimConfig, run
from .grid import DistributionFunction, GridError, moments
from .harness import ConfigError, parse_config, run_sweep, sweep_report_lines
from .io import format_float, read_snapshot, write_diagnostics_csv, write_snapshot
from .kernels import KernelError

GAIN_TOL = 1e-12
DISS_TOL = 1e-10


def _build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="fuzzboltz", description=__doc__)
    ap.add_argument("--threads", type=int, default=None, help="numba thread count")
    sub = ap.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="single trajectory from a config file")
    p_run.add_argument("config")
    p_run.add_argument("--out", default=None, help="output directory")

    p_sweep = sub.add_parser("sweep", help="sigma-sweep against the local reference")
    p_sweep.add_argument("config")
    p_sweep.add_argument("--sigmas", required=True, help="comma list, strictly decreasing")
    p_sweep.add_argument("--out", default=None)

    p_diag = sub.add_parser("diag", help="diagnostics of a snapshot file")
    p_diag.add_argument("snapshot")
    p_diag.add_argument("--dissipation", action="store_true")
    p_diag.add_argument("--moments", default="", help="comma list of |v|^s orders")
    p_diag.add_argument("--config", default=None, help="kernel/sigma parameters for D")

    p_oracle = sub.add_parser("oracle", help="tiny-grid brute-force cross-check")
    p_oracle.add_argument("config")

    p_res = sub.add_parser("residual", help="renormalised weak-form residual table")
    p_res.add_argument("config")
    p_res.add_argument("--alpha", type=float, required=True)
    p_res.add_argument("--out", default=None)
    return ap


def _outdir(arg, config_path, suffix) -> Path:
    if arg is not None:
        out = Path(arg)
    else:
        out = Path(config_path).parent / (Path(config_path).stem + suffix)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _cmd_run(args) -> int:
    cfg = parse_config(args.config)
    out = _outdir(args.out, args.config, "_out")
    traj = run(cfg, threads=args.threads)
    for t, f in zip(traj.snapshot_times, traj.snapshots):
        step = int(round(t / cfg.dt)) if cfg.dt > 0 else 0
        write_snapshot(out / f"snap_{step:06d}.fbz", f, t)
    write_diagnostics_csv(out / "diagnostics.csv", traj.records, cfg.s_moments)
    last = traj.records[-1]
    print(f"run complete: {len(traj.records) - 1} steps to t={format_float(last.t)}")
    print(f"final mass={format_float(last.mass)} energy={format_float(last.energy)} H={format_float(last.H)}")
    print(f"outputs in {out}")
    return 0


def _cmd_sweep(args) -> int:
    cfg = parse_config(args.config)
    sigmas = [float(s) for s in args.sigmas.split(",") if s.strip()]
    out = _outdir(args.out, args.config, "_sweep")
    report = run_sweep(cfg, sigmas, threads=args.threads)
    lines = sweep_report_lines(report)
    (out / "report.csv").write_text("\n".join(lines) + "\n")
    summary = ["sigma sweep vs local reference", report.reference]
    for s, a, b, c in zip(report.sigma_list, report.sup_l1, report.final_l1, report.vavg_l1):
        summary.append(
            f"  sigma={s:g}: sup_t L1={a:.6e} final L1={b:.6e} vavg={c:.6e}"
        )
    summary.append(f"  fitted order p_hat={report.p_hat:.4f} (R^2={report.r_squared:.4f})")
    for fl in report.flags:
        summary.append(f"  flag: {fl}")
    (out / "summary.txt").write_text("\n".join(summary) + "\n")
    print("\n".join(summary))
    print(f"report in {out}")
    return 0


def _cmd_diag(args) -> int:
    f, t = read_snapshot(args.snapshot)
    m = moments(f, t)
    print(f"t={format_float(t)}")
    print(
        f"mass={format_float(m.mass)} px={format_float(m.momentum[0])} "
        f"py={format_float(m.momentum[1])} energy={format_float(m.energy)}"
    )
    print(f"H={format_float(entropy(f))}")
    for tok in args.moments.split(","):
        tok = tok.strip()
        if tok:
            s = float(tok)
            print(f"M_{tok}={format_float(moment_s(f, s))}")
    if args.dissipation:
        if args.config is not None:
            cfg = parse_config(args.config)
            spec = cfg.build_kernel()
            sk = cfg.build_spatial(f.grid)
        else:
            spec = SimConfig().build_kernel()  # mu=0, b = 1/(2*pi)
            sk = None
        D = dissipation(f, spec, sk)
        print(f"D={format_float(D)}")
    return 0


def _cmd_oracle(args) -> int:
    from . import oracle as orc
    from .collision import loss_rate as fast_loss, q_gain as fast_gain
    from .diagnostics import h_field
    from .kernels import convolve_x

    cfg = parse_config(args.config)
    g = cfg.build_grid()
    if not orc.grid_is_tiny(g):
        print(
            f"grid too large for the oracle: Nx^dx*Nv^2*Nomega = "
            f"{g.n_xcells * g.n_vcells * g.Nomega} > 2^15",
            file=sys.stderr,
        )
        return 1
    spec = cfg.build_kernel()
    sk = cfg.build_spatial(g)

    rng = np.random.default_rng(cfg.seed)
    f = DistributionFunction(g, rng.random((g.n_xcells, g.n_vcells)))
    ff = convolve_x(f, sk) if sk is not None else f

    dev_gain = float(np.abs(fast_gain(f, ff, spec) - orc.brute_gain(f, ff, spec)).max())
    dev_loss = float(np.abs(fast_loss(ff, spec) - orc.brute_loss_rate(ff, spec)).max())
    D_fast = 0.25 * float(h_field(f, spec, sk).sum()) * g.wx * g.wv
    D_brute = orc.brute_dissipation(f, spec, sk)
    dev_d = abs(D_fast - D_brute)
    print(f"max |gain - oracle|     = {dev_gain:.3e} (tol {GAIN_TOL:g})")
    print(f"max |loss - oracle|     = {dev_loss:.3e} (tol {GAIN_TOL:g})")
    print(f"|dissipation - oracle|  = {dev_d:.3e} (tol {DISS_TOL:g})")
    ok = dev_gain <= GAIN_TOL and dev_loss <= GAIN_TOL and dev_d <= DISS_TOL
    print("oracle check:", "PASS" if ok else "FAIL")
    return 0 if ok else 2


def _cmd_residual(args) -> int:
    from dataclasses import replace

    cfg = parse_config(args.config)
    if args.alpha <= 0:
        print("alpha must be positive", file=sys.stderr)
        return 1
    cfg = replace(cfg, output_stride=1)
    out = _outdir(args.out, args.config, "_residual")
    traj = run(cfg, threads=args.threads)
    spec = cfg.build_kernel()
    sk = cfg.build_spatial(traj.snapshots[0].grid)
    table = renorm_residual(traj, spec, sk, args.alpha)
    lines = ["phi,residual"]
    for name, val in table.items():
        print(f"R[{name}] = {val: .6e}")
        lines.append(f"{name},{format_float(val)}")
    rmax = max(abs(v) for v in table.values())
    print(f"max |R| = {rmax:.6e}")
    (out / f"residual_alpha{args.alpha:g}.csv").write_text("\n".join(lines) + "\n")
    return 0


def main(argv=None) -> int:
    ap = _build_parser()
    args = ap.parse_args(argv)
    if args.threads is not None:
        import numba

        numba.set_num_threads(args.threads)
    try:
        if args.command == "run":
            return _cmd_run(args)
        if args.command == "sweep":
            return _cmd_sweep(args)
        if args.command == "diag":
            return _cmd_diag(args)
        if args.command == "oracle":
            return _cmd_oracle(args)
        if args.command == "residual":
            return _cmd_residual(args)
        raise AssertionError("unreachable")
    except (ConfigError, GridError, KernelError, FileNotFoundError, ValueError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    except DynamicsError as e:
        print(f"numerical abort: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
