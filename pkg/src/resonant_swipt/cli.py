"""Command-line entry point.

Exit codes: 0 success, 1 usage/config error, 2 a link did not converge,
3 frequency-plan conflicts.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import os
import sys
import time
from datetime import datetime, timezone
from pathlib import Path

from . import __version__
from .experiments import (array_size_sweep, bs_position_sweep, distance_sweep, fmt, scenario_hash,
                          symmetric_variant, write_sweep)
from .fieldmap import normalize_map, parse_custom_plane, preset_plane, scenario_map, write_map
from .freqplan import NoDividerSolution, solve_divider_product, validate_fdma_plan
from .geometry import check_retro_condition
from .metrics import scenario_metrics
from .oracle import steady_state_mode
from .resonance import ResonanceEngine
from .scenario import Scenario, ScenarioError, default_two_ue_scenario, load_scenario

EXIT_OK, EXIT_ERROR, EXIT_NOT_CONVERGED, EXIT_CONFLICT = 0, 1, 2, 3
OUT_ENV = "RESONANT_SWIPT_OUT"

TRACE_COLUMNS = ("iter", "p_bs_tx_w", "p_ue_rx_w", "p_ue_tx_w", "p_bs_rx_w", "loss", "gain", "g_pa_db", "converged")


class UsageError(Exception):
    pass


def _load(path: str) -> Scenario:
    """Scenario from a JSON file, or ``default`` / ``default:N`` for the built-in N x N setup."""
    if path == "default" or path.startswith("default:"):
        n = int(path.split(":", 1)[1]) if ":" in path else 16
        return default_two_ue_scenario(n)
    return load_scenario(path)


def _default_out() -> str:
    return os.environ.get(OUT_ENV, "out")


def _override(s: Scenario, args) -> Scenario:
    changes = {}
    if getattr(args, "seed", None) is not None:
        changes["init_seed"] = args.seed
    if getattr(args, "max_iters", None) is not None:
        changes["max_iters"] = args.max_iters
    if getattr(args, "init_phase", None) is not None:
        changes["init_phase"] = args.init_phase
    return s.with_control(**changes) if changes else s


def write_trace(trace, path: Path) -> Path:
    with path.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(TRACE_COLUMNS)
        for r in trace.records:
            w.writerow([r.iteration, fmt(r.p_bs_tx), fmt(r.p_ue_rx), fmt(r.p_ue_tx), fmt(r.p_bs_rx),
                        fmt(r.loss), fmt(r.gain), fmt(r.g_pa_db), int(r.converged)])
    return path


def _jsonable(v):
    if isinstance(v, float) and not math.isfinite(v):
        return str(v)
    return v


def write_manifest(out_dir: Path, s: Scenario, argv, files, t0: float) -> Path:
    files = [str(Path(f).relative_to(out_dir)) if Path(f).is_relative_to(out_dir) else str(f) for f in files]
    manifest = {
        "scenario_hash": scenario_hash(s),
        "seed": s.control.init_seed,
        "tool_version": __version__,
        "command_line": list(argv),
        "files": files,
        "wall_clock_s": time.perf_counter() - t0,
        "timestamp": datetime.now(timezone.utc).isoformat(),
    }
    p = out_dir / "manifest.json"
    p.write_text(json.dumps(manifest, indent=2))
    return p


def cmd_simulate(args, argv) -> int:
    t0 = time.perf_counter()
    s = _override(_load(args.scenario), args)
    out = Path(args.out or _default_out())
    out.mkdir(parents=True, exist_ok=True)
    engine = ResonanceEngine(s)
    traces = engine.run()
    metrics = scenario_metrics(s, traces)
    files = [write_trace(t, out / f"link_{k}_trace.csv") for k, t in traces.items()]
    summary = {"links": {}}
    for k, t in traces.items():
        m = metrics[k]
        f = t.final
        summary["links"][str(k)] = {
            "converged": t.converged,
            "iterations_to_converge": t.iterations_to_converge,
            "iterations_run": len(t.records),
            "steady_loss": f.loss,
            "p_bs_tx_w": f.p_bs_tx, "p_ue_rx_w": f.p_ue_rx, "p_ue_tx_w": f.p_ue_tx, "p_bs_rx_w": f.p_bs_rx,
            "eta_dl": m.eta_dl, "eta_ul": m.eta_ul,
            "snr_dl_db": _jsonable(m.snr_dl_db), "snr_ul_db": _jsonable(m.snr_ul_db),
            "se_dl": m.se_dl, "se_ul": m.se_ul, "p_harvested_w": m.p_harvested,
        }
    metrics_path = out / "metrics.txt"
    metrics_path.write_text(json.dumps(summary, indent=2))
    files.append(metrics_path)
    write_manifest(out, s, argv, files, t0)
    for k, t in traces.items():
        state = f"converged at I={t.iterations_to_converge}" if t.converged else "NOT converged"
        print(f"link {k}: {state}, L={t.final.loss:.6g}, eta_dl={metrics[k].eta_dl:.4f}")
    return EXIT_OK if all(t.converged for t in traces.values()) else EXIT_NOT_CONVERGED


def _plane(s, args):
    n_u, n_v = args.grid
    if n_u < 2 or n_v < 2:
        raise UsageError("--grid counts must be >= 2")
    if args.plane in ("xoz", "xoy-ue", "xoy-bs"):
        return preset_plane(s, args.plane, n_u, n_v)
    if args.plane.startswith("custom:"):
        return parse_custom_plane(args.plane[len("custom:"):], n_u, n_v)
    raise UsageError(f"unknown plane {args.plane!r}")


def cmd_fieldmap(args, argv) -> int:
    t0 = time.perf_counter()
    s = _override(_load(args.scenario), args)
    grid = _plane(s, args)
    direction = args.direction or ("UL" if args.plane == "xoy-bs" else "DL")
    engine = ResonanceEngine(s)
    traces = engine.run(keep_history=True)
    link_ids = [args.link] if args.link is not None else list(engine.links)
    for k in link_ids:
        if k not in engine.links:
            raise UsageError(f"no link {k} in scenario")
    iters = []
    for a in args.at_iteration:
        if a == "steady":
            iters.append(None)
            continue
        i = int(a)
        n = min(len(traces[k].records) for k in link_ids)
        if i < 1 or i > n:
            raise UsageError(f"iteration {i} beyond trace length {n}")
        iters.append(i)
    maps = [scenario_map(s, engine.links, traces, grid, direction, i, link_ids) for i in iters]
    ref = max(float(m.values.max()) for m in maps) if args.global_norm else None
    out = Path(args.out)
    files = []
    for i, m in zip(iters, maps):
        if not args.raw:
            m = normalize_map(m, ref)
        tag = "steady" if i is None else f"iter{i}"
        path = out if len(maps) == 1 else out.with_name(f"{out.stem}_{tag}{out.suffix or '.csv'}")
        files += write_map(m, path, binary=args.binary,
                           extra={"iteration": tag, "direction": direction, "links": link_ids})
        print(f"{path}: peak-to-mean {m.peak_to_mean():.4g}")
    write_manifest(out.parent, s, argv, files, t0)
    return EXIT_OK


def cmd_sweep(args, argv) -> int:
    t0 = time.perf_counter()
    s = _override(_load(args.scenario), args)
    if args.symmetric:
        s = symmetric_variant(s)
    if args.kind == "distance":
        res = distance_sweep(s, [float(v) for v in args.values], workers=args.workers)
    elif args.kind == "array":
        sizes = []
        for v in args.values:
            r, _, c = v.lower().partition("x")
            sizes.append((int(r), int(c or r)))
        res = array_size_sweep(s, sizes, workers=args.workers)
    elif args.kind == "bs-position":
        res = bs_position_sweep(s, [float(v) for v in args.values], args.z_ue, workers=args.workers)
    else:
        raise UsageError(f"unknown sweep kind {args.kind!r}")
    out = Path(args.out or _default_out())
    path = out / "sweeps" / f"{args.kind}.csv"
    files = write_sweep(res, path, " ".join(argv))
    write_manifest(out, s, argv, files, t0)
    tcol = "time_literal" if args.time_model == "literal" else "time_physical"
    for p in res.points:
        print(f"{args.kind}={p.value}: total_eta={p.total_efficiency:.6g} T={getattr(p, tcol):.6g} s")
    return EXIT_OK if all(p.converged for p in res.points) else EXIT_NOT_CONVERGED


def cmd_freqplan(args, argv) -> int:
    if args.scenario:
        s = _load(args.scenario)
        plan, c = s.plan, s.constants.c
        bw = args.bandwidth if args.bandwidth is not None else plan.bandwidth
        print("retro-direction residuals:")
        for e in plan.entries:
            ue = s.ue(e.link_id)
            bs_chk = check_retro_condition(s.bs.rx_array.spacing, s.bs.tx_array.spacing, c / e.f_ul, c / e.f_dl)
            ue_chk = check_retro_condition(ue.rx_array.spacing, ue.tx_array.spacing, c / e.f_dl, c / e.f_ul)
            print(f"  link {e.link_id} BS residual={bs_chk.residual:.3e} ({'ok' if bs_chk.passed else 'FAIL'})"
                  f"  UE residual={ue_chk.residual:.3e} ({'ok' if ue_chk.passed else 'FAIL'})")
    else:
        from .scenario import FrequencyPlan, PlanEntry

        if not args.link:
            raise UsageError("give a scenario or at least one --link F_DL,F_UL")
        entries = []
        for i, spec in enumerate(args.link, start=1):
            f_dl, f_ul = (float(x) for x in spec.split(","))
            entries.append(PlanEntry(i, f_dl, f_ul))
        bw = args.bandwidth if args.bandwidth is not None else 1e9
        plan = FrequencyPlan(tuple(entries), bw)
    report = validate_fdma_plan(plan, bw)
    print(f"sub-bands (B = {bw:g} Hz):")
    for b in report.bands:
        print(f"  {b.name}: [{b.low:.6g}, {b.high:.6g}] Hz")
    if report.overlaps:
        print("overlapping pairs:")
        for a, b in report.overlaps:
            print(f"  {a} <-> {b}")
    else:
        print("no overlaps")
    print(f"divider suggestions (f_ref = {args.f_ref:g} Hz):")
    for e in plan.entries:
        try:
            sol = solve_divider_product(e.f_dl, e.f_ul, 0.0, 0.0, args.f_ref)
            print(f"  link {e.link_id}: N1/N2 = {sol.n1}/{sol.n2} (error {sol.error_hz:.3g} Hz)")
        except NoDividerSolution as err:
            print(f"  link {e.link_id}: {err}")
    return EXIT_CONFLICT if report.overlaps else EXIT_OK


def cmd_oracle(args, argv) -> int:
    s = _load(args.scenario)
    engine = ResonanceEngine(s)
    ids = [args.link] if args.link is not None else list(engine.links)
    out = {}
    for k in ids:
        if k not in engine.links:
            raise UsageError(f"no link {k} in scenario")
        ln = engine.links[k]
        p = steady_state_mode(ln.h_dl, ln.h_ul, ln.alpha, ln.gamma)
        out[str(k)] = {"dominant_loss": p.dominant_loss, "gap": p.gap, "degenerate": p.degenerate,
                       "eigenvalue": [p.eigenvalue.real, p.eigenvalue.imag], "bs_elements": len(p.bs_mode)}
    print(json.dumps(out, indent=2))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="resonant-swipt", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=__version__)
    sub = ap.add_subparsers(dest="command", required=True)

    def scen(p):
        p.add_argument("scenario", help="scenario JSON file, or 'default' / 'default:N'")

    p = sub.add_parser("simulate", help="run the resonance loop and write traces")
    scen(p)
    p.add_argument("--out", help=f"output directory (default ${OUT_ENV} or ./out)")
    p.add_argument("--seed", type=int)
    p.add_argument("--max-iters", type=int)
    p.add_argument("--init-phase", choices=("random", "zero"))
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("fieldmap", help="sample power density on a plane")
    scen(p)
    p.add_argument("out", help="output CSV path")
    p.add_argument("--plane", default="xoy-ue",
                   help="xoz | xoy-ue | xoy-bs | custom:cx,cy,cz,ux,uy,uz,vx,vy,vz,eu,ev")
    p.add_argument("--at-iteration", nargs="+", default=["steady"], help="iteration numbers and/or 'steady'")
    p.add_argument("--grid", nargs=2, type=int, default=(201, 101), metavar=("N_U", "N_V"))
    p.add_argument("--direction", choices=("DL", "UL"))
    p.add_argument("--link", type=int)
    p.add_argument("--global-norm", action="store_true", help="one normalization across all requested frames")
    p.add_argument("--raw", action="store_true", help="write W/m^2 without normalization")
    p.add_argument("--binary", action="store_true", help="also write a float64 dump")
    p.add_argument("--seed", type=int)
    p.add_argument("--max-iters", type=int)
    p.add_argument("--init-phase", choices=("random", "zero"))
    p.set_defaults(func=cmd_fieldmap)

    p = sub.add_parser("sweep", help="distance, array-size or BS-position sweep")
    scen(p)
    p.add_argument("--kind", required=True, help="distance | array | bs-position")
    p.add_argument("--values", nargs="+", required=True)
    p.add_argument("--time-model", choices=("literal", "physical"), default="literal")
    p.add_argument("--z-ue", type=float, default=3.0)
    p.add_argument("--symmetric", action="store_true", help="put every UE on the last UE's bands")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--out")
    p.add_argument("--seed", type=int)
    p.add_argument("--max-iters", type=int)
    p.add_argument("--init-phase", choices=("random", "zero"))
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("freqplan", help="retro-condition, FDMA overlap and divider report")
    p.add_argument("scenario", nargs="?")
    p.add_argument("--link", action="append", metavar="F_DL,F_UL")
    p.add_argument("--bandwidth", type=float)
    p.add_argument("--f-ref", type=float, default=100e6)
    p.set_defaults(func=cmd_freqplan)

    p = sub.add_parser("oracle", help="dense eigen-solve of the round-trip operator")
    scen(p)
    p.add_argument("--link", type=int)
    p.set_defaults(func=cmd_oracle)
    return ap


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as e:
        return EXIT_ERROR if e.code else EXIT_OK
    try:
        return args.func(args, ["resonant-swipt", *argv])
    except (ScenarioError, UsageError, ValueError, OSError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
