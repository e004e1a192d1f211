"""Command-line entry point.

Exit codes: 0 success, 1 verification failure, 2 usage or input error.
Every subcommand that writes to ``--out`` also writes ``manifest.json`` there;
``noonbound replay <manifest>`` re-runs it and reproduces the files exactly.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from pathlib import Path

import numpy as np

from . import __version__
from . import bounds, fockspace, montecarlo, optimize
from .core import LossProfile, Scenario, ScenarioError, WeightVector

EXIT_OK, EXIT_VERIFY_FAILED, EXIT_USAGE = 0, 1, 2
FIGURES = ("fig2", "fig3", "fig4", "fig6", "fig7")
FIG_HEADERS = {
    "fig2": ["gamma_ref", "gamma", "rqa_humphreys", "rqa_optimal"],
    "fig3": ["gamma", "qcrb_optimal", "qcrb_humphreys", "qcrb_balanced", "sql"],
    "fig4": ["N", "d", "gamma_crit_humphreys", "gamma_crit_optimal"],
    "fig6": ["gamma", "crb_mesh_for_qcrb_state", "crb_joint", "qcrb", "sql"],
}
VERIFY_MAX_DIM = 200


class UsageError(Exception):
    pass


def _float_list(text: str) -> list[float]:
    try:
        vals = [float(x) for x in text.split(",") if x.strip() != ""]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None
    if not vals:
        raise argparse.ArgumentTypeError("empty list")
    return vals


def _warn(msg: str) -> None:
    print(f"warning: {msg}", file=sys.stderr)


# -- scenario resolution -----------------------------------------------------

def _add_scenario_flags(p: argparse.ArgumentParser, need_gamma: bool = True) -> None:
    p.add_argument("--scenario", type=Path, help="scenario JSON file (wins over flags on conflict)")
    p.add_argument("--n", type=int, dest="n_photons", help="photon number N")
    p.add_argument("--d", type=int, dest="n_phases", help="number of phases d (modes = d+1)")
    p.add_argument("--gamma", type=_float_list, help="loss rates gamma_0..gamma_d, comma separated")
    p.add_argument("--phases", type=_float_list, help="evaluation phases phi_1..phi_d (radians)")
    p.add_argument("--repetitions", type=int, help="number of repetitions mu")


def resolve_scenario(args) -> Scenario:
    flags = {
        "n_photons": args.n_photons,
        "n_phases": args.n_phases,
        "gamma": args.gamma,
        "phases": args.phases,
        "repetitions": args.repetitions,
    }
    data = {}
    if args.scenario is not None:
        try:
            data = json.loads(args.scenario.read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ScenarioError(f"cannot read scenario file {args.scenario}: {exc}") from None
        if not isinstance(data, dict):
            raise ScenarioError("scenario JSON must be an object")
        for key, val in flags.items():
            if val is not None and key in data and data[key] != val:
                _warn(f"--{key} = {val!r} conflicts with scenario file value {data[key]!r}; using the file")
    merged = {k: v for k, v in flags.items() if v is not None}
    merged.update(data)
    if "gamma" not in merged:
        raise ScenarioError("no loss profile given (use --gamma or --scenario)")
    if "n_photons" not in merged:
        raise ScenarioError("no photon number given (use --n or --scenario)")
    merged.setdefault("n_phases", len(merged["gamma"]) - 1)
    return Scenario.from_dict(merged)


# -- manifest ----------------------------------------------------------------

def _write_outputs(out: Path | None, files: dict[str, str], argv: list[str], command: str,
                   config: dict, seed: int | None) -> None:
    if out is None:
        return
    out.mkdir(parents=True, exist_ok=True)
    for name, text in files.items():
        (out / name).write_text(text)
    manifest = {
        "subcommand": command,
        "argv": argv,
        "config": config,
        "seed": seed,
        "version": __version__,
        "outputs": sorted(files),
    }
    (out / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")


def _csv(header: list[str], rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([repr(float(x)) if isinstance(x, (float, np.floating)) else x for x in row])
    return buf.getvalue()


def _config(args) -> dict:
    out = {}
    for k, v in vars(args).items():
        if k in ("func",):
            continue
        out[k] = str(v) if isinstance(v, Path) else v
    return out


# -- subcommands -------------------------------------------------------------

def _safe(fn, *a):
    try:
        return fn(*a)
    except ValueError:
        return None


def cmd_bounds(args, argv) -> int:
    s = resolve_scenario(args)
    report = bounds.quantum_advantage(s, "optimal")
    custom = None
    if args.weights is not None:
        custom = WeightVector.normalized(args.weights)
        if len(custom) != s.n_phases + 1:
            raise ScenarioError(f"expected d+1={s.n_phases + 1} custom weights, got {len(custom)}")
    result = {
        "scenario": s.to_dict(),
        "qcrb_optimal": report.qcrb_noon,
        "qcrb_humphreys": _safe(bounds.qcrb_noon, s, bounds.humphreys_weights(s.n_phases)),
        "qcrb_balanced": _safe(bounds.qcrb_noon, s, bounds.balanced_weights(s.n_phases)),
        "sql": report.sql_coherent,
        "r_qa": report.advantage,
        "optimal_weights": list(report.weights_used.p),
        "coherent_weights": list(bounds.coherent_optimal_weights(s).p),
    }
    hq = result["qcrb_humphreys"]
    result["r_qa_humphreys"] = None if hq is None else 1.0 - hq / report.sql_coherent
    if custom is not None:
        result["qcrb_custom"] = bounds.qcrb_noon(s, custom)
        result["custom_weights"] = list(custom.p)
    mu = s.repetitions
    result["over_repetitions"] = {k: result[k] / mu for k in
                                  ("qcrb_optimal", "qcrb_humphreys", "qcrb_balanced", "sql", "qcrb_custom")
                                  if result.get(k) is not None}
    text = json.dumps(result, indent=2)
    print(text)
    _write_outputs(args.out, {"bounds.json": text + "\n"}, argv, "bounds", _config(args), None)
    return EXIT_OK


def cmd_crit(args, argv) -> int:
    schemes = [args.scheme] if args.scheme else ["humphreys", "optimal"]
    res = {"N": args.n_photons, "d": args.n_phases, "gamma_ref": args.gamma_ref}
    for sch in schemes:
        res[f"gamma_crit_{sch}"] = bounds.critical_loss(args.n_photons, args.n_phases, args.gamma_ref, sch)
    text = json.dumps(res, indent=2)
    print(text)
    _write_outputs(args.out, {"crit.json": text + "\n"}, argv, "crit", _config(args), None)
    return EXIT_OK


def _grid(lo: float, hi: float, points: int) -> np.ndarray:
    if points < 1:
        raise ScenarioError("--points must be >= 1")
    return np.linspace(lo, hi, points)


def figure_rows(args) -> dict[str, str]:
    name = args.name
    n, d = args.n_photons or 2, args.n_phases
    if name == "fig2":
        d = d or 2
        g = _grid(0.0, 0.9 if args.gamma_max is None else args.gamma_max, args.points)
        rows = []
        for gr in g:
            for gm in g:
                rows.append((gr, gm, bounds.advantage_split(n, d, gr, gm, "humphreys"),
                             bounds.advantage_split(n, d, gr, gm, "optimal")))
        return {"fig2.csv": _csv(FIG_HEADERS["fig2"], rows)}
    if name == "fig3":
        d = d or 2
        rows = []
        for gm in _grid(0.0, 0.9 if args.gamma_max is None else args.gamma_max, args.points):
            gr = gm if args.gamma_ref == "equal" else float(args.gamma_ref)
            s = Scenario(n, d, LossProfile.split(gr, gm, d))
            rows.append((gm, bounds.min_qcrb_noon(s), bounds.qcrb_noon(s, bounds.humphreys_weights(d)),
                         bounds.qcrb_noon(s, bounds.balanced_weights(d)), bounds.sql_coherent(s)))
        return {"fig3.csv": _csv(FIG_HEADERS["fig3"], rows)}
    if name == "fig4":
        gr = 0.5 if args.gamma_ref == "equal" else float(args.gamma_ref)
        rows = [(nn, dd, bounds.critical_loss(nn, dd, gr, "humphreys"), bounds.critical_loss(nn, dd, gr, "optimal"))
                for nn in range(2, args.max_n + 1) for dd in range(2, args.max_d + 1)]
        return {"fig4.csv": _csv(FIG_HEADERS["fig4"], rows)}
    if name == "fig6":
        d = d or 2
        gr = 0.5 if args.gamma_ref == "equal" else float(args.gamma_ref)
        rows = []
        for gm in (args.gammas or [0.0, 0.1, 0.2, 0.3, 0.4]):
            s = Scenario(n, d, LossProfile.split(gr, gm, d))
            mesh_only = optimize.optimize_mesh_for_state(s, bounds.optimal_weights(s), args.restarts, args.seed)
            joint = optimize.optimize_joint(s, args.restarts, args.seed)
            rows.append((gm, mesh_only.best_crb, joint.best_crb, bounds.min_qcrb_noon(s), bounds.sql_coherent(s)))
        return {"fig6.csv": _csv(FIG_HEADERS["fig6"], rows)}
    if name == "fig7":
        cfg = montecarlo.SweepConfig(n_instances=args.instances, gamma_min=args.gamma_min, gamma_max=0.6 if args.gamma_max is None else args.gamma_max,
                                     N=n, d=d or 10, seed=args.seed, pin_reference=args.pin_reference)
        res = montecarlo.run_sweep(cfg)
        return {"fig7_histogram.csv": montecarlo.histogram_csv(montecarlo.histogram(res, args.bins)),
                "fig7_sweep.csv": res.to_csv(),
                "fig7_summary.json": res.summary_json() + "\n"}
    raise UsageError(f"unknown figure {name!r}; choose from {', '.join(FIGURES)}")


def cmd_figure(args, argv) -> int:
    files = figure_rows(args)
    if args.out is None:
        for text in files.values():
            sys.stdout.write(text)
    _write_outputs(args.out, files, argv, "figure", _config(args), args.seed)
    return EXIT_OK


def cmd_optimize(args, argv) -> int:
    s = resolve_scenario(args)
    if args.mode == "joint":
        res = optimize.optimize_joint(s, args.restarts, args.seed)
    else:
        p = bounds.resolve_weights(s, args.weights_scheme)
        res = optimize.optimize_mesh_for_state(s, p, args.restarts, args.seed)
    out = {
        "scenario": s.to_dict(),
        "mode": args.mode,
        "best_crb": res.best_crb,
        "qcrb_optimal": bounds.min_qcrb_noon(s),
        "sql": bounds.sql_coherent(s),
        "best_weights": list(res.best_weights.p),
        "best_mesh": res.best_mesh.to_dict(),
        "restarts_used": res.restarts_used,
        "converged": res.converged,
    }
    text = json.dumps(out, indent=2)
    print(text)
    files = {"optimize.json": text + "\n"}
    hist = _csv(["iteration", "objective"], res.history)
    if args.history is not None:
        args.history.write_text(hist)
    if args.out is not None:
        files["history.csv"] = hist
    _write_outputs(args.out, files, argv, "optimize", _config(args), args.seed)
    return EXIT_OK


def cmd_montecarlo(args, argv) -> int:
    instances = 100_000 if args.full else args.instances
    cfg = montecarlo.SweepConfig(n_instances=instances, gamma_min=args.gamma_min, gamma_max=args.gamma_max,
                                 N=args.n_photons, d=args.n_phases, seed=args.seed,
                                 pin_reference=args.pin_reference)
    res = montecarlo.run_sweep(cfg)
    summary = res.summary_json()
    print(summary)
    files = {"sweep.csv": res.to_csv(), "summary.json": summary + "\n",
             "histogram.csv": montecarlo.histogram_csv(montecarlo.histogram(res, args.bins))}
    _write_outputs(args.out, files, argv, "montecarlo", _config(args), args.seed)
    return EXIT_OK


def run_verification(max_n: int, max_d: int, grid: int, n_random: int, seed: int, tol: float = 1e-8,
                     max_dim: int = VERIFY_MAX_DIM, log=print) -> bool:
    """Cross-check the closed forms against the Fock-space oracle; True when every check passes."""
    dim = fockspace.fock_dimension(max_d + 1, max_n)
    if max_n < 1 or max_d < 1 or grid < 1 or n_random < 0:
        raise ScenarioError("max N, max d and grid must be >= 1")
    if dim > max_dim:
        raise ScenarioError(f"N={max_n}, d={max_d} needs Fock dimension {dim} > verification cap {max_dim}")
    rng = np.random.default_rng(seed)
    levels = np.linspace(0.0, 0.8, grid)
    worst = {"qfim": 0.0, "qcrb": 0.0, "attain": 0.0}
    ok = True

    def check(s: Scenario, p: WeightVector) -> None:
        nonlocal ok
        fq = bounds.qfim_noon(s, p).entries
        fo = fockspace.qfim_oracle(s, p).entries
        r_qfim = float(np.abs(fq - fo).max())
        q_closed = bounds.qcrb_noon(s, p)
        q_oracle = float(np.trace(np.linalg.inv(fo)))
        r_qcrb = abs(q_oracle - q_closed) / max(abs(q_oracle), abs(q_closed))
        worst["qfim"] = max(worst["qfim"], r_qfim)
        worst["qcrb"] = max(worst["qcrb"], r_qcrb)
        bad = r_qfim > tol or r_qcrb > tol
        if s.n_photons <= 2:
            r_att = fockspace.attainability_check(s, p)
            worst["attain"] = max(worst["attain"], r_att)
            bad = bad or r_att > tol
        if bad and ok:
            log(f"FAIL scenario={s.to_json()} weights={json.dumps(list(p.p))}")
        ok = ok and not bad

    for n in range(1, max_n + 1):
        for d in range(1, max_d + 1):
            for g in np.array(np.meshgrid(*[levels] * (d + 1), indexing="ij")).reshape(d + 1, -1).T:
                s = Scenario(n, d, LossProfile(tuple(g)))
                check(s, bounds.optimal_weights(s))
            for _ in range(n_random):
                s = Scenario(n, d, LossProfile(tuple(rng.uniform(0, 0.9, d + 1))),
                             phases=tuple(rng.uniform(-np.pi, np.pi, d)))
                check(s, WeightVector.normalized(rng.dirichlet(np.ones(d + 1))))
    log(f"max |F_Q(closed) - F_Q(oracle)| = {worst['qfim']:.3e}")
    log(f"max rel |QCRB(closed) - Tr F_oracle^-1| = {worst['qcrb']:.3e}")
    log(f"max |Tr(rho [L_a, L_b])| (N <= 2) = {worst['attain']:.3e}")
    log("PASS" if ok else "FAIL")
    return ok


def cmd_verify(args, argv) -> int:
    ok = run_verification(args.max_n, args.max_d, args.grid, args.random, args.seed, args.tol, args.max_dim)
    return EXIT_OK if ok else EXIT_VERIFY_FAILED


def cmd_replay(args, argv) -> int:
    try:
        manifest = json.loads(Path(args.manifest).read_text())
        stored = list(manifest["argv"])
    except (OSError, KeyError, json.JSONDecodeError) as exc:
        raise UsageError(f"cannot read manifest {args.manifest}: {exc}") from None
    if args.out is not None:
        if "--out" in stored:
            stored[stored.index("--out") + 1] = str(args.out)
        else:
            stored += ["--out", str(args.out)]
    return main(stored)


# -- parser ------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="noonbound", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=__version__)
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("bounds", help="QCRB, SQL and quantum advantage for one scenario")
    _add_scenario_flags(p)
    p.add_argument("--weights", type=_float_list, help="custom weights p_0..p_d (normalised)")
    p.add_argument("--out", type=Path)
    p.set_defaults(func=cmd_bounds)

    p = sub.add_parser("crit", help="critical signal-mode loss rate")
    p.add_argument("--n", type=int, dest="n_photons", required=True)
    p.add_argument("--d", type=int, dest="n_phases", required=True)
    p.add_argument("--gamma-ref", type=float, default=0.5)
    p.add_argument("--scheme", choices=["optimal", "humphreys", "balanced"])
    p.add_argument("--out", type=Path)
    p.set_defaults(func=cmd_crit)

    p = sub.add_parser("figure", help="write the data grid behind one figure as CSV")
    p.add_argument("name", choices=FIGURES)
    p.add_argument("--n", type=int, dest="n_photons", default=2)
    p.add_argument("--d", type=int, dest="n_phases")
    p.add_argument("--gamma-ref", default="0.5", help="reference loss, or 'equal' (fig3) to tie it to gamma")
    p.add_argument("--gamma-max", type=float,
                   help="upper end of the gamma grid (fig2, fig3: default 0.9) or of the loss draws (fig7: 0.6)")
    p.add_argument("--points", type=int, default=19)
    p.add_argument("--max-n", type=int, default=6)
    p.add_argument("--max-d", type=int, default=6)
    p.add_argument("--gammas", type=_float_list, help="signal loss values (fig6)")
    p.add_argument("--restarts", type=int, default=optimize.DEFAULT_RESTARTS)
    p.add_argument("--instances", type=int, default=10_000)
    p.add_argument("--gamma-min", type=float, default=0.2)
    p.add_argument("--pin-reference", type=float)
    p.add_argument("--bins", type=int, default=50)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", type=Path)
    p.set_defaults(func=cmd_figure)

    p = sub.add_parser("optimize", help="minimise the photon-counting CRB over the mesh (and weights)")
    _add_scenario_flags(p)
    p.add_argument("--mode", choices=["joint", "mesh"], default="joint")
    p.add_argument("--weights-scheme", default="optimal", choices=["optimal", "humphreys", "balanced"])
    p.add_argument("--restarts", type=int, default=optimize.DEFAULT_RESTARTS)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--history", type=Path, help="write iteration,objective CSV here")
    p.add_argument("--out", type=Path)
    p.set_defaults(func=cmd_optimize)

    p = sub.add_parser("montecarlo", help="random-loss QCRB sweep")
    p.add_argument("--instances", type=int, default=10_000)
    p.add_argument("--full", action="store_true", help="use 10^5 instances")
    p.add_argument("--gamma-min", type=float, default=0.2)
    p.add_argument("--gamma-max", type=float, default=0.6)
    p.add_argument("--n", type=int, dest="n_photons", default=2)
    p.add_argument("--d", type=int, dest="n_phases", default=10)
    p.add_argument("--pin-reference", type=float)
    p.add_argument("--bins", type=int, default=50)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", type=Path)
    p.set_defaults(func=cmd_montecarlo)

    p = sub.add_parser("verify", help="cross-check closed forms against the Fock-space oracle")
    p.add_argument("--max-n", type=int, default=3)
    p.add_argument("--max-d", type=int, default=3)
    p.add_argument("--grid", type=int, default=5)
    p.add_argument("--random", type=int, default=50)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--tol", type=float, default=1e-8)
    p.add_argument("--max-dim", type=int, default=VERIFY_MAX_DIM)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("replay", help="re-run the command recorded in a manifest.json")
    p.add_argument("manifest", type=Path)
    p.add_argument("--out", type=Path, help="write to this directory instead of the recorded one")
    p.set_defaults(func=cmd_replay)
    return ap


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args, argv)
    except (ScenarioError, UsageError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
