"""Command line interface: ``pcmap {simulate,analyze,bench,report}``."""
from __future__ import annotations

import argparse
import csv
import json
import sys
from pathlib import Path
from typing import List, Optional

import numpy as np

from . import __version__
from .combine import pc_field
from .core import RejectionSet, check_gamma
from .io import (RunManifest, atomic_path, file_digest, read_manifest, read_pvalue_matrix,
                 write_json, write_lower_bounds, write_manifest, write_pvalue_matrix,
                 write_rejections, write_truth)
from .metrics import aggregate
from .procedures import (METHODS, Procedure, adafilter, analyze, benjamini_heller, cofilter_adaptive,
                         cofilter_fixed)
from .simulate import (EquiCorrScenario, PhantomScenario, generate_replication, resolve_threads,
                       scenario_from_dict, scenario_to_dict, simulate_trials)


class CliError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise CliError(message)


def parse_tau_grid(text: str):
    """``start:stop:step`` or a comma-separated list."""
    if ":" in text:
        try:
            start, stop, step = (float(x) for x in text.split(":"))
        except ValueError:
            raise CliError(f"bad tau grid {text!r}; use start:stop:step") from None
        if step <= 0:
            raise CliError("tau grid step must be positive")
        n = int(round((stop - start) / step)) + 1
        return tuple(round(start + k * step, 10) for k in range(n))
    return tuple(float(x) for x in text.split(",") if x.strip())


def _procedure(args) -> Procedure:
    grid = parse_tau_grid(args.tau_grid) if args.tau_grid else None
    return Procedure(args.method, alpha=args.alpha, tau=args.tau, tau_grid=grid, indexing=args.adafilter_indexing)


def _add_procedure_args(p, required=True):
    p.add_argument("--method", choices=METHODS, required=required)
    p.add_argument("--alpha", type=float, default=0.05)
    p.add_argument("--tau", type=float, help="selection threshold for cofilter-fixed")
    p.add_argument("--tau-grid", help="candidate thresholds for cofilter-adaptive (default 0.01:1:0.01)")
    p.add_argument("--adafilter-indexing", choices=("standard", "literal"), default="standard")


def _add_scenario_args(p):
    p.add_argument("--scenario-file", help="JSON scenario; overrides the flags below")
    p.add_argument("--kind", choices=("equicorr", "phantom"), default="equicorr")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--s", type=int, help="subjects (default 10 equicorr, 8 phantom)")
    p.add_argument("--m", type=int, default=1000)
    p.add_argument("--n", type=int, default=50)
    p.add_argument("--rho", type=float, default=0.0)
    p.add_argument("--c", type=float, default=1.5)
    p.add_argument("--eta", type=float, default=0.95)
    p.add_argument("--alpha-cal", type=float, default=0.05)
    p.add_argument("--grid", default="10,10,10")
    p.add_argument("--radius", type=float, default=3.0)
    p.add_argument("--center", help="sphere centre x,y,z in 0-based voxel units (default grid centre)")
    p.add_argument("--snr", type=float, default=2.0)


def _triple(text: str, conv):
    parts = [conv(x) for x in text.split(",")]
    if len(parts) != 3:
        raise CliError(f"expected three comma-separated values, got {text!r}")
    return tuple(parts)


def _scenario(args):
    if args.scenario_file:
        return scenario_from_dict(json.loads(Path(args.scenario_file).read_text()))
    if args.kind == "equicorr":
        return EquiCorrScenario(m=args.m, s=args.s or 10, n=args.n, rho=args.rho, c=args.c, eta=args.eta,
                                alpha_cal=args.alpha_cal, seed=args.seed)
    center = _triple(args.center, float) if args.center else None
    return PhantomScenario(grid=_triple(args.grid, int), s=args.s or 8, sphere_center=center,
                           sphere_radius=args.radius, snr=args.snr, seed=args.seed)


def cmd_simulate(args) -> None:
    scenario = _scenario(args)
    matrix, truth = generate_replication(scenario, args.replication)
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    name = "pvalues.bin" if args.format == "binary" else "pvalues.csv"
    write_pvalue_matrix(matrix, out / name, args.format)
    write_truth(truth, out / "truth.csv")
    manifest = RunManifest("simulate", __version__, procedure={}, seed=scenario.seed,
                           scenario=scenario_to_dict(scenario))
    manifest.replications = args.replication
    write_manifest(manifest, out / "manifest.json")


def cmd_analyze(args) -> None:
    proc = _procedure(args)
    matrix = read_pvalue_matrix(args.input, args.format)
    out = Path(args.out)
    manifest = RunManifest("analyze", __version__, procedure=proc.config(),
                           input_digest=file_digest(args.input), gamma=args.gamma)
    if args.gamma == "all":
        grid = _triple(args.grid, int) if args.grid else None
        d, _ = analyze(matrix, proc)
        write_lower_bounds(d, out, grid)
    else:
        g = check_gamma(int(args.gamma), matrix.s)
        if proc.method == "bh-selective":
            d = benjamini_heller(matrix, proc.alpha)
            rs = RejectionSet(g, np.flatnonzero(d.d >= g))
        elif proc.method == "adafilter":
            rs = adafilter(matrix, g, proc.alpha, proc.indexing)
        else:
            col = pc_field(matrix).pc[:, g - 1]
            if proc.method == "cofilter-fixed":
                rs = cofilter_fixed(col, proc.alpha, proc.tau, gamma=g)
            else:
                rs = cofilter_adaptive(col, proc.alpha, proc.tau_grid, gamma=g)
        write_rejections(rs, out)
        manifest.procedure = dict(manifest.procedure, tau_used=rs.tau_used, n_rejected=len(rs))
    write_manifest(manifest, out.with_name(out.name + ".manifest.json"))


_TRIAL_FIELDS = ("fdp", "power_beta", "n_discoveries", "n_false")


def _write_trials(trials, s: int, path: Path) -> None:
    header = ["replication", *_TRIAL_FIELDS]
    header += [f"rejections_g{g}" for g in range(1, s + 1)]
    header += [f"tau_g{g}" for g in range(1, s + 1)]
    with atomic_path(path) as tmp, open(tmp, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for r, t in enumerate(trials, start=1):
            taus = list(t.tau_per_gamma) if t.tau_per_gamma else [""] * s
            beta = "" if t.power_beta is None else repr(t.power_beta)
            w.writerow([r, repr(t.fdp), beta, t.n_discoveries, t.n_false, *t.per_gamma_rejections,
                        *[repr(x) if x != "" else "" for x in taus]])


def cmd_bench(args) -> None:
    if args.from_manifest:
        man = read_manifest(args.from_manifest)
        scenario = scenario_from_dict(man.scenario)
        cfg = dict(man.procedure)
        proc = Procedure(cfg.pop("method"), alpha=cfg.get("alpha", 0.05), tau=cfg.get("tau"),
                         tau_grid=tuple(cfg["tau_grid"]) if cfg.get("tau_grid") else None,
                         indexing=cfg.get("indexing", "standard"))
        replications = man.replications
    else:
        if not args.method:
            raise CliError("bench needs --method or --from-manifest")
        scenario = _scenario(args)
        proc = _procedure(args)
        replications = args.replications
    trials = simulate_trials(scenario, [proc], replications, resolve_threads())[proc.label]
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    _write_trials(trials, scenario.s, out / "trials.csv")
    manifest = RunManifest("bench", __version__, procedure=proc.config(), seed=scenario.seed,
                           replications=replications, scenario=scenario_to_dict(scenario))
    agg = {
        "tool_version": __version__,
        "scenario": manifest.scenario,
        "procedure": manifest.procedure,
        "label": proc.label,
        "seed": scenario.seed,
        "conventions": manifest.conventions,
        "summary": aggregate(trials),
    }
    write_json(agg, out / "aggregate.json")
    write_manifest(manifest, out / "manifest.json")


def _scenario_key(scn: dict):
    if scn.get("kind") == "phantom":
        return "snr", scn["snr"]
    return "rho", scn["rho"]


def cmd_report(args) -> None:
    cells = {}
    keys, labels = set(), []
    key_name = None
    for path in args.aggregates:
        agg = json.loads(Path(path).read_text())
        name, value = _scenario_key(agg["scenario"])
        if key_name not in (None, name):
            raise CliError("cannot mix equi-correlated and phantom aggregates in one report")
        key_name = name
        label = agg["label"]
        if label not in labels:
            labels.append(label)
        keys.add(value)
        summ = agg["summary"]
        if args.metric == "fdr":
            val = summ["fdr"]
        else:
            val = summ["power"]["mean"] if summ["power"] else None
        cells[(value, label)] = val
    lines = [",".join([key_name or "key", *labels])]
    for k in sorted(keys):
        row = [repr(k)]
        for lab in labels:
            v = cells.get((k, lab))
            row.append("" if v is None else f"{v:.4f}")
        lines.append(",".join(row))
    text = "\n".join(lines) + "\n"
    if args.out:
        with atomic_path(args.out) as tmp:
            tmp.write_text(text)
    else:
        sys.stdout.write(text)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="pcmap", description=__doc__)
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("simulate", help="generate one replication of p-value maps plus the truth file")
    _add_scenario_args(p)
    p.add_argument("--replication", type=int, default=0)
    p.add_argument("--format", choices=("csv", "binary"), default="csv")
    p.add_argument("--out-dir", required=True)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("analyze", help="run a procedure on a p-value matrix file")
    p.add_argument("--input", required=True)
    p.add_argument("--format", choices=("csv", "binary"), help="input format (default: sniff)")
    _add_procedure_args(p)
    p.add_argument("--gamma", default="all", help="granularity, or 'all' for lower bounds")
    p.add_argument("--grid", help="x,y,z dimensions for coordinate output")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("bench", help="Monte Carlo FDR/power study")
    _add_scenario_args(p)
    _add_procedure_args(p, required=False)
    p.add_argument("--replications", type=int, default=500)
    p.add_argument("--from-manifest", help="re-run exactly the bench described by a manifest")
    p.add_argument("--out-dir", required=True)
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("report", help="tabulate aggregate JSON files by method and rho/SNR")
    p.add_argument("aggregates", nargs="+")
    p.add_argument("--metric", choices=("fdr", "power"), default="fdr")
    p.add_argument("--out")
    p.set_defaults(func=cmd_report)
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    try:
        args = build_parser().parse_args(argv)
        args.func(args)
    except SystemExit as exc:  # --help / --version
        return int(exc.code or 0)
    except Exception as exc:
        err = {"error": type(exc).__name__, "message": str(exc)}
        sys.stderr.write(json.dumps(err, sort_keys=True) + "\n")
        return 1 if not isinstance(exc, CliError) else 2
    return 0
