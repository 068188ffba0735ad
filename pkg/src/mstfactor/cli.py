"""Command-line entry point.

Exit codes: 0 success, 1 usage error, 2 data error, 3 numerical/model error.
Every subcommand writes ``manifest.json`` next to its outputs, echoing all
parameters (defaults included) so the run can be repeated exactly.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .consistency import survivor_curve, write_curve_csv
from .correlation import correlation_matrix, distance_matrix, write_matrix_csv
from .exceptions import DataError, ModelError
from .factor_analysis import SCORE_METHODS, extract_factors
from .factor_model import NOISE_MODES, derive_returns, fit
from .market_data import ReturnPanel, load_prices, load_returns, to_log_returns, write_wide_csv
from .mst import build_mst, read_edges_csv, write_degrees_csv, write_edges_csv
from .pipeline import run_sweep, write_grid_csv, write_manifest, write_marginal_csvs
from .synth import MarketSpec, generate, load_spec, write_ground_truth

log = logging.getLogger("mstfactor")

DEFAULT_SEED = 42
EXIT_USAGE, EXIT_DATA, EXIT_MODEL = 1, 2, 3


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _k_spec(value: str):
    if value == "kaiser":
        return value
    try:
        k = int(value)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer or 'kaiser', got {value!r}") from None
    if k < 1:
        raise argparse.ArgumentTypeError("factor count must be at least 1")
    return k


def _sha256(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()


def _load_panel(args) -> ReturnPanel:
    if args.returns:
        panel = load_returns(args.input)
    else:
        panel = to_log_returns(load_prices(args.input))
    if panel.dropped_rows:
        log.warning("dropped %d row(s) with missing values", panel.dropped_rows)
    return panel


def _out_dir(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _manifest(args, out: Path, **extra) -> None:
    params = {k: v for k, v in vars(args).items() if k != "func"}
    data = {
        "software": {"name": "mstfactor", "version": __version__},
        "command": args.command,
        "parameters": params,
    }
    if getattr(args, "input", None):
        data["input_sha256"] = _sha256(args.input)
    data.update(extra)
    write_manifest(out / "manifest.json", data)


def cmd_network(args) -> None:
    panel = _load_panel(args)
    out = _out_dir(args)
    corr = correlation_matrix(panel)
    dist = distance_matrix(corr)
    tree = build_mst(dist)
    write_edges_csv(out / "mst_edges.csv", tree)
    write_degrees_csv(out / "degrees.csv", tree)
    if args.dump_matrix:
        write_matrix_csv(out / "correlation.csv", panel.assets, corr.rho)
        write_matrix_csv(out / "distance.csv", panel.assets, dist.dist)
    _manifest(args, out, n_assets=panel.n_assets, n_obs=panel.n_obs,
              dropped_rows=panel.dropped_rows, total_weight=tree.total_weight)
    print(f"{len(tree.edges)} edges, max degree {int(tree.degree.max())} -> {out}")


def _write_factor_table(path, row_labels, first, values) -> None:
    values = np.asarray(values)
    header = [first, *(f"factor_{k + 1}" for k in range(values.shape[1]))]
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(",".join(header) + "\n")
        for label, row in zip(row_labels, values):
            fh.write(",".join([label, *(repr(float(v)) for v in row)]) + "\n")


def cmd_factors(args) -> None:
    panel = _load_panel(args)
    out = _out_dir(args)
    fl, fs, eig = extract_factors(panel, args.k, score_method=args.score_method)
    _write_factor_table(out / "loadings.csv", panel.assets, "asset", fl.loadings)
    _write_factor_table(out / "scores.csv", panel.row_labels(), "date", fs.scores)
    with open(out / "eigenvalues.csv", "w", encoding="utf-8") as fh:
        fh.write("rank,eigenvalue\n")
        for i, v in enumerate(eig.eigenvalues, start=1):
            fh.write(f"{i},{float(v)!r}\n")
    _manifest(args, out, n_factors=fl.n_factors, mean_abs_score_correlation=fs.mean_abs_correlation)
    print(f"{fl.n_factors} factors, mean |score correlation| {fs.mean_abs_correlation:.4%} -> {out}")


def cmd_fit(args) -> None:
    panel = _load_panel(args)
    out = _out_dir(args)
    _, fs, _ = extract_factors(panel, args.k, score_method=args.score_method)
    res = fit(panel, fs)
    with open(out / "fit.csv", "w", encoding="utf-8") as fh:
        betas = [f"beta_{k + 1}" for k in range(res.n_factors)]
        fh.write(",".join(["asset", "alpha", *betas, "r_squared"]) + "\n")
        for j, a in enumerate(panel.assets):
            cells = [res.alpha[j], *res.beta[j], res.r_squared[j]]
            fh.write(",".join([a, *(repr(float(v)) for v in cells)]) + "\n")
    if args.derive:
        d = derive_returns(panel, res, fs, args.seed, args.noise_mode)
        labels = panel.row_labels()
        write_wide_csv(out / "estimated_returns.csv", panel.assets, labels, d.combined)
        write_wide_csv(out / "residual_returns.csv", panel.assets, labels, d.residual)
    _manifest(args, out, n_factors=res.n_factors)
    print(f"fit {panel.n_assets} assets on {res.n_factors} factors, "
          f"mean R^2 {float(np.mean(res.r_squared)):.3f} -> {out}")


def cmd_sweep(args) -> None:
    panel = _load_panel(args)
    out = _out_dir(args)
    grid = run_sweep(
        panel, args.k, args.replicates, args.seed, args.noise_mode,
        pooled=args.pooled, full_threshold_axis=args.full_threshold_axis,
        score_method=args.score_method, n_jobs=args.jobs,
    )
    write_grid_csv(out / "grid.csv", grid)
    m = write_marginal_csvs(out / "marginal_by_k.csv", out / "marginal_by_threshold.csv", grid)
    _manifest(args, out, factor_counts=list(grid.factor_counts), thresholds=list(grid.thresholds),
              eligible_counts=list(grid.eligible_counts))
    print(f"k=1..{grid.factor_counts[-1]}, thresholds 1..{grid.thresholds[-1]}; "
          f"estimated by k: {np.round(m.estimated_by_k, 3).tolist()} -> {out}")


def cmd_synth(args) -> None:
    out = _out_dir(args)
    if args.spec:
        spec = load_spec(args.spec, seed=args.seed)
    else:
        spec = MarketSpec(seed=args.seed if args.seed is not None else DEFAULT_SEED)
    panel, truth = generate(spec)
    write_wide_csv(out / "returns.csv", panel.assets, panel.row_labels(), panel.returns)
    write_ground_truth(out / "ground_truth.json", spec, truth)
    _manifest(args, out, resolved_spec=truth.to_json(spec)["spec"])
    print(f"{spec.n_obs} x {spec.n_assets} returns, {spec.n_factors} factors -> {out}")


def cmd_survivor(args) -> None:
    reference = read_edges_csv(args.reference)
    candidate = read_edges_csv(args.candidate, reference.assets)
    curve = survivor_curve(reference, candidate, args.pooled)
    out = _out_dir(args)
    write_curve_csv(out / "survivor.csv", curve)
    _manifest(args, out, reference_sha256=_sha256(args.reference),
              candidate_sha256=_sha256(args.candidate))
    for i, r, c in zip(curve.thresholds, curve.ratios, curve.eligible_counts):
        print(f"L>={i}: {r:.4f} ({c} nodes)")


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="mstfactor", description=__doc__.split("\n")[0])
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def with_input(sp):
        sp.add_argument("input", help="wide CSV: date column then one column per asset")
        sp.add_argument("--returns", action="store_true",
                        help="input already holds returns; skip log-differencing")
        sp.add_argument("--out", default=".", help="output directory (default: .)")

    def with_factors(sp, k_help):
        sp.add_argument("--k", type=_k_spec, default="kaiser", help=k_help)
        sp.add_argument("--score-method", choices=SCORE_METHODS, default="regression")

    def with_noise(sp):
        sp.add_argument("--seed", type=int, default=DEFAULT_SEED)
        sp.add_argument("--noise-mode", choices=NOISE_MODES, default="residual")

    sp = sub.add_parser("network", help="correlation MST edge list and degrees")
    with_input(sp)
    sp.add_argument("--dump-matrix", action="store_true", help="also write correlation/distance CSVs")
    sp.set_defaults(func=cmd_network)

    sp = sub.add_parser("factors", help="varimax factor loadings and scores")
    with_input(sp)
    with_factors(sp, "factor count or 'kaiser' (default)")
    sp.set_defaults(func=cmd_factors)

    sp = sub.add_parser("fit", help="multi-factor model coefficients")
    with_input(sp)
    with_factors(sp, "factor count or 'kaiser' (default)")
    with_noise(sp)
    sp.add_argument("--derive", action="store_true", help="also write estimated and residual returns")
    sp.set_defaults(func=cmd_fit)

    sp = sub.add_parser("sweep", help="survivor-ratio grid over factor counts and degree thresholds")
    with_input(sp)
    with_factors(sp, "largest factor count or 'kaiser' (default)")
    with_noise(sp)
    sp.add_argument("--replicates", type=int, default=10)
    sp.add_argument("--pooled", action="store_true", help="pool neighbour counts across nodes")
    sp.add_argument("--full-threshold-axis", action="store_true")
    sp.add_argument("--jobs", type=int, default=1, help="worker threads (result is unchanged)")
    sp.set_defaults(func=cmd_sweep)

    sp = sub.add_parser("synth", help="generate a synthetic factor-model market")
    sp.add_argument("--spec", help="key = value market spec file")
    sp.add_argument("--seed", type=int, default=None, help=f"overrides the spec seed (default {DEFAULT_SEED})")
    sp.add_argument("--out", default=".")
    sp.set_defaults(func=cmd_synth)

    sp = sub.add_parser("survivor", help="compare two edge-list files")
    sp.add_argument("reference", help="edge list of the reference tree")
    sp.add_argument("candidate", help="edge list of the candidate tree")
    sp.add_argument("--pooled", action="store_true")
    sp.add_argument("--out", default=".")
    sp.set_defaults(func=cmd_survivor)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s: %(message)s")
    if getattr(args, "replicates", 1) < 1 or getattr(args, "jobs", 1) < 1:
        parser.error("--replicates and --jobs must be at least 1")
    try:
        args.func(args)
    except (DataError, OSError) as exc:
        print(f"mstfactor {args.command}: data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except ModelError as exc:
        print(f"mstfactor {args.command}: model error: {exc}", file=sys.stderr)
        return EXIT_MODEL
    return 0


if __name__ == "__main__":
    sys.exit(main())
