"""Command-line interface.

Subcommands: ``synth`` (write a synthetic grouped dataset), ``points``
(groups -> Grassmann points file), ``cluster`` (points -> coefficients,
labels, history, figures), ``eval`` (Hungarian accuracy of two label
files), ``run`` (full pipeline from a TOML config).

Exit codes: 0 success, 2 validation error, 3 numerical failure,
4 I/O error.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from . import matio
from .clustering import (
    ClusterAssignment,
    accuracy,
    affinity_from_w,
    contingency,
    spectral_cluster,
)
from .errors import (
    DataIOError,
    GLRRError,
    NumericalError,
    StageFailure,
)
from .gram import build_gram
from .pipeline import (
    DATASET_FORMATS,
    PipelineConfig,
    SyntheticSpec,
    load_dataset,
    points_from_groups,
    run_pipeline,
    synth_groups,
    write_artifacts,
    write_groups,
)
from .solver import SolverConfig, solve


def _cmd_synth(args) -> None:
    spec = SyntheticSpec(
        k=args.k,
        per_cluster=args.per_cluster,
        d=args.d,
        p=args.p,
        noise=args.noise,
        seed=args.seed,
    )
    groups = synth_groups(spec, samples_per_group=args.samples_per_group)
    write_groups(args.out, groups)
    print(f"wrote {len(groups)} groups to {args.out}")


def _cmd_points(args) -> None:
    groups = load_dataset(args.in_dir, args.format)
    points, _ = points_from_groups(groups, args.p)
    matio.save_points(args.out, points, [g.label for g in groups])
    d, p = points[0].basis.shape
    print(f"wrote {len(points)} points on G({p},{d}) to {args.out}")


def _cmd_cluster(args) -> None:
    points, raw_labels = matio.load_points(args.points)
    config = SolverConfig(lam=args.lam, max_iters=args.max_iters)
    tensor = build_gram(points)
    coefficients, state = solve(tensor, config)
    if state.warning:
        logging.getLogger(__name__).warning("%s", state.warning)
    affinity = affinity_from_w(coefficients)
    predicted = spectral_cluster(
        affinity, args.k, seed=args.seed, variant=args.variant
    )
    truth = ClusterAssignment.from_labels(raw_labels)
    score = accuracy(predicted, truth)
    out_dir = Path(args.out)
    artifacts = write_artifacts(
        out_dir,
        coefficients,
        state,
        affinity,
        predicted,
        truth=truth,
        figures=not args.no_figures,
    )
    report = {
        "accuracy": score,
        "n_points": len(points),
        "solver": {
            "iterations": state.iteration,
            "converged": state.converged,
            "warning": state.warning,
        },
        "artifacts": artifacts,
    }
    with open(out_dir / "report.json", "w", encoding="utf-8") as fh:
        json.dump(report, fh, indent=2)
    print(f"accuracy={score:.17g}")


def _cmd_eval(args) -> None:
    pred = ClusterAssignment.from_labels(matio.load_labels_csv(args.pred))
    truth = ClusterAssignment.from_labels(matio.load_labels_csv(args.truth))
    if args.table:
        table = contingency(pred, truth)
        print("contingency (rows: pred, cols: truth):")
        for row in table:
            print(" ".join(f"{int(v):6d}" for v in row))
    print(f"{accuracy(pred, truth):.17g}")


def _cmd_run(args) -> None:
    config = PipelineConfig.from_file(args.config)
    report = run_pipeline(config)
    print(report["run_dir"])
    print(f"accuracy={report['accuracy']:.17g}")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="glrr",
        description=(
            "Cluster image sets / video clips represented as subspaces via "
            "low-rank tangent-space self-expression."
        ),
    )
    sub = parser.add_subparsers(dest="command", required=True)

    synth = sub.add_parser("synth", help="write synthetic GMAT groups + labels.csv")
    synth.add_argument("--k", type=int, required=True, help="number of clusters")
    synth.add_argument("--per-cluster", type=int, required=True)
    synth.add_argument("--d", type=int, required=True, help="ambient dimension")
    synth.add_argument("--p", type=int, required=True, help="subspace dimension")
    synth.add_argument("--noise", type=float, default=0.0)
    synth.add_argument("--seed", type=int, default=0)
    synth.add_argument(
        "--samples-per-group",
        type=int,
        default=None,
        help="columns per group matrix (default 2p)",
    )
    synth.add_argument("--out", required=True, help="output directory")
    synth.set_defaults(func=_cmd_synth)

    points = sub.add_parser(
        "points", help="build a Grassmann points file from grouped samples"
    )
    points.add_argument("--in", dest="in_dir", required=True, help="dataset directory")
    points.add_argument("--p", type=int, required=True)
    points.add_argument("--format", choices=DATASET_FORMATS, default="gmat-dir")
    points.add_argument("--out", required=True, help="output points file")
    points.set_defaults(func=_cmd_points)

    cluster = sub.add_parser(
        "cluster", help="Gram + solve + spectral: emit W, labels, history, figures"
    )
    cluster.add_argument("--points", required=True, help="points file")
    cluster.add_argument("--lambda", dest="lam", type=float, required=True)
    cluster.add_argument("--k", type=int, required=True)
    cluster.add_argument("--seed", type=int, default=0)
    cluster.add_argument("--variant", choices=("njw", "shi-malik"), default="njw")
    cluster.add_argument("--max-iters", type=int, default=500)
    cluster.add_argument("--no-figures", action="store_true")
    cluster.add_argument("--out", required=True, help="output directory")
    cluster.set_defaults(func=_cmd_cluster)

    evaluate = sub.add_parser("eval", help="Hungarian accuracy of two label CSVs")
    evaluate.add_argument("--pred", required=True)
    evaluate.add_argument("--truth", required=True)
    evaluate.add_argument("--table", action="store_true", help="print contingency table")
    evaluate.set_defaults(func=_cmd_eval)

    run = sub.add_parser("run", help="full pipeline from a TOML config")
    run.add_argument("--config", required=True)
    run.set_defaults(func=_cmd_run)

    return parser


def _exit_code(err: GLRRError) -> int:
    cause = err.cause if isinstance(err, StageFailure) else err
    if isinstance(cause, (DataIOError, OSError)):
        return 4
    if isinstance(cause, NumericalError):
        return 3
    return 2


def main(argv=None) -> int:
    logging.basicConfig(level=logging.INFO, format="%(message)s")
    args = build_parser().parse_args(argv)
    try:
        args.func(args)
    except GLRRError as err:
        print(f"error: {err}", file=sys.stderr)
        return _exit_code(err)
    except OSError as err:
        print(f"error: {err}", file=sys.stderr)
        return 4
    return 0


if __name__ == "__main__":
    sys.exit(main())
