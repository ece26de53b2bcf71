"""Batch command-line front end.

Exit codes: 0 success, 1 invalid input data (report on stderr), 2 invalid
arguments.
"""

import argparse
import csv
import io
import sys
import warnings
from pathlib import Path

import numpy as np

from . import __version__, _accel, calibration, decision, fairness
from . import metrics_classification as mcls
from . import metrics_regression as mreg
from .core import CLASSIFICATION, parse_predictions
from .errors import InfiniteLoss, NoTailMass, UQAuditError
from .report import atomic_write, dumps, file_digest, make_report


class UsageError(Exception):
    pass


def _float_list(text):
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _u64(text):
    try:
        v = int(text, 0)
    except ValueError:
        raise argparse.ArgumentTypeError(f"seed must be an integer, got {text!r}") from None
    if not 0 <= v < 2 ** 64:
        raise argparse.ArgumentTypeError("seed must fit in an unsigned 64-bit integer")
    return v


def _unit(text):
    v = float(text)
    if not 0 <= v <= 1:
        raise argparse.ArgumentTypeError(f"{text} is outside [0, 1]")
    return v


def build_parser():
    parser = argparse.ArgumentParser(prog="uqaudit", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"uqaudit {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def data_command(name, help_text):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--input", required=True, help="predictions file (CSV or JSON)")
        p.add_argument("--format", choices=("csv", "json"), default=None,
                       help="input format; inferred from the extension by default")
        p.add_argument("--output", default="-", help="JSON report path ('-' for stdout)")
        p.add_argument("--seed", type=_u64, default=0)
        return p

    p = data_command("metrics", "per-example uncertainty statistics and aggregates")
    p.add_argument("--coverage", type=float, default=0.95, help="central interval mass (regression)")

    p = data_command("calibration", "scoring rules and calibration errors")
    p.add_argument("--bins", type=int, default=calibration.DEFAULT_BINS)
    p.add_argument("--tau", type=float, default=0.05, help="tail mass for TCE (regression)")
    p.add_argument("--pavpu-threshold", type=_unit, default=0.5,
                   help="normalized-entropy cut-off below which a prediction is certain")

    p = data_command("decide", "loss-minimising actions with a reject option")
    p.add_argument("--loss", default=None, help="loss matrix JSON (default: 0-1 loss)")
    p.add_argument("--reject", type=_unit, default=decision.DEFAULT_REJECT,
                   help="abstain when 1 - max probability exceeds this")
    p.add_argument("--thresholds", type=_float_list, default=None,
                   help="comma-separated thresholds for the coverage curve (default 0, 0.01, ..., 1)")

    p = data_command("audit", "group fairness audit with optional noise correction")
    p.add_argument("--threshold", type=_unit, default=fairness.DEFAULT_DECISION_THRESHOLD,
                   help="predict positive when p_1 >= threshold")
    p.add_argument("--rho0", type=float, default=None)
    p.add_argument("--rho1", type=float, default=None)
    p.add_argument("--bins", type=int, default=calibration.DEFAULT_BINS)

    p = sub.add_parser("train-demo", help="train the sparse-gap regression ensemble and tabulate its band")
    p.add_argument("--seed", type=_u64, default=0)
    p.add_argument("--members", type=int, default=15)
    p.add_argument("--n-train", type=int, default=200)
    p.add_argument("--epochs", type=int, default=5000)
    p.add_argument("--learning-rate", type=float, default=0.05)
    p.add_argument("--jobs", type=int, default=1, help="threads used to train members")
    p.add_argument("--format", choices=("csv", "json"), default="json",
                   help="json: everything in the report; csv: also write the band table as CSV")
    p.add_argument("--output", default="-")
    p.add_argument("--save-model", default=None, help="write the trained ensemble as JSON")
    return parser


# ---------------------------------------------------------------- commands


def _columns(table):
    """Dict of equal-length arrays -> list of row dicts."""
    keys = list(table)
    n = len(next(iter(table.values())))
    return [{k: table[k][i] for k in keys} for i in range(n)]


def cmd_metrics(args, ds, notes):
    params = {"coverage": args.coverage}
    if ds.task == CLASSIFICATION:
        stats = mcls.per_example_summary(ds)
        rows = _columns({"id": list(ds.ids), **stats})
        agg = {f"mean_{k}": float(np.mean(v)) for k, v in stats.items() if k != "predicted_class"}
    else:
        if not 0 < args.coverage < 1:
            raise UsageError("--coverage must lie in (0, 1)")
        pred = ds.prediction
        mom = mreg.mixture_moments(pred)
        stats = {
            "mean": np.atleast_1d(mom.mean),
            "aleatoric_variance": np.atleast_1d(mom.aleatoric_variance),
            "epistemic_variance": np.atleast_1d(mom.epistemic_variance),
            "total_variance": np.atleast_1d(mom.total_variance),
        }
        if np.all(pred.variances > 0):
            lower, upper = mreg.central_interval(pred, args.coverage)
            quart = [mreg.mixture_percentile(pred, np.full(len(ds), q)) for q in (0.25, 0.5, 0.75)]
            iqr = quart[2] - quart[0]
            stats.update({"interval_lower": lower, "interval_upper": upper, "q1": quart[0],
                          "median": quart[1], "q3": quart[2],
                          "whisker_low": quart[0] - 1.5 * iqr, "whisker_high": quart[2] + 1.5 * iqr})
        else:
            notes.append("zero-variance components present: percentiles skipped")
        rows = _columns({"id": list(ds.ids), **stats})
        agg = {f"mean_{k}": float(np.mean(v)) for k, v in stats.items()}
    return params, {"task": ds.task, "kind": ds.kind, "n": len(ds), "aggregates": agg,
                    "examples": rows}, {}


def cmd_calibration(args, ds, notes):
    if args.bins < 1:
        raise UsageError("--bins must be at least 1")
    params = {"bins": args.bins}
    sidecars = {}
    if ds.task == CLASSIFICATION:
        params["pavpu_threshold"] = args.pavpu_threshold
        params["uncertainty_statistic"] = "predictive_entropy / ln K"
        try:
            nll = calibration.nll(ds)
        except InfiniteLoss as exc:
            nll = None
            notes.append(str(exc))
        binning, ece = calibration.reliability(ds, args.bins)
        uce_bins, uce = calibration.uce(ds, n_bins=args.bins)
        pv = calibration.pavpu(ds, threshold=args.pavpu_threshold)
        results = {
            "nll": nll,
            "brier": calibration.brier(ds),
            "ece": ece,
            "reliability": binning.bins,
            "uce": uce,
            "uce_bins": uce_bins.bins,
            "pavpu": pv,
            "accuracy": float(np.mean(mcls.argmax_lowest(ds.point_probs()) == ds.labels)),
        }
        sidecars["reliability.csv"] = binning.to_csv()
    else:
        params["tau"] = args.tau
        pit = calibration.pit(ds)
        try:
            tce = calibration.tce(pit, args.tau)
        except NoTailMass as exc:
            tce = None
            notes.append(str(exc))
        b0, b1 = calibration.tail_counts(pit, args.tau)
        results = {
            "nll": calibration.mixture_nll(ds),
            "rce": calibration.rce(pit, args.bins),
            "tce": tce,
            "tail_counts": {"lower": b0, "upper": b1},
            "pit_ks_distance": calibration.ks_uniform_distance(pit),
            "pit_histogram": np.bincount(calibration.bin_index(pit, args.bins),
                                         minlength=args.bins),
            "pit": pit,
        }
    return params, results, sidecars


def cmd_decide(args, ds, notes):
    if ds.task != CLASSIFICATION:
        raise UQAuditError("decide needs classification predictions")
    loss = (decision.LossMatrix.from_json(args.loss) if args.loss
            else decision.LossMatrix.zero_one(ds.n_classes))
    if len(loss.outcomes) != ds.n_classes:
        raise UQAuditError(f"loss matrix has {len(loss.outcomes)} outcomes, data has {ds.n_classes} classes")
    thresholds = args.thresholds if args.thresholds is not None else np.linspace(0, 1, 101).tolist()
    if any(not 0 <= t <= 1 for t in thresholds):
        raise UsageError("--thresholds must lie in [0, 1]")
    batch = decision.decide_batch(ds.point_probs(), loss, args.reject)
    rows = []
    for i, rid in enumerate(ds.ids):
        a = int(batch.action_index[i])
        rows.append({"id": rid, "decision": "abstain" if a < 0 else "predict",
                     "action": None if a < 0 else loss.actions[a],
                     "error_estimate": batch.error_estimate[i],
                     "expected_losses": batch.expected_losses[i]})
    curve = decision.coverage_curve(ds, loss, thresholds)
    n_abstain = int(batch.abstain.sum())
    results = {"loss": loss.to_dict(), "n": len(ds), "abstentions": n_abstain,
               "coverage": 1.0 - n_abstain / len(ds), "decisions": rows, "coverage_curve": curve}
    return {"reject": args.reject, "loss": args.loss or "zero-one", "thresholds": thresholds}, results, {}


def cmd_audit(args, ds, notes):
    if args.bins < 1:
        raise UsageError("--bins must be at least 1")
    if (args.rho0 is None) != (args.rho1 is None):
        raise UsageError("give both --rho0 and --rho1, or neither")
    noise = None
    if args.rho0 is not None:
        try:
            noise = fairness.NoiseRates(args.rho0, args.rho1)
        except ValueError as exc:
            raise UsageError(str(exc)) from None
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        report = fairness.audit(ds, args.threshold, noise)
        report["group_ece"] = calibration.group_reliability(ds, args.bins)
    if ds.kind == "mc":
        mi = mcls.entropy_decomposition(ds.prediction).mutual_information
        report["representation"] = fairness.representation_gap(mi, ds.groups)
    params = {"threshold": args.threshold, "rho0": args.rho0, "rho1": args.rho1, "bins": args.bins}
    return params, report, {}


def _band_csv(band):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    keys = list(band)
    w.writerow(keys)
    for i in range(len(band["x"])):
        w.writerow([repr(float(band[k][i])) for k in keys])
    return buf.getvalue()


def cmd_train_demo(args):
    from .lab import run_demo
    from .lab.mlp import TrainConfig

    if args.members < 1 or args.n_train < 2 or args.epochs < 1 or args.jobs < 1:
        raise UsageError("--members, --epochs and --jobs must be >= 1 and --n-train >= 2")
    try:
        config = TrainConfig(seed=args.seed, epochs=args.epochs, learning_rate=args.learning_rate)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    out = run_demo(seed=args.seed, n_members=args.members, n_train=args.n_train, config=config,
                   n_jobs=args.jobs)
    ens = out.pop("ensemble")
    if args.save_model:
        atomic_write(args.save_model, dumps(ens.to_dict()))
    params = {"seed": args.seed, "members": args.members, "n_train": args.n_train,
              "head": "heteroscedastic", "config": config,
              "member_seeds": [str(s) for s in ens.member_seeds]}
    sidecars = {"band.csv": _band_csv(out["band"])} if args.format == "csv" else {}
    return params, out, sidecars


COMMANDS = {
    "metrics": cmd_metrics,
    "calibration": cmd_calibration,
    "decide": cmd_decide,
    "audit": cmd_audit,
}


def _sidecar_path(output, suffix):
    out = Path(output)
    return out.with_name(out.stem + "." + suffix)


def run(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)

    notes = []
    try:
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always")
            if args.command == "train-demo":
                digest = None
                params, results, sidecars = cmd_train_demo(args)
            else:
                path = Path(args.input)
                if not path.is_file():
                    raise UsageError(f"input file {path} does not exist")
                digest = file_digest(path)
                ds = parse_predictions(path, args.format)
                params, results, sidecars = COMMANDS[args.command](args, ds, notes)
                params = {"input": str(path), "format": args.format or path.suffix.lstrip("."),
                          "seed": args.seed, **params}
        notes = [str(w.message) for w in caught] + notes
    except UsageError as exc:
        print(f"uqaudit {args.command}: error: {exc}", file=sys.stderr)
        return 2
    except UQAuditError as exc:
        print(f"uqaudit {args.command}: invalid input: {exc}", file=sys.stderr)
        return 1

    report = make_report(args.command, __version__, params, results, notes, digest, _accel.backend())
    text = dumps(report)
    if args.output == "-":
        sys.stdout.write(text)
        for suffix, body in sidecars.items():
            sys.stdout.write(f"# {suffix}\n{body}")
    else:
        atomic_write(args.output, text)
        for suffix, body in sidecars.items():
            atomic_write(_sidecar_path(args.output, suffix), body)
    return 0


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
