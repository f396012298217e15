"""Command-line entry point: ``ovaosr {gen-data,train,eval,curves}``.

Exit codes: 0 success, 2 configuration error, 3 data/I-O error,
4 runtime or numeric error.
"""

import argparse
import os
import sys

from .errors import ConfigurationError, FormatError, OsrError, ParameterError
from .experiment import ExperimentConfig, cmd_eval, cmd_gen_data, cmd_train
from .report import read_scores, write_curves

EXIT_CONFIG = 2
EXIT_DATA = 3
EXIT_RUNTIME = 4


def build_parser():
    parser = argparse.ArgumentParser(prog="ovaosr", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", help="JSON experiment config")
        p.add_argument("--set", dest="overrides", action="append", default=[],
                       metavar="KEY=VALUE", help="override one config key (repeatable)")
        p.add_argument("--out", help="output directory (default: config out_dir)")

    common(sub.add_parser("gen-data", help="write train/ind_test/ood_test CSV files"))
    p = sub.add_parser("train", help="train a model, write model.json and train_log.jsonl")
    common(p)
    p.add_argument("--data", help="directory holding train.csv (default: output directory)")
    p = sub.add_parser("eval", help="write metrics.json, scores.csv, roc.csv, rc.csv")
    common(p)
    p.add_argument("--model", help="checkpoint path (default: <out>/model.json)")
    p.add_argument("--data", help="directory holding the test CSVs (default: output directory)")
    p = sub.add_parser("curves", help="re-emit roc.csv and rc.csv from a scores.csv")
    p.add_argument("--scores", required=True)
    p.add_argument("--out", required=True)
    return parser


def _print_epoch(rec):
    if rec.epoch == 0 or (rec.epoch + 1) % 10 == 0:
        parts = " ".join(f"{k}={v:.5f}" for k, v in rec.loss.items())
        print(f"[{rec.stage}] epoch {rec.epoch + 1}: lr={rec.lr:g} acc={rec.train_accuracy:.4f} {parts}",
              file=sys.stderr)


def run(argv=None):
    args = build_parser().parse_args(argv)
    if args.command == "curves":
        os.makedirs(args.out, exist_ok=True)
        table = read_scores(args.scores)
        write_curves(table, os.path.join(args.out, "roc.csv"), os.path.join(args.out, "rc.csv"))
        return 0
    cfg = ExperimentConfig.load(args.config, args.overrides)
    if args.command == "gen-data":
        for name, path in cmd_gen_data(cfg, args.out).items():
            print(f"{name}: {path}")
    elif args.command == "train":
        _, log = cmd_train(cfg, args.out, args.data, log_fn=_print_epoch)
        last = log[-1]
        parts = " ".join(f"{k}={v:.6g}" for k, v in last.loss.items())
        print(f"epoch {last.epoch + 1} lr={last.lr:g} train_accuracy={last.train_accuracy:.6g} {parts}")
    elif args.command == "eval":
        report = cmd_eval(cfg, args.model, args.out, args.data)
        print(f"accuracy={report['accuracy']:.6g}")
        for rule, m in report["per_rule"].items():
            print(f"{rule}: ood_auroc={m['ood']['auroc']} misd_aurc={m['misd']['aurc']}")
    return 0


def main(argv=None):
    try:
        return run(argv)
    except (ConfigurationError, ParameterError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (FormatError, OSError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except (OsrError, FloatingPointError, ArithmeticError) as exc:
        print(f"runtime error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
