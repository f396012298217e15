"""Constant-shared vs. learnable-shared vs. per-class thresholds, with and without PL."""

import argparse
from dataclasses import asdict

import numpy as np

from ovaosr.experiment import ExperimentConfig, generate_data
from ovaosr.model import THRESHOLD_MODES
from ovaosr.report import evaluate
from ovaosr.trainer import TrainConfig, train


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--seeds", type=int, default=3)
    args = ap.parse_args()

    print(f"{'mode':<20} {'lambda':>6} {'acc':>7} {'ood_auroc':>10} {'aurc_x1e3':>10}")
    for lam in (0.0, 0.05):
        for mode in THRESHOLD_MODES:
            res = []
            for seed in range(args.seeds):
                cfg = ExperimentConfig(seed=seed, lambda_pl=lam, threshold_mode=mode)
                train_set, ind, ood = generate_data(cfg)
                model, _ = train(TrainConfig(**asdict(cfg.train_config())), train_set)
                rep, _ = evaluate(model, ind, ood, ["unified"], cfg.eps, cfg.delta)
                u = rep["per_rule"]["unified"]
                res.append((rep["accuracy"], u["ood"]["auroc"], u["misd"]["aurc_x1000"]))
            acc, auc, aurc = np.mean(res, axis=0)
            print(f"{mode:<20} {lam:6.2f} {acc:7.4f} {auc:10.4f} {aurc:10.3f}")


if __name__ == "__main__":
    main()
