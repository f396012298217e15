"""Experiment configuration and the gen-data / train / eval pipeline."""

import json
import os
from dataclasses import asdict, dataclass, field, fields

from .data import SplitSpec, gen_gaussian_mixture, gen_ood_ring, load_csv, save_csv, split
from .errors import ConfigurationError, ParameterError
from .model import load_checkpoint, save_checkpoint
from .rejection import DEFAULT_DELTA, DEFAULT_EPS, DEFAULT_RULES, RULES
from .report import evaluate, write_curves, write_report, write_scores
from .rng import MASK64
from .trainer import TrainConfig, train, write_log


@dataclass
class ExperimentConfig:
    # data
    num_classes: int = 4
    per_class: int = 750
    dim: int = 2
    spread: float = 0.5
    radius: float = 3.0
    train_fraction: float = 2 / 3
    ood_count: int = 1000
    ood_inner_radius: float = 5.0
    ood_outer_radius: float = 6.0
    # training
    objective: str = "hybrid"
    beta: float = 0.95
    lambda_pl: float = 0.05
    xi: float = 2.0
    epochs: int = 60
    batch_size: int = 64
    lr: float = 0.001
    momentum: float = 0.9
    weight_decay: float = 2e-4
    lr_decay_epochs: list = field(default_factory=lambda: [30, 45])
    lr_decay_factor: float = 0.1
    threshold_mode: str = "learnable_per_class"
    hidden_sizes: list = field(default_factory=lambda: [32, 32])
    feat_dim: int = 8
    constant_threshold: float = None
    # rejection / evaluation
    eps: float = DEFAULT_EPS
    delta: float = DEFAULT_DELTA
    rules: list = field(default_factory=lambda: list(DEFAULT_RULES))
    seed: int = 0
    out_dir: str = "runs/default"

    @classmethod
    def from_dict(cls, doc):
        known = {f.name for f in fields(cls)}
        unknown = sorted(set(doc) - known)
        if unknown:
            raise ConfigurationError(f"unknown config keys: {', '.join(unknown)}")
        cfg = cls(**doc)
        cfg.validate()
        return cfg

    @classmethod
    def load(cls, path=None, overrides=()):
        doc = {}
        if path is not None:
            try:
                with open(path, encoding="utf-8") as fh:
                    doc = json.load(fh)
            except json.JSONDecodeError as exc:
                raise ConfigurationError(f"{path}: invalid JSON ({exc})") from None
            if not isinstance(doc, dict):
                raise ConfigurationError(f"{path}: config must be a JSON object")
        for item in overrides:
            key, sep, raw = item.partition("=")
            if not sep:
                raise ConfigurationError(f"--set expects key=value, got {item!r}")
            try:
                doc[key] = json.loads(raw)
            except json.JSONDecodeError:
                doc[key] = raw
        return cls.from_dict(doc)

    def validate(self):
        def need(cond, name, msg):
            if not cond:
                raise ConfigurationError(f"{name}: {msg} (got {getattr(self, name)!r})")

        need(isinstance(self.num_classes, int) and self.num_classes >= 1, "num_classes", "must be an integer >= 1")
        need(isinstance(self.per_class, int) and self.per_class >= 1, "per_class", "must be an integer >= 1")
        need(isinstance(self.dim, int) and self.dim >= 2, "dim", "must be an integer >= 2")
        need(self.spread > 0, "spread", "must be > 0")
        need(self.radius > 0, "radius", "must be > 0")
        need(isinstance(self.train_fraction, (int, float)) and 0 < self.train_fraction < 1,
             "train_fraction", "must lie in (0, 1)")
        n = self.num_classes * self.per_class
        need(1 <= int(self.train_fraction * n) <= n - 1, "train_fraction", "leaves an empty split")
        need(isinstance(self.ood_count, int) and self.ood_count >= 1, "ood_count", "must be an integer >= 1")
        need(0 < self.ood_inner_radius < self.ood_outer_radius, "ood_inner_radius",
             "need 0 < ood_inner_radius < ood_outer_radius")
        need(self.eps >= 0, "eps", "must be >= 0")
        need(0 <= self.delta <= 1, "delta", "must lie in [0, 1]")
        need(isinstance(self.rules, list) and self.rules and all(r in RULES for r in self.rules),
             "rules", f"must be a non-empty list drawn from {sorted(RULES)}")
        need(isinstance(self.seed, int) and 0 <= self.seed <= MASK64, "seed", "must be a 64-bit unsigned integer")
        try:
            self.train_config().validate()
        except ParameterError as exc:
            raise ConfigurationError(str(exc)) from None

    def train_config(self):
        names = {f.name for f in fields(TrainConfig)}
        return TrainConfig(**{k: v for k, v in asdict(self).items() if k in names})

    def seeds(self):
        """Independent seeds for the mixture, OOD ring and split."""
        return {name: (self.seed + offset) & MASK64
                for offset, name in enumerate(("mixture", "ood", "split"))}


def generate_data(cfg):
    s = cfg.seeds()
    mixture = gen_gaussian_mixture(cfg.num_classes, cfg.per_class, cfg.dim, cfg.spread,
                                   cfg.radius, s["mixture"])
    train_set, ind_test = split(mixture, SplitSpec(cfg.train_fraction, s["split"]))
    ood_test = gen_ood_ring(cfg.ood_count, cfg.dim, cfg.ood_inner_radius,
                            cfg.ood_outer_radius, s["ood"], cfg.num_classes)
    return train_set, ind_test, ood_test


def _ensure_dir(path):
    os.makedirs(path, exist_ok=True)
    if not os.access(path, os.W_OK):
        raise PermissionError(f"output directory not writable: {path}")


def cmd_gen_data(cfg, out_dir=None):
    out_dir = out_dir or cfg.out_dir
    _ensure_dir(out_dir)
    train_set, ind_test, ood_test = generate_data(cfg)
    paths = {}
    for name, ds in (("train", train_set), ("ind_test", ind_test), ("ood_test", ood_test)):
        paths[name] = os.path.join(out_dir, f"{name}.csv")
        save_csv(ds, paths[name])
    return paths


def load_splits(cfg, data_dir):
    k = cfg.num_classes
    return tuple(load_csv(os.path.join(data_dir, f"{name}.csv"), k)
                 for name in ("train", "ind_test", "ood_test"))


def cmd_train(cfg, out_dir=None, data_dir=None, log_fn=None):
    out_dir = out_dir or cfg.out_dir
    _ensure_dir(out_dir)
    train_set = load_csv(os.path.join(data_dir or out_dir, "train.csv"), cfg.num_classes)
    params, log = train(cfg.train_config(), train_set, log_fn)
    save_checkpoint(params, os.path.join(out_dir, "model.json"))
    write_log(log, os.path.join(out_dir, "train_log.jsonl"))
    return params, log


def cmd_eval(cfg, model_path=None, out_dir=None, data_dir=None):
    out_dir = out_dir or cfg.out_dir
    _ensure_dir(out_dir)
    params = load_checkpoint(model_path or os.path.join(out_dir, "model.json"))
    _, ind_test, ood_test = load_splits(cfg, data_dir or out_dir)
    report, table = evaluate(params, ind_test, ood_test, cfg.rules, cfg.eps, cfg.delta)
    write_report(report, os.path.join(out_dir, "metrics.json"))
    write_scores(table, os.path.join(out_dir, "scores.csv"))
    write_curves(table, os.path.join(out_dir, "roc.csv"), os.path.join(out_dir, "rc.csv"))
    return report


def run_pipeline(cfg, out_dir=None):
    """gen-data, train and eval into one directory; returns the metrics report."""
    out_dir = out_dir or cfg.out_dir
    cmd_gen_data(cfg, out_dir)
    cmd_train(cfg, out_dir)
    return cmd_eval(cfg, out_dir=out_dir)
