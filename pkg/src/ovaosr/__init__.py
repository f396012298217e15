"""Open-set recognition with one-vs-all prototype classifiers and evidence fusion."""

from .data import Dataset, SplitSpec, gen_gaussian_mixture, gen_ood_ring, load_csv, save_csv, split
from .model import ModelParams, init_params
from .posterior import PosteriorK1, dste_combine, dste_combine_oracle, sigmoid_ova, softmax_closed
from .trainer import TrainConfig, train

__all__ = [
    "Dataset", "SplitSpec", "gen_gaussian_mixture", "gen_ood_ring", "load_csv", "save_csv",
    "split", "ModelParams", "init_params", "PosteriorK1", "dste_combine",
    "dste_combine_oracle", "sigmoid_ova", "softmax_closed", "TrainConfig", "train",
]
