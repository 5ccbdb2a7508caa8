#!/usr/bin/env python3
"""Cluster-count estimation study.

For each over-provisioning multiplier, pre-trains on every seeded split,
estimates the cluster count from the encoded features, and reports the
estimates with their error rates.

Usage: python scripts/cluster_count_experiment.py [--seeds N]
"""

import argparse
import sys
from pathlib import Path

import numpy as np

sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "src"))

from dac import (  # noqa: E402
    TrainConfig,
    encode,
    estimate_k,
    gen_synthetic,
    k_error,
    make_split,
    pretrain,
)

K_TRUE = 10


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--seeds", type=int, default=10)
    args = ap.parse_args()

    features, truth = gen_synthetic(K_TRUE, 100, 16, 20.0, seed=0)
    for mult in (1, 2, 3, 4):
        estimates = []
        for seed in range(args.seeds):
            data = make_split(features, truth, 0.75, 0.1, seed=seed)
            model = pretrain(data, TrainConfig(seed=seed))
            encoded = encode(model, features)
            estimates.append(estimate_k(encoded, k_prime=mult * K_TRUE, seed=seed))
        errors = [k_error(K_TRUE, k) for k in estimates]
        print(
            f"k_prime = {mult}x{K_TRUE}: estimates {estimates} "
            f"mean {np.mean(estimates):.1f}, mean error {np.mean(errors):.2f}%"
        )


if __name__ == "__main__":
    main()
