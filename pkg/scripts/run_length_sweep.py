#!/usr/bin/env python3
"""Sweep the input-history cap of the sequence model on simulated data.

Trains the model once per cap (same seed, same split) on a synthetic
portfolio and reports the best validation loss for each cap, so the
effect of shorter histories on the calendar-wise error is visible.
"""

from __future__ import annotations

import argparse
import os
import sys

sys.path.insert(0, os.path.join(os.path.dirname(__file__), "..", "src"))

from mvreserve.deep_triangle import SYMMETRIC, TrainConfig
from mvreserve.simulation import default_params, generate_portfolio, sequence_length_sweep


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--pairs", type=int, default=10)
    parser.add_argument("--seed", type=int, default=3)
    parser.add_argument("--lengths", default="1,2,3,4,5,6,7,8,9")
    parser.add_argument("--hidden", type=int, default=64)
    parser.add_argument("--max-epochs", type=int, default=1000)
    parser.add_argument("--patience", type=int, default=200)
    parser.add_argument("--out", default="sweep.csv")
    args = parser.parse_args()

    lengths = tuple(int(part) for part in args.lengths.split(","))
    params = default_params(n_pairs=args.pairs, seed=args.seed)
    upper, _ = generate_portfolio(params)
    config = TrainConfig(
        max_epochs=args.max_epochs,
        patience=args.patience,
        hidden=args.hidden,
        loss_kind=SYMMETRIC,
        seed=7,
    )
    sweep = sequence_length_sweep(upper, lengths, config)
    sweep.write_csv(args.out)

    for length, loss in zip(sweep.lengths, sweep.valid_losses):
        marker = "  <- best" if length == sweep.best_length else ""
        print(f"history cap {length}: valid loss {loss:.6e}{marker}")
    print(f"wrote {args.out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
