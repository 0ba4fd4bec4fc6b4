"""AUC of each detector variant over several training seeds on the reference fleet.

    python3 scripts/auc_ordering.py --seeds 0 1 2

Prints one row per (seed, variant) and the per-variant median.
"""

import argparse
import time

import numpy as np

from meterguard.config import DataConfig
from meterguard.nn.autoencoder import Variant
from meterguard.nn.training import TrainConfig
from meterguard.scenario import build_reference, detect_fleet, prepare_training, train_detector


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--seeds", type=int, nargs="+", default=[0, 1, 2])
    ap.add_argument("--epochs", type=int, default=200)
    ap.add_argument("--hidden", type=int, default=16)
    args = ap.parse_args()

    cfg = DataConfig()
    data = build_reference(cfg)
    training = prepare_training(data.observed, cfg)
    auc = {v: [] for v in Variant}
    print(f"{'seed':>4}  {'variant':<10} {'AUC':>7} {'F1':>7} {'recall':>7} {'time':>7}")
    for seed in args.seeds:
        for v in Variant:
            t0 = time.perf_counter()
            model, _ = train_detector(v, training, TrainConfig(epochs=args.epochs, hidden=args.hidden, seed=seed))
            m = detect_fleet(model, data.observed, data.truth).metrics
            auc[v].append(m.auc)
            print(f"{seed:>4}  {v.value:<10} {m.auc:7.4f} {m.f1:7.4f} {m.recall:7.4f} {time.perf_counter() - t0:6.1f}s",
                  flush=True)
    print()
    for v in Variant:
        print(f"median {v.value:<10} {np.median(auc[v]):.4f}")


if __name__ == "__main__":
    main()
