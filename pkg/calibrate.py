"""Dev-only helper: run the acceptance-style arm matrix over seed sets."""
import sys
import time

import numpy as np
from dataclasses import replace

from cspn import TrainConfig, train
from cspn.train import baseline_config


def matrix(seeds, arms_wanted=("oracle", "baseline", "noisy18", "noisy90")):
    rows = {}
    for seed in seeds:
        cfg = TrainConfig(seed=seed)
        arms = {
            "oracle": cfg,
            "baseline": baseline_config(cfg),
            "noisy18": replace(cfg, size_source="saliency"),
            "noisy90": replace(cfg, size_source="saliency", tau=0.9),
            "soft": replace(cfg, soft_target=True),
        }
        rows[seed] = {name: train(arms[name])[1][-1].val_miou for name in arms_wanted}
        print("  ", seed, {k: round(v, 3) for k, v in rows[seed].items()}, flush=True)
    n = len(rows)
    between = sum(rows[s]["baseline"] <= rows[s]["noisy18"] <= rows[s]["oracle"] for s in rows)
    below = sum(rows[s]["noisy90"] < rows[s]["noisy18"] for s in rows)
    gap = np.mean([rows[s]["oracle"] - rows[s]["baseline"] for s in rows])
    print(f"   between {between}/{n}  below {below}/{n}  c6 gap {gap:.3f}")
    if "soft" in arms_wanted:
        soft_gap = np.mean([rows[s]["soft"] - rows[s]["oracle"] for s in rows])
        print(f"   c8 soft-minus-argmax {soft_gap:+.3f}")
    return rows


if __name__ == "__main__":
    sets = sys.argv[1:] or ["1-5", "42-46"]
    t0 = time.time()
    for spec_str in sets:
        lo, hi = spec_str.split("-")
        print(f"seeds {spec_str}:")
        matrix(range(int(lo), int(hi) + 1))
    print(f"total {time.time()-t0:.0f}s")
