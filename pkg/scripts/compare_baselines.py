"""Unseen-class accuracy and mAP of SSL against the LR, RLR and ESZSL baselines.

    python scripts/compare_baselines.py --noise 0.3 --seeds 5
"""

import argparse

import numpy as np

from sslzsl import Hyperparams, SyntheticSpec, evaluate, make_synthetic, train
from sslzsl import baselines
from sslzsl.eval import report_from_scores


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--seeds", type=int, default=5)
    ap.add_argument("--noise", type=float, default=0.3)
    ap.add_argument("--gamma", type=float, default=1.0)
    ap.add_argument("--lam", type=float, default=1.0)
    args = ap.parse_args()

    results = {name: [] for name in ("LR", "RLR", "ESZSL", "SSL")}
    for seed in range(args.seeds):
        ds, _ = make_synthetic(SyntheticSpec(noise_sigma=args.noise, seed=seed))
        for kind in baselines.KINDS:
            model = baselines.fit(kind, ds.train_features, ds.train_labels, ds.seen_descriptors, args.gamma, args.lam)
            rep = report_from_scores(baselines.scores(model, ds.test_features, ds.unseen_descriptors),
                                     ds.test_labels, ds.num_unseen)
            results[kind.upper()].append((rep.mean_accuracy, rep.map))
        params, _ = train(ds, Hyperparams(seed=seed))
        rep = evaluate(params, ds)
        results["SSL"].append((rep.mean_accuracy, rep.map))

    print(f"noise={args.noise}, {args.seeds} seeds")
    print(f"{'method':<8}{'acc %':>8}{'mAP %':>8}")
    for name, vals in results.items():
        acc, mAP = np.mean(vals, axis=0)
        print(f"{name:<8}{100 * acc:>8.2f}{100 * mAP:>8.2f}")


if __name__ == "__main__":
    main()
