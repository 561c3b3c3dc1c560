"""Four forecasters, one protocol: one-step-ahead walk-forward on the
chronological test split, scored per channel, then rank-grouped.

Also prints each model's deployable size: the byte length of its
canonical serialization, the metric that matters on a memory-constrained
switch.
"""

import numpy as np

from flowcast.evaluation import point_metrics, scott_knott
from flowcast.experiment import evaluate_model
from flowcast.synthetic import seasonal_series

series = seasonal_series(n_bins=360, seed=404, interval=3600,
                         level=2000.0, trend=1.0,
                         season_amplitude=400.0, period=24, noise=40.0)
data = np.column_stack([series.counts, series.bytes]).astype(float)
cut = int(len(data) * 0.8)
print(f"series: {len(data)} hourly bins, train {cut}, test {len(data) - cut}")

configs = {
    "var": {"maxlags": 7, "ic": "hqic"},
    "hw": {"alpha": 0.5, "beta": 0.1, "gamma": 0.3, "phi": 1.0,
           "season_length": 24},
    "rrp": {"stop_depth": 4, "lags": 3},
    "bdt": {"max_depth": 8, "min_leaf": 1, "n_labels": 16, "lags": 2,
            "field_bits": 7},
}

print(f"\n{'model':6s} {'count MAE':>10s} {'bytes MAE':>12s} {'size bytes':>11s}")
for kind, params in configs.items():
    preds, size = evaluate_model(kind, data, cut, params, seed=1)
    rep_c = point_metrics(data[cut:, 0], preds[:, 0])
    rep_b = point_metrics(data[cut:, 1], preds[:, 1])
    print(f"{kind:6s} {rep_c.mae:10.2f} {rep_b.mae:12.0f} {size:11d}")

# Rank with several seeded repeats so the grouping has samples to chew on.
print("\ncollecting 6 seeded repeats per model for Scott-Knott...")
samples = {k: [] for k in configs}
for seed in range(6):
    shifted = seasonal_series(n_bins=360, seed=500 + seed, interval=3600,
                              level=2000.0, trend=1.0,
                              season_amplitude=400.0, period=24, noise=40.0)
    d = np.column_stack([shifted.counts, shifted.bytes]).astype(float)
    for kind, params in configs.items():
        preds, _ = evaluate_model(kind, d, cut, params, seed=seed)
        samples[kind].append(point_metrics(d[cut:, 0], preds[:, 0]).mae)

for group in scott_knott(samples):
    means = {m: f"{np.mean(samples[m]):.1f}" for m in group.members}
    print(f"  rank {group.rank}: {means}")
