#!/usr/bin/env python3
"""Regenerate the irregular-sampling fixtures under data/.

Emulates a ground-based monitoring campaign: nightly visibility windows,
random weather losses, 1-3 exposures per clear night and a seasonal gap.
Times are days relative to the campaign start.
"""
import numpy as np


def campaign(rng, n_target, nights, keep_prob, gap, per_night=(1, 3)):
    times = []
    for night in range(nights):
        if gap[0] <= night < gap[1]:
            continue
        if rng.random() > keep_prob:
            continue
        k = rng.integers(per_night[0], per_night[1] + 1)
        start = night + 0.15 + 0.5 * rng.random()
        times.extend(start + 0.02 * np.arange(k) + 0.005 * rng.random(k))
    times = np.sort(np.asarray(times))
    if len(times) > n_target:
        idx = np.sort(rng.choice(len(times), n_target, replace=False))
        times = times[idx]
    return np.round(times, 5)


def write(path, times):
    with open(path, "w") as f:
        f.write("# irregular sampling fixture: one observation time per line [days]\n")
        for t in times:
            f.write(f"{t:.5f}\n")
    print(path, len(times), f"span={times[-1]-times[0]:.1f} d")


def clustered(seed=555331):
    rng = np.random.default_rng(seed)
    times = []
    for night in range(330):
        if 140 <= night < 190:
            continue
        if rng.random() > 0.165:
            continue
        k = rng.integers(2, 5)
        start = night + 0.15 + 0.3 * rng.random()
        offs = np.sort(rng.uniform(0.0, 0.25, k))
        times.extend(start + offs + 0.004 * rng.random(k))
    return np.round(np.sort(np.asarray(times)), 5)


def main():
    rng = np.random.default_rng(20240817)
    dense = campaign(rng, 200, nights=370, keep_prob=0.45, gap=(180, 240))
    write("data/sampling_dense.txt", dense)
    sparse = campaign(rng, 140, nights=300, keep_prob=0.40, gap=(130, 175), per_night=(1, 2))
    write("data/sampling_sparse.txt", sparse)
    # single-epoch nights over a sparse campaign: every 5th point of dense
    write("data/sampling_nightly.txt", dense[::5])
    # multi-exposure nights: strong within-night correlation under red noise
    write("data/sampling_clustered.txt", clustered())


if __name__ == "__main__":
    main()
