"""
Two rotating Gaussian classes
=============================

Both class centres turn half a circle around the origin over 2000 rounds.
Every learner sees the same stream; only OMD-all is allowed to ask for
every label. Run with ``python demos/gaussian_drift.py``; it takes about
half a minute.
"""
import numpy as np

from osamd import load_config, run_experiment

# the default configuration is this experiment: 10 seeded repeats, all six learners
config = load_config(overrides={"repeats": 5})
print(config.environment)

result = run_experiment(config)

print(f"\n{'learner':14s} {'accuracy':>9s} {'labels':>8s} {'regret':>8s}")
for name, row in result.summary.items():
    print(f"{name:14s} {100 * row['accuracy_mean']:8.2f}% {100 * row['label_fraction_mean']:7.2f}% "
          f"{row['final_regret_mean']:8.1f}")

# regret keeps growing for everybody, because the best classifier moves
# every round. Look at how it accumulates along one run.
run = result.records["OSAMD"][0]
regret = run.regret
for t in (250, 500, 1000, 1500, 2000):
    print(f"t={t:5d}  regret {regret[t - 1]:7.2f}  labels so far {int(run.queried[:t].sum()):4d}")

# queries cluster where the teacher is unsure, i.e. close to its boundary
queried_loss = run.instantaneous_loss[run.queried].mean()
skipped_loss = run.instantaneous_loss[~run.queried].mean()
print(f"\nmean hinge loss on queried rounds {queried_loss:.3f}, on skipped rounds {skipped_loss:.3f}")
print("fraction of queried rounds among the first 100:", np.mean(run.queried[:100]))
