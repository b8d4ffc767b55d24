"""Repeated stratified evaluation on a synthetic cohort.

Runs ARMA, GCN, Chebyshev and MLP encoders, each with and without the
reconstruction decoder, on the same subject graph and prints mean +- std
over folds. Epochs are cut down so the script finishes in about a minute;
pass a larger number as the first argument for a longer run.

    python demos/03_cross_validation.py [epochs]
"""

import sys
import warnings

from armarecon import ExperimentConfig, run_experiment
from armarecon.experiment import METRICS, load_dataset

epochs = int(sys.argv[1]) if len(sys.argv) > 1 else 150
warnings.simplefilter("ignore")

base = ExperimentConfig(synth_n=200, synth_shift=0.03, synth_noise=0.05, alpha=0.8,
                        epochs=epochs, folds=5, train_frac=0.7, lambda_recon=0.9,
                        lr=1e-3)
cohort = load_dataset(base)
print(f"cohort: {cohort.n} subjects x {cohort.data.shape[1]} features, "
      f"{epochs} epochs, {base.folds} folds at {base.train_frac:.0%} train\n")

print(f"{'model':16s}" + "".join(f"{m:>16s}" for m in METRICS))
for model in ("arma", "gcn", "cheb", "mlp"):
    for variant in ("plain", "recon"):
        cfg = base.with_overrides({"model": model, "variant": variant})
        report = run_experiment(cfg, fm=cohort).report
        mean, std = report.mean(), report.std()
        cells = "".join(f"{mean[m]:9.3f} +- {std[m]:.2f}" for m in METRICS)
        print(f"{model + ' (' + variant + ')':16s}{cells}")
