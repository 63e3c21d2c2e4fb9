"""Two equally likely futures: a deterministic model splits the difference.

Trains REGRESSION, KBEST and VA on the two-mode intersection world and
prints their top-1 / top-4 velocity errors.  The regression model predicts
roughly the mean of the two modes, so its error sits near the mode offset;
the stochastic models cover both modes once a few samples are allowed.

    python3 demos/regression_to_mean.py [epochs]
"""

import sys
import time

from csnet.evaluation import evaluate
from csnet.synthdata import DatasetSpec, Task, generate
from csnet.train import TrainConfig, train

epochs = int(sys.argv[1]) if len(sys.argv) > 1 else 60

ds = generate(DatasetSpec(Task.TRAJECTORY, n_samples=2000, modes=2, horizon=20, frame_size=(16, 16), seed=7))
_, test = ds.split_parity()

print(f"{'scheme':<11} {'top-1':>7} {'top-4':>7}   time")
for scheme in ("REGRESSION", "KBEST", "VA"):
    t = time.perf_counter()
    model, _ = train(TrainConfig(task=Task.TRAJECTORY, scheme=scheme, epochs=epochs, latent_dim=2, log_eval_n=0,
                                 seed=1), ds)
    rep = evaluate(model, test, n_draw=32, k_max=15, seed=3)
    print(f"{scheme:<11} {rep.top(1):7.4f} {rep.top(4):7.4f}   {time.perf_counter() - t:.0f}s")
