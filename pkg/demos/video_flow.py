"""Next-frame prediction by warping: a moving square with an unknown direction.

With one history frame the direction is invisible, so the regression flow
model blurs; a KBEST model learns one flow per direction (see its best-of-16
error).  With two history frames the direction is visible and plain
regression warps the square exactly.

    python3 demos/video_flow.py [epochs]
"""

import sys

import numpy as np

from csnet.evaluation import evaluate
from csnet.models import predict_frame
from csnet.synthdata import DatasetSpec, Task, generate
from csnet.train import TrainConfig, train

epochs = int(sys.argv[1]) if len(sys.argv) > 1 else 100


def show(frame):
    for row in frame:
        print("".join(" .:-=+*#%@"[min(9, int(v * 9.999))] if v > 0.05 else " " for v in np.clip(row, 0, 1)))


for nf, scheme in ((1, "REGRESSION"), (1, "KBEST"), (2, "REGRESSION")):
    ds = generate(DatasetSpec(Task.VIDEO, n_samples=1000, modes=2, history=nf, frame_size=(16, 16), seed=7))
    _, test = ds.split_parity()
    model, _ = train(TrainConfig(task=Task.VIDEO, scheme=scheme, K=4, epochs=epochs, history=nf, latent_dim=2,
                                 learning_rate=3e-3 if nf == 1 else 1e-3, log_eval_n=0, seed=1), ds)
    rep = evaluate(model, test, n_draw=16, k_max=16, seed=3)
    print(f"Nf={nf} {scheme}: top-1 {rep.top(1):.5f}  top-2 {rep.top(2):.5f}  best of 16 {rep.top(16):.5f}")

    # one test example: last history frame, truth, and the mean prediction
    _, pred = predict_frame(model, test.x[0], np.zeros(2))
    for title, img in (("last frame", test.x[0][-1]), ("truth", test.y[0][0]), ("prediction at z=mu", pred.data[0])):
        print(f"-- {title}")
        show(img)
