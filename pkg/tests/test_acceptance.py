"""Acceptance suite: one test per criterion, each printing a single PASS/FAIL line.

The lines are also collected into an "acceptance criteria" section at the
end of the pytest run (see conftest.py).  Training-based criteria share
session fixtures so every model is trained once.
"""

import math
import time

import numpy as np
import pytest

from _util import KINDS, end_to_end_errors
from csnet import tensor as T
from csnet.cli import main as cli_main
from csnet.errors import FormatError
from csnet.evaluation import EvalReport, draw_predictions, evaluate
from csnet.gradcheck import check_gradients
from csnet.losses import kbest_loss, mcml_kbest_gap, mcml_loss, regression_loss, va_loss
from csnet.models import bilinear_warp, gather_at, load_checkpoint, save_checkpoint
from csnet.nn import GaussianParams, gaussian_log_density, kl_diag, replicate_spatial, sample
from csnet.synthdata import DatasetSpec, Task, generate, read_dataset, write_dataset
from csnet.tensor import Tensor
from csnet.train import TrainConfig, train

pytestmark = pytest.mark.acceptance

FD_SEEDS = range(20)


def verdict(request, n: int, ok: bool, detail: str) -> None:
    line = f"criterion {n}: {'PASS' if ok else 'FAIL'}  {detail}"
    request.config.csnet_criteria[n] = line
    print(line)
    assert ok, line


# -- 1. gradients ------------------------------------------------------------------------------------


def _leaf(rng, *shape, lo=-2.0, hi=2.0):
    return Tensor(rng.uniform(lo, hi, size=shape), requires_grad=True)


def _op_cases(rng):
    """(name, loss closure, inputs) for every differentiable primitive."""
    a, b = _leaf(rng, 3, 4), _leaf(rng, 3, 1)
    pos = _leaf(rng, 3, 4, lo=0.5, hi=2.0)
    w = Tensor(rng.normal(size=(3, 4)))
    m1, m2 = _leaf(rng, 3, 4), _leaf(rng, 4, 2)
    x, lw, lb = _leaf(rng, 5, 3), _leaf(rng, 4, 3), _leaf(rng, 4)
    img, ker = _leaf(rng, 2, 2, 6, 6), _leaf(rng, 3, 2, 3, 3)
    up, uker = _leaf(rng, 3, 4, 4), _leaf(rng, 3, 2, 4, 4)
    uw = Tensor(rng.normal(size=(2, 8, 8)))
    frame = _leaf(rng, 2, 2, 6, 6)
    flow = Tensor(rng.integers(-2, 3, size=(2, 2, 6, 6)) + rng.uniform(0.2, 0.8, size=(2, 2, 6, 6)),
                  requires_grad=True)
    target = Tensor(rng.normal(size=(2, 2, 6, 6)))
    fmap = _leaf(rng, 2, 3, 4, 4)
    coords = rng.integers(0, 4, size=(2, 2, 2))
    qm, qs, pm, ps = _leaf(rng, 4, 2), _leaf(rng, 4, 2, lo=0.3), _leaf(rng, 4, 2), _leaf(rng, 4, 2, lo=0.3)
    eps = rng.normal(size=(4, 2))
    z = _leaf(rng, 4, 2)
    zw = Tensor(rng.normal(size=(4, 2, 3, 2)))
    samples, y = _leaf(rng, 5, 3, 4), Tensor(rng.normal(size=(3, 4)))
    pred = _leaf(rng, 3, 4)
    vpred, vy = _leaf(rng, 4, 3), Tensor(rng.normal(size=(4, 3)))
    return [
        ("add", lambda: T.sum(T.square(a + b)), [a, b]),
        ("sub", lambda: T.sum(T.square(a - b)), [a, b]),
        ("mul", lambda: T.sum(T.square(a * b)), [a, b]),
        ("div", lambda: T.sum(a / pos), [a, pos]),
        ("neg", lambda: T.sum(T.neg(a) * w), [a]),
        ("square", lambda: T.sum(T.square(a) * w), [a]),
        ("exp", lambda: T.sum(T.exp(a) * w), [a]),
        ("log", lambda: T.sum(T.log(pos) * w), [pos]),
        ("relu", lambda: T.sum(T.relu(a) * w), [a]),
        ("softplus", lambda: T.sum(T.softplus(a) * w), [a]),
        ("matmul", lambda: T.sum(T.square(m1 @ m2)), [m1, m2]),
        ("linear", lambda: T.sum(T.square(T.linear(x, lw, lb))), [x, lw, lb]),
        ("conv2d", lambda: T.sum(T.square(T.conv2d(img, ker, 1, 1))), [img, ker]),
        ("conv_transpose2d", lambda: T.sum(T.conv_transpose2d(up, uker, 2, 1) * uw), [up, uker]),
        ("sum_axis", lambda: T.sum(T.square(T.sum(a, axis=1))), [a]),
        ("mean", lambda: T.sum(T.square(T.mean(a, axis=0))), [a]),
        ("amin", lambda: T.sum(T.square(T.amin(a, axis=1))), [a]),
        ("amax", lambda: T.sum(T.square(T.amax(a, axis=0))), [a]),
        ("logsumexp", lambda: T.sum(T.square(T.logsumexp(a, axis=1))), [a]),
        ("reshape", lambda: T.sum(T.reshape(a, (4, 3)) * Tensor(np.arange(12.0).reshape(4, 3))), [a]),
        ("concat", lambda: T.sum(T.square(T.concat([a, pos], axis=0)) * Tensor(np.arange(24.0).reshape(6, 4))),
         [a, pos]),
        ("stack", lambda: T.sum(T.square(T.stack([a, pos], axis=1))), [a, pos]),
        ("take", lambda: T.sum(T.square(T.take(a, [0, 2, 2], axis=0))), [a]),
        ("index", lambda: T.sum(T.square(a[1:, ::2])), [a]),
        ("bilinear_warp", lambda: T.sum(T.square(bilinear_warp(frame, flow) - target)), [frame, flow]),
        ("gather_at", lambda: T.sum(T.square(gather_at(fmap, coords))), [fmap]),
        ("replicate_spatial", lambda: T.sum(T.square(replicate_spatial(z, 3, 2)) * zw), [z]),
        ("sample", lambda: T.sum(T.square(sample(GaussianParams(qm, qs), eps).z)), [qm, qs]),
        ("gaussian_log_density", lambda: T.sum(gaussian_log_density(z, GaussianParams(pm, ps))), [z, pm, ps]),
        ("kl_diag", lambda: T.sum(kl_diag(GaussianParams(qm, qs), GaussianParams(pm, ps))), [qm, qs, pm, ps]),
        ("regression_loss", lambda: regression_loss(pred, y), [pred]),
        ("mcml_loss", lambda: mcml_loss(samples, y, 0.5), [samples]),
        ("kbest_loss", lambda: kbest_loss(samples, y), [samples]),
        ("va_loss", lambda: va_loss(vpred, vy, GaussianParams(qm, qs), GaussianParams(pm, ps), batched=True),
         [vpred, qm, qs, pm, ps]),
    ]


def test_criterion_1_gradients(request):
    t0 = time.perf_counter()
    worst_op, worst_op_name = 0.0, ""
    for seed in FD_SEEDS:
        rng = np.random.default_rng(seed)
        for name, fn, inputs in _op_cases(rng):
            err = max(check_gradients(fn, inputs, step=1e-6).values())
            if err > worst_op:
                worst_op, worst_op_name = err, name
    worst_e2e, worst_kind = 0.0, ""
    for seed in FD_SEEDS:
        for task, decoder in KINDS:
            err = max(end_to_end_errors(task, decoder, seed).values())
            if err > worst_e2e:
                worst_e2e, worst_kind = err, decoder.value
    elapsed = time.perf_counter() - t0
    ok = worst_op < 1e-4 and worst_e2e < 1e-3 and elapsed < 60
    verdict(request, 1, ok, f"ops max rel err {worst_op:.2e} ({worst_op_name}) < 1e-4; end-to-end {worst_e2e:.2e} "
                            f"({worst_kind}) < 1e-3; {len(FD_SEEDS)} seeds; {elapsed:.1f}s < 60s")


# -- 2. loss identities --------------------------------------------------------------------------------


def test_criterion_2_loss_identities(request):
    rng = np.random.default_rng(2)
    checks = {}
    worst = 0.0
    for _ in range(50):
        pred, y = rng.normal(size=(3, 4)), rng.normal(size=(3, 4))
        nu = rng.uniform(0.1, 3.0)
        reg = regression_loss(pred, y).item()
        worst = max(worst, abs(mcml_loss([pred], y, nu).item() - reg / (2 * nu)),
                    abs(kbest_loss([pred], y).item() - reg))
    checks["K=1 identities"] = worst <= 1e-12
    p = GaussianParams(Tensor(rng.normal(size=(5, 3))), Tensor(rng.uniform(0.2, 2.0, size=(5, 3))))
    checks["KL(p,p)=0"] = np.all(kl_diag(p, p).data == 0.0)
    kl = kl_diag(GaussianParams(Tensor([1.0]), Tensor([1.0])), GaussianParams(Tensor([0.0]), Tensor([1.0]))).item()
    checks["KL(N(1,1)||N(0,1))=0.5"] = abs(kl - 0.5) <= 1e-12
    bound_ok = True
    for _ in range(1000):
        K = int(rng.integers(1, 20))
        nu = float(rng.uniform(0.05, 5.0))
        samples, y = rng.normal(size=(K, 6)) * rng.uniform(0.1, 3.0), rng.normal(size=6)
        mc = mcml_loss(samples, y, nu).item()
        bound_ok &= mc >= mcml_kbest_gap(kbest_loss(samples, y).item(), nu, K) - 1e-12
    checks["logsumexp bound (1000 sets)"] = bound_ok
    failed = [k for k, v in checks.items() if not v]
    verdict(request, 2, not failed, f"K=1 max diff {worst:.1e}; KL(N(1,1)||N(0,1)) = {kl!r}; "
                                    + ("all identities hold" if not failed else "failed: " + ", ".join(failed)))


# -- 3. warp oracle ------------------------------------------------------------------------------------------


def _shift_oracle(frame: np.ndarray, flow: np.ndarray) -> np.ndarray:
    c, h, w = frame.shape
    out = np.empty_like(frame)
    for i in range(h):
        for j in range(w):
            r = min(max(i + int(flow[0, i, j]), 0), h - 1)
            q = min(max(j + int(flow[1, i, j]), 0), w - 1)
            out[:, i, j] = frame[:, r, q]
    return out


def test_criterion_3_warp_oracle(request):
    rng = np.random.default_rng(3)
    worst, identity = 0.0, True
    for _ in range(50):
        frame = rng.uniform(size=(1, 16, 16))
        flow = rng.integers(-20, 21, size=(2, 16, 16)).astype(np.float64)
        worst = max(worst, float(np.abs(bilinear_warp(frame, flow).data - _shift_oracle(frame, flow)).max()))
        identity &= np.array_equal(bilinear_warp(frame, np.zeros((2, 16, 16))).data, frame)
    ok = worst <= 1e-12 and identity
    verdict(request, 3, ok, f"50 frames 1x16x16, max |warp - index-shift oracle| = {worst:.1e}; "
                            f"zero flow bit-exact identity: {identity}")


# -- shared training fixtures ---------------------------------------------------------------------------------

TRAJ = dict(n_samples=2000, horizon=20, frame_size=(16, 16), seed=7)
TRAJ_TRAIN = dict(task=Task.TRAJECTORY, epochs=60, latent_dim=2, log_eval_n=0, seed=1)
TRAJ_EVAL = dict(n_draw=32, k_max=15, seed=3)


def _fit_and_eval(ds, **kw):
    model, _ = train(TrainConfig(**dict(TRAJ_TRAIN, **kw)), ds)
    return model, evaluate(model, ds.split_parity()[1], **TRAJ_EVAL)


@pytest.fixture(scope="session")
def two_mode_runs():
    t0 = time.perf_counter()
    out = {}
    for nf in (1, 4):
        ds = generate(DatasetSpec(Task.TRAJECTORY, modes=2, history=nf, **TRAJ))
        schemes = ("REGRESSION", "KBEST", "VA") if nf == 1 else ("REGRESSION", "VA")
        for scheme in schemes:
            out[nf, scheme] = _fit_and_eval(ds, scheme=scheme, K=15, history=nf)
        out[nf, "data"] = ds
        out[nf, "seconds"] = time.perf_counter() - t0
        t0 = time.perf_counter()
    return out


# -- 4. regression to the mean ----------------------------------------------------------------------------------


def test_criterion_4_regression_to_mean(request, two_mode_runs):
    reg, kb, va = (two_mode_runs[1, s][1] for s in ("REGRESSION", "KBEST", "VA"))
    secs = two_mode_runs[1, "seconds"]
    ok = (0.8 <= reg.top(1) <= 1.2 and kb.top(4) < 0.25 and va.top(4) < 0.25
          and kb.top(4) <= va.top(4) < reg.top(4) and secs < 300)
    verdict(request, 4, ok, f"REGRESSION top-1 {reg.top(1):.4f} in [0.8, 1.2]; top-4 KBEST {kb.top(4):.4f} <= "
                            f"VA {va.top(4):.4f} < REGRESSION {reg.top(4):.4f}, both < 0.25; {secs:.0f}s < 300s")


# -- 5. uncertainty vs history --------------------------------------------------------------------------------


def test_criterion_5_history_tradeoff(request, two_mode_runs):
    r1, v1 = two_mode_runs[1, "REGRESSION"][1].top(1), two_mode_runs[1, "VA"][1].top(1)
    r4, v4 = two_mode_runs[4, "REGRESSION"][1].top(1), two_mode_runs[4, "VA"][1].top(1)
    ratio = r1 / r4 if r4 > 0 else math.inf
    gap1, gap4 = r1 - v1, r4 - v4
    ok = ratio >= 3.0 and gap4 < gap1
    verdict(request, 5, ok, f"REGRESSION top-1 Nf=1 {r1:.4f} -> Nf=4 {r4:.4f} (x{ratio:.3g} >= 3); "
                            f"gap REG-VA Nf=1 {gap1:+.4f} -> Nf=4 {gap4:+.4f} (must decrease)")


# -- 6. K sweep -------------------------------------------------------------------------------------------------


def test_criterion_6_k_sweep(request):
    ds = generate(DatasetSpec(Task.TRAJECTORY, modes=4, history=1, **TRAJ))
    ks, seeds = (1, 5, 15), (1, 2, 3)
    top1 = np.zeros((len(ks), len(seeds)))
    top4 = np.zeros_like(top1)
    for i, K in enumerate(ks):
        for j, seed in enumerate(seeds):
            _, rep = _fit_and_eval(ds, scheme="KBEST", K=K, seed=seed)
            top1[i, j], top4[i, j] = rep.top(1), rep.top(4)
    m1, m4 = np.median(top1, axis=1), np.median(top4, axis=1)
    slack = 0.05
    ok = all(m1[i + 1] >= m1[i] * (1 - slack) for i in range(2)) and all(
        m4[i + 1] <= m4[i] * (1 + slack) for i in range(2))
    fmt = lambda v: " / ".join(f"{x:.4f}" for x in v)  # noqa: E731
    verdict(request, 6, ok, f"median over seeds, K = 1/5/15: top-1 {fmt(m1)} (nondecreasing), "
                            f"top-4 {fmt(m4)} (nonincreasing), 5% slack")


# -- 7. video -----------------------------------------------------------------------------------------------------

VIDEO = dict(n_samples=1000, modes=2, frame_size=(16, 16), seed=7)
VIDEO_EVAL = dict(n_draw=16, k_max=4, seed=3)


def test_criterion_7_video(request):
    t0 = time.perf_counter()
    ds1 = generate(DatasetSpec(Task.VIDEO, history=1, **VIDEO))
    test1 = ds1.split_parity()[1]
    base = dict(task=Task.VIDEO, latent_dim=2, log_eval_n=0, seed=1, epochs=150, learning_rate=3e-3)
    reg, _ = train(TrainConfig(scheme="REGRESSION", **base), ds1)
    reg_top1 = evaluate(reg, test1, **VIDEO_EVAL).top(1)
    top2 = {}
    for scheme in ("KBEST", "VA"):
        m, _ = train(TrainConfig(scheme=scheme, K=4, **base), ds1)
        top2[scheme] = evaluate(m, test1, **VIDEO_EVAL).top(2)
    best = min(top2, key=top2.get)
    ds2 = generate(DatasetSpec(Task.VIDEO, history=2, **VIDEO))
    reg2, _ = train(TrainConfig(scheme="REGRESSION", task=Task.VIDEO, history=2, latent_dim=2, log_eval_n=0,
                                seed=1, epochs=100), ds2)
    reg2_top1 = evaluate(reg2, ds2.split_parity()[1], **VIDEO_EVAL).top(1)
    secs = time.perf_counter() - t0
    ok = top2[best] < 0.1 * reg_top1 and reg2_top1 < 1e-2 and secs < 600
    verdict(request, 7, ok, f"Nf=1 best stochastic top-2 ({best}) {top2[best]:.5f} vs 0.1 x REGRESSION top-1 "
                            f"{0.1 * reg_top1:.5f}; Nf=2 REGRESSION top-1 {reg2_top1:.2e} < 1e-2; {secs:.0f}s < 600s")


# -- 8. determinism and formats -------------------------------------------------------------------------------


def _pipeline(workdir, monkeypatch) -> dict[str, bytes]:
    workdir.mkdir()
    monkeypatch.chdir(workdir)
    (workdir / "m.cfg").write_text("task = trajectory\nscheme = VA\nepochs = 3\nd = 2\nenc_channels = 4,8\n"
                                   "feat_dim = 8\nhidden = 16\ndataset_path = d.csnd\nseed = 5\n")
    steps = [["gen", "--task", "trajectory", "--modes", "2", "--n", "80", "--h", "8", "--size", "16", "--seed", "7",
              "-o", "d.csnd"],
             ["train", "m.cfg"],
             ["eval", "--checkpoint", "m.ckpt", "--dataset", "d.csnd", "--n-draw", "16", "--seed", "2", "-o", "r.csv"]]
    for argv in steps:
        assert cli_main(argv) == 0
    log = [ln.rsplit(",", 2)[0] for ln in (workdir / "m.log.csv").read_text().splitlines()]
    return {"dataset": (workdir / "d.csnd").read_bytes(), "checkpoint": (workdir / "m.ckpt").read_bytes(),
            "report": (workdir / "r.csv").read_bytes(), "log": "\n".join(log).encode()}


def _magic_rejected(path, reader) -> bool:
    raw = bytearray(path.read_bytes())
    raw[0] ^= 0xFF
    bad = path.with_name("bad" + path.suffix)
    bad.write_bytes(bytes(raw))
    try:
        reader(bad)
    except FormatError:
        return True
    return False


def test_criterion_8_determinism_and_formats(request, tmp_path, monkeypatch, capsys):
    a = _pipeline(tmp_path / "a", monkeypatch)
    b = _pipeline(tmp_path / "b", monkeypatch)
    capsys.readouterr()
    same = [k for k in a if a[k] == b[k]]
    ds_path, ck_path = tmp_path / "a" / "d.csnd", tmp_path / "a" / "m.ckpt"
    write_dataset(read_dataset(ds_path), tmp_path / "again.csnd")
    save_checkpoint(load_checkpoint(ck_path), tmp_path / "again.ckpt")
    ds_rt = (tmp_path / "again.csnd").read_bytes() == ds_path.read_bytes()
    ck_rt = (tmp_path / "again.ckpt").read_bytes() == ck_path.read_bytes()
    magic = _magic_rejected(ds_path, read_dataset) and _magic_rejected(ck_path, load_checkpoint)
    ok = len(same) == len(a) and ds_rt and ck_rt and magic
    verdict(request, 8, ok, f"bit-identical reruns: {', '.join(same)}; dataset round trip {ds_rt}; "
                            f"checkpoint round trip {ck_rt}; corrupted magic -> FormatError {magic}")


# -- 9. top-k protocol --------------------------------------------------------------------------------------------


def test_criterion_9_topk_properties(request, two_mode_runs):
    test = two_mode_runs[1, "data"].split_parity()[1]
    monotone = all(np.all(np.diff(two_mode_runs[1, s][1].curves, axis=1) <= 0) for s in ("KBEST", "VA"))
    model = two_mode_runs[1, "VA"][0]
    prior = model.prior
    model.prior = lambda enc: GaussianParams(prior(enc).mu, Tensor(np.zeros(prior(enc).mu.shape)))
    try:
        flat_rep = evaluate(model, test.subset(range(100)), **TRAJ_EVAL)
    finally:
        model.prior = prior
    flat = bool(np.all(flat_rep.curves == flat_rep.curves[:, :1]))
    reg_flat = bool(np.all(two_mode_runs[1, "REGRESSION"][1].curves == two_mode_runs[1, "REGRESSION"][1].curves[:, :1]))
    x = test.x[:50]
    eps = np.random.default_rng(9).normal(size=(32, 50, 2))
    out, logd = draw_predictions(model, x, None, eps, inject_mean=True)
    with T.no_grad():
        enc = model.encode(x)
        mean_pred = model.decode(model.prior(enc).mu, enc).prediction.data
    first = bool(np.all(np.argmax(logd, axis=0) == 0)) and np.allclose(out[0], mean_pred, rtol=1e-12, atol=1e-12)
    n_curves = sum(len(two_mode_runs[1, s][1].curves) for s in ("KBEST", "VA"))
    ok = monotone and flat and reg_flat and first
    verdict(request, 9, ok, f"nonincreasing on all {n_curves} example curves {monotone}; flat for sigma=0 {flat} "
                            f"and regression {reg_flat}; injected z=mu ranked first {first}")


def test_report_type_round_trip(tmp_path, two_mode_runs):
    # the shared reports also exercise the CSV writer at full size
    rep = two_mode_runs[1, "KBEST"][1]
    rep.to_csv(tmp_path / "k.csv")
    assert EvalReport.from_csv(tmp_path / "k.csv").mean_error.tobytes() == rep.mean_error.tobytes()
