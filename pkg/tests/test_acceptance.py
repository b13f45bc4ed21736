"""Release gate: the eight checks a build must pass before it ships.

Each test covers one contract end to end and prints a single summary line
with the measured numbers (visible with ``pytest -s`` or ``-rA``); the
pytest verdict per test is the pass/fail record.  The desk-scale training
check is the expensive one (a full 20k-step run on the synthetic corpus);
everything else finishes in seconds.
"""
import filecmp
import time
from pathlib import Path

import numpy as np
import pytest

from conftest import (random_rotations, random_search_alignment_sq, rel_err,
                      tiny_state, tiny_train_config)
from test_networks import randomize_output_layer

from poselift.config import RunConfig, to_prior, to_train_config
from poselift.data import (generate_dataset, load_poses_csv, save_poses_csv,
                           split_dataset)
from poselift.evaluate import (REFERENCE_MPJPE_MM, UNIT_SCALE_MM,
                               ensemble_lift, flat_baseline, mpjpe,
                               procrustes_align, select_best)
from poselift.gan import (FAKE_LABEL, REAL_LABEL, NormStats, apply_norm_stats,
                          lift, load_train_state, normalize, setup_train_state,
                          train)
from poselift.geometry import (LiftConfig, back_project,
                               back_project_backward, depth_from_offset,
                               depth_from_offset_backward,
                               perspective_project,
                               perspective_project_backward,
                               rotate_about_pivot, rotate_about_pivot_backward)
from poselift.layers import BatchNorm, Linear, ReLU, softmax_cross_entropy
from poselift.networks import init_parameters, make_generator
from poselift.topology import DEFAULT_TOPOLOGY

LC = LiftConfig()


def _summary(name: str, detail: str) -> None:
    print(f"[gate] {name}: PASS ({detail})")


def _fd_check(objective, tensors, analytic, tol, probes_per_tensor=None):
    """Compare analytic gradients against central differences.

    tensors and analytic are parallel lists of (array, gradient) views; when
    probes_per_tensor is set only the largest-gradient entries are probed,
    otherwise every entry is.  Returns (worst relative error, probes taken).
    """
    h = 1e-6
    worst, checked = 0.0, 0
    for value, grad in zip(tensors, analytic):
        flat_v, flat_g = value.ravel(), grad.ravel()
        if probes_per_tensor is None:
            idx = range(flat_v.size)
        else:
            idx = np.argsort(-np.abs(flat_g))[:probes_per_tensor]
        for i in idx:
            orig = flat_v[i]
            flat_v[i] = orig + h
            fp = objective()
            flat_v[i] = orig - h
            fm = objective()
            flat_v[i] = orig
            fd = (fp - fm) / (2 * h)
            if abs(fd) < 1e-8:
                continue
            worst = max(worst, rel_err(fd, flat_g[i]))
            checked += 1
    assert worst < tol, f"worst relative error {worst} exceeds {tol}"
    return worst, checked


def test_c1_geometry_round_trip_identities():
    rng = np.random.Generator(np.random.PCG64(100))
    t0 = time.perf_counter()

    pose = rng.normal(0.0, 0.3, (1000, 14, 2))
    z = rng.uniform(2.0, 20.0, (1000, 14))
    round_trip = perspective_project(back_project(pose, z))
    rt_err = float(np.max(np.abs(round_trip - pose)))
    assert rt_err < 1e-12

    points = LC.pivot + rng.normal(0.0, 0.8, (1000, 14, 3))
    rots = random_rotations(1000, rng)
    rotated, _ = rotate_about_pivot(points, rots, LC)
    before = np.linalg.norm(points[:, :, None, :] - points[:, None, :, :],
                            axis=-1)
    after = np.linalg.norm(rotated[:, :, None, :] - rotated[:, None, :, :],
                           axis=-1)
    dist_err = float(np.max(np.abs(after - before)))
    assert dist_err < 1e-10

    pivot_out, _ = rotate_about_pivot(LC.pivot.reshape(1, 1, 3), rots[0], LC)
    np.testing.assert_array_equal(pivot_out[0, 0], LC.pivot)

    elapsed = time.perf_counter() - t0
    assert elapsed < 1.0
    _summary("geometry identities",
             f"round trip {rt_err:.2e}, distances {dist_err:.2e}, "
             f"{elapsed:.2f}s")


def test_c2_gradient_suite_matches_finite_differences():
    rng = np.random.Generator(np.random.PCG64(200))
    t0 = time.perf_counter()
    worst_all, checked_all = 0.0, 0

    def track(result):
        nonlocal worst_all, checked_all
        worst, checked = result
        worst_all = max(worst_all, worst)
        checked_all += checked

    # linear layer: weights, bias, and input
    lin = Linear(5, 4)
    lin.weight.value = rng.normal(0.0, 0.5, (4, 5))
    lin.bias.value = rng.normal(0.0, 0.5, 4)
    x = rng.normal(0.0, 1.0, (3, 5))
    s = rng.normal(0.0, 1.0, (3, 4))
    lin.forward(x, True)
    d_x = lin.backward(s)
    track(_fd_check(lambda: float(np.sum(s * lin.forward(x, True))),
                    [lin.weight.value, lin.bias.value, x],
                    [lin.weight.grad, lin.bias.grad, d_x], 1e-4))

    # batch norm, training mode (batch statistics in the graph)
    bn = BatchNorm(4)
    bn.gamma.value = rng.uniform(0.5, 1.5, 4)
    bn.beta.value = rng.normal(0.0, 0.5, 4)
    xb = rng.normal(1.0, 2.0, (6, 4))
    sb = rng.normal(0.0, 1.0, (6, 4))
    bn.forward(xb, True)
    d_xb = bn.backward(sb)
    track(_fd_check(lambda: float(np.sum(sb * bn.forward(xb, True))),
                    [bn.gamma.value, bn.beta.value, xb],
                    [bn.gamma.grad, bn.beta.grad, d_xb], 1e-4))

    # batch norm, inference mode (running statistics, elementwise)
    bi = BatchNorm(4)
    bi.gamma.value = rng.uniform(0.5, 1.5, 4)
    bi.beta.value = rng.normal(0.0, 0.5, 4)
    bi.running_mean = rng.normal(0.0, 1.0, 4)
    bi.running_var = rng.uniform(0.5, 2.0, 4)
    bi.forward(xb, False)
    d_xi = bi.backward(sb)
    track(_fd_check(lambda: float(np.sum(sb * bi.forward(xb, False))),
                    [bi.gamma.value, bi.beta.value, xb],
                    [bi.gamma.grad, bi.beta.grad, d_xi], 1e-4))

    # relu
    relu = ReLU()
    xr = rng.normal(0.0, 1.0, (5, 6))
    sr = rng.normal(0.0, 1.0, (5, 6))
    relu.forward(xr, True)
    d_xr = relu.backward(sr)
    track(_fd_check(lambda: float(np.sum(sr * relu.forward(xr, True))),
                    [xr], [d_xr], 1e-4))

    # softmax cross entropy and both generator loss variants
    logits = rng.normal(0.0, 1.5, (4, 2))
    labels = np.array([0, 1, 1, 0])
    _, d_logits, _ = softmax_cross_entropy(logits, labels)
    track(_fd_check(
        lambda: softmax_cross_entropy(logits, labels)[0],
        [logits], [d_logits], 1e-4))

    real_target = np.full(4, REAL_LABEL, dtype=np.int64)
    _, d_ns, _ = softmax_cross_entropy(logits, real_target)
    track(_fd_check(
        lambda: softmax_cross_entropy(logits, real_target)[0],
        [logits], [d_ns], 1e-4))

    fake_target = np.full(4, FAKE_LABEL, dtype=np.int64)
    _, d_mm_pos, _ = softmax_cross_entropy(logits, fake_target)
    track(_fd_check(
        lambda: -softmax_cross_entropy(logits, fake_target)[0],
        [logits], [-d_mm_pos], 1e-4))

    # geometry ops, one at a time
    offsets = rng.uniform(-4.0, 4.0, (3, 14))
    offsets[0, :3] = -12.0  # exercise the clamped branch, away from the kink
    so = rng.normal(0.0, 1.0, (3, 14))
    _, active = depth_from_offset(offsets, LC)
    d_off = depth_from_offset_backward(so, active)
    track(_fd_check(
        lambda: float(np.sum(so * depth_from_offset(offsets, LC)[0])),
        [offsets], [d_off], 1e-4))

    pose = rng.normal(0.0, 0.2, (3, 14, 2))
    z = rng.uniform(8.0, 12.0, (3, 14))
    s3 = rng.normal(0.0, 1.0, (3, 14, 3))
    d_pose, d_z = back_project_backward(s3, pose, z)
    track(_fd_check(
        lambda: float(np.sum(s3 * back_project(pose, z))),
        [pose, z], [d_pose, d_z], 1e-4))

    points = LC.pivot + rng.normal(0.0, 0.5, (3, 14, 3))
    rots = random_rotations(3, rng)
    sp = rng.normal(0.0, 1.0, (3, 14, 3))
    _, unclamped = rotate_about_pivot(points, rots, LC)
    d_points = rotate_about_pivot_backward(sp, rots, unclamped)
    track(_fd_check(
        lambda: float(np.sum(sp * rotate_about_pivot(points, rots, LC)[0])),
        [points], [d_points], 1e-4))

    p3 = np.array([0.0, 0.0, 10.0]) + rng.normal(0.0, 0.5, (3, 14, 3))
    s2 = rng.normal(0.0, 1.0, (3, 14, 2))
    d_p3 = perspective_project_backward(s2, p3)
    track(_fd_check(
        lambda: float(np.sum(s2 * perspective_project(p3))),
        [p3], [d_p3], 1e-4))

    # full composite generator objective through the frozen discriminator
    state = tiny_state(batch_size=4)
    randomize_output_layer(state.gen, 11)
    randomize_output_layer(state.disc, 12)
    x2d = rng.normal(0.0, 0.08, (4, 14, 2))
    comp_rots = random_rotations(4, rng)
    lc = state.cfg.lift_config
    target = np.full(4, REAL_LABEL, dtype=np.int64)

    def composite():
        offs = state.gen.forward(x2d.reshape(4, -1), True)
        zz, _ = depth_from_offset(offs, lc)
        skel = back_project(x2d, zz)
        rotated, _ = rotate_about_pivot(skel, comp_rots, lc)
        fakes = perspective_project(rotated)
        logits = state.disc.forward(fakes.reshape(4, -1), False)
        return softmax_cross_entropy(logits, target)[0]

    state.gen.zero_grad()
    state.disc.zero_grad()
    offs = state.gen.forward(x2d.reshape(4, -1), True)
    zz, act = depth_from_offset(offs, lc)
    skel = back_project(x2d, zz)
    rotated, unclamped = rotate_about_pivot(skel, comp_rots, lc)
    fakes = perspective_project(rotated)
    logits = state.disc.forward(fakes.reshape(4, -1), False)
    _, d_logits, _ = softmax_cross_entropy(logits, target)
    d_fakes = state.disc.backward(d_logits).reshape(fakes.shape)
    d_rot = perspective_project_backward(d_fakes, rotated)
    d_skel = rotate_about_pivot_backward(d_rot, comp_rots, unclamped)
    _, d_zz = back_project_backward(d_skel, x2d, zz)
    state.gen.backward(depth_from_offset_backward(d_zz, act))

    params = [p for p in state.gen.parameters()]
    worst, checked = _fd_check(
        composite, [p.value for p in params], [p.grad for p in params],
        1e-3, probes_per_tensor=6)
    assert checked > 40
    track((worst, checked))

    elapsed = time.perf_counter() - t0
    assert elapsed < 30.0
    _summary("gradient suite",
             f"{checked_all} probes, worst rel err {worst_all:.2e}, "
             f"{elapsed:.1f}s")


def test_c3_lift_reprojection_identity():
    rng = np.random.Generator(np.random.PCG64(300))
    x = rng.normal(0.0, 0.1, (1000, 14, 2))

    fresh = init_parameters(make_generator(14, 256, 4), 5)
    err_fresh = float(np.max(np.abs(
        perspective_project(lift(fresh, x, LC)) - x)))
    assert err_fresh < 1e-12

    state = tiny_state(batch_size=16, steps=40)
    pool = rng.normal(0.0, 0.08, (64, 14, 2))
    train(state, pool, pool)
    err_trained = float(np.max(np.abs(
        perspective_project(lift(state.gen, x, LC)) - x)))
    assert err_trained < 1e-12

    _summary("lift reprojection identity",
             f"fresh {err_fresh:.2e}, trained {err_trained:.2e}, "
             "1000 samples each")


@pytest.fixture(scope="module")
def desk_artifacts(tmp_path_factory):
    """One full canonical training run on the synthetic corpus.

    Generates the seeded dataset, trains with stock settings, scores every
    checkpoint on validation, and evaluates the winner plus the flat baseline
    on the held-out test split.  Shared by the tests below because the run
    takes about 25 CPU-minutes.
    """
    run_dir = tmp_path_factory.mktemp("desk_run")
    run_cfg = RunConfig()
    tc = to_train_config(run_cfg)
    t0 = time.perf_counter()

    ds = generate_dataset(
        to_prior(run_cfg), run_cfg.n_skeletons, run_cfg.seed,
        views_per_skeleton=run_cfg.views_per_skeleton,
        azimuth_range=(run_cfg.azimuth_min, run_cfg.azimuth_max),
        elevation_range=(run_cfg.elevation_min, run_cfg.elevation_max),
        jitter_std=run_cfg.jitter_std)
    tr, va, te = split_dataset(
        ds, (run_cfg.train_fraction, run_cfg.val_fraction,
             run_cfg.test_fraction), run_cfg.seed)

    train_2d, stats = normalize(tr.poses_2d, DEFAULT_TOPOLOGY, tc)
    state = setup_train_state(tc, stats)
    train(state, train_2d, train_2d, run_dir=str(run_dir))
    minutes = (time.perf_counter() - t0) / 60.0

    ckpt_root = run_dir / "checkpoints"
    names = sorted(p.name for p in ckpt_root.iterdir())
    gens = [(name, load_train_state(str(ckpt_root / name),
                                    DEFAULT_TOPOLOGY).gen)
            for name in names]
    val_2d = apply_norm_stats(va.poses_2d, DEFAULT_TOPOLOGY, stats)
    best_name, scores = select_best(gens, val_2d, va.poses_3d, LC,
                                    run_cfg.unit_scale_mm)
    best_gen = dict(gens)[best_name]

    test_2d = apply_norm_stats(te.poses_2d, DEFAULT_TOPOLOGY, stats)
    model_mm = mpjpe(lift(best_gen, test_2d, LC), te.poses_3d,
                     unit_scale_mm=run_cfg.unit_scale_mm).mpjpe_mm
    base_mm = mpjpe(flat_baseline(test_2d, LC), te.poses_3d,
                    unit_scale_mm=run_cfg.unit_scale_mm).mpjpe_mm
    return {
        "telemetry": state.telemetry,
        "steps": tc.steps,
        "minutes": minutes,
        "best_name": best_name,
        "scores": scores,
        "model_mm": model_mm,
        "base_mm": base_mm,
    }


@pytest.mark.desk
def test_c4_desk_scale_learning(desk_artifacts):
    art = desk_artifacts
    assert art["model_mm"] <= 0.5 * art["base_mm"], (
        f"trained model {art['model_mm']:.1f}mm vs flat baseline "
        f"{art['base_mm']:.1f}mm")
    _summary("desk-scale learning",
             f"model {art['model_mm']:.1f}mm <= 50% of baseline "
             f"{art['base_mm']:.1f}mm (best {art['best_name']}, "
             f"{len(art['scores'])} snapshots), {art['minutes']:.1f} min "
             "(target 30)")


@pytest.mark.desk
def test_desk_run_late_discriminator_accuracy_band(desk_artifacts):
    """Health check on the canonical run: late accuracy near chance.

    A converged adversarial game should leave the discriminator close to
    guessing.  Observed desk-scale behaviour instead has it sharpening on the
    out-of-support camera tilts that re-rotated fakes inevitably carry (a
    second elevation draw on top of the one baked into the lifted view), so
    this check currently fails while the lift itself keeps improving; see
    README (known behaviours) and the run telemetry before relaxing anything
    here.
    """
    art = desk_artifacts
    window = art["telemetry"][-max(1, art["steps"] // 10):]
    late_acc = float(np.mean([
        (row["disc_acc_real"] + row["disc_acc_fake"]) / 2.0
        for row in window]))
    print(f"[gate] late discriminator accuracy: {late_acc:.3f} "
          f"(window {len(window)} steps, band 0.3..0.85)")
    assert 0.3 < late_acc < 0.85, (
        f"late discriminator accuracy {late_acc:.3f} outside (0.3, 0.85)")


def test_c5_reference_results_documented_and_ingestable(tmp_path):
    assert REFERENCE_MPJPE_MM == {
        "model_gt_2d": 38.2,
        "model_detected_2d": 64.6,
        "flat_baseline": 127.3,
    }

    readme = (Path(__file__).resolve().parents[1] / "README.md").read_text()
    for number in ("38.2", "64.6", "127.3"):
        assert number in readme, f"README does not document {number} mm"

    # the CSV path an external motion-capture dump would take
    rng = np.random.Generator(np.random.PCG64(500))
    ds = generate_dataset(to_prior(RunConfig()), 12, seed=501,
                          views_per_skeleton=2)
    p2d = tmp_path / "ext_2d.csv"
    p3d = tmp_path / "ext_3d.csv"
    save_poses_csv(str(p2d), ds.poses_2d)
    save_poses_csv(str(p3d), ds.poses_3d)
    loaded_2d, _ = load_poses_csv(str(p2d))
    loaded_3d, _ = load_poses_csv(str(p3d))
    np.testing.assert_array_equal(loaded_2d, ds.poses_2d)
    np.testing.assert_array_equal(loaded_3d, ds.poses_3d)

    normed, _ = normalize(loaded_2d, DEFAULT_TOPOLOGY, LC)
    base = mpjpe(flat_baseline(normed, LC), loaded_3d,
                 unit_scale_mm=UNIT_SCALE_MM).mpjpe_mm
    assert np.isfinite(base) and base > 0.0

    _summary("reference results",
             f"targets {REFERENCE_MPJPE_MM} documented; CSV round trip "
             f"exact; baseline on ingested set {base:.1f}mm")


def test_c6_alignment_oracle():
    rng = np.random.Generator(np.random.PCG64(600))
    t0 = time.perf_counter()

    worst_residual = 0.0
    for _ in range(500):
        gt = rng.normal(0.0, 1.0, (14, 3))
        scale = float(rng.uniform(0.2, 5.0))
        rot = random_rotations(1, rng)[0]
        trans = rng.normal(0.0, 3.0, 3)
        pred = (gt - trans) @ rot / scale
        res = procrustes_align(pred, gt)
        worst_residual = max(worst_residual,
                             float(np.max(np.abs(res.aligned - gt))))
    assert worst_residual < 1e-10

    margin = np.inf
    for _ in range(50):
        pred = rng.normal(0.0, 1.0, (14, 3))
        gt = rng.normal(0.0, 1.0, (14, 3))
        res = procrustes_align(pred, gt)
        closed = float(np.sum((res.aligned - gt) ** 2))
        searched = random_search_alignment_sq(pred, gt, 10_000, rng)
        margin = min(margin, searched - closed)
        assert closed <= searched + 1e-9

    elapsed = time.perf_counter() - t0
    assert elapsed < 10.0
    _summary("alignment oracle",
             f"500 exact recoveries (worst {worst_residual:.2e}), closed "
             f"form never beaten (min margin {margin:.2e}), {elapsed:.1f}s")


def test_c7_sequential_determinism(tmp_path):
    t0 = time.perf_counter()
    rng = np.random.Generator(np.random.PCG64(700))
    pool = rng.normal(0.0, 0.08, (256, 14, 2))

    def smoke_run(tag):
        cfg = tiny_train_config(batch_size=32, steps=200, hidden_width=32,
                                sequential=True, checkpoint_every=100, seed=9)
        state = setup_train_state(cfg, NormStats(1.0, cfg.distance, "basic14"))
        run_dir = tmp_path / tag
        train(state, pool, pool, run_dir=str(run_dir))
        return run_dir

    a = smoke_run("a")
    b = smoke_run("b")

    tele_a = (a / "telemetry.csv").read_bytes()
    assert tele_a == (b / "telemetry.csv").read_bytes()
    compared = 0
    for step in ("step_000100", "step_000200"):
        for fname in ("manifest.json", "params.bin"):
            fa = a / "checkpoints" / step / fname
            fb = b / "checkpoints" / step / fname
            assert filecmp.cmp(fa, fb, shallow=False), f"{step}/{fname}"
            compared += 1

    elapsed = time.perf_counter() - t0
    assert elapsed < 120.0
    _summary("sequential determinism",
             f"2 runs x 200 steps bitwise identical ({compared} checkpoint "
             f"files + {len(tele_a)} telemetry bytes), {elapsed:.1f}s")


def test_c8_ensemble_contract():
    rng = np.random.Generator(np.random.PCG64(800))
    a = init_parameters(make_generator(14, 16, 2), 21)
    randomize_output_layer(a, 31)
    b = init_parameters(make_generator(14, 16, 2), 22)
    randomize_output_layer(b, 32)
    x = rng.normal(0.0, 0.1, (50, 14, 2))

    single = lift(a, x, LC)
    np.testing.assert_array_equal(ensemble_lift([a, a, a], x, LC), single)

    mixed = ensemble_lift([a, b], x, LC)
    mean = (lift(a, x, LC) + lift(b, x, LC)) / 2.0
    mean_err = float(np.max(np.abs(mixed - mean)))
    assert mean_err < 1e-12

    _summary("ensemble contract",
             f"identical members exact, mixed pair within {mean_err:.2e} "
             "of the coordinate-wise mean")
