import numpy as np
import pytest
import torch
from hypothesis import given, settings, strategies as st

from ppn.core import Catalog, GridSpec
from ppn.net import build
from ppn.train import (
    R_NEAR, PatchSet, TargetMaps, TrainConfig, batch_losses, confidence_loss, encode_targets,
    evaluate_loss, regression_loss, total_loss, train, write_history,
)

from conftest import TOY_GRID, toy_config
from oracles import bce_sum, grad_agrees, gradient_check, nearest_source_targets


def one(c_hat=1.0, b=1.0, r_hat=(0.0, 0.0), b_star=None):
    return TargetMaps(np.array([[c_hat]]), np.array([[r_hat]], dtype=np.float64), np.array([[b]]),
                      np.array([[c_hat if b_star is None else b_star]]))


def truth(*xy):
    return Catalog(np.array(xy, dtype=float).reshape(-1, 2), np.ones(len(xy)), kind="truth")


# -- losses ---------------------------------------------------------------

def test_confidence_loss_hand_values():
    assert confidence_loss([[0.5]], one(), alpha=0.5, gamma=0) == pytest.approx(0.346574, abs=1e-6)
    assert confidence_loss([[0.9]], one(), alpha=1.0, gamma=2) == pytest.approx(0.00105361, abs=1e-6)
    assert confidence_loss([[0.3]], one(b=0.0), 0.5, 2) == 0.0


def test_regression_loss_hand_value():
    t = one(r_hat=(0.3, -0.2))
    assert regression_loss(np.zeros((1, 1, 2)), t) == pytest.approx(0.13, abs=1e-6)
    assert regression_loss(np.array([[[0.3, -0.2]]]), t) == 0.0
    assert regression_loss(np.ones((1, 1, 2)), one(r_hat=(0.3, -0.2), b_star=0.0)) == 0.0


def test_total_loss():
    assert total_loss(2.0, 3.0, 0.5, 0.25) == 1.75


def test_confidence_loss_domain_and_shape():
    with pytest.raises(ValueError, match="clamp"):
        confidence_loss([[1.0]], one(), 0.5, 0)
    with pytest.raises(ValueError, match="clamp"):
        confidence_loss([[0.0]], one(), 0.5, 0)
    with pytest.raises(ValueError, match="shape"):
        confidence_loss(np.full((2, 2), 0.5), one(), 0.5, 0)


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_alpha1_gamma0_is_bce(seed):
    rng = np.random.default_rng(seed)
    c = rng.uniform(1e-4, 1 - 1e-4, (7, 7))
    y = (rng.random((7, 7)) < 0.3).astype(float)
    b = (rng.random((7, 7)) < 0.8).astype(float)
    t = TargetMaps(y, np.zeros((7, 7, 2)), b, y)
    assert confidence_loss(c, t, 1.0, 0.0) == pytest.approx(bce_sum(c, y, b), abs=1e-6)


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 2**32 - 1), st.floats(0.1, 4), st.floats(0, 5))
def test_losses_nonnegative_and_gated(seed, alpha, gamma):
    rng = np.random.default_rng(seed)
    c = rng.uniform(1e-6, 1 - 1e-6, (4, 4))
    y = (rng.random((4, 4)) < 0.5).astype(float)
    b = (rng.random((4, 4)) < 0.5).astype(float)
    t = TargetMaps(y, rng.normal(size=(4, 4, 2)), b, y * b)
    r = rng.normal(size=(4, 4, 2))
    assert confidence_loss(c, t, alpha, gamma) >= 0
    assert regression_loss(r, t) >= 0
    # changing predictions where the flags are zero changes nothing
    c2 = np.where(b == 0, rng.uniform(1e-6, 1 - 1e-6, (4, 4)), c)
    r2 = np.where((t.b_star == 0)[..., None], rng.normal(size=(4, 4, 2)), r)
    assert confidence_loss(c2, t, alpha, gamma) == confidence_loss(c, t, alpha, gamma)
    assert regression_loss(r2, t) == regression_loss(r, t)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32 - 1), st.sampled_from([0.0, 1.0, 2.0]))
def test_torch_losses_match_numpy(seed, gamma):
    rng = np.random.default_rng(seed)
    logits = rng.normal(scale=3, size=(3, 4, 4))
    c = 1 / (1 + np.exp(-logits))
    y = (rng.random((3, 4, 4)) < 0.4).astype(float)
    b = np.maximum(y, (rng.random((3, 4, 4)) < 0.7)).astype(float)
    rh = rng.normal(size=(3, 4, 4, 2)) * y[..., None]
    r = rng.normal(size=(3, 4, 4, 2))
    T = lambda a: torch.tensor(a, dtype=torch.float64)  # noqa: E731
    ec, er = batch_losses(T(logits), T(r), T(y), T(rh), T(b), T(y), 0.5, gamma)
    for k in range(3):
        t = TargetMaps(y[k], rh[k], b[k], y[k])
        assert float(ec[k]) == pytest.approx(confidence_loss(np.clip(c[k], 1e-7, 1 - 1e-7), t, 0.5, gamma),
                                             rel=1e-9, abs=1e-9)
        assert float(er[k]) == pytest.approx(regression_loss(r[k], t), rel=1e-12)


def test_torch_loss_saturated_logits_finite():
    big = torch.tensor([[[60.0, -60.0]]], dtype=torch.float32, requires_grad=True)
    y = torch.tensor([[[0.0, 1.0]]])
    ec, _ = batch_losses(big, torch.zeros(1, 1, 2, 2), y, torch.zeros(1, 1, 2, 2), torch.ones(1, 1, 2), y, 0.5, 2.0)
    assert torch.isfinite(ec).all()
    ec.sum().backward()
    assert torch.isfinite(big.grad).all()


# -- targets --------------------------------------------------------------

def test_single_source_on_origin():
    g = GridSpec()
    t = encode_targets(truth((112.0, 112.0)), g)
    assert t.c_hat.sum() == 1 and t.c_hat[3, 3] == 1
    assert np.array_equal(t.r_hat[3, 3], [0, 0])
    assert t.b.all()
    assert np.array_equal(t.b_star, t.c_hat)


def test_offset_is_in_grid_units_x_column():
    g = GridSpec()
    t = encode_targets(truth((112.0 + 8.0, 112.0 - 4.0)), g)
    assert np.allclose(t.r_hat[3, 3], [0.25, -0.125])


def test_four_origin_equidistant_boundary():
    # the corner shared by origins (2,2), (2,3), (3,2), (3,3) is sqrt(0.5) grid units from each
    g = GridSpec()
    t = encode_targets(truth((96.0, 96.0)), g)
    pos = np.argwhere(t.c_hat == 1).tolist()
    assert pos == [[2, 2], [2, 3], [3, 2], [3, 3]]
    for (i, j) in pos:
        assert np.array_equal(np.abs(t.r_hat[i, j]), [0.5, 0.5])  # distance sqrt(0.5) exactly


def test_nearest_tie_goes_to_first_source():
    g = GridSpec()
    t = encode_targets(truth((112.0 + 8, 112.0), (112.0 - 8, 112.0)), g)
    assert np.allclose(t.r_hat[3, 3], [0.25, 0.0])


def test_empty_truth():
    t = encode_targets(Catalog(kind="truth"), GridSpec())
    assert t.c_hat.sum() == 0 and t.b.all() and t.b_star.sum() == 0


def test_r_far_validation():
    with pytest.raises(ValueError):
        TrainConfig(r_far=0.5)


def test_r_far_band_monotone():
    g = GridSpec()
    src = truth((100.0, 77.0))
    prev = None
    for r_far in [R_NEAR, 1.0, 1.5, 2.0, 3.0]:
        t = encode_targets(src, g, R_NEAR, r_far)
        assert np.array_equal(t.c_hat, encode_targets(src, g).c_hat)
        if prev is not None:
            assert (t.b <= prev).all()  # ignored set only grows
        prev = t.b


@settings(max_examples=200, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(0, 12), st.floats(0.7072, 3.0))
def test_target_invariants_random(seed, n, r_far):
    rng = np.random.default_rng(seed)
    g = GridSpec()
    xy = rng.uniform(0, 224, (n, 2))
    t = encode_targets(truth(*xy) if n else Catalog(kind="truth"), g, R_NEAR, r_far)
    c_ref, r_ref, b_ref = nearest_source_targets(xy, g, R_NEAR, r_far)
    assert np.array_equal(t.c_hat, c_ref)
    assert np.array_equal(t.b, b_ref)
    assert np.allclose(t.r_hat, r_ref, atol=1e-6)
    assert set(np.unique(t.c_hat)) <= {0, 1}
    assert (t.b_star == t.c_hat).all()
    assert (t.b >= t.c_hat).all()
    assert (np.hypot(t.r_hat[..., 0], t.r_hat[..., 1]) <= R_NEAR + 1e-6).all()
    assert (t.r_hat[t.c_hat == 0] == 0).all()


# -- training -------------------------------------------------------------

def toy_patchset(n, seed):
    rng = np.random.default_rng(seed)
    patches, targets = [], []
    for _ in range(n):
        xy = rng.uniform(0, 8, (1, 2))
        # background noise keeps ReLU inputs off their kink at exactly zero
        img = (0.1 * rng.standard_normal((8, 8))).astype(np.float32)
        r, c = int(xy[0, 1]), int(xy[0, 0])
        img[r, c] = 1.0
        patches.append(img)
        targets.append(encode_targets(truth(*xy), TOY_GRID))
    return PatchSet(np.stack(patches), targets)


def toy_gradient_check(seed=0):
    model = build(toy_config(seed=seed)).double().eval()  # eval: BN uses fixed statistics
    data = toy_patchset(4, seed + 1)
    x, c_hat, r_hat, b, b_star = data.tensors(np.arange(4), torch.float64)
    x = x + torch.from_numpy(np.random.default_rng(seed).standard_normal(x.shape))

    def loss_fn():
        logits, reg = model.logits(x)
        ec, er = batch_losses(logits, reg, c_hat, r_hat, b, b_star, 0.5, 2.0)
        return ec.sum() / 4 + er.sum() / 4

    return gradient_check(list(model.named_parameters()), loss_fn, h=1e-3, seed=seed)


def test_gradient_check_toy_model():
    rows, kinks = toy_gradient_check()
    assert len(rows) >= 40 and len(kinks) <= len(rows) // 10
    bad = [r for r in rows if not grad_agrees(r[2], r[3])]
    assert not bad


def test_overfit_tiny_set_and_history(tmp_path):
    data = toy_patchset(8, 3)
    model = build(toy_config(seed=1))
    cfg = TrainConfig(epochs=200, batch_size=8, learning_rate=1e-2, seed=0)
    before = evaluate_loss(model, data, cfg)
    model, hist = train(model, data, data, cfg, history_path=tmp_path / "h.csv")
    assert len(hist) == 200
    best = min(h["val_loss"] for h in hist)
    assert evaluate_loss(model, data, cfg) == pytest.approx(best, rel=1e-6)
    assert best < 0.1 * before
    lines = (tmp_path / "h.csv").read_text().splitlines()
    assert lines[0] == "epoch,train_loss,val_loss" and len(lines) == 201


def test_training_is_reproducible():
    data = toy_patchset(8, 4)
    cfg = TrainConfig(epochs=3, batch_size=4, seed=5)
    _, h1 = train(build(toy_config(seed=2)), data, data, cfg)
    _, h2 = train(build(toy_config(seed=2)), data, data, cfg)
    assert h1 == h2


def test_train_rejects_empty_and_nan():
    data = toy_patchset(2, 0)
    empty = PatchSet(np.zeros((0, 8, 8)), [])
    with pytest.raises(ValueError):
        train(build(toy_config()), empty, data, TrainConfig(epochs=1))
    bad = toy_patchset(2, 0)
    bad.r_hat[:] = np.nan
    bad.b_star[:] = 1
    with pytest.raises(FloatingPointError, match="epoch 1, batch 0"):
        train(build(toy_config()), bad, data, TrainConfig(epochs=1))


def test_patchset_from_images():
    from ppn.skysim import SimConfig, simulate

    scenes = [simulate(SimConfig(image_size=448, n_sources=20, seed=s)) for s in range(2)]
    ps = PatchSet.from_images(scenes, GridSpec(), limit=5)
    assert len(ps) == 5
    assert ps.patches.shape == (5, 224, 224)
    assert ps.c_hat.shape == (5, 7, 7)
    full = PatchSet.from_images(scenes, GridSpec())
    assert len(full) == 2 * 9


def test_write_history(tmp_path):
    write_history(tmp_path / "h.csv", [{"epoch": 1, "train_loss": 0.5, "val_loss": 0.25}])
    assert (tmp_path / "h.csv").read_text().splitlines() == ["epoch,train_loss,val_loss", "1,0.5,0.25"]
