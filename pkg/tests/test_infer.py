import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from ppn.core import GridSpec, Image, grid_to_pixel
from ppn.infer import InferConfig, ProposalSet, decode, decode_batch, detect, nms, propose, to_catalog
from ppn.net import NetConfig, NetOutput, build

from oracles import nms_reference


def props(pts):
    pts = np.asarray(pts, dtype=float).reshape(-1, 3)
    return ProposalSet(pts[:, :2], pts[:, 2])


def test_nms_threshold_and_strict_radius():
    p = props([[0, 0, 0.9], [11.2, 0, 0.85], [5, 0, 0.7]])
    kept = nms(p, 0.35, 0.8)  # 0.35 * 32 = 11.2 px; distance exactly 11.2 survives
    assert kept.xy.tolist() == [[0, 0], [11.2, 0]]
    kept = nms(props([[0, 0, 0.9], [11.0, 0, 0.85]]), 0.35, 0.8)
    assert len(kept) == 1


def test_nms_confidence_order_and_ties():
    p = props([[0, 0, 0.81], [3, 0, 0.95], [100, 0, 0.9], [103, 0, 0.9]])
    kept = nms(p, 0.35, 0.8)
    assert kept.xy.tolist() == [[3, 0], [100, 0]]  # tie at 0.9: earlier point wins


def test_nms_empty():
    assert len(nms(props(np.zeros((0, 3))), 0.35, 0.8)) == 0
    assert len(nms(props([[0, 0, 0.5]]), 0.35, 0.8)) == 0


@settings(max_examples=300, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(0, 50), st.floats(0.0, 2.0), st.floats(0.01, 0.99))
def test_nms_matches_reference(seed, n, r, c_min):
    rng = np.random.default_rng(seed)
    pts = np.column_stack([rng.uniform(0, 200, (n, 2)), rng.choice([0.5, 0.8, 0.9, 0.95], n)
                           if seed % 2 else rng.uniform(0, 1, n)])
    kept = nms(props(pts), r, c_min)
    ref = nms_reference(pts.tolist(), r * 32, c_min)
    assert np.array_equal(kept.xy, pts[ref, :2].reshape(-1, 2))
    again = nms(kept, r, c_min)
    assert np.array_equal(again.xy, kept.xy)
    if len(kept) > 1:
        d = np.hypot(*(kept.xy[:, None] - kept.xy[None]).transpose(2, 0, 1))
        d[np.diag_indices(len(d))] = np.inf
        assert d.min() >= r * 32


def test_decode_offset_lands_on_neighbour():
    g = GridSpec()
    reg = np.zeros((7, 7, 2))
    reg[3, 3] = (1.0, 0.0)
    reg[0, 0] = (0.0, 1.0)
    out = decode(NetOutput(np.full((7, 7), 0.5), reg), g)
    pts = out.xy.reshape(7, 7, 2)
    assert tuple(pts[3, 3]) == grid_to_pixel(g, (3, 4), (0, 0))
    assert tuple(pts[0, 0]) == grid_to_pixel(g, (1, 0), (0, 0))
    assert tuple(pts[2, 5]) == grid_to_pixel(g, (2, 5), (0, 0))


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(-5000, 5000), st.integers(-5000, 5000))
def test_decode_translation_equivariant(seed, dx, dy):
    rng = np.random.default_rng(seed)
    g = GridSpec()
    out = NetOutput(rng.random((7, 7)), rng.uniform(-1, 1, (7, 7, 2)))
    a = decode(out, g, (0, 0))
    b = decode(out, g, (dx, dy))
    assert np.array_equal(b.xy, a.xy + (dx, dy))
    assert np.array_equal(a.conf, b.conf)


def test_decode_batch_equals_decode(rng):
    g = GridSpec()
    conf = rng.random((3, 7, 7))
    reg = rng.normal(size=(3, 7, 7, 2))
    origins = np.array([[0, 0], [220, 0], [0, 220]], float)
    batch = decode_batch(conf, reg, g, origins)
    single = ProposalSet.concat(decode(NetOutput(conf[k], reg[k]), g, origins[k]) for k in range(3))
    assert np.array_equal(batch.xy, single.xy) and np.array_equal(batch.conf, single.conf)


def test_infer_config_validation():
    with pytest.raises(ValueError):
        InferConfig(c_nms=1.0)
    with pytest.raises(ValueError):
        InferConfig(r_nms=-1)


def test_to_catalog_clips():
    cat = to_catalog(props([[-3, 5, 0.9], [300, 1023.5, 0.9]]), 256, 1024)
    assert (cat.x >= 0).all() and (cat.x < 256).all() and (cat.y < 1024).all()
    cat.validate_within(256, 1024)


def test_detect_pipeline_and_timer(rng):
    model = build(NetConfig(base_depth=9, seed=0))
    img = Image(rng.random((448, 448)))
    steps = {}
    cat = detect(model, img, GridSpec(), InferConfig(c_nms=0.005), timer=lambda s, ns: steps.setdefault(s, ns))
    assert set(steps) == {"patching", "cnn", "nms"}
    assert cat.kind == "detection"
    cat.validate_within(448, 448)
    p = propose(model, img, GridSpec(), InferConfig())
    assert len(p) == 9 * 49
    again = detect(model, img, GridSpec(), InferConfig(c_nms=0.005))
    assert np.array_equal(again.xy, cat.xy)
