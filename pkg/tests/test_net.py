import json
import struct

import numpy as np
import pytest
import torch

from ppn.core import FormatError, GridSpec
from ppn.net import (
    NetConfig, build, confidence_bias, count_conv_layers, forward, forward_batch, load, save,
)

from conftest import toy_config


@pytest.mark.parametrize("depth", [9, 17, 31])
def test_reference_depths_shapes(depth):
    cfg = NetConfig(base_depth=depth)
    model = build(cfg)
    assert count_conv_layers(model) == depth
    assert cfg.n_downsample == 5
    x = torch.zeros(2, 1, 224, 224)
    with torch.no_grad():
        conf, reg = model.eval()(x)
    assert conf.shape == (2, 7, 7)
    assert reg.shape == (2, 7, 7, 2)


def test_config_validation():
    with pytest.raises(ValueError, match="base_depth"):
        NetConfig(base_depth=10)
    with pytest.raises(ValueError, match="power of two"):
        NetConfig(base_depth=9, input_size=96, grid=GridSpec(96, 4, 4))
    with pytest.raises(ValueError, match="conv layers"):
        NetConfig(base_depth=9, stage_blocks=(2, 1, 1, 1))
    with pytest.raises(ValueError, match="stages"):
        NetConfig(base_depth=5, stage_blocks=(1, 1))
    with pytest.raises(ValueError):
        NetConfig(base_depth=9, pi=1.0)


def test_config_dict_roundtrip():
    cfg = NetConfig(base_depth=17, seed=4)
    assert NetConfig.from_dict(json.loads(json.dumps(cfg.to_dict()))) == cfg
    with pytest.raises(ValueError, match="unknown"):
        NetConfig.from_dict({**cfg.to_dict(), "colour": 1})


def test_confidence_bias_prior():
    assert confidence_bias(0.01) == pytest.approx(-4.59511985013459)
    model = build(NetConfig(base_depth=9))
    assert model.conf_out.bias.item() == pytest.approx(confidence_bias(0.01))
    assert model.conf_out.weight.std().item() < 0.02
    # at initialization the average confidence sits near the prior
    with torch.no_grad():
        conf, _ = model.eval()(torch.rand(2, 1, 224, 224))
    assert float(conf.mean()) == pytest.approx(0.01, abs=0.01)


def test_build_is_seeded_and_leaves_global_rng():
    torch.manual_seed(99)
    before = torch.rand(1)
    torch.manual_seed(99)
    a = build(toy_config(seed=3))
    after = torch.rand(1)
    assert torch.equal(before, after)
    b = build(toy_config(seed=3))
    c = build(toy_config(seed=4))
    sa, sb, sc = a.state_dict(), b.state_dict(), c.state_dict()
    assert all(torch.equal(sa[k], sb[k]) for k in sa)
    assert not all(torch.equal(sa[k], sc[k]) for k in sa)


def test_forward_single_patch_and_clamp(toy_model, rng):
    out = forward(toy_model, rng.random((8, 8)))
    assert out.confidence.shape == (2, 2) and out.regression.shape == (2, 2, 2)
    assert ((out.confidence > 0) & (out.confidence < 1)).all()
    with pytest.raises(ValueError, match="shape"):
        forward(toy_model, rng.random((9, 8)))


def test_forward_batch_restores_training_mode(toy_model, rng):
    toy_model.train()
    forward_batch(toy_model, rng.random((3, 8, 8)))
    assert toy_model.training


def test_model_roundtrip_bit_exact(tmp_path, rng):
    model = build(NetConfig(base_depth=9, seed=2))
    # perturb BN statistics so buffers are exercised
    model.base[0].bn1.running_mean.add_(0.5)
    p = tmp_path / "m.ppnmodel"
    save(model, p)
    back = load(p)
    a, b = model.state_dict(), back.state_dict()
    for k in a:
        if a[k].is_floating_point():
            assert a[k].numpy().tobytes() == b[k].numpy().tobytes(), k
    x = rng.random((2, 224, 224))
    ca, ra = forward_batch(model, x)
    cb, rb = forward_batch(back, x)
    assert np.array_equal(ca, cb) and np.array_equal(ra, rb)
    save(back, tmp_path / "m2.ppnmodel")
    assert (tmp_path / "m2.ppnmodel").read_bytes() == p.read_bytes()


def test_model_load_errors(tmp_path, toy_model):
    p = tmp_path / "t.ppnmodel"
    save(toy_model, p)
    data = p.read_bytes()

    (tmp_path / "magic").write_bytes(b"XXXXXXXX" + data[8:])
    with pytest.raises(FormatError, match="magic"):
        load(tmp_path / "magic")

    (tmp_path / "trunc").write_bytes(data[:-40])
    with pytest.raises(FormatError, match="checksum|truncated"):
        load(tmp_path / "trunc")

    with pytest.raises(FormatError, match="grid.grid_m"):
        load(p, grid=GridSpec(8, 1, 1))
    with pytest.raises(FormatError, match="head_channels"):
        load(p, expect=toy_config(head_channels=7))
    assert load(p, expect=toy_config(seed=123)) is not None  # seed is not part of the geometry


def test_model_load_names_truncated_entry(tmp_path, toy_model):
    import zlib

    p = tmp_path / "t.ppnmodel"
    save(toy_model, p)
    body = p.read_bytes()[:-4]
    cut = body[:-4]  # drop the tail of the last tensor, then re-seal the checksum
    (tmp_path / "cut").write_bytes(cut + struct.pack("<I", zlib.crc32(cut)))
    last = [k for k, v in toy_model.state_dict().items() if v.is_floating_point()][-1]
    with pytest.raises(FormatError, match=f"truncated while reading entry '{last}' data"):
        load(tmp_path / "cut")
