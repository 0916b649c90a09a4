import numpy as np
import pytest

from albumseq.errors import CheckpointError
from albumseq.nn import (
    ModelConfig,
    OrderingModel,
    load_checkpoint,
    save_checkpoint,
)

from conftest import TINY_CONFIG, make_album


def test_round_trip_identical_logits(tmp_path, tiny_model, tiny_album):
    tiny_model.set_normalization(np.linspace(-1, 1, 6), np.linspace(0.5, 2, 6))
    path = tmp_path / "model.ckpt"
    save_checkpoint(tiny_model, path)
    loaded = load_checkpoint(path)
    assert loaded.cfg == tiny_model.cfg
    assert np.array_equal(loaded.norm_mean, tiny_model.norm_mean)
    assert np.array_equal(loaded.norm_std, tiny_model.norm_std)
    z1 = tiny_model.encode_album(tiny_album)
    z2 = loaded.encode_album(tiny_album)
    assert np.array_equal(z1, z2)
    l1 = tiny_model.forward_logits(z1, [1])
    l2 = loaded.forward_logits(z2, [1])
    assert np.array_equal(l1, l2)


def test_round_trip_bytes_stable(tmp_path, tiny_model):
    p1, p2 = tmp_path / "a.ckpt", tmp_path / "b.ckpt"
    save_checkpoint(tiny_model, p1)
    save_checkpoint(load_checkpoint(p1), p2)
    assert p1.read_bytes() == p2.read_bytes()


def test_corrupted_magic_rejected(tmp_path, tiny_model):
    path = tmp_path / "model.ckpt"
    save_checkpoint(tiny_model, path)
    blob = bytearray(path.read_bytes())
    blob[0] ^= 0xFF
    path.write_bytes(bytes(blob))
    with pytest.raises(CheckpointError, match="magic"):
        load_checkpoint(path)


def test_truncated_file_rejected(tmp_path, tiny_model):
    path = tmp_path / "model.ckpt"
    save_checkpoint(tiny_model, path)
    blob = path.read_bytes()
    path.write_bytes(blob[: len(blob) - 10])
    with pytest.raises(CheckpointError, match="truncated"):
        load_checkpoint(path)


def test_trailing_bytes_rejected(tmp_path, tiny_model):
    path = tmp_path / "model.ckpt"
    save_checkpoint(tiny_model, path)
    path.write_bytes(path.read_bytes() + b"xx")
    with pytest.raises(CheckpointError, match="trailing"):
        load_checkpoint(path)


def test_version_mismatch_rejected(tmp_path, tiny_model, monkeypatch):
    import albumseq.nn.checkpoint as ck

    path = tmp_path / "model.ckpt"
    monkeypatch.setattr(ck, "FORMAT_VERSION", 99)
    save_checkpoint(tiny_model, path)
    monkeypatch.undo()
    with pytest.raises(CheckpointError, match="version"):
        load_checkpoint(path)


def test_different_max_len_checkpoint_still_infers(tmp_path, tiny_album):
    cfg = ModelConfig(feature_dim=6, encoder_hidden=4, z_dim=1, d_model=8, n_heads=2,
                      d_ff=16, max_len=9, dropout_rate=0.0)
    model = OrderingModel.initialize(cfg, seed=1)
    path = tmp_path / "wide.ckpt"
    save_checkpoint(model, path)
    loaded = load_checkpoint(path)
    assert loaded.cfg.max_len == 9
    z = loaded.encode_album(tiny_album)  # M=3 <= 9
    logits = loaded.forward_logits(z, [0])
    assert logits.shape == (2, 9)
    assert np.array_equal(logits, model.forward_logits(model.encode_album(tiny_album), [0]))


def test_meta_preserved(tmp_path, tiny_model):
    tiny_model.meta["note"] = "desk-scale"
    path = tmp_path / "m.ckpt"
    save_checkpoint(tiny_model, path)
    assert load_checkpoint(path).meta["note"] == "desk-scale"
