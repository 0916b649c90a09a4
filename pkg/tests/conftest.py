import numpy as np
import pytest

from albumseq.domain import Album, TrackFeatures
from albumseq.nn import ModelConfig, OrderingModel

TINY_CONFIG = ModelConfig(
    feature_dim=6,
    encoder_hidden=4,
    z_dim=1,
    d_model=8,
    n_heads=2,
    d_ff=16,
    max_len=5,
    dropout_rate=0.0,
)


def make_album(m, d, rng, album_id="album"):
    return Album(
        album_id,
        [TrackFeatures(f"{album_id}-t{i}", rng.normal(size=d), f"Song {i}") for i in range(m)],
    )


def zero_output_head(model):
    model.params["tr.out.w"].data[:] = 0.0
    model.params["tr.out.b"].data[:] = 0.0
    return model


@pytest.fixture
def tiny_model():
    return OrderingModel.initialize(TINY_CONFIG, seed=0)


@pytest.fixture
def tiny_album():
    return make_album(3, 6, np.random.default_rng(7))
