import numpy as np
import pytest

from uavtrainer.crosscheck import (BoundaryError, cross_check_inference,
                                   random_window)
from uavtrainer.train import TrainConfig, train_tcn


@pytest.fixture(scope="module")
def trained(small_corpus):
    return train_tcn(small_corpus, None,
                     TrainConfig(epochs=2, channels=16, layers=3,
                                 dropout=0.0), quiet=True)


def test_fresh_export_deviation_tiny(trained):
    deviation = cross_check_inference(trained, n_windows=300)
    assert deviation < 1e-5


def test_swapped_body_axes_detected(trained):
    deviation = cross_check_inference(trained, n_windows=100,
                                      swap_body_axes=True)
    assert deviation > 1e-3


def test_zero_weight_export_deviation_zero(small_corpus):
    from uavtrainer.ingest import load_corpus
    from uavtrainer.model import Normalization, PowerTcn, export_weights
    import torch
    model = PowerTcn(channels=8, kernel=2, layers=2, dropout=0.0)
    with torch.no_grad():
        for p in model.parameters():
            p.zero_()
    model.eval()
    groups, _ = load_corpus(small_corpus)
    norm = Normalization.from_flights([fl for _, fl in groups["train"]])
    weights = export_weights(model, norm, 0.25, {})
    assert cross_check_inference(weights, n_windows=50) == 0.0


def test_windows_are_well_formed():
    rng = np.random.default_rng(0)
    feats, ctx = random_window(rng, 40)
    assert feats.shape == (40, 5)
    assert np.all(feats[:, 0] >= 0.0)
    horiz = feats[:, 1] ** 2 + feats[:, 2] ** 2
    assert np.all(feats[:, 0] ** 2 >= horiz - 1e-9)
    assert ctx.shape == (2,)
