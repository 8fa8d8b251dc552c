"""Training behavior: losses, freezing, determinism, warm starts."""

import numpy as np
import pytest
import torch

from warehouse_surrogate.model import SurrogateSpec, build_model
from warehouse_surrogate.protocol import decode_train
from warehouse_surrogate.training import TrainConfig, kl_usage_loss, train

from conftest import make_records, train_payload

QUICK = TrainConfig(epochs=4, batch_size=8, seed=3)


def test_empty_dataset_rejected(rng):
    data = decode_train(train_payload(rng, n=1))
    data.unrepaired = data.unrepaired[:0]
    with pytest.raises(ValueError, match="empty"):
        train(data, QUICK)


def test_dim_mismatch_rejected(rng):
    data = decode_train(train_payload(rng, height=5, width=6))
    model = build_model(SurrogateSpec(6, 5))
    with pytest.raises(ValueError, match="dims"):
        train(data, QUICK, model=model)


def test_curves_have_one_entry_per_epoch(rng):
    data = decode_train(train_payload(rng))
    _, curves = train(data, QUICK)
    assert sorted(curves) == ["repair", "score", "usage"]
    assert all(len(c) == QUICK.epochs for c in curves.values())
    assert all(np.isfinite(c).all() for c in curves.values())


def test_memorization_drives_repair_loss_down(rng):
    # one record repeated 64 times is learnable almost exactly
    record = make_records(rng, 1, 5, 6) * 64
    payload = train_payload(rng, n=1)
    payload["records"] = record
    data = decode_train(payload)
    _, curves = train(data, TrainConfig(epochs=20, batch_size=64, seed=0))
    assert curves["repair"][-1] < 0.05
    assert curves["repair"][-1] < curves["repair"][0] / 10


def test_kl_loss_zero_when_target_equals_prediction():
    probs = torch.tensor([[0.25, 0.25, 0.5], [0.1, 0.6, 0.3]])
    assert kl_usage_loss(probs.log(), probs).abs().item() < 1e-7


def test_kl_loss_positive_on_mismatch():
    p = torch.tensor([[0.25, 0.25, 0.5]])
    q = torch.tensor([[0.5, 0.25, 0.25]])
    assert kl_usage_loss(q.log(), p).item() > 0


def test_training_is_deterministic(rng):
    payload = train_payload(rng)
    _, first = train(decode_train(payload), QUICK)
    _, second = train(decode_train(payload), QUICK)
    assert first == second


def test_warm_start_continues_from_given_weights(rng):
    payload = train_payload(rng)
    model, curves = train(decode_train(payload), QUICK)
    _, warm_curves = train(decode_train(payload), QUICK, model=model)
    # a warmed model starts near where the cold run ended, not at scratch
    assert warm_curves["repair"][0] < curves["repair"][0]


def test_all_parameters_trainable_after_training(rng):
    model, _ = train(decode_train(train_payload(rng)), QUICK)
    assert all(p.requires_grad for p in model.parameters())
    assert not model.training  # handed back in inference mode


def test_fitting_one_subnetwork_freezes_the_others(rng):
    from warehouse_surrogate.training import _fit
    from torch.nn import functional as F

    data = decode_train(train_payload(rng))
    model = build_model(SurrogateSpec(5, 6))
    before = {name: p.detach().clone()
              for name, p in model.named_parameters()}
    inputs = torch.from_numpy(data.unrepaired)
    classes = torch.from_numpy(data.repaired).argmax(dim=1)
    _fit(model.repair_net, inputs, classes,
         lambda logits, t: F.cross_entropy(logits, t), QUICK, seed=0)
    changed = {name for name, p in model.named_parameters()
               if not torch.equal(before[name], p)}
    assert any(name.startswith("repair_net.") for name in changed)
    assert all(name.startswith("repair_net.") for name in changed)


def test_score_targets_use_declared_measure_ranges(rng):
    from warehouse_surrogate.training import score_targets

    payload = train_payload(rng, n=2,
                            measure_ranges=[[0.0, 12.0], [2.0, 14.0]])
    payload["records"][0]["objective"] = 1.5
    payload["records"][0]["measures"] = [6.0, 8.0]   # both midpoints
    payload["records"][1]["objective"] = 0.25
    payload["records"][1]["measures"] = [0.0, 14.0]  # the range corners
    targets = score_targets(decode_train(payload))
    np.testing.assert_allclose(targets, [[1.5, 0.5, 0.5],
                                         [0.25, 0.0, 1.0]], atol=1e-6)
