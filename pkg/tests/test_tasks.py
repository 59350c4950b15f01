"""Task models: training determinism, checkpoint round trips, loss oracles,
and numeric gradient checks on the image input."""

import numpy as np
import pytest
import torch

from scanpaths.data import LabeledStimulus, make_synthetic_dataset
from scanpaths.tasks import (
    ConvAutoencoder,
    ConvClassifier,
    TaskModel,
    TaskTrainConfig,
    load_task_model,
    stack_dataset,
    task_loss,
    train_classifier,
    train_reconstructor,
)

TINY = TaskTrainConfig(epochs=2, batch_size=16, lr=1e-3, width=4, input_size=16, seed=0)


@pytest.fixture(scope="module")
def tiny_dataset():
    return make_synthetic_dataset(48, image_size=16, seed=3)


@pytest.fixture(scope="module")
def tiny_classifier(tiny_dataset):
    return train_classifier(tiny_dataset, TINY)


class TestStackDataset:
    def test_layout_and_dtypes(self, tiny_dataset):
        images, labels = stack_dataset(tiny_dataset)
        assert images.shape == (48, 3, 16, 16)
        assert images.dtype == torch.float32
        assert labels.dtype == torch.long
        assert labels.min() >= 0

    def test_rejects_empty_and_mixed_shapes(self):
        with pytest.raises(ValueError):
            stack_dataset([])
        mixed = [
            LabeledStimulus(np.zeros((16, 16, 3)), 0),
            LabeledStimulus(np.zeros((18, 16, 3)), 1),
        ]
        with pytest.raises(ValueError):
            stack_dataset(mixed)


class TestTrainClassifier:
    def test_history_is_recorded(self, tiny_classifier):
        assert len(tiny_classifier.history["train_loss"]) == TINY.epochs
        assert 0.0 <= tiny_classifier.history["val_accuracy"] <= 1.0
        assert tiny_classifier.kind == "classification"
        assert tiny_classifier.class_count == 3

    def test_same_seed_reproduces_weights_and_curve(self, tiny_dataset, tiny_classifier):
        again = train_classifier(tiny_dataset, TINY)
        assert again.history["train_loss"] == tiny_classifier.history["train_loss"]
        for a, b in zip(again.net.parameters(), tiny_classifier.net.parameters()):
            assert torch.equal(a, b)

    def test_different_seed_differs(self, tiny_dataset, tiny_classifier):
        other = train_classifier(tiny_dataset, TaskTrainConfig(
            epochs=2, batch_size=16, lr=1e-3, width=4, input_size=16, seed=1))
        assert other.history["train_loss"] != tiny_classifier.history["train_loss"]

    def test_rejects_single_class_and_negative_labels(self, tiny_dataset):
        same = [LabeledStimulus(s.stimulus, 0) for s in tiny_dataset[:8]]
        with pytest.raises(ValueError, match="two classes"):
            train_classifier(same, TINY)
        bad = [LabeledStimulus(s.stimulus, -1 if i == 0 else 1)
               for i, s in enumerate(tiny_dataset[:8])]
        with pytest.raises(ValueError, match="non-negative"):
            train_classifier(bad, TINY)

    def test_predict_returns_labels_without_grad(self, tiny_classifier, tiny_dataset):
        images, _ = stack_dataset(tiny_dataset[:4])
        pred = tiny_classifier.predict(images)
        assert pred.shape == (4,)
        assert not pred.requires_grad
        assert pred.max() < tiny_classifier.class_count


class TestTrainReconstructor:
    def test_loss_decreases_and_val_recorded(self, tiny_dataset):
        config = TaskTrainConfig(epochs=4, batch_size=16, lr=2e-3, width=4, input_size=16, seed=0)
        model = train_reconstructor(tiny_dataset, config)
        curve = model.history["train_loss"]
        assert curve[-1] < curve[0]
        assert model.history["val_mse"] >= 0.0
        assert model.kind == "reconstruction"
        assert model.class_count is None

    def test_decoder_keeps_shape_and_range(self):
        net = ConvAutoencoder(3, width=4)
        out = net(torch.rand(2, 3, 16, 16))
        assert out.shape == (2, 3, 16, 16)
        assert out.min() >= 0.0 and out.max() <= 1.0


class TestCheckpointRoundTrip:
    def test_forward_is_bit_identical_after_reload(self, tiny_classifier, tiny_dataset, tmp_path):
        path = tiny_classifier.save(tmp_path / "clf.pt")
        loaded = load_task_model(path)
        images, _ = stack_dataset(tiny_dataset[:6])
        with torch.no_grad():
            assert torch.equal(tiny_classifier.forward(images), loaded.forward(images))
        assert loaded.history == tiny_classifier.history
        assert (loaded.kind, loaded.width, loaded.input_size) == ("classification", 4, 16)

    def test_reconstructor_round_trip(self, tiny_dataset, tmp_path):
        config = TaskTrainConfig(epochs=1, batch_size=16, width=4, input_size=16, seed=0)
        model = train_reconstructor(tiny_dataset, config)
        loaded = load_task_model(model.save(tmp_path / "ae.pt"))
        x = torch.rand(1, 3, 16, 16)
        with torch.no_grad():
            assert torch.equal(model.forward(x), loaded.forward(x))

    def test_foreign_file_rejected(self, tmp_path):
        path = tmp_path / "other.pt"
        torch.save({"format": "something-else"}, path)
        with pytest.raises(ValueError, match="not a task model"):
            load_task_model(path)


class TestBridge:
    def test_native_size_passes_through_untouched(self, tiny_classifier):
        x = torch.rand(2, 3, 16, 16)
        assert tiny_classifier.bridge(x) is x

    def test_other_sizes_resampled(self, tiny_classifier):
        assert tiny_classifier.bridge(torch.rand(2, 3, 40, 40)).shape == (2, 3, 16, 16)
        # Constant images must survive bilinear resampling exactly.
        const = tiny_classifier.bridge(torch.full((1, 3, 40, 40), 0.25))
        assert torch.allclose(const, torch.full((1, 3, 16, 16), 0.25))


class TestTaskLoss:
    def test_cross_entropy_matches_manual_log_softmax(self, tiny_classifier, tiny_dataset):
        images, labels = stack_dataset(tiny_dataset[:8])
        with torch.no_grad():
            logits = tiny_classifier.forward(images)
            logp = logits - torch.logsumexp(logits, dim=1, keepdim=True)
            manual = -logp[torch.arange(8), labels].mean()
            loss = task_loss(tiny_classifier, images, labels)
        assert torch.allclose(loss, manual, atol=1e-6)

    def test_scalar_label_broadcasts_over_batch(self, tiny_classifier, tiny_dataset):
        images, _ = stack_dataset(tiny_dataset[:4])
        full = task_loss(tiny_classifier, images, torch.tensor([1, 1, 1, 1]))
        assert torch.allclose(task_loss(tiny_classifier, images, 1), full)

    def test_label_range_checked(self, tiny_classifier, tiny_dataset):
        images, _ = stack_dataset(tiny_dataset[:2])
        with pytest.raises(ValueError, match="out of range"):
            task_loss(tiny_classifier, images, tiny_classifier.class_count)

    def test_mse_matches_manual_mean_square(self, tiny_dataset):
        config = TaskTrainConfig(epochs=1, batch_size=16, width=4, input_size=16, seed=0)
        model = train_reconstructor(tiny_dataset, config)
        images, _ = stack_dataset(tiny_dataset[:4])
        blurred = images * 0.5
        with torch.no_grad():
            out = model.forward(blurred)
            manual = ((out - images) ** 2).mean()
            loss = task_loss(model, blurred, images)
        assert torch.allclose(loss, manual, atol=1e-7)

    def test_reconstruction_target_must_be_tensor(self, tiny_dataset):
        config = TaskTrainConfig(epochs=1, batch_size=16, width=4, input_size=16, seed=0)
        model = train_reconstructor(tiny_dataset, config)
        with pytest.raises(TypeError):
            task_loss(model, torch.rand(1, 3, 16, 16), 0)


class TestImageGradients:
    def test_gradient_flows_to_image_not_frozen_weights(self, tiny_classifier):
        tiny_classifier.net.requires_grad_(False)
        try:
            img = torch.rand(1, 3, 16, 16, requires_grad=True)
            task_loss(tiny_classifier, img, 1).backward()
            assert img.grad is not None
            assert torch.isfinite(img.grad).all()
            assert img.grad.abs().sum() > 0
        finally:
            tiny_classifier.net.requires_grad_(True)

    def test_loss_gradient_passes_gradcheck(self):
        # Untrained double-precision net; smooth ops make the numeric and
        # autograd Jacobians agree to gradcheck's default tolerances.
        torch.manual_seed(0)
        net = ConvClassifier(1, 2, width=2).double()
        model = TaskModel(kind="classification", net=net, input_size=8, in_channels=1,
                          class_count=2, width=2)
        img = torch.rand(1, 1, 8, 8, dtype=torch.float64, requires_grad=True)
        assert torch.autograd.gradcheck(
            lambda x: task_loss(model, x, 1), (img,), eps=1e-6, atol=1e-5
        )
