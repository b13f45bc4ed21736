import numpy as np
import pytest

from conftest import rel_err
from poselift.checkpoint import load_checkpoint, save_checkpoint
from poselift.layers import softmax_cross_entropy
from poselift.networks import (ResidualMLP, discriminator_apply,
                               generator_apply, init_parameters,
                               make_discriminator, make_generator)


def zero_residual_branches(net: ResidualMLP) -> None:
    for block in net.blocks:
        for layer in block.stack:
            for p in layer.parameters():
                if p.name.endswith(".gamma"):
                    p.value = np.ones_like(p.value)
                else:
                    p.value = np.zeros_like(p.value)


class TestArchitecture:
    def test_generator_shape(self):
        gen = init_parameters(make_generator(width=16, num_blocks=2), 0)
        out = generator_apply(gen, np.random.default_rng(0).normal(0, 1, (5, 14, 2)))
        assert out.shape == (5, 14)

    def test_generator_reference_scale_layout(self):
        gen = make_generator()
        assert gen.in_dim == 28 and gen.out_dim == 14
        assert gen.width == 1024 and gen.num_blocks == 4

    def test_discriminator_reference_scale_layout(self):
        disc = make_discriminator()
        assert disc.in_dim == 28 and disc.out_dim == 2
        assert disc.width == 1024 and disc.num_blocks == 3

    def test_discriminator_returns_probability(self, rng):
        disc = init_parameters(make_discriminator(width=16, num_blocks=2), 1)
        p = discriminator_apply(disc, rng.normal(0, 1, (7, 28)))
        assert p.shape == (7,)
        assert np.all((p > 0) & (p < 1))

    def test_flat_input_and_pose_input_agree(self, rng):
        gen = init_parameters(make_generator(width=16, num_blocks=2), 2)
        poses = rng.normal(0, 1, (5, 14, 2))
        np.testing.assert_array_equal(
            generator_apply(gen, poses),
            generator_apply(gen, poses.reshape(5, 28)))

    def test_rejects_wrong_width(self, rng):
        gen = init_parameters(make_generator(width=16, num_blocks=2), 2)
        with pytest.raises(ValueError):
            generator_apply(gen, rng.normal(0, 1, (5, 27)))

    def test_zeroed_residual_blocks_are_identity(self, rng):
        net = init_parameters(ResidualMLP(6, 10, 3, 4), 5)
        zero_residual_branches(net)
        x = rng.normal(0, 1, (8, 6))
        manual = net.input_relu.forward(
            net.input_layer.forward(x, False), False)
        manual = net.output_layer.forward(manual, False)
        out = net.forward(x, False)
        np.testing.assert_array_equal(out, manual)
        # training mode too: BatchNorm of an all-zero branch stays zero
        out_train = net.forward(x, True)
        np.testing.assert_array_equal(out_train, manual)

    def test_single_block_identity(self, rng):
        net = init_parameters(ResidualMLP(4, 4, 1, 4), 7)
        zero_residual_branches(net)
        x = rng.normal(0, 1, (6, 4))
        block_out = net.blocks[0].forward(x, True)
        np.testing.assert_array_equal(block_out, x)


class TestInit:
    def test_hidden_weight_variance_matches_fan_in(self):
        net = init_parameters(make_generator(width=256, num_blocks=2), 0)
        for p in net.parameters():
            if p.name.endswith(".weight") and p.name != "output.weight":
                fan_in = p.value.shape[1]
                target = 2.0 / fan_in
                measured = p.value.var()
                assert abs(measured - target) / target < 0.2, p.name

    def test_output_layer_starts_at_zero(self):
        # fresh generator = flat skeleton, fresh discriminator = 0.5
        gen = init_parameters(make_generator(width=32, num_blocks=2), 0)
        assert np.all(gen.output_layer.weight.value == 0.0)
        x = np.random.default_rng(0).normal(0, 0.05, (5, 28))
        np.testing.assert_array_equal(gen.forward(x, False), 0.0)

    def test_biases_zero_bn_identity(self):
        net = init_parameters(make_generator(width=32, num_blocks=2), 0)
        for p in net.parameters():
            if p.name.endswith(".bias") or p.name.endswith(".beta"):
                assert np.all(p.value == 0.0), p.name
            if p.name.endswith(".gamma"):
                assert np.all(p.value == 1.0), p.name

    def test_seed_determinism(self):
        a = init_parameters(make_generator(width=32, num_blocks=2), 9)
        b = init_parameters(make_generator(width=32, num_blocks=2), 9)
        c = init_parameters(make_generator(width=32, num_blocks=2), 10)
        for pa, pb in zip(a.parameters(), b.parameters()):
            np.testing.assert_array_equal(pa.value, pb.value)
        assert any(not np.array_equal(pa.value, pc.value)
                   for pa, pc in zip(a.parameters(), c.parameters()))


def randomize_output_layer(net, seed):
    """Move the zero-initialized output layer to a generic point."""
    gen = np.random.default_rng(seed)
    w = net.output_layer.weight
    w.value = gen.normal(0.0, np.sqrt(2.0 / w.value.shape[1]), w.value.shape)


class TestFullNetGradients:
    def test_training_mode_matches_finite_differences(self, rng):
        net = init_parameters(ResidualMLP(6, 8, 2, 2), 3)
        randomize_output_layer(net, 3)
        x = rng.normal(0, 1, (4, 6))
        labels = np.array([0, 1, 1, 0])

        def objective():
            logits = net.forward(x, True)
            return softmax_cross_entropy(logits, labels)[0]

        net.zero_grad()
        logits = net.forward(x, True)
        loss, d_logits, _ = softmax_cross_entropy(logits, labels)
        net.backward(d_logits)

        h = 1e-6
        worst = 0.0
        checked = 0
        for p in net.parameters():
            flat_v = p.value.ravel()
            flat_g = p.grad.ravel()
            take = np.argsort(-np.abs(flat_g))[:4]
            for i in take:
                orig = flat_v[i]
                flat_v[i] = orig + h
                fp = objective()
                flat_v[i] = orig - h
                fm = objective()
                flat_v[i] = orig
                fd = (fp - fm) / (2 * h)
                if abs(fd) > 1e-8:
                    worst = max(worst, rel_err(fd, flat_g[i]))
                    checked += 1
        assert checked > 30
        assert worst < 1e-4, worst

    def test_input_gradient_matches_finite_differences(self, rng):
        net = init_parameters(ResidualMLP(6, 8, 2, 2), 4)
        randomize_output_layer(net, 4)
        x = rng.normal(0, 1, (4, 6))
        labels = np.array([1, 0, 1, 0])
        net.zero_grad()
        loss, d_logits, _ = softmax_cross_entropy(net.forward(x, True), labels)
        d_x = net.backward(d_logits)
        h = 1e-6
        flat = x.ravel()
        for i in range(0, flat.size, 3):
            orig = flat[i]
            flat[i] = orig + h
            fp = softmax_cross_entropy(net.forward(x, True), labels)[0]
            flat[i] = orig - h
            fm = softmax_cross_entropy(net.forward(x, True), labels)[0]
            flat[i] = orig
            fd = (fp - fm) / (2 * h)
            if abs(fd) > 1e-8:
                assert rel_err(fd, d_x.ravel()[i]) < 1e-4


class TestStateRoundTrip:
    def test_checkpoint_is_bitwise_lossless(self, rng, tmp_path):
        net = init_parameters(make_generator(width=16, num_blocks=2), 6)
        for _ in range(3):  # move running stats off their init values
            net.forward(rng.normal(0, 1, (8, 28)), True)
        path = str(tmp_path / "ck")
        save_checkpoint(path, {"kind": "net"}, net.state_arrays())
        meta, arrays = load_checkpoint(path)
        assert meta == {"kind": "net"}

        other = make_generator(width=16, num_blocks=2)
        other.load_state(arrays)
        for name, arr in net.state_arrays():
            loaded = dict(other.state_arrays())[name]
            np.testing.assert_array_equal(arr, loaded)
        x = rng.normal(0, 1, (5, 28))
        np.testing.assert_array_equal(net.forward(x, False),
                                      other.forward(x, False))

    def test_blob_bytes_listed_in_manifest_order(self, tmp_path):
        arrays = [("b", np.arange(3.0)), ("a", np.arange(4.0) + 10)]
        path = str(tmp_path / "ck")
        save_checkpoint(path, {}, arrays)
        blob = (tmp_path / "ck" / "params.bin").read_bytes()
        expected = np.arange(3.0).astype("<f8").tobytes() + \
            (np.arange(4.0) + 10).astype("<f8").tobytes()
        assert blob == expected
