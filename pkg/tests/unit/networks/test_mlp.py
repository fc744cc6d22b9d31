"""Unit tests for MlpSpec and Mlp"""

import numpy as np
import pytest
from pydantic import ValidationError

from app.exceptions import DimensionError
from app.networks.mlp import Mlp, MlpSpec, glorot_uniform
from app.numerics import ParameterStore


@pytest.mark.unit
class TestMlpSpec:
    """Tests for architecture validation"""

    def test_requires_two_sizes(self):
        """A single width is not a network"""
        with pytest.raises(ValidationError):
            MlpSpec(layer_sizes=[3])

    def test_rejects_zero_width(self):
        """Every width must be positive"""
        with pytest.raises(ValidationError):
            MlpSpec(layer_sizes=[3, 0, 2])

    def test_dims(self):
        """input_dim / output_dim should read the end widths"""
        spec = MlpSpec(layer_sizes=[5, 7, 2])
        assert (spec.input_dim, spec.output_dim) == (5, 2)


@pytest.mark.unit
class TestMlp:
    """Tests for registration and forward passes"""

    def test_registers_prefixed_parameters(self, rng):
        """Should register w/b per layer under the prefix"""
        store = ParameterStore()
        Mlp(MlpSpec(layer_sizes=[3, 4, 2]), store, "C", rng)
        assert store.names() == ["C.0.w", "C.0.b", "C.1.w", "C.1.b"]
        assert store["C.0.w"].value.shape == (3, 4)
        assert not store["C.1.b"].value.any()

    def test_glorot_limit(self, rng):
        """Initial weights should stay within ±sqrt(6 / (fan_in + fan_out))"""
        w = glorot_uniform(10, 6, rng)
        assert np.all(np.abs(w) <= np.sqrt(6.0 / 16.0))

    def test_same_seed_same_weights(self):
        """Initialization should be a pure function of the generator state"""
        stores = []
        for _ in range(2):
            store = ParameterStore()
            Mlp(MlpSpec(layer_sizes=[3, 4, 2]), store, "F", np.random.default_rng(5))
            stores.append(store)
        for name in stores[0]:
            assert np.array_equal(stores[0][name].value, stores[1][name].value)

    def test_softmax_head(self, rng):
        """Softmax heads should produce probability rows"""
        net = Mlp(MlpSpec(layer_sizes=[3, 4, 5], output_head="softmax"), ParameterStore(), "C", rng)
        out = net(rng.normal(size=(6, 3))).data
        assert out.shape == (6, 5)
        np.testing.assert_allclose(out.sum(axis=1), 1.0, atol=1e-12)

    def test_sigmoid_head_is_open_interval(self, rng):
        """Sigmoid heads should stay strictly inside (0, 1)"""
        store = ParameterStore()
        net = Mlp(MlpSpec(layer_sizes=[2, 1], output_head="sigmoid"), store, "D", rng)
        store.set_value("D.0.w", [[500.0], [0.0]])
        out = net(np.array([[1.0, 0.0], [-1.0, 0.0]])).data
        assert np.all((out > 0.0) & (out < 1.0))

    def test_width_mismatch(self, rng):
        """Should raise DimensionError on a wrong input width"""
        net = Mlp(MlpSpec(layer_sizes=[3, 2]), ParameterStore(), "F", rng)
        with pytest.raises(DimensionError):
            net(np.zeros((2, 4)))
