"""Tests for tensors, the tape, composite ops, parameters and gradient checks."""

import math
import os
import sys
import unittest

import numpy as np

# Add parent directory to path
sys.path.append(os.path.dirname(os.path.dirname(os.path.dirname(__file__))))

from tests.test_config import BaseTestCase
from petforge.core.errors import ConfigurationError, ContractError, DimensionError, InputError, ShapeError
from petforge.engine import functional as F
from petforge.engine import tensor as T
from petforge.engine.gradcheck import grad_check
from petforge.engine.params import ParamRegistry
from petforge.engine.tensor import Tape, Tensor, backward


class TestTensorOps(BaseTestCase):
    """Forward values of the primitive and composite operations."""

    def test_matmul_identity(self):
        """The identity matrix leaves its operand unchanged."""
        out = T.matmul(Tensor(np.eye(2)), Tensor([[1.0, 2.0], [3.0, 4.0]]))
        self.assertArrayEqual(out.data, [[1, 2], [3, 4]])

    def test_matmul_arithmetic(self):
        """A 2x2 by 2x1 product."""
        out = T.matmul(Tensor([[1.0, 2.0], [3.0, 4.0]]), Tensor([[5.0], [6.0]]))
        self.assertArrayEqual(out.data, [[17], [39]])

    def test_matmul_shape_mismatch(self):
        """Incompatible extents raise a dimension error naming both shapes."""
        with self.assertRaises(DimensionError) as ctx:
            T.matmul(Tensor(np.ones((2, 3))), Tensor(np.ones((2, 3))))
        self.assertIn('(2, 3)', str(ctx.exception))

    def test_layer_norm_zero_variance(self):
        """A constant row normalizes to zeros."""
        out = F.layer_norm(Tensor([1.0, 1.0, 1.0]), Tensor(np.ones(3)), Tensor(np.zeros(3)), 1e-5)
        self.assertArrayEqual(out.data, [0, 0, 0])

    def test_layer_norm_without_eps(self):
        """[0, 2] has mean 1 and std 1."""
        out = F.layer_norm(Tensor([0.0, 2.0]), Tensor(np.ones(2)), Tensor(np.zeros(2)), 0.0)
        self.assertArrayEqual(out.data, [-1, 1])

    def test_layer_norm_constant_input_gives_beta(self):
        """Constant input leaves only the shift."""
        beta = np.array([0.3, -0.7, 2.0])
        out = F.layer_norm(Tensor([4.0, 4.0, 4.0]), Tensor(np.ones(3)), Tensor(beta))
        self.assertArrayClose(out.data, beta)

    def test_layer_norm_empty_axis(self):
        """An empty last axis is a dimension error."""
        with self.assertRaises(DimensionError):
            F.layer_norm(Tensor(np.zeros((2, 0))), Tensor(np.ones(0)), Tensor(np.zeros(0)))

    def test_softmax_values(self):
        """Symmetric and analytically forced cases."""
        self.assertArrayClose(F.softmax(Tensor([0.0, 0.0])).data, [0.5, 0.5])
        self.assertArrayClose(F.softmax(Tensor([math.log(2.0), 0.0])).data, [2 / 3, 1 / 3], atol=1e-12)

    def test_activations(self):
        """relu, sigmoid and gelu at their reference points."""
        self.assertArrayEqual(F.activation(Tensor([-1.0, 0.0, 2.0]), 'relu').data, [0, 0, 2])
        self.assertEqual(F.activation(Tensor(0.0), 'sigmoid').item(), 0.5)
        self.assertEqual(F.activation(Tensor(0.0), 'gelu').item(), 0.0)

    def test_unknown_activation(self):
        """Unknown activation names are configuration errors."""
        with self.assertRaises(ConfigurationError):
            F.activation(Tensor([1.0]), 'swish')

    def test_cross_entropy_uniform(self):
        """Uniform logits over 10 classes cost ln 10."""
        loss = F.cross_entropy(Tensor(np.zeros(10)), 3)
        self.assertAlmostEqual(loss.item(), math.log(10.0), places=12)

    def test_cross_entropy_monotone(self):
        """Raising the true-class logit lowers the loss."""
        losses = [F.cross_entropy(Tensor([[margin, 0.0, 0.0]]), [0]).item() for margin in (0.0, 1.0, 2.0)]
        self.assertGreater(losses[0], losses[1])
        self.assertGreater(losses[1], losses[2])

    def test_cross_entropy_label_range(self):
        """Labels outside 0..C-1 are input errors."""
        with self.assertRaises(InputError):
            F.cross_entropy(Tensor(np.zeros((1, 3))), [3])

    def test_conv_output_length(self):
        """Valid convolution frame counts, including the too-short case."""
        self.assertEqual(F.output_length(10, 3), 8)
        self.assertEqual(F.output_length(10, 3, stride=2), 4)
        self.assertEqual(F.output_length(10, 3, dilation=3), 4)
        self.assertEqual(F.output_length(2, 3), 0)

    def test_grouped_conv_keeps_length(self):
        """'Same' grouped convolution returns [B, L, C]."""
        x = Tensor(np.random.default_rng(0).standard_normal((2, 7, 4)))
        weight = Tensor(np.random.default_rng(1).standard_normal((2, 3 * 2, 2)))
        out = F.grouped_conv_same(x, weight, Tensor(np.zeros(4)), kernel=3, groups=2)
        self.assertEqual(out.shape, (2, 7, 4))

    def test_tensors_are_read_only(self):
        """Tensor data cannot be modified in place."""
        t = Tensor([1.0, 2.0])
        with self.assertRaises(ValueError):
            t.data[0] = 5.0


class TestTape(BaseTestCase):
    """Reverse-mode differentiation through the tape."""

    def test_sum_gradient(self):
        """d sum(x) / dx is all ones."""
        with Tape() as tape:
            x = tape.watch('x', np.array([1.0, 2.0, 3.0]))
            loss = x.sum()
        grads = backward(loss, tape)
        self.assertArrayEqual(grads['x'].data, [1, 1, 1])

    def test_square_gradient(self):
        """d x^2 / dx at 3 is 6."""
        with Tape() as tape:
            x = tape.watch('x', np.array(3.0))
            loss = x * x
        self.assertEqual(backward(loss, tape)['x'].item(), 6.0)

    def test_broadcast_gradient(self):
        """Gradients of broadcast operands are summed back to their shape."""
        with Tape() as tape:
            bias = tape.watch('bias', np.zeros(3))
            loss = (Tensor(np.ones((4, 3))) + bias).sum()
        self.assertArrayEqual(backward(loss, tape)['bias'].data, [4, 4, 4])

    def test_unused_root_gets_zero_gradient(self):
        """Watched tensors outside the loss graph receive zeros."""
        with Tape() as tape:
            x = tape.watch('x', np.array([1.0]))
            tape.watch('unused', np.ones((2, 2)))
            loss = (x * 2.0).sum()
        grads = backward(loss, tape)
        self.assertArrayEqual(grads['unused'].data, np.zeros((2, 2)))

    def test_non_scalar_loss(self):
        """backward refuses non-scalar losses."""
        with Tape() as tape:
            x = tape.watch('x', np.ones(2))
            out = x * 2.0
        with self.assertRaises(ContractError):
            backward(out, tape)

    def test_tape_is_single_use(self):
        """A consumed tape cannot be replayed."""
        with Tape() as tape:
            x = tape.watch('x', np.array(1.0))
            loss = x * x
        backward(loss, tape)
        with self.assertRaises(ContractError):
            backward(loss, tape)

    def test_untracked_outside_tape(self):
        """Operations outside any tape are never recorded."""
        t = Tensor([1.0], requires_grad=True)
        self.assertFalse((t * 2.0).requires_grad)


class TestParamRegistry(BaseTestCase):
    """Declaration, freezing and weight loading."""

    def test_duplicate_names(self):
        """A name can be declared once."""
        registry = ParamRegistry(np.random.default_rng(0))
        registry.declare('w', (2, 2), 'backbone')
        with self.assertRaises(ContractError):
            registry.declare('w', (2, 2), 'backbone')

    def test_shape_only_registry(self):
        """Without a generator only shapes are recorded."""
        registry = ParamRegistry()
        param = registry.declare('w', (768, 768), 'backbone')
        self.assertIsNone(param.value)
        self.assertEqual(registry.count(), 768 * 768)
        with self.assertRaises(ContractError):
            _ = param.tensor

    def test_same_seed_same_values(self):
        """Values are drawn in declaration order from the registry generator."""
        values = []
        for _ in range(2):
            registry = ParamRegistry(np.random.default_rng(5), 'float64')
            registry.declare('a', (3,), 'x')
            values.append(registry.declare('b', (2, 2), 'x').value)
        self.assertArrayEqual(values[0], values[1])

    def test_set_trainable_and_count(self):
        """Counts follow the freezing predicate."""
        registry = ParamRegistry(np.random.default_rng(0))
        registry.declare('backbone.w', (4, 4), 'backbone')
        registry.declare('pet.w', (4, 2), 'inner')
        registry.set_trainable(lambda p: p.owner != 'backbone')
        self.assertEqual(registry.count(trainable=True), 8)
        self.assertEqual(registry.count(trainable=False), 16)

    def test_load_arrays_shape_mismatch(self):
        """A wrong shape names the parameter."""
        registry = ParamRegistry(np.random.default_rng(0))
        registry.declare('backbone.w', (4, 4), 'backbone')
        with self.assertRaises(ShapeError) as ctx:
            registry.load_arrays({'backbone.w': np.zeros((4, 3))})
        self.assertEqual(ctx.exception.name, 'backbone.w')

    def test_load_arrays_missing(self):
        """Strict loading requires every parameter."""
        registry = ParamRegistry(np.random.default_rng(0))
        registry.declare('backbone.w', (2,), 'backbone')
        with self.assertRaises(ShapeError):
            registry.load_arrays({}, strict=True)

    def test_watch_binds_only_trainables(self):
        """Frozen parameters never become tape roots."""
        registry = ParamRegistry(np.random.default_rng(0), 'float64')
        registry.declare('frozen', (2,), 'backbone', trainable=False)
        registry.declare('free', (2,), 'inner')
        with Tape() as tape:
            roots = registry.watch(tape)
            registry.release()
        self.assertEqual(list(roots), ['free'])


class TestGradCheck(BaseTestCase):
    """Finite-difference verification."""

    def test_linear_model(self):
        """A 64-bit linear least-squares loss agrees to 1e-6."""
        registry = ParamRegistry(np.random.default_rng(0), 'float64')
        w = registry.declare('w', (3, 2), 'inner')
        b = registry.declare('b', (2,), 'inner', 'ones')
        x = Tensor(np.random.default_rng(1).standard_normal((5, 3)))
        target = Tensor(np.random.default_rng(2).standard_normal((5, 2)))

        def forward():
            err = F.linear(x, w.tensor, b.tensor) - target
            return (err * err).mean()

        self.assertLess(grad_check(forward, [w, b]), 1e-6)

    def test_empty_parameter_list(self):
        """Nothing to check is an error of zero."""
        self.assertEqual(grad_check(lambda: Tensor(1.0), []), 0.0)

    def test_values_restored(self):
        """Perturbed parameters get their original values back."""
        registry = ParamRegistry(np.random.default_rng(0), 'float64')
        w = registry.declare('w', (2, 2), 'inner')
        before = np.array(w.value)
        grad_check(lambda: (w.tensor * w.tensor).sum(), [w])
        self.assertArrayEqual(w.value, before)

    def test_report_per_parameter(self):
        """The report holds the worst error of every parameter."""
        registry = ParamRegistry(np.random.default_rng(0), 'float64')
        a = registry.declare('a', (2,), 'inner')
        b = registry.declare('b', (2,), 'inner')
        report = {}
        grad_check(lambda: (T.tanh(a.tensor) * b.tensor).sum(), [a, b], report=report)
        self.assertEqual(set(report), {'a', 'b'})


if __name__ == '__main__':
    unittest.main()
