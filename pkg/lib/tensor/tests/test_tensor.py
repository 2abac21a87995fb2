from unittest import TestCase

import numpy as np

from ..exceptions import DomainError, NonScalarBackwardError, ShapeMismatchError
from ..gradcheck import gradcheck
from ..tensor import DiffTensor, concat, matmul, no_grad, stack


class ForwardOpsTest(TestCase):
    """Forward values of the registered ops"""

    def test_matmul_all_ones(self):
        a = DiffTensor(np.ones((2, 3)))
        b = DiffTensor(np.ones((3, 2)))
        np.testing.assert_array_equal((a @ b).value, np.full((2, 2), 3.0))

    def test_softplus_zero(self):
        self.assertAlmostEqual(DiffTensor(0.0).softplus().item(), np.log(2.0), places=15)

    def test_norm_three_four_five(self):
        self.assertEqual(DiffTensor([3.0, 4.0]).norm(axis=-1).item(), 5.0)

    def test_forward_matches_plain_numpy(self):
        rng = np.random.default_rng(0)
        x = rng.normal(size=(4, 5))
        w = rng.normal(size=(5, 3))
        out = (DiffTensor(x) @ DiffTensor(w)).silu().sum(axis=0)
        expected = (x @ w) * (1.0 / (1.0 + np.exp(-(x @ w))))
        np.testing.assert_allclose(out.value, expected.sum(axis=0), rtol=1e-14)

    def test_shape_mismatch_names_op_and_shapes(self):
        with self.assertRaises(ShapeMismatchError) as ctx:
            DiffTensor(np.ones((2, 3))) + DiffTensor(np.ones((2, 4)))
        self.assertEqual(ctx.exception.op, "add")
        self.assertIn("(2, 3)", str(ctx.exception))
        self.assertIn("(2, 4)", str(ctx.exception))
        with self.assertRaises(ShapeMismatchError):
            matmul(DiffTensor(np.ones((2, 3))), DiffTensor(np.ones((2, 3))))

    def test_domain_errors(self):
        with self.assertRaises(DomainError):
            DiffTensor([-1.0, 2.0]).log()
        with self.assertRaises(DomainError):
            DiffTensor([-1.0]).sqrt()

    def test_forward_is_deterministic(self):
        rng = np.random.default_rng(3)
        x = rng.normal(size=(6, 6))
        first = (DiffTensor(x) @ DiffTensor(x)).softmax(axis=-1).value
        second = (DiffTensor(x) @ DiffTensor(x)).softmax(axis=-1).value
        self.assertEqual(first.tobytes(), second.tobytes())

    def test_softmax_with_masked_entries(self):
        logits = DiffTensor([[0.0, -np.inf], [1.0, 1.0]], requires_grad=True)
        probs = logits.softmax(axis=-1)
        np.testing.assert_array_equal(probs.value[0], [1.0, 0.0])
        probs[1, 0].backward()
        self.assertTrue(np.all(np.isfinite(logits.grad)))


class BackwardTest(TestCase):
    def test_square_derivative(self):
        x = DiffTensor(3.0, requires_grad=True)
        (x * x).backward()
        self.assertEqual(float(x.grad), 6.0)

    def test_sum_gives_ones(self):
        x = DiffTensor(np.arange(6.0).reshape(2, 3), requires_grad=True)
        x.sum().backward()
        np.testing.assert_array_equal(x.grad, np.ones((2, 3)))

    def test_accumulates_without_zeroing(self):
        x = DiffTensor(2.0, requires_grad=True)
        (x * 3.0).backward()
        (x * 3.0).backward()
        self.assertEqual(float(x.grad), 6.0)
        x.zero_grad()
        self.assertIsNone(x.grad)

    def test_non_scalar_backward_rejected(self):
        x = DiffTensor(np.ones(3), requires_grad=True)
        with self.assertRaises(NonScalarBackwardError):
            (x * 2.0).backward()

    def test_no_grad_records_nothing(self):
        x = DiffTensor(np.ones(3), requires_grad=True)
        with no_grad():
            y = (x * 2.0).sum()
        self.assertFalse(y.requires_grad)

    def test_leading_batch_broadcast_gradient(self):
        x = DiffTensor(np.ones((4, 3)), requires_grad=True)
        b = DiffTensor(np.arange(3.0), requires_grad=True)
        ((x + b) * (x + b)).sum().backward()
        np.testing.assert_allclose(b.grad, 2.0 * 4.0 * (1.0 + np.arange(3.0)))


def _random_ops(rng: np.random.Generator):
    """One closure per op family; each returns (loss_fn, params)"""
    a = DiffTensor(rng.normal(size=(3, 4)), requires_grad=True)
    b = DiffTensor(rng.normal(size=(4, 2)), requires_grad=True)
    c = DiffTensor(rng.normal(size=(3, 4)), requires_grad=True)
    pos = DiffTensor(rng.uniform(0.5, 2.0, size=(3, 4)), requires_grad=True)
    return {
        "matmul": (lambda: (a @ b).sum(), [a, b]),
        "add_mul": (lambda: (a * c + a).sum(), [a, c]),
        "div": (lambda: (a / pos).sum(), [a, pos]),
        "sqrt_log": (lambda: (pos.sqrt() + pos.log()).sum(), [pos]),
        "exp_pow": (lambda: (a.exp() + pos**1.5).sum(), [a, pos]),
        "mean": (lambda: (a * a).mean(axis=0).sum(), [a]),
        "concat": (lambda: (concat([a, c], axis=-1) ** 2).sum(), [a, c]),
        "stack": (lambda: (stack([a, c], axis=0) ** 3).sum(), [a, c]),
        "slice": (lambda: (a[1:, ::2] ** 2).sum(), [a]),
        "silu": (lambda: a.silu().sum(), [a]),
        "softplus": (lambda: a.softplus().sum(), [a]),
        "tanh_sigmoid": (lambda: (a.tanh() * c.sigmoid()).sum(), [a, c]),
        "softmax": (lambda: (a.softmax(axis=-1) * c).sum(), [a, c]),
        "norm": (lambda: (a.norm(axis=-1) ** 2 + c.norm(axis=0)).sum(), [a, c]),
        "lgamma_digamma": (lambda: (pos.lgamma() + pos.digamma()).sum(), [pos]),
        "reshape_transpose": (lambda: (a.reshape(4, 3).transpose(1, 0) * c).sum(), [a, c]),
    }


class GradientOracleTest(TestCase):
    """Analytic gradients against central finite differences (h = 1e-5)"""

    def test_every_op_family(self):
        for seed in range(100):
            rng = np.random.default_rng(seed)
            for name, (fn, params) in _random_ops(rng).items():
                with self.subTest(op=name, seed=seed):
                    self.assertLess(gradcheck(fn, params, h=1e-5), 1e-5)

    def test_finite_gradients(self):
        rng = np.random.default_rng(11)
        for name, (fn, params) in _random_ops(rng).items():
            for p in params:
                p.zero_grad()
            fn().backward()
            for p in params:
                self.assertTrue(np.all(np.isfinite(p.grad)), name)
