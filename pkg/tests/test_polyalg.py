import math

import numpy as np
import pytest

from ergobound.polyalg import (
    Polynomial,
    PolySystem,
    affine_rescale,
    gradient,
    grlex_key,
    lie_derivative,
    lorenz_system,
    monomial_basis,
)


def poly(d, terms):
    return Polynomial(d, terms)


class TestArithmetic:
    def test_add_cancellation(self):
        a = poly(2, {(2, 0): 1.0, (0, 1): 1.0})
        b = poly(2, {(2, 0): -1.0})
        assert (a + b).terms == {(0, 1): 1.0}

    def test_add_identity(self):
        p = poly(2, {(1, 1): 2.5, (0, 0): -1.0})
        assert (p + Polynomial.zero(2)).terms == p.terms

    def test_add_direct(self):
        x = Polynomial.variable(2, 0)
        y = Polynomial.variable(2, 1)
        assert ((x + y) + (x - y)).terms == {(1, 0): 2.0}

    def test_mul_difference_of_squares(self):
        x = Polynomial.variable(2, 0)
        y = Polynomial.variable(2, 1)
        assert ((x + y) * (x - y)).terms == {(2, 0): 1.0, (0, 2): -1.0}

    def test_mul_identity(self):
        p = poly(2, {(1, 1): 3.0, (2, 0): -0.5})
        one = Polynomial.constant(2, 1.0)
        assert (p * one).terms == p.terms

    def test_square_binomial(self):
        x1 = Polynomial.variable(1, 0) + 1.0
        assert (x1 ** 2).terms == {(2,): 1.0, (1,): 2.0, (0,): 1.0}

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError, match="dimension mismatch"):
            Polynomial.variable(2, 0) + Polynomial.variable(3, 0)
        with pytest.raises(ValueError, match="dimension mismatch"):
            Polynomial.variable(2, 0) * Polynomial.variable(3, 0)


class TestEvaluation:
    def test_monomial_value(self):
        z4 = Polynomial.monomial((0, 0, 4))
        assert z4.evaluate([0.0, 0.0, 2.0]) == 16.0

    def test_constant_at_origin(self):
        p = poly(3, {(0, 0, 0): 7.5, (1, 0, 0): 3.0, (0, 2, 1): -1.0})
        assert p.evaluate(np.zeros(3)) == 7.5

    def test_equilibrium_residual(self):
        # nonzero Lorenz equilibria satisfy x = y = sqrt(beta*(r-1)), z = r-1,
        # which zeroes the third component x*y - beta*z
        beta = 8.0 / 3.0
        w = math.sqrt(beta * 27.0)
        assert w == pytest.approx(8.48528137423857, abs=1e-14)
        f3 = poly(3, {(1, 1, 0): 1.0, (0, 0, 1): -beta})
        assert abs(f3.evaluate([w, w, 27.0])) < 1e-12

    def test_eval_many_matches_scalar(self):
        rng = np.random.default_rng(3)
        p = poly(3, {tuple(rng.integers(0, 4, 3)): rng.normal() for _ in range(12)})
        pts = rng.normal(size=(40, 3))
        many = p.evaluate_many(pts)
        for i in range(40):
            assert many[i] == pytest.approx(p.evaluate(pts[i]), rel=1e-13, abs=1e-13)

    def test_nonfinite_point_rejected(self):
        p = Polynomial.variable(2, 0)
        with pytest.raises(ValueError, match="non-finite"):
            p.evaluate([np.nan, 0.0])

    def test_product_evaluation_consistency(self):
        # eval(p*q, x) == eval(p, x) * eval(q, x) to relative 1e-12
        rng = np.random.default_rng(11)
        for _ in range(30):
            p = poly(3, {tuple(rng.integers(0, 3, 3)): rng.uniform(-1, 1)
                         for _ in range(8)})
            q = poly(3, {tuple(rng.integers(0, 3, 3)): rng.uniform(-1, 1)
                         for _ in range(8)})
            x = rng.uniform(-1.5, 1.5, 3)
            lhs = (p * q).evaluate(x)
            rhs = p.evaluate(x) * q.evaluate(x)
            assert abs(lhs - rhs) <= 1e-12 * (1.0 + abs(rhs))


class TestCalculus:
    def test_gradient_z4(self):
        z4 = Polynomial.monomial((0, 0, 4))
        gx, gy, gz = gradient(z4)
        assert gx.terms == {} and gy.terms == {}
        assert gz.terms == {(0, 0, 3): 4.0}

    def test_gradient_constant(self):
        g = gradient(Polynomial.constant(3, 5.0))
        assert all(not gi.terms for gi in g)

    def test_gradient_sum_of_squares(self):
        p = poly(2, {(2, 0): 1.0, (0, 2): 1.0})
        gx, gy = gradient(p)
        assert gx.terms == {(1, 0): 2.0}
        assert gy.terms == {(0, 1): 2.0}

    def test_gradient_finite_differences(self):
        rng = np.random.default_rng(5)
        for _ in range(10):
            p = poly(3, {tuple(rng.integers(0, 4, 3)): rng.normal() for _ in range(10)})
            x = rng.uniform(-2, 2, 3)
            grads = gradient(p)
            for i in range(3):
                h = 1e-5 * (1.0 + abs(x[i]))
                xp, xm = x.copy(), x.copy()
                xp[i] += h
                xm[i] -= h
                fd = (p.evaluate(xp) - p.evaluate(xm)) / (2 * h)
                exact = grads[i].evaluate(x)
                assert abs(fd - exact) <= 1e-6 * (1.0 + abs(exact))

    def test_lie_derivative_z(self, lorenz):
        # V = z gives dz/dt = x*y - beta*z
        ld = lie_derivative(lorenz, Polynomial.variable(3, 2))
        assert ld.terms == {(1, 1, 0): 1.0, (0, 0, 1): -8.0 / 3.0}

    def test_lie_derivative_constant(self, lorenz):
        assert lie_derivative(lorenz, Polynomial.constant(3, 4.0)).terms == {}

    def test_lie_derivative_x_squared(self, lorenz):
        # V = x^2 gives 2*sigma*(x*y - x^2)
        ld = lie_derivative(lorenz, Polynomial.monomial((2, 0, 0)))
        assert ld.terms == {(1, 1, 0): 20.0, (2, 0, 0): -20.0}

    def test_lie_vanishes_at_equilibria(self, lorenz):
        from ergobound.dynamics import lorenz_equilibria
        rng = np.random.default_rng(9)
        v = poly(3, {tuple(rng.integers(0, 3, 3)): rng.normal() for _ in range(10)})
        ld = lie_derivative(lorenz, v)
        for eq in lorenz_equilibria():
            assert abs(ld.evaluate(eq)) < 1e-10 * (1.0 + ld.infnorm())

    def test_lie_dimension_mismatch(self, lorenz):
        with pytest.raises(ValueError, match="dimension mismatch"):
            lie_derivative(lorenz, Polynomial.variable(2, 0))


class TestMonomialBasis:
    def test_counts_match_binomial(self):
        for d in range(1, 5):
            for deg in range(0, 11):
                expected = math.comb(d + deg, d)
                assert len(monomial_basis(d, deg)) == expected

    def test_d3_examples(self):
        assert len(monomial_basis(3, 2)) == 10
        assert monomial_basis(3, 0) == [(0, 0, 0)]
        assert len(monomial_basis(3, 3)) == 20

    def test_strictly_ordered_no_duplicates(self):
        for d in (1, 2, 3, 4):
            basis = monomial_basis(d, 6)
            keys = [grlex_key(m) for m in basis]
            assert keys == sorted(keys)
            assert len(set(basis)) == len(basis)

    def test_grlex_order_head(self):
        basis = monomial_basis(3, 2)
        assert basis[:4] == [(0, 0, 0), (1, 0, 0), (0, 1, 0), (0, 0, 1)]


class TestAffineRescale:
    def test_identity(self):
        p = poly(3, {(1, 2, 0): 2.0, (0, 0, 3): -1.0})
        q = affine_rescale(p, [1, 1, 1], [0, 0, 0])
        assert q.terms == p.terms

    def test_pure_scaling_z4(self):
        z4 = Polynomial.monomial((0, 0, 4))
        q = affine_rescale(z4, [1.0, 1.0, 2.0])
        assert q.terms == {(0, 0, 4): 16.0}

    def test_shift(self):
        x = Polynomial.variable(3, 0)
        q = affine_rescale(x, [1, 1, 1], [1.0, 0.0, 0.0])
        assert q.terms == {(1, 0, 0): 1.0, (0, 0, 0): 1.0}

    def test_round_trip(self):
        rng = np.random.default_rng(17)
        p = poly(3, {tuple(rng.integers(0, 4, 3)): rng.normal() for _ in range(12)})
        scales = [2.0, 0.5, 3.0]
        shifts = [1.0, -2.0, 0.25]
        q = affine_rescale(p, scales, shifts)
        back = affine_rescale(q, [1 / s for s in scales],
                              [-t / s for s, t in zip(scales, shifts)])
        for mono, coeff in p.terms.items():
            assert back.coefficient(mono) == pytest.approx(coeff, rel=1e-10, abs=1e-12)

    def test_nonpositive_scale_rejected(self):
        with pytest.raises(ValueError, match="positive"):
            affine_rescale(Polynomial.variable(2, 0), [1.0, -1.0])


class TestTextForm:
    def test_round_trip_bit_exact(self):
        rng = np.random.default_rng(23)
        p = poly(3, {tuple(rng.integers(0, 5, 3)): rng.normal() * 10.0 ** rng.integers(-8, 8)
                     for _ in range(15)})
        q = Polynomial.from_text(p.to_text())
        assert q.dimension == p.dimension
        assert q.terms == p.terms

    def test_header_required(self):
        with pytest.raises(ValueError, match="dim"):
            Polynomial.from_text("1.0 0 0\n")

    def test_bad_term_line(self):
        with pytest.raises(ValueError, match="bad term"):
            Polynomial.from_text("dim 2\n1.0 0\n")


class TestPolySystem:
    def test_lorenz_components(self, lorenz):
        assert lorenz.dimension == 3
        assert lorenz.components[0].terms == {(0, 1, 0): 10.0, (1, 0, 0): -10.0}
        assert lorenz.components[1].terms == {(1, 0, 0): 28.0, (1, 0, 1): -1.0,
                                              (0, 1, 0): -1.0}
        assert lorenz.components[2].terms == {(1, 1, 0): 1.0, (0, 0, 1): -8.0 / 3.0}

    def test_component_count_checked(self):
        with pytest.raises(ValueError, match="component count"):
            PolySystem(2, (Polynomial.variable(2, 0),))

    def test_callable_evaluates_field(self, lorenz):
        val = lorenz([1.0, 2.0, 3.0])
        assert val == pytest.approx([10.0, 23.0, -6.0])

    def test_rescaled_matches_substitution(self, lorenz):
        scaled = lorenz.rescaled([10.0, 10.0, 30.0])
        u = np.array([0.3, -0.2, 0.9])
        x = u * np.array([10.0, 10.0, 30.0])
        expected = lorenz(x) / np.array([10.0, 10.0, 30.0])
        assert scaled(u) == pytest.approx(expected, rel=1e-13)
