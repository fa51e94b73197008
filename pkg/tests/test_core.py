import math

import numpy as np
import pytest

from egsolve.core import (
    ConvergenceFailure,
    DimensionMismatch,
    EmptyTrace,
    MonotoneClass,
    MonotonicityParams,
    NonFiniteEvaluation,
    OperatorInstance,
    SmoothnessParams,
    SolveConfig,
    SolveTrace,
    TraceRow,
    finite_diff_jacobian,
    norm,
    spectral_norm,
    vec,
)


class TestVec:
    def test_freezes_and_casts(self):
        v = vec([1, 2, 3])
        assert v.dtype == np.float64
        assert not v.flags.writeable
        with pytest.raises(ValueError):
            v[0] = 5.0

    def test_dimension_check(self):
        with pytest.raises(DimensionMismatch):
            vec([1.0, 2.0], dim=3)

    def test_nonfinite_rejected(self):
        with pytest.raises(NonFiniteEvaluation):
            vec([1.0, math.nan])
        with pytest.raises(NonFiniteEvaluation):
            vec([math.inf, 0.0])

    def test_norm(self):
        assert norm([3.0, 4.0]) == 5.0


class TestSpectralNorm:
    def test_scalar(self):
        assert spectral_norm([[-3.0]]) == 3.0

    def test_2x2_closed_form_matches_svd(self):
        rng = np.random.default_rng(5)
        for _ in range(100):
            M = rng.standard_normal((2, 2))
            assert spectral_norm(M) == pytest.approx(np.linalg.norm(M, 2), abs=1e-12)

    def test_rotation_like(self):
        M = np.array([[1.0, 1.0], [-1.0, 1.0]])
        assert spectral_norm(M) == pytest.approx(math.sqrt(2.0), abs=1e-14)

    def test_power_iteration_matches_svd(self):
        rng = np.random.default_rng(0)
        for n in (3, 5, 8):
            M = rng.standard_normal((n, n))
            assert spectral_norm(M) == pytest.approx(np.linalg.norm(M, 2), rel=1e-7)

    def test_power_iteration_deterministic(self):
        M = np.random.default_rng(3).standard_normal((6, 6))
        assert spectral_norm(M) == spectral_norm(M)

    def test_zero_matrix(self):
        assert spectral_norm(np.zeros((4, 4))) == 0.0

    def test_nonconvergence_raises(self):
        M = np.random.default_rng(1).standard_normal((5, 5))
        with pytest.raises(ConvergenceFailure):
            spectral_norm(M, max_iter=1, tol=1e-30)

    def test_rejects_nonmatrix(self):
        with pytest.raises(DimensionMismatch):
            spectral_norm(np.ones(3))
        with pytest.raises(NonFiniteEvaluation):
            spectral_norm(np.array([[math.nan, 0.0], [0.0, 1.0]]))


class TestFiniteDiffJacobian:
    def test_quadratic_field_exact_to_roundoff(self):
        def fn(x):
            return np.array([x[0] * x[0] + x[1], x[1] * x[1] - x[0]])

        x = np.array([1.5, -0.5])
        J = finite_diff_jacobian(fn, x)
        exact = np.array([[3.0, 1.0], [-1.0, -1.0]])
        assert np.allclose(J, exact, atol=1e-9)

    def test_nonfinite_propagates(self):
        def fn(x):
            with np.errstate(divide="ignore"):
                return np.array([1.0 / x[0]])

        with pytest.raises(NonFiniteEvaluation):
            finite_diff_jacobian(fn, np.array([0.0]), h=0.0)


class TestParams:
    def test_smoothness_validation(self):
        s = SmoothnessParams(0.5, 1.0, 2.0)
        assert (s.alpha, s.L0, s.L1) == (0.5, 1.0, 2.0)
        with pytest.raises(Exception):
            SmoothnessParams(0.0, 1.0, 1.0)
        with pytest.raises(Exception):
            SmoothnessParams(1.5, 1.0, 1.0)
        with pytest.raises(ValueError):
            SmoothnessParams(1.0, -1.0, 1.0)
        with pytest.raises(ValueError):
            SmoothnessParams(1.0, 1.0, -0.5)

    def test_monotonicity_validation(self):
        MonotonicityParams(MonotoneClass.STRONGLY_MONOTONE, mu=2.0)
        MonotonicityParams(MonotoneClass.WEAK_MINTY, rho=0.1)
        with pytest.raises(ValueError):
            MonotonicityParams(MonotoneClass.STRONGLY_MONOTONE, mu=0.0)
        with pytest.raises(ValueError):
            MonotonicityParams(MonotoneClass.MONOTONE, mu=1.0)
        with pytest.raises(ValueError):
            MonotonicityParams(MonotoneClass.MONOTONE, rho=0.3)
        with pytest.raises(ValueError):
            MonotonicityParams(MonotoneClass.WEAK_MINTY, rho=-0.1)


class TestOperatorInstance:
    def _op(self, solution=None):
        return OperatorInstance(
            dim=2,
            fn=lambda x: np.array([x[0] + x[1], x[1] - x[0]]),
            solution=solution,
            label="toy",
        )

    def test_root_declaration_checked(self):
        self._op(solution=[0.0, 0.0])
        with pytest.raises(ValueError):
            self._op(solution=[1.0, 0.0])

    def test_call_validates_output_dim(self):
        op = OperatorInstance(dim=2, fn=lambda x: np.array([x[0]]), label="bad")
        with pytest.raises(DimensionMismatch):
            op(np.zeros(2))

    def test_jacobian_fallback_is_finite_difference(self):
        op = self._op()
        J = op.jacobian_at(np.array([0.3, -0.7]))
        assert np.allclose(J, [[1.0, 1.0], [-1.0, 1.0]], atol=1e-9)


class TestSolveStructures:
    def test_config_validation(self):
        with pytest.raises(ValueError):
            SolveConfig(max_iters=0, x0=[1.0])
        with pytest.raises(ValueError):
            SolveConfig(max_iters=5, x0=[1.0], stop_tol=-1.0)
        cfg = SolveConfig(max_iters=5, x0=[1.0, 2.0], stop_tol=0.0)
        assert not cfg.x0.flags.writeable

    def test_recomputed_minima(self):
        tr = SolveTrace()
        with pytest.raises(EmptyTrace):
            tr.recomputed_minima()
        tr.rows = [
            TraceRow(k=0, x_k=None, xhat_k=None, gamma_k=0.1, omega_k=0.1,
                     norm_F_x=2.0, norm_F_xhat=1.5),
            TraceRow(k=1, x_k=None, xhat_k=None, gamma_k=0.1, omega_k=0.1,
                     norm_F_x=0.5, norm_F_xhat=0.7),
        ]
        assert tr.recomputed_minima() == (0.5, 0.7)
