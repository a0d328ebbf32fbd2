import numpy as np
import pytest
from fractions import Fraction
from hypothesis import given, settings, strategies as st

from lqdmp import (DimensionMismatch, LinearAffineSystem, NotControllable,
                   RNotSPD, controllability_info, double_integrator, validate)


def test_double_integrator_1d_valid():
    sys = LinearAffineSystem([[0, 1], [0, 0]], [0, 1], [0, 0], [[1]])
    assert validate(sys) is sys
    assert sys.n == 2 and sys.m == 1


def test_uncontrollable_pair_reports_rank():
    sys = LinearAffineSystem(np.zeros((2, 2)), [1, 0])
    with pytest.raises(NotControllable) as exc:
        validate(sys)
    assert exc.value.rank == 1 and exc.value.n == 2


def test_indefinite_weight_reports_eigenvalue():
    sys = LinearAffineSystem(np.zeros((2, 2)), np.eye(2), R=[[1, 0], [0, -1]])
    with pytest.raises(RNotSPD) as exc:
        validate(sys)
    assert exc.value.eigenvalue == pytest.approx(-1.0)


def test_asymmetric_weight_rejected():
    sys = LinearAffineSystem(np.zeros((2, 2)), np.eye(2), R=[[1, 0.5], [0, 1]])
    with pytest.raises(RNotSPD):
        validate(sys)


@pytest.mark.parametrize("kwargs", [
    dict(A=np.zeros((2, 3)), B=np.ones((2, 1))),
    dict(A=np.zeros((2, 2)), B=np.ones((3, 1))),
    dict(A=np.zeros((2, 2)), B=np.ones((2, 1)), c=[1, 2, 3]),
    dict(A=np.zeros((2, 2)), B=np.ones((2, 1)), R=np.eye(2)),
    dict(A=[[np.nan, 0], [0, 0]], B=np.ones((2, 1))),
])
def test_shape_errors(kwargs):
    with pytest.raises(DimensionMismatch):
        LinearAffineSystem(**kwargs)


def test_arrays_are_read_only():
    sys = double_integrator(1)
    with pytest.raises(ValueError):
        sys.A[0, 0] = 1.0


def test_info_1d_double_integrator():
    info = controllability_info(double_integrator(1))
    assert info.indices == (2,)
    assert info.exponents == (0, 1)
    assert (info.nu, info.D, info.Dtilde) == (2, 4, Fraction(3))


def test_info_2d_double_integrator():
    info = controllability_info(double_integrator(2))
    assert info.indices == (2, 2)
    assert info.exponents == (0, 0, 1, 1)
    assert (info.nu, info.D, info.Dtilde) == (2, 8, Fraction(6))


@pytest.mark.parametrize("n", [1, 3, 5])
def test_info_fully_actuated(n):
    info = controllability_info(LinearAffineSystem(np.zeros((n, n)), np.eye(n)))
    assert info.indices == (1,) * n
    assert info.exponents == (0,) * n
    assert info.nu == 1 and info.D == n


def test_info_chain_of_integrators():
    # x''' = u: one input, index 3
    A = np.diag([1.0, 1.0], k=1)
    info = controllability_info(LinearAffineSystem(A, [0, 0, 1]))
    assert info.indices == (3,) and info.D == 9 and info.Dtilde == 6


def test_roundtrip_dict():
    sys = double_integrator(2, r=0.5, c=[0, 0, 0.1, -0.2])
    back = LinearAffineSystem.from_dict(sys.to_dict())
    for name in 'ABcR':
        np.testing.assert_array_equal(getattr(sys, name), getattr(back, name))
    assert back.digest() == sys.digest()


def test_from_dict_missing_field():
    with pytest.raises(DimensionMismatch):
        LinearAffineSystem.from_dict({'A': [[0]]})


def test_digest_changes_with_data():
    assert double_integrator(2).digest() != double_integrator(2, r=2.0).digest()


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_column_permutation_invariance(seed):
    rng = np.random.default_rng(seed)
    n, m = rng.integers(2, 6), rng.integers(1, 4)
    A = rng.normal(size=(n, n))
    B = rng.normal(size=(n, m))
    sys = LinearAffineSystem(A, B)
    info = controllability_info(sys)
    perm = rng.permutation(m)
    info2 = controllability_info(LinearAffineSystem(A, B[:, perm]))
    assert sorted(info.indices) == sorted(info2.indices)
    assert (info.nu, info.D) == (info2.nu, info2.D)
    assert sum(info.indices) == n
    assert list(info.exponents) == sorted(info.exponents)
    assert info.exponents[-1] == info.nu - 1
