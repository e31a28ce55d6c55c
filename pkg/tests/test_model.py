import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from delaymem.errors import (
    DimensionMismatch,
    GridError,
    HorizonTooShort,
    KernelDomainTooShort,
    NegativeDelay,
    OutOfDomain,
    ParseError,
)
from delaymem.model import (
    Grid,
    HistoryFunction,
    MatrixKernel,
    SystemSpec,
    compatible_steps,
    eval_history,
    eval_kernel,
    load_spec,
    make_grid,
    save_spec,
    validate,
)

from conftest import scalar_spec

I2 = np.eye(2)


def test_scalar_integrator_is_valid():
    spec = scalar_spec()
    assert validate(spec) is spec
    assert (spec.n, spec.m) == (1, 1)
    assert spec.target_kernel is spec.kernel


def test_horizon_shorter_than_delay():
    with pytest.raises(HorizonTooShort):
        scalar_spec(h=0.5, T=0.3)
    with pytest.raises(HorizonTooShort):
        scalar_spec(h=0.5, T=0.5)


def test_negative_delay():
    with pytest.raises(NegativeDelay):
        scalar_spec(h=-0.1)


def test_dimension_mismatch_b_rows():
    with pytest.raises(DimensionMismatch):
        validate(SystemSpec(A=I2, A1=np.zeros((2, 2)), B=[[1.0]], h=0, T=1,
                            kernel=MatrixKernel.zero(2), history=HistoryFunction.zero(2)))


@pytest.mark.parametrize("bad", ["A1", "kernel", "history"])
def test_dimension_mismatch_other_fields(bad):
    fields = dict(A=I2, A1=np.zeros((2, 2)), B=np.ones((2, 1)), h=0, T=1,
                  kernel=MatrixKernel.zero(2), history=HistoryFunction.zero(2))
    fields[bad] = {"A1": np.zeros((3, 3)), "kernel": MatrixKernel.zero(3), "history": HistoryFunction.zero(1)}[bad]
    with pytest.raises(DimensionMismatch):
        validate(SystemSpec(**fields))


def test_sampled_kernel_must_cover_horizon():
    k = MatrixKernel.sampled([0.0, 0.5], [[[1.0]], [[0.0]]])
    with pytest.raises(KernelDomainTooShort):
        scalar_spec(kernel=k)


def test_eval_kernel_examples():
    M0 = np.array([[1.0, 2.0], [3.0, 4.0]])
    const = MatrixKernel.constant(M0)
    for t in (0.0, 0.3, 7.0):
        np.testing.assert_array_equal(eval_kernel(const, t), M0)
    np.testing.assert_array_equal(eval_kernel(MatrixKernel.separable([(1.0, I2)]), 0.0), I2)
    sampled = MatrixKernel.sampled([0.0, 1.0], [np.zeros((2, 2)), I2])
    np.testing.assert_array_equal(eval_kernel(sampled, 0.5), 0.5 * I2)
    np.testing.assert_array_equal(MatrixKernel.zero(2)(3.0), np.zeros((2, 2)))


def test_eval_kernel_out_of_domain():
    sampled = MatrixKernel.sampled([0.0, 1.0], [np.zeros((1, 1)), np.ones((1, 1))])
    with pytest.raises(OutOfDomain):
        eval_kernel(sampled, 1.5)
    with pytest.raises(OutOfDomain):
        eval_kernel(sampled, -0.1)


def test_kernel_table_matches_pointwise():
    k = MatrixKernel.separable([(0.5, I2), (2.0, [[0.0, 1.0], [-1.0, 0.0]])])
    ts = np.linspace(0, 3, 13)
    np.testing.assert_allclose(k.table(ts), np.stack([eval_kernel(k, t) for t in ts]), atol=1e-15)


@given(t=st.floats(0, 5), s=st.floats(0, 5), g=st.floats(0, 3))
def test_single_term_factorization(t, s, g):
    M = np.array([[1.5, -0.25], [0.75, 2.0]])
    k = MatrixKernel.separable([(g, M)])
    np.testing.assert_allclose(eval_kernel(k, t + s), np.exp(-g * s) * eval_kernel(k, t), rtol=0, atol=1e-12)


@given(t=st.floats(0, 0.99), delta=st.sampled_from([1e-3, 1e-5, 1e-8]))
def test_kernel_continuity(t, delta):
    sampled = MatrixKernel.sampled([0.0, 0.3, 1.0], [[[0.0]], [[2.0]], [[-1.0]]])
    sep = MatrixKernel.separable([(3.0, [[1.0]]), (0.0, [[-0.5]])])
    for k in (sampled, sep):
        # slope bounded by 10 on this interval for both kernels
        assert np.max(np.abs(k(t + delta) - k(t))) <= 10 * delta


def test_eval_history_examples():
    np.testing.assert_array_equal(eval_history(HistoryFunction.constant([1.0, 2.0]), -0.25, h=0.5), [1.0, 2.0])
    np.testing.assert_array_equal(eval_history(HistoryFunction.polynomial([[0.0], [1.0]]), -0.5), [-0.5])
    sampled = HistoryFunction.sampled([-1.0, 0.0], [[0.0], [2.0]])
    np.testing.assert_array_equal(eval_history(sampled, -0.5), [1.0])
    np.testing.assert_array_equal(eval_history(sampled, -1.0), [0.0])
    np.testing.assert_array_equal(eval_history(sampled, 0.0), [2.0])


def test_eval_history_out_of_domain():
    with pytest.raises(OutOfDomain):
        eval_history(HistoryFunction.constant([1.0]), -2.0, h=1.0)
    with pytest.raises(OutOfDomain):
        eval_history(HistoryFunction.constant([1.0]), 0.5)
    with pytest.raises(OutOfDomain):
        eval_history(HistoryFunction.sampled([-1.0, 0.0], [[0.0], [2.0]]), -1.5)


def test_grid_divisibility():
    spec = scalar_spec(a1=1.0, h=1.0, T=2.0)
    g = make_grid(spec, 400)
    assert (g.n_history, g.n_horizon) == (200, 400)
    assert g.h == 1.0 and g.T == 2.0
    assert g.times[0] == -1.0 and g.times[-1] == 2.0
    with pytest.raises(GridError):
        make_grid(spec, 401)
    assert compatible_steps(spec, 401) == 402
    with pytest.raises(GridError):
        Grid(0.0, 0, 10)


def test_objects_are_read_only():
    spec = scalar_spec()
    with pytest.raises(ValueError):
        spec.A[0, 0] = 5.0
    with pytest.raises(AttributeError):
        spec.h = 1.0


MINIMAL = """{
  "n": 1, "m": 1, "A": [[0]], "A1": [[0]], "B": [[1]], "h": 0, "T": 1,
  "kernel": {"form": "separable", "terms": []},
  "history": {"form": "constant", "data": [1]}
}"""


def test_load_minimal_document():
    assert load_spec(MINIMAL) == scalar_spec()


def test_missing_field_names_it():
    doc = json.loads(MINIMAL)
    del doc["B"]
    with pytest.raises(ParseError) as err:
        load_spec(json.dumps(doc))
    assert err.value.field == "B"
    assert "'B'" in str(err.value)


def test_syntax_error_reports_line():
    with pytest.raises(ParseError) as err:
        load_spec('{\n  "n": 1,\n  "A": [[0]\n}')
    assert err.value.line == 4


def test_nested_field_diagnostics():
    doc = json.loads(MINIMAL)
    doc["kernel"] = {"form": "separable", "terms": [{"decay": 1.0}]}
    with pytest.raises(ParseError) as err:
        load_spec(json.dumps(doc))
    assert err.value.field == "kernel.terms[0].coefficient"


def test_load_propagates_validation_errors():
    doc = json.loads(MINIMAL)
    doc["h"], doc["T"] = 0.5, 0.3
    with pytest.raises(HorizonTooShort):
        load_spec(json.dumps(doc))


def test_round_trip_all_forms():
    spec = SystemSpec(
        A=[[0.1, 0.2], [0.3, 0.4]], A1=I2, B=[[1.0], [0.0]], h=0.5, T=2.0,
        kernel=MatrixKernel.sampled([0.0, 1.0, 3.0], [I2, 2 * I2, np.zeros((2, 2))]),
        target_kernel=MatrixKernel.separable([(0.7, I2)]),
        history=HistoryFunction.sampled([-0.5, 0.0], [[1.0, 2.0], [3.0, 4.0]]),
    )
    assert load_spec(save_spec(validate(spec))) == spec


finite = st.floats(-1e3, 1e3, allow_nan=False, allow_infinity=False)


@st.composite
def specs(draw):
    n = draw(st.integers(1, 3))
    m = draw(st.integers(1, 3))
    mat = lambda r, c: draw(arrays(float, (r, c), elements=finite))
    h = draw(st.floats(0, 2))
    T = h + draw(st.floats(0.01, 3))
    K = draw(st.integers(0, 2))
    kernel = MatrixKernel.separable([(draw(st.floats(0, 10)), mat(n, n)) for _ in range(K)], n=n)
    form = draw(st.sampled_from(["constant", "polynomial"]))
    if form == "constant":
        phi = HistoryFunction.constant(draw(arrays(float, n, elements=finite)))
    else:
        phi = HistoryFunction.polynomial(mat(draw(st.integers(1, 3)), n))
    target = None if draw(st.booleans()) else MatrixKernel.separable([(1.0, mat(n, n))])
    return validate(SystemSpec(A=mat(n, n), A1=mat(n, n), B=mat(n, m), h=h, T=T, kernel=kernel,
                               history=phi, target_kernel=target))


@settings(max_examples=50, deadline=None)
@given(specs())
def test_save_load_round_trip(spec):
    assert load_spec(save_spec(spec)) == spec
