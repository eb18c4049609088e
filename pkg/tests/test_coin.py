import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from qwplane.coin import (BASIS, BiasParams, CoinMode, InitialCoinSpec, StateVariant, build_coin,
                          build_initial_state, coin_to_csv, split_projectors, unitarity_certificate)
from qwplane.errors import ParameterError

probs = st.floats(min_value=1e-6, max_value=1 - 1e-6)


def test_basis_order():
    assert BASIS == ("R", "L", "U", "D")


@pytest.mark.parametrize("p", np.round(np.arange(0.05, 0.951, 0.05), 2))
def test_corrected_coin_is_unitary_on_the_standard_grid(p):
    C = build_coin(float(p))
    assert C.is_unitary
    assert unitarity_certificate(C) < 1e-12


def test_balanced_coin_is_hadamard_squared():
    C = build_coin(0.5)
    h = np.array([[1, 1], [1, -1]]) / math.sqrt(2)
    assert np.allclose(C.entries, np.kron(h, h), atol=1e-15)
    assert np.allclose(np.abs(C.entries), 0.5, atol=1e-15)


@given(probs)
def test_coin_is_kron_of_biased_hadamards(p):
    h = np.array([[math.sqrt(p), math.sqrt(1 - p)], [math.sqrt(1 - p), -math.sqrt(p)]])
    C = build_coin(p)
    assert np.allclose(C.entries, np.kron(h, h), atol=1e-14)
    assert unitarity_certificate(C) < 1e-12
    assert np.allclose(C.entries, C.entries.T)


@given(probs)
def test_as_printed_defect_closed_form(p):
    # only the bottom-right sign differs; rows 1-3 lose orthogonality to row 4
    C = build_coin(p, CoinMode.AS_PRINTED)
    q = 1 - p
    expected = max(2 * p * q, 2 * p * math.sqrt(p * q))
    assert C.defect == pytest.approx(expected, abs=1e-12)
    assert not C.is_unitary


def test_as_printed_defect_at_half():
    assert build_coin(0.5, "as-printed").defect == pytest.approx(0.5, abs=1e-12)


def test_entries_are_read_only():
    C = build_coin(0.3)
    with pytest.raises(ValueError):
        C.entries[0, 0] = 1.0


def test_build_coin_accepts_params_or_float():
    assert np.array_equal(build_coin(BiasParams(0.3, 2)).entries, build_coin(0.3).entries)


@pytest.mark.parametrize("p", [0.0, 1.0, -0.1, 1.5, float("nan")])
def test_bias_params_rejects_p_outside_open_interval(p):
    with pytest.raises(ParameterError):
        BiasParams(p, 1)
    with pytest.raises(ParameterError):
        build_coin(p)


@pytest.mark.parametrize("r", [0, -1, 1.5])
def test_bias_params_rejects_bad_r(r):
    with pytest.raises(ParameterError):
        BiasParams(0.5, r)


def test_bias_params_normalizes_integral_float_r():
    assert BiasParams(0.5, 2.0).r == 2
    assert isinstance(BiasParams(0.5, 2.0).r, int)


@given(probs)
def test_projectors_partition_the_coin(p):
    C = build_coin(p)
    proj = split_projectors(C)
    assert np.array_equal(proj.total(), C.entries)
    for i, m in enumerate(proj.as_tuple()):
        assert np.array_equal(m[i], C.entries[i])
        assert not np.any(np.delete(m, i, axis=0))


@given(st.floats(min_value=0.0, max_value=1.0), st.floats(min_value=0.0, max_value=2 * math.pi - 1e-9),
       st.sampled_from(list(StateVariant)))
def test_initial_state_is_normalized(a, phi, variant):
    psi = build_initial_state(InitialCoinSpec(a, phi, variant))
    assert np.vdot(psi, psi).real == pytest.approx(1.0, abs=1e-14)


@given(st.floats(min_value=0.0, max_value=1.0), st.floats(min_value=0.0, max_value=2 * math.pi - 1e-9))
def test_tensor_product_variant_factorizes(a, phi):
    psi = build_initial_state(InitialCoinSpec(a, phi, StateVariant.TENSOR_PRODUCT))
    one = np.array([math.sqrt(a), math.sqrt(1 - a) * np.exp(1j * phi)])
    assert np.allclose(psi, np.kron(one, one), atol=1e-14)


def test_default_initial_state_is_chirality_r():
    assert np.array_equal(build_initial_state(InitialCoinSpec()), np.array([1, 0, 0, 0], dtype=complex))


def test_variants_differ_only_in_last_phase():
    a, phi = 0.25, math.pi / 2
    v1 = build_initial_state(InitialCoinSpec(a, phi, "as-printed"))
    v2 = build_initial_state(InitialCoinSpec(a, phi, "tensor-product"))
    assert np.allclose(v1[:3], v2[:3])
    assert v1[3] == pytest.approx(0.75j)
    assert v2[3] == pytest.approx(-0.75)


@pytest.mark.parametrize("a,phi", [(-0.1, 0.0), (1.1, 0.0), (0.5, -0.1), (0.5, 2 * math.pi)])
def test_initial_spec_validation(a, phi):
    with pytest.raises(ParameterError):
        InitialCoinSpec(a, phi)


def test_coin_csv_round_trips_exactly():
    C = build_coin(0.3)
    text = coin_to_csv(C)
    lines = text.strip().splitlines()
    assert len(lines) == 4
    back = np.array([[float(v) for v in ln.split(",")] for ln in lines])
    assert np.array_equal(back, C.entries)
