import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qwplane.coin import BiasParams, InitialCoinSpec, build_coin, build_initial_state
from qwplane.errors import NonUnitaryError, NormalizationError, ParameterError
from qwplane.evolution import (AmplitudeField, ProbabilityField, evolve, mean_position, new_localized, peak_positions,
                               probabilities, probability_at, probability_csv, step, total_probability)

R_STATE = (1, 0, 0, 0)
MOVES = {0: (1, 0), 1: (-1, 0), 2: (0, 1), 3: (0, -1)}  # unit jumps; R and U scale with r


def brute_force(params, C, psi0, t):
    """Sum over all chirality paths of length t (tiny t only)."""
    out = {}
    m = C.entries
    for path in itertools.product(range(4), repeat=t):
        amp = m[path[0]] @ psi0
        x = y = 0
        for n, c in enumerate(path):
            if n > 0:
                amp = m[c, path[n - 1]] * amp
            dx, dy = MOVES[c]
            x += dx * (params.r if c == 0 else 1)
            y += dy * (params.r if c == 2 else 1)
        key = (x, y, path[-1])
        out[key] = out.get(key, 0.0) + amp
    return out


def test_t0_field():
    f = new_localized(BiasParams(0.5, 1), R_STATE)
    assert f.t == 0 and f.shape == (1, 1)
    assert probability_at(f, 0, 0) == 1.0


def test_one_step_hadamard_puts_a_quarter_on_each_neighbour(hadamard):
    params, C = hadamard
    f = step(new_localized(params, R_STATE), C)
    for x, y in [(1, 0), (-1, 0), (0, 1), (0, -1)]:
        assert probability_at(f, x, y) == pytest.approx(0.25, abs=1e-15)
    assert probability_at(f, 0, 0) == 0.0
    assert probability_at(f, 1, 1) == 0.0


@pytest.mark.parametrize("r", [1, 2, 3])
def test_one_step_long_jumps(r):
    params = BiasParams(0.3, r)
    f = step(new_localized(params, R_STATE), build_coin(params))
    col = build_coin(params).entries[:, 0] ** 2
    assert probability_at(f, r, 0) == pytest.approx(col[0])
    assert probability_at(f, -1, 0) == pytest.approx(col[1])
    assert probability_at(f, 0, r) == pytest.approx(col[2])
    assert probability_at(f, 0, -1) == pytest.approx(col[3])


@pytest.mark.parametrize("p,r,t", [(0.5, 1, 3), (0.3, 2, 3), (0.8, 3, 4)])
def test_matches_path_sum(p, r, t):
    params = BiasParams(p, r)
    C = build_coin(params)
    psi0 = build_initial_state(InitialCoinSpec(0.3, 1.0))
    f = evolve(new_localized(params, psi0), C, t)
    paths = brute_force(params, C, psi0, t)
    got = np.zeros_like(f.amps)
    for (x, y, c), amp in paths.items():
        got[c, x - f.x_min, y - f.y_min] += amp
    assert np.max(np.abs(got - f.amps)) < 1e-14


@pytest.mark.parametrize("r,t", [(1, 5), (2, 7), (3, 4)])
def test_window_grows_by_r_and_one(r, t):
    f = evolve(new_localized(BiasParams(0.5, r), R_STATE), build_coin(0.5), t)
    assert (f.x_min, f.x_max, f.y_min, f.y_max) == (-t, r * t, -t, r * t)
    assert f.t == t


@settings(max_examples=25, deadline=None)
@given(st.floats(0.01, 0.99), st.integers(1, 3), st.floats(0, 1), st.floats(0, 6.28), st.integers(1, 40))
def test_probability_is_conserved(p, r, a, phi, t):
    params = BiasParams(p, r)
    f = evolve(new_localized(params, build_initial_state(InitialCoinSpec(a, phi))), build_coin(params), t)
    assert abs(total_probability(f) - 1.0) < 1e-12


def test_non_unitary_coin_is_refused():
    params = BiasParams(0.5, 1)
    C = build_coin(params, "as-printed")
    with pytest.raises(NonUnitaryError):
        step(new_localized(params, R_STATE), C)
    with pytest.raises(NonUnitaryError):
        evolve(new_localized(params, R_STATE), C, 3)


def test_forced_as_printed_coin_leaks_probability():
    # the R column alone still has unit norm; a state touching D exposes the defect
    params = BiasParams(0.5, 1)
    C = build_coin(params, "as-printed")
    assert total_probability(step(new_localized(params, R_STATE), C, force=True)) == pytest.approx(1.0)
    psi = np.array([1, 0, 0, 1]) / math.sqrt(2)
    assert total_probability(step(new_localized(params, psi), C, force=True)) == pytest.approx(0.5, abs=1e-14)


def test_unnormalized_state_is_rejected():
    with pytest.raises(NormalizationError):
        new_localized(BiasParams(0.5, 1), (1, 1, 0, 0))


def test_negative_steps_rejected(hadamard):
    params, C = hadamard
    with pytest.raises(ParameterError):
        evolve(new_localized(params, R_STATE), C, -1)


def test_callback_sees_every_step(hadamard):
    params, C = hadamard
    seen = []
    evolve(new_localized(params, R_STATE), C, 5, callback=lambda f: seen.append(f.t))
    assert seen == [1, 2, 3, 4, 5]


def test_mean_position_after_one_step_vanishes(hadamard):
    params, C = hadamard
    f = step(new_localized(params, R_STATE), C)
    mx, my = mean_position(f)
    assert abs(mx) < 1e-15 and abs(my) < 1e-15
    assert mean_position(new_localized(params, R_STATE)) == (0.0, 0.0)


@pytest.mark.parametrize("r", [1, 2, 3])
def test_return_only_at_multiples_of_r_plus_one(r):
    params = BiasParams(0.4, r)
    bad = []
    evolve(new_localized(params, build_initial_state(InitialCoinSpec(0.5, 1.0))), build_coin(params), 60,
           callback=lambda f: bad.append(probability_at(f, 0, 0)) if f.t % (r + 1) else None)
    assert max(bad) < 1e-14


def _pf(P, x_min=0, y_min=0):
    return ProbabilityField(prob=np.asarray(P, dtype=float), x_min=x_min, y_min=y_min, t=0)


def test_peaks_threshold_and_isolated_maxima():
    P = np.zeros((7, 7))
    P[1, 1] = 1.0
    P[5, 5] = 0.6
    P[1, 5] = 0.4
    peaks = peak_positions(_pf(P, -3, -3), 0.5)
    assert peaks == [(-2, -2, 1.0), (2, 2, 0.6)]
    assert len(peak_positions(_pf(P), 0.3)) == 3


def test_peaks_plateau_collapses_to_smallest_coordinate():
    P = np.zeros((5, 5))
    P[2, 2] = P[2, 3] = P[3, 2] = 1.0
    assert peak_positions(_pf(P)) == [(2, 2, 1.0)]


def test_peaks_adjacent_maxima_form_one_cluster():
    P = np.zeros((6, 6))
    P[1, 1] = P[1, 2] = 0.8
    P[4, 4] = 1.0
    assert peak_positions(_pf(P)) == [(1, 1, 0.8), (4, 4, 1.0)]


def test_peaks_bad_threshold():
    with pytest.raises(ParameterError):
        peak_positions(_pf(np.ones((2, 2))), 0.0)


def test_peaks_on_empty_field():
    assert peak_positions(_pf(np.zeros((3, 3)))) == []


def test_peaks_of_hadamard_walk_are_sorted_and_above_threshold(hadamard):
    params, C = hadamard
    prob = probabilities(evolve(new_localized(params, R_STATE), C, 60))
    peaks = peak_positions(prob)
    assert peaks == sorted(peaks)
    assert all(pv >= 0.5 * prob.prob.max() for _, _, pv in peaks)
    assert max(pv for _, _, pv in peaks) == prob.prob.max()


def test_probability_csv_t0():
    f = new_localized(BiasParams(0.5, 1), R_STATE)
    assert probability_csv(probabilities(f)) == "x,y,p\n0,0,1\n"


def test_probability_csv_respects_floor(hadamard):
    params, C = hadamard
    f = evolve(new_localized(params, R_STATE), C, 4)
    text = probability_csv(probabilities(f), export_floor=0.01)
    rows = [ln.split(",") for ln in text.strip().splitlines()[1:]]
    assert rows and all(float(r[2]) > 0.01 for r in rows)
    full = probability_csv(probabilities(f))
    assert sum(float(ln.split(",")[2]) for ln in full.strip().splitlines()[1:]) == pytest.approx(1.0)


def test_probabilities_floor_zeroes_denormals():
    amps = np.zeros((4, 2, 1), dtype=complex)
    amps[0, 0, 0] = 1.0
    amps[1, 1, 0] = 1e-160
    f = AmplitudeField(amps=amps, x_min=0, y_min=0, t=0, params=BiasParams(0.5, 1))
    assert probabilities(f).prob.tolist() == [[1.0], [0.0]]
