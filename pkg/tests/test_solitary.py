import math

import numpy as np
import pytest

from wavereg import spectral
from wavereg.errors import ConfigError, ConvergenceError, DegenerateIterateError, InvertibilityError
from wavereg.solitary import (kdv_guess, petviashvili_solve, residual, residual_fields, stabilization_factor,
                              sweep, SolitaryWave)
from wavereg.spectral import make_grid
from wavereg.systems import State, SystemKind, zero_state
from wavereg.timestepper import StepConfig, evolve

GRID = make_grid(-140, 140, 8192)
TABLE1 = [
    (1.1, 0.2153082668048, 0.2082890214947),
    (1.2, 0.4425522140106, 0.414330282965),
    (1.3, 0.68201597861631, 0.61820536441872),
]


@pytest.fixture(scope="module")
def wave115():
    return petviashvili_solve(1.15, GRID, "regularized")


@pytest.fixture(scope="module")
def hp115():
    return petviashvili_solve(1.15, GRID, "hp")


@pytest.mark.parametrize("c,eta0,u0", TABLE1)
def test_table_amplitudes(c, eta0, u0):
    w = petviashvili_solve(c, GRID, "regularized")
    assert abs(w.amplitude_eta - eta0) < 1e-9
    assert abs(w.amplitude_u - u0) < 1e-9


def test_fixed_point_input(wave115):
    again = petviashvili_solve(1.15, GRID, "regularized", init=wave115.to_state())
    assert again.iterations == 1
    assert abs(again.stabilization - 1) < 1e-10
    assert again.final_increment < 1.8e-13


def test_stabilization_factor_is_one_at_solution(wave115, hp115):
    for w in (wave115, hp115):
        assert abs(stabilization_factor(w.eta, w.u, w.c, GRID, w.kind) - 1) < 1e-10
        assert abs(w.stabilization - 1) < 1e-10


class TestProfiles:
    @pytest.mark.parametrize("which", ["wave115", "hp115"])
    def test_even_and_decaying(self, which, request):
        w = request.getfixturevalue(which)
        c = GRID.center_index
        for f in (w.eta, w.u):
            mirrored = np.concatenate(([f[0]], f[1:][::-1]))
            assert np.max(np.abs(f - mirrored)) < 1e-10
            assert abs(f[0]) < 1e-10 and abs(f[-1]) < 1e-10
            assert np.argmax(f) == c

    @pytest.mark.parametrize("which", ["wave115", "hp115"])
    def test_residual_small(self, which, request):
        w = request.getfixturevalue(which)
        assert w.residual_inf < 1e-10
        assert w.residual_inf < 100 * 1.8e-13
        assert residual(w) == w.residual_inf

    def test_hp_and_regularized_close_but_distinct(self, wave115, hp115):
        assert abs(wave115.amplitude_eta - hp115.amplitude_eta) < 0.05
        assert np.max(np.abs(wave115.eta - hp115.eta)) > 1e-4

    def test_shallow_water_wave_is_narrower(self, wave115, hp115):
        def width(f):
            return np.sum(f > 0.5 * f.max())
        assert width(wave115.eta) <= width(hp115.eta)


class TestResidual:
    def test_direct_substitution_independent_of_solver(self, wave115):
        k = spectral.K()
        w = wave115
        r1 = w.c * w.eta - w.u - spectral.apply_multiplier(w.eta * w.u, k, GRID)
        r2 = w.c * w.u - w.eta - spectral.apply_multiplier(w.u ** 2 / 2, k, GRID)
        assert max(np.abs(r1).max(), np.abs(r2).max()) < 1e-10

    def test_zero_profiles(self):
        z = np.zeros(GRID.n_modes)
        w = SolitaryWave(2.0, z, z, 0, 0.0, math.nan, math.nan, GRID)
        assert residual(w) == 0.0

    def test_sensitive_to_pointwise_perturbation(self, wave115):
        eta = wave115.eta.copy()
        eta[3000] += 1e-6
        r1, r2 = residual_fields(eta, wave115.u, 1.15, GRID)
        assert max(np.abs(r1).max(), np.abs(r2).max()) >= 1e-7


class TestErrors:
    @pytest.mark.parametrize("c", [0.9, 1.0, -1.0 + 1e-12, 0.0])
    def test_speed_below_invertibility(self, c):
        with pytest.raises(InvertibilityError, match="invertible if and only if"):
            petviashvili_solve(c, GRID)

    def test_leftward_speed_rejected(self):
        with pytest.raises(ConfigError):
            petviashvili_solve(-1.2, GRID)

    def test_classical_rejected(self):
        with pytest.raises(ConfigError):
            petviashvili_solve(1.2, GRID, "classical")

    def test_iteration_cap(self):
        with pytest.raises(ConvergenceError) as info:
            petviashvili_solve(1.2, GRID, max_iter=5)
        assert info.value.iterations == 5
        assert 0 < info.value.last_increment < math.inf

    def test_degenerate_iterate(self):
        with pytest.raises(DegenerateIterateError):
            petviashvili_solve(1.2, GRID, init=zero_state(GRID))


class TestRanges:
    @pytest.mark.parametrize("c", [1.05, 1.3])
    def test_regularized_range(self, c):
        w = petviashvili_solve(c, GRID, "regularized")
        assert w.residual_inf < 1e-10

    @pytest.mark.parametrize("c", [1.02, 1.29])
    def test_hp_range(self, c):
        w = petviashvili_solve(c, GRID, "hp")
        assert w.residual_inf < 1e-10

    def test_hp_rejects_subcritical(self):
        with pytest.raises(InvertibilityError):
            petviashvili_solve(1.0, GRID, "hp")


class TestSweep:
    def test_table_rows(self):
        rows = sweep([1.1, 1.2, 1.3], GRID)
        for row, (c, eta0, u0) in zip(rows, TABLE1):
            assert row.converged and row.c == c
            assert abs(row.amplitude_eta - eta0) < 1e-9 and abs(row.amplitude_u - u0) < 1e-9

    def test_empty(self):
        assert sweep([], GRID) == []

    def test_amplitude_increases_with_speed(self):
        cs = [1.05, 1.10, 1.15, 1.20, 1.25, 1.30]
        rows = sweep(cs, GRID)
        amps = [r.amplitude_eta for r in rows]
        assert all(r.converged for r in rows)
        assert all(b > a for a, b in zip(amps, amps[1:]))

    def test_rejects_unsorted_and_subcritical(self):
        with pytest.raises(ConfigError):
            sweep([1.2, 1.1], GRID)
        with pytest.raises(InvertibilityError):
            sweep([0.95, 1.1], GRID)

    def test_failed_rows_are_flagged(self):
        rows = sweep([1.1, 1.2], GRID, max_iter=3, warm_start=False)
        assert [r.converged for r in rows] == [False, False]
        assert all(math.isnan(r.amplitude_eta) for r in rows)

    def test_parallel_cold_start_matches_warm_start(self):
        grid = make_grid(-80, 80, 2048)
        warm = sweep([1.1, 1.2], grid)
        cold = sweep([1.1, 1.2], grid, warm_start=False, workers=2)
        for a, b in zip(warm, cold):
            assert abs(a.amplitude_eta - b.amplitude_eta) < 1e-11


def test_kdv_guess_shape():
    eta, u = kdv_guess(1.1, GRID)
    assert math.isclose(eta[GRID.center_index], 0.2, rel_tol=1e-12)
    np.testing.assert_allclose(u, eta / 1.1)


def test_traveling_wave_under_evolution(wave115):
    state = wave115.to_state()
    final = evolve(state, StepConfig(0.05, 10.0), "regularized")
    want = spectral.spectral_shift(wave115.eta, 11.5, GRID)
    err = spectral.l2_norm(final.eta - want, GRID) / spectral.l2_norm(want, GRID)
    assert err < 1e-6


def test_hp_wave_travels(hp115):
    final = evolve(hp115.to_state(), StepConfig(0.05, 5.0), "hp")
    want = spectral.spectral_shift(hp115.eta, 5.75, GRID)
    assert spectral.l2_norm(final.eta - want, GRID) / spectral.l2_norm(want, GRID) < 1e-6
