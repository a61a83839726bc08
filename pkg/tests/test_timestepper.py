import math

import numpy as np
import pytest

from wavereg import spectral
from wavereg.diagnostics import ReportRecorder, max_gradient
from wavereg.errors import BlowUpError, ConfigError
from wavereg.spectral import make_grid
from wavereg.systems import State, SystemKind, gaussian_ic, linear_propagator, zero_state
from wavereg.timestepper import StepConfig, evolve, ifrk4_step, propagate_linear, step, strang_step

KINDS = list(SystemKind)
GRID60 = make_grid(-60, 60, 1024)


def _gauss_run(kind, scheme="ifrk4", dt=0.05, t_end=15.0):
    rec = ReportRecorder(kind=kind)
    final = evolve(gaussian_ic(0.3, 40, GRID60), StepConfig(dt, t_end, scheme=scheme), kind, observer=rec)
    return final, rec


@pytest.fixture(scope="module")
def gauss_runs():
    return {kind: _gauss_run(kind) for kind in KINDS}


class TestStepConfig:
    @pytest.mark.parametrize("kw", [dict(dt=0, t_end=1), dict(dt=0.1, t_end=-1),
                                    dict(dt=0.1, t_end=1, callback_stride=0),
                                    dict(dt=0.1, t_end=1, scheme="euler")])
    def test_invalid(self, kw):
        with pytest.raises(ConfigError):
            StepConfig(**kw)


class TestSingleSteps:
    @pytest.mark.parametrize("kind", KINDS)
    @pytest.mark.parametrize("stepper", [strang_step, ifrk4_step])
    def test_zero_state_is_fixed(self, kind, stepper):
        s = stepper(zero_state(GRID60), 0.05, kind)
        assert not s.eta.any() and not s.u.any()
        assert s.time == 0.05

    @pytest.mark.parametrize("stepper", [strang_step, ifrk4_step])
    def test_linear_limit_matches_propagator(self, stepper):
        g = GRID60
        xi = g.wavenumbers[4]
        eps = 1e-7
        s = State(g, eps * np.cos(xi * g.x), np.zeros(g.n_modes))
        out = stepper(s, 0.05, SystemKind.REGULARIZED)
        m = linear_propagator(0.05, xi, SystemKind.REGULARIZED)
        # cos mode: coefficient 1; u response is m[1,0] acting as -i * sin-part
        want_eta = eps * (m[0, 0].real * np.cos(xi * g.x))
        want_u = eps * (m[1, 0] * np.exp(1j * xi * g.x)).real
        assert np.max(np.abs(out.eta - want_eta)) < 1e-12
        assert np.max(np.abs(out.u - want_u)) < 1e-12

    def test_step_rejects_nonpositive_dt(self):
        with pytest.raises(ConfigError):
            step(zero_state(GRID60), 0.0, "regularized")

    def test_nonfinite_state_raises_blowup(self):
        eta = np.zeros(GRID60.n_modes)
        eta[10] = np.inf
        with pytest.raises(BlowUpError) as info:
            strang_step(State(GRID60, eta, eta), 0.05, "classical")
        assert info.value.time == pytest.approx(0.05)

    @pytest.mark.parametrize("kind", KINDS)
    def test_linear_reversibility(self, kind):
        s = gaussian_ic(0.3, 10, GRID60)
        back = propagate_linear(propagate_linear(s, 0.05, kind), -0.05, kind)
        assert np.max(np.abs(back.eta - s.eta)) < 1e-12
        assert np.max(np.abs(back.u - s.u)) < 1e-12


class TestEvolve:
    def test_zero_duration(self):
        s = gaussian_ic(0.3, 40, GRID60)
        seen = []
        out = evolve(s, StepConfig(0.05, 0.0), "regularized", observer=seen.append)
        assert out is s and seen == [s]

    def test_final_step_shortened(self):
        seen = []
        out = evolve(gaussian_ic(0.3, 40, GRID60), StepConfig(0.05, 0.12), "regularized",
                     observer=lambda s: seen.append(s.time))
        assert out.time == 0.12
        assert seen == [0.0, 0.05, 0.1, 0.12]

    def test_callback_stride(self):
        seen = []
        evolve(gaussian_ic(0.3, 40, GRID60), StepConfig(0.05, 1.0, callback_stride=7), "hp",
               observer=lambda s: seen.append(round(s.time, 10)))
        assert seen == [0.0, 0.35, 0.7, 1.0]

    def test_blowup_carries_time_and_last_state(self):
        with pytest.raises(BlowUpError) as info:
            evolve(gaussian_ic(1.0, 4, GRID60), StepConfig(0.5, 400), "classical")
        err = info.value
        assert 0 < err.time < 400
        assert err.last_state.is_finite() and err.last_state.time == pytest.approx(err.time - 0.5)

    @pytest.mark.parametrize("kind", KINDS)
    def test_fields_stay_real_and_sized(self, kind, gauss_runs):
        final, _ = gauss_runs[kind]
        assert final.eta.dtype == np.float64 and final.eta.shape == (1024,)
        assert final.time == 15.0

    @pytest.mark.parametrize("kind", KINDS)
    def test_mass_conserved(self, kind, gauss_runs):
        _, rec = gauss_runs[kind]
        assert rec.max_drift("mass", relative=True) < 1e-11

    @pytest.mark.parametrize("kind,bound", [(SystemKind.REGULARIZED, 1e-10), (SystemKind.HP, 1e-10),
                                            (SystemKind.CLASSICAL, 1e-8)])
    def test_hamiltonian_drift(self, kind, bound, gauss_runs):
        _, rec = gauss_runs[kind]
        assert rec.max_drift("hamiltonian", relative=True) < bound

    @pytest.mark.parametrize("kind", KINDS)
    def test_depth_stays_positive(self, kind, gauss_runs):
        _, rec = gauss_runs[kind]
        assert all(r.depth_positive for r in rec.reports)

    def test_classical_steepens_and_flags(self, gauss_runs):
        _, rec = gauss_runs[SystemKind.CLASSICAL]
        # grid-sampled maxima jitter step to step as the front moves; compare per unit time
        late = [r.max_gradient for r in rec.reports if r.time >= 13.0 and abs(r.time - round(r.time)) < 1e-9]
        assert len(late) == 3
        assert all(b > a for a, b in zip(late, late[1:]))
        assert rec.first_breaking_time is not None and rec.first_breaking_time <= 15.0

    @pytest.mark.parametrize("kind", [SystemKind.REGULARIZED, SystemKind.HP])
    def test_regularized_models_do_not_flag(self, kind, gauss_runs):
        _, rec = gauss_runs[kind]
        assert rec.first_breaking_time is None
        assert max(r.spectral_tail for r in rec.reports) < 1e-12

    def test_regularized_gradient_stays_moderate(self, gauss_runs):
        grad_cl = max_gradient(gauss_runs[SystemKind.CLASSICAL][0])
        grad_rs = max_gradient(gauss_runs[SystemKind.REGULARIZED][0])
        assert grad_rs < 0.5 * grad_cl

    def test_dealiased_run_conserves_mass(self):
        rec = ReportRecorder(kind="regularized")
        evolve(gaussian_ic(0.3, 40, GRID60), StepConfig(0.05, 3.0, dealias=True), "regularized", observer=rec)
        assert rec.max_drift("mass", relative=True) < 1e-11


def _order(kind, scheme, dts=(0.1, 0.05, 0.025), t_end=15.0):
    sols = [_gauss_run(kind, scheme, dt, t_end)[0].eta for dt in dts]
    e1 = np.linalg.norm(sols[0] - sols[1])
    e2 = np.linalg.norm(sols[1] - sols[2])
    return math.log2(e1 / e2)


def test_strang_is_second_order():
    assert 1.8 <= _order(SystemKind.REGULARIZED, "strang") <= 2.2


def test_ifrk4_is_fourth_order():
    assert 3.6 <= _order(SystemKind.REGULARIZED, "ifrk4") <= 4.4


def test_strang_hp_second_order():
    assert 1.8 <= _order(SystemKind.HP, "strang", t_end=5.0) <= 2.2
