"""Conserved quantities and validity monitors."""

from __future__ import annotations

import math
from dataclasses import astuple, dataclass, fields

import numpy as np

from . import spectral
from .spectral import inner_product
from .systems import PhysParams, State, SystemKind

DEFAULT_BREAKING_THRESHOLD = 1e-4


@dataclass(frozen=True)
class EnergyReport:
    time: float
    hamiltonian: float
    energy_norm: float
    mass: float
    amplitude: float
    max_gradient: float
    depth_positive: bool
    spectral_tail: float
    near_breaking: bool

    @classmethod
    def columns(cls):
        return [f.name for f in fields(cls)]

    def as_row(self):
        return astuple(self)


def _energy_weights(kind: SystemKind, h0: float):
    """Quadratic-term weights ``(W_eta, W_u)`` of each system's conserved energy.

    regularized: ``(K^-1, K^-1)``; hp: ``(1, K^-1)``; classical: ``(1, 1)``.  Each
    choice makes the system ``eta_t = -M d/dx dH/du, u_t = -M d/dx dH/deta``
    with ``M`` the flux multiplier (``K`` or 1), so the functional is invariant.
    """
    k_inv = spectral.K_inv(h0)
    ident = spectral.identity_symbol()
    if kind is SystemKind.REGULARIZED:
        return k_inv, k_inv
    if kind is SystemKind.HP:
        return ident, k_inv
    return ident, ident


def hamiltonian(state: State, params: PhysParams = PhysParams(), kind=SystemKind.REGULARIZED) -> float:
    """``1/2 int (g eta W_eta eta + h0 u W_u u + eta u^2) dx`` for the given system."""
    kind = SystemKind.parse(kind)
    grid = state.grid
    w_eta, w_u = _energy_weights(kind, params.h0)
    e, u = state.eta, state.u
    quad_e = inner_product(e, spectral.apply_multiplier(e, w_eta, grid), grid)
    quad_u = inner_product(u, spectral.apply_multiplier(u, w_u, grid), grid)
    cubic = inner_product(e, u * u, grid)
    return 0.5 * (params.g * quad_e + params.h0 * quad_u + cubic)


def energy_norm(state: State, h0: float = 1.0) -> float:
    """``(1/sqrt 2) ||K^{-1/2} (eta, u)||_{L2}``."""
    grid = state.grid
    sym = spectral.K_inv_sqrt(h0)
    a = spectral.apply_multiplier(state.eta, sym, grid)
    b = spectral.apply_multiplier(state.u, sym, grid)
    return math.sqrt(0.5 * (inner_product(a, a, grid) + inner_product(b, b, grid)))


def mass(state: State) -> float:
    return float(state.grid.dx * np.sum(state.eta))


def max_gradient(state: State) -> float:
    grad = spectral.apply_multiplier(state.eta, spectral.dx(), state.grid)
    return float(np.max(np.abs(grad)))


def spectral_tail_ratio(state: State) -> float:
    """Largest ``|eta_hat|`` over the top third of wavenumbers, relative to the peak."""
    mags = np.abs(np.fft.rfft(state.eta))
    peak = mags.max()
    if peak == 0.0:
        return 0.0
    tail = mags[np.arange(mags.size) > state.grid.n_modes // 3]
    return float(tail.max() / peak)


def report(state: State, params: PhysParams = PhysParams(), kind=SystemKind.REGULARIZED,
           breaking_threshold: float = DEFAULT_BREAKING_THRESHOLD) -> EnergyReport:
    kind = SystemKind.parse(kind)
    finite = state.is_finite()
    # states just short of blow-up may overflow when squared; inf is the honest value
    with np.errstate(over="ignore", invalid="ignore"):
        return _report(state, params, kind, breaking_threshold, finite)


def _report(state, params, kind, breaking_threshold, finite):
    tail = spectral_tail_ratio(state) if finite else math.inf
    return EnergyReport(
        time=state.time,
        hamiltonian=hamiltonian(state, params, kind),
        energy_norm=energy_norm(state, params.h0),
        mass=mass(state),
        amplitude=float(np.max(state.eta)),
        max_gradient=max_gradient(state),
        depth_positive=state.depth_positive,
        spectral_tail=tail,
        near_breaking=(not finite) or tail > breaking_threshold,
    )


class ReportRecorder:
    """Observer collecting one EnergyReport per call."""

    def __init__(self, params: PhysParams = PhysParams(), kind=SystemKind.REGULARIZED,
                 breaking_threshold: float = DEFAULT_BREAKING_THRESHOLD):
        self.params = params
        self.kind = SystemKind.parse(kind)
        self.breaking_threshold = breaking_threshold
        self.reports: list[EnergyReport] = []

    def __call__(self, state: State) -> None:
        self.reports.append(report(state, self.params, self.kind, self.breaking_threshold))

    @property
    def first_breaking_time(self):
        for r in self.reports:
            if r.near_breaking:
                return r.time
        return None

    def max_drift(self, attr="hamiltonian", relative=False) -> float:
        vals = np.array([getattr(r, attr) for r in self.reports])
        drift = float(np.max(np.abs(vals - vals[0])))
        return drift / abs(vals[0]) if relative else drift
