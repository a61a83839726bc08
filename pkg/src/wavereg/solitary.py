"""Solitary waves by Petviashvili iteration.

A traveling wave ``eta(x - ct), u(x - ct)`` of the regularized or fully
dispersive system solves ``L v = N(v)`` with

* regularized: ``L = [[c, -h0], [-g, c]]``,   ``N(eta, u) = (K(eta u), K(u^2/2))``
* hp:          ``L = [[c, -h0], [-g K, c]]``, same ``N``

``L`` acts mode-wise and is invertible exactly when ``c^2 > g h0``.  The iteration
is ``v_{n+1} = S_n^2 L^{-1} N(v_n)`` with ``S_n = <v_n, L v_n> / <v_n, N(v_n)>``.
"""

from __future__ import annotations

import concurrent.futures
import logging
import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from . import spectral
from .errors import ConfigError, ConvergenceError, DegenerateIterateError, InvertibilityError
from .spectral import Grid, inner_product
from .systems import PhysParams, State, SystemKind

log = logging.getLogger(__name__)

DEFAULT_TOL = 1.8e-13
DEFAULT_MAX_ITER = 10000
_DEGENERATE_DENOMINATOR = 1e-30


@dataclass(frozen=True, eq=False)
class SolitaryWave:
    c: float
    eta: np.ndarray
    u: np.ndarray
    iterations: int
    final_increment: float
    residual_inf: float
    stabilization: float
    grid: Grid = field(repr=False)
    kind: SystemKind = SystemKind.REGULARIZED
    params: PhysParams = PhysParams()

    @property
    def amplitude_eta(self) -> float:
        return float(self.eta[self.grid.center_index])

    @property
    def amplitude_u(self) -> float:
        return float(self.u[self.grid.center_index])

    def to_state(self, time=0.0) -> State:
        return State(self.grid, self.eta, self.u, time)


@dataclass(frozen=True)
class SweepRow:
    c: float
    amplitude_eta: float
    amplitude_u: float
    converged: bool
    iterations: int = 0
    wave: Optional[SolitaryWave] = field(default=None, repr=False, compare=False)


def _check_kind(kind) -> SystemKind:
    kind = SystemKind.parse(kind)
    if kind is SystemKind.CLASSICAL:
        raise ConfigError("solitary waves are computed for the regularized and hp systems only")
    return kind


def check_speed(c: float, params: PhysParams = PhysParams()) -> None:
    """Raise InvertibilityError unless the traveling-wave operator is invertible."""
    if not math.isfinite(c) or c * c <= params.g * params.h0:
        raise InvertibilityError(
            f"speed c = {c} not allowed: the linear operator is invertible "
            f"if and only if c^2 > g*h0 = {params.g * params.h0}"
        )
    if c < 0:
        raise ConfigError(f"only right-moving waves (c > 0) are supported, got c = {c}")


def kdv_guess(c: float, grid: Grid):
    """KdV-regime seed ``a sech^2(x sqrt(3a)/2)`` with ``a = 2(c - 1)``, ``u = eta/c``."""
    a0 = 2.0 * (c - 1.0)
    x = grid.x - grid.x[grid.center_index]
    eta = a0 / np.cosh(x * math.sqrt(3.0 * a0) / 2.0) ** 2
    return eta, eta / c


class _TravelingWaveOperator:
    """rfft-space tables for ``L``, ``L^{-1}`` and ``N``."""

    def __init__(self, c, grid: Grid, kind: SystemKind, params: PhysParams):
        self.grid = grid
        self.c = c
        self.params = params
        k_hat = spectral.symbol_table(spectral.K(params.h0), grid).real
        self.k_hat = k_hat
        sigma = k_hat if kind is SystemKind.HP else np.ones_like(k_hat)
        # L = [[c, -h0], [-g sigma, c]]
        self.l12 = -params.h0
        self.l21 = -params.g * sigma
        self.det = c * c - params.h0 * params.g * sigma

    def apply_L(self, eh, uh):
        c = self.c
        return c * eh + self.l12 * uh, self.l21 * eh + c * uh

    def solve_L(self, ph, qh):
        c = self.c
        return (c * ph - self.l12 * qh) / self.det, (c * qh - self.l21 * ph) / self.det

    def apply_N(self, eta, u):
        return self.k_hat * np.fft.rfft(eta * u), self.k_hat * np.fft.rfft(0.5 * u * u)

    def irfft(self, fh):
        return np.fft.irfft(fh, n=self.grid.n_modes)

    def pair_inner(self, a, b):
        """``int (a1 b1 + a2 b2) dx`` for pairs given in rfft space."""
        g = self.grid
        return inner_product(self.irfft(a[0]), self.irfft(b[0]), g) + inner_product(
            self.irfft(a[1]), self.irfft(b[1]), g
        )


def _recenter(eta, u, center):
    shift = center - int(np.argmax(eta))
    if shift:
        eta = np.roll(eta, shift)
        u = np.roll(u, shift)
    return eta, u


def petviashvili_solve(c: float, grid: Grid, kind=SystemKind.REGULARIZED, init: Optional[State] = None,
                       tol: float = DEFAULT_TOL, max_iter: int = DEFAULT_MAX_ITER,
                       params: PhysParams = PhysParams()) -> SolitaryWave:
    """Compute a solitary wave of speed ``c`` by Petviashvili iteration.

    Parameters
    ----------
    c : float
        Wave speed; ``c^2 > g h0`` is required.
    grid : Grid
        Periodic grid; the wave crest is held at the grid center.
    kind : SystemKind or str
        ``regularized`` or ``hp``.
    init : State, optional
        Starting profiles.  Defaults to the KdV sech^2 approximation.
    tol : float
        Stop once the L2 distance between successive iterates is below ``tol``.
    max_iter : int
        Iteration cap; exceeding it raises ConvergenceError.

    Returns
    -------
    SolitaryWave
    """
    kind = _check_kind(kind)
    check_speed(c, params)
    if not tol > 0:
        raise ConfigError(f"tol must be positive, got {tol}")
    op = _TravelingWaveOperator(c, grid, kind, params)
    if init is None:
        eta, u = kdv_guess(c, grid)
    else:
        eta = grid.check_field(init.eta, "init.eta").copy()
        u = grid.check_field(init.u, "init.u").copy()
    center = grid.center_index
    eta, u = _recenter(eta, u, center)

    increment = math.inf
    s_factor = math.nan
    for it in range(1, max_iter + 1):
        v = (np.fft.rfft(eta), np.fft.rfft(u))
        lv = op.apply_L(*v)
        nv = op.apply_N(eta, u)
        num = op.pair_inner(v, lv)
        den = op.pair_inner(v, nv)
        if abs(den) < _DEGENERATE_DENOMINATOR:
            raise DegenerateIterateError(
                f"stabilization denominator {den:.3e} vanished at iteration {it}", increment, it
            )
        s_factor = num / den
        ph, qh = op.solve_L(*nv)
        scale = s_factor * s_factor
        new_eta = scale * op.irfft(ph)
        new_u = scale * op.irfft(qh)
        new_eta, new_u = _recenter(new_eta, new_u, center)
        increment = math.sqrt(grid.dx * (np.sum((new_eta - eta) ** 2) + np.sum((new_u - u) ** 2)))
        eta, u = new_eta, new_u
        if not math.isfinite(increment):
            raise ConvergenceError(f"iteration diverged at step {it}", increment, it)
        if increment < tol:
            break
    else:
        raise ConvergenceError(
            f"no convergence for c = {c} after {max_iter} iterations "
            f"(last increment {increment:.3e}, tol {tol:.1e})",
            increment,
            max_iter,
        )
    log.debug("c=%g converged in %d iterations, increment %.3e", c, it, increment)
    wave = SolitaryWave(c, eta, u, it, increment, math.nan, s_factor, grid, kind, params)
    return _with_residual(wave)


def _with_residual(wave: SolitaryWave) -> SolitaryWave:
    res = residual(wave)
    return SolitaryWave(wave.c, wave.eta, wave.u, wave.iterations, wave.final_increment, res,
                        wave.stabilization, wave.grid, wave.kind, wave.params)


def stabilization_factor(eta, u, c, grid: Grid, kind=SystemKind.REGULARIZED,
                         params: PhysParams = PhysParams()) -> float:
    """``S = <v, L v> / <v, N(v)>`` evaluated for the given profiles."""
    op = _TravelingWaveOperator(c, grid, _check_kind(kind), params)
    v = (np.fft.rfft(eta), np.fft.rfft(u))
    return op.pair_inner(v, op.apply_L(*v)) / op.pair_inner(v, op.apply_N(eta, u))


def residual_fields(eta, u, c, grid: Grid, kind=SystemKind.REGULARIZED, params: PhysParams = PhysParams()):
    """Strong-form residuals of the traveling-wave equations, evaluated pointwise.

    ``r1 = c eta - h0 u - K(eta u)`` and ``r2 = c u - g S eta - K(u^2/2)`` where
    ``S`` is the identity (regularized) or ``K`` (hp).
    """
    kind = _check_kind(kind)
    k = spectral.K(params.h0)
    r1 = c * eta - params.h0 * u - spectral.apply_multiplier(eta * u, k, grid)
    lin = eta if kind is SystemKind.REGULARIZED else spectral.apply_multiplier(eta, k, grid)
    r2 = c * u - params.g * lin - spectral.apply_multiplier(0.5 * u * u, k, grid)
    return r1, r2


def residual(wave: SolitaryWave, kind=None, params: Optional[PhysParams] = None) -> float:
    """L-infinity norm of the strong-form residual of ``wave``."""
    kind = wave.kind if kind is None else kind
    params = wave.params if params is None else params
    r1, r2 = residual_fields(wave.eta, wave.u, wave.c, wave.grid, kind, params)
    return float(max(np.max(np.abs(r1)), np.max(np.abs(r2))))


def _solve_row(args):
    c, grid, kind, tol, max_iter, params, init = args
    try:
        wave = petviashvili_solve(c, grid, kind, init, tol, max_iter, params)
    except ConvergenceError as exc:
        log.warning("c = %g did not converge: %s", c, exc)
        return SweepRow(c, math.nan, math.nan, False, exc.iterations)
    return SweepRow(c, wave.amplitude_eta, wave.amplitude_u, True, wave.iterations, wave)


def sweep(c_values: Sequence[float], grid: Grid, kind=SystemKind.REGULARIZED, tol: float = DEFAULT_TOL,
          max_iter: int = DEFAULT_MAX_ITER, params: PhysParams = PhysParams(),
          warm_start: bool = True, workers: int = 1) -> list[SweepRow]:
    """Solve for each speed in ascending order, warm-starting from the last converged wave.

    Non-converged speeds are reported with ``converged=False``.  With
    ``warm_start=False`` the speeds are independent and may be solved by
    ``workers`` processes.
    """
    kind = _check_kind(kind)
    cs = [float(c) for c in c_values]
    if any(b <= a for a, b in zip(cs, cs[1:])):
        raise ConfigError("speeds must be strictly ascending")
    for c in cs:
        check_speed(c, params)

    if not warm_start:
        jobs = [(c, grid, kind, tol, max_iter, params, None) for c in cs]
        if workers > 1 and len(jobs) > 1:
            with concurrent.futures.ProcessPoolExecutor(max_workers=workers) as pool:
                return list(pool.map(_solve_row, jobs))
        return [_solve_row(job) for job in jobs]

    rows = []
    init = None
    for c in cs:
        row = _solve_row((c, grid, kind, tol, max_iter, params, init))
        if row.converged:
            init = row.wave.to_state()
        rows.append(row)
    return rows
