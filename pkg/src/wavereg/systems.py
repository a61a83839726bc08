"""The three shallow-water-type evolution systems.

Every system is written as ``d/dt (eta, u) = A (eta, u) + N(eta, u)`` with a
linear part ``A`` acting mode-wise and a quadratic flux ``N``:

* classical:    ``A = -d/dx [[0, h0], [g, 0]]``,   ``N = -d/dx (eta u, u^2/2)``
* regularized:  same ``A``,                        ``N = -K d/dx (eta u, u^2/2)``
* hp (fully dispersive): ``A = -d/dx [[0, h0], [g K, 0]]``, same ``N`` as regularized
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from . import spectral
from .errors import ConfigError
from .spectral import Grid


class SystemKind(enum.Enum):
    CLASSICAL = "classical"
    REGULARIZED = "regularized"
    HP = "hp"

    @classmethod
    def parse(cls, name) -> "SystemKind":
        if isinstance(name, cls):
            return name
        key = str(name).strip().lower().replace("-", "").replace("_", "")
        try:
            return _KIND_ALIASES[key]
        except KeyError:
            choices = ", ".join(k.value for k in cls)
            raise ConfigError(f"unknown system {name!r}; expected one of {choices}") from None


_KIND_ALIASES = {
    "classical": SystemKind.CLASSICAL, "classicalsw": SystemKind.CLASSICAL, "sw": SystemKind.CLASSICAL,
    "regularized": SystemKind.REGULARIZED, "regularizedsw": SystemKind.REGULARIZED,
    "rsw": SystemKind.REGULARIZED,
    "hp": SystemKind.HP, "fullydispersive": SystemKind.HP, "fullydispersivehp": SystemKind.HP,
}


@dataclass(frozen=True)
class PhysParams:
    """Undisturbed depth and gravity in nondimensional units."""

    h0: float = 1.0
    g: float = 1.0

    def __post_init__(self):
        if not (self.h0 > 0 and self.g > 0 and math.isfinite(self.h0) and math.isfinite(self.g)):
            raise ConfigError(f"h0 and g must be positive and finite, got h0={self.h0}, g={self.g}")


@dataclass(frozen=True, eq=False)
class State:
    """Surface elevation and velocity sampled on a grid at a given time."""

    grid: Grid
    eta: np.ndarray
    u: np.ndarray
    time: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "eta", self.grid.check_field(self.eta, "eta").copy())
        object.__setattr__(self, "u", self.grid.check_field(self.u, "u").copy())
        object.__setattr__(self, "time", float(self.time))
        self.eta.flags.writeable = False
        self.u.flags.writeable = False

    @property
    def min_depth(self) -> float:
        """Minimum of the total depth ``1 + eta`` over the grid."""
        return float(np.min(1.0 + self.eta))

    @property
    def depth_positive(self) -> bool:
        return self.min_depth > 0.0

    def is_finite(self) -> bool:
        return bool(np.all(np.isfinite(self.eta)) and np.all(np.isfinite(self.u)))

    def replace(self, **changes) -> "State":
        kw = dict(grid=self.grid, eta=self.eta, u=self.u, time=self.time)
        kw.update(changes)
        return State(**kw)


def zero_state(grid: Grid, time=0.0) -> State:
    z = np.zeros(grid.n_modes)
    return State(grid, z, z, time)


def dispersion_weight(xi, kind: SystemKind, params: PhysParams):
    """Factor multiplying ``g eta_x`` in the velocity equation: K for hp, 1 otherwise."""
    xi = np.asarray(xi, dtype=float)
    if kind is SystemKind.HP:
        return spectral.symbol_K(xi, params.h0)
    return np.ones_like(xi) if xi.ndim else 1.0


def linear_frequency(xi, kind: SystemKind, params: PhysParams):
    """Angular frequency ``|xi| sqrt(g h0 sigma(xi))`` of the linearized system."""
    xi = np.asarray(xi, dtype=float)
    return np.abs(xi) * np.sqrt(params.g * params.h0 * dispersion_weight(xi, kind, params))


def linear_propagator(t, xi, kind: SystemKind, params: PhysParams = PhysParams()) -> np.ndarray:
    """Mode-wise matrix exponential ``exp(t A(xi))`` of the linear part.

    ``A(xi) = [[0, -i h0 xi], [-i g sigma(xi) xi, 0]]`` squares to ``-omega^2 I``, so
    ``exp(tA) = cos(omega t) I + sin(omega t)/omega A``; the ``omega -> 0`` limit is
    ``I + tA``.  Accepts scalar or array ``xi``; the result has shape ``xi.shape + (2, 2)``.
    """
    xi = np.asarray(xi, dtype=float)
    a11, a12, a21 = _propagator_entries(float(t), xi, kind, params)
    out = np.empty(xi.shape + (2, 2), dtype=complex)
    out[..., 0, 0] = a11
    out[..., 0, 1] = a12
    out[..., 1, 0] = a21
    out[..., 1, 1] = a11
    return out


def _propagator_entries(t, xi, kind, params):
    omega = linear_frequency(xi, kind, params)
    cos = np.cos(omega * t)
    # sin(omega t)/omega, continuous through omega = 0
    sinc = t * np.sinc(omega * t / np.pi)
    a12 = sinc * (-1j * params.h0 * xi)
    a21 = sinc * (-1j * params.g * dispersion_weight(xi, kind, params) * xi)
    return cos, a12, a21


class SpectralOperators:
    """Precomputed rfft-space tables used by the time steppers."""

    def __init__(self, grid: Grid, kind: SystemKind, params: PhysParams, dealias: bool = False):
        self.grid = grid
        self.kind = kind
        self.params = params
        k = grid.rwavenumbers
        if kind is SystemKind.CLASSICAL:
            flux = spectral.symbol_table(spectral.dx(), grid)
        else:
            flux = spectral.symbol_table(spectral.K_dx(params.h0), grid)
        self.flux_symbol = flux
        self.dealias_mask = None
        if dealias:
            idx = np.arange(k.size)
            self.dealias_mask = (idx <= grid.n_modes // 3).astype(float)
        # the unpaired Nyquist mode sees no derivative, so its linear flow is the identity
        self._xi_linear = k.copy()
        self._xi_linear[-1] = 0.0
        self._prop_cache: dict[float, tuple] = {}

    def propagator(self, t: float):
        entries = self._prop_cache.get(t)
        if entries is None:
            entries = _propagator_entries(t, self._xi_linear, self.kind, self.params)
            if len(self._prop_cache) < 16:
                self._prop_cache[t] = entries
        return entries

    def propagate(self, eh, uh, t):
        a11, a12, a21 = self.propagator(t)
        return a11 * eh + a12 * uh, a21 * eh + a11 * uh

    def nonlinear(self, eh, uh):
        n = self.grid.n_modes
        eta = np.fft.irfft(eh, n=n)
        u = np.fft.irfft(uh, n=n)
        p = np.fft.rfft(eta * u)
        q = np.fft.rfft(0.5 * u * u)
        if self.dealias_mask is not None:
            p *= self.dealias_mask
            q *= self.dealias_mask
        return -self.flux_symbol * p, -self.flux_symbol * q


@lru_cache(maxsize=32)
def operators(grid: Grid, kind: SystemKind, params: PhysParams, dealias: bool = False) -> SpectralOperators:
    return SpectralOperators(grid, kind, params, dealias)


def nonlinear_tendency(state: State, kind, params: PhysParams = PhysParams(), dealias: bool = False):
    """Quadratic flux contribution ``(d_eta, d_u)`` for the given system.

    Products are formed pointwise, the derivative (or ``K d/dx``) spectrally.
    """
    kind = SystemKind.parse(kind)
    ops = operators(state.grid, kind, params, dealias)
    p, q = ops.nonlinear(np.fft.rfft(state.eta), np.fft.rfft(state.u))
    n = state.grid.n_modes
    return np.fft.irfft(p, n=n), np.fft.irfft(q, n=n)


def gaussian_ic(amp, width, grid: Grid, velocity_rule="equal", params: PhysParams = PhysParams()) -> State:
    """``eta = amp exp(-x^2/width)`` with ``u = eta`` or ``u = K^{1/2} eta``."""
    if not width > 0:
        raise ConfigError(f"gaussian width must be positive, got {width}")
    eta = amp * np.exp(-grid.x ** 2 / width)
    if velocity_rule == "equal":
        u = eta
    elif velocity_rule == "sqrtK":
        u = spectral.apply_multiplier(eta, spectral.K_sqrt(params.h0), grid)
    else:
        raise ConfigError(f"velocity rule must be 'equal' or 'sqrtK', got {velocity_rule!r}")
    return State(grid, eta, u, 0.0)
