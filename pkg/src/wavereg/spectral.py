"""Periodic grids and Fourier-multiplier operators.

Fields are stored as real sample arrays on a uniform periodic grid.  Multipliers
are applied with a real-to-complex FFT, so the output of every application is
real by construction.  The multiplier ``K = tanh(h0 D) / (h0 D)`` and the
composites built from it are provided as ready-made symbols.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from functools import cached_property
from typing import Callable

import numpy as np

from .errors import ConfigError, InvariantError

# below this |h0 xi| the tanh(z)/z quotient is evaluated by its Taylor series
_SERIES_CUTOFF = 1e-4
_PARITY_RTOL = 1e-12


@dataclass(frozen=True)
class Grid:
    """Uniform periodic grid on ``[x_left, x_right)`` with ``n_modes`` points."""

    x_left: float
    x_right: float
    n_modes: int

    @property
    def length(self) -> float:
        return self.x_right - self.x_left

    @property
    def dx(self) -> float:
        return self.length / self.n_modes

    @cached_property
    def x(self) -> np.ndarray:
        x = self.x_left + self.dx * np.arange(self.n_modes)
        x.flags.writeable = False
        return x

    @cached_property
    def wavenumbers(self) -> np.ndarray:
        """Wavenumbers in standard FFT order ``0, 1, ..., n/2-1, -n/2, ..., -1``."""
        k = 2.0 * np.pi * np.fft.fftfreq(self.n_modes, d=self.dx)
        k.flags.writeable = False
        return k

    @cached_property
    def rwavenumbers(self) -> np.ndarray:
        """Non-negative wavenumbers matching the ``rfft`` layout (last is Nyquist)."""
        k = 2.0 * np.pi * np.fft.rfftfreq(self.n_modes, d=self.dx)
        k.flags.writeable = False
        return k

    @property
    def center_index(self) -> int:
        return self.n_modes // 2

    def check_field(self, field, name="field") -> np.ndarray:
        arr = np.asarray(field, dtype=float)
        if arr.shape != (self.n_modes,):
            raise ValueError(f"{name} has shape {arr.shape}, grid expects ({self.n_modes},)")
        return arr


def make_grid(x_left: float, x_right: float, n_modes: int) -> Grid:
    """Build a periodic grid, validating bounds and the mode count."""
    if not (math.isfinite(x_left) and math.isfinite(x_right)):
        raise ConfigError(f"grid bounds must be finite, got [{x_left}, {x_right}]")
    if not x_left < x_right:
        raise ConfigError(f"need x_left < x_right, got [{x_left}, {x_right}]")
    if int(n_modes) != n_modes or n_modes < 4 or n_modes % 2:
        raise ConfigError(f"n_modes must be an even integer >= 4, got {n_modes}")
    return Grid(float(x_left), float(x_right), int(n_modes))


class Parity(enum.Enum):
    EVEN_REAL = "even-real"
    ODD_IMAGINARY = "odd-imaginary"


@dataclass(frozen=True)
class MultiplierSymbol:
    """A Fourier symbol ``sigma(xi)`` together with its parity class."""

    evaluator: Callable[[np.ndarray], np.ndarray]
    parity: Parity
    name: str

    def __call__(self, xi):
        return self.evaluator(np.asarray(xi, dtype=float))


def _tanhc(z):
    """tanh(z)/z with the removable singularity filled in."""
    z = np.asarray(z, dtype=float)
    out = np.ones_like(z)
    small = np.abs(z) < _SERIES_CUTOFF
    big = ~small
    out[big] = np.tanh(z[big]) / z[big]
    z2 = z[small] ** 2
    out[small] = 1.0 - z2 / 3.0 + 2.0 * z2 * z2 / 15.0
    return out


def _scalar_or_array(value, like):
    return float(value) if np.ndim(like) == 0 else value


def symbol_K(xi, h0=1.0):
    """Symbol of ``K``: ``tanh(h0 xi) / (h0 xi)``, equal to 1 at ``xi = 0``."""
    return _scalar_or_array(_tanhc(h0 * np.asarray(xi, dtype=float)), xi)


def symbol_K_inv(xi, h0=1.0):
    """Symbol of ``K^-1``: ``h0 xi / tanh(h0 xi)``; at least 1, grows like ``h0 |xi|``."""
    return _scalar_or_array(1.0 / _tanhc(h0 * np.asarray(xi, dtype=float)), xi)


def symbol_K_sqrt(xi, h0=1.0):
    return _scalar_or_array(np.sqrt(_tanhc(h0 * np.asarray(xi, dtype=float))), xi)


def symbol_K_inv_sqrt(xi, h0=1.0):
    return _scalar_or_array(1.0 / np.sqrt(_tanhc(h0 * np.asarray(xi, dtype=float))), xi)


def symbol_K_dx(xi, h0=1.0):
    """Symbol of ``K d/dx``: ``i tanh(h0 xi) / h0``, bounded by ``1/h0``."""
    val = 1j * np.tanh(h0 * np.asarray(xi, dtype=float)) / h0
    return complex(val) if np.ndim(xi) == 0 else val


def symbol_dx(xi):
    val = 1j * np.asarray(xi, dtype=float)
    return complex(val) if np.ndim(xi) == 0 else val


def identity_symbol() -> MultiplierSymbol:
    return MultiplierSymbol(lambda xi: np.ones_like(xi), Parity.EVEN_REAL, "identity")


def K(h0=1.0) -> MultiplierSymbol:
    return MultiplierSymbol(lambda xi: symbol_K(xi, h0), Parity.EVEN_REAL, "K")


def K_inv(h0=1.0) -> MultiplierSymbol:
    return MultiplierSymbol(lambda xi: symbol_K_inv(xi, h0), Parity.EVEN_REAL, "K^-1")


def K_sqrt(h0=1.0) -> MultiplierSymbol:
    return MultiplierSymbol(lambda xi: symbol_K_sqrt(xi, h0), Parity.EVEN_REAL, "K^1/2")


def K_inv_sqrt(h0=1.0) -> MultiplierSymbol:
    return MultiplierSymbol(lambda xi: symbol_K_inv_sqrt(xi, h0), Parity.EVEN_REAL, "K^-1/2")


def K_dx(h0=1.0) -> MultiplierSymbol:
    return MultiplierSymbol(lambda xi: symbol_K_dx(xi, h0), Parity.ODD_IMAGINARY, "K d/dx")


def dx() -> MultiplierSymbol:
    return MultiplierSymbol(symbol_dx, Parity.ODD_IMAGINARY, "d/dx")


def symbol_table(symbol: MultiplierSymbol, grid: Grid) -> np.ndarray:
    """Symbol values on the ``rfft`` wavenumbers, Nyquist-corrected for odd symbols.

    Raises InvariantError if the evaluated values contradict the declared parity.
    """
    vals = np.asarray(symbol(grid.rwavenumbers), dtype=complex)
    scale = max(np.max(np.abs(vals)), 1e-300)
    if symbol.parity is Parity.EVEN_REAL:
        residue = np.max(np.abs(vals.imag))
        vals = vals.real.astype(complex)
    else:
        residue = np.max(np.abs(vals.real))
        vals = 1j * vals.imag
        vals[-1] = 0.0
    if residue > _PARITY_RTOL * scale:
        raise InvariantError(
            f"symbol {symbol.name!r} declared {symbol.parity.value} "
            f"but has a residue of {residue:.3e}"
        )
    return vals


def apply_multiplier(field, symbol: MultiplierSymbol, grid: Grid) -> np.ndarray:
    """Apply a Fourier multiplier to a real field; the result is exactly real."""
    f = grid.check_field(field)
    table = symbol_table(symbol, grid)
    return np.fft.irfft(table * np.fft.rfft(f), n=grid.n_modes)


def inner_product(f, g, grid: Grid) -> float:
    """Periodic rectangle-rule approximation of the L2 inner product."""
    f = grid.check_field(f, "f")
    g = grid.check_field(g, "g")
    return float(grid.dx * np.dot(f, g))


def l2_norm(f, grid: Grid) -> float:
    return math.sqrt(max(inner_product(f, f, grid), 0.0))


def spectral_shift(field, shift: float, grid: Grid) -> np.ndarray:
    """Translate a periodic field by ``shift`` (``f(x) -> f(x - shift)``) exactly in Fourier space."""
    f = grid.check_field(field)
    phase = np.exp(-1j * grid.rwavenumbers * shift)
    fh = np.fft.rfft(f) * phase
    # only the real part of the Nyquist coefficient survives, giving a cos(xi_N s)
    return np.fft.irfft(fh, n=grid.n_modes)
