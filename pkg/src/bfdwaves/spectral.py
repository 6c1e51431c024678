"""Periodic collocation grid, discrete Fourier transform and Fourier multipliers.

Spectra are stored in the usual FFT layout (modes 0, 1, ..., N/2-1, -N/2,
..., -1) and normalized as Fourier coefficients, i.e. the forward transform
carries the 1/N factor. With this normalization the Euclidean norm of a
spectrum equals the root-mean-square of the nodal values.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np
import scipy.fft as sfft

from .errors import SymbolParityError

SMALL_Y = 1e-8
LARGE_Y = 30.0


@dataclass(frozen=True)
class PeriodicGrid:
    """Uniform grid ``x_j = -L + j h`` on ``[-L, L)`` with ``h = 2L/N``."""

    L: float
    N: int

    def __post_init__(self):
        if self.L <= 0:
            raise ValueError(f"half length must be positive, got {self.L}")
        if self.N <= 0 or self.N % 2:
            raise ValueError(f"number of modes must be a positive even integer, got {self.N}")

    @property
    def h(self) -> float:
        return 2.0 * self.L / self.N

    @cached_property
    def x(self) -> np.ndarray:
        x = -self.L + self.h * np.arange(self.N)
        x.flags.writeable = False
        return x

    @cached_property
    def modes(self) -> np.ndarray:
        """Signed integer mode numbers in transform order."""
        k = np.fft.fftfreq(self.N, 1.0 / self.N).round().astype(int)
        k.flags.writeable = False
        return k

    @cached_property
    def ktilde(self) -> np.ndarray:
        """Physical wavenumbers pi k / L in transform order."""
        kt = np.pi * self.modes / self.L
        kt.flags.writeable = False
        return kt

    @property
    def nyquist_index(self) -> int:
        return self.N // 2

    def mirror_index(self) -> np.ndarray:
        """Index of mode -k for each mode k (Nyquist maps to itself)."""
        return (-np.arange(self.N)) % self.N


def forward_transform(nodal, grid: PeriodicGrid | None = None) -> np.ndarray:
    nodal = np.asarray(nodal)
    if grid is not None and nodal.shape[-1] != grid.N:
        raise ValueError(f"expected {grid.N} nodal values, got {nodal.shape[-1]}")
    return sfft.fft(nodal, norm="forward")


def inverse_transform(spectrum, grid: PeriodicGrid | None = None, *, real: bool = True) -> np.ndarray:
    spectrum = np.asarray(spectrum)
    if grid is not None and spectrum.shape[-1] != grid.N:
        raise ValueError(f"expected {grid.N} modes, got {spectrum.shape[-1]}")
    out = sfft.ifft(spectrum, norm="forward")
    return out.real if real else out


# -- symbols -----------------------------------------------------------------

def xcothx(y):
    """y coth(y), even in y, equal to 1 at y = 0."""
    y = np.abs(np.asarray(y, dtype=float))
    out = np.empty_like(y)
    small = y < SMALL_Y
    large = y > LARGE_Y
    mid = ~(small | large)
    out[small] = 1.0 + y[small] ** 2 / 3.0
    out[large] = y[large]
    out[mid] = y[mid] / np.tanh(y[mid])
    return out


def j_symbol(ktilde, coeff: float, mu: float):
    """Symbol 1 + mu |coeff| k^2 of the operators J_b, J_d and J_c."""
    return 1.0 + mu * abs(coeff) * np.asarray(ktilde, dtype=float) ** 2


def eval_symbol_l(ktilde, sys):
    """Symbol of the nonlocal operator L_mu2.

    Evaluated as 1/g - (sqrt(mu)/g^2) |k| coth(s|k|) - (mu/g)(a - coth^2(s|k|)/g^2) k^2
    with ``s = sqrt(mu2)``; the removable singularity at k = 0 is handled by
    writing both coth terms through y coth(y) with ``y = s|k|``.
    """
    k = np.asarray(ktilde, dtype=float)
    g = sys.gamma
    s = np.sqrt(sys.mu2)
    ycoth = xcothx(s * k)
    out = (1.0 / g
           - np.sqrt(sys.mu) / (g * g * s) * ycoth
           - sys.mu * sys.a / g * k * k
           + sys.mu / (g ** 3 * sys.mu2) * ycoth ** 2)
    return out if out.ndim else float(out)


def l_at_zero(sys) -> float:
    g = sys.gamma
    return 1.0 / g - np.sqrt(sys.mu) / (g * g * np.sqrt(sys.mu2)) + sys.mu / (g ** 3 * sys.mu2)


@dataclass(frozen=True)
class SymbolSet:
    """Per-mode symbols of every linear operator on one grid."""

    grid: PeriodicGrid
    jb: np.ndarray
    jd: np.ndarray
    jc: np.ndarray
    l: np.ndarray
    deriv: np.ndarray
    dealias_mask: np.ndarray | None = None

    @classmethod
    def build(cls, grid: PeriodicGrid, sys, *, dealias: bool = False) -> "SymbolSet":
        kt = grid.ktilde
        deriv = 1j * kt
        deriv[grid.nyquist_index] = 0.0
        mask = None
        if dealias:
            mask = (np.abs(grid.modes) <= grid.N // 3).astype(float)
        arrays = dict(
            jb=j_symbol(kt, sys.b, sys.mu),
            jd=j_symbol(kt, sys.d, sys.mu),
            jc=j_symbol(kt, sys.c, sys.mu),
            l=eval_symbol_l(kt, sys),
            deriv=deriv,
        )
        for v in arrays.values():
            v.flags.writeable = False
        return cls(grid=grid, dealias_mask=mask, **arrays)


def check_parity(symbol, grid: PeriodicGrid, rtol: float = 1e-12) -> str:
    """Return ``'even'`` or ``'odd'``; raise if the multiplier breaks realness."""
    symbol = np.asarray(symbol)
    if symbol.shape != (grid.N,):
        raise ValueError(f"symbol has shape {symbol.shape}, expected ({grid.N},)")
    mirror = symbol[grid.mirror_index()]
    scale = max(np.max(np.abs(symbol)), 1e-300)
    if np.all(np.abs(np.imag(symbol)) <= rtol * scale) and \
            np.all(np.abs(symbol - mirror) <= rtol * scale):
        return "even"
    if np.all(np.abs(np.real(symbol)) <= rtol * scale) and \
            np.all(np.abs(symbol + mirror) <= rtol * scale):
        return "odd"
    raise SymbolParityError("symbol is neither even-real nor odd-imaginary")


def apply_operator(symbol, field, grid: PeriodicGrid, *, check: bool = True) -> np.ndarray:
    """Apply the Fourier multiplier ``symbol`` to the real nodal ``field``."""
    field = np.asarray(field, dtype=float)
    if check:
        check_parity(symbol, grid)
    return inverse_transform(np.asarray(symbol) * forward_transform(field, grid), grid)


def reflect(field) -> np.ndarray:
    """Index reversal (U_1, ..., U_N) -> (U_N, ..., U_1)."""
    return np.asarray(field)[..., ::-1].copy()


def translate(field, shift: float, grid: PeriodicGrid) -> np.ndarray:
    """Translate a nodal field by ``shift`` (any real amount) via phase shift.

    The Nyquist coefficient is multiplied by the cosine of its phase so the
    output stays real.
    """
    phase = np.exp(-1j * grid.ktilde * shift)
    phase[grid.nyquist_index] = np.cos(grid.ktilde[grid.nyquist_index] * shift)
    return inverse_transform(phase * forward_transform(field, grid), grid)


def interpolate(spectrum, grid: PeriodicGrid, x, derivative: int = 0):
    """Evaluate the trigonometric interpolant (or a derivative) at points ``x``.

    The Nyquist mode is split evenly between +/- N/2, which makes the
    interpolant real.
    """
    x = np.atleast_1d(np.asarray(x, dtype=float))
    kt = grid.ktilde.copy()
    c = np.asarray(spectrum, dtype=complex).copy()
    nyq = grid.nyquist_index
    kt_all = np.concatenate([kt, [-kt[nyq]]])
    c_all = np.concatenate([c, [0.5 * c[nyq]]])
    c_all[nyq] *= 0.5
    phase = np.exp(1j * np.outer(x - grid.x[0], kt_all))
    vals = phase @ (c_all * (1j * kt_all) ** derivative)
    return vals.real


def refine_maximum(values, grid: PeriodicGrid, index: int, spectrum=None) -> tuple[float, float]:
    """Sub-grid location and value of a local maximum near node ``index``.

    A three-point parabola gives the starting point, refined by Newton steps
    on the derivative of the trigonometric interpolant.
    """
    g = np.asarray(values, dtype=float)
    i = int(index) % grid.N
    fm, f0, fp = g[i - 1], g[i], g[(i + 1) % grid.N]
    denom = fm - 2.0 * f0 + fp
    offset = 0.5 * (fm - fp) / denom if denom < 0 else 0.0
    x = grid.x[i] + offset * grid.h
    spec = forward_transform(g) if spectrum is None else spectrum
    x0 = x
    for _ in range(10):
        d1 = interpolate(spec, grid, x, 1)[0]
        d2 = interpolate(spec, grid, x, 2)[0]
        if not d2 < 0:
            break
        step = d1 / d2
        if abs(x - step - x0) > grid.h:
            break
        x -= step
        if abs(step) < 1e-13 * grid.h:
            break
    return float(x), float(interpolate(spec, grid, x)[0])


@dataclass
class WaveState:
    """Nodal pair (zeta, u) with lazily cached spectra."""

    zeta: np.ndarray
    u: np.ndarray

    def __post_init__(self):
        self.zeta = np.array(self.zeta, dtype=float)
        self.u = np.array(self.u, dtype=float)
        if self.zeta.shape != self.u.shape or self.zeta.ndim != 1:
            raise ValueError("zeta and u must be 1-D arrays of equal length")
        self.zeta.flags.writeable = False
        self.u.flags.writeable = False

    @classmethod
    def from_spectra(cls, zeta_hat, u_hat) -> "WaveState":
        state = cls(inverse_transform(zeta_hat), inverse_transform(u_hat))
        return state

    @classmethod
    def zeros(cls, grid: PeriodicGrid) -> "WaveState":
        return cls(np.zeros(grid.N), np.zeros(grid.N))

    @cached_property
    def zeta_hat(self) -> np.ndarray:
        return forward_transform(self.zeta)

    @cached_property
    def u_hat(self) -> np.ndarray:
        return forward_transform(self.u)

    def stacked(self) -> np.ndarray:
        return np.concatenate([self.zeta, self.u])

    def scaled(self, zeta_factor: float = 1.0, u_factor: float = 1.0) -> "WaveState":
        return WaveState(zeta_factor * self.zeta, u_factor * self.u)

    def __add__(self, other: "WaveState") -> "WaveState":
        return WaveState(self.zeta + other.zeta, self.u + other.u)

    def translated(self, shift: float, grid: PeriodicGrid) -> "WaveState":
        return WaveState(translate(self.zeta, shift, grid), translate(self.u, shift, grid))
