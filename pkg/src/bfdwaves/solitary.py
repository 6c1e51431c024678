"""Solitary-wave profiles by Petviashvili iteration with vector extrapolation.

The collocation system for a profile of speed ``c_s`` is solved mode by mode
in Fourier space,

    S_k z_k = N_k(z),   S_k = [[-c_s j_b, l], [(1 - gamma) j_c, -c_s j_d]],

where ``N(z) = (eps/gamma) (zeta u, u^2 / 2)``. Each Petviashvili step
rescales the right-hand side by the square of the stabilizing factor
``m = <S z, z> / <N(z), z>``. Cycles of plain steps are closed by a minimal
polynomial extrapolation.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import ConvergenceError, DegenerateIterateError, SingularModeError
from .spectral import PeriodicGrid, SymbolSet, WaveState, forward_transform, refine_maximum

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class ProfileSolveConfig:
    grid: PeriodicGrid
    c_s: float
    tolerance: float = 1e-12
    max_iterations: int = 500
    mpe_width: int = 6
    guess_amplitude: float = 1.0
    guess_width: float = 0.3
    guess_center: float = 0.0
    use_mpe: bool = True
    recenter: bool = True

    def __post_init__(self):
        if not self.tolerance > 0:
            raise ValueError("tolerance must be positive")
        if self.mpe_width < 2:
            raise ValueError("mpe_width must be at least 2")
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be positive")


@dataclass(frozen=True)
class SolitaryWave:
    grid: PeriodicGrid
    zeta: np.ndarray
    u: np.ndarray
    c_s: float
    residual_history: list = field(repr=False)
    iterations: int
    amplitude_zeta: float
    amplitude_u: float

    @property
    def residual(self) -> float:
        return self.residual_history[-1]

    @property
    def state(self) -> WaveState:
        return WaveState(self.zeta, self.u)

    def summary(self) -> dict:
        return {
            "c_s": self.c_s,
            "iterations": self.iterations,
            "residual": self.residual,
            "residual_history": list(self.residual_history),
            "amplitude_zeta": self.amplitude_zeta,
            "amplitude_u": self.amplitude_u,
            "L": self.grid.L,
            "N": self.grid.N,
        }


class ModeMatrices:
    """Entries of every S_k, stored as four per-mode arrays."""

    def __init__(self, symbols: SymbolSet, sys, c_s: float, *, check: bool = True):
        self.c_s = c_s
        self.A = -c_s * symbols.jb
        self.B = symbols.l.copy()
        self.C = (1.0 - sys.gamma) * symbols.jc
        self.D = -c_s * symbols.jd
        self.det = self.A * self.D - self.B * self.C
        if check:
            norm2 = self.A ** 2 + self.B ** 2 + self.C ** 2 + self.D ** 2
            bad = np.abs(self.det) < 1e-14 * (1.0 + norm2)
            if np.any(bad):
                i = int(np.flatnonzero(bad)[0])
                raise SingularModeError(int(symbols.grid.modes[i]), float(self.det[i]))

    def __getitem__(self, i) -> np.ndarray:
        return np.array([[self.A[i], self.B[i]], [self.C[i], self.D[i]]])

    def apply(self, zh, uh):
        return self.A * zh + self.B * uh, self.C * zh + self.D * uh

    def solve(self, fz, fu):
        return (self.D * fz - self.B * fu) / self.det, (self.A * fu - self.C * fz) / self.det


def mode_matrix(k_index: int, symbols: SymbolSet, sys, c_s: float) -> np.ndarray:
    """The 2x2 matrix S_k for the mode stored at ``k_index``."""
    S = ModeMatrices(symbols, sys, c_s, check=False)
    M = S[k_index]
    if abs(S.det[k_index]) < 1e-14 * (1.0 + np.sum(M ** 2)):
        raise SingularModeError(int(symbols.grid.modes[k_index]), float(S.det[k_index]))
    return M


def nonlinear_image(state: WaveState, sys, mask=None):
    """Spectra of (eps/gamma) * (zeta u, u^2 / 2), products taken at the nodes."""
    f = sys.epsilon / sys.gamma
    pz = forward_transform(state.zeta * state.u)
    pu = forward_transform(0.5 * state.u * state.u)
    if mask is not None:
        pz, pu = pz * mask, pu * mask
    return f * pz, f * pu


def _inner(a1, a2, b1, b2) -> float:
    return float(np.real(np.vdot(b1, a1) + np.vdot(b2, a2)))


def petviashvili_step(state: WaveState, sys, S: ModeMatrices, mask=None):
    """One iteration. Returns ``(next_state, m, residual_norm)``.

    ``residual_norm`` is the Euclidean norm of ``S z - N(z)`` at the incoming
    iterate.
    """
    zh, uh = state.zeta_hat, state.u_hat
    nz, nu = nonlinear_image(state, sys, mask)
    lz, lu = S.apply(zh, uh)
    num = _inner(lz, lu, zh, uh)
    den = _inner(nz, nu, zh, uh)
    if abs(den) < 1e-300:
        raise DegenerateIterateError("<N(z), z> vanishes; the iterate carries no nonlinear mass")
    m = num / den
    residual = float(np.sqrt(np.sum(np.abs(lz - nz) ** 2) + np.sum(np.abs(lu - nu) ** 2)))
    new_z, new_u = S.solve(m * m * nz, m * m * nu)
    return WaveState.from_spectra(new_z, new_u), m, residual


def mpe_accelerate(window: Sequence[np.ndarray]) -> np.ndarray:
    """Minimal polynomial extrapolation of a window of consecutive iterates.

    With iterates x_0..x_{k+1} and differences u_j = x_{j+1} - x_j, the
    coefficients c_0..c_{k-1} minimize |sum c_j u_j + u_k| (c_k = 1); the
    extrapolant is sum gamma_j x_j with gamma_j = c_j / sum(c). Rank
    deficient systems take the minimum-norm least-squares solution. The
    newest iterate is returned when the coefficients cannot be normalized.
    """
    if len(window) < 3:
        raise ValueError(f"need at least 3 iterates, got {len(window)}")
    X = np.column_stack([np.asarray(v).ravel() for v in window])
    U = np.diff(X, axis=1)
    k = U.shape[1] - 1
    newest = np.asarray(window[-1])
    if not np.any(U):
        return newest.copy()
    coef, *_ = np.linalg.lstsq(U[:, :k], -U[:, k], rcond=None)
    c = np.append(coef, 1.0)
    total = c.sum()
    if not np.isfinite(total) or abs(total) < 1e-12 * np.sum(np.abs(c)):
        return newest.copy()
    weights = c / total
    out = X[:, : k + 1] @ weights
    if not np.all(np.isfinite(out)):
        return newest.copy()
    return out.reshape(newest.shape)


def sech2_guess(grid: PeriodicGrid, amplitude: float, width: float, center: float = 0.0) -> np.ndarray:
    xs = grid.x - center
    # periodic distance so off-center guesses stay smooth across the boundary
    xs = (xs + grid.L) % (2 * grid.L) - grid.L
    return amplitude / np.cosh(width * xs) ** 2


def profile_residual(state: WaveState, symbols: SymbolSet, sys, c_s: float, mask=None) -> float:
    """Euclidean norm of the collocation residual S z - N(z) (coefficient spectra)."""
    S = ModeMatrices(symbols, sys, c_s, check=False)
    lz, lu = S.apply(state.zeta_hat, state.u_hat)
    nz, nu = nonlinear_image(state, sys, mask)
    return float(np.sqrt(np.sum(np.abs(lz - nz) ** 2) + np.sum(np.abs(lu - nu) ** 2)))


def peak_position(field_values, grid: PeriodicGrid) -> float:
    """Sub-grid location of the extremum of |field|."""
    f = np.asarray(field_values, dtype=float)
    sign = 1.0 if f[np.argmax(np.abs(f))] >= 0 else -1.0
    g = sign * f
    x, _ = refine_maximum(g, grid, int(np.argmax(g)))
    return x


def _signed_peak(values: np.ndarray) -> float:
    return float(values[np.argmax(np.abs(values))])


def solve_profile(cfg: ProfileSolveConfig, sys, *, initial: WaveState | None = None,
                  dealias: bool = False) -> SolitaryWave:
    """Compute a solitary-wave profile of speed ``cfg.c_s``.

    Raises :class:`ConvergenceError` (carrying the residual history) if the
    tolerance is not met within ``cfg.max_iterations`` plain steps.
    """
    grid = cfg.grid
    symbols = SymbolSet.build(grid, sys, dealias=dealias)
    mask = symbols.dealias_mask
    S = ModeMatrices(symbols, sys, cfg.c_s)
    if initial is None:
        g = sech2_guess(grid, cfg.guess_amplitude, cfg.guess_width, cfg.guess_center)
        u_sign = 1.0 if cfg.c_s >= 0 else -1.0
        initial = WaveState(g, u_sign * g)
    z = initial
    history: list[float] = []
    window: list[np.ndarray] = [z.stacked()]
    steps = 0
    N = grid.N
    while True:
        z_next, m, res = petviashvili_step(z, sys, S, mask)
        history.append(res)
        log.debug("iter %d residual %.3e m %.6f", steps, res, m)
        if res <= cfg.tolerance:
            break
        if steps >= cfg.max_iterations:
            raise ConvergenceError(
                f"no convergence in {cfg.max_iterations} iterations (residual {res:.3e})", history)
        steps += 1
        z = z_next
        if cfg.use_mpe:
            window.append(z.stacked())
            if len(window) == cfg.mpe_width + 2:
                ext = mpe_accelerate(window)
                z = WaveState(ext[:N], ext[N:])
                window = [z.stacked()]
    if cfg.recenter:
        x0 = peak_position(z.zeta, grid)
        if abs(x0) > 1e-12 * grid.h:
            z = z.translated(-x0, grid)
    return SolitaryWave(
        grid=grid, zeta=np.asarray(z.zeta), u=np.asarray(z.u), c_s=cfg.c_s,
        residual_history=history, iterations=steps,
        amplitude_zeta=_signed_peak(z.zeta), amplitude_u=_signed_peak(z.u),
    )
