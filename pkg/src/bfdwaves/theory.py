"""Speed limits and linear dispersion of the B/FD systems.

Everything here is a closed-form or one-dimensional computation on the
symbols; no grid is involved.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import asdict, dataclass

import numpy as np
from scipy.optimize import minimize_scalar

from .errors import ParameterDomainError
from .spectral import eval_symbol_l, j_symbol

ZERO_TOL = 1e-14


def _require_hamiltonian(sys, *, strict_a=False, strict_c=False):
    if not sys.is_hamiltonian or sys.b <= 0:
        raise ParameterDomainError("requires the Hamiltonian case b = d > 0")
    if sys.a > (-ZERO_TOL if strict_a else ZERO_TOL):
        raise ParameterDomainError(f"requires a {'<' if strict_a else '<='} 0, got {sys.a}")
    if sys.c > (-ZERO_TOL if strict_c else ZERO_TOL):
        raise ParameterDomainError(f"requires c {'<' if strict_c else '<='} 0, got {sys.c}")


def omega_m(sys) -> float:
    return (1.0 - sys.gamma) * abs(sys.c) / sys.b


def angulo_saut_quantities(sys, c_s: float) -> tuple[float, float]:
    """Return ``(alpha0, beta0)`` at speed ``c_s``."""
    g = sys.gamma
    x = abs(c_s)
    beta0 = -4.0 * g ** 4 * (sys.b * x + (sys.a - 1.0 / g ** 2) / g)
    alpha0 = 1.0 / g - x - 1.0 / beta0
    return alpha0, beta0


@dataclass(frozen=True)
class AnguloSautCheck:
    admissible: bool
    c_s: float
    omega_m: float
    alpha0: float
    beta0: float

    def __bool__(self):
        return self.admissible


def angulo_saut_admissible(sys, c_s: float) -> AnguloSautCheck:
    """Sufficient speed conditions for existence in the Hamiltonian case."""
    _require_hamiltonian(sys)
    w = omega_m(sys)
    alpha0, beta0 = angulo_saut_quantities(sys, c_s)
    ok = abs(c_s) < w and sys.gamma ** 2 * alpha0 > sys.nu_sqrt
    return AnguloSautCheck(bool(ok), c_s, w, alpha0, beta0)


# -- Q polynomial --------------------------------------------------------------

@dataclass(frozen=True)
class QRoots:
    Q0: float
    Q1: float
    x_minus: float | None
    x_plus: float | None

    def __call__(self, x):
        return self.Q0 + self.Q1 * x + x * x


def q_coefficients(sys) -> tuple[float, float]:
    g, b, a, nu = sys.gamma, sys.b, sys.a, sys.nu_sqrt
    q0 = ((nu - g) * (a - 1.0 / g ** 2) / g - 1.0 / (4.0 * g ** 2)) / (b * g ** 2)
    q1 = (b * (nu - g) + g * (a - 1.0 / g ** 2)) / (b * g ** 2)
    return q0, q1


def q_roots(sys) -> QRoots:
    """Coefficients and real roots of Q(x) = Q0 + Q1 x + x^2."""
    _require_hamiltonian(sys, strict_a=True, strict_c=True)
    q0, q1 = q_coefficients(sys)
    if q1 >= 0:
        warnings.warn(f"Q1 = {q1:g} is not negative for these parameters", RuntimeWarning)
    disc = q1 * q1 - 4.0 * q0
    if disc < 0:
        return QRoots(q0, q1, None, None)
    sq = math.sqrt(disc)
    x_plus = 0.5 * (-q1 + sq)
    # product of roots is Q0; avoids cancellation when Q0 is small
    x_minus = q0 / x_plus if x_plus != 0 else 0.5 * (-q1 - sq)
    return QRoots(q0, q1, x_minus, x_plus)


def c_threshold(sys) -> float:
    """C(gamma): Q0 > 0 exactly when sqrt(mu/mu2) < C(gamma)."""
    g, a = sys.gamma, sys.a
    return g * (3.0 - 4.0 * a * g * g) / (4.0 * (1.0 - a * g * g))


# -- gamma_* -------------------------------------------------------------------

def gamma_star_polynomial(a: float, nu_sqrt: float):
    """Cubic whose root in (0, 1) is gamma_*, as a callable with ``.deriv``."""
    A = abs(a)
    return np.polynomial.Polynomial([-nu_sqrt / A, 3.0 / (4.0 * A), -nu_sqrt, 1.0])


def gamma_star(sys=None, *, a: float | None = None, nu_sqrt: float | None = None,
               tol: float = 1e-12) -> float:
    """Unique root in (0, 1) of the cubic bounding the density ratio.

    Accepts either a system or explicit ``a`` and ``nu_sqrt``.
    """
    if sys is not None:
        a, nu_sqrt = sys.a, sys.nu_sqrt
    if a is None or nu_sqrt is None:
        raise TypeError("give a system or both a and nu_sqrt")
    if not a < 0:
        raise ParameterDomainError(f"requires a < 0, got {a}")
    A = abs(a)
    if not nu_sqrt < (3.0 + A) / (4.0 + A):
        raise ParameterDomainError(
            f"sqrt(mu/mu2)={nu_sqrt:g} violates the bound (3+|a|)/(4+|a|)={(3 + A) / (4 + A):g}")
    P = gamma_star_polynomial(a, nu_sqrt)
    dP = P.deriv()
    lo, hi = 0.0, 1.0
    while hi - lo > 1e-10:
        mid = 0.5 * (lo + hi)
        if P(mid) < 0:
            lo = mid
        else:
            hi = mid
    g = 0.5 * (lo + hi)
    for _ in range(20):
        step = P(g) / dP(g)
        g_new = g - step
        if not lo - 1e-10 <= g_new <= hi + 1e-10:
            break
        g = g_new
        if abs(P(g)) <= 0.01 * tol or abs(step) < 1e-17:
            break
    return float(g)


# -- speed limit ---------------------------------------------------------------

def r_gamma(x, sys):
    """(1 - gamma) j_c l / j_b^2, the ratio that fixes the speed limit."""
    x = np.asarray(x, dtype=float)
    jb = j_symbol(x, sys.b, sys.mu)
    jc = j_symbol(x, sys.c, sys.mu)
    return (1.0 - sys.gamma) * jc * eval_symbol_l(x, sys) / jb ** 2


def r_gamma_limit(sys) -> float:
    """Limit of R_gamma as x -> infinity."""
    g = sys.gamma
    return (1.0 - g) / g * abs(sys.c) / sys.b ** 2 * (abs(sys.a) + 1.0 / g ** 2)


@dataclass(frozen=True)
class SpeedLimitReport:
    omega_m: float
    alpha0: float | None
    beta0: float | None
    Q0: float | None
    Q1: float | None
    x_minus: float | None
    x_plus: float | None
    C_gamma_threshold: float
    gamma_star: float | None
    x_gamma: float
    m_gamma: float
    c_gamma: float
    r_limit: float
    inf_phi: float
    sqrt_inf_phi: float

    def to_dict(self) -> dict:
        return asdict(self)


def minimize_r_gamma(sys, k_max: float = 200.0, n_samples: int = 20001) -> tuple[float, float]:
    """Return ``(x_gamma, m_gamma)``: argmin and infimum of R_gamma on [0, inf).

    Dense sampling on ``[0, k_max]``, Brent refinement on the bracket around
    the sampled minimum, then comparison with the limit at infinity (in which
    case ``x_gamma`` is ``inf``).
    """
    if not k_max > 0:
        raise ValueError(f"k_max must be positive, got {k_max}")
    if n_samples < 2:
        raise ValueError(f"need at least 2 samples, got {n_samples}")
    xs = np.linspace(0.0, k_max, n_samples)
    rs = r_gamma(xs, sys)
    i = int(np.argmin(rs))
    lo = xs[max(i - 1, 0)]
    hi = xs[min(i + 1, n_samples - 1)]
    x_best, r_best = xs[i], rs[i]
    if hi > lo:
        res = minimize_scalar(lambda t: float(r_gamma(t, sys)), bounds=(lo, hi),
                              method="bounded", options={"xatol": 1e-12})
        if res.fun < r_best:
            x_best, r_best = float(res.x), float(res.fun)
    r_inf = r_gamma_limit(sys)
    if r_inf < r_best:
        return math.inf, r_inf
    return float(x_best), float(r_best)


def c_gamma(sys, k_max: float = 200.0, n_samples: int = 20001, c_s: float | None = None) -> SpeedLimitReport:
    """Speed limit c_gamma = sqrt(inf R_gamma) with the related speed data.

    Requires the Hamiltonian case with c < 0 and a <= 0. Quantities whose own
    preconditions fail (the Q roots need a < 0, gamma_* needs the bound on
    sqrt(mu/mu2)) are reported as ``None``.
    """
    _require_hamiltonian(sys, strict_c=True)
    x_g, m = minimize_r_gamma(sys, k_max, n_samples)
    alpha0 = beta0 = None
    if c_s is not None:
        alpha0, beta0 = angulo_saut_quantities(sys, c_s)
    Q0 = Q1 = xm = xp = None
    gs = None
    if sys.a < -ZERO_TOL:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", RuntimeWarning)
            q = q_roots(sys)
        Q0, Q1, xm, xp = q.Q0, q.Q1, q.x_minus, q.x_plus
        try:
            gs = gamma_star(sys)
        except ParameterDomainError:
            gs = None
    return SpeedLimitReport(
        omega_m=omega_m(sys), alpha0=alpha0, beta0=beta0, Q0=Q0, Q1=Q1,
        x_minus=xm, x_plus=xp, C_gamma_threshold=c_threshold(sys), gamma_star=gs,
        x_gamma=x_g, m_gamma=m, c_gamma=math.sqrt(m), r_limit=r_gamma_limit(sys),
        inf_phi=math.sqrt(m), sqrt_inf_phi=m ** 0.25,
    )


# -- eigenvalues of the quadratic form ----------------------------------------------

@dataclass(frozen=True)
class QEigen:
    lam_minus: np.ndarray
    lam_plus: np.ndarray
    delta: np.ndarray


def q_operator_eigenvalues(sys, c_s: float, k) -> QEigen:
    """Eigenvalues of the symmetric 2x2 symbol [[(1-g) j_c, -c j_b], [-c j_b, l]]."""
    k = np.asarray(k, dtype=float)
    p = (1.0 - sys.gamma) * j_symbol(k, sys.c, sys.mu)
    q = eval_symbol_l(k, sys)
    off = c_s * j_symbol(k, sys.b, sys.mu)
    trace = p + q
    root = np.sqrt((p - q) ** 2 + 4.0 * off ** 2)
    delta = p * q - off ** 2
    lam_plus = 0.5 * (trace + root)
    # lam_minus from the product to keep relative accuracy when it is small
    lam_minus = np.where(lam_plus != 0, delta / np.where(lam_plus != 0, lam_plus, 1.0),
                         0.5 * (trace - root))
    return QEigen(lam_minus, lam_plus, delta)


# -- linear dispersion ----------------------------------------------------------

def phi(k, sys):
    """Positive branch of the linear phase speed in the rest frame."""
    k = np.asarray(k, dtype=float)
    rad = (1.0 - sys.gamma) * eval_symbol_l(k, sys) * (1.0 - sys.c * sys.mu * k * k)
    if np.any(rad < 0):
        raise ParameterDomainError("negative radicand in the dispersion relation")
    return np.sqrt(rad) / (1.0 + sys.b * sys.mu * k * k)


@dataclass(frozen=True)
class DispersionSample:
    k: np.ndarray
    phi: np.ndarray
    omega_plus: np.ndarray
    omega_minus: np.ndarray
    v_plus: np.ndarray
    v_minus: np.ndarray
    group_plus: np.ndarray
    group_minus: np.ndarray

    def rows(self):
        cols = (self.k, self.phi, self.omega_plus, self.omega_minus, self.v_plus,
                self.v_minus, self.group_plus, self.group_minus)
        return np.column_stack([np.atleast_1d(c) for c in cols])


def dispersion(sys, c_s: float, k) -> DispersionSample:
    """Frequencies, phase speeds and group velocities in the frame moving at ``c_s``."""
    k = np.asarray(k, dtype=float)
    ph = phi(k, sys)
    step = 1e-6 * np.maximum(1.0, np.abs(k))
    dphi = (phi(k + step, sys) - phi(k - step, sys)) / (2.0 * step)
    slope = k * dphi + ph
    return DispersionSample(
        k=k, phi=ph,
        omega_plus=-c_s * k + k * ph, omega_minus=-c_s * k - k * ph,
        v_plus=-c_s + ph, v_minus=-c_s - ph,
        group_plus=-c_s + slope, group_minus=-c_s - slope,
    )


def plane_wave_residual(sys, c_s: float, k, omega):
    """Residual of exp(i(k y - omega t)) in the linearized moving-frame equation.

    Normalized by the size of the two terms that cancel.
    """
    k = np.asarray(k, dtype=float)
    jb = 1.0 + sys.b * sys.mu * k * k
    lhs = jb ** 2 * (omega + k * c_s) ** 2
    rhs = (1.0 - sys.gamma) * eval_symbol_l(k, sys) * k * k * (1.0 - sys.c * sys.mu * k * k)
    return (rhs - lhs) / np.maximum(np.abs(rhs) + np.abs(lhs), 1e-300)
