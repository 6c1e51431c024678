"""Model parameterization of the Boussinesq/full-dispersion systems.

The dispersion coefficients (a, b, c, d) follow from three modelling
parameters; the sign pattern of (b, d, a, c) picks one of sixteen linearly
well-posed classes.
"""
from __future__ import annotations

import hashlib
import json
import math
from dataclasses import asdict, dataclass, field

from .errors import NotWellPosedError, ParameterDomainError

ZERO_TOL = 1e-14


@dataclass(frozen=True)
class ModelingParameters:
    alpha1: float
    alpha2: float
    beta: float

    def __post_init__(self):
        if not (self.alpha1 >= 0 and self.alpha2 <= 1 and self.beta >= 0):
            raise ParameterDomainError(
                "need alpha1 >= 0, alpha2 <= 1, beta >= 0; got "
                f"alpha1={self.alpha1}, alpha2={self.alpha2}, beta={self.beta}")


def derive_abcd(p: ModelingParameters) -> tuple[float, float, float, float]:
    """Return ``(a, b, c, d)`` for the modelling parameters ``p``."""
    if not isinstance(p, ModelingParameters):
        p = ModelingParameters(*p)
    a = (1.0 - p.alpha1 - 3.0 * p.beta) / 3.0
    b = p.alpha1 / 3.0
    c = p.beta * p.alpha2
    d = p.beta * (1.0 - p.alpha2)
    return a, b, c, d


@dataclass(frozen=True)
class AbcdSystem:
    """Coefficients and regime parameters of one B/FD system.

    ``gamma`` is the density ratio of the two layers, ``epsilon`` the
    nonlinearity, ``mu`` and ``mu2`` the shallowness of the upper and lower
    layer.
    """

    a: float
    b: float
    c: float
    d: float
    gamma: float = 0.8
    epsilon: float = 1.0
    mu: float = 1.0
    mu2: float = 10.0

    def __post_init__(self):
        if not 0.0 < self.gamma < 1.0:
            raise ParameterDomainError(f"gamma must lie in (0, 1), got {self.gamma}")
        if self.epsilon < 0 or self.mu <= 0 or self.mu2 <= 0:
            raise ParameterDomainError("need epsilon >= 0 and mu, mu2 > 0")

    @classmethod
    def from_modeling(cls, p: ModelingParameters, **regime) -> "AbcdSystem":
        return cls(*derive_abcd(p), **regime)

    @property
    def epsilon_db(self) -> float:
        return self.d - self.b

    @property
    def is_hamiltonian(self) -> bool:
        return abs(self.d - self.b) <= ZERO_TOL

    @property
    def linearly_well_posed(self) -> bool:
        t = ZERO_TOL
        return self.b >= -t and self.d >= -t and self.a <= t and self.c <= t

    @property
    def nu_ratio(self) -> float:
        """mu / mu2."""
        return self.mu / self.mu2

    @property
    def nu_sqrt(self) -> float:
        """sqrt(mu / mu2)."""
        return math.sqrt(self.mu / self.mu2)

    def to_dict(self) -> dict:
        return asdict(self)

    def digest(self) -> str:
        blob = json.dumps(self.to_dict(), sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()[:16]


def reduced_parameters(epsilon_db: float, gamma: float = 0.8, *, epsilon: float = 1.0,
                       mu: float = 1.0, mu2: float = 10.0):
    """One-parameter family used throughout the experiments.

    Fixes alpha1 = 1, alpha2 = -1/2 and selects beta so that d - b equals
    ``epsilon_db``. Returns ``(ModelingParameters, AbcdSystem)``.
    """
    if 1.0 / 3.0 + epsilon_db < 0:
        raise ParameterDomainError(
            f"epsilon_db={epsilon_db} gives beta < 0; need epsilon_db >= -1/3")
    beta = (2.0 / 3.0) * (1.0 / 3.0 + epsilon_db)
    p = ModelingParameters(1.0, -0.5, beta)
    b = 1.0 / 3.0
    sys = AbcdSystem(a=-beta, b=b, c=-beta / 2.0, d=b + epsilon_db, gamma=gamma,
                     epsilon=epsilon, mu=mu, mu2=mu2)
    return p, sys


# (relevant, name, Sobolev pair) for rows 1..16, ordered by the sign pattern
# (b, d, a, c) with b, d in {+, 0} and a, c in {-, 0}.
_TABLE = {
    1: (True, "generic B/FD", "H^s x H^s, s >= 0"),
    2: (True, None, "H^s x H^(s-1), s >= 0"),
    3: (True, None, "H^s x H^s, s >= 0"),
    4: (True, "BBM-BBM B/FD", "H^(s-1) x H^s, s >= 0"),
    5: (False, None, "H^(s+1) x H^s, s > 3/2"),
    6: (True, None, "H^s x H^s, s > 3/2"),
    7: (False, None, "H^(s+1) x H^s, s > 3/2"),
    8: (True, None, "H^s x H^s, s > 3/2"),
    9: (True, None, "H^s x H^(s+1), s > 1/2"),
    10: (True, None, "H^s x H^(s+2), s > 1/2"),
    11: (True, None, "H^s x H^(s+1), s > 1/2"),
    12: (True, None, "H^s x H^(s+2), s > 1/2"),
    13: (False, None, ""),
    14: (False, None, ""),
    15: (False, None, ""),
    16: (False, None, ""),
}


@dataclass(frozen=True)
class SystemClass:
    row_index: int
    sign_pattern: tuple[str, str, str, str]
    relevant: bool
    wellposedness_label: str
    name: str | None = field(default=None)

    def to_dict(self) -> dict:
        return {
            "row": self.row_index,
            "signs": "".join(self.sign_pattern),
            "relevant": self.relevant,
            "wellposedness": self.wellposedness_label,
            "name": self.name,
        }


def _sign(value: float, allowed: str) -> str:
    if abs(value) <= ZERO_TOL:
        return "0"
    s = "+" if value > 0 else "-"
    if s != allowed:
        raise NotWellPosedError(f"coefficient {value:g} has sign {s}, expected {allowed} or 0")
    return s


def classify(sys) -> SystemClass:
    """Match the sign pattern of (b, d, a, c) against the sixteen classes.

    ``sys`` may be an :class:`AbcdSystem` or a plain ``(a, b, c, d)`` tuple.
    """
    if isinstance(sys, AbcdSystem):
        a, b, c, d = sys.a, sys.b, sys.c, sys.d
    else:
        a, b, c, d = sys
    signs = (_sign(b, "+"), _sign(d, "+"), _sign(a, "-"), _sign(c, "-"))
    row = 1 + 8 * (signs[0] == "0") + 4 * (signs[1] == "0") + 2 * (signs[2] == "0") + (signs[3] == "0")
    relevant, name, label = _TABLE[row]
    return SystemClass(row, signs, relevant, label, name)
