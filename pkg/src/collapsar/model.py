"""Physical parameters, solution cases and the constants derived from them."""

from __future__ import annotations

import enum
import math
from dataclasses import asdict, dataclass, field, replace
from fractions import Fraction

from .errors import InvalidArgument, ParameterError


class SolutionCase(str, enum.Enum):
    """Which family of self-similar solutions a parameter set belongs to.

    ``CASE1A``/``CASE1B`` have no background (Lambda = 0) and a power-law
    scaling factor, ``CASE2`` has a positive background term and exponential
    scaling. ``LEGACY_GW`` and ``LEGACY_2D`` are the inviscid Euler-Poisson
    collapsing solutions (Goldreich-Weber family for N >= 3 and the 2-D
    exponential-profile family).
    """

    CASE1A = "Case1a"
    CASE1B = "Case1b"
    CASE2 = "Case2"
    LEGACY_GW = "LegacyGW"
    LEGACY_2D = "Legacy2D"

    @classmethod
    def parse(cls, tag):
        if isinstance(tag, cls):
            return tag
        for case in cls:
            if case.value.lower() == str(tag).lower():
                return case
        raise InvalidArgument(f"unknown solution case {tag!r}; expected one of {[c.value for c in cls]}")

    @property
    def is_legacy(self):
        return self in (SolutionCase.LEGACY_GW, SolutionCase.LEGACY_2D)


def _gamma_half_integer(x2: int) -> float:
    """Gamma(x2 / 2) for a positive integer ``x2``, in closed form."""
    if x2 % 2 == 0:
        return float(math.factorial(x2 // 2 - 1))
    k = (x2 - 1) // 2  # Gamma(k + 1/2)
    return math.factorial(2 * k) * math.sqrt(math.pi) / (4**k * math.factorial(k))


def unit_ball_volume(N: int) -> float:
    """Volume of the unit ball in R^N."""
    if int(N) != N or N < 1:
        raise InvalidArgument(f"dimension must be a positive integer, got {N!r}")
    N = int(N)
    return math.pi ** (N / 2) / _gamma_half_integer(N + 2)


def sphere_area(N: int) -> float:
    """Surface area N * Vol(N) of the unit sphere in R^N."""
    return N * unit_ball_volume(N)


def alpha_const(N: int) -> float:
    """Gravity constant alpha(N) tied to the unit ball in R^N.

    ``alpha(1) = 2``, ``alpha(2) = 2 pi`` and ``N (N - 2) Vol(N)`` for N >= 3.
    """
    if int(N) != N or N <= 0:
        raise InvalidArgument(f"alpha(N) needs a positive integer N, got {N!r}")
    N = int(N)
    if N == 1:
        return 2.0
    if N == 2:
        return 2.0 * math.pi
    return N * (N - 2) * unit_ball_volume(N)


def exponents_for(case, N: int) -> tuple[Fraction, Fraction]:
    """Exact (gamma, theta) exponent pair of a solution case in dimension N.

    Legacy (inviscid) families carry no viscosity, their theta is reported as 0.
    """
    case = SolutionCase.parse(case)
    if int(N) != N or N < 2:
        raise InvalidArgument(f"N must be an integer >= 2, got {N!r}")
    N = int(N)
    gamma = Fraction(2 * N - 2, N)
    if case is SolutionCase.CASE1A:
        return gamma, Fraction(2 * N - 3, N)
    if case is SolutionCase.CASE1B:
        return gamma, Fraction(3 * N - 4, 2 * N)
    if case is SolutionCase.CASE2:
        # gamma = theta is what makes the exponential-scaling reduction time independent
        return gamma, gamma
    if case is SolutionCase.LEGACY_GW:
        if N < 3:
            raise InvalidArgument("LegacyGW solutions need N >= 3")
        return gamma, Fraction(0)
    if N != 2:
        raise InvalidArgument("Legacy2D solutions exist only for N = 2")
    return Fraction(1), Fraction(0)


@dataclass(frozen=True)
class PhysicalParams:
    """Scalar parameters of the Navier-Stokes-Poisson system and of the ansatz.

    Attributes
    ----------
    N : int
        Space dimension.
    K : float
        Pressure constant in P = K rho**gamma.
    kappa, theta : float
        Viscosity law mu(rho) = kappa rho**theta.
    gamma : float
        Adiabatic exponent.
    delta : int
        Sign of the potential force (+1 attractive, -1 repulsive, 0 none).
    Lambda : float
        Background constant in the Poisson equation.
    m, n : float
        Coefficients of the scaling law (a(t) built from m t + n).
    alpha_ic : float
        Central value f(0) of the profile.
    lambda_legacy : float
        Constant of the legacy scaling equation a'' = -lambda / a**(N-1).
    """

    N: int = 3
    K: float = 1.0
    kappa: float = 0.0
    gamma: float = 4.0 / 3.0
    theta: float = 1.0
    delta: int = 1
    Lambda: float = 0.0
    m: float = -1.0
    n: float = 1.0
    alpha_ic: float = 1.0
    lambda_legacy: float = 0.0

    @classmethod
    def for_case(cls, case, N: int = 3, **kwargs) -> "PhysicalParams":
        """Build parameters with gamma and theta fixed by ``case``."""
        gamma, theta = exponents_for(case, N)
        kwargs.setdefault("gamma", float(gamma))
        kwargs.setdefault("theta", float(theta))
        return cls(N=N, **kwargs)

    def replace(self, **changes) -> "PhysicalParams":
        return replace(self, **changes)

    def to_dict(self) -> dict:
        return asdict(self)

    @property
    def alpha_N(self) -> float:
        return alpha_const(self.N)


@dataclass
class ValidationReport:
    violations: list[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations

    def __bool__(self):
        return self.ok

    def raise_if_invalid(self):
        if self.violations:
            raise ParameterError(self.violations)


def case2_coefficient(params: PhysicalParams) -> float:
    """Single denominator coefficient gamma K - kappa theta sqrt(N delta alpha(N) Lambda)."""
    drive = params.N * params.delta * alpha_const(params.N) * params.Lambda
    return params.gamma * params.K - params.kappa * params.theta * math.sqrt(max(drive, 0.0))


def _same(value: float, exact: Fraction) -> bool:
    target = float(exact)
    return abs(value - target) <= 2.0 * math.ulp(max(abs(target), 1.0))


def validate(params: PhysicalParams, case) -> ValidationReport:
    """Collect every invariant ``params`` violates for ``case`` (empty when valid)."""
    out: list[str] = []
    try:
        case = SolutionCase.parse(case)
    except InvalidArgument as exc:
        return ValidationReport([str(exc)])

    N = params.N
    if isinstance(N, bool) or int(N) != N or N < 2:
        out.append("N must be an integer >= 2")
        return ValidationReport(out)
    if not params.n > 0:
        out.append("n>0 required")
    if not params.alpha_ic > 0:
        out.append("alpha_ic>0 required")
    if not params.K > 0:
        out.append("K>0 required")
    if not params.kappa >= 0:
        out.append("kappa>=0 required")
    if not params.theta >= 0:
        out.append("theta>=0 required")
    if params.delta not in (-1, 0, 1):
        out.append("delta must be one of -1, 0, +1")
    if not params.Lambda >= 0:
        out.append("Lambda>=0 required")
    for name in ("K", "kappa", "gamma", "theta", "Lambda", "m", "n", "alpha_ic", "lambda_legacy"):
        if not math.isfinite(getattr(params, name)):
            out.append(f"{name} must be finite")

    try:
        gamma, theta = exponents_for(case, N)
    except InvalidArgument as exc:
        out.append(str(exc))
        return ValidationReport(out)

    if not _same(params.gamma, gamma):
        out.append(f"gamma must equal {gamma} for {case.value} with N={N}")
    if case.is_legacy:
        if params.kappa != 0:
            out.append("legacy solutions are inviscid: kappa must be 0")
    elif not _same(params.theta, theta):
        out.append(f"theta must equal {theta} for {case.value} with N={N}")

    if case in (SolutionCase.CASE1A, SolutionCase.CASE1B) and params.Lambda != 0:
        out.append("Lambda must be 0 for power-law scaling cases")
    if case is SolutionCase.CASE2:
        if not params.delta * params.Lambda > 0:
            out.append("delta·Lambda must be positive")
        elif case2_coefficient(params) == 0:
            out.append("gamma*K - kappa*theta*sqrt(N*delta*alpha(N)*Lambda) must be nonzero")
    return ValidationReport(out)
