"""Temporal scaling factor a(t) of the self-similar solutions."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np

from .errors import BlowupReached, InvalidArgument
from .integrator import DenseTrajectory, bisect_root, integrate
from .model import PhysicalParams, SolutionCase, alpha_const

log = logging.getLogger(__name__)

A_GUARD = 1e-300
POSITIVITY_FLOOR = 1e-8


@dataclass(frozen=True)
class LegacyTrajectory:
    """Dense solution of a'' = -lambda / a**(N-1) and its energy record."""

    dense: DenseTrajectory
    lambda_legacy: float
    N: int
    energy0: float
    energy_drift: float
    collapsed: bool
    collapse_time: float | None
    t_end: float

    def energy(self, a, a_dot):
        return scaling_energy(a, a_dot, self.lambda_legacy, self.N)


@dataclass(frozen=True)
class ScalingFunction:
    case: SolutionCase
    params: PhysicalParams
    blowup_time: float | None = None
    trajectory: LegacyTrajectory | None = None

    @property
    def rate(self) -> float:
        """Exponential growth rate sqrt(delta alpha(N) Lambda / N) (Case2 only)."""
        p = self.params
        return math.sqrt(p.delta * alpha_const(p.N) * p.Lambda / p.N)

    def __call__(self, t):
        return a_eval(self, t)[0]


def blowup_time(s: ScalingFunction) -> float | None:
    """Time at which m t + n vanishes, if it ever does for t > 0.

    a(T) = 0 fixes T = -n/m for both power-law cases; exponential scaling
    never collapses.
    """
    if s.case in (SolutionCase.CASE1A, SolutionCase.CASE1B):
        m, n = s.params.m, s.params.n
        return -n / m if m < 0 else None
    return None


def make_scaling(params: PhysicalParams, case) -> ScalingFunction:
    """Closed-form scaling factor for Case1a, Case1b or Case2."""
    case = SolutionCase.parse(case)
    if case.is_legacy:
        raise InvalidArgument("legacy scaling has no closed form; use emden_scaling_integrate")
    if case is SolutionCase.CASE2 and not params.delta * params.Lambda > 0:
        raise InvalidArgument("exponential scaling needs delta*Lambda > 0")
    s = ScalingFunction(case, params)
    return ScalingFunction(case, params, blowup_time(s))


def a_eval(s: ScalingFunction, t: float) -> tuple[float, float, float]:
    """(a, a', a'') at time ``t``."""
    case, p = s.case, s.params
    if s.blowup_time is not None and t >= s.blowup_time:
        raise BlowupReached(f"t={t} is at or past the blowup time {s.blowup_time}")
    if case is SolutionCase.CASE1A:
        a, a_dot, a_ddot = p.m * t + p.n, p.m, 0.0
    elif case is SolutionCase.CASE1B:
        base = p.m * t + p.n
        if base <= 0:
            raise BlowupReached(f"m t + n = {base} <= 0 at t={t}")
        e = 2.0 / p.N
        a = base**e
        if a < A_GUARD:
            raise BlowupReached(f"a(t) underflows at t={t}")
        a_dot = e * p.m * base ** (e - 1)
        a_ddot = e * (e - 1) * p.m**2 * base ** (e - 2)
    elif case is SolutionCase.CASE2:
        c = s.rate
        a = math.exp(c * t)
        a_dot, a_ddot = c * a, c * c * a
    else:
        if s.trajectory is None:
            raise InvalidArgument(f"{case.value} scaling needs an integrated trajectory")
        tr = s.trajectory.dense
        if not tr.t_min <= t <= s.trajectory.t_end:
            raise InvalidArgument(f"t={t} outside the integrated range [{tr.t_min}, {s.trajectory.t_end}]")
        a, a_dot = tr(t)
        a_ddot = -s.trajectory.lambda_legacy / a ** (s.params.N - 1)
        a, a_dot = float(a), float(a_dot)
    if not a > 0:
        raise InvalidArgument(f"scaling factor a(t)={a} is not positive at t={t}")
    return a, a_dot, a_ddot


def amplification_window(s: ScalingFunction, factor: float) -> float | None:
    """eta such that alpha / a(t)**N > factor * alpha / a(0)**N for t in (T - eta, T).

    None when there is no blowup.  Only the closed-form power laws qualify.
    """
    T = s.blowup_time
    if T is None:
        return None
    if not factor > 1:
        raise InvalidArgument("amplification factor must exceed 1")
    p = s.params
    if s.case is SolutionCase.CASE1A:
        # (n / a)**N > factor  <=>  |m| (T - t) < n factor**(-1/N)
        return p.n * factor ** (-1.0 / p.N) / abs(p.m)
    # a = (m t + n)**(2/N), so the amplification is (n / (m t + n))**2
    return p.n / (abs(p.m) * math.sqrt(factor))


def scaling_energy(a, a_dot, lambda_legacy: float, N: int):
    """First integral a'**2 / 2 + U(a) of a'' = -lambda / a**(N-1).

    U = lambda a**(2-N) / (2-N) for N >= 3 and lambda ln a for N = 2.
    """
    a = np.asarray(a, dtype=float)
    kinetic = 0.5 * np.asarray(a_dot, dtype=float) ** 2
    if N == 2:
        return kinetic + lambda_legacy * np.log(a)
    return kinetic + lambda_legacy * a ** (2 - N) / (2 - N)


def energy_scale(a, a_dot, lambda_legacy: float, N: int):
    """|kinetic| + |potential|, the magnitude the energy is a difference of."""
    a = np.asarray(a, dtype=float)
    kinetic = 0.5 * np.asarray(a_dot, dtype=float) ** 2
    potential = lambda_legacy * (np.log(a) if N == 2 else a ** (2 - N) / (2 - N))
    return np.abs(kinetic) + np.abs(potential)


def relative_energy_drift(a, a_dot, lambda_legacy: float, N: int) -> float:
    """max |E - E(0)| relative to max(|E(0)|, |kinetic| + |potential|) along a trajectory.

    Near collapse E is a small difference of two diverging terms, so the
    pointwise magnitude of those terms is the meaningful yardstick.
    """
    E = scaling_energy(a, a_dot, lambda_legacy, N)
    E0 = float(E[0])
    scale = np.maximum(abs(E0), energy_scale(a, a_dot, lambda_legacy, N))
    scale = np.where(scale > 0, scale, 1.0)
    return float(np.max(np.abs(E - E0) / scale))


def emden_scaling_integrate(
    lambda_legacy: float,
    a0: float,
    a1: float,
    N: int,
    t_max: float,
    rel_tol: float = 1e-12,
    abs_tol: float | None = None,
    floor: float = POSITIVITY_FLOOR,
) -> ScalingFunction:
    """Integrate a'' = -lambda / a**(N-1), a(0) = a0, a'(0) = a1.

    Runs to ``t_max`` or until a drops to ``floor * a0``.  In the latter case
    ``collapsed`` is set, ``collapse_time`` estimates when the floor is hit
    and the usable range ends at the last accepted step before it.
    """
    if not a0 > 0:
        raise InvalidArgument("a0 > 0 required")
    if int(N) != N or N < 2:
        raise InvalidArgument("N must be an integer >= 2")
    if not t_max > 0:
        raise InvalidArgument("t_max > 0 required")
    N = int(N)
    a_floor = floor * a0
    abs_tol = rel_tol * 1e-3 * a0 if abs_tol is None else abs_tol

    def rhs(t, y):
        a = max(y[0], a_floor * 1e-3)
        return np.array([y[1], -lambda_legacy / a ** (N - 1)])

    state = {"collapsed": False}

    def stop(t_old, y_old, t_new, y_new):
        if y_new[0] <= a_floor:
            state["collapsed"] = True
            return True
        return False

    tr = integrate(rhs, 0.0, [a0, a1], t_max, rel_tol, abs_tol, stop=stop)
    collapse_time = None
    t_nodes, y_nodes = tr.t, tr.y
    if state["collapsed"]:
        # the step that crosses the floor is unreliable; trust accepted nodes before it
        collapse_time = bisect_root(lambda t: tr(t)[0] - a_floor, tr.t[-2], tr.t[-1])
        t_nodes, y_nodes = tr.t[:-1], tr.y[:-1]
    t_end = float(t_nodes[-1])

    drift = relative_energy_drift(y_nodes[:, 0], y_nodes[:, 1], lambda_legacy, N)
    E0 = float(scaling_energy(a0, a1, lambda_legacy, N))
    log.info("legacy scaling: %d steps, collapsed=%s, relative energy drift %.3e", tr.stats.accepted, state["collapsed"], drift)

    case = SolutionCase.LEGACY_2D if N == 2 else SolutionCase.LEGACY_GW
    params = PhysicalParams.for_case(case, N=N, lambda_legacy=lambda_legacy)
    traj = LegacyTrajectory(tr, lambda_legacy, N, E0, drift, state["collapsed"], collapse_time, t_end)
    return ScalingFunction(case, params, None, traj)
