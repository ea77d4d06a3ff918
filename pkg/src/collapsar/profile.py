"""Radial profile f(z) of the self-similar density.

The profile equations carry the gravity term as an integral,

    D(f) f'(z) + g / z**(N-1) * int_0^z f(s) s**(N-1) ds = F z,

with D(f) = A f**(gamma-2) - c_v f**(theta-2).  The integral M(z) enters
through the mean density w = M / z**N, which obeys w' = (f - N w) / z and
keeps full relative accuracy near the origin where M itself is tiny.  This
turns the problem into a plain first-order system.  Integration starts slightly off the origin from
a two-term series because of the 1/z**(N-1) factor.
"""

from __future__ import annotations

import enum
import logging
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import fixed_quad

from .errors import DegenerateDenominator, InvalidArgument, StiffnessFailure
from .integrator import DenseTrajectory, bisect_root, integrate
from .model import PhysicalParams, SolutionCase, alpha_const, case2_coefficient, validate

log = logging.getLogger(__name__)

DEFAULT_Z0 = 1e-6
DEFAULT_EPS_CUT = 1e-8
DENOMINATOR_FLOOR = 1e-12
# |D| below this fraction of its two terms marks a step-size collapse as a
# vanishing denominator rather than generic stiffness
DENOMINATOR_NEAR_ZERO = 1e-6


class SupportKind(str, enum.Enum):
    ZERO_CROSSING = "ZeroCrossing"
    ASYMPTOTIC_DECAY = "AsymptoticDecay"
    TRUNCATED = "Truncated"


@dataclass(frozen=True)
class ProfileOdeForm:
    """Coefficients of one profile equation.

    ``pressure_coeff`` multiplies |f|**(gamma-2) and ``visc_coeff`` (c_v)
    is subtracted with |f|**(theta-2).  The forcing is ``forcing_slope * z``
    and ``gravity_coeff`` is delta * alpha(N).
    """

    N: int
    gamma: float
    theta: float
    pressure_coeff: float
    visc_coeff: float
    forcing_slope: float
    gravity_coeff: float
    floor: float = 0.0

    def denominator(self, f):
        af = np.abs(f)
        out = self.pressure_coeff * af ** (self.gamma - 2)
        if self.visc_coeff != 0:
            out = out - self.visc_coeff * af ** (self.theta - 2)
        return out

    def forcing(self, z):
        return self.forcing_slope * z

    def gravity(self, z, M):
        return self.gravity_coeff * M / z ** (self.N - 1)


def ode_form(params: PhysicalParams, case, floor_factor: float = DENOMINATOR_FLOOR) -> ProfileOdeForm:
    """Profile equation coefficients for ``case`` (Case1a, Case1b or Case2)."""
    case = SolutionCase.parse(case)
    N, K, kappa, m = params.N, params.K, params.kappa, params.m
    gamma, theta = params.gamma, params.theta
    gravity = params.delta * alpha_const(N)
    if case is SolutionCase.CASE1A:
        A, c_v, F = gamma * K, m * kappa * theta * N, 0.0
    elif case is SolutionCase.CASE1B:
        A, c_v, F = gamma * K, 2 * m * kappa * theta, 2 * (N - 2) * m**2 / N**2
    elif case is SolutionCase.CASE2:
        A, c_v, F = case2_coefficient(params), 0.0, 0.0
    else:
        raise InvalidArgument(f"{case.value} has no Navier-Stokes-Poisson profile equation; see legacy module")
    floor = floor_factor * max(1.0, abs(gamma * K * params.alpha_ic ** (gamma - 2)))
    return ProfileOdeForm(N, gamma, theta, A, c_v, F, gravity, floor)


def ode_rhs(z: float, f: float, M: float, form: ProfileOdeForm) -> tuple[float, float]:
    """(df/dz, dM/dz) of the profile system."""
    D = form.denominator(f)
    if not abs(D) >= form.floor:  # catches nan as well
        raise DegenerateDenominator(z, f)
    df = (form.forcing(z) - form.gravity(z, M)) / D if f != 0 else 0.0
    return df, f * z ** (form.N - 1)


def series_coefficient(form: ProfileOdeForm, alpha_ic: float) -> float:
    """f2 in f(z) = alpha + f2 z**2 / 2 + O(z**4)."""
    D0 = form.denominator(alpha_ic)
    if not abs(D0) >= form.floor:
        raise DegenerateDenominator(0.0, alpha_ic, "profile denominator vanishes at the origin")
    return (form.forcing_slope - form.gravity_coeff * alpha_ic / form.N) / D0


def series_start(form: ProfileOdeForm, alpha_ic: float, z0: float) -> tuple[float, float, float]:
    """Consistent (f, M, f') at a small ``z0`` from the expansion about the origin."""
    f2 = series_coefficient(form, alpha_ic)
    N = form.N
    f = alpha_ic + 0.5 * f2 * z0**2
    M = alpha_ic * z0**N / N + f2 * z0 ** (N + 2) / (2 * (N + 2))
    return f, M, f2 * z0


class StateMap:
    """Change of variable between the profile f and the integrated state u.

    u = f**(gamma-1) (sign preserving) when gamma > 1 and u = ln f when
    gamma = 1.  In u the pressure term becomes an exact derivative, so a
    free boundary where f vanishes like a power is crossed linearly.
    """

    def __init__(self, gamma: float):
        self.log = abs(gamma - 1.0) <= 4 * np.finfo(float).eps
        self.gamma = gamma
        self.p = None if self.log else 1.0 / (gamma - 1.0)
        # du/dz = c * (F z - g M / z**(N-1)) / (A - c_v |f|**(theta-gamma))
        self.c = 1.0 if self.log else gamma - 1.0

    def to_f(self, u):
        if self.log:
            return np.exp(u)
        return np.sign(u) * np.abs(u) ** self.p

    def from_f(self, f):
        if self.log:
            return np.log(f)
        return np.sign(f) * np.abs(f) ** (self.gamma - 1.0)

    def fprime(self, u, du):
        if self.log:
            return np.exp(u) * du
        return self.p * np.abs(u) ** (self.p - 1.0) * du


@dataclass(frozen=True)
class ProfileSolution:
    """Integrated profile with dense output.

    Node arrays begin at z = 0 (from the series) and stop at the first zero,
    the decay cut or ``z_max``.  ``dense`` interpolates the state (u, w = M / z**N) over
    [z0, last step] and may extend a little past ``Z_mu``.
    """

    case: SolutionCase
    params: PhysicalParams
    form: ProfileOdeForm
    z_nodes: np.ndarray
    f_values: np.ndarray
    M_values: np.ndarray
    fprime_values: np.ndarray
    Z_mu: float | None
    support_kind: SupportKind
    dense: DenseTrajectory
    state_map: StateMap
    z0: float
    f2: float
    integrator_stats: dict = field(default_factory=dict)

    @property
    def support_end(self) -> float:
        """Outer radius (in z) of the region where the profile is defined."""
        return self.Z_mu if self.Z_mu is not None else float(self.z_nodes[-1])

    @property
    def total_M(self) -> float:
        return float(self.M_values[-1])

    def evaluate(self, z):
        """(f, f', M) at ``z``, from the series below z0 and dense output above."""
        z = np.asarray(z, dtype=float)
        scalar = z.ndim == 0
        z = np.atleast_1d(z)
        if np.any(z < 0) or np.any(z > self.dense.t_max):
            raise InvalidArgument(f"z outside [0, {self.dense.t_max}]")
        f = np.empty_like(z)
        fp = np.empty_like(z)
        M = np.empty_like(z)
        inner = z < self.z0
        if np.any(inner):
            zi = z[inner]
            a, N = self.params.alpha_ic, self.params.N
            f[inner] = a + 0.5 * self.f2 * zi**2
            fp[inner] = self.f2 * zi
            M[inner] = a * zi**N / N + self.f2 * zi ** (N + 2) / (2 * (N + 2))
        outer = ~inner
        if np.any(outer):
            y = self.dense(z[outer])
            dy = self.dense.derivative(z[outer])
            f[outer] = self.state_map.to_f(y[0])
            fp[outer] = self.state_map.fprime(y[0], dy[0])
            M[outer] = y[1] * z[outer] ** self.params.N
        if scalar:
            return float(f[0]), float(fp[0]), float(M[0])
        return f, fp, M

    def f(self, z):
        if isinstance(z, (float, int)) and self.z0 <= z <= self.dense.t_max:
            return float(self.state_map.to_f(self.dense(float(z))[0]))
        return self.evaluate(z)[0]

    def M(self, z):
        return self.evaluate(z)[2]


def _sign_change(a, b):
    return (a > 0) != (b > 0)


def integrate_profile(
    params: PhysicalParams,
    case,
    z_max: float = 10.0,
    rel_tol: float = 1e-10,
    abs_tol: float = 1e-12,
    z0: float = DEFAULT_Z0,
    eps_cut: float = DEFAULT_EPS_CUT,
) -> ProfileSolution:
    """Integrate the profile of ``case`` outward from the origin.

    Stops at the first zero of f, at the decay cut (f and |f'| both below
    ``eps_cut * alpha``) or at ``z_max``, whichever comes first.
    """
    case = SolutionCase.parse(case)
    validate(params, case).raise_if_invalid()
    if not z_max > z0:
        raise InvalidArgument(f"z_max must exceed z0={z0}")
    if not (0 < rel_tol < 1 and 0 < abs_tol < 1):
        raise InvalidArgument("tolerances must lie in (0, 1)")

    form = ode_form(params, case)
    smap = StateMap(form.gamma)
    alpha = params.alpha_ic
    f2 = series_coefficient(form, alpha)
    f_start, M_start, _ = series_start(form, alpha, z0)
    N = form.N

    def rhs(z, y):
        u, w = y
        f = smap.to_f(u)
        af = abs(f)
        if af > 0:
            D = form.denominator(af)
            if not abs(D) >= form.floor:
                raise DegenerateDenominator(z, f)
        reduced = form.pressure_coeff
        if form.visc_coeff != 0:
            reduced = reduced - form.visc_coeff * af ** (form.theta - form.gamma) if af > 0 else -np.sign(form.visc_coeff) * np.inf
        # gravity g M / z**(N-1) = g w z
        du = smap.c * (form.forcing(z) - form.gravity_coeff * w * z) / reduced
        return np.array([du, (f - N * w) / z])

    outcome = {"kind": SupportKind.TRUNCATED}

    def stop(z_old, y_old, z_new, y_new):
        f_old, f_new = smap.to_f(y_old[0]), smap.to_f(y_new[0])
        if form.visc_coeff != 0 and f_new > 0:
            if _sign_change(form.denominator(f_old), form.denominator(f_new)):
                def f_lin(z):
                    return float(np.interp(z, [z_old, z_new], [f_old, f_new]))

                z_bad = bisect_root(lambda z: form.denominator(f_lin(z)), z_old, z_new)
                raise DegenerateDenominator(z_bad, f_lin(z_bad))
        if f_new <= 0 < f_old:
            outcome["kind"] = SupportKind.ZERO_CROSSING
            return True
        if 0 < f_new < eps_cut * alpha:
            du = rhs(z_new, y_new)[0]
            slope = smap.fprime(y_new[0], du)
            # near a free boundary f ~ u**p is flat too, but u is still heading
            # for zero at a finite rate; only a stalled u counts as decay
            stalled = smap.log or abs(du) * (z_max - z_new) < abs(y_new[0])
            if abs(slope) < eps_cut * alpha and stalled:
                outcome["kind"] = SupportKind.ASYMPTOTIC_DECAY
                return True
        return False

    try:
        traj = integrate(rhs, z0, [smap.from_f(f_start), M_start / z0**N], z_max, rel_tol, abs_tol, stop=stop)
    except StiffnessFailure as exc:
        f_fail = float(smap.to_f(exc.y[0]))
        if f_fail > 0 and form.visc_coeff != 0:
            terms = abs(form.pressure_coeff) * f_fail ** (form.gamma - 2) + abs(form.visc_coeff) * f_fail ** (form.theta - 2)
            if abs(form.denominator(f_fail)) < DENOMINATOR_NEAR_ZERO * terms:
                raise DegenerateDenominator(
                    exc.t, f_fail, f"step size collapsed where D(f) nearly vanishes (z={exc.t:.6g}, f={f_fail:.6g})"
                ) from exc
        raise
    kind = outcome["kind"]

    z_nodes = traj.t.copy()
    u_vals, w_vals = traj.y[:, 0], traj.y[:, 1]
    Z_mu = None
    if kind is SupportKind.ZERO_CROSSING:
        Z_mu = _root_in_last_step(traj)
        keep = z_nodes < Z_mu
        u_end, w_end = traj(Z_mu)
        z_nodes = np.append(z_nodes[keep], Z_mu)
        u_vals = np.append(u_vals[keep], u_end)
        w_vals = np.append(w_vals[keep], w_end)
    f_vals = smap.to_f(u_vals)
    M_vals = w_vals * z_nodes**N
    if Z_mu is not None and len(z_nodes) >= 2:
        # mass of the last partial step from f >= 0 directly, so M never dips at Z_mu
        lo = z_nodes[-2]
        tail, _ = fixed_quad(lambda s: smap.to_f(traj(s)[0]) * s ** (N - 1), lo, Z_mu, n=8)
        M_vals[-1] = M_vals[-2] + max(float(tail), 0.0)
    du = traj.derivative(z_nodes)[0]
    fprime = smap.fprime(u_vals, du)

    z_nodes = np.concatenate([[0.0], z_nodes])
    f_vals = np.concatenate([[alpha], f_vals])
    M_vals = np.concatenate([[0.0], M_vals])
    fprime = np.concatenate([[0.0], fprime])

    stats = traj.stats.as_dict()
    log.info(
        "profile %s: %d steps, %d rejected, support=%s, Z_mu=%s",
        case.value, stats["steps"], stats["rejections"], kind.value, Z_mu,
    )
    return ProfileSolution(
        case=case,
        params=params,
        form=form,
        z_nodes=z_nodes,
        f_values=f_vals,
        M_values=M_vals,
        fprime_values=fprime,
        Z_mu=Z_mu,
        support_kind=kind,
        dense=traj,
        state_map=smap,
        z0=z0,
        f2=f2,
        integrator_stats=stats,
    )


def _root_in_last_step(traj: DenseTrajectory) -> float:
    lo, hi = traj.t[-2], traj.t[-1]
    return bisect_root(lambda z: traj(z)[0], lo, hi)


def first_zero(profile: ProfileSolution) -> float | None:
    """Smallest z where the dense profile changes sign, refined by bisection."""
    traj = profile.dense
    u = traj.y[:, 0]
    if profile.state_map.log:
        return None
    crossings = np.nonzero((u[:-1] > 0) & (u[1:] <= 0))[0]
    if crossings.size == 0:
        return None
    i = crossings[0]
    return bisect_root(lambda z: traj(z)[0], traj.t[i], traj.t[i + 1])


def residual_terms(profile: ProfileSolution, z) -> np.ndarray:
    """Signed terms of the profile equation at ``z``: pressure, viscous, gravity, -forcing."""
    if not 0 < z < profile.z_nodes[-1]:
        raise InvalidArgument(f"z={z} outside (0, {profile.z_nodes[-1]})")
    f, fp, M = profile.evaluate(z)
    if not f > 0:
        raise InvalidArgument(f"profile not positive at z={z}")
    form = profile.form
    pressure = form.pressure_coeff * f ** (form.gamma - 2) * fp
    viscous = -form.visc_coeff * f ** (form.theta - 2) * fp
    return np.array([pressure, viscous, form.gravity(z, M), -form.forcing(z)])


def profile_residual(profile: ProfileSolution, z: float, scaled: bool = False) -> float:
    """Left minus right side of the profile equation with interpolated f, f', M.

    With ``scaled`` the value is divided by the largest term magnitude.
    """
    terms = residual_terms(profile, z)
    res = float(terms.sum())
    if scaled:
        scale = float(np.max(np.abs(terms)))
        return res / scale if scale > 0 else 0.0
    return res


def profile_scale(profile: ProfileSolution, z: float) -> float:
    return float(np.max(np.abs(residual_terms(profile, z))))
