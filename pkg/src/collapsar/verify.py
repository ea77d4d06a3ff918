"""Space-time fields of the self-similar solutions and their PDE residuals.

The density and velocity are assembled from a profile f(z) and a scaling
factor a(t),

    rho(t, r) = f(r / a) / a**N   (zero outside the support),
    V(t, r)   = a'(t) / a(t) * r,

and plugged into the radially symmetric mass and momentum equations.
Derivatives come from the chain rule on the dense profile output; a
central-difference mode exists as a cross-check.
"""

from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate as sp_integrate

from .errors import InvalidArgument
from .model import PhysicalParams, SolutionCase, alpha_const, sphere_area, validate
from .profile import DEFAULT_EPS_CUT, DEFAULT_Z0, ProfileSolution, integrate_profile
from .scaling import ScalingFunction, a_eval, make_scaling

log = logging.getLogger(__name__)

MASS_TERMS = ("rho_t", "V rho_r", "rho V_r", "(N-1)/r rho V")
MOMENTUM_TERMS = ("rho (V_t + V V_r)", "P_r", "delta rho Phi_r", "-mu_r ((N-1)/r V + V_r)", "-mu [...]")


@dataclass(frozen=True)
class RadialSolution:
    profile: ProfileSolution
    scaling: ScalingFunction
    params: PhysicalParams

    @classmethod
    def build(cls, params: PhysicalParams, case, **profile_kwargs) -> "RadialSolution":
        profile = integrate_profile(params, case, **profile_kwargs)
        return cls(profile, make_scaling(params, case), params)

    @property
    def support_end(self) -> float:
        return self.profile.support_end

    def support_radius(self, t: float) -> float:
        return a_eval(self.scaling, t)[0] * self.support_end


def density(sol: RadialSolution, t: float, r: float) -> float:
    """rho(t, r); zero at and beyond the free boundary a(t) Z."""
    if r < 0:
        raise InvalidArgument("r must be non-negative")
    a = a_eval(sol.scaling, t)[0]
    z = r / a
    if z >= sol.support_end:
        return 0.0
    return sol.profile.f(z) / a**sol.params.N


def velocity(sol: RadialSolution, t: float, r: float) -> float:
    a, a_dot, _ = a_eval(sol.scaling, t)
    return a_dot / a * r


def enclosed_profile_mass(sol: RadialSolution, z: float) -> float:
    """int_0^min(z, Z) f(s) s**(N-1) ds, frozen beyond the support."""
    if z >= sol.support_end:
        return sol.profile.total_M
    return sol.profile.M(z)


def phi_r(sol: RadialSolution, t: float, r: float) -> float:
    """Radial potential gradient alpha(N) / r**(N-1) int_0^r (rho - Lambda) s**(N-1) ds.

    The density part of the integral equals M(r / a) for every t, so no
    quadrature is needed.
    """
    if r < 0:
        raise InvalidArgument("r must be non-negative")
    if r == 0:
        return 0.0
    N = sol.params.N
    a = a_eval(sol.scaling, t)[0]
    inner = enclosed_profile_mass(sol, r / a) - sol.params.Lambda * r**N / N
    return alpha_const(N) * inner / r ** (N - 1)


def _interior_state(sol: RadialSolution, t: float, r: float):
    a, a_dot, a_ddot = a_eval(sol.scaling, t)
    if not 0 < r < a * sol.support_end:
        raise InvalidArgument(f"r={r} outside the open support (0, {a * sol.support_end}) at t={t}")
    z = r / a
    f, fp, _ = sol.profile.evaluate(z)
    return a, a_dot, a_ddot, z, f, fp


def _fd_derivatives(sol: RadialSolution, t: float, r: float):
    """(rho_t, rho_r) by fourth-order central differences of ``density``."""
    h_r = 1e-3 * r
    h_r = min(h_r, 0.25 * (sol.support_radius(t) - r))
    h_t = 1e-3 * max(1.0, abs(t))
    T = sol.scaling.blowup_time
    if T is not None:
        h_t = min(h_t, 0.25 * (T - t))

    def d(g, x, h):
        return (-g(x + 2 * h) + 8 * g(x + h) - 8 * g(x - h) + g(x - 2 * h)) / (12 * h)

    rho_t = d(lambda s: density(sol, s, r), t, h_t)
    rho_r = d(lambda s: density(sol, t, s), r, h_r)
    return rho_t, rho_r


def _mass_parts(sol, t, r, derivatives="analytic", velocity_scale=1.0):
    """(c, b) with the four mass-equation terms equal to c * b."""
    a, a_dot, _, z, f, fp = _interior_state(sol, t, r)
    N = sol.params.N
    s = velocity_scale
    if derivatives == "analytic":
        # every term carries a'/a**(N+1); factoring it out lets the bracket
        # cancel without the rounding of four separately scaled products
        c = a_dot / a ** (N + 1)
        return c, np.array([-(N * f + z * fp), s * z * fp, s * f, s * (N - 1) * f])
    if derivatives != "fd":
        raise InvalidArgument(f"unknown derivative mode {derivatives!r}")
    rho_t, rho_r = _fd_derivatives(sol, t, r)
    rho = f / a**N
    H = s * a_dot / a
    return 1.0, np.array([rho_t, H * r * rho_r, rho * H, (N - 1) / r * rho * H * r])


def mass_terms(
    sol: RadialSolution,
    t: float,
    r: float,
    derivatives: str = "analytic",
    velocity_scale: float = 1.0,
) -> np.ndarray:
    """The four terms of rho_t + V rho_r + rho V_r + (N-1)/r rho V.

    ``velocity_scale`` multiplies V, which is only useful to show that the
    residual notices a wrong velocity field.
    """
    c, b = _mass_parts(sol, t, r, derivatives, velocity_scale)
    return c * b


def momentum_terms(sol: RadialSolution, t: float, r: float, derivatives: str = "analytic") -> np.ndarray:
    """Signed terms whose sum is LHS - RHS of the radial momentum equation.

    Viscosity enters as mu(rho) = kappa rho**theta with
    RHS = mu_r ((N-1)/r V + V_r) + mu [-(N-1)/r**2 V + (N-1)/r V_r + V_rr].
    For V = (a'/a) r the acceleration V_t + V V_r is (a''/a) r and the
    bracket multiplying mu vanishes identically, so it is reported as 0.
    """
    a, a_dot, a_ddot, z, f, fp = _interior_state(sol, t, r)
    if not f > 0:
        raise InvalidArgument(f"profile not positive at z={z}")
    p = sol.params
    N = p.N
    rho = f / a**N
    if derivatives == "analytic":
        rho_r = fp / a ** (N + 1)
    elif derivatives == "fd":
        rho_r = _fd_derivatives(sol, t, r)[1]
    else:
        raise InvalidArgument(f"unknown derivative mode {derivatives!r}")
    H = a_dot / a

    inertia = rho * (a_ddot / a) * r
    pressure = p.K * p.gamma * rho ** (p.gamma - 1) * rho_r
    gravity = p.delta * rho * phi_r(sol, t, r)
    mu_r = p.kappa * p.theta * rho ** (p.theta - 1) * rho_r
    visc_div = mu_r * ((N - 1) * H + H)
    return np.array([inertia, pressure, gravity, -visc_div, 0.0])


def _reduce(terms: np.ndarray, scaled: bool) -> float:
    res = float(terms.sum())
    if not scaled:
        return res
    scale = float(np.max(np.abs(terms)))
    return res / scale if scale > 0 else 0.0


def _mass_reduce(c: float, b: np.ndarray) -> tuple[float, float]:
    """(raw residual, term scale) from the factored mass terms."""
    return float(c * b.sum()), float(abs(c) * np.max(np.abs(b)))


def mass_residual(
    sol: RadialSolution,
    t: float,
    r: float,
    scaled: bool = False,
    derivatives: str = "analytic",
    velocity_scale: float = 1.0,
) -> float:
    """Sum of the mass-equation terms, optionally divided by the largest of them."""
    raw, scale = _mass_reduce(*_mass_parts(sol, t, r, derivatives, velocity_scale))
    if not scaled:
        return raw
    return raw / scale if scale > 0 else 0.0


def momentum_residual(sol: RadialSolution, t: float, r: float, scaled: bool = False, derivatives: str = "analytic") -> float:
    return _reduce(momentum_terms(sol, t, r, derivatives), scaled)


def _quad_points(sol: RadialSolution, a: float, upper: float):
    nodes = a * sol.profile.dense.t
    return nodes[(nodes > 0) & (nodes < upper)]


def total_mass(sol: RadialSolution, t: float) -> float:
    """N Vol(N) int_0^{a Z} rho(t, r) r**(N-1) dr by adaptive quadrature."""
    N = sol.params.N
    a = a_eval(sol.scaling, t)[0]
    upper = a * sol.support_end
    inner = _quad_points(sol, a, upper)
    edges = np.concatenate([[0.0], inner, [upper]])
    total = 0.0
    for lo, hi in zip(edges[:-1], edges[1:]):
        if hi <= lo:
            continue
        # stay inside the support: density() is zero exactly at the boundary
        val, _ = sp_integrate.quad(lambda r: sol.profile.f(r / a) / a**N * r ** (N - 1), lo, hi, epsabs=0.0, epsrel=1e-13, limit=100)
        total += val
    return sphere_area(N) * total


def analytic_total_mass(sol: RadialSolution) -> float:
    return sphere_area(sol.params.N) * enclosed_profile_mass(sol, sol.support_end)


def central_density(sol: RadialSolution, t: float) -> float:
    return density(sol, t, 0.0)


@dataclass
class ResidualReport:
    """Pointwise and summary residuals of one verification run."""

    case: SolutionCase
    params: PhysicalParams
    rel_tol: float
    t_grid: np.ndarray
    r_grid: np.ndarray
    mass_raw: np.ndarray
    mass_scaled: np.ndarray
    momentum_raw: np.ndarray
    momentum_scaled: np.ndarray
    mass_scale: np.ndarray
    momentum_scale: np.ndarray
    Z_mu: float | None
    support_end: float
    support_kind: str
    derivatives: str = "analytic"
    worst: dict = field(default_factory=dict)

    @property
    def mass_residual_max(self) -> float:
        return float(np.max(np.abs(self.mass_scaled)))

    @property
    def mass_residual_l2(self) -> float:
        return float(np.sqrt(np.mean(self.mass_scaled**2)))

    @property
    def momentum_residual_max(self) -> float:
        return float(np.max(np.abs(self.momentum_scaled)))

    @property
    def momentum_residual_l2(self) -> float:
        return float(np.sqrt(np.mean(self.momentum_scaled**2)))

    @property
    def mass_raw_max(self) -> float:
        return float(np.max(np.abs(self.mass_raw)))

    @property
    def momentum_raw_max(self) -> float:
        return float(np.max(np.abs(self.momentum_raw)))

    def rows(self):
        """(t, r, mass_raw, mass_scaled, momentum_raw, momentum_scaled) per grid point."""
        for i, t in enumerate(self.t_grid):
            for j in range(self.r_grid.shape[1]):
                yield (
                    float(t),
                    float(self.r_grid[i, j]),
                    float(self.mass_raw[i, j]),
                    float(self.mass_scaled[i, j]),
                    float(self.momentum_raw[i, j]),
                    float(self.momentum_scaled[i, j]),
                )


def _worst(t_grid, r_grid, values, count=5):
    flat = np.abs(values).ravel()
    order = np.argsort(flat, kind="stable")[::-1][:count]
    rows, cols = np.unravel_index(order, values.shape)
    return [(float(t_grid[i]), float(r_grid[i, j]), float(values[i, j])) for i, j in zip(rows, cols)]


def default_t_grid(scaling: ScalingFunction, t_samples: int, t_max: float | None = None) -> np.ndarray:
    if t_max is None:
        T = scaling.blowup_time
        t_max = 0.9 * T if T is not None else 1.0
    if scaling.blowup_time is not None and t_max >= scaling.blowup_time:
        raise InvalidArgument(f"t_max={t_max} reaches the blowup time {scaling.blowup_time}")
    return np.linspace(0.0, t_max, t_samples)


def verify_solution(
    params: PhysicalParams,
    case,
    t_samples: int = 5,
    r_samples_per_t: int = 50,
    rel_tol: float = 1e-10,
    abs_tol: float | None = None,
    z_max: float = 10.0,
    t_max: float | None = None,
    z0: float = DEFAULT_Z0,
    eps_cut: float = DEFAULT_EPS_CUT,
    derivatives: str = "analytic",
    workers: int | None = None,
) -> ResidualReport:
    """Integrate the profile, build a(t) and tabulate both residuals on a (t, r) grid.

    At each time the radii are evenly spaced strictly inside the support,
    r_j = a(t) Z j / (r_samples_per_t + 1).
    """
    case = SolutionCase.parse(case)
    validate(params, case).raise_if_invalid()
    if t_samples < 1 or r_samples_per_t < 1:
        raise InvalidArgument("grid needs at least one sample in t and r")
    abs_tol = rel_tol * 1e-2 if abs_tol is None else abs_tol
    sol = RadialSolution.build(params, case, z_max=z_max, rel_tol=rel_tol, abs_tol=abs_tol, z0=z0, eps_cut=eps_cut)

    t_grid = default_t_grid(sol.scaling, t_samples, t_max)
    frac = np.arange(1, r_samples_per_t + 1) / (r_samples_per_t + 1)
    r_grid = np.array([sol.support_radius(t) * frac for t in t_grid])
    shape = r_grid.shape
    out = {name: np.empty(shape) for name in ("mr", "ms", "mc", "pr", "ps", "pc")}

    def work(ij):
        i, j = ij
        t, r = t_grid[i], r_grid[i, j]
        mt = _mass_reduce(*_mass_parts(sol, t, r, derivatives))
        pt = momentum_terms(sol, t, r, derivatives)
        return ij, mt, pt

    points = [(i, j) for i in range(shape[0]) for j in range(shape[1])]
    if workers and workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            results = list(pool.map(work, points))
    else:
        results = map(work, points)
    for (i, j), mt, pt in results:
        (m_raw, ms), ps = mt, float(np.max(np.abs(pt)))
        out["mr"][i, j], out["mc"][i, j] = m_raw, ms
        out["ms"][i, j] = m_raw / ms if ms > 0 else 0.0
        out["pr"][i, j], out["pc"][i, j] = pt.sum(), ps
        out["ps"][i, j] = pt.sum() / ps if ps > 0 else 0.0

    report = ResidualReport(
        case=case,
        params=params,
        rel_tol=rel_tol,
        t_grid=t_grid,
        r_grid=r_grid,
        mass_raw=out["mr"],
        mass_scaled=out["ms"],
        momentum_raw=out["pr"],
        momentum_scaled=out["ps"],
        mass_scale=out["mc"],
        momentum_scale=out["pc"],
        Z_mu=sol.profile.Z_mu,
        support_end=sol.support_end,
        support_kind=sol.profile.support_kind.value,
        derivatives=derivatives,
    )
    report.worst = {
        "mass": _worst(t_grid, r_grid, report.mass_scaled),
        "momentum": _worst(t_grid, r_grid, report.momentum_scaled),
    }
    log.info(
        "verify %s: mass max %.3e, momentum max %.3e (scaled)",
        case.value, report.mass_residual_max, report.momentum_residual_max,
    )
    return report


def self_similar_amplitude(sol: RadialSolution, t: float, z: float) -> float:
    """density(t, a(t) z) * a(t)**N, which should equal f(z) for every t."""
    a = a_eval(sol.scaling, t)[0]
    return density(sol, t, a * z) * a**sol.params.N
