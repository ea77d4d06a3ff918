"""Emden-type profiles of the earlier inviscid collapsing solutions.

Two families are covered:

* power law (N >= 3):  y'' + (N-1)/z y' + alpha(N) / ((2N-2) K) y**(N/(N-2)) = mu
* exponential (N = 2): y'' + y'/z + (2 pi / K) exp(y) = mu

both with y(0) = alpha, y'(0) = 0.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .errors import InvalidArgument
from .integrator import DenseTrajectory, bisect_root, integrate
from .model import alpha_const


class EmdenKind(str, enum.Enum):
    POWER_LAW = "PowerLaw"
    EXPONENTIAL_2D = "Exponential2D"

    @classmethod
    def parse(cls, tag):
        if isinstance(tag, cls):
            return tag
        for kind in cls:
            if kind.value.lower() == str(tag).lower():
                return kind
        raise InvalidArgument(f"unknown Emden profile kind {tag!r}")


@dataclass(frozen=True)
class EmdenProfile:
    kind: EmdenKind
    N: int
    K: float
    mu: float
    alpha_ic: float
    coeff: float
    exponent: float | None
    y_nodes: np.ndarray
    y_values: np.ndarray
    yprime_values: np.ndarray
    Z_mu: float | None
    dense: DenseTrajectory
    z0: float
    integrator_stats: dict

    def nonlinearity(self, y):
        return _nonlinearity(self.kind, self.exponent, y)

    @property
    def support_end(self) -> float:
        return self.Z_mu if self.Z_mu is not None else float(self.y_nodes[-1])

    def evaluate(self, z):
        """(y, y') at ``z`` in [0, end of dense output]."""
        z = float(z)
        if z < 0 or z > self.dense.t_max:
            raise InvalidArgument(f"z={z} outside [0, {self.dense.t_max}]")
        if z < self.z0:
            y2 = (self.mu - self.coeff * self.nonlinearity(self.alpha_ic)) / self.N
            return self.alpha_ic + 0.5 * y2 * z * z, y2 * z
        y, yp = self.dense(z)
        return float(y), float(yp)


def _nonlinearity(kind, exponent, y):
    if kind is EmdenKind.POWER_LAW:
        return np.maximum(y, 0.0) ** exponent
    return np.exp(y)


def emden_coefficients(kind, N: int, K: float) -> tuple[float, float | None]:
    """(coefficient, exponent) of the nonlinear term."""
    kind = EmdenKind.parse(kind)
    if kind is EmdenKind.POWER_LAW:
        return alpha_const(N) / ((2 * N - 2) * K), N / (N - 2)
    return 2 * math.pi / K, None


def integrate_emden(
    kind,
    N: int,
    K: float,
    mu: float,
    alpha_ic: float,
    z_max: float = 20.0,
    rel_tol: float = 1e-10,
    abs_tol: float | None = None,
    z0: float = 1e-6,
) -> EmdenProfile:
    """Integrate an Emden-type profile from the origin.

    Power-law profiles stop at their first zero; beyond it the fractional
    power is clipped to zero and the root is refined on the dense output.
    """
    kind = EmdenKind.parse(kind)
    if not K > 0:
        raise InvalidArgument("K>0 required")
    if int(N) != N:
        raise InvalidArgument("N must be an integer")
    N = int(N)
    if kind is EmdenKind.POWER_LAW:
        if N < 3:
            raise InvalidArgument("PowerLaw profiles need N >= 3")
        if not alpha_ic > 0:
            raise InvalidArgument("alpha_ic>0 required")
    elif N != 2:
        raise InvalidArgument("Exponential2D profiles need N = 2")
    if not z_max > z0:
        raise InvalidArgument(f"z_max must exceed z0={z0}")
    abs_tol = rel_tol * 1e-2 if abs_tol is None else abs_tol

    coeff, exponent = emden_coefficients(kind, N, K)
    y2 = (mu - coeff * _nonlinearity(kind, exponent, alpha_ic)) / N

    def rhs(z, y):
        return np.array([y[1], mu - coeff * _nonlinearity(kind, exponent, y[0]) - (N - 1) / z * y[1]])

    crossed = {"hit": False}

    def stop(z_old, y_old, z_new, y_new):
        if kind is EmdenKind.POWER_LAW and y_new[0] <= 0 < y_old[0]:
            crossed["hit"] = True
            return True
        return False

    traj = integrate(rhs, z0, [alpha_ic + 0.5 * y2 * z0**2, y2 * z0], z_max, rel_tol, abs_tol, stop=stop)

    z_nodes, states = traj.t, traj.y
    Z_mu = None
    if crossed["hit"]:
        Z_mu = bisect_root(lambda z: traj(z)[0], traj.t[-2], traj.t[-1])
        keep = z_nodes < Z_mu
        z_nodes = np.append(z_nodes[keep], Z_mu)
        states = np.vstack([states[keep], traj(Z_mu)])
    return EmdenProfile(
        kind=kind,
        N=N,
        K=K,
        mu=mu,
        alpha_ic=alpha_ic,
        coeff=coeff,
        exponent=exponent,
        y_nodes=np.concatenate([[0.0], z_nodes]),
        y_values=np.concatenate([[alpha_ic], states[:, 0]]),
        yprime_values=np.concatenate([[0.0], states[:, 1]]),
        Z_mu=Z_mu,
        dense=traj,
        z0=z0,
        integrator_stats=traj.stats.as_dict(),
    )


def emden_residual_terms(profile: EmdenProfile, z: float) -> np.ndarray:
    if not 0 < z < profile.y_nodes[-1]:
        raise InvalidArgument(f"z={z} outside (0, {profile.y_nodes[-1]})")
    y, yp = profile.evaluate(z)
    if z >= profile.z0:
        ypp = float(profile.dense.derivative(z)[1])
    else:
        ypp = (profile.mu - profile.coeff * float(profile.nonlinearity(profile.alpha_ic))) / profile.N
    return np.array([ypp, (profile.N - 1) / z * yp, profile.coeff * float(profile.nonlinearity(y)), -profile.mu])


def emden_residual(profile: EmdenProfile, z: float, scaled: bool = False) -> float:
    """|y'' + (N-1)/z y' + coeff g(y) - mu| on the dense output.

    y'' is the derivative of the interpolated y', not the value the ODE
    would assign, so the result measures how well the output satisfies the
    equation.
    """
    terms = emden_residual_terms(profile, z)
    res = abs(float(terms.sum()))
    if scaled:
        scale = float(np.max(np.abs(terms)))
        return res / scale if scale > 0 else 0.0
    return res
