"""Dormand-Prince 5(4) integrator with continuous (dense) output.

The continuous extension is the standard fourth-order interpolant of
Dormand & Prince (Hairer, Norsett & Wanner, "Solving ODEs I", sec. II.6).
Both the state and its derivative can be evaluated anywhere inside an
accepted step, which the residual checks rely on.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import NumericalFailure, StiffnessFailure

C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0])
A = [
    np.array([]),
    np.array([1 / 5]),
    np.array([3 / 40, 9 / 40]),
    np.array([44 / 45, -56 / 15, 32 / 9]),
    np.array([19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729]),
    np.array([9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656]),
]
B = np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84])
# difference between the 5th and embedded 4th order weights (7 stages, FSAL)
E = np.array([-71 / 57600, 0.0, 71 / 16695, -71 / 1920, 17253 / 339200, -22 / 525, 1 / 40])
# dense output: y(t + x h) = y + h * K^T P [x, x^2, x^3, x^4]
P = np.array(
    [
        [1.0, -8048581381 / 2820520608, 8663915743 / 2820520608, -12715105075 / 11282082432],
        [0.0, 0.0, 0.0, 0.0],
        [0.0, 131558114200 / 32700410799, -68118460800 / 10900136933, 87487479700 / 32700410799],
        [0.0, -1754552775 / 470086768, 14199869525 / 1410260304, -10690763975 / 1880347072],
        [0.0, 127303824393 / 49829197408, -318862633887 / 49829197408, 701980252875 / 199316789632],
        [0.0, -282668133 / 205662961, 2019193451 / 616988883, -1453857185 / 822651844],
        [0.0, 40617522 / 29380423, -110615467 / 29380423, 69997945 / 29380423],
    ]
)
ORDER = 5
SAFETY = 0.9
MIN_FACTOR = 0.2
MAX_FACTOR = 10.0


@dataclass
class StepStats:
    accepted: int = 0
    rejected: int = 0
    evaluations: int = 0
    rel_tol: float = 0.0
    abs_tol: float = 0.0

    def as_dict(self):
        return {
            "steps": self.accepted,
            "rejections": self.rejected,
            "evaluations": self.evaluations,
            "rel_tol": self.rel_tol,
            "abs_tol": self.abs_tol,
        }


@dataclass
class DenseTrajectory:
    """Piecewise polynomial solution over the accepted steps.

    ``t`` holds the step boundaries, ``y`` the states there and ``Q`` the
    per-step interpolation coefficients of shape (steps, dim, 4).
    """

    t: np.ndarray
    y: np.ndarray
    Q: np.ndarray
    stats: StepStats = field(default_factory=StepStats)

    @property
    def t_min(self):
        return self.t[0]

    @property
    def t_max(self):
        return self.t[-1]

    def _locate(self, t):
        t = np.asarray(t, dtype=float)
        if np.any(t < self.t[0] - 1e-14 * abs(self.t[0])) or np.any(t > self.t[-1] * (1 + 1e-14) + 1e-300):
            raise ValueError(f"evaluation point outside [{self.t[0]}, {self.t[-1]}]")
        idx = np.clip(np.searchsorted(self.t, t, side="right") - 1, 0, len(self.t) - 2)
        h = self.t[idx + 1] - self.t[idx]
        x = (t - self.t[idx]) / h
        return t, idx, h, x

    def __call__(self, t):
        """State at ``t`` (scalar -> shape (dim,), array -> shape (dim, len(t)))."""
        if isinstance(t, (float, int)):
            return self._scalar(float(t))
        t, idx, h, x = self._locate(t)
        powers = np.stack([x, x**2, x**3, x**4], axis=-1)
        q = self.Q[idx]
        val = self.y[idx] + h[..., None] * np.einsum("...dk,...k->...d", q, powers)
        return val.T if val.ndim == 2 else val

    def _scalar(self, t: float) -> np.ndarray:
        ts = self.t
        if not ts[0] - 1e-14 * abs(ts[0]) <= t <= ts[-1] * (1 + 1e-14) + 1e-300:
            raise ValueError(f"evaluation point outside [{ts[0]}, {ts[-1]}]")
        i = min(max(int(np.searchsorted(ts, t, side="right")) - 1, 0), len(ts) - 2)
        h = ts[i + 1] - ts[i]
        x = (t - ts[i]) / h
        return self.y[i] + h * (self.Q[i] @ np.array([x, x * x, x**3, x**4]))

    def derivative(self, t):
        """Time derivative of the interpolant at ``t``."""
        t, idx, h, x = self._locate(t)
        dpowers = np.stack([np.ones_like(x), 2 * x, 3 * x**2, 4 * x**3], axis=-1)
        q = self.Q[idx]
        val = np.einsum("...dk,...k->...d", q, dpowers)
        return val.T if val.ndim == 2 else val

    def step_bracket(self, t):
        """Index i of the step [t_i, t_{i+1}] containing ``t``."""
        return int(self._locate(t)[1])


def _rms_norm(x):
    return np.sqrt(np.mean(x * x))


def integrate(
    fun: Callable[[float, np.ndarray], np.ndarray],
    t0: float,
    y0,
    t_end: float,
    rel_tol: float = 1e-10,
    abs_tol: float = 1e-12,
    first_step: float | None = None,
    max_step: float = np.inf,
    max_steps: int = 1_000_000,
    stop: Callable[[float, np.ndarray, float, np.ndarray], bool] | None = None,
) -> DenseTrajectory:
    """Integrate ``y' = fun(t, y)`` from ``t0`` towards ``t_end`` (``t_end > t0``).

    ``stop(t_old, y_old, t_new, y_new)`` is consulted after each accepted
    step; returning True ends the integration with that step included.
    Raises StiffnessFailure when the step size underflows.
    """
    y = np.array(y0, dtype=float)
    t = float(t0)
    stats = StepStats(rel_tol=rel_tol, abs_tol=abs_tol)
    f = np.asarray(fun(t, y), dtype=float)
    stats.evaluations += 1

    if first_step is None:
        scale = abs_tol + rel_tol * np.abs(y)
        d0, d1 = _rms_norm(y / scale), _rms_norm(f / scale)
        h = 1e-6 if d0 < 1e-5 or d1 < 1e-5 else 0.01 * d0 / d1
        h = min(h, t_end - t, max_step)
    else:
        h = min(first_step, t_end - t, max_step)

    ts, ys, qs = [t], [y.copy()], []
    K = np.empty((7, y.size))
    step_rejected = False
    failure = None
    while t < t_end:
        if len(qs) >= max_steps:
            raise StiffnessFailure(t, y, f"step limit {max_steps} exceeded at t={t:.6g}")
        h_min = 16 * np.spacing(t)
        if h < h_min:
            if failure is not None:
                raise failure
            raise StiffnessFailure(t, y)
        if t + h > t_end:
            h = t_end - t

        # a failing trial stage rejects the step; the failure surfaces only on underflow
        try:
            K[0] = f
            for s in range(1, 6):
                K[s] = fun(t + C[s] * h, y + h * (A[s] @ K[:s]))
            y_new = y + h * (B @ K[:6])
            f_new = np.asarray(fun(t + h, y_new), dtype=float)
            K[6] = f_new
            failure = None
        except NumericalFailure as exc:
            failure = exc
        stats.evaluations += 6

        if failure is not None or not np.all(np.isfinite(K)):
            err = np.inf
        else:
            scale = abs_tol + rel_tol * np.maximum(np.abs(y), np.abs(y_new))
            err = _rms_norm(h * (E @ K) / scale)

        if err <= 1.0:
            factor = MAX_FACTOR if err == 0 else min(MAX_FACTOR, SAFETY * err ** (-1 / ORDER))
            if step_rejected:
                factor = min(1.0, factor)
            t_new = t + h if t + h < t_end else t_end
            qs.append(K.T @ P)
            stats.accepted += 1
            ts.append(t_new)
            ys.append(y_new.copy())
            done = stop is not None and stop(t, y, t_new, y_new)
            t, y, f = t_new, y_new, f_new
            h = min(h * factor, max_step)
            step_rejected = False
            if done:
                break
        else:
            stats.rejected += 1
            factor = MIN_FACTOR if not np.isfinite(err) else max(MIN_FACTOR, SAFETY * err ** (-1 / ORDER))
            h *= factor
            step_rejected = True

    Q = np.array(qs) if qs else np.zeros((0, y.size, 4))
    return DenseTrajectory(np.array(ts), np.array(ys), Q, stats)


def bisect_root(g: Callable[[float], float], lo: float, hi: float, rel_tol: float = 1e-12, max_iter: int = 200) -> float:
    """Root of ``g`` in [lo, hi] by bisection, assuming a sign change."""
    g_lo = g(lo)
    if g_lo == 0:
        return lo
    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        g_mid = g(mid)
        if g_mid == 0:
            return mid
        if np.sign(g_mid) == np.sign(g_lo):
            lo, g_lo = mid, g_mid
        else:
            hi = mid
        if hi - lo <= rel_tol * abs(hi):
            break
    return 0.5 * (lo + hi)
