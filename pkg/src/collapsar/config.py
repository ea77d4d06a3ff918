"""Run configuration read from a single JSON document."""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

from .errors import InvalidArgument, ParameterError
from .legacy import EmdenKind
from .model import PhysicalParams, SolutionCase, exponents_for

FORMATS = ("csv", "json", "svg")


@dataclass
class RunConfig:
    """Everything one CLI run needs.

    Physical parameters sit at the top level under their ``PhysicalParams``
    names.  ``gamma`` and ``theta`` default to the exponents the case
    prescribes; the legacy keys (``emden_kind``, ``mu``, ``a0``, ``a1``,
    ``t_max``) only matter for the ``legacy`` and legacy ``blowup`` runs.
    """

    case: str = "Case1a"
    # physical parameters
    N: int = 3
    K: float = 1.0
    kappa: float = 0.0
    gamma: float | None = None
    theta: float | None = None
    delta: int = 1
    Lambda: float = 0.0
    m: float = -1.0
    n: float = 1.0
    alpha_ic: float = 1.0
    lambda_legacy: float = 0.0
    # grid and tolerances
    z_max: float = 10.0
    t_samples: int = 5
    r_samples: int = 50
    rel_tol: float = 1e-10
    abs_tol: float = 1e-12
    z0: float = 1e-6
    eps_cut: float = 1e-8
    t_max: float | None = None
    derivatives: str = "analytic"
    workers: int = 1
    # pass/fail thresholds on the scaled residual maxima
    mass_threshold: float = 1e-10
    momentum_threshold: float = 1e-6
    # blowup report
    amplification_factors: list = field(default_factory=lambda: [1e3, 1e6])
    approach_decades: int = 6
    # legacy equations
    emden_kind: str = "PowerLaw"
    mu: float = 0.0
    a0: float = 1.0
    a1: float = 0.0
    # output
    out_dir: str = "collapsar_out"
    formats: list = field(default_factory=lambda: ["csv", "json"])

    @classmethod
    def from_dict(cls, data: dict) -> "RunConfig":
        if not isinstance(data, dict):
            raise InvalidArgument("configuration must be a JSON object")
        known = {f.name for f in fields(cls)}
        unknown = sorted(set(data) - known)
        if unknown:
            raise InvalidArgument(f"unknown configuration keys: {', '.join(unknown)}")
        cfg = cls(**data)
        cfg.check()
        return cfg

    @classmethod
    def from_json(cls, text: str) -> "RunConfig":
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise InvalidArgument(f"malformed JSON configuration: {exc}") from exc
        return cls.from_dict(data)

    @classmethod
    def load(cls, path) -> "RunConfig":
        try:
            text = Path(path).read_text(encoding="utf-8")
        except OSError as exc:
            raise InvalidArgument(f"cannot read configuration {path}: {exc}") from exc
        return cls.from_json(text)

    def to_dict(self) -> dict:
        return asdict(self)

    def check(self) -> None:
        """Type and range checks that do not depend on the physics."""
        bad = []
        for name in ("N", "t_samples", "r_samples", "delta", "workers", "approach_decades"):
            v = getattr(self, name)
            if isinstance(v, bool) or not isinstance(v, int):
                bad.append(f"{name} must be an integer")
        numeric = ("K", "kappa", "Lambda", "m", "n", "alpha_ic", "lambda_legacy", "z_max", "rel_tol", "abs_tol",
                   "z0", "eps_cut", "mass_threshold", "momentum_threshold", "mu", "a0", "a1")
        for name in numeric:
            v = getattr(self, name)
            if isinstance(v, bool) or not isinstance(v, (int, float)) or not math.isfinite(v):
                bad.append(f"{name} must be a finite number")
        for name in ("gamma", "theta", "t_max"):
            v = getattr(self, name)
            if v is not None and (isinstance(v, bool) or not isinstance(v, (int, float))):
                bad.append(f"{name} must be a number or null")
        if not isinstance(self.case, str):
            bad.append("case must be a string")
        else:
            try:
                SolutionCase.parse(self.case)
            except InvalidArgument as exc:
                bad.append(str(exc))
        try:
            EmdenKind.parse(self.emden_kind)
        except InvalidArgument as exc:
            bad.append(str(exc))
        if self.derivatives not in ("analytic", "fd"):
            bad.append("derivatives must be 'analytic' or 'fd'")
        if not isinstance(self.formats, list) or not set(self.formats) <= set(FORMATS):
            bad.append(f"formats must be a list drawn from {FORMATS}")
        if not isinstance(self.amplification_factors, list) or not all(
            isinstance(x, (int, float)) and not isinstance(x, bool) and x > 1 for x in self.amplification_factors
        ):
            bad.append("amplification_factors must be numbers greater than 1")
        if not bad:
            if not (0 < self.rel_tol < 1 and 0 < self.abs_tol < 1):
                bad.append("rel_tol and abs_tol must lie in (0, 1)")
            if self.t_samples < 1 or self.r_samples < 1:
                bad.append("t_samples and r_samples must be positive")
            if self.mass_threshold < 0 or self.momentum_threshold < 0:
                bad.append("thresholds must be non-negative")
        if bad:
            raise ParameterError(bad)

    @property
    def solution_case(self) -> SolutionCase:
        return SolutionCase.parse(self.case)

    def params(self) -> PhysicalParams:
        case = self.solution_case
        try:
            gamma, theta = exponents_for(case, self.N)
        except InvalidArgument:
            # leave the exponents to validation, which reports the real problem
            gamma, theta = 1.0, 1.0
        return PhysicalParams(
            N=self.N,
            K=float(self.K),
            kappa=float(self.kappa),
            gamma=float(gamma if self.gamma is None else self.gamma),
            theta=float(theta if self.theta is None else self.theta),
            delta=self.delta,
            Lambda=float(self.Lambda),
            m=float(self.m),
            n=float(self.n),
            alpha_ic=float(self.alpha_ic),
            lambda_legacy=float(self.lambda_legacy),
        )
