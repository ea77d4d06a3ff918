"""Acceptance criteria 1-9, one pass/fail line each.

Run under pytest (the lines appear in the terminal summary) or directly:
``python tests/test_acceptance.py``.  Tolerances are pinned below.
"""

from __future__ import annotations

import json
import math
import sys
from importlib import resources
from pathlib import Path

import numpy as np
import pytest
from scipy.integrate import quad, solve_ivp

sys.path.insert(0, str(Path(__file__).parent))

from conftest import case_params  # noqa: E402

from collapsar.cli import main as cli_main  # noqa: E402
from collapsar.legacy import integrate_emden  # noqa: E402
from collapsar.model import alpha_const  # noqa: E402
from collapsar.scaling import a_eval, emden_scaling_integrate, relative_energy_drift  # noqa: E402
from collapsar.verify import RadialSolution, central_density, density, phi_r, total_mass, verify_solution  # noqa: E402

MASS_TOL = 1e-10           # criterion 1, max scaled mass residual
MOMENTUM_TOL = 1e-6        # criterion 2, max scaled momentum residual at rel_tol 1e-10
CONVERGENCE_FACTOR = 10.0  # criterion 2, reduction when rel_tol goes 1e-10 -> 1e-12
TRIVIAL_RAW_TOL = 1e-13    # criterion 3
N2_TOL = 1e-10             # criterion 4
BLOWUP_REL_TOL = 1e-9      # criterion 5
LANE_EMDEN_Z = 6.8968      # criterion 6
LANE_EMDEN_TOL = 1e-3
ENERGY_TOL = 1e-9          # criterion 7
PHI_REL_TOL = 1e-9         # criterion 8
PHI_BACKGROUND_TOL = 1e-12
GRID = (5, 50)
RUNS = ("Case1a", "Case1b", "Case2")

RESULTS: list[str] = []


def record(number: int, ok: bool, detail: str) -> bool:
    RESULTS.append(f"criterion {number}: {'PASS' if ok else 'FAIL'} | {detail}")
    return ok


def _report(case, rel_tol):
    return verify_solution(case_params(case), case, *GRID, rel_tol=rel_tol, abs_tol=rel_tol * 1e-2)


def criterion_1() -> bool:
    worst = {case: _report(case, 1e-10).mass_residual_max for case in RUNS}
    ok = all(v <= MASS_TOL for v in worst.values())
    detail = ", ".join(f"{c} {v:.2e}" for c, v in worst.items())
    return record(1, ok, f"max scaled mass residual {detail} (limit {MASS_TOL:g})")


def criterion_2() -> bool:
    parts, ok = [], True
    for case in RUNS:
        coarse = _report(case, 1e-10).momentum_residual_max
        fine = _report(case, 1e-12).momentum_residual_max
        ratio = coarse / fine if fine > 0 else math.inf
        ok &= coarse <= MOMENTUM_TOL and ratio >= CONVERGENCE_FACTOR
        parts.append(f"{case} {coarse:.2e} -> {fine:.2e} (x{ratio:.0f})")
    return record(2, ok, f"momentum {'; '.join(parts)} (limit {MOMENTUM_TOL:g}, reduction >= {CONVERGENCE_FACTOR:g})")


def criterion_3() -> bool:
    p = case_params("Case1a", delta=0)
    sol = RadialSolution.build(p, "Case1a")
    f_dev = float(np.max(np.abs(sol.profile.f_values - p.alpha_ic)))
    report = verify_solution(p, "Case1a", *GRID)
    ok = f_dev <= np.finfo(float).eps * p.alpha_ic and max(report.mass_raw_max, report.momentum_raw_max) <= TRIVIAL_RAW_TOL
    return record(3, ok, f"max |f - alpha| {f_dev:.1e}, raw mass {report.mass_raw_max:.1e}, raw momentum "
                         f"{report.momentum_raw_max:.1e} (limit {TRIVIAL_RAW_TOL:g})")


def criterion_4() -> bool:
    a = RadialSolution.build(case_params("Case1a", N=2), "Case1a")
    b = RadialSolution.build(case_params("Case1b", N=2), "Case1b")
    z = np.linspace(0.0, min(a.support_end, b.support_end), 501)
    df = float(np.max(np.abs(a.profile.evaluate(z)[0] - b.profile.evaluate(z)[0])))
    t = np.linspace(0.0, 0.999, 200)
    da = max(float(np.max(np.abs(np.subtract(a_eval(a.scaling, s), a_eval(b.scaling, s))))) for s in t)
    ok = df <= N2_TOL and da <= N2_TOL
    return record(4, ok, f"N=2 Case1a vs Case1b: max |df| {df:.1e}, max |d(a, a', a'')| {da:.1e} (limit {N2_TOL:g})")


def criterion_5() -> bool:
    p = case_params("Case1a")
    sol = RadialSolution.build(p, "Case1a")
    T = sol.scaling.blowup_time
    t = 1.0 - 1e-3
    rho_c = central_density(sol, t)
    closed = p.alpha_ic * 10.0 ** (3 * p.N)
    dens_err = abs(rho_c / closed - 1.0)
    masses = [total_mass(sol, s) for s in (0.0, 0.5, 0.999)]
    mass_err = (max(masses) - min(masses)) / max(masses)
    ok = T == 1.0 and dens_err <= BLOWUP_REL_TOL and mass_err <= BLOWUP_REL_TOL
    return record(5, ok, f"T = {T}, central density rel err {dens_err:.1e}, total mass spread {mass_err:.1e} "
                         f"(limit {BLOWUP_REL_TOL:g})")


def _lane_emden_oracle() -> float:
    """First zero of y'' + 2/z y' + y**3 = 0 with scipy's DOP853 at rel_tol 1e-12."""
    def rhs(z, y):
        return [y[1], -max(y[0], 0.0) ** 3 - 2.0 / z * y[1]]

    def hit(z, y):
        return y[0]

    hit.terminal, hit.direction = True, -1
    z0 = 1e-6
    sol = solve_ivp(rhs, (z0, 20.0), [1.0 - z0**2 / 6, -z0 / 3], method="DOP853", rtol=1e-12, atol=1e-14, events=hit)
    return float(sol.t_events[0][0])


def criterion_6() -> bool:
    prof = integrate_emden("PowerLaw", 3, math.pi, 0.0, 1.0, z_max=20.0)
    oracle = _lane_emden_oracle()
    ok = (prof.Z_mu is not None and abs(prof.Z_mu - LANE_EMDEN_Z) <= LANE_EMDEN_TOL
          and abs(prof.Z_mu - oracle) <= LANE_EMDEN_TOL)
    return record(6, ok, f"Lane-Emden first zero {prof.Z_mu:.9f}, oracle {oracle:.9f} "
                         f"(target {LANE_EMDEN_Z} +/- {LANE_EMDEN_TOL:g})")


def criterion_7() -> bool:
    s = emden_scaling_integrate(1.0, 1.0, 0.0, 3, 5.0)
    tr = s.trajectory
    t = np.linspace(0.0, tr.t_end, 20001)
    a, a_dot = tr.dense(t)
    dense_drift = relative_energy_drift(a, a_dot, 1.0, 3)
    ok = tr.collapsed and tr.energy_drift <= ENERGY_TOL and dense_drift <= ENERGY_TOL
    return record(7, ok, f"energy drift {tr.energy_drift:.1e} at nodes, {dense_drift:.1e} on dense output, "
                         f"collapse at t = {tr.collapse_time:.10f}, a(t_end) = {a[-1]:.1e} (limit {ENERGY_TOL:g})")


def _phi_oracle(sol, t, r):
    N = sol.params.N
    a = a_eval(sol.scaling, t)[0]
    breaks = a * sol.profile.dense.t
    breaks = breaks[(breaks > 0) & (breaks < r)]
    val, _ = quad(lambda s: (density(sol, t, s) - sol.params.Lambda) * s ** (N - 1), 0.0, r,
                  points=breaks if breaks.size else None, limit=breaks.size + 100, epsabs=0.0, epsrel=1e-12)
    return alpha_const(N) * val / r ** (N - 1)


def criterion_8() -> bool:
    rng = np.random.default_rng(20261016)
    worst = 0.0
    for case in ("Case1a", "Case2"):
        sol = RadialSolution.build(case_params(case), case)
        for _ in range(50):
            t = rng.uniform(0.0, 0.9)
            r = rng.uniform(0.01, 1.0) * sol.support_radius(t)
            ref = _phi_oracle(sol, t, r)
            worst = max(worst, abs(phi_r(sol, t, r) - ref) / abs(ref))
    const = RadialSolution.build(case_params("Case1a", delta=0, kappa=0.0), "Case1a", z_max=1.0)
    synthetic = RadialSolution(const.profile, const.scaling, const.params.replace(Lambda=const.params.alpha_ic))
    background = max(abs(phi_r(synthetic, 0.0, r)) for r in np.linspace(0.01, 0.99, 100))
    ok = worst <= PHI_REL_TOL and background <= PHI_BACKGROUND_TOL
    return record(8, ok, f"phi_r vs quadrature max rel err {worst:.1e} over 100 points (limit {PHI_REL_TOL:g}), "
                         f"uniform background {background:.1e} (limit {PHI_BACKGROUND_TOL:g})")


def criterion_8_quiet():
    import warnings

    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        return criterion_8()


def criterion_9(tmp: Path | None = None) -> bool:
    import tempfile

    import jsonschema

    schema = json.loads(resources.files("collapsar").joinpath("schemas/summary.schema.json").read_text("utf-8"))
    cfg = {"case": "Case1a", "N": 3, "delta": 1, "K": 1.0, "kappa": 1.0, "m": -1.0, "n": 1.0, "alpha_ic": 1.0}
    with tempfile.TemporaryDirectory(dir=tmp) as d:
        d = Path(d)
        good, bad, zero = d / "good.json", d / "bad.json", d / "zero.json"
        good.write_text(json.dumps(cfg))
        bad.write_text(json.dumps(cfg)[:-7])
        zero.write_text(json.dumps(cfg | {"mass_threshold": 0.0, "momentum_threshold": 0.0}))
        code_ok = cli_main(["verify", "--config", str(good), "--out", str(d / "o1")])
        try:
            jsonschema.validate(json.loads((d / "o1" / "summary.json").read_text()), schema)
            valid = True
        except (jsonschema.ValidationError, OSError, ValueError):
            valid = False
        code_bad = cli_main(["verify", "--config", str(bad), "--out", str(d / "o2")])
        code_zero = cli_main(["verify", "--config", str(zero), "--out", str(d / "o3")])
    ok = code_ok == 0 and valid and code_bad == 2 and code_zero == 4
    return record(9, ok, f"exit codes {code_ok}/{code_bad}/{code_zero} (expect 0/2/4), summary schema-valid {valid}")


CRITERIA = [criterion_1, criterion_2, criterion_3, criterion_4, criterion_5, criterion_6, criterion_7,
            criterion_8_quiet, criterion_9]


@pytest.mark.parametrize("check", CRITERIA, ids=[f"criterion_{i}" for i in range(1, 10)])
def test_criterion(check):
    assert check(), RESULTS[-1]


if __name__ == "__main__":
    passed = [check() for check in CRITERIA]
    print("\n".join(RESULTS))
    sys.exit(0 if all(passed) else 1)
