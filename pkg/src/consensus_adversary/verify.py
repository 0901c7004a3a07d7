"""Named verification suite aggregating the structural checks: greedy
dominance against the brute-force oracle, greedy vs. maximum-principle
consistency, scale invariance, the constant-baseline bound, contraction of
the co-state iteration, and the conservation/stochasticity invariants.

Tolerances are calibrated for the default 400-step grid; coarser overrides
scale the grid-sensitive tolerances by (default_h / h)^-2, i.e. (400/steps)^2.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import enumeration, link_attack, noise_attack
from .dynamics import matrix_exponential
from .scenario import DEFAULT_STEPS, paper_k4_scenario
from .topology import LinkControl, build_system_matrix


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    detail: str


def _grid_tol(base: float, steps: int) -> float:
    return base * (DEFAULT_STEPS / steps) ** 2 if steps < DEFAULT_STEPS else base


def check_thm1_greedy_dominance(steps: int, fast: bool = False) -> CheckResult:
    kwargs = dict(weight_seeds=(0,), x0_seeds=(0,)) if fast else {}
    report = enumeration.greedy_dominance_sweep(**kwargs)
    return CheckResult(
        name="thm1-greedy-dominance",
        passed=report["passed"],
        detail=(f"{report['runs']} runs, worst relative excess "
                f"{report['worst_relative_excess']:.2e} (tol {report['tolerance']:.0e})"),
    )


def check_thm2_mp_consistency(steps: int, sign_flip: bool = False) -> CheckResult:
    config = paper_k4_scenario("link", steps=steps)
    report = link_attack.verify_greedy_mp_consistency(config, sign_flip=sign_flip)
    passed = (report["schedule_agreement"] == 1.0
              and report["sweep_converged"]
              and report["relative_j_gap"] < _grid_tol(1e-4, steps))
    return CheckResult(
        name="thm2-mp-consistency",
        passed=passed,
        detail=(f"schedule agreement {report['schedule_agreement']:.0%}, "
                f"J gap {report['relative_j_gap']:.2e}, "
                f"sweep iterations {report['sweep_iterations']}"),
    )


def check_lemma1_scale_invariance(steps: int) -> CheckResult:
    config = paper_k4_scenario("link", steps=steps)
    failures = []
    for c in (-3.0, 0.5, 10.0):
        report = link_attack.verify_scale_invariance(config, c)
        if not (report["schedules_identical"] and report["switching_signs_match"]):
            failures.append(c)
    return CheckResult(
        name="lemma1-scale-invariance",
        passed=not failures,
        detail="schedules identical for c in {-3, 0.5, 10}" if not failures
        else f"mismatch at c={failures}",
    )


def check_lemma2_baseline_bound(steps: int) -> CheckResult:
    config = paper_k4_scenario("noise", steps=steps)
    base = noise_attack.baseline_constant_control(config)
    routes_agree = (abs(base["j2_closed_form"] - base["j2_simulated"])
                    / base["j2_closed_form"] < _grid_tol(1e-6, steps))
    bound_holds = base["j2_closed_form"] >= base["bound"] - 1e-9
    return CheckResult(
        name="lemma2-baseline-bound",
        passed=routes_agree and bound_holds,
        detail=(f"J2 = {base['j2_closed_form']:.6f} >= bound {base['bound']:.6f}, "
                f"routes agree to {abs(base['j2_closed_form'] - base['j2_simulated']) / base['j2_closed_form']:.1e}"),
    )


def check_contraction(steps: int) -> CheckResult:
    config = paper_k4_scenario("noise", steps=steps)
    outcome = noise_attack.simulate_attack2(config)
    res = np.array(outcome.residuals)
    ratios = res[1:] / res[:-1] if len(res) > 1 else np.array([])
    ratio_ok = bool(np.all(ratios <= outcome.setup.q + 0.05)) if ratios.size else True
    # fixed-point residual of one extra map application
    A = build_system_matrix(config.topology, LinkControl.none(config.topology.n))
    fmap = noise_attack.CostateMap(A, config.x0, config.kernel, config.grid, outcome.setup)
    p = outcome.trajectory.p
    drift = float(np.max(np.abs(fmap.apply(p) - p))) / float(np.max(np.abs(p)))
    return CheckResult(
        name="contraction-fixed-point",
        passed=ratio_ok and drift < 1e-7,
        detail=(f"{outcome.iterations} iterations, max residual ratio "
                f"{float(np.max(ratios)) if ratios.size else 0.0:.3f} "
                f"(cap {outcome.setup.q + 0.05:.2f}), fixed-point drift {drift:.1e}"),
    )


def check_conservation(steps: int) -> CheckResult:
    config = paper_k4_scenario("link", steps=steps)
    outcome = link_attack.simulate_attack1(config)
    t = config.grid.times()
    sums = outcome.trajectory.x.sum(axis=1)
    s0 = sums[0]
    conserve_ok = bool(np.all(np.abs(sums - s0) < 1e-8 * abs(s0) * (1.0 + t)))
    stochastic_ok = True
    for control in {c.bits: c for c in outcome.schedule}.values():
        E = matrix_exponential(build_system_matrix(config.topology, control), config.grid.h)
        if (np.max(np.abs(E.sum(axis=0) - 1)) > 1e-10
                or np.max(np.abs(E.sum(axis=1) - 1)) > 1e-10
                or np.min(E) < -1e-12):
            stochastic_ok = False
    return CheckResult(
        name="conservation-stochasticity",
        passed=conserve_ok and stochastic_ok,
        detail=f"max average drift {float(np.max(np.abs(sums - s0))):.2e}",
    )


def check_attack2_optimality(steps: int) -> CheckResult:
    config = paper_k4_scenario("noise", steps=steps)
    outcome = noise_attack.simulate_attack2(config)
    u, p = outcome.control, outcome.trajectory.p
    power = np.sum(u * u, axis=1)
    norms = np.linalg.norm(p, axis=1)
    nonsingular = norms > noise_attack.SINGULAR_FRACTION * norms.max()
    full_power = bool(np.all(np.abs(power[nonsingular] - outcome.p_max) < 1e-12))
    cosine = np.sum(u * p, axis=1)[nonsingular] / (
        np.sqrt(outcome.p_max) * norms[nonsingular])
    aligned = bool(np.all(np.abs(cosine - 1.0) < 1e-10))
    lam_ok = bool(np.all(outcome.lam <= 1e-12))
    base = noise_attack.baseline_constant_control(config)
    from .dynamics import propagate, objective
    no_attack = objective(
        propagate(config.x0, [LinkControl.none(4)] * steps, config.topology, config.grid),
        config.kernel)
    dominant = outcome.J >= max(no_attack, base["j2_closed_form"]) - 1e-6
    return CheckResult(
        name="attack2-optimality",
        passed=full_power and aligned and lam_ok and dominant,
        detail=(f"J* = {outcome.J:.4f} >= max(J0 = {no_attack:.4f}, "
                f"J2 = {base['j2_closed_form']:.4f})"),
    )


def run_verify(steps: int = DEFAULT_STEPS, inject_fault: str | None = None,
               fast: bool = False, printer=print) -> bool:
    """Run every named property; print one pass/fail line each.

    inject_fault='flip-switching-sign' flips the switching-function sign in
    the consistency check (test hook proving the suite catches regressions).
    """
    sign_flip = inject_fault == "flip-switching-sign"
    checks = [
        check_thm1_greedy_dominance(steps, fast=fast),
        check_thm2_mp_consistency(steps, sign_flip=sign_flip),
        check_lemma1_scale_invariance(steps),
        check_lemma2_baseline_bound(steps),
        check_contraction(steps),
        check_conservation(steps),
        check_attack2_optimality(steps),
    ]
    all_passed = True
    for c in checks:
        printer(f"[{'PASS' if c.passed else 'FAIL'}] {c.name}: {c.detail}")
        if not c.passed:
            all_passed = False
    return all_passed
