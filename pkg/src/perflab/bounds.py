"""Certificates relating stable points to deployed-risk minimizers.

Everything here instantiates one inequality: for any theta, theta',

    pr(theta') >= pr(theta) + gap_theta(theta') - L * W1(D(theta), D(theta')),

where gap_theta(theta') = dpr(theta, theta') - pr(theta) and L is the
value-Lipschitz constant of the loss in z over the region the distributions
occupy. With theta stable (gap >= 0) it yields:

* stable-point optimality: if gap dominates L * W1 at every probe, the stable
  point is optimal; cross-checked against the grid oracle regardless.
* suboptimality cap: pairwise shifts bounded by B give pr(ps) - pr* <= L * B.
* distance caps: quadratic growth of the gap (constant gamma) gives
  ||po - ps|| <= sqrt(L * B / gamma), and sensitivity eps tightens it to
  L * eps / gamma.

Each certificate records the bound, the oracle ground truth it must dominate,
and the provenance (declared / analytic / estimated) of every constant, so a
failed `holds` can be traced to an invalid constant.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import conditions, distmaps, losses, risk, solvers, transport
from .core import Instance, ParamBox, SeedSpec
from .errors import ContractError, MissingConstantError
from .targets import dpr_target

STABLE_POINT_OPTIMALITY = "STABLE_POINT_OPTIMALITY"
SUBOPT_GAP_UB = "SUBOPT_GAP_UB"
DIST_SQRT_UB = "DIST_SQRT_UB"
DIST_LINEAR_UB = "DIST_LINEAR_UB"


@dataclass(frozen=True)
class Certificate:
    name: str
    bound_value: float
    actual_value: float
    holds: bool
    constants_used: dict
    details: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "bound_value": self.bound_value,
            "actual_value": self.actual_value,
            "holds": self.holds,
            "constants": self.constants_used,
            "details": self.details,
        }


def _w1_between(instance, t1, t2, n, seed) -> tuple:
    """(value, se_proxy): closed form for the Gaussian family, CRN samples else."""
    if instance.map.kind == "gaussian_location_scale":
        return transport.w1_gaussian(instance.map, t1, t2).value, 0.0
    est = transport.w1(
        distmaps.sample(instance.map, t1, n, seed),
        distmaps.sample(instance.map, t2, n, seed),
    )
    return est.value, est.value / np.sqrt(max(n, 1))


def theta_probe_grid(box: ParamBox, target_count: int = 50) -> np.ndarray:
    if box.dim == 1:
        return np.linspace(box.lower[0], box.upper[0], target_count)[:, None]
    per_axis = max(2, int(round(target_count ** (1.0 / box.dim))))
    step = max((box.upper[0] - box.lower[0]) / (per_axis - 1), 1e-12)
    return box.grid(step)


def resolve_bound_constants(
    instance: Instance,
    theta_stable=None,
    need: tuple = ("lip_L", "eps", "gamma_qg", "shift_bound_B"),
    n: int = risk.DEFAULT_SAMPLES,
    seed: Optional[SeedSpec] = None,
    mode: str = "auto",
) -> dict:
    """Constants with provenance: declared wins, then analytic, then estimated."""
    seed = seed if seed is not None else SeedSpec(0, (53,))
    out = {}
    declared = instance.declared
    if "lip_L" in need:
        if declared.lip_L is not None:
            out["lip_L"] = {"value": declared.lip_L, "source": "declared"}
        else:
            region = distmaps.data_region(instance.map, instance.domain,
                                          seed=seed.child(1))
            consts = losses.analytic_constants(instance.loss, instance.domain, region)
            out["lip_L"] = {
                "value": consts.lip_value,
                "source": "analytic",
                "region": consts.region_note(),
            }
    if "eps" in need:
        if declared.eps is not None:
            out["eps"] = {"value": declared.eps, "source": "declared"}
        else:
            out["eps"] = {
                "value": distmaps.analytic_sensitivity(instance.map),
                "source": "analytic",
            }
    if "shift_bound_B" in need:
        if declared.shift_bound_B is not None:
            out["shift_bound_B"] = {"value": declared.shift_bound_B,
                                    "source": "declared"}
        else:
            grid = theta_probe_grid(instance.domain)
            best = 0.0
            for i in range(grid.shape[0]):
                for j in range(i + 1, grid.shape[0]):
                    v, _ = _w1_between(instance, grid[i], grid[j], min(n, 2000),
                                       seed.child(2))
                    best = max(best, v)
            out["shift_bound_B"] = {
                "value": best,
                "source": "estimated",
                "probe": f"max pairwise W1 over a {grid.shape[0]}-point grid",
            }
    if "gamma_qg" in need:
        if declared.gamma_qg is not None:
            out["gamma_qg"] = {"value": declared.gamma_qg, "source": "declared"}
        else:
            if theta_stable is None:
                raise MissingConstantError(
                    "gamma_qg needs a stable point to probe the gap growth; "
                    "declare it or pass theta_stable"
                )
            target = dpr_target(instance, theta_stable, n=n, seed=seed.child(3),
                                mode=mode)
            target.minimizer = instance.theta(theta_stable)
            rep = conditions.check_target_condition(target, "QG", seed=seed.child(4))
            out["gamma_qg"] = {
                "value": rep.best_constant,
                "source": "estimated",
                "verdict": rep.verdict,
            }
    return out


def gap_inequality_residual(
    instance: Instance,
    theta,
    theta_prime,
    n: int = risk.DEFAULT_SAMPLES,
    seed: Optional[SeedSpec] = None,
    mode: str = "auto",
    lip_L: Optional[float] = None,
) -> float:
    """pr(t') - pr(t) - gap_t(t') + L * W1(D(t), D(t')); >= 0 up to tolerance.

    A negative value beyond noise means the implementation (or the supplied
    L) is wrong -- the inequality itself is a theorem.
    """
    seed = seed if seed is not None else SeedSpec(0, (59,))
    t = instance.theta(theta)
    tp = instance.theta(theta_prime)
    if lip_L is None:
        got = resolve_bound_constants(instance, need=("lip_L",), n=n,
                                      seed=seed.child(1), mode=mode)
        lip_L = got["lip_L"]["value"]
    mode = risk.resolve_mode(instance, mode)
    crn = seed.child(2)
    pr_t = risk.pr(instance, t, n=n, seed=crn, mode=mode).value
    pr_tp = risk.pr(instance, tp, n=n, seed=crn, mode=mode).value
    gap = risk.subopt_gap(instance, t, tp, n=n, seed=crn, mode=mode).value
    w, _ = _w1_between(instance, t, tp, n, crn)
    return pr_tp - pr_t - gap + lip_L * w


def stable_optimality_certificate(
    instance: Instance,
    theta_stable,
    probes: Optional[np.ndarray] = None,
    n: int = risk.DEFAULT_SAMPLES,
    seed: Optional[SeedSpec] = None,
    mode: str = "auto",
    grid_step: float = 1e-3,
    stability_tol: float = 1e-3,
) -> Certificate:
    """Optimality of a stable point via gap-dominates-transport probes.

    The premise gap_t(t') >= L * W1 is tested at every probe; optimality is
    asserted only when it holds everywhere AND the grid oracle agrees that no
    deployed risk below pr(theta_stable) exists (within tolerance). Failing
    probes are listed either way.
    """
    seed = seed if seed is not None else SeedSpec(0, (61,))
    mode = risk.resolve_mode(instance, mode)
    t = instance.theta(theta_stable)
    res = solvers._fp_residual(instance, t, n, seed.child(1), mode)
    if res > max(stability_tol, 10 * solvers.TOL_CLOSED_FORM):
        raise ContractError(
            f"theta_stable fails the fixed-point residual test ({res:.3g})"
        )
    consts = resolve_bound_constants(instance, t, need=("lip_L",), n=n,
                                     seed=seed.child(2), mode=mode)
    lip = consts["lip_L"]["value"]
    if probes is None:
        probes = conditions.probe_points(instance.domain, seed.child(3))
    crn = seed.child(4)
    failing = []
    for tp in probes:
        gap_est = risk.subopt_gap(instance, t, tp, n=n, seed=crn, mode=mode)
        w, w_se = _w1_between(instance, t, tp, n, crn)
        slack = gap_est.value - lip * w
        tol = 3.0 * (gap_est.std_err + lip * w_se) + 1e-9
        if slack + tol < 0:
            failing.append({"theta_prime": tp.tolist(), "slack": float(slack)})
    premise_holds = not failing
    oracle = solvers.grid_oracle_po(instance, grid_step, n=n, seed=seed.child(5),
                                    mode=mode)
    pr_stable = risk.pr(instance, t, n=n, seed=seed.child(6), mode=mode)
    tol_cert = grid_step + 3.0 * pr_stable.std_err + 1e-9
    agrees = pr_stable.value <= oracle.objective + tol_cert
    return Certificate(
        name=STABLE_POINT_OPTIMALITY,
        bound_value=float(oracle.objective),
        actual_value=float(pr_stable.value),
        holds=bool(premise_holds and agrees),
        constants_used=consts,
        details={
            "premise_holds": premise_holds,
            "failing_probes": failing[:10],
            "n_failing": len(failing),
            "oracle_agrees": bool(agrees),
            "tolerance": tol_cert,
            "stability_residual": res,
        },
    )


def _oracle_pair(instance, theta_stable, n, seed, mode, grid_step):
    oracle = solvers.grid_oracle_po(instance, grid_step, n=n, seed=seed, mode=mode)
    pr_stable = risk.pr(instance, instance.theta(theta_stable), n=n,
                        seed=seed.child(1), mode=mode)
    return oracle, pr_stable


def pr_gap_bound(
    instance: Instance,
    theta_stable,
    n: int = risk.DEFAULT_SAMPLES,
    seed: Optional[SeedSpec] = None,
    mode: str = "auto",
    grid_step: float = 1e-3,
) -> Certificate:
    """Suboptimality cap L * B on the deployed risk of a stable point."""
    seed = seed if seed is not None else SeedSpec(0, (67,))
    mode = risk.resolve_mode(instance, mode)
    consts = resolve_bound_constants(instance, theta_stable,
                                     need=("lip_L", "shift_bound_B"),
                                     n=n, seed=seed.child(1), mode=mode)
    lip = consts["lip_L"]["value"]
    cap = consts["shift_bound_B"]["value"]
    oracle, pr_stable = _oracle_pair(instance, theta_stable, n, seed.child(2),
                                     mode, grid_step)
    actual = pr_stable.value - oracle.objective
    tol = grid_step + 3.0 * pr_stable.std_err + 1e-9
    return Certificate(
        name=SUBOPT_GAP_UB,
        bound_value=float(lip * cap),
        actual_value=float(actual),
        holds=bool(actual <= lip * cap + tol),
        constants_used=consts,
        details={"tolerance": tol, "oracle_pr_min": oracle.objective},
    )


def distance_bound_bounded_shift(
    instance: Instance,
    theta_stable,
    n: int = risk.DEFAULT_SAMPLES,
    seed: Optional[SeedSpec] = None,
    mode: str = "auto",
    grid_step: float = 1e-3,
) -> Certificate:
    """Distance cap sqrt(L * B / gamma) from gap quadratic growth."""
    seed = seed if seed is not None else SeedSpec(0, (71,))
    mode = risk.resolve_mode(instance, mode)
    consts = resolve_bound_constants(instance, theta_stable,
                                     need=("lip_L", "shift_bound_B", "gamma_qg"),
                                     n=n, seed=seed.child(1), mode=mode)
    gamma = consts["gamma_qg"]["value"]
    if consts["gamma_qg"].get("verdict") == "violated" or gamma <= 0:
        return _inconclusive_distance_cert(DIST_SQRT_UB, consts,
                                           "quadratic growth not certified")
    lip = consts["lip_L"]["value"]
    cap = consts["shift_bound_B"]["value"]
    oracle, _ = _oracle_pair(instance, theta_stable, n, seed.child(2), mode, grid_step)
    actual = float(np.linalg.norm(oracle.theta_star - instance.theta(theta_stable)))
    bound = float(np.sqrt(lip * cap / gamma))
    tol = grid_step + 1e-6
    return Certificate(
        name=DIST_SQRT_UB,
        bound_value=bound,
        actual_value=actual,
        holds=bool(actual <= bound + tol),
        constants_used=consts,
        details={"tolerance": tol, "theta_po": oracle.theta_star.tolist()},
    )


def distance_bound_sensitivity(
    instance: Instance,
    theta_stable,
    n: int = risk.DEFAULT_SAMPLES,
    seed: Optional[SeedSpec] = None,
    mode: str = "auto",
    grid_step: float = 1e-3,
) -> Certificate:
    """Distance cap L * eps / gamma from sensitivity plus gap growth."""
    seed = seed if seed is not None else SeedSpec(0, (73,))
    mode = risk.resolve_mode(instance, mode)
    consts = resolve_bound_constants(instance, theta_stable,
                                     need=("lip_L", "eps", "gamma_qg"),
                                     n=n, seed=seed.child(1), mode=mode)
    gamma = consts["gamma_qg"]["value"]
    if consts["gamma_qg"].get("verdict") == "violated" or gamma <= 0:
        return _inconclusive_distance_cert(DIST_LINEAR_UB, consts,
                                           "quadratic growth not certified")
    lip = consts["lip_L"]["value"]
    eps = consts["eps"]["value"]
    oracle, _ = _oracle_pair(instance, theta_stable, n, seed.child(2), mode, grid_step)
    actual = float(np.linalg.norm(oracle.theta_star - instance.theta(theta_stable)))
    bound = float(lip * eps / gamma)
    tol = grid_step + 1e-6
    return Certificate(
        name=DIST_LINEAR_UB,
        bound_value=bound,
        actual_value=actual,
        holds=bool(actual <= bound + tol),
        constants_used=consts,
        details={"tolerance": tol, "theta_po": oracle.theta_star.tolist()},
    )


def _inconclusive_distance_cert(name, consts, reason) -> Certificate:
    return Certificate(
        name=name,
        bound_value=float("nan"),
        actual_value=float("nan"),
        holds=False,
        constants_used=consts,
        details={"inconclusive": True, "reason": reason},
    )


def certify_all(
    instance: Instance,
    n: int = risk.DEFAULT_SAMPLES,
    seed: Optional[SeedSpec] = None,
    mode: str = "auto",
    grid_step: float = 1e-3,
) -> tuple:
    """All four certificates at the fixed-point oracle's stable point.

    Returns (stable_point OracleResult, list of Certificates).
    """
    seed = seed if seed is not None else SeedSpec(0, (79,))
    mode = risk.resolve_mode(instance, mode)
    ps = solvers.fixed_point_oracle_ps(instance, n=n, seed=seed.child(1), mode=mode)
    if not ps.conclusive:
        return ps, []
    t = ps.theta_star
    certs = [
        stable_optimality_certificate(instance, t, n=n, seed=seed.child(2),
                                      mode=mode, grid_step=grid_step),
        pr_gap_bound(instance, t, n=n, seed=seed.child(3), mode=mode,
                     grid_step=grid_step),
        distance_bound_bounded_shift(instance, t, n=n, seed=seed.child(4),
                                     mode=mode, grid_step=grid_step),
        distance_bound_sensitivity(instance, t, n=n, seed=seed.child(5),
                                   mode=mode, grid_step=grid_step),
    ]
    return ps, certs


def pl_transport_ratio_probe(
    instance: Instance,
    anchor=None,
    probes: Optional[np.ndarray] = None,
    n: int = risk.DEFAULT_SAMPLES,
    seed: Optional[SeedSpec] = None,
    mode: str = "auto",
) -> dict:
    """Measure W1(D(t), D(t')) / ||grad dpr(t, .)(t')||^2 across probes.

    Whether a finite constant bounds this ratio near stable points is an
    open question; this probe only reports the observed ratios and asserts
    nothing.
    """
    seed = seed if seed is not None else SeedSpec(0, (83,))
    mode = risk.resolve_mode(instance, mode)
    if anchor is None:
        anchor = solvers.fixed_point_oracle_ps(
            instance, n=n, seed=seed.child(1), mode=mode
        ).theta_star
    anchor = instance.theta(anchor)
    if probes is None:
        probes = conditions.probe_points(instance.domain, seed.child(2),
                                         grid_points=51, random_points=50)
    crn = seed.child(3)
    ratios = []
    for tp in probes:
        w, _ = _w1_between(instance, anchor, tp, n, crn)
        g = risk.theta_grad_dpr(instance, anchor, tp, n=n, seed=crn, mode=mode)
        g2 = float(g @ g)
        if g2 > 1e-16:
            ratios.append(w / g2)
    ratios = np.array(ratios)
    return {
        "anchor": anchor.tolist(),
        "count": int(ratios.size),
        "max_ratio": float(ratios.max()) if ratios.size else float("nan"),
        "median_ratio": float(np.median(ratios)) if ratios.size else float("nan"),
        "note": "measurement only; no assertion attached",
    }
