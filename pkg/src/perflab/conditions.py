"""Empirical certification of regularity and convexity conditions.

Five conditions are probed on a scalar target f with gradient g, minimizer
set projection x_p and optimal value f*:

    SC   f(y) >= f(x) + <g(x), y - x> + (mu/2) ||y - x||^2      (probe pairs)
    WSC  f*   >= f(x) + <g(x), x_p - x> + (mu/2) ||x_p - x||^2
    RSI  <g(x), x - x_p> >= mu ||x_p - x||^2
    PL   (1/2) ||g(x)||^2 >= mu (f(x) - f*)
    QG   f(x) - f* >= mu ||x_p - x||^2

On a quadratic with curvature c the best constants are c, c, c, c and c/2
respectively (the quadratic-growth inequality here carries no 1/2 factor).

Each probe contributes a residual that is affine decreasing in mu, so the
certified set is an interval [0, mu_max]; mu_max is located by bisection.
Tolerances are additive: 1e-9 plus three standard errors of the Monte Carlo
quantities involved. A declared constant is tested as-is; without one the
condition counts as certified when the best certified constant clears a
floor (default 1e-2), and as violated otherwise, with the binding probes
reported as witnesses.

The module also certifies map sensitivity and mixture dominance, audits the
implication chain SC => WSC => RSI => PL => QG on shared probes, estimates
loss-level constants (smoothness, strong convexity, z-Lipschitzness), and
validates the two transfer theorems (threshold and constants included).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import distmaps, losses, risk, solvers, transport
from .core import ConstantSet, Instance, ParamBox, SeedSpec, as_vector
from .errors import ContractError
from .targets import ProbeTarget, dpr_target, resolve_minimizer

TOL_ABS = 1e-9
MU_FLOOR = 1e-2
BISECT_ITERS = 30
CHAIN_ORDER = ("SC", "WSC", "RSI", "PL", "QG")

_DECLARED_FIELD = {"SC": "gamma_sc", "WSC": "mu_wsc", "RSI": "mu_rsi", "QG": "gamma_qg"}


@dataclass(frozen=True)
class Witness:
    point: tuple           # probe location(s); a pair for SC
    residual: float

    def to_dict(self) -> dict:
        return {"point": self.point, "residual": self.residual}


@dataclass(frozen=True)
class ConditionReport:
    condition: str
    verdict: str           # "certified" | "violated" | "inconclusive"
    best_constant: float
    witnesses: tuple = ()
    probe_spec: str = ""
    constant_source: str = "estimated"   # "declared" | "analytic" | "estimated"
    details: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "condition": self.condition,
            "verdict": self.verdict,
            "best_constant": self.best_constant,
            "constant_source": self.constant_source,
            "probes": self.probe_spec,
            "witnesses": [w.to_dict() for w in self.witnesses],
            "premise": self.details.get("premise"),
            "details": {k: v for k, v in self.details.items() if k != "premise"},
        }


def probe_points(box: ParamBox, seed: Optional[SeedSpec] = None,
                 grid_points: int = 201, random_points: int = 200) -> np.ndarray:
    """Deterministic 1-D grid; seeded uniform cloud in higher dimension."""
    if box.dim == 1:
        return np.linspace(box.lower[0], box.upper[0], grid_points)[:, None]
    seed = seed if seed is not None else SeedSpec(0, (7,))
    return box.uniform(random_points, seed)


@dataclass
class _ProbeTable:
    x: np.ndarray        # (k, d)
    f: np.ndarray        # (k,)
    f_se: np.ndarray
    g: np.ndarray        # (k, d)
    g_se: np.ndarray
    xp: np.ndarray       # (k, d) projection onto the optimal set
    dist: np.ndarray     # (k,) ||x - xp||
    f_star: float
    f_star_se: float


def _build_table(target: ProbeTarget, probes: np.ndarray) -> _ProbeTable:
    k = probes.shape[0]
    f = np.empty(k)
    f_se = np.empty(k)
    g = np.empty_like(probes)
    g_se = np.empty(k)
    xp = np.empty_like(probes)
    for i, x in enumerate(probes):
        f[i], f_se[i] = target.value(x)
        g[i], g_se[i] = target.grad(x)
        xp[i] = target.projection(x)
    ref = target.projection(target.domain.center())
    f_star, f_star_se = target.value(ref)
    dist = np.linalg.norm(probes - xp, axis=1)
    return _ProbeTable(probes, f, f_se, g, g_se, xp, dist, f_star, f_star_se)


def _condition_terms(table: _ProbeTable, condition: str) -> tuple:
    """Arrays (A, B, tol, points) with residual(mu) = A - mu * B >= -tol."""
    x, f, g = table.x, table.f, table.g
    if condition == "SC":
        k = x.shape[0]
        ii, jj = np.meshgrid(np.arange(k), np.arange(k), indexing="ij")
        ii, jj = ii.ravel(), jj.ravel()
        keep = ii != jj
        ii, jj = ii[keep], jj[keep]
        delta = x[jj] - x[ii]
        dn = np.linalg.norm(delta, axis=1)
        a = f[jj] - f[ii] - np.einsum("ij,ij->i", g[ii], delta)
        b = 0.5 * dn**2
        tol = 3.0 * (table.f_se[ii] + table.f_se[jj] + table.g_se[ii] * dn) + TOL_ABS
        points = list(zip(x[ii], x[jj]))
        return a, b, tol, points
    d = table.dist
    points = list(x)
    if condition == "WSC":
        to_opt = table.xp - x
        a = table.f_star - f - np.einsum("ij,ij->i", g, to_opt)
        b = 0.5 * d**2
        tol = 3.0 * (table.f_star_se + table.f_se + table.g_se * d) + TOL_ABS
    elif condition == "RSI":
        a = np.einsum("ij,ij->i", g, x - table.xp)
        b = d**2
        tol = 3.0 * table.g_se * d + TOL_ABS
    elif condition == "PL":
        gn = np.linalg.norm(g, axis=1)
        a = 0.5 * gn**2
        b = np.maximum(f - table.f_star, 0.0)
        tol = 3.0 * (table.g_se * gn + table.f_se + table.f_star_se) + TOL_ABS
    elif condition == "QG":
        a = f - table.f_star
        b = d**2
        tol = 3.0 * (table.f_se + table.f_star_se) + TOL_ABS
    else:
        raise ContractError(f"unknown condition {condition!r}")
    return a, b, tol, points


def _bisect_best(a, b, tol) -> float:
    """Largest mu with all residuals a - mu*b >= -tol; bisection on [0, upper]."""
    live = b > 1e-14
    if np.any(~live):
        if np.any(a[~live] + tol[~live] < 0):
            return 0.0
    if not np.any(live):
        return np.inf
    ratios = (a[live] + tol[live]) / b[live]
    upper = float(max(ratios.max(), 0.0)) + 1.0
    lo, hi = 0.0, upper

    def ok(mu):
        return bool(np.all(a[live] - mu * b[live] + tol[live] >= 0.0))

    if not ok(lo):
        return 0.0
    for _ in range(BISECT_ITERS):
        mid = 0.5 * (lo + hi)
        if ok(mid):
            lo = mid
        else:
            hi = mid
    return lo


def _witnesses(a, b, tol, points, mu: float, limit: int = 5) -> tuple:
    resid = a - mu * b
    order = np.argsort(resid)
    out = []
    for idx in order[:limit]:
        if resid[idx] + tol[idx] >= 0:
            break
        pt = points[idx]
        if isinstance(pt, tuple):
            key = tuple(np.round(p, 12).tolist() for p in pt)
        else:
            key = (np.round(pt, 12).tolist(),)
        out.append(Witness(point=key, residual=float(resid[idx])))
    return tuple(out)


def check_target_condition(
    target: ProbeTarget,
    condition: str,
    probes: Optional[np.ndarray] = None,
    seed: Optional[SeedSpec] = None,
    declared: Optional[float] = None,
    mu_floor: float = MU_FLOOR,
) -> ConditionReport:
    """Certify one condition on a probe target; see the module docstring."""
    if condition not in CHAIN_ORDER:
        raise ContractError(f"unknown condition {condition!r}")
    seed = seed if seed is not None else SeedSpec(0, (11,))
    if target.project_opt is None and target.minimizer is None:
        _, disagreement = resolve_minimizer(target, seed.child(1))
        if target.minimizer is None:
            return ConditionReport(
                condition=condition,
                verdict="inconclusive",
                best_constant=0.0,
                probe_spec=f"target={target.label}",
                details={
                    "reason": "minimizer restarts disagree; optimal set may be "
                    f"non-unique (spread {disagreement:.3g} > 1e-4)"
                },
            )
    if probes is None:
        probes = probe_points(target.domain, seed.child(2))
    table = _build_table(target, probes)
    a, b, tol, points = _condition_terms(table, condition)
    best = _bisect_best(a, b, tol)
    spec_str = f"target={target.label}; probes={probes.shape[0]}; mode={target.mode}"
    if declared is not None:
        wit = _witnesses(a, b, tol, points, declared)
        verdict = "certified" if not wit else "violated"
        return ConditionReport(
            condition, verdict, float(declared), wit, spec_str, "declared",
            details={"estimated_best": None if best == np.inf else float(best)},
        )
    if best == np.inf:
        return ConditionReport(
            condition, "inconclusive", 0.0, (), spec_str, "estimated",
            details={"reason": "no probe separates the candidate constants"},
        )
    wit = _witnesses(a, b, tol, points, mu_floor)
    verdict = "certified" if best >= mu_floor else "violated"
    return ConditionReport(
        condition, verdict, float(best), wit if verdict == "violated" else (),
        spec_str, "estimated", details={"mu_floor": mu_floor},
    )


def check_condition(
    instance: Instance,
    condition: str,
    anchor="po",
    probes: Optional[np.ndarray] = None,
    n: int = risk.DEFAULT_SAMPLES,
    seed: Optional[SeedSpec] = None,
    mode: str = "auto",
    declared: Optional[float] = None,
    grid_step: float = 1e-3,
) -> ConditionReport:
    """Condition check on an instance target.

    anchor: "po" probes the loss landscape over the distribution induced by
    the deployed-risk minimizer; a parameter vector anchors the distribution
    there instead; "pr" probes the deployed risk itself.
    """
    seed = seed if seed is not None else SeedSpec(0, (13,))
    if isinstance(anchor, str) and anchor == "pr":
        from .targets import pr_target

        target = pr_target(instance, n=n, seed=seed.child(1), mode=mode)
        oracle = solvers.grid_oracle_po(instance, grid_step, n=n,
                                        seed=seed.child(2), mode=mode)
        target.minimizer = oracle.theta_star
    else:
        if isinstance(anchor, str) and anchor == "po":
            oracle = solvers.grid_oracle_po(instance, grid_step, n=n,
                                            seed=seed.child(2), mode=mode)
            anchor_theta = oracle.theta_star
        else:
            anchor_theta = instance.theta(anchor)
        target = dpr_target(instance, anchor_theta, n=n, seed=seed.child(1), mode=mode)
    if declared is None:
        declared_field = _DECLARED_FIELD.get(condition)
        if declared_field is not None:
            declared = getattr(instance.declared, declared_field)
    return check_target_condition(target, condition, probes=probes,
                                  seed=seed.child(3), declared=declared)


# ---------------------------------------------------------------------------
# sensitivity and mixture dominance
# ---------------------------------------------------------------------------

def check_sensitivity(
    instance: Instance,
    n_pairs: int = 50,
    n_samples: int = 2000,
    seed: Optional[SeedSpec] = None,
    rel_tol: float = 0.05,
) -> ConditionReport:
    """Estimate the Wasserstein-1 Lipschitz constant of theta -> D(theta).

    Pairs share base noise (common random numbers), which makes the ratio
    exact for location families. The estimate is a max over pairs, hence
    never below the true empirical ratio; a declared constant is certified
    only when it dominates the estimate within the relative tolerance.
    """
    seed = seed if seed is not None else SeedSpec(0, (17,))
    box = instance.domain
    ratios = np.zeros(n_pairs)
    pairs = []
    for k in range(n_pairs):
        pair_seed = seed.child(k)
        t1, t2 = box.uniform(2, pair_seed.child(0))
        gap = float(np.linalg.norm(t1 - t2))
        if gap < 1e-9 * max(box.diameter(), 1.0):
            ratios[k] = 0.0
            pairs.append((t1, t2))
            continue
        batch_seed = pair_seed.child(1)
        w = transport.w1(
            distmaps.sample(instance.map, t1, n_samples, batch_seed),
            distmaps.sample(instance.map, t2, n_samples, batch_seed),
        )
        ratios[k] = w.value / gap
        pairs.append((t1, t2))
    eps_hat = float(ratios.max())
    worst = int(np.argmax(ratios))
    declared = instance.declared.eps
    spec_str = f"{n_pairs} theta pairs, n={n_samples}, shared base noise"
    if declared is not None:
        margin = declared + rel_tol * max(eps_hat, 1e-12) - eps_hat
        if margin >= 0:
            verdict, wit = "certified", ()
        else:
            verdict = "violated"
            t1, t2 = pairs[worst]
            wit = (Witness(point=(t1.tolist(), t2.tolist()),
                           residual=float(declared - eps_hat)),)
        return ConditionReport("SENS", verdict, eps_hat, wit, spec_str, "declared",
                               details={"declared": declared})
    return ConditionReport("SENS", "certified", eps_hat, (), spec_str, "estimated")


def check_mixture_dominance(
    instance: Instance,
    theta_anchor=None,
    n_segments: int = 20,
    n: int = risk.DEFAULT_SAMPLES,
    seed: Optional[SeedSpec] = None,
) -> ConditionReport:
    """Convexity of theta1 -> dpr(theta1, theta) along random segments.

    When the map has a density the first-order form is checked too: the
    score-weighted loss mean at the anchor must underestimate dpr growth.
    Maps without a density get the segment form only, and the report says so.
    """
    seed = seed if seed is not None else SeedSpec(0, (19,))
    anchor = (
        instance.theta(theta_anchor)
        if theta_anchor is not None
        else instance.domain.center()
    )
    mode = risk.resolve_mode(instance, "auto")
    box = instance.domain
    lambdas = (0.25, 0.5, 0.75)
    residuals = []
    witnesses = []
    for k in range(n_segments):
        seg_seed = seed.child(k)
        a, b = box.uniform(2, seg_seed.child(0))
        crn = seg_seed.child(1)

        def val(t1):
            return risk.dpr(instance, t1, anchor, n=n, seed=crn, mode=mode)

        fa, fb = val(a), val(b)
        for lam in lambdas:
            mid = val(lam * a + (1 - lam) * b)
            r = lam * fa.value + (1 - lam) * fb.value - mid.value
            tol = 3.0 * (fa.std_err + fb.std_err + mid.std_err) + TOL_ABS
            residuals.append(r)
            if r + tol < 0:
                witnesses.append(
                    Witness(point=(a.tolist(), b.tolist(), lam), residual=float(r))
                )
    first_order_checked = False
    if instance.map.has_density():
        first_order_checked = True
        crn = seed.child(10_000)
        grad_est = risk.performative_gradient(instance, anchor, n=n, seed=crn, mode=mode)
        g2 = grad_est.grad2
        pr_anchor = risk.pr(instance, anchor, n=n, seed=crn, mode=mode)
        for i, tp in enumerate(box.uniform(n_segments, seed.child(10_001))):
            d_est = risk.dpr(instance, tp, anchor, n=n, seed=crn, mode=mode)
            r = (d_est.value - pr_anchor.value) - float(g2 @ (tp - anchor))
            tol = 3.0 * (d_est.std_err + pr_anchor.std_err) + 1e-7
            residuals.append(r)
            if r + tol < 0:
                witnesses.append(Witness(point=(tp.tolist(),), residual=float(r)))
    verdict = "certified" if not witnesses else "violated"
    detail = {
        "form": "segment + first-order" if first_order_checked else
        "segment-convexity only (map has no tractable density)",
        "anchor": anchor.tolist(),
    }
    return ConditionReport(
        "MIXDOM", verdict, float(np.min(residuals)), tuple(witnesses[:5]),
        f"{n_segments} segments x lambda in {lambdas}, mode={mode}",
        "estimated", details=detail,
    )


# ---------------------------------------------------------------------------
# chain audit
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ChainAudit:
    reports: tuple                 # in CHAIN_ORDER
    consistent: bool               # stronger certified => weaker certified
    inconsistencies: tuple = ()

    def verdicts(self) -> dict:
        return {r.condition: r.verdict for r in self.reports}


def chain_audit_target(
    target: ProbeTarget,
    probes: Optional[np.ndarray] = None,
    seed: Optional[SeedSpec] = None,
    mu_floor: float = MU_FLOOR,
) -> ChainAudit:
    """Run the five chain conditions on shared probes and check verdict order."""
    seed = seed if seed is not None else SeedSpec(0, (23,))
    if probes is None:
        probes = probe_points(target.domain, seed.child(1))
    reports = tuple(
        check_target_condition(target, cond, probes=probes, seed=seed.child(2),
                               mu_floor=mu_floor)
        for cond in CHAIN_ORDER
    )
    inconsistencies = []
    seen_certified = False
    for r in reports:
        if r.verdict == "certified":
            seen_certified = True
        elif seen_certified and r.verdict == "violated":
            inconsistencies.append(
                f"{r.condition} violated although a stronger condition certified "
                "(tolerance or floor misconfiguration, not a structural finding)"
            )
    return ChainAudit(reports, not inconsistencies, tuple(inconsistencies))


def chain_audit(
    instance: Instance,
    anchor="po",
    probes: Optional[np.ndarray] = None,
    n: int = risk.DEFAULT_SAMPLES,
    seed: Optional[SeedSpec] = None,
    mode: str = "auto",
    grid_step: float = 1e-3,
) -> ChainAudit:
    seed = seed if seed is not None else SeedSpec(0, (29,))
    if isinstance(anchor, str) and anchor == "po":
        oracle = solvers.grid_oracle_po(instance, grid_step, n=n,
                                        seed=seed.child(1), mode=mode)
        anchor = oracle.theta_star
    target = dpr_target(instance, anchor, n=n, seed=seed.child(2), mode=mode)
    return chain_audit_target(target, probes=probes, seed=seed.child(3))


# ---------------------------------------------------------------------------
# loss-level constants (smoothness, strong convexity, z-Lipschitzness)
# ---------------------------------------------------------------------------

def _pooled_points(instance, n_per, seed):
    thetas = np.vstack([instance.domain.corners(), instance.domain.center()[None, :]])
    return np.vstack(
        [
            distmaps.sample(instance.map, t, n_per, seed.child(i)).points
            for i, t in enumerate(thetas)
        ]
    )


def check_smoothness(
    instance: Instance,
    n_points: int = 200,
    n_thetas: int = 20,
    seed: Optional[SeedSpec] = None,
    rel_tol: float = 0.05,
) -> ConditionReport:
    """Max ratio ||grad_theta l(z) - grad_theta l(z')|| / ||z - z'||."""
    seed = seed if seed is not None else SeedSpec(0, (31,))
    pool = _pooled_points(instance, n_points, seed.child(1))
    rng = seed.child(2).rng()
    best = 0.0
    arg = None
    for t in instance.domain.uniform(n_thetas, seed.child(3)):
        idx = rng.choice(pool.shape[0], size=(64, 2))
        for i, j in idx:
            dz = np.linalg.norm(pool[i] - pool[j])
            if dz < 1e-12:
                continue
            dg = np.linalg.norm(
                losses.grad_theta(instance.loss, pool[i], t)
                - losses.grad_theta(instance.loss, pool[j], t)
            )
            if dg / dz > best:
                best, arg = dg / dz, (pool[i].tolist(), pool[j].tolist())
    declared = instance.declared.beta
    spec_str = f"{n_thetas} thetas x 64 z-pairs from pooled samples"
    if declared is not None:
        ok = declared + rel_tol * max(best, 1e-12) >= best
        wit = () if ok else (Witness(point=arg, residual=float(declared - best)),)
        return ConditionReport("SMOOTH", "certified" if ok else "violated",
                               float(best), wit, spec_str, "declared",
                               details={"declared": declared})
    return ConditionReport("SMOOTH", "certified", float(best), (), spec_str, "estimated")


def check_lipschitz(
    instance: Instance,
    n_points: int = 200,
    n_thetas: int = 20,
    seed: Optional[SeedSpec] = None,
    rel_tol: float = 0.05,
) -> ConditionReport:
    """Value- and gradient-Lipschitz constants of the loss in z.

    best_constant is the value form (sup of ||grad_z l|| over the region);
    the gradient form is reported in details. Downstream transport bounds
    consume the value form.
    """
    seed = seed if seed is not None else SeedSpec(0, (37,))
    pool = _pooled_points(instance, n_points, seed.child(1))
    rng = seed.child(2).rng()
    lip_val, lip_grad = 0.0, 0.0
    arg = None
    for t in instance.domain.uniform(n_thetas, seed.child(3)):
        grads = np.array([losses.grad_z(instance.loss, z, t) for z in pool])
        norms = np.linalg.norm(grads, axis=1)
        k = int(np.argmax(norms))
        if norms[k] > lip_val:
            lip_val, arg = float(norms[k]), (pool[k].tolist(),)
        idx = rng.choice(pool.shape[0], size=(64, 2))
        for i, j in idx:
            dz = np.linalg.norm(pool[i] - pool[j])
            if dz < 1e-12:
                continue
            lip_grad = max(lip_grad, float(np.linalg.norm(grads[i] - grads[j]) / dz))
    declared = instance.declared.lip_L
    spec_str = f"{n_thetas} thetas over pooled empirical region"
    details = {"lip_value": lip_val, "lip_grad": lip_grad}
    if declared is not None:
        ok = declared + rel_tol * max(lip_val, 1e-12) >= lip_val
        wit = () if ok else (Witness(point=arg, residual=float(declared - lip_val)),)
        return ConditionReport("LIPZ", "certified" if ok else "violated",
                               lip_val, wit, spec_str, "declared", details=details)
    return ConditionReport("LIPZ", "certified", lip_val, (), spec_str, "estimated",
                           details=details)


def check_loss_strong_convexity(
    instance: Instance,
    n_points: int = 100,
    n_pairs: int = 200,
    seed: Optional[SeedSpec] = None,
    mu_floor: float = MU_FLOOR,
) -> ConditionReport:
    """Strong convexity of the loss in theta, uniformly over sampled z."""
    seed = seed if seed is not None else SeedSpec(0, (41,))
    pool = _pooled_points(instance, n_points, seed.child(1))
    rng = seed.child(2).rng()
    box = instance.domain
    best = np.inf
    arg = None
    firsts = box.uniform(n_pairs, seed.child(3))
    seconds = box.uniform(n_pairs, seed.child(4))
    for t1, t2 in zip(firsts, seconds):
        dn = np.linalg.norm(t2 - t1)
        if dn < 1e-9:
            continue
        z = pool[rng.integers(pool.shape[0])]
        gap = (
            losses.loss_value(instance.loss, z, t2)
            - losses.loss_value(instance.loss, z, t1)
            - float(losses.grad_theta(instance.loss, z, t1) @ (t2 - t1))
        )
        ratio = 2.0 * gap / dn**2
        if ratio < best:
            best, arg = ratio, (t1.tolist(), t2.tolist(), z.tolist())
    best = float(max(best, 0.0))
    declared = instance.declared.gamma_sc
    spec_str = f"{n_pairs} theta pairs x sampled z"
    if declared is not None:
        ok = declared <= best + TOL_ABS + 0.05 * max(best, 1e-12)
        wit = () if ok else (Witness(point=arg, residual=float(best - declared)),)
        return ConditionReport("SC", "certified" if ok else "violated",
                               float(declared), wit, spec_str, "declared",
                               details={"estimated_best": best,
                                        "scope": "loss in theta, per-z"})
    verdict = "certified" if best >= mu_floor else "violated"
    return ConditionReport("SC", verdict, best, (), spec_str, "estimated",
                           details={"scope": "loss in theta, per-z"})


# ---------------------------------------------------------------------------
# transfer theorems
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class TheoremReport:
    theorem: str            # "weak_convexity_transfer" | "rsi_transfer"
    status: str             # "ok" | "premise_not_met" | "vacuous"
    premise: dict
    constants: dict
    threshold: Optional[dict] = None
    reports: dict = field(default_factory=dict)
    notes: tuple = ()

    def to_dict(self) -> dict:
        return {
            "theorem": self.theorem,
            "status": self.status,
            "premise": self.premise,
            "constants": self.constants,
            "threshold": self.threshold,
            "reports": {k: v.to_dict() for k, v in self.reports.items()},
            "notes": list(self.notes),
        }

    def any_violated(self) -> bool:
        return any(r.verdict == "violated" for r in self.reports.values())


def _gather_eps(instance, n, seed) -> tuple:
    if instance.declared.eps is not None:
        return instance.declared.eps, "declared"
    try:
        return distmaps.analytic_sensitivity(instance.map), "analytic"
    except Exception:
        rep = check_sensitivity(instance, seed=seed)
        return rep.best_constant, "estimated"


def _gather_beta(instance, seed) -> tuple:
    if instance.declared.beta is not None:
        return instance.declared.beta, "declared"
    if instance.loss.kind == "squared_ridge":
        return 2.0, "analytic"
    rep = check_smoothness(instance, seed=seed)
    return rep.best_constant, "estimated"


def _gather_lip(instance, seed) -> tuple:
    if instance.declared.lip_L is not None:
        return instance.declared.lip_L, "declared", "declared"
    region = distmaps.data_region(instance.map, instance.domain)
    try:
        consts = losses.analytic_constants(instance.loss, instance.domain, region)
        return consts.lip_value, "analytic", consts.region_note()
    except Exception:
        rep = check_lipschitz(instance, seed=seed)
        return rep.best_constant, "estimated", rep.probe_spec


def _premise(instance, n, seed, mode, grid_step, premise_tol) -> tuple:
    po = solvers.grid_oracle_po(instance, grid_step, n=n, seed=seed.child(1), mode=mode)
    ps = solvers.fixed_point_oracle_ps(instance, n=n, seed=seed.child(2), mode=mode)
    dist = float(np.linalg.norm(po.theta_star - ps.theta_star))
    tol = premise_tol if premise_tol is not None else max(10 * grid_step, 1e-2)
    info = {
        "requirement": "deployed-risk minimizer coincides with the stable point",
        "theta_po": po.theta_star.tolist(),
        "theta_ps": ps.theta_star.tolist(),
        "distance": dist,
        "tolerance": tol,
        "met": dist <= tol,
    }
    return po, ps, info


def check_weak_convexity_transfer(
    instance: Instance,
    n: int = risk.DEFAULT_SAMPLES,
    seed: Optional[SeedSpec] = None,
    mode: str = "auto",
    grid_step: float = 1e-3,
    premise_tol: Optional[float] = None,
) -> TheoremReport:
    """Threshold test mu/(2 beta) >= eps plus the star-shaped first-order probe.

    The conclusion tested is the literal first-order inequality toward the
    deployed-risk minimizer: pr(theta_po) >= pr(theta) + <grad pr(theta),
    theta_po - theta> at every probe. That star-shaped form (named
    WEAK_CVX_AT_PO) is exactly what the transfer argument yields; no global
    weak-convexity modulus is claimed.
    """
    seed = seed if seed is not None else SeedSpec(0, (43,))
    mode = risk.resolve_mode(instance, mode)
    po, ps, premise = _premise(instance, n, seed, mode, grid_step, premise_tol)
    if not premise["met"]:
        return TheoremReport("weak_convexity_transfer", "premise_not_met",
                             premise, {})
    mu_declared = instance.declared.mu_wsc
    wsc = check_target_condition(
        dpr_target(instance, po.theta_star, n=n, seed=seed.child(3), mode=mode),
        "WSC", seed=seed.child(4), declared=mu_declared,
    )
    mu = wsc.best_constant
    mu_source = wsc.constant_source
    beta, beta_source = _gather_beta(instance, seed.child(5))
    eps, eps_source = _gather_eps(instance, n, seed.child(6))
    ratio = mu / (2.0 * beta) if beta > 0 else np.inf
    threshold = {"mu_over_2beta": float(ratio), "eps": float(eps),
                 "ok": bool(ratio >= eps)}
    probes = probe_points(instance.domain, seed.child(7))
    pr_po = risk.pr(instance, po.theta_star, n=n, seed=seed.child(8), mode=mode)
    crn = seed.child(9)
    a = np.empty(probes.shape[0])
    tol = np.empty(probes.shape[0])
    for i, th in enumerate(probes):
        est = risk.pr(instance, th, n=n, seed=crn, mode=mode)
        g = risk.performative_gradient(instance, th, n=n, seed=crn, mode=mode,
                                       with_se=(mode == "monte_carlo"))
        a[i] = pr_po.value - est.value - float(g.total @ (po.theta_star - th))
        tol[i] = 3.0 * (pr_po.std_err + est.std_err + g.std_err) + TOL_ABS
    wit = _witnesses(a, np.zeros_like(a), tol, list(probes), 0.0)
    inequality = ConditionReport(
        "WEAK_CVX_AT_PO",
        "certified" if not wit else "violated",
        float(a.min()),
        wit,
        f"{probes.shape[0]} grid probes, mode={mode}",
        "estimated",
        details={"form": "first-order inequality toward theta_po"},
    )
    notes = ()
    if threshold["ok"] and inequality.verdict == "violated":
        notes = ("threshold held but the first-order inequality failed: "
                 "implementation or constants are wrong",)
    constants = {
        "mu_wsc": {"value": float(mu), "source": mu_source},
        "beta": {"value": float(beta), "source": beta_source},
        "eps": {"value": float(eps), "source": eps_source},
    }
    return TheoremReport("weak_convexity_transfer", "ok", premise, constants,
                         threshold, {"inequality": inequality}, notes)


def check_rsi_transfer(
    instance: Instance,
    n: int = risk.DEFAULT_SAMPLES,
    seed: Optional[SeedSpec] = None,
    mode: str = "auto",
    grid_step: float = 1e-3,
    premise_tol: Optional[float] = None,
) -> TheoremReport:
    """Secant-inequality transfer with constant mu' = mu - (beta + L) eps.

    Far branch (||theta - theta_po|| >= 1): <grad pr, theta - theta_po>
    >= mu' ||theta - theta_po||^2 with the fixed mu' above. Near branch:
    the same inequality with the weaker theta-dependent constant
    mu ||theta - theta_po|| - (beta + L) eps; probes where that constant is
    negative are vacuous and only counted. mu' <= 0 makes the whole statement
    vacuous at these constants and no verdict is emitted.
    """
    seed = seed if seed is not None else SeedSpec(0, (47,))
    mode = risk.resolve_mode(instance, mode)
    po, ps, premise = _premise(instance, n, seed, mode, grid_step, premise_tol)
    if not premise["met"]:
        return TheoremReport("rsi_transfer", "premise_not_met", premise, {})
    rsi = check_target_condition(
        dpr_target(instance, po.theta_star, n=n, seed=seed.child(3), mode=mode),
        "RSI", seed=seed.child(4), declared=instance.declared.mu_rsi,
    )
    mu, mu_source = rsi.best_constant, rsi.constant_source
    beta, beta_source = _gather_beta(instance, seed.child(5))
    eps, eps_source = _gather_eps(instance, n, seed.child(6))
    lip, lip_source, region = _gather_lip(instance, seed.child(7))
    mu_far = mu - (beta + lip) * eps
    constants = {
        "mu_rsi": {"value": float(mu), "source": mu_source},
        "beta": {"value": float(beta), "source": beta_source},
        "eps": {"value": float(eps), "source": eps_source},
        "lip_L": {"value": float(lip), "source": lip_source, "region": region},
        "mu_prime_far": {"value": float(mu_far), "source": "derived"},
    }
    if mu_far <= 0:
        return TheoremReport(
            "rsi_transfer", "vacuous", premise, constants,
            notes=("mu' = mu - (beta + L) eps <= 0: statement vacuous at these "
                   "constants; no certification emitted",),
        )
    probes = probe_points(instance.domain, seed.child(8))
    deltas = probes - po.theta_star[None, :]
    dn = np.linalg.norm(deltas, axis=1)
    crn = seed.child(9)
    inner = np.empty(probes.shape[0])
    tol = np.empty(probes.shape[0])
    for i, th in enumerate(probes):
        g = risk.performative_gradient(instance, th, n=n, seed=crn, mode=mode,
                                       with_se=(mode == "monte_carlo"))
        inner[i] = float(g.total @ deltas[i])
        tol[i] = 3.0 * g.std_err * max(dn[i], 1.0) + TOL_ABS
    reports = {}
    far = dn >= 1.0
    if np.any(far):
        a = inner[far] - mu_far * dn[far] ** 2
        wit = _witnesses(a, np.zeros_like(a), tol[far], list(probes[far]), 0.0)
        reports["far"] = ConditionReport(
            "RSI", "certified" if not wit else "violated", float(mu_far), wit,
            f"{int(far.sum())} probes with distance >= 1, mode={mode}",
            "estimated", details={"branch": "far"},
        )
    else:
        reports["far"] = ConditionReport(
            "RSI", "inconclusive", float(mu_far), (), "no probes at distance >= 1",
            "estimated", details={"branch": "far"},
        )
    near = (dn > 0) & (dn < 1.0)
    mu_near = mu * dn - (beta + lip) * eps
    active = near & (mu_near > 0)
    if np.any(active):
        a = inner[active] - mu_near[active] * dn[active] ** 2
        wit = _witnesses(a, np.zeros_like(a), tol[active], list(probes[active]), 0.0)
        reports["near"] = ConditionReport(
            "RSI", "certified" if not wit else "violated",
            float(mu_near[active].min()), wit,
            f"{int(active.sum())} near probes ({int((near & ~active).sum())} vacuous)",
            "estimated", details={"branch": "near"},
        )
    else:
        reports["near"] = ConditionReport(
            "RSI", "inconclusive", 0.0, (),
            f"all {int(near.sum())} near probes vacuous at these constants",
            "estimated", details={"branch": "near"},
        )
    return TheoremReport("rsi_transfer", "ok", premise, constants, None, reports)
