"""Power allocation solvers: capacity, water-filling, sensing-optimal
allocations, scalarized Pareto tracing, and the time-sharing baseline.

Everything here works on the flattened allocation vector (see
``PowerAllocation.vector``) over the feasible set
{0 <= P_nm <= cap, sum P_nm <= P}. Both the capacity objective and the
asymptotic bound are smooth with analytic gradients, so boundary points of
the capacity/distortion region come from projected gradient ascent on
capacity(p) - lambda * acrb(p) with Armijo backtracking, certified by the
gradient-mapping residual.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .acrb import acrb, acrb_gradient
from .fim import Scope
from .numerics import project_box_capped_simplex, project_box_simplex_eq
from .scenario import PowerAllocation, ScenarioConfig

_LN2 = np.log(2.0)


class Infeasible(ValueError):
    """Requested distortion target below the sensing-optimal bound."""


class MaxIterationsWarning(RuntimeWarning):
    """Solver hit its iteration cap; best iterate returned."""


@dataclass(frozen=True)
class ParetoPoint:
    """One traced boundary point of the capacity/distortion region."""

    distortion: float
    capacity: float
    allocation: PowerAllocation
    weight: float


def _gains_vector(cfg: ScenarioConfig) -> np.ndarray:
    """|h_n|^2 per allocation entry, tiled over the M symbols."""
    return np.tile(np.abs(cfg.comm_channel) ** 2, cfg.n_symbols)


def capacity(p: PowerAllocation, cfg: ScenarioConfig) -> float:
    """sum_nm log2(1 + P_nm |h_n|^2 / sigma_c^2), bits per block."""
    snr = p.vector * _gains_vector(cfg) / cfg.comm_noise_var
    return float(np.log2(1.0 + snr).sum())


def _capacity_gradient(p_vec: np.ndarray, cfg: ScenarioConfig) -> np.ndarray:
    g = _gains_vector(cfg)
    return g / (_LN2 * (cfg.comm_noise_var + p_vec * g))


def waterfill_c_optimal(cfg: ScenarioConfig) -> PowerAllocation:
    """Capacity maximizer over the box-capped budget set.

    P_nm = clip(mu - sigma_c^2 / |h_n|^2, 0, cap) with the water level mu
    chosen so the budget binds (or every entry is capped).
    """
    n, m = cfg.n_subcarriers, cfg.n_symbols
    cap, budget = cfg.per_entry_power_cap, cfg.total_power
    if cap * n * m <= budget * (1.0 + 1e-12):
        return PowerAllocation(np.full((n, m), cap))
    gains = np.abs(cfg.comm_channel) ** 2
    usable = gains > 0.0
    if not usable.any():
        # zero channel: every allocation has zero capacity
        return PowerAllocation.uniform(cfg)
    floor = np.full(n, np.inf)
    floor[usable] = cfg.comm_noise_var / gains[usable]
    per_symbol = budget / m
    if cap * usable.sum() <= per_symbol:
        p_n = np.where(usable, cap, 0.0)
    else:
        lo, hi = 0.0, float(floor[usable].max()) + cap + 1.0
        for _ in range(200):
            mu = 0.5 * (lo + hi)
            if np.clip(mu - floor, 0.0, cap).sum() > per_symbol:
                hi = mu
            else:
                lo = mu
        mu = 0.5 * (lo + hi)
        p_n = np.clip(mu - floor, 0.0, cap)
        free = (p_n > 0.0) & (p_n < cap)
        if free.any():
            capped = cap * int((p_n >= cap).sum())
            mu = (per_symbol - capped + floor[free].sum()) / free.sum()
            p_n = np.clip(mu - floor, 0.0, cap)
    powers = np.tile(p_n[:, None], (1, m))
    total = powers.sum()
    if total > budget:
        powers *= budget / total
    return PowerAllocation(powers)


def waterfill_kkt_residual(p: PowerAllocation, cfg: ScenarioConfig) -> float:
    """Relative KKT residual of an allocation for the capacity problem.

    At the optimum there is a multiplier nu > 0 with gradient == nu on free
    entries, <= nu at zero, >= nu at the cap.
    """
    vec = p.vector
    grad = _capacity_gradient(vec, cfg)
    cap = cfg.per_entry_power_cap
    tol = 1e-9 * cap
    free = (vec > tol) & (vec < cap - tol)
    at_zero = vec <= tol
    at_cap = vec >= cap - tol
    if free.any():
        nu = float(np.median(grad[free]))
    elif at_cap.any():
        nu = float(grad[at_cap].max())
    else:
        nu = float(grad.max())
    res = 0.0
    if free.any():
        res = max(res, float(np.abs(grad[free] - nu).max()))
    if at_zero.any():
        res = max(res, float(np.clip(grad[at_zero] - nu, 0.0, None).max()))
    if at_cap.any():
        res = max(res, float(np.clip(nu - grad[at_cap], 0.0, None).max()))
    return res / max(nu, 1e-300)


def sensing_optimal_closed_form(cfg: ScenarioConfig) -> PowerAllocation:
    """Edge-loaded allocation minimizing the zero-mean-RCS bound.

    With zero-mean RCS priors the bound decreases in the (n-1)^2-weighted
    power sum, so per symbol the budget goes to the highest-index
    subcarriers: floor(P / (M cap)) entries at the cap, the remainder on the
    next index down, zero elsewhere. Budget holds with equality.
    """
    for k, prior in enumerate(cfg.priors):
        if not prior.zero_mean_rcs:
            raise ValueError(f"target {k}: closed form requires zero-mean RCS priors")
    n, m = cfg.n_subcarriers, cfg.n_symbols
    cap, budget = cfg.per_entry_power_cap, cfg.total_power
    n_full = int(np.floor(budget / (m * cap) + 1e-9))
    n_full = min(n_full, n)
    powers = np.zeros((n, m))
    if n_full > 0:
        powers[n - n_full:, :] = cap
    remainder = budget - cap * m * n_full
    if remainder > 0.0 and n_full < n:
        powers[n - n_full - 1, :] = remainder / m
    return PowerAllocation(powers)


# ---------------------------------------------------------------------------
# Projected gradient core
# ---------------------------------------------------------------------------

def _projected_ascent(value, gradient, p0, project, unit, max_iter,
                      label, armijo=1e-4, shrink=0.5, rel_tol=1e-8):
    """Maximize ``value`` by projected gradient ascent with backtracking.

    Works on variables scaled by ``unit`` (the uniform per-entry power) and
    on the objective scaled by the initial gradient magnitude, so the
    starting step of 1.0 moves the steepest coordinate by about one uniform
    power unit. Converged when the unit-step gradient mapping falls below
    rel_tol times its initial scale.
    """
    p = project(np.asarray(p0, dtype=float))
    g = gradient(p)
    obj_scale = max(unit * np.abs(g).max(), 1e-300)

    def mapping_norm(p_cur, g_cur):
        step = project(p_cur + (unit * unit / obj_scale) * g_cur) - p_cur
        return np.linalg.norm(step) / unit

    r0 = mapping_norm(p, g)
    grad_scale = unit * np.linalg.norm(g) / obj_scale
    threshold = rel_tol * max(r0, grad_scale)
    f = value(p)
    best_p, best_f = p, f
    converged = r0 <= threshold
    it = 0
    while not converged and it < max_iter:
        it += 1
        step = 1.0
        accepted = False
        while step > 1e-18:
            cand = project(p + step * (unit * unit / obj_scale) * g)
            d = cand - p
            if np.linalg.norm(d) / unit <= 1e-15 * max(1.0, np.linalg.norm(p) / unit):
                break
            f_cand = value(cand)
            if f_cand >= f + armijo * float(g @ d):
                accepted = True
                break
            step *= shrink
        if not accepted:
            break
        p, f = cand, f_cand
        g = gradient(p)
        if f > best_f:
            best_p, best_f = p, f
        converged = mapping_norm(p, g) <= threshold
    if f >= best_f:
        best_p, best_f = p, f
    if not converged and it >= max_iter:
        warnings.warn(f"{label}: no convergence after {max_iter} iterations; "
                      "returning best iterate", MaxIterationsWarning)
    return best_p


def sensing_optimal_numeric(cfg: ScenarioConfig, theta_samples, scope=Scope.FULL,
                            init: PowerAllocation | None = None,
                            max_iter: int = 10000) -> PowerAllocation:
    """Minimize the asymptotic bound over {0 <= P_nm <= cap, sum = P}."""
    n, m = cfg.n_subcarriers, cfg.n_symbols
    cap, budget = cfg.per_entry_power_cap, cfg.total_power
    unit = budget / (n * m)
    if init is None:
        init = PowerAllocation.uniform(cfg)

    def value(vec):
        return -acrb(PowerAllocation.from_vector(vec, n, m), theta_samples, cfg, scope)

    def gradient(vec):
        return -acrb_gradient(PowerAllocation.from_vector(vec, n, m),
                              theta_samples, cfg, scope)

    vec = _projected_ascent(value, gradient, init.vector,
                            lambda v: project_box_simplex_eq(v, cap, budget),
                            unit, max_iter, "sensing_optimal_numeric")
    return PowerAllocation.from_vector(vec, n, m)


def _sensing_optimal_allocation(cfg, theta_samples, scope) -> PowerAllocation:
    """Closed form when it applies (refined numerically), else numeric."""
    try:
        seed = sensing_optimal_closed_form(cfg)
    except ValueError:
        return sensing_optimal_numeric(cfg, theta_samples, scope)
    return sensing_optimal_numeric(cfg, theta_samples, scope, init=seed)


def scalarized_solve(lam: float, cfg: ScenarioConfig, theta_samples,
                     scope=Scope.FULL, init: PowerAllocation | None = None,
                     max_iter: int = 10000) -> ParetoPoint:
    """Maximize capacity(p) - lambda * acrb(p) over the feasible set."""
    if lam < 0.0:
        raise ValueError("lambda must be nonnegative")
    n, m = cfg.n_subcarriers, cfg.n_symbols
    cap, budget = cfg.per_entry_power_cap, cfg.total_power
    unit = budget / (n * m)
    if init is None:
        init = waterfill_c_optimal(cfg)

    def value(vec):
        alloc = PowerAllocation.from_vector(vec, n, m)
        return capacity(alloc, cfg) - lam * acrb(alloc, theta_samples, cfg, scope)

    def gradient(vec):
        alloc = PowerAllocation.from_vector(vec, n, m)
        return (_capacity_gradient(vec, cfg)
                - lam * acrb_gradient(alloc, theta_samples, cfg, scope))

    vec = _projected_ascent(value, gradient, init.vector,
                            lambda v: project_box_capped_simplex(v, cap, budget),
                            unit, max_iter, f"scalarized_solve(lambda={lam:g})")
    alloc = PowerAllocation.from_vector(vec, n, m)
    return ParetoPoint(distortion=acrb(alloc, theta_samples, cfg, scope),
                       capacity=capacity(alloc, cfg), allocation=alloc, weight=lam)


def _gradient_ratio(cfg, theta_samples, scope) -> float:
    """Scale where capacity and bound gradients balance, at the water-filling point."""
    wf = waterfill_c_optimal(cfg)
    cap_norm = np.linalg.norm(_capacity_gradient(wf.vector, cfg))
    acrb_norm = np.linalg.norm(acrb_gradient(wf, theta_samples, cfg, scope))
    return cap_norm / max(acrb_norm, 1e-300)


def solve_for_distortion(d_target: float, cfg: ScenarioConfig, theta_samples,
                         scope=Scope.FULL, rel_tol: float = 1e-4) -> ParetoPoint:
    """Capacity-maximal point with acrb(p) <= d_target, by bisection on lambda."""
    wf = waterfill_c_optimal(cfg)
    d_wf = acrb(wf, theta_samples, cfg, scope)
    if d_target >= d_wf:
        return ParetoPoint(d_wf, capacity(wf, cfg), wf, 0.0)
    s_alloc = _sensing_optimal_allocation(cfg, theta_samples, scope)
    d_min = acrb(s_alloc, theta_samples, cfg, scope)
    if d_target < d_min * (1.0 - 1e-9):
        raise Infeasible(f"distortion target {d_target:g} below the "
                         f"sensing-optimal bound {d_min:g}")
    if d_target <= d_min * (1.0 + 1e-9):
        return ParetoPoint(d_min, capacity(s_alloc, cfg), s_alloc, np.inf)

    lam_lo, lam_hi = 0.0, _gradient_ratio(cfg, theta_samples, scope)
    point = scalarized_solve(lam_hi, cfg, theta_samples, scope, init=wf)
    grow = 0
    while point.distortion > d_target and grow < 40:
        lam_lo = lam_hi
        lam_hi *= 10.0
        point = scalarized_solve(lam_hi, cfg, theta_samples, scope,
                                 init=point.allocation)
        grow += 1
    if point.distortion > d_target:
        return ParetoPoint(d_min, capacity(s_alloc, cfg), s_alloc, np.inf)
    best = point
    for _ in range(100):
        if abs(best.distortion - d_target) <= rel_tol * d_target:
            break
        lam_mid = 0.5 * (lam_lo + lam_hi)
        point = scalarized_solve(lam_mid, cfg, theta_samples, scope,
                                 init=best.allocation)
        if point.distortion > d_target:
            lam_lo = lam_mid
        else:
            lam_hi = lam_mid
            best = point
    return best


def pareto_sweep(cfg: ScenarioConfig, theta_samples, n_points: int = 25,
                 scope=Scope.FULL) -> list:
    """Trace the capacity/distortion boundary, sorted by distortion ascending.

    Endpoints (lambda = 0 water-filling and the sensing-optimal allocation)
    come first; interior points solve the scalarized problem on a log-spaced
    lambda grid around the gradient-balance scale, warm-started in ascending
    lambda order. Dominated and duplicate points are dropped, so distortion
    is strictly increasing and capacity nondecreasing in the output.
    """
    if n_points < 2:
        raise ValueError("n_points must be >= 2")
    wf = waterfill_c_optimal(cfg)
    points = [ParetoPoint(acrb(wf, theta_samples, cfg, scope),
                          capacity(wf, cfg), wf, 0.0)]
    s_alloc = _sensing_optimal_allocation(cfg, theta_samples, scope)
    points.append(ParetoPoint(acrb(s_alloc, theta_samples, cfg, scope),
                              capacity(s_alloc, cfg), s_alloc, np.inf))
    if n_points > 2:
        ratio = _gradient_ratio(cfg, theta_samples, scope)
        lams = np.logspace(np.log10(ratio) - 3.0, np.log10(ratio) + 3.0,
                           n_points - 2)
        prev = wf
        for lam in lams:
            pt = scalarized_solve(float(lam), cfg, theta_samples, scope, init=prev)
            points.append(pt)
            prev = pt.allocation

    kept = _pareto_filter(points)
    # duplicates collapse under the filter; top up the largest gaps so the
    # requested resolution survives
    fallback = _gradient_ratio(cfg, theta_samples, scope)
    budget = 2 * n_points
    while len(kept) < n_points and budget > 0:
        lam_new = _gap_lambda(kept, fallback)
        if lam_new is None:
            break
        init = min(kept, key=lambda q: abs(np.log10(max(q.weight, 1e-300))
                                           - np.log10(lam_new))
                   if np.isfinite(q.weight) else np.inf)
        points.append(scalarized_solve(lam_new, cfg, theta_samples, scope,
                                       init=init.allocation))
        kept = _pareto_filter(points)
        budget -= 1
    return kept


def _pareto_filter(points) -> list:
    """Sort by distortion; drop duplicate-distortion and dominated points."""
    ordered = sorted(points, key=lambda q: (q.distortion, -q.capacity))
    kept = []
    for pt in ordered:
        if kept and pt.distortion <= kept[-1].distortion * (1.0 + 1e-9):
            continue
        if kept and pt.capacity <= kept[-1].capacity:
            continue
        kept.append(pt)
    return kept


def _gap_lambda(kept, fallback: float) -> float | None:
    """Lambda probing the widest relative distortion gap between neighbors."""
    if len(kept) < 2:
        return None
    gaps = [(kept[i + 1].distortion / max(kept[i].distortion, 1e-300), i)
            for i in range(len(kept) - 1)]
    _, i = max(gaps)
    lam_hi = kept[i].weight       # smaller distortion, larger lambda
    lam_lo = kept[i + 1].weight
    if np.isfinite(lam_hi) and lam_hi > 0.0 and lam_lo > 0.0:
        return float(np.sqrt(lam_hi * lam_lo))
    if not np.isfinite(lam_hi):
        return float(lam_lo * 10.0) if lam_lo > 0.0 else fallback
    return float(lam_hi / 10.0) if lam_hi > 0.0 else None


def time_sharing_segment(s_point: ParetoPoint, c_point: ParetoPoint,
                         n_points: int = 25) -> list:
    """(distortion, capacity) pairs on the chord between the two endpoints."""
    out = []
    for t in np.linspace(0.0, 1.0, n_points):
        out.append((float(t * s_point.distortion + (1.0 - t) * c_point.distortion),
                    float(t * s_point.capacity + (1.0 - t) * c_point.capacity)))
    return out
