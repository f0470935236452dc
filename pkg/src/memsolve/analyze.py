"""Phase-space diagnostics for the clause dynamics.

Critical points are zeros of the box-projected flow field (derivative
components that would push a clamped coordinate out of its range are
zeroed, matching what the clamped steppers actually integrate).  They are
located by damped Newton iteration from random interior seeds, classified
by the real parts of the Jacobian spectrum, and complemented by
switch-event extraction and avalanche statistics over trajectories.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .dynamics import (
    DynParams,
    SolverState,
    box_bounds,
    compiled,
    decode,
    flow_packed,
    pack,
)
from .encode import ClauseSystem


class AnalyzeError(Exception):
    pass


class ResidualTooLarge(AnalyzeError):
    pass


@dataclass
class CriticalPoint:
    x: np.ndarray
    residual: float
    eig_re: np.ndarray  # sorted ascending
    index: int          # unstable directions (eig_re > tol)
    n_center: int       # |eig_re| <= tol
    kind: str           # stable | saddle | repeller | degenerate

    def to_dict(self) -> dict:
        return {
            "x": [float(a) for a in self.x],
            "residual": self.residual,
            "eig_re": [float(a) for a in self.eig_re],
            "index": self.index,
            "n_center": self.n_center,
            "kind": self.kind,
        }


@dataclass(frozen=True)
class SwitchEvent:
    step: int
    net: int
    new_sign: int  # +1 or -1


@dataclass
class AvalancheStats:
    histogram: dict[int, int]
    max_size: int
    mean_size: float

    def to_csv_rows(self) -> list[tuple[int, int]]:
        return sorted(self.histogram.items())


# ---------------------------------------------------------------------------
# Projected flow and its finite-difference Jacobian


def projected_flow(
    system: ClauseSystem, x: np.ndarray, params: DynParams
) -> np.ndarray:
    """Flow with outward components zeroed at the state box boundary."""
    cc = compiled(system)
    M, K = cc.num_nets, cc.num_clauses
    lo, hi = box_bounds(M, K, params.l_max * K)
    f = flow_packed(system, np.clip(x, lo, hi), params)
    f = np.where((x <= lo) & (f < 0), 0.0, f)
    f = np.where((x >= hi) & (f > 0), 0.0, f)
    return f


def projected_jacobian_fd(
    system: ClauseSystem, x: np.ndarray, params: DynParams, h: float = 1e-6
) -> np.ndarray:
    """One-sided-at-bounds finite differences of the projected flow."""
    cc = compiled(system)
    M, K = cc.num_nets, cc.num_clauses
    lo, hi = box_bounds(M, K, params.l_max * K)
    dim = len(x)
    J = np.empty((dim, dim))
    f0 = projected_flow(system, x, params)
    for j in range(dim):
        hp = h if x[j] + h <= hi[j] else 0.0
        hm = h if x[j] - h >= lo[j] else 0.0
        if hp and hm:
            xp, xm = x.copy(), x.copy()
            xp[j] += h
            xm[j] -= h
            J[:, j] = (projected_flow(system, xp, params)
                       - projected_flow(system, xm, params)) / (2 * h)
        else:
            step = h if hp else -h
            xp = x.copy()
            xp[j] += step
            J[:, j] = (projected_flow(system, xp, params) - f0) / step
    return J


# ---------------------------------------------------------------------------
# Critical-point search and classification


def find_critical(
    system: ClauseSystem,
    params: DynParams = None,
    seeds: int = 64,
    rng_seed: int = 0,
    newton_tol: float = 1e-8,
    max_iter: int = 60,
    dedup_tol: float = 1e-4,
    lam_tol_rel: float = 1e-6,
) -> list[CriticalPoint]:
    """Damped Newton search for zeros of the projected flow.

    Each random interior seed is iterated with least-squares Newton steps
    (a pseudo-inverse solve, so singular Jacobians at the boundary are
    fine); converged points are deduplicated by max-norm distance and
    classified.  Non-converged seeds are dropped.
    """
    params = params or DynParams()
    if seeds < 1:
        raise AnalyzeError("seeds must be >= 1")
    cc = compiled(system)
    M, K = cc.num_nets, cc.num_clauses
    lo, hi = box_bounds(M, K, params.l_max * K)
    # interior seeding; long memory is seeded near its floor where the
    # interesting equilibria live
    seed_hi = np.concatenate([np.full(M, 1.0), np.ones(K), np.full(K, 2.0)])
    rng = np.random.default_rng(rng_seed)
    found: list[np.ndarray] = []
    for _ in range(seeds):
        x = rng.uniform(lo, seed_hi)
        x = _newton(system, x, params, lo, hi, newton_tol, max_iter)
        if x is None:
            continue
        if any(np.max(np.abs(x - y)) < dedup_tol for y in found):
            continue
        found.append(x)
    return [
        classify(x, system, params, lam_tol_rel=lam_tol_rel, newton_tol=newton_tol)
        for x in found
    ]


def _newton(system, x, params, lo, hi, tol, max_iter):
    f = projected_flow(system, x, params)
    res = np.max(np.abs(f))
    for _ in range(max_iter):
        if res <= tol:
            return x
        J = projected_jacobian_fd(system, x, params)
        step, *_ = np.linalg.lstsq(J, -f, rcond=None)
        if not np.all(np.isfinite(step)):
            return None
        improved = False
        damp = 1.0
        for _ in range(8):
            xn = np.clip(x + damp * step, lo, hi)
            fn = projected_flow(system, xn, params)
            rn = np.max(np.abs(fn))
            if rn < res:
                x, f, res = xn, fn, rn
                improved = True
                break
            damp *= 0.5
        if not improved:
            return None
    return x if res <= tol else None


def classify(
    cp_location: np.ndarray,
    system: ClauseSystem,
    params: DynParams = None,
    lam_tol_rel: float = 1e-6,
    newton_tol: float = 1e-8,
) -> CriticalPoint:
    """Stability classification from the Jacobian eigenvalue real parts."""
    params = params or DynParams()
    f = projected_flow(system, cp_location, params)
    residual = float(np.max(np.abs(f)))
    if residual > newton_tol:
        raise ResidualTooLarge(f"residual {residual} exceeds {newton_tol}")
    J = projected_jacobian_fd(system, cp_location, params)
    eig_re = np.sort(np.linalg.eigvals(J).real)
    scale = float(np.max(np.abs(eig_re))) if len(eig_re) else 0.0
    tol = lam_tol_rel * max(scale, 1.0)
    index = int(np.sum(eig_re > tol))
    n_center = int(np.sum(np.abs(eig_re) <= tol))
    n_stable = len(eig_re) - index - n_center
    if index == 0 and n_stable >= 1:
        kind = "stable"
    elif index >= 1 and n_stable >= 1:
        kind = "saddle"
    elif index == len(eig_re) and index >= 1:
        kind = "repeller"
    else:
        kind = "degenerate"
    return CriticalPoint(
        x=cp_location,
        residual=residual,
        eig_re=eig_re,
        index=index,
        n_center=n_center,
        kind=kind,
    )


def atlas_json(points: list[CriticalPoint]) -> str:
    return json.dumps([p.to_dict() for p in points], indent=1)


# ---------------------------------------------------------------------------
# Switch events and avalanches


def switch_events(trajectory, decode_threshold: float = 0.5) -> list[SwitchEvent]:
    """Logical sign flips of each net along a trajectory's samples.

    Hysteresis at +-decode_threshold: a net must be decided one way and
    then decided the other way to emit an event; wandering inside the
    undecided band emits nothing.
    """
    if not trajectory.states:
        raise AnalyzeError("empty trajectory")
    last_sign: dict[int, int] = {}
    events: list[SwitchEvent] = []
    for step, st in zip(trajectory.steps, trajectory.states):
        d = decode(st, decode_threshold)
        for net in sorted(d):
            sign = 1 if d[net] == 1 else -1
            prev = last_sign.get(net)
            if prev is not None and sign != prev:
                events.append(SwitchEvent(step=step, net=net, new_sign=sign))
            last_sign[net] = sign
    return events


def avalanche_stats(events: list[SwitchEvent], window_steps: int) -> AvalancheStats:
    """Greedy clustering of switch events within window_steps of each other."""
    if window_steps < 1:
        raise AnalyzeError("window_steps must be >= 1")
    hist: dict[int, int] = {}
    sizes: list[int] = []
    steps = sorted(e.step for e in events)
    i = 0
    while i < len(steps):
        size = 1
        while i + 1 < len(steps) and steps[i + 1] - steps[i] <= window_steps:
            size += 1
            i += 1
        sizes.append(size)
        i += 1
    for s in sizes:
        hist[s] = hist.get(s, 0) + 1
    return AvalancheStats(
        histogram=hist,
        max_size=max(sizes) if sizes else 0,
        mean_size=float(np.mean(sizes)) if sizes else 0.0,
    )
