"""Time stepping, equilibrium detection, and the full solve loop.

Two steppers are provided: an explicit Euler method whose step size is
adapted so no voltage moves more than dv_max per step, and an implicit
trapezoid method solved by damped fixed-point iteration.  Equilibrium is
detected logically: the run stops once the decoded assignment has been
total and clause-satisfying for hold_steps consecutive steps.
"""

from __future__ import annotations

import csv
import hashlib
import json
from dataclasses import dataclass, field, asdict
from typing import Optional

import numpy as np

from . import _kernels
from .dynamics import (
    CompiledClauses,
    DynParams,
    FlowEval,
    SolverState,
    compiled,
    decode,
    flow,
    init_state,
)
from .encode import ClauseSystem


class IntegrateError(Exception):
    pass


class NonFiniteFlow(IntegrateError):
    pass


@dataclass
class IntegratorConfig:
    method: str = "euler_adaptive"  # or "trapezoid"
    dt_init: float = 0.0625
    dt_min: float = 2.0 ** -10
    dt_max: float = 1.0
    dv_max: float = 0.1
    max_steps: int = 1_000_000
    hold_steps: int = 10
    decode_threshold: float = 0.5
    noise_amp: float = 0.0
    rng_seed: int = 0
    restarts: int = 4
    newton_tol: float = 1e-10
    newton_max_iter: int = 25
    sample_stride: int = 1000

    def validate(self) -> None:
        if self.method not in ("euler_adaptive", "trapezoid"):
            raise IntegrateError(f"unknown method {self.method!r}")
        if not self.dt_min <= self.dt_init <= self.dt_max:
            raise IntegrateError("need dt_min <= dt_init <= dt_max")
        if self.hold_steps < 1:
            raise IntegrateError("hold_steps must be >= 1")
        if self.noise_amp < 0:
            raise IntegrateError("noise_amp must be >= 0")

    def as_dict(self) -> dict:
        return asdict(self)


@dataclass
class Trajectory:
    sample_stride: int
    steps: list[int] = field(default_factory=list)
    times: list[float] = field(default_factory=list)
    states: list[SolverState] = field(default_factory=list)
    switch_events: list = field(default_factory=list)

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            M = len(self.states[0].v) if self.states else 0
            w.writerow(["step", "t"] + [f"v_{n}" for n in range(M)])
            for step, t, st in zip(self.steps, self.times, self.states):
                w.writerow([step, repr(t)] + [repr(x) for x in st.v])

    def events_json(self) -> str:
        return json.dumps(
            [{"step": e.step, "net": e.net, "new_sign": e.new_sign}
             for e in self.switch_events]
        )


@dataclass
class SolveReport:
    status: str  # "solved" | "budget_exhausted"
    assignment: Optional[dict[int, int]]
    steps_used: int
    model_time: float
    restarts_used: int
    params_echo: dict
    clause_stats: dict

    def config_hash(self) -> str:
        blob = json.dumps(self.params_echo, sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()[:16]

    def to_json(self) -> str:
        doc = {
            "status": self.status,
            "assignment": (
                None
                if self.assignment is None
                else {str(k): v for k, v in sorted(self.assignment.items())}
            ),
            "steps_used": self.steps_used,
            "model_time": self.model_time,
            "restarts_used": self.restarts_used,
            "params_echo": self.params_echo,
            "clause_stats": self.clause_stats,
            "config_hash": self.config_hash(),
        }
        return json.dumps(doc, indent=1, sort_keys=True)


# ---------------------------------------------------------------------------
# Steppers


def step_euler(
    system: ClauseSystem, state: SolverState, params: DynParams, dt: float
) -> SolverState:
    """x <- clamp(x + dt * F(x)); t <- t + dt."""
    if dt <= 0:
        raise IntegrateError("dt must be positive")
    f = flow(system, state, params)
    if not (
        np.all(np.isfinite(f.dv))
        and np.all(np.isfinite(f.dxs))
        and np.all(np.isfinite(f.dxl))
    ):
        raise NonFiniteFlow("flow produced non-finite derivatives")
    out = SolverState(
        v=state.v + dt * f.dv,
        xs=state.xs + dt * f.dxs,
        xl=state.xl + dt * f.dxl,
        t=state.t + dt,
    )
    out.clamp(params.l_max * len(system.clauses))
    return out


def adapt_dt(prev_flow: FlowEval, dt: float, config: IntegratorConfig) -> float:
    """Step size keeping the max per-step voltage change near dv_max."""
    maxabs = float(np.max(np.abs(prev_flow.dv))) if len(prev_flow.dv) else 0.0
    if maxabs == 0.0:
        return config.dt_max
    return min(config.dt_max, max(config.dt_min, 0.9 * config.dv_max / maxabs))


def step_trapezoid(
    system: ClauseSystem,
    state: SolverState,
    params: DynParams,
    dt: float,
    config: IntegratorConfig,
) -> tuple[SolverState, bool]:
    """One implicit trapezoid step x' = x + dt/2 (F(x) + F(x')).

    The implicit relation is solved by damped fixed-point iteration to
    newton_tol in max-norm; on non-convergence the step falls back to
    explicit Euler at dt/4 (second return value flags the fallback).
    """
    if dt <= 0:
        raise IntegrateError("dt must be positive")
    f0 = flow(system, state, params)
    x0 = np.concatenate([state.v, state.xs, state.xl])
    g0 = np.concatenate([f0.dv, f0.dxs, f0.dxl])
    if not np.all(np.isfinite(g0)):
        raise NonFiniteFlow("flow produced non-finite derivatives")
    M, K = len(state.v), len(state.xs)
    y = x0 + dt * g0  # explicit predictor
    damp = 1.0
    prev_res = np.inf
    converged = False
    for _ in range(config.newton_max_iter):
        ys = SolverState(v=y[:M], xs=y[M:M + K], xl=y[M + K:], t=state.t)
        fy = flow(system, ys, params)
        gy = np.concatenate([fy.dv, fy.dxs, fy.dxl])
        if not np.all(np.isfinite(gy)):
            raise NonFiniteFlow("flow produced non-finite derivatives")
        target = x0 + 0.5 * dt * (g0 + gy)
        res = float(np.max(np.abs(target - y)))
        if res <= config.newton_tol:
            y = target
            converged = True
            break
        if res > prev_res:
            damp = max(0.125, 0.5 * damp)
        prev_res = res
        y = y + damp * (target - y)
    if not converged:
        return step_euler(system, state, params, dt / 4.0), True
    out = SolverState(v=y[:M].copy(), xs=y[M:M + K].copy(), xl=y[M + K:].copy(),
                      t=state.t + dt)
    out.clamp(params.l_max * len(system.clauses))
    return out, False


# ---------------------------------------------------------------------------
# Equilibrium detection


def assignment_satisfies(system: ClauseSystem, assignment: dict[int, int]) -> bool:
    if len(assignment) < system.num_nets:
        return False
    return system.satisfied_by(assignment)


def decided_satisfies(system: ClauseSystem, state: SolverState, threshold: float) -> bool:
    """Every clause holds a decided, satisfying literal.

    Nets left undecided by such a state are don't-cares: any completion of
    the decoded assignment satisfies the whole system.
    """
    cc = compiled(system)
    lit_v = cc.lit_sign * state.v[cc.lit_net]
    return bool(np.all(np.any(cc.valid & (lit_v >= threshold), axis=1)))


def complete_decode(state: SolverState, threshold: float) -> dict[int, int]:
    """Total assignment: thresholded decode with don't-cares filled by sign."""
    out = decode(state, threshold)
    for n, vn in enumerate(state.v):
        if n not in out:
            out[n] = 1 if vn >= 0 else 0
    return out


def detect_equilibrium(
    system: ClauseSystem, recent_decodes: list[dict[int, int]], config: IntegratorConfig
) -> bool:
    """True iff the last hold_steps decodes are total and satisfy all clauses."""
    if len(recent_decodes) < config.hold_steps:
        return False
    window = recent_decodes[-config.hold_steps:]
    return all(assignment_satisfies(system, d) for d in window)


# ---------------------------------------------------------------------------
# Full solve loop


def _solve_restart_kernel(cc, system, state, params, config, restart_seed):
    """Fused numba stepping for one restart; returns (status, steps, traj)."""
    lit_len = cc.valid.sum(axis=1).astype(np.int64)
    l_cap = params.l_max * cc.num_clauses
    traj = Trajectory(sample_stride=config.sample_stride)
    traj.steps.append(0)
    traj.times.append(state.t)
    traj.states.append(state.copy())
    dt = config.dt_init
    consec = 0
    steps_done = 0
    rng_noise = None
    if config.noise_amp > 0:
        rng_noise = np.random.default_rng(
            np.random.SeedSequence([int(restart_seed), 0x6E6F6973])
        )
    empty_noise = np.zeros((0, cc.num_nets))
    while steps_done < config.max_steps:
        chunk = min(config.sample_stride, config.max_steps - steps_done)
        if rng_noise is not None:
            noise = rng_noise.standard_normal((chunk, cc.num_nets))
        else:
            noise = empty_noise
        n_steps, dt, t_el, consec, status = _kernels.euler_chunk(
            cc.lit_net, cc.lit_sign, lit_len,
            state.v, state.xs, state.xl,
            params.alpha, params.beta, params.gamma, params.delta,
            params.epsilon, params.zeta, l_cap,
            dt, config.dt_min, config.dt_max, config.dv_max,
            config.decode_threshold, config.hold_steps,
            noise, config.noise_amp,
            chunk, consec,
        )
        steps_done += n_steps
        state.t += t_el
        traj.steps.append(steps_done)
        traj.times.append(state.t)
        traj.states.append(state.copy())
        if status == _kernels.NONFINITE:
            raise NonFiniteFlow("flow produced non-finite derivatives")
        if status == _kernels.SOLVED:
            return "solved", steps_done, traj
        if n_steps < chunk:
            break
    return "budget_exhausted", steps_done, traj


def _solve_restart_python(system, state, params, config, restart_seed):
    """Reference python stepping loop (also the trapezoid path)."""
    traj = Trajectory(sample_stride=config.sample_stride)
    traj.steps.append(0)
    traj.times.append(state.t)
    traj.states.append(state.copy())
    dt = config.dt_init
    consec = 0
    fallbacks = 0
    rng_noise = None
    if config.noise_amp > 0:
        rng_noise = np.random.default_rng(
            np.random.SeedSequence([int(restart_seed), 0x6E6F6973])
        )
    for step in range(1, config.max_steps + 1):
        if config.method == "trapezoid":
            state, fb = step_trapezoid(system, state, params, dt, config)
            fallbacks += fb
            f = flow(system, state, params)
        else:
            f = flow(system, state, params)
            if not np.all(np.isfinite(f.dv)):
                raise NonFiniteFlow("flow produced non-finite derivatives")
            nv = state.v + dt * f.dv
            if rng_noise is not None:
                sd = config.noise_amp * np.sqrt(dt)
                nv = nv + sd * rng_noise.standard_normal(len(state.v))
            state = SolverState(
                v=nv,
                xs=state.xs + dt * f.dxs,
                xl=state.xl + dt * f.dxl,
                t=state.t + dt,
            )
            state.clamp(params.l_max * len(system.clauses))
        dt = adapt_dt(f, dt, config)
        if step % config.sample_stride == 0:
            traj.steps.append(step)
            traj.times.append(state.t)
            traj.states.append(state.copy())
        if decided_satisfies(system, state, config.decode_threshold):
            consec += 1
        else:
            consec = 0
        if consec >= config.hold_steps:
            if traj.steps[-1] != step:
                traj.steps.append(step)
                traj.times.append(state.t)
                traj.states.append(state.copy())
            return "solved", step, traj, fallbacks
    return "budget_exhausted", config.max_steps, traj, fallbacks


def solve(
    system: ClauseSystem,
    params: DynParams = None,
    config: IntegratorConfig = None,
) -> tuple[SolveReport, Trajectory]:
    """Run restarts until a decoded equilibrium satisfies every clause.

    Restart r uses seed rng_seed + r for its initial voltages.  A solved
    report is re-verified against the clause system before being returned;
    budget exhaustion is reported as such, never as unsatisfiability.
    """
    params = params or DynParams()
    config = config or IntegratorConfig()
    params.validate()
    config.validate()
    if not system.clauses:
        raise IntegrateError("empty clause system")
    cc = compiled(system)
    fallbacks = 0
    total_steps = 0
    traj = None
    status = "budget_exhausted"
    final_state = None
    for r in range(max(1, config.restarts)):
        rng = np.random.default_rng(int(config.rng_seed) + r)
        state = init_state(system, rng)
        if config.method == "euler_adaptive":
            status, steps, traj = _solve_restart_kernel(
                cc, system, state, params, config, int(config.rng_seed) + r
            )
        else:
            status, steps, traj, fb = _solve_restart_python(
                system, state, params, config, int(config.rng_seed) + r
            )
            fallbacks += fb
        total_steps += steps
        final_state = traj.states[-1]
        if status == "solved":
            restarts_used = r + 1
            break
    else:
        restarts_used = max(1, config.restarts)

    from .analyze import switch_events  # local import to avoid a cycle

    traj.switch_events = switch_events(traj, config.decode_threshold)

    assignment = None
    violated = []
    if status == "solved":
        assignment = complete_decode(final_state, config.decode_threshold)
        if not assignment_satisfies(system, assignment):
            raise IntegrateError(
                "internal error: solved state fails clause re-check"
            )
    else:
        violated = system.violated_clauses(
            {n: (1 if final_state.v[n] >= 0 else 0) for n in range(system.num_nets)}
        )
    report = SolveReport(
        status=status,
        assignment=assignment,
        steps_used=total_steps,
        model_time=final_state.t,
        restarts_used=restarts_used,
        params_echo={"dynamics": params.as_dict(), "integrator": config.as_dict()},
        clause_stats={
            "num_nets": system.num_nets,
            "num_clauses": len(system.clauses),
            "violated_at_end": len(violated),
            "trapezoid_fallbacks": fallbacks,
        },
    )
    return report, traj
