"""Continuous relaxation of a clause system into x' = F(x).

State: one voltage per net in [-1, 1] (+1 = logical 1, -1 = logical 0)
plus two memory variables per clause: a fast one in [0, 1] that switches
each clause between a gradient-like correction and a rigidity correction,
and a slow one in [1, l_max*K] that accumulates how persistently a clause
has been violated and weights its corrections accordingly.
"""

from __future__ import annotations

from dataclasses import dataclass, field
import numpy as np

from .encode import Clause, ClauseSystem


class DynamicsError(Exception):
    pass


class DimensionMismatch(DynamicsError):
    pass


@dataclass
class DynParams:
    alpha: float = 5.0      # long-memory rate
    beta: float = 20.0      # short-memory rate
    gamma: float = 0.25     # short-memory threshold
    delta: float = 0.05     # long-memory threshold
    epsilon: float = 1e-3   # short-memory floor offset
    zeta: float = 0.1       # rigidity weight
    l_max: float = 1e4      # long-memory cap, scaled by clause count

    def validate(self) -> None:
        for name in ("alpha", "beta", "gamma", "delta", "epsilon", "zeta", "l_max"):
            if getattr(self, name) <= 0:
                raise DynamicsError(f"{name} must be positive")
        if not self.delta < self.gamma < 1:
            raise DynamicsError("need delta < gamma < 1")
        if self.l_max < 1:
            raise DynamicsError("l_max must be >= 1")

    def as_dict(self) -> dict:
        return {
            "alpha": self.alpha, "beta": self.beta, "gamma": self.gamma,
            "delta": self.delta, "epsilon": self.epsilon, "zeta": self.zeta,
            "l_max": self.l_max,
        }


@dataclass
class SolverState:
    v: np.ndarray   # net voltages, length M
    xs: np.ndarray  # short memory, length K
    xl: np.ndarray  # long memory, length K
    t: float = 0.0

    def copy(self) -> "SolverState":
        return SolverState(self.v.copy(), self.xs.copy(), self.xl.copy(), self.t)

    def clamp(self, l_cap: float) -> None:
        np.clip(self.v, -1.0, 1.0, out=self.v)
        np.clip(self.xs, 0.0, 1.0, out=self.xs)
        np.clip(self.xl, 1.0, l_cap, out=self.xl)


@dataclass
class FlowEval:
    dv: np.ndarray
    dxs: np.ndarray
    dxl: np.ndarray


def init_state(system: ClauseSystem, rng: np.random.Generator) -> SolverState:
    """Random voltages, neutral memory (xs = 0.5, xl = 1)."""
    M, K = system.num_nets, len(system.clauses)
    return SolverState(
        v=rng.uniform(-1.0, 1.0, M),
        xs=np.full(K, 0.5),
        xl=np.ones(K),
    )


class CompiledClauses:
    """Padded array form of a clause system, for vectorized flow evaluation.

    Rows are clauses; columns are literal slots padded to the longest
    clause.  Padded slots carry net 0 / sign 0 and are masked out.
    """

    def __init__(self, system: ClauseSystem):
        K = len(system.clauses)
        if K == 0:
            raise DynamicsError("empty clause system")
        L = max(len(c) for c in system.clauses)
        self.num_nets = system.num_nets
        self.num_clauses = K
        self.max_len = L
        self.lit_net = np.zeros((K, L), dtype=np.int64)
        self.lit_sign = np.zeros((K, L), dtype=np.float64)
        self.valid = np.zeros((K, L), dtype=bool)
        for m, clause in enumerate(system.clauses):
            # fixed literal order: as stored in the clause
            for j, lit in enumerate(clause):
                self.lit_net[m, j] = lit.net
                self.lit_sign[m, j] = float(lit.sign)
                self.valid[m, j] = True


def compiled(system: ClauseSystem) -> CompiledClauses:
    cc = getattr(system, "_compiled", None)
    if cc is None or cc.num_clauses != len(system.clauses):
        cc = CompiledClauses(system)
        system._compiled = cc
    return cc


def clause_value(clause: Clause, v: np.ndarray) -> float:
    """Continuous violation measure in [0, 1]: half the smallest literal slack."""
    return 0.5 * min(1.0 - lit.sign * v[lit.net] for lit in clause)


def clause_values(cc: CompiledClauses, v: np.ndarray) -> np.ndarray:
    slack = np.where(cc.valid, 1.0 - cc.lit_sign * v[cc.lit_net], np.inf)
    return 0.5 * slack.min(axis=1)


def _flow_arrays(
    cc: CompiledClauses,
    v: np.ndarray,
    xs: np.ndarray,
    xl: np.ndarray,
    params: DynParams,
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    slack = np.where(cc.valid, 1.0 - cc.lit_sign * v[cc.lit_net], np.inf)
    m1 = slack.min(axis=1)
    C = 0.5 * m1

    # Second-smallest slack and multiplicity of the minimum, for the
    # min-over-other-literals that drives the gradient-like term.
    is_min = slack == m1[:, None]
    count_min = is_min.sum(axis=1)
    big = np.where(is_min, np.inf, slack)
    m2 = big.min(axis=1)
    min_excl = np.where(slack > m1[:, None], m1[:, None],
                        np.where(count_min[:, None] > 1, m1[:, None], m2[:, None]))
    # unit clauses: the min over the (empty) set of other literals is taken as 1
    min_excl = np.where(np.isinf(min_excl), 1.0, min_excl)

    G = 0.5 * cc.lit_sign * min_excl

    # Rigidity acts only on the clause's minimizing literal (ties broken by
    # lowest net id).
    tie_key = np.where(is_min, cc.lit_net, np.iinfo(np.int64).max)
    min_pos = np.argmin(tie_key, axis=1)
    rows = np.arange(cc.num_clauses)
    R = np.zeros_like(slack)
    min_nets = cc.lit_net[rows, min_pos]
    R[rows, min_pos] = 0.5 * (cc.lit_sign[rows, min_pos] - v[min_nets])

    w_g = xl * xs
    w_r = (1.0 + params.zeta * xl) * (1.0 - xs)
    contrib = w_g[:, None] * G + w_r[:, None] * R

    dv = np.zeros_like(v)
    flat_valid = cc.valid.ravel()
    np.add.at(dv, cc.lit_net.ravel()[flat_valid], contrib.ravel()[flat_valid])

    dxs = params.beta * (xs + params.epsilon) * (C - params.gamma)
    dxl = params.alpha * (C - params.delta)
    return dv, dxs, dxl


def flow(system: ClauseSystem, state: SolverState, params: DynParams) -> FlowEval:
    """Flow field over (v, xs, xl); derivatives are reported before clamping."""
    cc = compiled(system)
    K = cc.num_clauses
    if len(state.v) != cc.num_nets or len(state.xs) != K or len(state.xl) != K:
        raise DimensionMismatch(
            f"state dims ({len(state.v)}, {len(state.xs)}, {len(state.xl)}) "
            f"vs system dims ({cc.num_nets}, {K})"
        )
    dv, dxs, dxl = _flow_arrays(cc, state.v, state.xs, state.xl, params)
    return FlowEval(dv=dv, dxs=dxs, dxl=dxl)


# ---------------------------------------------------------------------------
# Packed-vector helpers (used by the finite-difference Jacobian and analysis)


def pack(state: SolverState) -> np.ndarray:
    return np.concatenate([state.v, state.xs, state.xl])


def unpack(x: np.ndarray, M: int, K: int) -> SolverState:
    return SolverState(v=x[:M].copy(), xs=x[M:M + K].copy(), xl=x[M + K:].copy())


def box_bounds(M: int, K: int, l_cap: float) -> tuple[np.ndarray, np.ndarray]:
    lo = np.concatenate([np.full(M, -1.0), np.zeros(K), np.ones(K)])
    hi = np.concatenate([np.full(M, 1.0), np.ones(K), np.full(K, l_cap)])
    return lo, hi


def flow_packed(system: ClauseSystem, x: np.ndarray, params: DynParams) -> np.ndarray:
    cc = compiled(system)
    M, K = cc.num_nets, cc.num_clauses
    dv, dxs, dxl = _flow_arrays(cc, x[:M], x[M:M + K], x[M + K:], params)
    return np.concatenate([dv, dxs, dxl])


def jacobian_fd(
    system: ClauseSystem,
    state: SolverState,
    params: DynParams,
    h: float = 1e-6,
    return_flags: bool = False,
):
    """Finite-difference Jacobian of the raw flow over the full state.

    Central differences where the stencil fits inside the state box,
    one-sided at the boundary (those coordinates can be reported via
    `return_flags`).  Shape (M+2K, M+2K).
    """
    if h <= 0:
        raise DynamicsError("h must be positive")
    cc = compiled(system)
    M, K = cc.num_nets, cc.num_clauses
    l_cap = params.l_max * K
    lo, hi = box_bounds(M, K, l_cap)
    x0 = pack(state)
    dim = M + 2 * K
    J = np.empty((dim, dim))
    one_sided: list[int] = []
    f0 = None
    for j in range(dim):
        if x0[j] - h >= lo[j] and x0[j] + h <= hi[j]:
            xp, xm = x0.copy(), x0.copy()
            xp[j] += h
            xm[j] -= h
            J[:, j] = (flow_packed(system, xp, params)
                       - flow_packed(system, xm, params)) / (2 * h)
        else:
            one_sided.append(j)
            if f0 is None:
                f0 = flow_packed(system, x0, params)
            step = h if x0[j] + h <= hi[j] else -h
            xp = x0.copy()
            xp[j] += step
            J[:, j] = (flow_packed(system, xp, params) - f0) / step
    if return_flags:
        return J, one_sided
    return J


def decode(state: SolverState, threshold: float = 0.5) -> dict[int, int]:
    """Partial logical read-out of the voltages at the given threshold."""
    out: dict[int, int] = {}
    for n, vn in enumerate(state.v):
        if vn >= threshold:
            out[n] = 1
        elif vn <= -threshold:
            out[n] = 0
    return out
