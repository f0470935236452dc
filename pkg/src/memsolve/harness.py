"""Brute-force oracles, instance generators, and the scaling benchmark.

The oracles are deliberately independent of the dynamical solver: plain
exhaustive enumeration (plus a meet-in-the-middle subset-sum variant for
larger N), used to verify every solver answer and to provide the
exponential baseline timings in the benchmark.
"""

from __future__ import annotations

import csv
import dataclasses
import time
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .dynamics import DynParams
from .encode import ClauseSystem, SubsetSumInstance, compile_subset_sum, tseitin
from .integrate import IntegratorConfig, solve


class HarnessError(Exception):
    pass


class TooLarge(HarnessError):
    pass


# ---------------------------------------------------------------------------
# Oracles


def brute_subset_sum(G: list[int], s: int) -> Optional[tuple[int, ...]]:
    """Exhaustive subset search; lexicographically smallest selector tuple."""
    N = len(G)
    if N > 30:
        raise TooLarge(f"brute force limited to 30 elements, got {N}")
    for mask_bits in _lex_masks(N):
        if sum(g for g, b in zip(G, mask_bits) if b) == s:
            return mask_bits
    return None


def _lex_masks(N: int):
    for m in range(1 << N):
        # bit i of the tuple is element i; lexicographic order over tuples
        yield tuple((m >> (N - 1 - i)) & 1 for i in range(N))


def meet_in_the_middle(G: list[int], s: int) -> Optional[tuple[int, ...]]:
    """2^(N/2)-time, exponential-memory subset-sum baseline.

    Splits G in half, stores all partial sums of the first half, and scans
    the second half for complements.  Returns some satisfying selector
    tuple or None; used to cross-check brute_subset_sum and its timings.
    """
    N = len(G)
    half = N // 2
    left, right = G[:half], G[half:]
    table: dict[int, tuple[int, ...]] = {}
    for mask in _lex_masks(half):
        t = sum(g for g, b in zip(left, mask) if b)
        table.setdefault(t, mask)
    for mask in _lex_masks(N - half):
        t = sum(g for g, b in zip(right, mask) if b)
        lm = table.get(s - t)
        if lm is not None:
            return lm + mask
    return None


def brute_factor(n: int) -> Optional[tuple[int, int]]:
    """Smallest odd factor in [3, sqrt(n)], or None if n is prime."""
    if n < 3 or n % 2 == 0:
        raise HarnessError("n must be odd and >= 3")
    p = 3
    while p * p <= n:
        if n % p == 0:
            return p, n // p
        p += 2
    return None


def brute_sat(system: ClauseSystem) -> Optional[dict[int, int]]:
    """First satisfying assignment in lexicographic order over {0,1}^M."""
    M = system.num_nets
    if M > 26:
        raise TooLarge(f"brute force limited to 26 nets, got {M}")
    for m in range(1 << M):
        a = {n: (m >> (M - 1 - n)) & 1 for n in range(M)}
        if system.satisfied_by(a):
            return a
    return None


# ---------------------------------------------------------------------------
# Instance generation


def gen_planted_3sat(num_vars: int, num_clauses: int, seed: int) -> ClauseSystem:
    """Random 3-SAT constructed around a hidden satisfying assignment.

    Clauses draw 3 distinct variables and random signs; any clause the
    planted assignment would violate gets one literal flipped to agree, so
    the instance is satisfiable by construction.
    """
    if num_vars < 3:
        raise HarnessError(f"need at least 3 variables, got {num_vars}")
    from .encode import Clause, Literal

    rng = np.random.default_rng([num_vars, num_clauses, seed])
    planted = rng.integers(0, 2, size=num_vars)
    clauses = []
    while len(clauses) < num_clauses:
        nets = rng.choice(num_vars, size=3, replace=False)
        signs = rng.choice([-1, 1], size=3)
        sat = any(
            (planted[n] == 1) == (s > 0) for n, s in zip(nets, signs)
        )
        if not sat:
            j = int(rng.integers(0, 3))
            signs[j] = 1 if planted[nets[j]] == 1 else -1
        clauses.append(Clause([Literal(int(n), int(s))
                               for n, s in zip(nets, signs)]))
    return ClauseSystem(num_nets=num_vars, clauses=clauses)


def gen_subset_sum_hard(N: int, seed: int) -> SubsetSumInstance:
    """Planted hard-case instance with precision equal to set size (p = N)."""
    if not 3 <= N <= 24:
        raise HarnessError(f"N must be in [3, 24], got {N}")
    rng = np.random.default_rng([N, seed])
    G = [int(x) for x in rng.integers(1, 1 << N, size=N)]
    while True:
        sel = rng.integers(0, 2, size=N)
        if sel.any():
            break
    s = int(sum(g for g, b in zip(G, sel) if b))
    return SubsetSumInstance(G=G, p=N, s=s)


# ---------------------------------------------------------------------------
# Scaling benchmark


@dataclass
class BenchRow:
    N: int
    p: int
    instance_seed: int
    status: str
    steps_used: int
    model_time: float
    wall_time: float
    brute_force_wall_time: float
    clause_count: int


BENCH_COLUMNS = [f.name for f in BenchRow.__dataclass_fields__.values()]


def _r_squared(y: np.ndarray, y_fit: np.ndarray) -> float:
    ss_res = float(np.sum((y - y_fit) ** 2))
    ss_tot = float(np.sum((y - np.mean(y)) ** 2))
    return 1.0 - ss_res / ss_tot if ss_tot > 0 else 1.0


def fit_scaling(rows: list[BenchRow]) -> list[dict]:
    """Exponential and power-law fits of median solver steps.

    Exponential: log(median steps) vs N, reported as (base, prefactor).
    Power law: log(median steps) vs log(state dimension M + 2K), reported
    as (exponent, prefactor).  Both come with R^2; neither is asserted.
    """
    byN: dict[int, list[BenchRow]] = {}
    for r in rows:
        if r.status == "solved":
            byN.setdefault(r.N, []).append(r)
    Ns = sorted(byN)
    if len(Ns) < 3:
        raise HarnessError("need at least 3 distinct N values with solved rows")
    med_steps = np.array([float(np.median([r.steps_used for r in byN[n]])) for n in Ns])
    med_dim = np.array(
        [float(np.median([r.clause_count * 2 + _nets_estimate(byN[n]) for r in byN[n]]))
         for n in Ns]
    )
    Narr = np.array(Ns, dtype=float)
    ln = np.log(med_steps)

    b_exp, a_exp = np.polyfit(Narr, ln, 1)
    r2_exp = _r_squared(ln, a_exp + b_exp * Narr)

    ldim = np.log(med_dim)
    b_pow, a_pow = np.polyfit(ldim, ln, 1)
    r2_pow = _r_squared(ln, a_pow + b_pow * ldim)

    return [
        {"model": "exponential",
         "params": {"base": float(np.exp(b_exp)), "prefactor": float(np.exp(a_exp))},
         "r2": r2_exp},
        {"model": "power_law",
         "params": {"exponent": float(b_pow), "prefactor": float(np.exp(a_pow))},
         "r2": r2_pow},
    ]


def _nets_estimate(rows: list[BenchRow]) -> float:
    # state dimension uses M + 2K; M is not in the row, so approximate it
    # from the clause count of the gate-consistency encoding (~3 clauses
    # per gate, one net per gate plus problem nets)
    return rows[0].clause_count / 3.0


def bench_scaling(
    N_range,
    instances_per_N: int,
    params: DynParams = None,
    config: IntegratorConfig = None,
    out_path=None,
) -> tuple[list[BenchRow], list[dict]]:
    """Solve planted hard-case subset-sum instances across sizes.

    For every N = p in the range and every per-size seed: compile,
    clausify, solve, verify the decoded subset against the brute-force
    oracle, and time both.  Rows stream to CSV if out_path is given.
    """
    params = params or DynParams()
    config = config or IntegratorConfig()
    rows: list[BenchRow] = []
    writer = None
    fh = None
    if out_path is not None:
        fh = open(out_path, "w", newline="")
        writer = csv.writer(fh)
        writer.writerow(BENCH_COLUMNS)
    try:
        for N in N_range:
            for seed in range(instances_per_N):
                inst = gen_subset_sum_hard(N, seed)
                circuit, cinst = compile_subset_sum(inst.G, inst.p, inst.s)
                system = tseitin(circuit)
                cfg = dataclasses.replace(config, rng_seed=config.rng_seed + seed)
                t0 = time.perf_counter()
                try:
                    report, _ = solve(system, params, cfg)
                    status = report.status
                    steps = report.steps_used
                    mtime = report.model_time
                    if status == "solved":
                        _verify_subset_row(cinst, report.assignment)
                except Exception as exc:  # per-row failures recorded, run continues
                    status = f"error:{type(exc).__name__}"
                    steps = 0
                    mtime = 0.0
                wall = time.perf_counter() - t0
                t0 = time.perf_counter()
                assert brute_subset_sum(inst.G, inst.s) is not None
                brute_wall = time.perf_counter() - t0
                row = BenchRow(
                    N=N, p=inst.p, instance_seed=seed, status=status,
                    steps_used=steps, model_time=mtime, wall_time=wall,
                    brute_force_wall_time=brute_wall,
                    clause_count=len(system.clauses),
                )
                rows.append(row)
                if writer is not None:
                    writer.writerow([getattr(row, f) for f in BENCH_COLUMNS])
                    fh.flush()
    finally:
        if fh is not None:
            fh.close()
    fits = fit_scaling(rows)
    return rows, fits


def _verify_subset_row(inst: SubsetSumInstance, assignment: dict[int, int]) -> None:
    sel = [assignment[b] for b in inst.selector_bits]
    total = sum(g for g, b in zip(inst.G, sel) if b)
    if total != inst.s:
        raise HarnessError(
            f"decoded subset sums to {total}, expected {inst.s}"
        )
