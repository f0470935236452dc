"""memsolve: Boolean problems solved by continuous dynamics with memory.

Pipeline: compile a problem (factorization, subset-sum, CNF) into a
terminal-agnostic Boolean circuit, clausify it, relax the clauses into an
ODE over net voltages plus per-clause memory, integrate to a decoded
equilibrium, and verify the answer against brute-force oracles.
"""

from .circuit import Circuit, Gate, GateKind, Net, check_consistent, eval_forward, truth_rows
from .encode import (
    Clause,
    ClauseSystem,
    FactorInstance,
    Literal,
    SubsetSumInstance,
    compile_factor,
    compile_subset_sum,
    parse_dimacs,
    remainder_check,
    tseitin,
)
from .dynamics import DynParams, SolverState, clause_value, decode, flow, jacobian_fd
from .integrate import IntegratorConfig, SolveReport, Trajectory, solve
from .analyze import avalanche_stats, classify, find_critical, switch_events
from .harness import (
    bench_scaling,
    brute_factor,
    brute_sat,
    brute_subset_sum,
    gen_planted_3sat,
    gen_subset_sum_hard,
)

__version__ = "0.1.0"
