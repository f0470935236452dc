"""Problem compilers and clausification.

Factorization and subset-sum instances are compiled into oriented Boolean
circuits built from a fan-in-2 gate basis; circuits are then clausified
into a conjunction of disjunctive clauses over the circuit's own nets
(no auxiliary variables), so that clause satisfaction coincides with
gate-level consistency.  Also home to the DIMACS CNF reader and the
remainder-recurrence arithmetic oracle used to verify factorizations.
"""

from __future__ import annotations

import json
import math
import warnings
from dataclasses import dataclass, field
from typing import Optional

from .circuit import Circuit, CircuitBuilder, GateKind


class EncodeError(Exception):
    pass


class EvenInput(EncodeError):
    pass


class TooSmall(EncodeError):
    pass


class WidthOverflow(EncodeError):
    pass


class ElementOverflow(EncodeError):
    pass


class TargetOverflow(EncodeError):
    pass


class BadHeader(EncodeError):
    pass


class LiteralOutOfRange(EncodeError):
    pass


class UnterminatedClause(EncodeError):
    pass


class ClauseCountMismatch(UserWarning):
    """Header clause count disagrees with the body (parse still succeeds)."""


# ---------------------------------------------------------------------------
# Clause-system types


@dataclass(frozen=True)
class Literal:
    net: int
    sign: int  # +1: net must be logical 1; -1: net must be logical 0

    def __post_init__(self):
        if self.sign not in (-1, 1):
            raise EncodeError(f"bad literal sign {self.sign}")


class Clause:
    """Non-empty disjunction of literals over distinct nets.

    Duplicate literals are merged at construction; a complementary pair
    makes the clause a tautology, flagged via `is_tautology` (the builder
    drops such clauses).
    """

    __slots__ = ("literals", "is_tautology")

    def __init__(self, literals):
        seen: dict[int, int] = {}
        taut = False
        for lit in literals:
            if not isinstance(lit, Literal):
                lit = Literal(*lit)
            if lit.net in seen:
                if seen[lit.net] != lit.sign:
                    taut = True
            else:
                seen[lit.net] = lit.sign
        if not seen:
            raise EncodeError("empty clause")
        self.literals: tuple[Literal, ...] = tuple(
            Literal(n, s) for n, s in seen.items()
        )
        self.is_tautology = taut

    def __len__(self):
        return len(self.literals)

    def __iter__(self):
        return iter(self.literals)

    def __eq__(self, other):
        return isinstance(other, Clause) and set(self.literals) == set(other.literals)

    def __hash__(self):
        return hash(frozenset(self.literals))

    def __repr__(self):
        body = " ".join(f"{'+' if l.sign > 0 else '-'}{l.net}" for l in self.literals)
        return f"Clause({body})"

    def satisfied_by(self, assignment: dict[int, int]) -> bool:
        return any(
            assignment[l.net] == (1 if l.sign > 0 else 0) for l in self.literals
        )


@dataclass
class ClauseSystem:
    num_nets: int
    clauses: list[Clause]
    # problem-level name -> net id (e.g. "p0", "sel3"); compilers fill this in
    origin_map: Optional[dict[str, int]] = None
    # bookkeeping filled by parse_dimacs / clausifiers
    dropped_tautologies: int = 0

    def __post_init__(self):
        for c in self.clauses:
            for lit in c:
                if not 0 <= lit.net < self.num_nets:
                    raise EncodeError(f"literal net {lit.net} out of range")

    def satisfied_by(self, assignment: dict[int, int]) -> bool:
        return all(c.satisfied_by(assignment) for c in self.clauses)

    def violated_clauses(self, assignment: dict[int, int]) -> list[int]:
        return [i for i, c in enumerate(self.clauses) if not c.satisfied_by(assignment)]

    def to_json(self) -> str:
        doc = {
            "num_nets": self.num_nets,
            "clauses": [
                [l.sign * (l.net + 1) for l in c] for c in self.clauses
            ],
        }
        if self.origin_map is not None:
            doc["origin_map"] = self.origin_map
        return json.dumps(doc, indent=1)

    @classmethod
    def from_json(cls, text: str) -> "ClauseSystem":
        doc = json.loads(text)
        clauses = [
            Clause([Literal(abs(v) - 1, 1 if v > 0 else -1) for v in c])
            for c in doc["clauses"]
        ]
        return cls(
            num_nets=int(doc["num_nets"]),
            clauses=clauses,
            origin_map=doc.get("origin_map"),
        )


# ---------------------------------------------------------------------------
# Factorization


@dataclass
class FactorInstance:
    n: int
    N: int  # bit-length index: floor(log2 n)
    p_bits: list[int]  # net ids, little-endian, N of them
    q_bits: list[int]  # net ids, little-endian, ceil(N/2) of them


def _bits(x: int, width: int) -> list[int]:
    return [(x >> j) & 1 for j in range(width)]


def _half_adder(b: CircuitBuilder, a: int, c: int) -> tuple[int, int]:
    return b.gate(GateKind.XOR, a, c), b.gate(GateKind.AND, a, c)


def _full_adder(b: CircuitBuilder, a: int, c: int, cin: int) -> tuple[int, int]:
    s1 = b.gate(GateKind.XOR, a, c)
    s = b.gate(GateKind.XOR, s1, cin)
    c1 = b.gate(GateKind.AND, a, c)
    c2 = b.gate(GateKind.AND, s1, cin)
    return s, b.gate(GateKind.OR, c1, c2)


def _add_vectors(b: CircuitBuilder, xs: list[int], ys: list[int]) -> list[int]:
    """Ripple-carry sum of two little-endian net vectors; width max+1."""
    width = max(len(xs), len(ys))
    out: list[int] = []
    carry: Optional[int] = None
    for j in range(width):
        x = xs[j] if j < len(xs) else None
        y = ys[j] if j < len(ys) else None
        if x is not None and y is not None:
            if carry is None:
                s, carry = _half_adder(b, x, y)
            else:
                s, carry = _full_adder(b, x, y, carry)
        else:
            z = x if x is not None else y
            if carry is None:
                s = z
            else:
                s, carry = _half_adder(b, z, carry)
        out.append(s)
    if carry is not None:
        out.append(carry)
    return out


def compile_factor(n: int) -> tuple[Circuit, FactorInstance]:
    """Compile `find odd p, q with p*q = n` into a multiplier circuit.

    The product nets are pinned to n's little-endian bits and every
    overflow net above the top product bit is pinned to 0, so consistent
    assignments projected onto the p/q nets are exactly the factorizations
    within the bit widths (with p_0 = q_0 = 1 pinned).
    """
    if n % 2 == 0:
        raise EvenInput(f"n must be odd, got {n}")
    if n < 9:
        raise TooSmall(f"n must be >= 9, got {n}")
    N = n.bit_length() - 1
    nq = (N + 1) // 2  # ceil(N/2)
    b = CircuitBuilder()
    p_bits = [b.new_net() for _ in range(N)]
    q_bits = [b.new_net() for _ in range(nq)]
    b.pin(p_bits[0], 1)
    b.pin(q_bits[0], 1)

    # Shift-add array multiplier: partial-product row j is p AND q_j,
    # accumulated at offset j through ripple-carry adders.
    acc: list[int] = []
    for j, qj in enumerate(q_bits):
        row = [b.gate(GateKind.AND, pi, qj) for pi in p_bits]
        if j == 0:
            acc = row
        else:
            low, high = acc[:j], acc[j:]
            acc = low + _add_vectors(b, high, row)

    n_bits = _bits(n, N + 1)
    for k, net in enumerate(acc):
        b.pin(net, n_bits[k] if k <= N else 0)

    circuit = b.build()
    inst = FactorInstance(n=n, N=N, p_bits=p_bits, q_bits=q_bits)
    return circuit, inst


def remainder_check(n: int, p: int, q: int) -> tuple[list[int], bool]:
    """Column-remainder recurrence for checking p*q = n bit by bit.

    Computes the running remainders r_0..r_N of schoolbook binary
    multiplication of p (N bits) and q (ceil(N/2) bits) against n's bits,
    and reports whether they satisfy the divisibility/positivity
    constraints, which holds exactly when p*q = n.
    """
    if n % 2 == 0:
        raise EvenInput(f"n must be odd, got {n}")
    N = n.bit_length() - 1
    nq = (N + 1) // 2
    if p <= 0 or q <= 0 or p % 2 == 0 or q % 2 == 0:
        raise WidthOverflow("p and q must be odd positive integers")
    if p.bit_length() > N:
        raise WidthOverflow(f"p={p} exceeds {N} bits")
    if q.bit_length() > nq:
        raise WidthOverflow(f"q={q} exceeds {nq} bits")

    pb = _bits(p, N)
    qb = _bits(q, nq)
    nb = _bits(n, N + 1)

    def pbit(i):
        return pb[i] if 0 <= i < N else 0

    def qbit(i):
        return qb[i] if 0 <= i < nq else 0

    r = [pb[0] * qb[0] - nb[0]]
    for j in range(1, nq):
        conv = sum(pbit(j - k) * qbit(k) for k in range(j + 1))
        r.append(conv + r[j - 1] // 2 - nb[j])
    for j in range(nq, N):
        conv = sum(pbit(j - k) * qbit(k) for k in range(nq))
        r.append(conv + r[j - 1] // 2 - nb[j])
    conv = sum(pbit(N - 1 - k) * qbit(k + 1) for k in range(nq))
    r.append(conv + r[N - 1] // 2 - 1)

    ok = r[0] == 0 and r[N] == 0
    for j in range(1, N):
        if r[j] < 0 or r[j] % 2 != 0:
            ok = False
    return r, ok


# ---------------------------------------------------------------------------
# Subset-sum


@dataclass
class SubsetSumInstance:
    G: list[int]
    p: int  # bits per element
    s: int  # target sum
    selector_bits: list[int] = field(default_factory=list)

    def to_json(self) -> str:
        return json.dumps({"G": list(self.G), "p": self.p, "s": self.s})

    @classmethod
    def from_json(cls, text: str) -> "SubsetSumInstance":
        doc = json.loads(text)
        return cls(G=[int(g) for g in doc["G"]], p=int(doc["p"]), s=int(doc["s"]))


def compile_subset_sum(
    G: list[int], p: int, s: int
) -> tuple[Circuit, SubsetSumInstance]:
    """Compile `does some subset of G sum to s?` into a circuit.

    One free selector net per element gates that element's (pinned) bits
    through AND masks; a balanced tree of ripple-carry adders sums the
    masked values, and the sum nets are pinned to s.
    """
    if not G:
        raise EncodeError("G must be non-empty")
    for g in G:
        if not 0 <= g < (1 << p):
            raise ElementOverflow(f"element {g} does not fit in {p} bits")
    if not 0 <= s <= sum(G):
        raise TargetOverflow(f"target {s} outside [0, sum(G)={sum(G)}]")

    b = CircuitBuilder()
    selectors = [b.new_net() for _ in range(len(G))]
    masked: list[list[int]] = []
    for i, g in enumerate(G):
        elem_bits = [b.new_net(pin=bit) for bit in _bits(g, p)]
        masked.append([b.gate(GateKind.AND, selectors[i], eb) for eb in elem_bits])

    # Balanced pairwise adder tree over the masked element values.
    level = masked
    while len(level) > 1:
        nxt = []
        for i in range(0, len(level) - 1, 2):
            nxt.append(_add_vectors(b, level[i], level[i + 1]))
        if len(level) % 2:
            nxt.append(level[-1])
        level = nxt
    total = level[0]

    s_bits = _bits(s, len(total))
    if s >= (1 << len(total)):
        raise TargetOverflow(f"target {s} exceeds sum width {len(total)}")
    for net, bit in zip(total, s_bits):
        b.pin(net, bit)

    circuit = b.build()
    inst = SubsetSumInstance(G=list(G), p=p, s=s, selector_bits=selectors)
    return circuit, inst


# ---------------------------------------------------------------------------
# Clausification (gate-consistency encoding over the circuit's own nets)


_GATE_CLAUSES = {
    # (sign pattern rows over (a, b, out)); +1 means the net appears positive
    GateKind.AND: [((-1, "c"), (1, "a")), ((-1, "c"), (1, "b")),
                   ((1, "c"), (-1, "a"), (-1, "b"))],
    GateKind.OR: [((1, "c"), (-1, "a")), ((1, "c"), (-1, "b")),
                  ((-1, "c"), (1, "a"), (1, "b"))],
    GateKind.NAND: [((1, "c"), (1, "a")), ((1, "c"), (1, "b")),
                    ((-1, "c"), (-1, "a"), (-1, "b"))],
    GateKind.NOR: [((-1, "c"), (-1, "a")), ((-1, "c"), (-1, "b")),
                   ((1, "c"), (1, "a"), (1, "b"))],
    GateKind.XOR: [((-1, "c"), (1, "a"), (1, "b")), ((-1, "c"), (-1, "a"), (-1, "b")),
                   ((1, "c"), (1, "a"), (-1, "b")), ((1, "c"), (-1, "a"), (1, "b"))],
    GateKind.NOT: [((1, "c"), (1, "a")), ((-1, "c"), (-1, "a"))],
}


def tseitin(circuit: Circuit) -> ClauseSystem:
    """Clausify a circuit: per-gate consistency clauses plus pin units.

    No auxiliary variables are introduced; every clause ranges over the
    gate's own terminal nets, so satisfying assignments of the result are
    exactly the assignments passing check_consistent.
    """
    clauses: list[Clause] = []
    for g in circuit.gates:
        if g.kind is GateKind.NOT:
            names = {"a": g.terminals[0], "c": g.terminals[1]}
        else:
            names = {"a": g.terminals[0], "b": g.terminals[1], "c": g.terminals[2]}
        for spec_clause in _GATE_CLAUSES[g.kind]:
            cl = Clause([Literal(names[slot], sign) for sign, slot in spec_clause])
            if not cl.is_tautology:
                clauses.append(cl)
    for nid, pin in sorted(circuit.pins().items()):
        clauses.append(Clause([Literal(nid, 1 if pin else -1)]))
    return ClauseSystem(num_nets=circuit.num_nets, clauses=clauses)


# ---------------------------------------------------------------------------
# DIMACS CNF


def parse_dimacs(text: str) -> ClauseSystem:
    """Parse standard DIMACS CNF into a clause system.

    Comment lines start with 'c', the header is `p cnf <vars> <clauses>`,
    and clauses are zero-terminated sequences of signed 1-based variables
    (mapped here to 0-based nets).  Duplicate literals are merged and
    tautological clauses dropped, with the drop count recorded on the
    returned system.
    """
    num_vars = None
    declared = None
    clauses: list[Clause] = []
    dropped = 0
    current: list[int] = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("c"):
            continue
        if line.startswith("p"):
            parts = line.split()
            if len(parts) != 4 or parts[1] != "cnf":
                raise BadHeader(f"line {lineno}: bad problem line {line!r}")
            try:
                num_vars, declared = int(parts[2]), int(parts[3])
            except ValueError:
                raise BadHeader(f"line {lineno}: bad problem line {line!r}")
            continue
        if num_vars is None:
            raise BadHeader(f"line {lineno}: clause before header")
        for tok in line.split():
            try:
                v = int(tok)
            except ValueError:
                raise LiteralOutOfRange(f"line {lineno}: bad literal {tok!r}")
            if v == 0:
                if current:
                    cl = Clause(
                        [Literal(abs(x) - 1, 1 if x > 0 else -1) for x in current]
                    )
                    if cl.is_tautology:
                        dropped += 1
                    else:
                        clauses.append(cl)
                    current = []
            else:
                if abs(v) > num_vars:
                    raise LiteralOutOfRange(
                        f"line {lineno}: variable {abs(v)} > {num_vars}"
                    )
                current.append(v)
    if num_vars is None:
        raise BadHeader("missing `p cnf` header")
    if current:
        raise UnterminatedClause("last clause not zero-terminated")
    if declared is not None and declared != len(clauses) + dropped:
        warnings.warn(
            f"header declares {declared} clauses, found {len(clauses) + dropped}",
            ClauseCountMismatch,
        )
    sys = ClauseSystem(num_nets=num_vars, clauses=clauses)
    sys.dropped_tautologies = dropped
    return sys
