"""Terminal-agnostic Boolean circuits.

A circuit is a set of nets (wires) plus logic gates whose semantics are
given purely by the set of consistent terminal tuples.  Gates do not
privilege inputs over outputs; an optional topological orientation is kept
only for compiler-built circuits so they can be evaluated forward as an
oracle.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from enum import Enum
from itertools import product
from typing import Optional


class CircuitError(Exception):
    pass


class MissingInput(CircuitError):
    """An unwritten net has no value in the supplied assignment."""


class NoOrientation(CircuitError):
    """Forward evaluation requested on a circuit without an orientation."""


class PartialAssignment(CircuitError):
    """Consistency check requires a total assignment."""


# Sentinel gate index used to report pin violations from check_consistent.
PIN_VIOLATION = -1


class GateKind(str, Enum):
    AND = "AND"
    OR = "OR"
    XOR = "XOR"
    NAND = "NAND"
    NOR = "NOR"
    NOT = "NOT"

    @property
    def arity(self) -> int:
        return 1 if self is GateKind.NOT else 2


_GATE_FUNC = {
    GateKind.AND: lambda a, b: a & b,
    GateKind.OR: lambda a, b: a | b,
    GateKind.XOR: lambda a, b: a ^ b,
    GateKind.NAND: lambda a, b: 1 - (a & b),
    GateKind.NOR: lambda a, b: 1 - (a | b),
}


def gate_output(kind: GateKind, inputs: tuple[int, ...]) -> int:
    """Logic value on the output terminal for the given input values."""
    if kind is GateKind.NOT:
        return 1 - inputs[0]
    return _GATE_FUNC[kind](inputs[0], inputs[1])


def truth_rows(kind: GateKind) -> frozenset[tuple[int, ...]]:
    """All consistent terminal tuples (in..., out) of a gate kind.

    Terminal-agnostic: the rows are just the satisfying set of the gate's
    logical proposition, with no input/output preference.
    """
    rows = set()
    for ins in product((0, 1), repeat=kind.arity):
        rows.add(ins + (gate_output(kind, ins),))
    return frozenset(rows)


@dataclass(frozen=True)
class Net:
    id: int
    pin: Optional[int] = None  # 0/1 if the net is pinned, else None


@dataclass(frozen=True)
class Gate:
    kind: GateKind
    terminals: tuple[int, ...]  # (inputs..., output)

    def __post_init__(self):
        if len(self.terminals) != self.kind.arity + 1:
            raise CircuitError(
                f"{self.kind.value} gate needs {self.kind.arity + 1} terminals, "
                f"got {len(self.terminals)}"
            )


@dataclass
class Circuit:
    nets: list[Net] = field(default_factory=list)
    gates: list[Gate] = field(default_factory=list)
    # Topological gate order, present only for compiler-built circuits.
    orientation: Optional[list[int]] = None

    @property
    def num_nets(self) -> int:
        return len(self.nets)

    def pins(self) -> dict[int, int]:
        return {n.id: n.pin for n in self.nets if n.pin is not None}

    def validate(self) -> None:
        for i, net in enumerate(self.nets):
            if net.id != i:
                raise CircuitError("net ids must be dense and contiguous from 0")
            if net.pin not in (None, 0, 1):
                raise CircuitError(f"bad pin value on net {i}: {net.pin}")
        for g in self.gates:
            for t in g.terminals:
                if not 0 <= t < self.num_nets:
                    raise CircuitError(f"gate terminal {t} out of range")
        if self.orientation is not None:
            if sorted(self.orientation) != list(range(len(self.gates))):
                raise CircuitError("orientation must be a permutation of gate indices")
            writers: dict[int, int] = {}
            for gi in self.orientation:
                out = self.gates[gi].terminals[-1]
                if out in writers:
                    raise CircuitError(f"net {out} written by more than one gate")
                writers[out] = gi
            seen: set[int] = set()
            for gi in self.orientation:
                g = self.gates[gi]
                for t in g.terminals[:-1]:
                    if t in writers and writers[t] not in seen:
                        raise CircuitError("orientation is not topological")
                seen.add(gi)

    def written_nets(self) -> set[int]:
        return {g.terminals[-1] for g in self.gates}

    # -- JSON round trip ---------------------------------------------------

    def to_json(self) -> str:
        doc = {
            "nets": self.num_nets,
            "pins": {str(k): v for k, v in sorted(self.pins().items())},
            "gates": [
                {"kind": g.kind.value, "terminals": list(g.terminals)}
                for g in self.gates
            ],
        }
        if self.orientation is not None:
            doc["orientation"] = list(self.orientation)
        return json.dumps(doc, indent=1)

    @classmethod
    def from_json(cls, text: str) -> "Circuit":
        doc = json.loads(text)
        pins = {int(k): int(v) for k, v in doc.get("pins", {}).items()}
        nets = [Net(i, pins.get(i)) for i in range(int(doc["nets"]))]
        gates = [
            Gate(GateKind(g["kind"]), tuple(int(t) for t in g["terminals"]))
            for g in doc["gates"]
        ]
        orientation = doc.get("orientation")
        if orientation is not None:
            orientation = [int(i) for i in orientation]
        c = cls(nets=nets, gates=gates, orientation=orientation)
        c.validate()
        return c


class CircuitBuilder:
    """Incrementally builds an oriented circuit (used by the compilers)."""

    def __init__(self):
        self._nets: list[Net] = []
        self._gates: list[Gate] = []

    def new_net(self, pin: Optional[int] = None) -> int:
        nid = len(self._nets)
        self._nets.append(Net(nid, pin))
        return nid

    def pin(self, net: int, value: int) -> None:
        old = self._nets[net]
        if old.pin is not None and old.pin != value:
            raise CircuitError(f"net {net} pinned to conflicting values")
        self._nets[net] = Net(net, value)

    def gate(self, kind: GateKind, *inputs: int) -> int:
        out = self.new_net()
        self._gates.append(Gate(kind, tuple(inputs) + (out,)))
        return out

    def build(self) -> Circuit:
        c = Circuit(
            nets=list(self._nets),
            gates=list(self._gates),
            orientation=list(range(len(self._gates))),
        )
        c.validate()
        return c


def eval_forward(circuit: Circuit, inputs: dict[int, int]) -> dict[int, int]:
    """Evaluate an oriented circuit on input values.

    `inputs` must assign every net not written by any gate.  Pins are not
    enforced here; callers compare the result against pins themselves.
    """
    if circuit.orientation is None:
        raise NoOrientation("circuit has no orientation")
    written = circuit.written_nets()
    values = dict(inputs)
    for nid in range(circuit.num_nets):
        if nid not in written and nid not in values:
            raise MissingInput(f"net {nid} is unwritten and has no input value")
    for gi in circuit.orientation:
        g = circuit.gates[gi]
        ins = tuple(values[t] for t in g.terminals[:-1])
        values[g.terminals[-1]] = gate_output(g.kind, ins)
    return values


def check_consistent(
    circuit: Circuit, assignment: dict[int, int]
) -> tuple[bool, list[int]]:
    """Check a total assignment against every gate's truth table and all pins.

    Returns (ok, violating gate indices); pin violations are reported with
    the sentinel index PIN_VIOLATION.
    """
    for nid in range(circuit.num_nets):
        if nid not in assignment:
            raise PartialAssignment(f"net {nid} unassigned")
    bad: list[int] = []
    for i, g in enumerate(circuit.gates):
        row = tuple(assignment[t] for t in g.terminals)
        if row not in truth_rows(g.kind):
            bad.append(i)
    for nid, pin in sorted(circuit.pins().items()):
        if assignment[nid] != pin:
            if PIN_VIOLATION not in bad:
                bad.append(PIN_VIOLATION)
    return (not bad, bad)
