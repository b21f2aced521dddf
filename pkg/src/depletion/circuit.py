"""Boolean circuit IR over {XOR, AND} with batched evaluation.

Wire 0 is the constant-one wire; NOT is expressed as XOR with it.
Input wires follow the constant, gate outputs follow the inputs, so a
circuit is a static single-assignment gate list in topological order.

Two builders share every construction routine: `CircuitBuilder`
materializes gates, `CountingBuilder` only accumulates gate counts so
benchmark-scale circuits (10^8 gates) can be sized without being built.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

XOR = 0
AND = 1


class CircuitError(Exception):
    """Base class for circuit construction/evaluation failures."""


class MissingInput(CircuitError):
    """An input party or input wire was left unassigned."""


class WidthMismatch(CircuitError):
    """An input bit vector does not match its declared wire count."""


class NotPowerOfTwo(CircuitError):
    """A builder requiring power-of-two input size got something else."""


@dataclass(frozen=True)
class GateCounts:
    and_count: int
    xor_count: int
    depth_and: int

    @property
    def total(self) -> int:
        return self.and_count + self.xor_count


class BooleanCircuit:
    """Immutable gate list with per-party input map and output wires."""

    def __init__(self, n_wires, kind, in_a, in_b, out, input_map, output_wires):
        self.n_wires = int(n_wires)
        self.kind = np.asarray(kind, dtype=np.uint8)
        self.in_a = np.asarray(in_a, dtype=np.int64)
        self.in_b = np.asarray(in_b, dtype=np.int64)
        self.out = np.asarray(out, dtype=np.int64)
        self.input_map = {int(p): list(map(int, ws)) for p, ws in input_map.items()}
        self.output_wires = list(map(int, output_wires))
        self.const_one = 0
        self._levels = None
        self._wire_and_depth = None
        self._validate()

    # -- structure ---------------------------------------------------------

    @property
    def n_gates(self) -> int:
        return len(self.kind)

    @property
    def n_input_wires(self) -> int:
        return sum(len(ws) for ws in self.input_map.values())

    def _validate(self) -> None:
        n_in = self.n_input_wires
        if self.n_wires != 1 + n_in + self.n_gates:
            raise CircuitError("wire count does not match inputs + gates")
        expect = 1 + n_in
        for g in range(self.n_gates):
            a, b, o = self.in_a[g], self.in_b[g], self.out[g]
            if o != expect + g:
                raise CircuitError(f"gate {g} output {o} breaks SSA ordering")
            if not (0 <= a < o and 0 <= b < o):
                raise CircuitError(f"gate {g} reads a wire not yet driven")
        for w in self.output_wires:
            if not 0 <= w < self.n_wires:
                raise CircuitError(f"output wire {w} is not driven")

    def gate_counts(self) -> GateCounts:
        and_count = int(np.count_nonzero(self.kind == AND))
        return GateCounts(
            and_count=and_count,
            xor_count=self.n_gates - and_count,
            depth_and=int(self.wire_and_depth().max(initial=0)),
        )

    def wire_and_depth(self) -> np.ndarray:
        """Per-wire AND-depth; inputs and the constant are depth 0."""
        if self._wire_and_depth is None:
            depth = np.zeros(self.n_wires, dtype=np.int32)
            kind, in_a, in_b, out = self.kind, self.in_a, self.in_b, self.out
            for g in range(self.n_gates):
                d = max(depth[in_a[g]], depth[in_b[g]])
                depth[out[g]] = d + 1 if kind[g] == AND else d
            self._wire_and_depth = depth
        return self._wire_and_depth

    def _level_groups(self):
        """Gates grouped by full topological level for vectorized eval."""
        if self._levels is None:
            level = np.zeros(self.n_wires, dtype=np.int32)
            kind, in_a, in_b, out = self.kind, self.in_a, self.in_b, self.out
            gate_level = np.empty(self.n_gates, dtype=np.int32)
            for g in range(self.n_gates):
                lv = max(level[in_a[g]], level[in_b[g]]) + 1
                level[out[g]] = lv
                gate_level[g] = lv
            groups = []
            if self.n_gates:
                order = np.argsort(gate_level, kind="stable")
                sorted_levels = gate_level[order]
                splits = np.flatnonzero(np.diff(sorted_levels)) + 1
                for chunk in np.split(order, splits):
                    is_and = kind[chunk] == AND
                    groups.append(
                        (
                            (in_a[chunk[~is_and]], in_b[chunk[~is_and]], out[chunk[~is_and]]),
                            (in_a[chunk[is_and]], in_b[chunk[is_and]], out[chunk[is_and]]),
                        )
                    )
            self._levels = groups
        return self._levels

    # -- evaluation --------------------------------------------------------

    def evaluate(self, inputs: dict[int, np.ndarray], extra_wires=None) -> np.ndarray:
        """Evaluate on plaintext bits.

        `inputs` maps party id to a 0/1 array of shape (n,) or (n, B);
        returns the output bits with the matching shape. With
        `extra_wires`, returns (outputs, extra wire values) instead.
        """
        values, batched = self._assign_inputs(inputs)
        for (xa, xb, xo), (aa, ab, ao) in self._level_groups():
            if len(xo):
                values[xo] = values[xa] ^ values[xb]
            if len(ao):
                values[ao] = values[aa] & values[ab]
        out = values[self.output_wires]
        if extra_wires is None:
            return out if batched else out[:, 0]
        extra = values[list(extra_wires)]
        if not batched:
            return out[:, 0], extra[:, 0]
        return out, extra

    def _assign_inputs(self, inputs):
        if set(inputs) != set(self.input_map):
            missing = set(self.input_map) - set(inputs)
            extra = set(inputs) - set(self.input_map)
            raise MissingInput(f"input parties missing={sorted(missing)} unknown={sorted(extra)}")
        arrays = {}
        batched = False
        width = 1
        for party, bits in inputs.items():
            arr = np.asarray(bits, dtype=np.uint8)
            if arr.ndim == 1:
                arr = arr[:, None]
            else:
                batched = True
                width = arr.shape[1]
            arrays[party] = arr
        values = np.zeros((self.n_wires, width), dtype=np.uint8)
        values[self.const_one] = 1
        for party, arr in arrays.items():
            wires = self.input_map[party]
            if arr.shape[0] != len(wires):
                raise WidthMismatch(
                    f"party {party}: got {arr.shape[0]} bits for {len(wires)} wires"
                )
            if arr.shape[1] != width:
                raise WidthMismatch("inconsistent batch widths across parties")
            values[wires] = arr
        return values, batched


def eval_plaintext(circuit: BooleanCircuit, inputs: dict[int, np.ndarray]) -> np.ndarray:
    """Gate-by-gate reference evaluation (see BooleanCircuit.evaluate)."""
    return circuit.evaluate(inputs)


def count_gates(circuit: BooleanCircuit) -> GateCounts:
    """Exact counts from a direct scan of the gate list."""
    return circuit.gate_counts()


# -- builders ----------------------------------------------------------------


class BuilderBase:
    """Shared oblivious building blocks expressed over xor/and_ leafs.

    Bit vectors are big-endian wire lists. Subclasses provide the leaf
    gate emitters; CountingBuilder overrides the composite blocks with
    closed-form gate counts so the same construction code can size
    circuits without materializing them.
    """

    one: int
    _zero: int | None

    def zero(self):
        if self._zero is None:
            self._zero = self.xor(self.one, self.one)
        return self._zero

    def not_(self, a):
        return self.xor(a, self.one)

    def or_(self, a, b):
        return self.xor(self.xor(a, b), self.and_(a, b))

    def or_fold(self, bits):
        """Balanced OR over one or more wires."""
        bits = list(bits)
        while len(bits) > 1:
            nxt = [self.or_(bits[i], bits[i + 1]) for i in range(0, len(bits) - 1, 2)]
            if len(bits) % 2:
                nxt.append(bits[-1])
            bits = nxt
        return bits[0]

    def and_fold(self, bits):
        bits = list(bits)
        while len(bits) > 1:
            nxt = [self.and_(bits[i], bits[i + 1]) for i in range(0, len(bits) - 1, 2)]
            if len(bits) % 2:
                nxt.append(bits[-1])
            bits = nxt
        return bits[0]

    def xor_vec(self, a, b):
        return [self.xor(x, y) for x, y in zip(a, b, strict=True)]

    def const_bits(self, value: int, width: int):
        z = self.zero()
        return [self.one if (value >> (width - 1 - i)) & 1 else z for i in range(width)]

    def lt(self, a, b):
        """Strict a < b over equal-width unsigned big-endian vectors.

        LSB-to-MSB ripple: carry c_(i+1) = b_i XOR ((b_i XOR c_i) AND
        (a_i XOR c_i)); exactly len(a) AND gates.
        """
        if len(a) != len(b) or not a:
            raise WidthMismatch("lt operands must share a positive width")
        ar, br = a[::-1], b[::-1]
        c = self.xor(br[0], self.and_(br[0], ar[0]))
        for ai, bi in zip(ar[1:], br[1:]):
            c = self.xor(bi, self.and_(self.xor(bi, c), self.xor(ai, c)))
        return c

    def eq(self, a, b):
        """a == b; len(a)-1 AND gates via an AND-tree over XNORs."""
        if len(a) != len(b) or not a:
            raise WidthMismatch("eq operands must share a positive width")
        return self.and_fold([self.not_(self.xor(x, y)) for x, y in zip(a, b)])

    def eq_zero(self, a):
        """a == 0...0; the boundary-sentinel comparison."""
        return self.and_fold([self.not_(x) for x in a])

    def eq_const(self, a, value: int):
        """a == constant; NOT only where the constant bit is zero."""
        width = len(a)
        bits = []
        for i, wire in enumerate(a):
            if (value >> (width - 1 - i)) & 1:
                bits.append(wire)
            else:
                bits.append(self.not_(wire))
        return self.and_fold(bits)

    def mux(self, sel, x0, x1):
        """Vector select: x0 when sel=0, x1 when sel=1; width AND gates."""
        return [
            self.xor(a, self.and_(sel, self.xor(a, b)))
            for a, b in zip(x0, x1, strict=True)
        ]

    def cond_swap(self, c, a, b):
        """Swap the two equal-width vectors iff c=1; width AND gates."""
        d = [self.and_(c, self.xor(x, y)) for x, y in zip(a, b, strict=True)]
        return self.xor_vec(a, d), self.xor_vec(b, d)


class CircuitBuilder(BuilderBase):
    """Materializing builder; finish() freezes a BooleanCircuit."""

    def __init__(self):
        self.one = 0
        self._zero = None
        self._n_wires = 1
        self._kind: list[int] = []
        self._a: list[int] = []
        self._b: list[int] = []
        self._input_map: dict[int, list[int]] = {}
        self._inputs_done = False
        self.and_count = 0
        self.xor_count = 0

    def input_vector(self, party: int, n: int) -> list[int]:
        if self._inputs_done:
            raise CircuitError("all inputs must be declared before the first gate")
        wires = list(range(self._n_wires, self._n_wires + n))
        self._n_wires += n
        self._input_map.setdefault(party, []).extend(wires)
        return wires

    def _gate(self, kind, a, b):
        if not (0 <= a < self._n_wires and 0 <= b < self._n_wires):
            raise CircuitError("gate input references an undriven wire")
        self._inputs_done = True
        self._kind.append(kind)
        self._a.append(a)
        self._b.append(b)
        if kind == AND:
            self.and_count += 1
        else:
            self.xor_count += 1
        out = self._n_wires
        self._n_wires += 1
        return out

    def xor(self, a, b):
        return self._gate(XOR, a, b)

    def and_(self, a, b):
        return self._gate(AND, a, b)

    @property
    def n_gates(self) -> int:
        return len(self._kind)

    @property
    def next_wire(self) -> int:
        return self._n_wires

    def finish(self, output_wires) -> BooleanCircuit:
        n_in = sum(len(w) for w in self._input_map.values())
        out = np.arange(1 + n_in, self._n_wires, dtype=np.int64)
        return BooleanCircuit(
            self._n_wires, self._kind, self._a, self._b, out,
            self._input_map, output_wires,
        )


class CountingBuilder(BuilderBase):
    """Count-only builder; wires are opaque zero tokens."""

    def __init__(self):
        self.one = 0
        self._zero = None
        self.and_count = 0
        self.xor_count = 0
        self.input_bits = 0

    def input_vector(self, party: int, n: int):
        self.input_bits += n
        return [0] * n

    def xor(self, a, b):
        self.xor_count += 1
        return 0

    def and_(self, a, b):
        self.and_count += 1
        return 0

    # Closed forms for the composite blocks (validated against the
    # materializing builder in the test suite).

    def or_(self, a, b):
        self.and_count += 1
        self.xor_count += 2
        return 0

    def lt(self, a, b):
        w = len(a)
        self.and_count += w
        self.xor_count += 1 + 3 * (w - 1)
        return 0

    def eq(self, a, b):
        w = len(a)
        self.and_count += w - 1
        self.xor_count += 2 * w
        return 0

    def eq_zero(self, a):
        w = len(a)
        self.and_count += w - 1
        self.xor_count += w
        return 0

    def eq_const(self, a, value):
        w = len(a)
        self.and_count += w - 1
        self.xor_count += w - int(value).bit_count()
        return 0

    def mux(self, sel, x0, x1):
        w = len(x0)
        self.and_count += w
        self.xor_count += 2 * w
        return [0] * w

    def cond_swap(self, c, a, b):
        w = len(a)
        self.and_count += w
        self.xor_count += 3 * w
        return [0] * w, [0] * w


# -- text format -------------------------------------------------------------

_KIND_NAMES = {XOR: "XOR", AND: "AND"}
_KIND_VALUES = {v: k for k, v in _KIND_NAMES.items()}


def save_circuit_text(circuit: BooleanCircuit) -> str:
    """Serialize to the line format: header `W G I O`, one gate per
    line, then CONST1/INPUTS/OUTPUTS trailer. Round-trips bit-exactly.
    """
    lines = [
        f"{circuit.n_wires} {circuit.n_gates} "
        f"{circuit.n_input_wires} {len(circuit.output_wires)}"
    ]
    for g in range(circuit.n_gates):
        lines.append(
            f"{_KIND_NAMES[int(circuit.kind[g])]} "
            f"{circuit.in_a[g]} {circuit.in_b[g]} {circuit.out[g]}"
        )
    lines.append(f"CONST1 {circuit.const_one}")
    for party in sorted(circuit.input_map):
        wires = " ".join(str(w) for w in circuit.input_map[party])
        lines.append(f"INPUTS {party} {wires}".rstrip())
    lines.append("OUTPUTS " + " ".join(str(w) for w in circuit.output_wires))
    return "\n".join(lines) + "\n"


def load_circuit_text(text: str) -> BooleanCircuit:
    lines = text.splitlines()
    if not lines:
        raise CircuitError("empty circuit file")
    try:
        n_wires, n_gates, n_in, n_out = map(int, lines[0].split())
    except ValueError as exc:
        raise CircuitError(f"bad header line: {lines[0]!r}") from exc
    kind, a, b, out = [], [], [], []
    for ln in lines[1 : 1 + n_gates]:
        parts = ln.split()
        if len(parts) != 4 or parts[0] not in _KIND_VALUES:
            raise CircuitError(f"bad gate line: {ln!r}")
        kind.append(_KIND_VALUES[parts[0]])
        a.append(int(parts[1]))
        b.append(int(parts[2]))
        out.append(int(parts[3]))
    input_map: dict[int, list[int]] = {}
    output_wires: list[int] = []
    for ln in lines[1 + n_gates :]:
        parts = ln.split()
        if not parts:
            continue
        if parts[0] == "CONST1":
            if int(parts[1]) != 0:
                raise CircuitError("constant-one wire must be wire 0")
        elif parts[0] == "INPUTS":
            input_map[int(parts[1])] = [int(w) for w in parts[2:]]
        elif parts[0] == "OUTPUTS":
            output_wires = [int(w) for w in parts[1:]]
        else:
            raise CircuitError(f"unknown trailer line: {ln!r}")
    circ = BooleanCircuit(n_wires, kind, a, b, out, input_map, output_wires)
    if circ.n_input_wires != n_in or len(output_wires) != n_out:
        raise CircuitError("header input/output counts disagree with trailer")
    return circ
