"""Standalone circuit fragments for the oblivious building blocks.

Each fragment assigns one operand per input party so the pieces can be
evaluated (and tested) in isolation; the compiler inlines the same
builder primitives instead of composing these fragments.
"""

from __future__ import annotations

from .circuit import BooleanCircuit, CircuitBuilder


def build_less_than(sigma: int) -> BooleanCircuit:
    """a < b over unsigned big-endian σ-bit inputs; at most σ ANDs."""
    b = CircuitBuilder()
    va = b.input_vector(0, sigma)
    vb = b.input_vector(1, sigma)
    return b.finish([b.lt(va, vb)])


def build_equality(sigma: int) -> BooleanCircuit:
    """a == b; σ-1 ANDs via an AND-tree over bitwise XNOR."""
    b = CircuitBuilder()
    va = b.input_vector(0, sigma)
    vb = b.input_vector(1, sigma)
    return b.finish([b.eq(va, vb)])


def build_mux(width: int) -> BooleanCircuit:
    """Selector s (party 0) picks x0 (party 1) or x1 (party 2)."""
    b = CircuitBuilder()
    sel = b.input_vector(0, 1)[0]
    x0 = b.input_vector(1, width)
    x1 = b.input_vector(2, width)
    return b.finish(b.mux(sel, x0, x1))


def build_cond_swap(width: int) -> BooleanCircuit:
    """Control c (party 0) swaps records A (party 1) and B (party 2)."""
    b = CircuitBuilder()
    c = b.input_vector(0, 1)[0]
    rec_a = b.input_vector(1, width)
    rec_b = b.input_vector(2, width)
    out_a, out_b = b.cond_swap(c, rec_a, rec_b)
    return b.finish(out_a + out_b)
