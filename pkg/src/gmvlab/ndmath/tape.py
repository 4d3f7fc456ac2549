"""Reverse-mode automatic differentiation on an explicit operation tape.

All values are float64 numpy arrays. Recording an operation appends a node
holding the forward value and a closure that turns the node's adjoint into
adjoint contributions for its parents. ``backward`` walks the tape once in
reverse topological order (which is simply reverse recording order) and
accumulates adjoints; gradients are returned for named leaf nodes only.

The primitive set is deliberately small: affine maps, tanh, exp, log,
square, sums, column slices and broadcast-safe elementwise arithmetic.
That is everything a Gaussian log-density objective needs, and keeps the
gradient of every primitive individually testable.
"""

from __future__ import annotations

import numpy as np

from ..errors import ContractError, InputError


def _as_f64(x) -> np.ndarray:
    return np.asarray(x, dtype=np.float64)


def _unbroadcast(grad: np.ndarray, shape: tuple) -> np.ndarray:
    """Sum `grad` down to `shape`, undoing numpy broadcasting."""
    while grad.ndim > len(shape):
        grad = grad.sum(axis=0)
    for ax, (g, s) in enumerate(zip(grad.shape, shape)):
        if s == 1 and g != 1:
            grad = grad.sum(axis=ax, keepdims=True)
    return grad


class Node:
    __slots__ = ("op", "parents", "value", "vjp")

    def __init__(self, op, parents, value, vjp):
        self.op = op
        self.parents = parents  # tuple of node indices
        self.value = value
        self.vjp = vjp  # adjoint -> tuple of parent adjoints, or None for leaves


class Tape:
    """Ordered record of primitive operations plus per-node adjoint storage."""

    def __init__(self):
        self.nodes: list[Node] = []
        self.adjoints: list = []
        self._leaves: dict[str, int] = {}

    def __len__(self):
        return len(self.nodes)

    def _record(self, op, parents, value, vjp) -> "Var":
        self.nodes.append(Node(op, parents, value, vjp))
        return Var(self, len(self.nodes) - 1)

    def leaf(self, value, name: str) -> "Var":
        """Register a named differentiable leaf (a parameter).

        Registering the same name twice returns the existing node, so a
        parameter used in several places accumulates gradient correctly.
        """
        if name in self._leaves:
            idx = self._leaves[name]
            if self.nodes[idx].value is not value:
                raise ContractError(f"leaf {name!r} re-registered with a different array")
            return Var(self, idx)
        var = self._record("leaf", (), _as_f64(value), None)
        self._leaves[name] = var.idx
        return var

    def constant(self, value) -> "Var":
        """A node that participates in the forward pass but receives no gradient."""
        return self._record("const", (), _as_f64(value), None)

    def leaf_names(self):
        return list(self._leaves)


class Var:
    """Lightweight handle to a tape node."""

    __slots__ = ("tape", "idx")

    def __init__(self, tape: Tape, idx: int):
        self.tape = tape
        self.idx = idx

    @property
    def value(self) -> np.ndarray:
        return self.tape.nodes[self.idx].value

    @property
    def shape(self):
        return self.value.shape

    def __repr__(self):
        return f"Var(idx={self.idx}, shape={self.value.shape})"

    # elementwise arithmetic; `other` may be a Var, ndarray or scalar
    def __add__(self, other):
        return add(self, other)

    def __radd__(self, other):
        return add(self, other)

    def __sub__(self, other):
        return add(self, neg(_lift(self.tape, other))) if isinstance(other, Var) else add(self, -_as_f64(other))

    def __rsub__(self, other):
        return add(neg(self), _as_f64(other))

    def __mul__(self, other):
        return mul(self, other)

    def __rmul__(self, other):
        return mul(self, other)

    def __neg__(self):
        return neg(self)


def _lift(tape: Tape, x) -> Var:
    return x if isinstance(x, Var) else tape.constant(x)


def add(a: Var, b) -> Var:
    t = a.tape
    if isinstance(b, Var):
        val = a.value + b.value
        sa, sb = a.value.shape, b.value.shape

        def vjp(g):
            return (_unbroadcast(g, sa), _unbroadcast(g, sb))

        return t._record("add", (a.idx, b.idx), val, vjp)
    b = _as_f64(b)
    sa = a.value.shape
    return t._record("add_const", (a.idx,), a.value + b, lambda g: (_unbroadcast(g, sa),))


def neg(a: Var) -> Var:
    return a.tape._record("neg", (a.idx,), -a.value, lambda g: (-g,))


def mul(a: Var, b) -> Var:
    t = a.tape
    if isinstance(b, Var):
        av, bv = a.value, b.value
        val = av * bv
        sa, sb = av.shape, bv.shape

        def vjp(g):
            return (_unbroadcast(g * bv, sa), _unbroadcast(g * av, sb))

        return t._record("mul", (a.idx, b.idx), val, vjp)
    b = _as_f64(b)
    sa = a.value.shape
    return t._record("mul_const", (a.idx,), a.value * b, lambda g: (_unbroadcast(g * b, sa),))


def affine(x: Var, w: Var, b: Var) -> Var:
    """x @ w.T + b for a batch x of shape (n, d_in), w (d_out, d_in), b (d_out,)."""
    if x.value.shape[-1] != w.value.shape[1]:
        raise InputError(
            f"affine: input width {x.value.shape[-1]} != weight width {w.value.shape[1]}"
        )
    t = x.tape
    xv, wv = x.value, w.value
    val = xv @ wv.T + b.value

    def vjp(g):
        return (g @ wv, g.T @ xv, g.sum(axis=0))

    return t._record("affine", (x.idx, w.idx, b.idx), val, vjp)


def tanh(x: Var) -> Var:
    y = np.tanh(x.value)
    return x.tape._record("tanh", (x.idx,), y, lambda g: (g * (1.0 - y * y),))


def exp(x: Var) -> Var:
    y = np.exp(x.value)
    return x.tape._record("exp", (x.idx,), y, lambda g: (g * y,))


def log(x: Var) -> Var:
    xv = x.value
    return x.tape._record("log", (x.idx,), np.log(xv), lambda g: (g / xv,))


def square(x: Var) -> Var:
    xv = x.value
    return x.tape._record("square", (x.idx,), xv * xv, lambda g: (g * (2.0 * xv),))


def vsum(x: Var) -> Var:
    """Sum over all entries, producing a scalar node."""
    shape = x.value.shape
    val = np.asarray(x.value.sum())
    return x.tape._record("sum", (x.idx,), val, lambda g: (np.broadcast_to(g, shape),))


def slice_cols(x: Var, start: int, stop: int) -> Var:
    """Column slice x[:, start:stop] of a 2-d value."""
    xv = x.value
    if xv.ndim != 2:
        raise ContractError("slice_cols expects a 2-d value")
    val = xv[:, start:stop].copy()

    def vjp(g):
        full = np.zeros_like(xv)
        full[:, start:stop] = g
        return (full,)

    return x.tape._record("slice_cols", (x.idx,), val, vjp)


def backward(tape: Tape, loss: Var) -> dict[str, np.ndarray]:
    """Accumulate adjoints for a scalar loss; returns {leaf name: gradient}.

    After the call, ``tape.adjoints[i]`` holds the adjoint of node i (None if
    the node does not influence the loss); the loss node's adjoint is 1.
    """
    if loss.value.ndim != 0:
        raise ContractError(f"backward expects a scalar loss, got shape {loss.value.shape}")
    n = loss.idx + 1
    adj: list = [None] * len(tape.nodes)
    adj[loss.idx] = np.ones(())
    for i in range(n - 1, -1, -1):
        node = tape.nodes[i]
        g = adj[i]
        if g is None or node.vjp is None:
            continue
        for p, contrib in zip(node.parents, node.vjp(g)):
            if adj[p] is None:
                adj[p] = np.array(contrib, dtype=np.float64, copy=True)
            else:
                adj[p] = adj[p] + contrib
    tape.adjoints = adj
    grads = {}
    for name, idx in tape._leaves.items():
        g = adj[idx]
        grads[name] = np.zeros_like(tape.nodes[idx].value) if g is None else g
    return grads
