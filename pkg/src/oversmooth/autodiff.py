"""Minimal reverse-mode differentiation on an explicit operation tape.

Primitives cover exactly what the shared-weight GCN classifier needs:
dense matmul, sparse-operator apply, bias broadcast, relu, row softmax and
masked cross-entropy gathering.  Values are float64 numpy arrays; the tape
records slot indices so a forward pass can be replayed bit-for-bit.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Any

import numpy as np


@dataclass(frozen=True)
class OpRecord:
    op: str
    inputs: tuple[int, ...]
    output: int
    aux: Any = None


class Tape:
    """Wengert list of primitive operations over value slots."""

    def __init__(self):
        self.values: list = []
        self.records: list[OpRecord] = []

    def leaf(self, value) -> int:
        """Register an input (differentiable or constant) and return its slot."""
        self.values.append(np.asarray(value, dtype=np.float64))
        return len(self.values) - 1

    def _push(self, op: str, inputs: tuple[int, ...], value, aux=None) -> int:
        self.values.append(value)
        out = len(self.values) - 1
        self.records.append(OpRecord(op, inputs, out, aux))
        return out

    # --- primitives -----------------------------------------------------

    def matmul(self, a: int, b: int) -> int:
        return self._push("matmul", (a, b), self.values[a] @ self.values[b])

    def sparse_apply(self, operator, x: int) -> int:
        """Left-multiply by a fixed sparse matrix (the graph operator)."""
        return self._push("sparse_apply", (x,), operator @ self.values[x],
                          aux=operator)

    def add_bias(self, x: int, b: int) -> int:
        return self._push("add_bias", (x, b), self.values[x] + self.values[b])

    def relu(self, x: int) -> int:
        return self._push("relu", (x,), np.maximum(self.values[x], 0.0))

    def row_softmax(self, x: int) -> int:
        z = self.values[x]
        z = z - z.max(axis=1, keepdims=True)
        e = np.exp(z)
        return self._push("row_softmax", (x,), e / e.sum(axis=1, keepdims=True))

    def cross_entropy(self, probs: int, labels: np.ndarray,
                      mask: np.ndarray) -> int:
        """Mean negative log-likelihood of ``labels`` over ``mask`` rows."""
        mask = np.asarray(mask, dtype=bool)
        if not mask.any():
            raise ValueError("cross_entropy needs a non-empty mask")
        labels = np.asarray(labels)
        idx = np.flatnonzero(mask)
        picked = self.values[probs][idx, labels[idx]]
        with np.errstate(divide="ignore"):  # zero prob -> inf loss, caught upstream
            loss = float(-np.mean(np.log(picked)))
        return self._push("cross_entropy", (probs,), loss, aux=(labels, idx))

    # --- reverse pass and replay ----------------------------------------

    def backward(self, out: int) -> dict[int, np.ndarray]:
        """Gradients of the scalar in slot ``out`` w.r.t. every slot."""
        if np.ndim(self.values[out]) != 0:
            raise ValueError("backward starts from a scalar slot")
        grads: dict[int, np.ndarray] = {out: np.asarray(1.0)}

        def accum(slot: int, g) -> None:
            if slot in grads:
                grads[slot] = grads[slot] + g
            else:
                grads[slot] = g

        for rec in reversed(self.records):
            if rec.output not in grads:
                continue
            g = grads[rec.output]
            if rec.op == "matmul":
                a, b = rec.inputs
                accum(a, g @ self.values[b].T)
                accum(b, self.values[a].T @ g)
            elif rec.op == "sparse_apply":
                accum(rec.inputs[0], rec.aux.T @ g)
            elif rec.op == "add_bias":
                x, b = rec.inputs
                accum(x, g)
                accum(b, g.sum(axis=0))
            elif rec.op == "relu":
                x = rec.inputs[0]
                accum(x, g * (self.values[x] > 0))
            elif rec.op == "row_softmax":
                s = self.values[rec.output]
                inner = (g * s).sum(axis=1, keepdims=True)
                accum(rec.inputs[0], s * (g - inner))
            elif rec.op == "cross_entropy":
                labels, idx = rec.aux
                p = self.values[rec.inputs[0]]
                gp = np.zeros_like(p)
                gp[idx, labels[idx]] = -float(g) / (idx.size * p[idx, labels[idx]])
                accum(rec.inputs[0], gp)
            else:
                raise AssertionError(f"unknown op {rec.op!r}")
        return grads

    def replay(self) -> list:
        """Re-execute the recorded operations from the current leaf values."""
        values = list(self.values)
        for rec in self.records:
            if rec.op == "matmul":
                a, b = rec.inputs
                values[rec.output] = values[a] @ values[b]
            elif rec.op == "sparse_apply":
                values[rec.output] = rec.aux @ values[rec.inputs[0]]
            elif rec.op == "add_bias":
                x, b = rec.inputs
                values[rec.output] = values[x] + values[b]
            elif rec.op == "relu":
                values[rec.output] = np.maximum(values[rec.inputs[0]], 0.0)
            elif rec.op == "row_softmax":
                z = values[rec.inputs[0]]
                z = z - z.max(axis=1, keepdims=True)
                e = np.exp(z)
                values[rec.output] = e / e.sum(axis=1, keepdims=True)
            elif rec.op == "cross_entropy":
                labels, idx = rec.aux
                picked = values[rec.inputs[0]][idx, labels[idx]]
                with np.errstate(divide="ignore"):
                    values[rec.output] = float(-np.mean(np.log(picked)))
            else:
                raise AssertionError(f"unknown op {rec.op!r}")
        return values
