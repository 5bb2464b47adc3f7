"""Explicit expression trees over {+, -, *, /} and input variables.

Trees are only built for the initial population and for the random
functions consumed by the geometric semantic operators; offspring are never
expanded into syntax.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Union

import numpy as np

__all__ = [
    "FUNCTIONS",
    "DIV_EPSILON",
    "SATURATION",
    "VariableOutOfRange",
    "Var",
    "Op",
    "RandomTree",
    "generate_full",
    "generate_grow",
    "generate_ramped",
    "RampedHalfAndHalf",
    "evaluate",
    "semantics_of_tree",
    "node_count",
    "depth",
    "saturate",
    "logistic",
]

FUNCTIONS = ("+", "-", "*", "/")
DIV_EPSILON = 1e-9
SATURATION = 1e150


class VariableOutOfRange(IndexError):
    pass


@dataclass(frozen=True)
class Var:
    index: int

    def __str__(self):
        return f"x{self.index}"


@dataclass(frozen=True)
class Op:
    symbol: str
    left: "Node"
    right: "Node"

    def __str__(self):
        return f"({self.left} {self.symbol} {self.right})"


Node = Union[Var, Op]


@dataclass(frozen=True)
class RandomTree:
    root: Node
    num_vars: int

    def __str__(self):
        return str(self.root)


def saturate(values):
    """Clamp to +-SATURATION so that products of saturated values stay finite."""
    return np.clip(values, -SATURATION, SATURATION)


def logistic(values):
    # argument range keeps the result strictly inside (0, 1) in float64
    t = np.clip(values, -700.0, 36.0)
    return 1.0 / (1.0 + np.exp(-t))


def _apply(symbol: str, a, b):
    if symbol == "+":
        out = a + b
    elif symbol == "-":
        out = a - b
    elif symbol == "*":
        out = a * b
    else:
        small = np.abs(b) < DIV_EPSILON
        out = np.where(small, 1.0, a / np.where(small, 1.0, b))
    return saturate(out)


def generate_full(num_vars: int, depth: int, rng: np.random.Generator) -> Node:
    if depth <= 1:
        return Var(int(rng.integers(num_vars)))
    symbol = FUNCTIONS[rng.integers(len(FUNCTIONS))]
    return Op(
        symbol,
        generate_full(num_vars, depth - 1, rng),
        generate_full(num_vars, depth - 1, rng),
    )


def generate_grow(num_vars: int, depth: int, rng: np.random.Generator) -> Node:
    """Grow method: below the depth limit every primitive (function or
    variable) is equally likely."""
    if depth <= 1:
        return Var(int(rng.integers(num_vars)))
    pick = int(rng.integers(len(FUNCTIONS) + num_vars))
    if pick >= len(FUNCTIONS):
        return Var(pick - len(FUNCTIONS))
    return Op(
        FUNCTIONS[pick],
        generate_grow(num_vars, depth - 1, rng),
        generate_grow(num_vars, depth - 1, rng),
    )


def generate_ramped(
    num_vars: int, max_depth: int, rng: np.random.Generator, full: bool | None = None
) -> RandomTree:
    """One ramped half-and-half tree.

    The target depth is uniform on ``1..max_depth``.  ``full`` picks the
    method; when omitted it is a fair coin.  :class:`RampedHalfAndHalf`
    alternates the two methods deterministically instead.
    """
    if num_vars < 1 or max_depth < 1:
        raise ValueError("num_vars and max_depth must be positive")
    target = int(rng.integers(1, max_depth + 1))
    if full is None:
        full = bool(rng.integers(2))
    build = generate_full if full else generate_grow
    return RandomTree(build(num_vars, target, rng), num_vars)


class RampedHalfAndHalf:
    """Tree source alternating grow and full on successive calls."""

    def __init__(self, num_vars: int, max_depth: int, rng: np.random.Generator):
        self.num_vars = num_vars
        self.max_depth = max_depth
        self.rng = rng
        self.count = 0

    def __call__(self) -> RandomTree:
        full = self.count % 2 == 1
        self.count += 1
        return generate_ramped(self.num_vars, self.max_depth, self.rng, full=full)


def _eval_node(node: Node, columns) -> np.ndarray | float:
    if isinstance(node, Var):
        return columns[node.index]
    return _apply(node.symbol, _eval_node(node.left, columns), _eval_node(node.right, columns))


def _max_var(node: Node) -> int:
    if isinstance(node, Var):
        return node.index
    return max(_max_var(node.left), _max_var(node.right))


def evaluate(tree: RandomTree | Node, inputs) -> float:
    """Value of the tree on a single input vector."""
    root = tree.root if isinstance(tree, RandomTree) else tree
    inputs = np.asarray(inputs, dtype=float).reshape(-1)
    if _max_var(root) >= inputs.size:
        raise VariableOutOfRange(
            f"tree uses x{_max_var(root)} but input has {inputs.size} value(s)"
        )
    with np.errstate(all="ignore"):
        return float(_eval_node(root, inputs))


def semantics_of_tree(tree: RandomTree | Node, dataset, bounded: bool = False) -> np.ndarray:
    """Outputs of ``tree`` on every case of ``dataset`` (a Dataset or a 2-D
    input array).  With ``bounded`` the outputs go through the logistic map
    and lie in (0, 1)."""
    root = tree.root if isinstance(tree, RandomTree) else tree
    inputs = getattr(dataset, "inputs", dataset)
    inputs = np.asarray(inputs, dtype=float)
    n, k = inputs.shape
    if _max_var(root) >= k:
        raise VariableOutOfRange(f"tree uses x{_max_var(root)} but dataset has {k} inputs")
    columns = inputs.T
    with np.errstate(all="ignore"):
        out = np.broadcast_to(_eval_node(root, columns), (n,)).astype(float)
        if bounded:
            out = logistic(out)
    return out


def node_count(tree: RandomTree | Node) -> int:
    node = tree.root if isinstance(tree, RandomTree) else tree
    if isinstance(node, Var):
        return 1
    return 1 + node_count(node.left) + node_count(node.right)


def depth(tree: RandomTree | Node) -> int:
    node = tree.root if isinstance(tree, RandomTree) else tree
    if isinstance(node, Var):
        return 1
    return 1 + max(depth(node.left), depth(node.right))
