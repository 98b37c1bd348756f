"""Node-similarity measures, their disconnected-graph extension, and a
randomized checker for the defining axioms."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .graph import Graph, connected_components, induced_subgraph

# Rows with L2 norm below this floor contribute zero cosine-distance terms.
ZERO_NORM_FLOOR = 1e-12

# Edge entries are processed in blocks to bound peak memory on large graphs.
_BLOCK = 1 << 18

MeasureFn = Callable[[np.ndarray, Graph], float]


def _check_features(x: np.ndarray, g: Graph) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    if x.ndim == 1:
        x = x[:, None]
    if x.ndim != 2 or x.shape[0] != g.node_count:
        raise ValueError(
            f"feature matrix has {x.shape[0] if x.ndim else 0} rows, "
            f"graph has {g.node_count} nodes")
    return x


def dirichlet_energy(x: np.ndarray, g: Graph, p: float = 2.0,
                     degree_normalized: bool = False) -> float:
    """Neighborhood energy (1/v) sum_i sum_{j in N(i)} ||x_i - x_j||_p^p.

    Each undirected edge contributes once per orientation.  With
    ``degree_normalized`` the inner term becomes
    ||x_i / sqrt(1 + d_i) - x_j / sqrt(1 + d_j)||_p^p; the leading 1/v is
    kept in both variants.
    """
    if p < 1:
        raise ValueError("p must be at least 1")
    x = _check_features(x, g)
    if degree_normalized:
        x = x / np.sqrt(1.0 + g.degrees)[:, None]
    rows, cols = g.directed_pairs()
    total = 0.0
    for start in range(0, rows.size, _BLOCK):
        sl = slice(start, min(start + _BLOCK, rows.size))
        diff = x[rows[sl]] - x[cols[sl]]
        if p == 2.0:
            total += float(np.einsum("ij,ij->", diff, diff))
        else:
            np.abs(diff, out=diff)
            total += float(np.sum(diff ** p))
    return total / g.node_count


def dirichlet_measure(x: np.ndarray, g: Graph, p: float = 2.0,
                      degree_normalized: bool = False) -> float:
    """p-th root of the Dirichlet energy; the canonical node-similarity measure."""
    return dirichlet_energy(x, g, p, degree_normalized) ** (1.0 / p)


def mad(x: np.ndarray, g: Graph) -> float:
    """Mean average cosine distance over 1-neighborhoods.

    Terms whose operands have near-zero norm contribute 0.  Not a
    node-similarity measure (zero on any sign-aligned scalar features).
    """
    x = _check_features(x, g)
    norms = np.linalg.norm(x, axis=1)
    rows, cols = g.directed_pairs()
    total = 0.0
    for start in range(0, rows.size, _BLOCK):
        sl = slice(start, min(start + _BLOCK, rows.size))
        r, c = rows[sl], cols[sl]
        valid = (norms[r] >= ZERO_NORM_FLOOR) & (norms[c] >= ZERO_NORM_FLOOR)
        dots = np.einsum("ij,ij->i", x[r], x[c])
        denom = np.where(valid, norms[r] * norms[c], 1.0)
        cos = np.clip(dots / denom, -1.0, 1.0)
        total += float(np.sum(np.where(valid, 1.0 - cos, 0.0)))
    return max(total / g.node_count, 0.0)


def component_sum_measure(x: np.ndarray, g: Graph, base_measure: MeasureFn) -> float:
    """Sum of ``base_measure`` over connected components (induced subgraphs)."""
    x = _check_features(x, g)
    total = 0.0
    for comp in connected_components(g):
        total += float(base_measure(x[comp], induced_subgraph(g, comp)))
    return total


@dataclass
class AxiomCheck:
    name: str
    passed: bool
    failures: int
    first_counterexample: tuple | None = None
    first_failed_trial: int | None = None


@dataclass
class AxiomReport:
    """Randomized compliance report for the node-similarity axioms."""

    constant_zero: AxiomCheck
    nonconstant_positive: AxiomCheck
    subadditive: AxiomCheck
    trials: int
    tol: float

    @property
    def passed(self) -> bool:
        return (self.constant_zero.passed and self.nonconstant_positive.passed
                and self.subadditive.passed)

    def checks(self) -> list[AxiomCheck]:
        return [self.constant_zero, self.nonconstant_positive, self.subadditive]

    def summary(self) -> str:
        lines = []
        for chk in self.checks():
            status = "pass" if chk.passed else f"FAIL ({chk.failures} violations)"
            lines.append(f"{chk.name}: {status}")
        return "\n".join(lines)


def gaussian_sampler(rng: np.random.Generator, v: int, m: int) -> np.ndarray:
    return rng.standard_normal((v, m))


def positive_sampler(rng: np.random.Generator, v: int, m: int) -> np.ndarray:
    """Strictly positive features; exposes MAD's blindness in the scalar case."""
    return rng.uniform(0.1, 1.0, size=(v, m))


def verify_axioms(candidate_measure: MeasureFn, g: Graph, trials: int = 1000,
                  tol: float = 1e-9, m: int = 8, seed: int = 0,
                  sampler=None) -> AxiomReport:
    """Sample-based check of the three node-similarity axioms.

    (a) the measure vanishes on constant-row matrices, (b) it is strictly
    positive on random non-constant matrices, and (c) it is subadditive.
    Violations are recorded, never raised; the first counterexample per
    condition is kept in the report.
    """
    if trials < 1:
        raise ValueError("trials must be at least 1")
    if sampler is None:
        sampler = gaussian_sampler
    rng = np.random.default_rng(seed)
    v = g.node_count

    const = AxiomCheck("constant rows give zero", True, 0)
    positive = AxiomCheck("non-constant rows give positive value", True, 0)
    subadd = AxiomCheck("subadditive", True, 0)

    for trial in range(trials):
        c = rng.standard_normal(m)
        x_const = np.broadcast_to(c, (v, m)).copy()
        val = candidate_measure(x_const, g)
        if abs(val) > tol:
            const.failures += 1
            if const.first_counterexample is None:
                const.first_counterexample = (x_const,)
                const.first_failed_trial = trial

        x = sampler(rng, v, m)
        if v > 1 and np.ptp(x, axis=0).max() > 0:
            if candidate_measure(x, g) <= tol:
                positive.failures += 1
                if positive.first_counterexample is None:
                    positive.first_counterexample = (x,)
                    positive.first_failed_trial = trial

        a = sampler(rng, v, m)
        b = sampler(rng, v, m)
        lhs = candidate_measure(a + b, g)
        rhs = candidate_measure(a, g) + candidate_measure(b, g)
        if lhs > rhs + tol:
            subadd.failures += 1
            if subadd.first_counterexample is None:
                subadd.first_counterexample = (a, b)
                subadd.first_failed_trial = trial

    for chk in (const, positive, subadd):
        chk.passed = chk.failures == 0
    return AxiomReport(const, positive, subadd, trials, tol)


def measure_by_name(name: str, p: float = 2.0,
                    degree_normalized: bool = False) -> MeasureFn:
    """Resolve a measure name to a (X, Graph) -> float callable."""
    key = name.lower().replace("_", "-")
    if key == "dirichlet":
        return lambda x, g: dirichlet_measure(x, g, p, degree_normalized)
    if key == "dirichlet-energy":
        return lambda x, g: dirichlet_energy(x, g, p, degree_normalized)
    if key == "mad":
        return mad
    raise ValueError(f"unknown measure {name!r}")
