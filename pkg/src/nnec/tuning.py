"""Selection of ``(lambda, k)`` by average normalised membership strength."""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from typing import List, Optional, Sequence, Tuple

import numpy as np

from .clustering import ClusteringSolution, cluster
from .equilibrium import EquilibriumParams, LambdaLike, as_fraction
from .neighbours import NeighbourGraph

DEFAULT_KS = (10, 15, 20, 25)
DEFAULT_LAMBDAS = tuple(Fraction(5 + i, 5) for i in range(11))  # 1.0, 1.2, ..., 3.0
LAMBDA_LOWER_BOUND = Fraction(1)


def criterion(solution: ClusteringSolution) -> float:
    """Mean over points of ``max_c s_ic / sum_c s_ic``.

    Points with zero total strength contribute 0.
    """
    s = solution.strength_numerators
    total = s.sum(axis=1)
    best = s.max(axis=1)
    ratios = np.divide(best, total, out=np.zeros(len(total)), where=total > 0)
    return float(ratios.sum() / solution.n)


@dataclass
class GridEntry:
    lam: Fraction
    k: int
    value: float
    n_clusters: int
    solution: Optional[ClusteringSolution] = field(default=None, repr=False)

    def to_dict(self) -> dict:
        return {
            "lambda": str(self.lam),
            "lambda_float": float(self.lam),
            "k": self.k,
            "criterion": self.value,
            "n_clusters": self.n_clusters,
        }


@dataclass
class ModelSelectionReport:
    entries: List[GridEntry]
    mode: str = "grid"

    @property
    def best(self) -> GridEntry:
        # largest criterion; ties to smaller k, then smaller lambda
        return min(self.entries, key=lambda e: (-e.value, e.k, e.lam))

    @property
    def selected(self) -> Tuple[Fraction, int]:
        b = self.best
        return b.lam, b.k

    def to_dict(self) -> dict:
        b = self.best
        return {
            "mode": self.mode,
            "n_evaluated": len(self.entries),
            "entries": [e.to_dict() for e in self.entries],
            "selected": {"lambda": str(b.lam), "lambda_float": float(b.lam), "k": b.k,
                         "criterion": b.value, "n_clusters": b.n_clusters},
        }


def _evaluate(graph, pairs, r, t_max, workers, keep_solutions) -> List[GridEntry]:
    def run(pair):
        lam, k = pair
        sol = cluster(graph, EquilibriumParams(lam, k, r, t_max))
        return GridEntry(lam, k, criterion(sol), sol.n_clusters, sol if keep_solutions else None)

    if workers > 1 and len(pairs) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(run, pairs))
    return [run(p) for p in pairs]


def _check_lambdas(lambdas, allow_below_one):
    lams = [as_fraction(v) for v in lambdas]
    for lam in lams:
        if lam <= 0:
            raise ValueError(f"lambda must be positive, got {lam}")
        if lam < LAMBDA_LOWER_BOUND and not allow_below_one:
            raise ValueError(f"lambda {lam} is below the lower bound 1")
    return lams


def grid_search(
    graph: NeighbourGraph,
    lambdas: Sequence[LambdaLike] = DEFAULT_LAMBDAS,
    ks: Sequence[int] = DEFAULT_KS,
    r: int = 5,
    t_max: int = 100,
    workers: int = 1,
    keep_solutions: bool = True,
    allow_below_one: bool = False,
) -> ModelSelectionReport:
    """Cluster at every ``(lambda, k)`` pair and pick the best criterion value.

    Entries are ordered by ``k`` then ``lambda`` whatever the worker count.
    """
    lams = _check_lambdas(lambdas, allow_below_one)
    for k in ks:
        if not 1 <= k <= graph.k_max:
            raise ValueError(f"k={k} outside [1, {graph.k_max}]")
    pairs = [(lam, k) for k in ks for lam in lams]
    return ModelSelectionReport(_evaluate(graph, pairs, r, t_max, workers, keep_solutions), "grid")


def default_k(n: int) -> int:
    """``2 * ceil(ln n)``."""
    return 2 * math.ceil(math.log(n))


def coarse_lambdas() -> List[Fraction]:
    """Seven equispaced values on [1, 3]."""
    return [Fraction(1) + Fraction(i, 3) for i in range(7)]


def refined_lambdas(centre: Fraction, count: int = 10, half_width: Fraction = Fraction(1, 3)) -> List[Fraction]:
    """``count`` equispaced values over ``[centre - w, centre + w]``, lower end raised to 1."""
    lo = max(LAMBDA_LOWER_BOUND, centre - half_width)
    hi = centre + half_width
    return [lo + (hi - lo) * Fraction(i, count - 1) for i in range(count)]


def refined_search(
    graph: NeighbourGraph,
    n: Optional[int] = None,
    k: Optional[int] = None,
    r: int = 5,
    t_max: int = 100,
    workers: int = 1,
    keep_solutions: bool = True,
) -> ModelSelectionReport:
    """Two-stage lambda search with ``k`` fixed at ``2 * ceil(ln n)``.

    A coarse pass over seven values on [1, 3] is followed by ten values
    around the coarse winner; the final pick is made over all 17 solutions.
    """
    n = graph.n if n is None else n
    k = default_k(n) if k is None else k
    if not 1 <= k <= graph.k_max:
        raise ValueError(f"k={k} outside [1, {graph.k_max}]")
    coarse = _evaluate(graph, [(lam, k) for lam in coarse_lambdas()], r, t_max, workers, keep_solutions)
    centre = ModelSelectionReport(coarse).best.lam
    fine = _evaluate(graph, [(lam, k) for lam in refined_lambdas(centre)], r, t_max, workers, keep_solutions)
    return ModelSelectionReport(coarse + fine, "refined")
