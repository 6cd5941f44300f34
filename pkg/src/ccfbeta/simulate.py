"""Seeded Monte Carlo oracle for the analytic evaluators.

Every replication draws each basic event independently; a component fails
when any covering event fires. The uniform for (seed, replication, event)
comes from a counter-based stream, so replications can be partitioned
across workers in any way and still give bit-identical estimates.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy import stats

from ._backend import get_backend
from .domain import Domain
from .faulttree import (BasicEvent, ComponentRef, GateNode, Program, and_gate, compile_tree,
                        covering_events, or_gate)

# Below this many successes (or failures) the normal interval is replaced by
# Clopper-Pearson bounds.
EXACT_CI_THRESHOLD = 10


@dataclass(frozen=True)
class McConfig:
    seed: int = 42
    replications: int = 100_000
    confidence_level: float = 0.95
    workers: int = 1
    backend: str | None = None

    def __post_init__(self):
        if self.replications < 1:
            raise ValueError("replications must be >= 1")
        if not (0.0 < self.confidence_level < 1.0):
            raise ValueError("confidence_level must lie in (0, 1)")
        if self.workers < 1:
            raise ValueError("workers must be >= 1")


@dataclass(frozen=True)
class McEstimate:
    point: float
    stderr: float
    ci_low: float
    ci_high: float
    replications: int
    seed: int
    successes: int = 0
    name: str = "system"
    method: str = "normal"

    def record(self) -> str:
        return (f"{self.name},{self.point:.6e},{self.stderr:.6e},{self.ci_low:.6e},"
                f"{self.ci_high:.6e},{self.replications},{self.seed}")

    @classmethod
    def parse_record(cls, line: str) -> "McEstimate":
        name, point, se, lo, hi, n, seed = line.strip().split(",")
        return cls(float(point), float(se), float(lo), float(hi), int(n), int(seed), name=name)

    def covers(self, value: float) -> bool:
        return self.ci_low <= value <= self.ci_high


def estimate_from_counts(successes: int, n: int, seed: int, confidence_level: float = 0.95,
                         name: str = "system", deterministic: bool = False) -> McEstimate:
    p = successes / n
    se = math.sqrt(p * (1.0 - p) / n)
    if deterministic:
        return McEstimate(p, se, p, p, n, seed, successes, name, "deterministic")
    alpha = 1.0 - confidence_level
    if successes < EXACT_CI_THRESHOLD or n - successes < EXACT_CI_THRESHOLD:
        lo = 0.0 if successes == 0 else float(stats.beta.ppf(alpha / 2, successes,
                                                             n - successes + 1))
        hi = 1.0 if successes == n else float(stats.beta.ppf(1 - alpha / 2, successes + 1,
                                                             n - successes))
        method = "clopper-pearson"
    else:
        z = float(stats.norm.ppf(1 - alpha / 2))
        lo, hi = max(0.0, p - z * se), min(1.0, p + z * se)
        method = "normal"
    return McEstimate(p, se, min(lo, p), max(hi, p), n, seed, successes, name, method)


def _node_counts(program: Program, config: McConfig) -> np.ndarray:
    kernels = get_backend(config.backend)
    probs = program.probabilities
    args = (probs, program.node_k, program.child_ptr, program.child_idx, config.seed)
    n = config.replications
    if config.workers == 1:
        return kernels.mc_node_counts(*args, 0, n)
    bounds = np.linspace(0, n, config.workers + 1).astype(np.int64)
    spans = [(int(a), int(b - a)) for a, b in zip(bounds[:-1], bounds[1:]) if b > a]
    with ThreadPoolExecutor(max_workers=config.workers) as pool:
        parts = list(pool.map(lambda s: kernels.mc_node_counts(*args, *s), spans))
    return np.sum(parts, axis=0)


def _is_deterministic(program: Program) -> bool:
    return all(e.probability in (0.0, 1.0) for e in program.events)


def simulate_system(tree: GateNode | ComponentRef, events: Sequence[BasicEvent],
                    config: McConfig) -> McEstimate:
    program = compile_tree(tree, events)
    counts = _node_counts(program, config)
    return estimate_from_counts(int(counts[-1]), config.replications, config.seed,
                                config.confidence_level,
                                deterministic=_is_deterministic(program))


def _component_ids(events: Sequence[BasicEvent], domain: Domain | None) -> list[str]:
    ids = set()
    for e in events:
        if domain is None or e.domain is domain:
            ids |= e.covered
    return sorted(ids)


def simulate_component_marginals(events: Sequence[BasicEvent], config: McConfig,
                                 domain: Domain | None = None) -> dict[str, McEstimate]:
    """Sampled failure frequency of every component (optionally one domain only)."""
    ids = _component_ids(events, domain)
    if not ids:
        return {}
    refs = [ComponentRef(cid, domain) for cid in ids]
    # an OR over all leaves as root keeps every leaf node in the program
    program = compile_tree(or_gate(*refs), events)
    counts = _node_counts(program, config)
    out = {}
    for i, cid in enumerate(ids):
        det = all(e.probability in (0.0, 1.0) for e in covering_events(events, refs[i]))
        out[cid] = estimate_from_counts(int(counts[i]), config.replications, config.seed,
                                        config.confidence_level, name=cid, deterministic=det)
    return out


def simulate_pair(events: Sequence[BasicEvent], first: str, second: str, config: McConfig,
                  domain: Domain | None = None) -> tuple[McEstimate, McEstimate, McEstimate]:
    """Marginals of two components and the frequency of their joint failure."""
    a, b = ComponentRef(first, domain), ComponentRef(second, domain)
    program = compile_tree(and_gate(a, b), events)
    counts = _node_counts(program, config)
    n, seed, cl = config.replications, config.seed, config.confidence_level
    return (estimate_from_counts(int(counts[0]), n, seed, cl, name=first),
            estimate_from_counts(int(counts[1]), n, seed, cl, name=second),
            estimate_from_counts(int(counts[2]), n, seed, cl, name=f"{first}&{second}"))
