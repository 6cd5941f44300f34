"""Compare the compiled kernels with the numpy fallback.

    python benchmarks/bench_kernels.py [--events 20] [--replications 1000000]

Both backends must give the same answers; timings are best of ``--repeat``.
"""

from __future__ import annotations

import argparse
import math
import time

from ccfbeta._backend import BACKENDS
from ccfbeta.domain import Domain
from ccfbeta.faulttree import (BasicEvent, ComponentRef, EventKind, eval_exact, kofn_gate,
                               or_gate)
from ccfbeta.simulate import McConfig, simulate_system


def build(n_events: int):
    """A 2-of-(n-2) voting tree plus one common cause event, ORed with a standalone part."""
    n_voters = n_events - 2
    ids = [f"V{i}" for i in range(n_voters)]
    hw, ind = Domain.HARDWARE, EventKind.INDEPENDENT
    events = [BasicEvent(f"{c}-I", ind, c, hw, 0.02 + 0.001 * i, frozenset({c}))
              for i, c in enumerate(ids)]
    events.append(BasicEvent("ALL-CCF", EventKind.COMMON_CAUSE, "ALL", hw, 1e-3, frozenset(ids)))
    events.append(BasicEvent("X-I", ind, "X", hw, 5e-4, frozenset({"X"})))
    tree = or_gate(kofn_gate(2, *(ComponentRef(c) for c in ids)), ComponentRef("X"))
    return tree, events


def best_of(repeat: int, fn):
    times, result = [], None
    for _ in range(repeat):
        t0 = time.perf_counter()
        result = fn()
        times.append(time.perf_counter() - t0)
    return min(times), result


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--events", type=int, default=20)
    ap.add_argument("--replications", type=int, default=10 ** 6)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args(argv)

    tree, events = build(args.events)
    names = [b for b in ("python", "compiled") if b in BACKENDS]
    if "compiled" not in names:
        print("compiled extension not built; timing the numpy fallback only")

    exact, mc = {}, {}
    for name in names:
        t, p = best_of(args.repeat, lambda: eval_exact(tree, events, backend=name))
        exact[name] = (t, p)
        cfg = McConfig(seed=2024, replications=args.replications, backend=name)
        t, est = best_of(args.repeat, lambda: simulate_system(tree, events, cfg))
        mc[name] = (t, est)

    print(f"exact enumeration, {args.events} events (2^{args.events} states)")
    for name, (t, p) in exact.items():
        print(f"  {name:9s} {t * 1e3:10.1f} ms   P = {p:.12e}")
    print(f"monte carlo, {args.replications} replications")
    for name, (t, est) in mc.items():
        print(f"  {name:9s} {t * 1e3:10.1f} ms   {est.successes} failures")

    if len(names) == 2:
        print(f"speedup: exact {exact['python'][0] / exact['compiled'][0]:.1f}x, "
              f"mc {mc['python'][0] / mc['compiled'][0]:.1f}x")
        assert math.isclose(exact["python"][1], exact["compiled"][1], rel_tol=1e-12), exact
        assert mc["python"][1] == mc["compiled"][1], "monte carlo counts differ"
        print("results agree")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
