"""Pure numpy implementation of the evaluation kernels.

A compiled program is a list of threshold nodes in topological order.
``child_idx`` entries below ``n_events`` address basic events; the rest
address earlier nodes (offset by ``n_events``). A node is true when at
least ``node_k`` of its children are true, which covers AND (k = n),
OR (k = 1) and k-of-n voting. The last node is the system top event.

The random stream is counter based: the uniform for (seed, replication,
event) is a pure function of those three integers, so any partitioning
of replications yields identical counts.
"""

from __future__ import annotations

import numpy as np

GOLDEN = 0x9E3779B97F4A7C15
SEED_SALT = 0x6A09E667F3BCC909
MASK64 = (1 << 64) - 1

_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)
_GOLDEN = np.uint64(GOLDEN)
_S30, _S27, _S31, _S11 = (np.uint64(s) for s in (30, 27, 31, 11))
_INV53 = 1.0 / (1 << 53)

EXACT_CHUNK = 1 << 15
MC_CHUNK = 1 << 16


def _mix(z: np.ndarray) -> np.ndarray:
    z = z ^ (z >> _S30)
    z = z * _M1
    z = z ^ (z >> _S27)
    z = z * _M2
    return z ^ (z >> _S31)


def mix64(z: int) -> int:
    """Scalar splitmix64 finaliser (reference for the array version)."""
    z &= MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return z ^ (z >> 31)


def stream_key(seed: int) -> int:
    return mix64((seed & MASK64) ^ SEED_SALT)


def uniforms(seed: int, reps: np.ndarray, n_events: int) -> np.ndarray:
    """Uniforms in [0, 1) of shape (len(reps), n_events)."""
    key = np.uint64(stream_key(seed))
    with np.errstate(over="ignore"):
        rep_keys = _mix(key ^ (reps.astype(np.uint64) * _GOLDEN))
        offsets = (np.arange(1, n_events + 1, dtype=np.uint64) * _GOLDEN)
        h = _mix(rep_keys[:, None] + offsets[None, :])
    return (h >> _S11).astype(np.float64) * _INV53


def _eval_nodes(event_states: np.ndarray, node_k, child_ptr, child_idx) -> np.ndarray:
    """Node truth table (rows = outcomes) from event truth table."""
    n_rows, n_events = event_states.shape
    n_nodes = len(node_k)
    nodes = np.zeros((n_rows, n_nodes), dtype=bool)
    for i in range(n_nodes):
        count = np.zeros(n_rows, dtype=np.int32)
        for c in child_idx[child_ptr[i]:child_ptr[i + 1]]:
            if c < n_events:
                count += event_states[:, c]
            else:
                count += nodes[:, c - n_events]
        nodes[:, i] = count >= node_k[i]
    return nodes


def exact_probability(probs, node_k, child_ptr, child_idx) -> float:
    probs = np.asarray(probs, dtype=np.float64)
    n = len(probs)
    total = 0.0
    comp = 0.0
    shifts = np.arange(n, dtype=np.int64)
    for start in range(0, 1 << n, EXACT_CHUNK):
        masks = np.arange(start, min(start + EXACT_CHUNK, 1 << n), dtype=np.int64)
        bits = ((masks[:, None] >> shifts[None, :]) & 1).astype(bool)
        weight = np.where(bits, probs, 1.0 - probs).prod(axis=1)
        top = _eval_nodes(bits, node_k, child_ptr, child_idx)[:, -1]
        part = float(weight[top].sum())
        # Neumaier compensated accumulation across chunks
        t = total + part
        if abs(total) >= abs(part):
            comp += (total - t) + part
        else:
            comp += (part - t) + total
        total = t
    return total + comp


def mc_node_counts(probs, node_k, child_ptr, child_idx, seed: int, start: int,
                   count: int) -> np.ndarray:
    probs = np.asarray(probs, dtype=np.float64)
    n = len(probs)
    counts = np.zeros(len(node_k), dtype=np.int64)
    stop = start + count
    for lo in range(start, stop, MC_CHUNK):
        reps = np.arange(lo, min(lo + MC_CHUNK, stop), dtype=np.int64)
        fired = uniforms(seed, reps, n) < probs[None, :]
        counts += _eval_nodes(fired, node_k, child_ptr, child_idx).sum(axis=0)
    return counts
