"""Deterministic batched gradient ascent used by the variational modules.

The objective is a callable mapping a parameter batch of shape (B, P) to a
value batch of shape (B,).  Gradients are central finite differences, all 2P
perturbations evaluated in one (chunked) batched call.  Step-size control is
a geometric ladder line search; the whole procedure is deterministic for a
deterministic objective.
"""
from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Sequence

import numpy as np

Objective = Callable[[np.ndarray], np.ndarray]


def thread_count() -> int:
    """Worker count from the QCAP_THREADS environment variable (default 1)."""
    raw = os.environ.get("QCAP_THREADS", "1")
    try:
        n = int(raw)
    except ValueError:
        return 1
    return max(1, n)


def _chunked_eval(objective: Objective, batch: np.ndarray, chunk: int) -> np.ndarray:
    if len(batch) <= chunk:
        return np.asarray(objective(batch), dtype=float)
    parts = [objective(batch[i:i + chunk]) for i in range(0, len(batch), chunk)]
    return np.concatenate([np.asarray(p, dtype=float) for p in parts])


def _gradient(objective: Objective, theta: np.ndarray, h: float, chunk: int) -> np.ndarray:
    p = theta.size
    eye = np.eye(p)
    batch = np.concatenate([theta[None, :] + h * eye, theta[None, :] - h * eye])
    vals = _chunked_eval(objective, batch, chunk)
    return (vals[:p] - vals[p:]) / (2.0 * h)


def maximize(objective: Objective, theta0: np.ndarray, *, max_iters: int = 80,
             grad_step: float = 1e-5, init_step: float = 0.25,
             min_step: float = 1e-9, ftol: float = 1e-10,
             chunk: int = 1024) -> tuple[np.ndarray, float]:
    """Ascend ``objective`` from ``theta0``; returns (theta, value)."""
    theta = np.array(theta0, dtype=float)
    best = float(_chunked_eval(objective, theta[None, :], chunk)[0])
    step = float(init_step)
    stall = 0
    for _ in range(max_iters):
        grad = _gradient(objective, theta, grad_step, chunk)
        norm = float(np.linalg.norm(grad))
        if norm < 1e-9:
            break
        direction = grad / norm
        ladder = step * (0.35 ** np.arange(6))
        cands = theta[None, :] + ladder[:, None] * direction[None, :]
        vals = _chunked_eval(objective, cands, chunk)
        idx = int(np.argmax(vals))
        if vals[idx] > best + 1e-15:
            gain = vals[idx] - best
            theta = cands[idx]
            best = float(vals[idx])
            step = min(ladder[idx] * 2.0, 4.0)
            stall = stall + 1 if gain < ftol else 0
            if stall >= 4:
                break
        else:
            step *= 0.35 ** 6
            if step < min_step:
                break
    return theta, best


def best_of_starts(objective: Objective, starts: Sequence[np.ndarray],
                   **kwargs) -> list[tuple[np.ndarray, float]]:
    """Run :func:`maximize` from every start, preserving start order.

    Runs are dispatched over QCAP_THREADS workers; results are merged in
    start order, so the outcome does not depend on the worker count.
    """
    workers = thread_count()
    if workers == 1 or len(starts) <= 1:
        return [maximize(objective, s, **kwargs) for s in starts]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        futures = [pool.submit(maximize, objective, s, **kwargs) for s in starts]
        return [f.result() for f in futures]
