"""Tiny deterministic job pool.

Jobs are independent closures whose results are collected in submission
order, so the assembled output never depends on the worker count.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor

ENV_THREADS = "HSCUBE_THREADS"


def resolve_threads(requested: int | None = None) -> int:
    """Explicit request wins, then the HSCUBE_THREADS variable, then 1."""
    if requested is not None:
        return max(1, int(requested))
    env = os.environ.get(ENV_THREADS, "").strip()
    if env:
        return max(1, int(env))
    return 1


def run_jobs(jobs, threads: int = 1) -> list:
    """Run zero-argument callables, returning results in submission order."""
    jobs = list(jobs)
    if threads <= 1 or len(jobs) <= 1:
        return [job() for job in jobs]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return [future.result() for future in [pool.submit(job) for job in jobs]]
