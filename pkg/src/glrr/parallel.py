"""Worker-thread budget shared by the parallel stages.

The GLRR_THREADS environment variable caps worker threads for
within-stage parallelism (Gram slices). 0 or unset means auto
(one per CPU). Parallel stages must stay deterministic, so work is
always partitioned per independent output slot, never reduced in
thread order.
"""

import os


def worker_count(task_count: int | None = None) -> int:
    raw = os.environ.get("GLRR_THREADS", "0")
    try:
        requested = int(raw)
    except ValueError:
        requested = 0
    if requested <= 0:
        requested = os.cpu_count() or 1
    if task_count is not None:
        requested = min(requested, task_count)
    return max(1, requested)
