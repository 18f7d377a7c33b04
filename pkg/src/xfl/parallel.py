"""Thread-count policy shared by the multi-start and Monte Carlo loops."""
from __future__ import annotations

import os

ENV_VAR = "XFL_THREADS"


def worker_count(n_tasks: int) -> int:
    """Workers to use for ``n_tasks`` independent jobs; ``XFL_THREADS`` caps it (0 = auto)."""
    try:
        cap = int(os.environ.get(ENV_VAR, "0"))
    except ValueError:
        cap = 0
    if cap <= 0:
        cap = os.cpu_count() or 1
    return max(1, min(cap, n_tasks))
