"""Backend selection for the event loop.

``run_kernel(bitgen, stochastic, r0, d0, mrate, r1, d1, lambda0, n, threshold,
t_stop, stop_on_recurrence, initial_clones, max_events)`` simulates one
trajectory and returns ``(gamma, stop_time, z0_final, birth_times, sizes,
counters, status)``:

* ``gamma`` is the first time the resistant count strictly exceeds
  ``threshold`` (NaN if it never did before stopping);
* ``counters`` holds sensitive births, sensitive deaths, mutations,
  resistant births and resistant deaths;
* ``status`` is one of ``RECURRED``, ``REACHED_STOP``, ``EXTINCT`` or
  ``EVENT_CAP``.

In deterministic mode ``n`` is the (real) initial sensitive size and the
sensitive pool follows ``n*exp(lambda0*t)``; in stochastic mode ``n`` is the
initial sensitive count.  The compiled kernel is used when importable;
set ``CLONAL_RECUR_BACKEND=python`` to force the reference implementation.
"""

from __future__ import annotations

import os

from . import _pykernel
from ._pykernel import EVENT_CAP, EXTINCT, REACHED_STOP, RECURRED

try:
    from . import _ckernel
except ImportError:  # pragma: no cover - exercised only without a build
    _ckernel = None

KERNELS = {"python": _pykernel.run_kernel}
if _ckernel is not None:
    KERNELS["cython"] = _ckernel.run_kernel

_requested = os.environ.get("CLONAL_RECUR_BACKEND", "").lower()
if _requested and _requested not in KERNELS:
    raise ImportError(
        f"CLONAL_RECUR_BACKEND={_requested!r} is not available (have: {', '.join(sorted(KERNELS))})"
    )
BACKEND = _requested or ("cython" if "cython" in KERNELS else "python")
run_kernel = KERNELS[BACKEND]

__all__ = ["BACKEND", "KERNELS", "run_kernel", "RECURRED", "REACHED_STOP", "EXTINCT", "EVENT_CAP"]
