"""Kernel backend selection.

The numeric hot loops (TransE SGD batches, the two conv layers of the
analogy classifier) exist twice: a compiled Cython extension (`_fastops`)
and a numpy fallback (`slowops`).  The compiled backend is used when it
imported cleanly; KGP_KERNELS=slow|fast overrides.  Results are
deterministic within a backend; across backends they agree to float64
rounding, not bit-for-bit.
"""

from __future__ import annotations

import os

from . import slowops

_PREFERENCE = os.environ.get("KGP_KERNELS", "auto").lower()

_fast = None
if _PREFERENCE in ("auto", "fast"):
    try:
        from . import _fastops as _fast  # type: ignore[no-redef]
    except ImportError:
        if _PREFERENCE == "fast":
            raise ImportError(
                "KGP_KERNELS=fast but the compiled kernel extension is not "
                "available; rebuild with `pip install -e . --no-build-isolation`"
            )
        _fast = None

ops = _fast if _fast is not None else slowops


def backend_name() -> str:
    """Name of the active backend: "fast" or "slow"."""
    return "fast" if _fast is not None and ops is _fast else "slow"


def available_backends() -> dict[str, object]:
    """All importable backends, keyed by name (for the benchmark)."""
    out: dict[str, object] = {"slow": slowops}
    if _fast is not None:
        out["fast"] = _fast
    return out
