"""Hot-loop kernels with a compiled core and a pure-Python fallback.

The Cython extension ``trustsense.kernels._core`` is preferred when it
built successfully; otherwise the numpy fallback in ``_pure`` is used.
Set ``TRUSTSENSE_PURE=1`` to force the fallback (used by tests and the
benchmark). Both implementations are bit-identical by contract.
"""

from __future__ import annotations

import os

from trustsense.kernels import _pure

if os.environ.get("TRUSTSENSE_PURE"):
    _impl = _pure
    BACKEND = "pure"
else:
    try:
        from trustsense.kernels import _core as _impl  # type: ignore[no-redef]

        BACKEND = "compiled"
    except ImportError:
        _impl = _pure
        BACKEND = "pure"

classify_reports = _impl.classify_reports
sectorize_points = _impl.sectorize_points
count_black_pixels = _impl.count_black_pixels


def available_backends() -> dict[str, object]:
    """Importable kernel modules by name (for equivalence tests/benchmarks)."""
    backends: dict[str, object] = {"pure": _pure}
    try:
        from trustsense.kernels import _core

        backends["compiled"] = _core
    except ImportError:
        pass
    return backends
