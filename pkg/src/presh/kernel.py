"""Backend selection for the enumeration kernel.

The compiled extension is preferred when present; set ``PRESH_BACKEND=python``
to force the fallback (or ``PRESH_BACKEND=c`` to fail loudly if the extension
is missing). Both backends implement the identical contract, including result
order, so everything downstream is backend-agnostic.
"""

import os

_requested = os.environ.get("PRESH_BACKEND", "auto")

if _requested not in ("auto", "c", "python"):
    raise ImportError(f"PRESH_BACKEND must be auto, c or python, not {_requested!r}")

if _requested == "python":
    from ._kernel_py import enumerate_assignments

    BACKEND = "python"
else:
    try:
        from ._kernel_c import enumerate_assignments  # type: ignore[no-redef]

        BACKEND = "c"
    except ImportError:
        if _requested == "c":
            raise
        from ._kernel_py import enumerate_assignments  # type: ignore[no-redef]

        BACKEND = "python"

__all__ = ["enumerate_assignments", "BACKEND"]
