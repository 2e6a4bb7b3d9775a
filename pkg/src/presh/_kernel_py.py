"""Pure-Python section enumeration kernel.

Same contract as the compiled kernel in ``_kernel_c.pyx``; selected at
import time by :mod:`presh.kernel` when the extension is unavailable or the
``PRESH_BACKEND`` environment variable forces it.
"""

from __future__ import annotations

from typing import Sequence

Check = tuple[tuple[int, ...], tuple[int, ...], bytes]


def enumerate_assignments(
    sizes: Sequence[int],
    checks: Sequence[Sequence[Check]],
    decoders: Sequence[Sequence] | None = None,
) -> list[tuple]:
    """Backtrack over value slots, pruning with scope-indexed admission masks.

    ``sizes[j]`` is the number of values slot ``j`` can take.  ``checks[j]``
    lists the constraints that become decidable once slot ``j`` is assigned;
    each is ``(positions, strides, mask)`` where ``positions`` index slots
    ``<= j`` and ``mask[sum(stride*value)] == 1`` iff the combination is
    admitted.  Results come out in lexicographic slot-major order, as value
    indices, or mapped through ``decoders[slot][index]`` when given.
    """
    n = len(sizes)
    if n == 0:
        return [()]
    if any(s <= 0 for s in sizes):
        return []

    decs = [tuple(d) for d in decoders] if decoders is not None else None
    getter = tuple.__getitem__
    results: list[tuple] = []
    vals = [0] * n
    j = 0
    vals[0] = -1
    while j >= 0:
        vals[j] += 1
        if vals[j] >= sizes[j]:
            j -= 1
            continue
        ok = True
        for positions, strides, mask in checks[j]:
            idx = 0
            for p, stride in zip(positions, strides):
                idx += stride * vals[p]
            if not mask[idx]:
                ok = False
                break
        if not ok:
            continue
        if j == n - 1:
            if decs is None:
                results.append(tuple(vals))
            else:
                results.append(tuple(map(getter, decs, vals)))
        else:
            j += 1
            vals[j] = -1
    return results
