"""Exhaustive-enumeration oracle for small lattices.

Enumerates every directed path explicitly (all 2^M sign vectors, filtered
for domain membership and the endpoint), sums rewards with the same
left-fold order the dynamic program uses, and takes the max. Independent
of the production solver's recurrence.
"""

import numpy as np


def brute_force_passage(rewards) -> tuple[float, np.ndarray]:
    """(max reward sum, argmax column levels) over all directed paths."""
    spec = rewards.spec
    M, B = spec.M, spec.B
    if M > 20:
        raise ValueError("enumeration is exponential; keep N*l small")

    masks = np.arange(2**M, dtype=np.int64)
    signs = 2 * ((masks[:, None] >> np.arange(M)[None, :]) & 1) - 1
    levels = np.concatenate(
        [np.zeros((2**M, 1), dtype=np.int64), np.cumsum(signs, axis=1)], axis=1
    )
    cols = np.arange(M + 1)
    ok = (
        (levels[:, -1] == B)
        & np.all(levels >= np.asarray(spec.j_lo(cols))[None, :], axis=1)
        & np.all(levels <= np.asarray(spec.j_hi(cols))[None, :], axis=1)
    )
    if not np.any(ok):
        raise ValueError("no admissible path; lattice spec inconsistent")
    levels = levels[ok]

    off = spec.offsets()
    lo = np.asarray(spec.j_lo(cols))
    idx = off[None, :-1] + (levels - lo[None, :]) // 2
    vals = rewards.values[idx]
    # left-to-right fold, matching the solver's accumulation order
    sums = np.cumsum(vals, axis=1)[:, -1]
    best = int(np.argmax(sums))
    return float(sums[best]), levels[best]
