"""Pure numpy split-scan kernel; the fallback when the extension is absent.

Must stay bit-identical to the compiled kernel: prefix sums are sequential
(add.accumulate), the gain expression uses the same operation order, and the
first maximum wins so ties resolve to the lowest threshold.
"""

from __future__ import annotations

import numpy as np

BACKEND = "pure"


def scan_sorted_split(
    values: np.ndarray,
    grad: np.ndarray,
    hess: np.ndarray,
    total_g: float,
    total_h: float,
    alpha: float,
    two_beta: float,
    min_child_hessian: float,
):
    """Best split of one feature, arrays pre-sorted by value ascending.

    Returns (gain, threshold, g_left, h_left, n_left) or None when no
    admissible candidate exists. Candidates sit at midpoints between
    distinct consecutive values; children must satisfy the positivity and
    minimum-hessian constraints.
    """
    n = values.shape[0]
    if n < 2:
        return None
    parent_denom = total_h + two_beta
    if parent_denom <= 0.0:
        return None
    gl = np.add.accumulate(grad)[:-1]
    hl = np.add.accumulate(hess)[:-1]
    gr = total_g - gl
    hr = total_h - hl
    dl = hl + two_beta
    dr = hr + two_beta
    admissible = (
        (values[:-1] != values[1:])
        & (dl > 0.0)
        & (dr > 0.0)
        & (hl >= min_child_hessian)
        & (hr >= min_child_hessian)
    )
    idx = np.nonzero(admissible)[0]
    if idx.size == 0:
        return None
    parent_term = total_g * total_g / parent_denom
    gains = (
        0.5
        * (
            gl[idx] * gl[idx] / dl[idx]
            + gr[idx] * gr[idx] / dr[idx]
            - parent_term
        )
        - alpha
    )
    k = int(np.argmax(gains))  # first occurrence: lowest threshold on ties
    i = int(idx[k])
    threshold = 0.5 * (values[i] + values[i + 1])
    return float(gains[k]), float(threshold), float(gl[i]), float(hl[i]), i + 1


def sequential_sum(a: np.ndarray) -> float:
    """Left-to-right accumulation, matching the compiled kernel's totals."""
    if a.size == 0:
        return 0.0
    return float(np.add.accumulate(a)[-1])
