"""NumPy implementation of the MVG cost-surface kernel (fallback for the Cython build)."""

import numpy as np


def grid_view(frame, m, k, serpentine):
    """Rows of ``frame[m:]`` with ``k`` columns, odd rows reversed when serpentine."""
    n_rows = (frame.shape[0] - m) // k
    grid = frame[m:m + n_rows * k].reshape(n_rows, k)
    if serpentine:
        grid = grid.copy()
        grid[1::2] = grid[1::2, ::-1]
    return grid


def vertical_abs_sum(grid):
    d = np.abs(np.diff(grid, axis=0))
    valid = ~np.isnan(d)
    return float(d[valid].sum()), int(valid.sum())


def cost_surface(frame, m_values, k_values, serpentine):
    """Raw absolute vertical-gradient sums and valid-pair counts over an (m, k) grid."""
    frame = np.ascontiguousarray(frame, dtype=np.float64)
    m_values = np.asarray(m_values, dtype=np.int64)
    k_values = np.asarray(k_values, dtype=np.int64)
    sums = np.zeros((m_values.size, k_values.size))
    pairs = np.zeros((m_values.size, k_values.size), dtype=np.int64)
    n = frame.shape[0]
    for a, m in enumerate(m_values):
        for b, k in enumerate(k_values):
            if m < 0 or k < 2 or m >= n or (n - m) // k < 2:
                continue
            sums[a, b], pairs[a, b] = vertical_abs_sum(grid_view(frame, int(m), int(k), serpentine))
    return sums, pairs
