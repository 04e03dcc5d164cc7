"""Pure-Python histogram backend, numerically identical to the Cython kernel.

``np.add.at`` applies updates in index order, matching the sequential
accumulation of the compiled loop.
"""

import numpy as np


def build_histograms(binned, grad, hess, rows, n_bins):
    n_feat = binned.shape[1]
    hist_g = np.zeros((n_feat, n_bins), dtype=np.float64)
    hist_h = np.zeros((n_feat, n_bins), dtype=np.float64)
    hist_n = np.zeros((n_feat, n_bins), dtype=np.int64)
    sub = binned[rows]
    g = grad[rows]
    h = hess[rows]
    for f in range(n_feat):
        b = sub[:, f]
        np.add.at(hist_g[f], b, g)
        np.add.at(hist_h[f], b, h)
        np.add.at(hist_n[f], b, 1)
    return hist_g, hist_h, hist_n
