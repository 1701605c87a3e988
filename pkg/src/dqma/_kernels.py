"""Compiled inner loops for the random-walk-coefficient Kalman filter and FFBS.

All kernels work on plain arrays so they can run inside ``njit`` and release
the GIL. Observation ``s`` has the form
``y_s = x_s' beta_s + offset_s + e_s``, ``e_s ~ N(0, obs_var_s)``, and the
state is a random walk with innovation covariance ``Omega``.
"""

import numpy as np
from numba import njit

JITTER = 1e-10


@njit(cache=True, nogil=True)
def _symmetrize(P):
    return 0.5 * (P + P.T)


@njit(cache=True, nogil=True)
def filter_arrays(y, X, offset, obs_var, Omega, m0, P0, start_predicted=False):
    """Forward pass from ``(m0, P0) = (beta_{0|0}, P_{0|0})``.

    With ``start_predicted`` the pair is taken as ``(beta_{1|0}, P_{1|0})``
    and no ``Omega`` is added before the first update. Returns
    predicted/filtered means and covariances, innovations and innovation
    variances, one row per observation.
    """
    t, m = X.shape
    pred_mean = np.empty((t, m))
    pred_cov = np.empty((t, m, m))
    filt_mean = np.empty((t, m))
    filt_cov = np.empty((t, m, m))
    innov = np.empty(t)
    S = np.empty(t)
    b = m0.copy()
    P = P0.copy()
    for s in range(t):
        if s > 0 or not start_predicted:
            P = _symmetrize(P + Omega)
        pred_mean[s] = b
        pred_cov[s] = P
        x = X[s]
        Px = P @ x
        S_s = obs_var[s] + x @ Px
        nu = y[s] - offset[s] - x @ b
        b = b + Px * (nu / S_s)
        P = _symmetrize(P - np.outer(Px, Px) / S_s)
        filt_mean[s] = b
        filt_cov[s] = P
        innov[s] = nu
        S[s] = S_s
    return pred_mean, pred_cov, filt_mean, filt_cov, innov, S


@njit(cache=True, nogil=True)
def _psd_root(C):
    vals, vecs = np.linalg.eigh(_symmetrize(C))
    m = C.shape[0]
    root = np.empty((m, m))
    for j in range(m):
        v = vals[j] if vals[j] > 0.0 else 0.0
        root[:, j] = vecs[:, j] * np.sqrt(v)
    return root


@njit(cache=True, nogil=True)
def _gain(P_filt, P_next_pred):
    """``P_{s|s} (P_{s+1|s})^-1`` through an eigen-solve; returns (gain, jittered)."""
    m = P_filt.shape[0]
    vals, vecs = np.linalg.eigh(_symmetrize(P_next_pred))
    jittered = False
    top = vals.max()
    if vals.min() <= 1e-12 * max(top, 1.0):
        vals = vals + JITTER
        jittered = True
    inv = np.zeros((m, m))
    for j in range(m):
        inv += np.outer(vecs[:, j], vecs[:, j]) / vals[j]
    return P_filt @ inv, jittered


@njit(cache=True, nogil=True)
def smooth_arrays(filt_mean, filt_cov, pred_mean, pred_cov):
    """Rauch-Tung-Striebel fixed-interval smoother. Returns (means, covs, n_jitter)."""
    t, m = filt_mean.shape
    sm = np.empty((t, m))
    sc = np.empty((t, m, m))
    sm[t - 1] = filt_mean[t - 1]
    sc[t - 1] = filt_cov[t - 1]
    n_jitter = 0
    for s in range(t - 2, -1, -1):
        G, jit = _gain(filt_cov[s], pred_cov[s + 1])
        if jit:
            n_jitter += 1
        sm[s] = filt_mean[s] + G @ (sm[s + 1] - pred_mean[s + 1])
        sc[s] = _symmetrize(filt_cov[s] + G @ (sc[s + 1] - pred_cov[s + 1]) @ G.T)
    return sm, sc, n_jitter


@njit(cache=True, nogil=True)
def backward_sample(filt_mean, filt_cov, pred_cov, z):
    """Draw ``beta_{1:t}`` jointly given filter output and standard normals ``z`` (t, m).

    ``beta_t ~ N(b_{t|t}, P_{t|t})``, then for ``s < t``
    ``beta_s | beta_{s+1} ~ N(b_{s|s} + G (beta_{s+1} - b_{s|s}), P_{s|s} - G P_{s|s})``
    with ``G = P_{s|s} P_{s+1|s}^-1`` (the predicted mean equals ``b_{s|s}``).
    """
    t, m = filt_mean.shape
    out = np.empty((t, m))
    out[t - 1] = filt_mean[t - 1] + _psd_root(filt_cov[t - 1]) @ z[t - 1]
    n_jitter = 0
    for s in range(t - 2, -1, -1):
        G, jit = _gain(filt_cov[s], pred_cov[s + 1])
        if jit:
            n_jitter += 1
        mean = filt_mean[s] + G @ (out[s + 1] - filt_mean[s])
        cov = filt_cov[s] - G @ filt_cov[s].T
        out[s] = mean + _psd_root(cov) @ z[s]
    return out, n_jitter
