"""Batch kernels for the hot loops: contact forces and the swarm objective.

Every kernel exists twice, as vectorised numpy and as a numba ``@njit``
element loop. The numba path is used when numba imports and the environment
variable ``UMLM_NUMBA`` is not set to ``0``; set ``UMLM_NUMBA=0`` to force
pure numpy. Both paths evaluate the same expressions in the same order.
"""

from __future__ import annotations

import math
import os

import numpy as np

try:
    import numba
except ImportError:  # pragma: no cover - exercised only without numba
    numba = None

HAVE_NUMBA = numba is not None
_flag = os.environ.get("UMLM_NUMBA", "1").strip().lower()
USE_NUMBA = HAVE_NUMBA and _flag not in ("0", "false", "no", "off")


def backend() -> str:
    return "numba" if USE_NUMBA else "numpy"


# --------------------------------------------------------------------------
# numpy


def _forces_numpy(tau1, tau2, tau3, l18, l19, alpha2, alpha3, d1, d2, d3):
    c2 = np.cos(alpha2)
    c3 = np.cos(alpha3)
    c23 = np.cos(alpha2 + alpha3)
    f3 = -tau3 / d3
    f2 = -(tau2 - tau3 + l19 * c3 * f3) / d2
    f1 = -(tau1 - tau2 + l18 * c2 * f2 + l18 * c23 * f3) / d1
    return f1, f2, f3


def _fold_numpy(a):
    d = np.mod(a, np.pi)
    return np.minimum(d, np.pi - d)


def _phi_numpy(X, p):
    (tau1, alpha2, alpha3, l18, l19, l20, l23, l24, l25, d1, d2, d3,
     theta9, theta11, flex, b1, b2, floor, penalty) = p
    l16, l21, l22, k1, k2, ts1, ts2 = (X[:, j] for j in range(7))
    ok = (np.abs(l20 - l22) < l25) & (l25 < l20 + l22)

    # loop 1: l23 e(t14) - l21 e(t15) = l18 e(t11) - l16 e(t9)
    kx = l18 * math.cos(theta11) - l16 * math.cos(theta9)
    ky = l18 * math.sin(theta11) - l16 * math.sin(theta9)
    k = np.hypot(kx, ky)
    c = (l23 * l23 - k * k - l21 * l21) / (2.0 * l21 * k)
    ok &= (c >= -1.0) & (c <= 1.0)
    t15 = np.arctan2(ky, kx) + b1 * np.arccos(np.clip(c, -1.0, 1.0))

    # loop 2: l24 e(t16) - l22 e(t17) = l19 e(t12) - l21 e(t15)
    theta12 = theta11 + flex * alpha2
    kx = l19 * math.cos(theta12) - l21 * np.cos(t15)
    ky = l19 * math.sin(theta12) - l21 * np.sin(t15)
    k = np.hypot(kx, ky)
    c = (l24 * l24 - k * k - l22 * l22) / (2.0 * l22 * k)
    ok &= (c >= -1.0) & (c <= 1.0)

    ok &= _fold_numpy(t15 - theta11) >= floor

    tau2 = -(k1 * alpha2 + ts1)
    tau3 = -(k2 * alpha3 + ts2)
    f1, f2, f3 = _forces_numpy(tau1, tau2, tau3, l18, l19, alpha2, alpha3, d1, d2, d3)
    fmax = np.maximum(np.maximum(f1, f2), f3)
    fmin = np.minimum(np.minimum(f1, f2), f3)
    return np.where(ok, np.abs(fmin - fmax), penalty)


def _contact_forces_batch_numpy(tau, l18, l19, alpha2, alpha3, d):
    f1, f2, f3 = _forces_numpy(tau[:, 0], tau[:, 1], tau[:, 2], l18, l19, alpha2, alpha3,
                               d[:, 0], d[:, 1], d[:, 2])
    return np.stack([f1, f2, f3], axis=1)


# --------------------------------------------------------------------------
# numba

if HAVE_NUMBA:

    @numba.njit(cache=True, nogil=True)
    def _forces_scalar(tau1, tau2, tau3, l18, l19, alpha2, alpha3, d1, d2, d3):
        c2 = math.cos(alpha2)
        c3 = math.cos(alpha3)
        c23 = math.cos(alpha2 + alpha3)
        f3 = -tau3 / d3
        f2 = -(tau2 - tau3 + l19 * c3 * f3) / d2
        f1 = -(tau1 - tau2 + l18 * c2 * f2 + l18 * c23 * f3) / d1
        return f1, f2, f3

    @numba.njit(cache=True, nogil=True)
    def _contact_forces_batch_numba(tau, l18, l19, alpha2, alpha3, d):
        n = tau.shape[0]
        out = np.empty((n, 3))
        for i in range(n):
            f1, f2, f3 = _forces_scalar(tau[i, 0], tau[i, 1], tau[i, 2], l18[i], l19[i],
                                        alpha2[i], alpha3[i], d[i, 0], d[i, 1], d[i, 2])
            out[i, 0] = f1
            out[i, 1] = f2
            out[i, 2] = f3
        return out

    @numba.njit(cache=True, nogil=True)
    def _phi_numba(X, p):
        tau1, alpha2, alpha3, l18, l19, l20, l23, l24, l25 = p[0], p[1], p[2], p[3], p[4], p[5], p[6], p[7], p[8]
        d1, d2, d3, theta9, theta11, flex, b1, b2, floor, penalty = (
            p[9], p[10], p[11], p[12], p[13], p[14], p[15], p[16], p[17], p[18])
        n = X.shape[0]
        out = np.empty(n)
        for i in range(n):
            l16, l21, l22 = X[i, 0], X[i, 1], X[i, 2]
            k1, k2, ts1, ts2 = X[i, 3], X[i, 4], X[i, 5], X[i, 6]
            ok = abs(l20 - l22) < l25 and l25 < l20 + l22

            kx = l18 * math.cos(theta11) - l16 * math.cos(theta9)
            ky = l18 * math.sin(theta11) - l16 * math.sin(theta9)
            k = math.hypot(kx, ky)
            c = (l23 * l23 - k * k - l21 * l21) / (2.0 * l21 * k)
            ok = ok and c >= -1.0 and c <= 1.0
            t15 = math.atan2(ky, kx) + b1 * math.acos(min(max(c, -1.0), 1.0))

            theta12 = theta11 + flex * alpha2
            kx = l19 * math.cos(theta12) - l21 * math.cos(t15)
            ky = l19 * math.sin(theta12) - l21 * math.sin(t15)
            k = math.hypot(kx, ky)
            c = (l24 * l24 - k * k - l22 * l22) / (2.0 * l22 * k)
            ok = ok and c >= -1.0 and c <= 1.0

            dd = (t15 - theta11) % math.pi
            ok = ok and min(dd, math.pi - dd) >= floor

            if not ok:
                out[i] = penalty
                continue
            tau2 = -(k1 * alpha2 + ts1)
            tau3 = -(k2 * alpha3 + ts2)
            f1, f2, f3 = _forces_scalar(tau1, tau2, tau3, l18, l19, alpha2, alpha3, d1, d2, d3)
            out[i] = abs(min(f1, f2, f3) - max(f1, f2, f3))
        return out


def contact_forces_batch(tau, l18, l19, alpha2, alpha3, d, use_numba=None) -> np.ndarray:
    """Closed-form contact forces for ``n`` cases; returns an ``(n, 3)`` array."""
    tau = np.ascontiguousarray(tau, dtype=float)
    d = np.ascontiguousarray(d, dtype=float)
    n = tau.shape[0]
    l18, l19, alpha2, alpha3 = (np.ascontiguousarray(np.broadcast_to(np.asarray(v, dtype=float), (n,)))
                                for v in (l18, l19, alpha2, alpha3))
    if USE_NUMBA if use_numba is None else use_numba:
        return _contact_forces_batch_numba(tau, l18, l19, alpha2, alpha3, d)
    return _contact_forces_batch_numpy(tau, l18, l19, alpha2, alpha3, d)


def phi_batch(X, params, use_numba=None) -> np.ndarray:
    """Force-uniformity objective for every row of ``X`` (``params`` from ``ObjectiveContext.kernel_params``)."""
    X = np.ascontiguousarray(X, dtype=float)
    params = np.ascontiguousarray(params, dtype=float)
    if USE_NUMBA if use_numba is None else use_numba:
        return _phi_numba(X, params)
    return _phi_numpy(X, params)
