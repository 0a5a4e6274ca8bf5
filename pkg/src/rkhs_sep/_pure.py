"""Numpy implementations of the numerical core.

These mirror the routines in ``_speedups.pyx`` and are used whenever the
compiled extension is unavailable (or ``RKHS_SEP_PURE=1`` is set).
"""
import numpy as np
from numpy.polynomial.legendre import leggauss

_CHUNK = 2048
_EDGE_ITERS = 48


def _log_integrand(y, n):
    # log of (1 - s)^n e^{-1/s} s with s = e^y  (the trailing s is ds = s dy)
    with np.errstate(divide="ignore", invalid="ignore"):
        return n * np.log1p(-np.exp(y)) - np.exp(-y) + y


def _bisect(f, lo, hi, iters):
    # f(lo) True, f(hi) False; shrink toward the switch point
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        left = f(mid)
        lo = np.where(left, mid, lo)
        hi = np.where(left, hi, mid)
    return 0.5 * (lo + hi)


def _moment_chunk(n, panels, order, drop):
    ymin = -60.0
    # psi'(y) = 0 at e^(2y) = 1 / (n + 1)
    peak = np.where(n == 0, 0.0, -0.5 * np.log1p(n))
    top = np.where(n == 0, -1.0, _log_integrand(peak, n))

    left = _bisect(lambda y: _log_integrand(y, n) < top - drop,
                   np.full_like(n, ymin), peak, _EDGE_ITERS)
    right = _bisect(lambda y: _log_integrand(y, n) >= top - drop,
                    peak, np.zeros_like(n), _EDGE_ITERS)
    right = np.where(n == 0, 0.0, right)

    x, w = leggauss(order)

    def rule(p):
        t = np.linspace(0.0, 1.0, p + 1)
        edges = left[:, None] + (right - left)[:, None] * t[None, :]
        half = 0.5 * np.diff(edges, axis=1)
        mids = 0.5 * (edges[:, 1:] + edges[:, :-1])
        y = mids[:, :, None] + half[:, :, None] * x
        f = np.exp(_log_integrand(y, n[:, None, None]) - top[:, None, None])
        return (half[:, :, None] * w * f).sum(axis=(1, 2))

    coarse = rule(panels)
    fine = rule(2 * panels)
    return np.log(np.pi) + top + np.log(fine), np.abs(coarse - fine) / fine


def moment_logs(n_max, panels=24, order=20, drop=60.0):
    """Return ``(log c_n, relative error estimate)`` for n = 0..n_max."""
    n_all = np.arange(n_max + 1, dtype=np.float64)
    logs = np.empty_like(n_all)
    errs = np.empty_like(n_all)
    for start in range(0, n_all.size, _CHUNK):
        sl = slice(start, start + _CHUNK)
        logs[sl], errs[sl] = _moment_chunk(n_all[sl], panels, order, drop)
    return logs, errs


def bergman_values(logc, p, tol):
    """Sum ``sum_n p^n / c_n`` for every entry of ``p``.

    Returns ``(values, nterms)``; ``nterms[i] == -1`` flags that the tail
    bound could not be met inside the table.
    """
    p = np.asarray(p, dtype=np.complex128).ravel()
    logc = np.asarray(logc, dtype=np.float64)
    out = np.empty(p.size, dtype=np.complex128)
    nterms = np.empty(p.size, dtype=np.int64)
    idx = np.arange(logc.size, dtype=np.float64)
    for i, z in enumerate(p):
        r = abs(z)
        if r == 0.0:
            out[i] = np.exp(-logc[0])
            nterms[i] = 1
            continue
        a = idx * np.log(r) - logc
        top = a.max()
        partial = np.cumsum(np.exp(a - top))[:-1]
        step = a[1:] - a[:-1]
        with np.errstate(over="ignore", divide="ignore"):
            q = np.exp(step)
            tail = np.exp(a[:-1] - top) * q / (1.0 - q)
        ok = np.flatnonzero((step < 0) & (tail <= tol * partial))
        if ok.size == 0:
            out[i] = np.nan
            nterms[i] = -1
            continue
        stop = ok[0]
        n = idx[: stop + 1]
        t = np.exp(a[: stop + 1] - top)
        th = np.arctan2(z.imag, z.real)
        re = np.sum(t * np.cos(n * th))
        im = np.sum(t * np.sin(n * th))
        out[i] = np.exp(top) * complex(re, im)
        nterms[i] = stop + 1
    return out, nterms
