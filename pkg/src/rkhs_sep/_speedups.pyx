# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled numerical core: moment quadrature and Bergman series sums."""
import numpy as np
cimport numpy as cnp
from libc.stdlib cimport malloc, free
from libc.math cimport exp, log, log1p, cos, sin, atan2, fabs, sqrt, M_PI, INFINITY, NAN

cnp.import_array()


cdef inline double _logf(double y, double n) noexcept nogil:
    cdef double ey = exp(y)
    return n * log1p(-ey) - 1.0 / ey + y


cdef enum:
    _EDGE_ITERS = 48


cdef double _rule(double left, double right, double n, double top, int panels,
                  const double[::1] x, const double[::1] w, double* ex) noexcept nogil:
    # exp(y) at node q of panel p is exp(mid_p) * exp(half * x_q); ex caches the second factor
    cdef int p, q
    cdef int order = x.shape[0]
    cdef double h = (right - left) / panels
    cdef double half = 0.5 * h
    cdef double mid, em, ey, acc = 0.0, pacc
    for q in range(order):
        ex[q] = exp(half * x[q])
    for p in range(panels):
        mid = left + (p + 0.5) * h
        em = exp(mid)
        pacc = 0.0
        for q in range(order):
            ey = em * ex[q]
            pacc += w[q] * exp(n * log1p(-ey) - 1.0 / ey + mid + half * x[q] - top)
        acc += half * pacc
    return acc


def moment_logs(long n_max, int panels=24, int order=20, double drop=60.0):
    """Return ``(log c_n, relative error estimate)`` for n = 0..n_max."""
    xs, ws = np.polynomial.legendre.leggauss(order)
    cdef const double[::1] x = np.ascontiguousarray(xs)
    cdef const double[::1] w = np.ascontiguousarray(ws)
    logs_arr = np.empty(n_max + 1)
    errs_arr = np.empty(n_max + 1)
    cdef double[::1] logs = logs_arr
    cdef double[::1] errs = errs_arr
    cdef double log_pi = log(M_PI)
    cdef double* ex = <double*>malloc(order * sizeof(double))
    if ex == NULL:
        raise MemoryError()
    try:
        _moment_loop(n_max, panels, drop, x, w, ex, logs, errs, log_pi)
    finally:
        free(ex)
    return logs_arr, errs_arr


cdef void _moment_loop(long n_max, int panels, double drop, const double[::1] x,
                       const double[::1] w, double* ex, double[::1] logs, double[::1] errs,
                       double log_pi) noexcept nogil:
    cdef long k
    cdef int it
    cdef double n, lo, hi, mid, peak, top, left, right, coarse, fine
    for k in range(n_max + 1):
        n = <double>k
        if k == 0:
            peak = 0.0
            top = -1.0
        else:
            # psi'(y) = 0 at e^(2y) = 1 / (n + 1)
            peak = -0.5 * log1p(n)
            top = _logf(peak, n)
        lo = -60.0
        hi = peak
        for it in range(_EDGE_ITERS):
            mid = 0.5 * (lo + hi)
            if _logf(mid, n) < top - drop:
                lo = mid
            else:
                hi = mid
        left = 0.5 * (lo + hi)
        if k == 0:
            right = 0.0
        else:
            lo = peak
            hi = 0.0
            for it in range(_EDGE_ITERS):
                mid = 0.5 * (lo + hi)
                if _logf(mid, n) >= top - drop:
                    lo = mid
                else:
                    hi = mid
            right = 0.5 * (lo + hi)
        coarse = _rule(left, right, n, top, panels, x, w, ex)
        fine = _rule(left, right, n, top, 2 * panels, x, w, ex)
        logs[k] = log_pi + top + log(fine)
        errs[k] = fabs(coarse - fine) / fine


def bergman_values(logc_in, p_in, double tol):
    """Sum ``sum_n p^n / c_n`` for every entry of ``p``.

    Returns ``(values, nterms)``; ``nterms[i] == -1`` flags that the tail
    bound could not be met inside the table.
    """
    cdef const double[::1] logc = np.ascontiguousarray(logc_in, dtype=np.float64)
    p_arr = np.ascontiguousarray(np.asarray(p_in, dtype=np.complex128).ravel())
    cdef const double complex[::1] p = p_arr
    out_arr = np.empty(p_arr.shape[0], dtype=np.complex128)
    nt_arr = np.empty(p_arr.shape[0], dtype=np.int64)
    cdef double complex[::1] out = out_arr
    cdef long long[::1] nterms = nt_arr
    cdef Py_ssize_t i, n, stop, size = logc.shape[0]
    cdef double r, lr, th, a, anext, amax, s, q, t, re, im
    with nogil:
        for i in range(p.shape[0]):
            r = sqrt(p[i].real * p[i].real + p[i].imag * p[i].imag)
            if r == 0.0:
                out[i] = exp(-logc[0])
                nterms[i] = 1
                continue
            lr = log(r)
            amax = -INFINITY
            s = 0.0
            stop = -1
            for n in range(size - 1):
                a = n * lr - logc[n]
                if a > amax:
                    s = s * exp(amax - a) + 1.0
                    amax = a
                else:
                    s += exp(a - amax)
                anext = (n + 1) * lr - logc[n + 1]
                if anext < a:
                    q = exp(anext - a)
                    if exp(a - amax) * q / (1.0 - q) <= tol * s:
                        stop = n
                        break
            if stop < 0:
                out[i] = NAN
                nterms[i] = -1
                continue
            th = atan2(p[i].imag, p[i].real)
            re = 0.0
            im = 0.0
            for n in range(stop + 1):
                t = exp(n * lr - logc[n] - amax)
                re += t * cos(n * th)
                im += t * sin(n * th)
            out[i] = exp(amax) * (re + 1j * im)
            nterms[i] = stop + 1
    return out_arr, nt_arr
