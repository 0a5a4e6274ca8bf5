"""Moments of the weight exp(-1/(1 - |z|^2)) on the unit disk.

The monomials z^n are orthogonal in the weighted Bergman space, with

    c_n = ||z^n||^2 = 2 pi int_0^1 r^(2n+1) exp(-1/(1 - r^2)) dr,

so the reproducing kernel is sum_n (z conj(w))^n / c_n.  The tables store
log c_n because c_n decays like exp(-2 sqrt(n)).

Tables are cached on disk (``$RKHS_SEP_CACHE`` or ``~/.cache/rkhs_sep``)
as versioned ``.npz`` records keyed by weight, ``n_max`` and ``tol``.
"""
from __future__ import annotations

import json
import logging
import math
import os
import tempfile
import threading
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy import integrate

from . import _core

log = logging.getLogger(__name__)

WEIGHT_ID = "exp_inv"
DEFAULT_N_MAX = 100_000
DEFAULT_TOL = 1e-10
CACHE_VERSION = 2
CACHE_ENV = "RKHS_SEP_CACHE"

_PANELS = 24
_ORDER = 20


class QuadratureError(RuntimeError):
    """Moment quadrature did not reach the requested accuracy."""


@dataclass(frozen=True)
class MomentTable:
    weight: str
    n_max: int
    tol: float
    log_c: np.ndarray = field(repr=False)
    rel_err: np.ndarray = field(repr=False)
    backend: str = _core.BACKEND

    @property
    def c(self) -> np.ndarray:
        return np.exp(self.log_c)

    @property
    def max_rel_err(self) -> float:
        return float(self.rel_err.max())

    def summary(self) -> dict:
        return {
            "weight": self.weight,
            "n_max": self.n_max,
            "tol": self.tol,
            "backend": self.backend,
            "c0": float(math.exp(self.log_c[0])),
            "log_c_last": float(self.log_c[-1]),
            "max_rel_err": self.max_rel_err,
            "worst_n": int(np.argmax(self.rel_err)),
        }


def cache_dir() -> Path:
    env = os.environ.get(CACHE_ENV)
    if env:
        return Path(env)
    return Path.home() / ".cache" / "rkhs_sep"


def cache_path(weight: str, n_max: int, tol: float) -> Path:
    return cache_dir() / f"moments-v{CACHE_VERSION}-{weight}-n{n_max}-tol{tol:.3e}.npz"


def adaptive_moment(n: int) -> float:
    """log c_n by adaptive quadrature in the radial variable.

    Independent of the panel rule used for the tables: it integrates
    r^(2n+1) exp(-1/(1 - r^2)) directly over [0, 1] with QUADPACK, after
    dividing out the integrand's maximum so the result does not underflow.
    """
    def h(r):
        return (2 * n + 1) * math.log(r) - 1.0 / (1.0 - r * r)

    if n == 0:
        r_peak = 0.0
        log_peak = -1.0
        pts = None
    else:
        # stationary point of h: (2n+1)(1 - r^2)^2 = 2 r^2
        a = 2 * n + 1
        x = (a + 1 - math.sqrt(2 * a + 1)) / a  # x = r^2, root of a x^2 - 2(a+1) x + a = 0
        r_peak = math.sqrt(x)
        log_peak = h(r_peak)
        eps = 1e-6 * (1.0 - r_peak)
        curv = -(h(r_peak + eps) - 2 * log_peak + h(r_peak - eps)) / eps**2
        width = 1.0 / math.sqrt(curv) if curv > 0 else 1e-3
        pts = sorted({min(max(r_peak + k * width, 1e-12), 1 - 1e-15)
                      for k in (-40, -10, -3, 0, 3, 10, 40)})

    def g(r):
        if r <= 0.0 or r >= 1.0:
            return 0.0
        return math.exp(h(r) - log_peak)

    val, _ = integrate.quad(g, 0.0, 1.0, points=pts, epsabs=0.0, epsrel=1e-13, limit=1000)
    return math.log(2 * math.pi) + log_peak + math.log(val)


def build_moment_table(weight: str = WEIGHT_ID, n_max: int = DEFAULT_N_MAX,
                       tol: float = DEFAULT_TOL, *, persist: bool = True,
                       spot_checks: int = 4) -> MomentTable:
    """Compute log c_n for n = 0..n_max and validate the table.

    Raises :class:`QuadratureError` when the embedded error estimate of any
    entry exceeds ``tol`` or when a spot check against
    :func:`adaptive_moment` disagrees by more than ``tol``.
    """
    if weight != WEIGHT_ID:
        raise ValueError(f"unsupported weight {weight!r}")
    if n_max < 0 or not tol > 0:
        raise ValueError("need n_max >= 0 and tol > 0")
    logs, errs = _core.moment_logs(int(n_max), _PANELS, _ORDER, 60.0)
    worst = int(np.argmax(errs))
    if not np.all(np.isfinite(logs)) or errs[worst] >= tol:
        raise QuadratureError(f"moment quadrature missed tol={tol:g}: "
                              f"worst n={worst} with estimate {errs[worst]:.3g}")
    if n_max > 0 and not np.all(np.diff(logs) < 0):
        bad = int(np.flatnonzero(np.diff(logs) >= 0)[0])
        raise QuadratureError(f"moments not strictly decreasing at n={bad}")
    if spot_checks:
        for n in np.unique(np.linspace(0, min(n_max, 20_000), spot_checks).astype(int)):
            ref = adaptive_moment(int(n))
            if abs(math.expm1(logs[n] - ref)) >= tol:
                raise QuadratureError(f"moment n={n} disagrees with adaptive quadrature")
    logs.setflags(write=False)
    errs.setflags(write=False)
    table = MomentTable(weight, int(n_max), float(tol), logs, errs, _core.BACKEND)
    if persist:
        save_table(table)
    return table


def save_table(table: MomentTable) -> Path:
    path = cache_path(table.weight, table.n_max, table.tol)
    path.parent.mkdir(parents=True, exist_ok=True)
    meta = {"version": CACHE_VERSION, "weight": table.weight, "n_max": table.n_max,
            "tol": table.tol, "backend": table.backend}
    fd, tmp = tempfile.mkstemp(dir=path.parent, suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as fh:
            np.savez(fh, log_c=table.log_c, rel_err=table.rel_err, meta=json.dumps(meta))
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return path


def load_table(weight: str, n_max: int, tol: float) -> MomentTable | None:
    path = cache_path(weight, n_max, tol)
    if not path.exists():
        return None
    try:
        with np.load(path, allow_pickle=False) as data:
            meta = json.loads(str(data["meta"]))
            log_c = np.array(data["log_c"])
            rel_err = np.array(data["rel_err"])
    except (OSError, ValueError, KeyError) as exc:
        log.warning("ignoring unreadable moment cache %s: %s", path, exc)
        return None
    if (meta.get("version") != CACHE_VERSION or meta.get("weight") != weight
            or meta.get("n_max") != n_max or meta.get("tol") != tol
            or log_c.shape != (n_max + 1,)):
        log.warning("ignoring stale moment cache %s", path)
        return None
    log_c.setflags(write=False)
    rel_err.setflags(write=False)
    return MomentTable(weight, n_max, tol, log_c, rel_err, meta.get("backend", "unknown"))


_memo: dict[tuple, MomentTable] = {}
_lock = threading.Lock()


def get_table(weight: str = WEIGHT_ID, n_max: int = DEFAULT_N_MAX,
              tol: float = DEFAULT_TOL, *, rebuild: bool = False) -> MomentTable:
    """Moment table from memory, the disk cache, or a fresh build (in that order)."""
    key = (weight, int(n_max), float(tol), str(cache_dir()))
    with _lock:
        if not rebuild and key in _memo:
            return _memo[key]
        table = None if rebuild else load_table(weight, int(n_max), float(tol))
        if table is None:
            log.info("building moment table n_max=%d (backend=%s)", n_max, _core.BACKEND)
            table = build_moment_table(weight, int(n_max), float(tol))
        _memo[key] = table
        return table


def bergman_sum(table: MomentTable, p, series_tol: float):
    """Values of sum_n p^n / c_n and the number of terms used (-1: tail bound failed)."""
    return _core.bergman_values(table.log_c, np.asarray(p, dtype=np.complex128), series_tol)
