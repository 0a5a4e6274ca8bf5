"""Pick matrices for kernel pairs, extremal separation constants, Schur products.

For kernels ``s`` (source) and ``l`` (target), points ``lam`` and targets
``w``, the Pick matrix is

    A[i, j] = M^2 l(lam_j, lam_i) - w_j conj(w_i) s(lam_j, lam_i),

which is Hermitian, and ``x^H A x >= 0`` for all ``x`` exactly when the
adjoint of multiplication by an interpolant of norm at most ``M`` maps
``l_lam`` to ``conj(w) s_lam`` contractively.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from .gram import _check_distinct, dist_to_span_batch
from .kernels import Kernel, KernelError, _cx, _cx_json, as_points, construct, points_json
from .linalg import TOL_PSD, PSDResult, psd_check, schur_product

__all__ = [
    "PickProblem",
    "PickResult",
    "MonotonicityReport",
    "QuotientNotPSDError",
    "pick_matrix",
    "psd_check",
    "schur_product",
    "separation_epsilon",
    "factor_monotonicity_check",
    "solve",
    "BISECT_ITERS",
    "BISECT_TOL",
]

BISECT_ITERS = 60
BISECT_TOL = 1e-10


class QuotientNotPSDError(ValueError):
    """The entrywise quotient l/g is not positive semi-definite on the points."""

    def __init__(self, min_eig: float):
        super().__init__(f"quotient Gram l/g is not PSD on the point set (min eig {min_eig:.3g})")
        self.min_eig = min_eig


@dataclass
class PickProblem:
    s: Kernel
    ell: Kernel
    points: np.ndarray
    targets: np.ndarray
    M: float = 1.0

    def __post_init__(self):
        self.s = construct(self.s)
        self.ell = construct(self.ell)
        if self.s.dim != self.ell.dim:
            raise KernelError("s and l must live on the same domain")
        self.points = self.ell.check_points(self.points)
        self.s.check_points(self.points)
        _check_distinct(self.points)
        self.targets = np.asarray([_cx(w) for w in self.targets], dtype=np.complex128)
        if self.targets.shape != (self.points.shape[0],):
            raise ValueError(f"{self.targets.size} targets for {self.points.shape[0]} points")
        if not self.M > 0:
            raise ValueError("norm bound M must be positive")

    @classmethod
    def from_json(cls, data: dict) -> "PickProblem":
        ell = construct(data["ell"])
        pts = as_points(data["points"], ell.dim)
        return cls(construct(data["s"]), ell, pts, data["targets"], float(data.get("M", 1.0)))

    def to_json(self) -> dict:
        return {"s": self.s.to_json(), "ell": self.ell.to_json(),
                "points": points_json(self.points),
                "targets": [_cx_json(w) for w in self.targets], "M": self.M}


@dataclass
class PickResult:
    is_psd: bool
    min_eig: float
    eps_max: float | None = None

    def to_json(self) -> dict:
        return {"is_psd": self.is_psd, "min_eig": self.min_eig, "eps_max": self.eps_max}


def pick_matrix(p: PickProblem) -> np.ndarray:
    """Hermitian Pick matrix ``M^2 l(lam_j, lam_i) - w_j conj(w_i) s(lam_j, lam_i)``."""
    pts = p.points
    ell = p.ell.block(pts, pts).T
    s = p.s.block(pts, pts).T
    w = p.targets
    a = p.M ** 2 * ell - np.outer(w.conj(), w) * s
    return 0.5 * (a + a.conj().T)


def _anchor_pick(s: Kernel, ell: Kernel, pts: np.ndarray, anchor: int):
    """Normalized Pick matrix as a function of eps^2 for a single non-zero target.

    The target at the anchor is ``eps * ||l_a|| / ||s_a||``; conjugating the
    Pick matrix by ``diag(1 / ||l_i||)`` leaves ``G - eps^2 e_a e_a^T`` with
    ``G`` the normalized l-Gram.
    """
    lb = ell.block(pts, pts)
    sb = s.block(pts, pts)
    ld = lb.diagonal().real
    sd = sb.diagonal().real
    if np.any(~(ld > 0)) or np.any(~(sd > 0)):
        raise KernelError("kernel function with non-positive norm")
    nrm = np.sqrt(ld)
    base = lb.T / np.outer(nrm, nrm)
    base = 0.5 * (base + base.conj().T)
    w2 = ld[anchor] / sd[anchor]  # |w_a|^2 per unit eps^2

    def matrix(t: float) -> np.ndarray:
        m = base.copy()
        m[anchor, anchor] -= t * w2 * sd[anchor] / ld[anchor]
        return m

    return matrix


def separation_epsilon(s, ell, points, anchor: int, tol: float = BISECT_TOL) -> float:
    """Largest eps for which the anchor-only Pick problem is solvable.

    Bisects on ``eps^2`` in ``[0, 1]`` (at most 60 steps, stopping once the
    bracket is within ``tol`` relative) with a zero-tolerance PSD test, so
    boundary ties count as infeasible.  The result equals the distance from
    the anchor's normalized l-kernel function to the span of the others.
    """
    s = construct(s)
    ell = construct(ell)
    pts = ell.check_points(points)
    _check_distinct(pts)
    if pts.shape[0] < 2:
        raise ValueError("need at least two points")
    if not 0 <= anchor < pts.shape[0]:
        raise IndexError(f"anchor {anchor} out of range")
    matrix = _anchor_pick(s, ell, pts, anchor)

    def feasible(t: float) -> bool:
        return np.linalg.eigvalsh(matrix(t))[0] >= 0.0

    if feasible(1.0):
        return 1.0
    lo, hi = 0.0, 1.0
    for _ in range(BISECT_ITERS):
        if hi - lo <= tol * hi:
            break
        mid = 0.5 * (lo + hi)
        if feasible(mid):
            lo = mid
        else:
            hi = mid
    return math.sqrt(lo)


def solve(p: PickProblem, anchor: int | None = None, tol_psd: float = TOL_PSD) -> PickResult:
    """PSD verdict for the Pick matrix, plus ``eps_max`` when an anchor is given."""
    res = psd_check(pick_matrix(p), tol_psd)
    eps = None
    if anchor is not None:
        eps = separation_epsilon(p.s, p.ell, p.points, anchor)
    return PickResult(res.is_psd, res.min_eig, eps)


@dataclass
class MonotonicityReport:
    checked: int
    max_excess: float
    quotient_min_eig: float
    violations: list[dict] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations

    def to_json(self) -> dict:
        return {"checked": self.checked, "max_excess": self.max_excess,
                "quotient_min_eig": self.quotient_min_eig, "violations": self.violations}


def _normalized_gram(k: Kernel, pts: np.ndarray) -> np.ndarray:
    b = k.block(pts, pts).T
    d = np.sqrt(b.diagonal().real)
    g = b / np.outer(d, d)
    g = 0.5 * (g + g.conj().T)
    np.fill_diagonal(g, 1.0)
    return g


def factor_monotonicity_check(g, ell, points, slack: float = 1e-10,
                              max_span: int | None = None) -> MonotonicityReport:
    """Compare distances to spans under ``g`` and under ``l = g * (l / g)``.

    Every anchor is paired with every non-empty subset of the other points
    (of size at most ``max_span``); a violation is a distance under ``g``
    exceeding the distance under ``l`` by more than ``slack``.  Raises
    :class:`QuotientNotPSDError` if ``l / g`` fails the PSD test on the points.
    """
    g = construct(g)
    ell = construct(ell)
    pts = ell.check_points(points)
    g.check_points(pts)
    _check_distinct(pts)
    gb = g.block(pts, pts)
    quotient = ell.block(pts, pts) / gb
    q = psd_check(0.5 * (quotient + quotient.conj().T))
    if not q.is_psd:
        raise QuotientNotPSDError(q.min_eig)
    gg = _normalized_gram(g, pts)
    gl = _normalized_gram(ell, pts)
    npts = pts.shape[0]
    top = npts - 1 if max_span is None else min(max_span, npts - 1)
    checked = 0
    max_excess = -math.inf
    violations = []
    for size in range(1, top + 1):
        anchors, spans = [], []
        for a in range(npts):
            others = [i for i in range(npts) if i != a]
            for sp in itertools.combinations(others, size):
                anchors.append(a)
                spans.append(sp)
        dg = dist_to_span_batch(gg, anchors, spans)
        dl = dist_to_span_batch(gl, anchors, spans)
        excess = dg - dl
        checked += excess.size
        max_excess = max(max_excess, float(excess.max()))
        for i in np.flatnonzero(excess > slack):
            violations.append({"anchor": anchors[i], "span": list(spans[i]),
                               "dist_g": float(dg[i]), "dist_l": float(dl[i])})
    return MonotonicityReport(checked, max_excess, q.min_eig, violations)
