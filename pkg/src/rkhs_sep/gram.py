"""Gram matrices of normalized kernel functions and separation quantities.

All distances are computed in the normalized Gram geometry, where
``G[i, j] = <k_hat_i, k_hat_j> = k(p_j, p_i) / sqrt(k(p_i, p_i) k(p_j, p_j))``.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from .kernels import Kernel, KernelError, construct, points_json
from .linalg import TOL_PSD, psd_scale

__all__ = [
    "GramMatrix",
    "SeparationReport",
    "LevelResult",
    "SingularSpanError",
    "gram",
    "pseudo_distance",
    "dist_to_span_det",
    "dist_to_span_proj",
    "dist_to_span_batch",
    "n_weak_separation",
    "riesz_bounds",
    "DEFAULT_BUDGET",
    "DET_COND_LIMIT",
]

DEFAULT_BUDGET = 200_000
DET_COND_LIMIT = 1e12
# eigenvalues of a sub-Gram below this fraction of the largest are treated as 0
_EIG_FLOOR = 1e-14


class SingularSpanError(ValueError):
    """The span sub-Gram is numerically singular; use the projection route."""


@dataclass
class GramMatrix:
    entries: np.ndarray
    points: np.ndarray
    kernel_id: str
    normalized: bool
    diag_norms: np.ndarray

    @property
    def size(self) -> int:
        return self.entries.shape[0]

    def normalized_entries(self) -> np.ndarray:
        if self.normalized:
            return self.entries
        n = self.diag_norms
        g = self.entries / np.outer(n, n)
        np.fill_diagonal(g, 1.0)
        return g

    def to_json(self) -> dict:
        return {
            "kernel_id": self.kernel_id,
            "normalized": self.normalized,
            "points": points_json(self.points),
            "diag_norms": [float(x) for x in self.diag_norms],
            "entries": [[[float(z.real), float(z.imag)] for z in row] for row in self.entries],
        }


def _check_distinct(pts: np.ndarray) -> None:
    seen: dict[tuple, int] = {}
    for i, p in enumerate(pts):
        key = tuple(p)
        if key in seen:
            raise ValueError(f"points {seen[key]} and {i} coincide")
        seen[key] = i


def gram(k, points, normalized: bool = True) -> GramMatrix:
    """Gram matrix of the kernel functions at ``points``.

    Raises ``ValueError`` for duplicate points and :class:`KernelError` when a
    kernel function vanishes or the matrix fails the PSD tolerance.
    """
    k = construct(k)
    pts = k.check_points(points)
    _check_distinct(pts)
    kk = k.block(pts, pts)
    diag = kk.diagonal().real.copy()
    if np.any(~(diag > 0)):
        bad = int(np.flatnonzero(~(diag > 0))[0])
        raise KernelError(f"kernel function at point {bad} has non-positive norm")
    norms = np.sqrt(diag)
    g = kk.T.copy()
    if normalized:
        g /= np.outer(norms, norms)
    g = 0.5 * (g + g.conj().T)
    if normalized:
        np.fill_diagonal(g, 1.0)
    if g.shape[0]:
        min_eig = np.linalg.eigvalsh(g)[0]
        if min_eig < -TOL_PSD * psd_scale(g):
            raise KernelError(f"Gram matrix is not positive semi-definite (min eig {min_eig:.3g})")
    return GramMatrix(g, pts, k.kernel_id, normalized, norms)


def pseudo_distance(k, z, w) -> float:
    """d_k(z, w) = sqrt(1 - |<k_z, k_w>|^2 / (||k_z||^2 ||k_w||^2))."""
    k = construct(k)
    pts = k.check_points([z, w])
    if np.array_equal(pts[0], pts[1]):
        return 0.0
    kk = k.block(pts, pts)
    kzz, kww = kk[0, 0].real, kk[1, 1].real
    if not (kzz > 0 and kww > 0):
        raise KernelError("kernel function with non-positive norm")
    corr = abs(kk[0, 1]) ** 2 / (kzz * kww)
    return math.sqrt(min(1.0, max(0.0, 1.0 - corr)))


def _normalized(g) -> np.ndarray:
    if isinstance(g, GramMatrix):
        return g.normalized_entries()
    g = np.asarray(g, dtype=np.complex128)
    d = np.sqrt(g.diagonal().real)
    if np.allclose(d, 1.0, rtol=0, atol=1e-12):
        return g
    out = g / np.outer(d, d)
    np.fill_diagonal(out, 1.0)
    return out


def _span_list(anchor: int, span) -> list[int]:
    span = [int(i) for i in span]
    if not span:
        raise ValueError("span must be non-empty")
    if anchor in span:
        raise ValueError("anchor must not belong to the span")
    return span


def dist_to_span_det(g, anchor: int, span) -> float:
    """Distance from k_hat[anchor] to span{k_hat[i] : i in span} by the determinant ratio.

    d^2 = det(Gram of anchor + span) / det(Gram of span).  Refuses (raises
    :class:`SingularSpanError`) when the span sub-Gram has condition number
    above ``DET_COND_LIMIT``.
    """
    g = _normalized(g)
    span = _span_list(anchor, span)
    gs = g[np.ix_(span, span)]
    cond = np.linalg.cond(gs)
    if not cond < DET_COND_LIMIT:
        raise SingularSpanError(f"span sub-Gram condition number {cond:.3g} too large")
    idx = [anchor] + span
    s_full, l_full = np.linalg.slogdet(g[np.ix_(idx, idx)])
    s_span, l_span = np.linalg.slogdet(gs)
    if s_full == 0:
        return 0.0
    d2 = (s_full / s_span).real * math.exp(l_full - l_span)
    return math.sqrt(min(1.0, max(0.0, d2)))


def dist_to_span_batch(g: np.ndarray, anchors, spans) -> np.ndarray:
    """Projection distances for many (anchor, span) pairs of equal span size.

    Each sub-Gram is factored as ``X^H X`` through its eigendecomposition and
    the anchor column is projected onto the span columns by a minimum-norm
    least-squares solve, so dependent spans are handled.
    """
    g = np.asarray(g)
    anchors = np.asarray(anchors, dtype=np.intp).reshape(-1)
    spans = np.asarray(spans, dtype=np.intp).reshape(anchors.size, -1)
    idx = np.concatenate([anchors[:, None], spans], axis=1)
    sub = g[idx[:, :, None], idx[:, None, :]]
    w, u = np.linalg.eigh(sub)
    top = np.max(w, axis=1, keepdims=True)
    w = np.where(w > _EIG_FLOOR * top, w, 0.0)
    x = np.sqrt(w)[:, :, None] * np.conj(np.swapaxes(u, 1, 2))
    x0 = x[:, :, 0]
    xs = x[:, :, 1:]
    coef = np.linalg.pinv(xs, rcond=1e-10) @ x0[:, :, None]
    resid = x0 - (xs @ coef)[:, :, 0]
    return np.clip(np.linalg.norm(resid, axis=1), 0.0, 1.0)


def dist_to_span_proj(g, anchor: int, span) -> float:
    """Distance from k_hat[anchor] to the span by least-squares projection.

    Defined for dependent spans as well; agrees with
    :func:`dist_to_span_det` wherever the latter is defined.
    """
    g = _normalized(g)
    span = _span_list(anchor, span)
    return float(dist_to_span_batch(g, [anchor], [span])[0])


@dataclass
class LevelResult:
    n: int
    eps: float
    anchor: int
    span: tuple[int, ...]
    evaluated: int
    total: int
    partial: bool

    def to_json(self) -> dict:
        return {"n": self.n, "eps": self.eps,
                "witness": {"anchor": self.anchor, "span": list(self.span)},
                "evaluated": self.evaluated, "total": self.total, "partial": self.partial}


@dataclass
class SeparationReport:
    kernel_id: str
    n_points: int
    levels: dict[int, LevelResult] = field(default_factory=dict)
    min_pair: float = 1.0
    min_pair_indices: tuple[int, int] = (0, 0)

    @property
    def partial(self) -> bool:
        return any(lv.partial for lv in self.levels.values())

    def eps(self, n: int) -> float:
        return self.levels[n].eps

    def to_json(self) -> dict:
        return {
            "kernel_id": self.kernel_id,
            "n_points": self.n_points,
            "levels": [self.levels[n].to_json() for n in sorted(self.levels)],
            "min_pair": {"value": self.min_pair, "pair": list(self.min_pair_indices)},
            "partial": self.partial,
        }


def _scan_level(g: np.ndarray, m: int, budget: int, chunk: int = 4096) -> LevelResult:
    npts = g.shape[0]
    total = math.comb(npts, m) * m
    best, best_anchor, best_span = math.inf, -1, ()
    evaluated = 0
    combos = itertools.combinations(range(npts), m)
    while evaluated < budget:
        block = list(itertools.islice(combos, chunk))
        if not block:
            break
        c = np.array(block, dtype=np.intp)
        # enumeration order: subsets lexicographically, anchors by position
        pos = np.arange(m)
        anchors = c[:, pos].reshape(-1)
        others = np.array([[j for j in range(m) if j != a] for a in range(m)], dtype=np.intp)
        spans = c[:, others].reshape(-1, m - 1)
        take = min(anchors.size, budget - evaluated)
        anchors, spans = anchors[:take], spans[:take]
        if m == 2:
            gij = g[anchors, spans[:, 0]]
            d = np.sqrt(np.clip(1.0 - np.abs(gij) ** 2, 0.0, 1.0))
        else:
            d = dist_to_span_batch(g, anchors, spans)
        i = int(np.argmin(d))
        if d[i] < best:
            best, best_anchor, best_span = float(d[i]), int(anchors[i]), tuple(int(s) for s in spans[i])
        evaluated += take
    return LevelResult(m, best, best_anchor, best_span, evaluated, total, evaluated < total)


def n_weak_separation(k, points, n: int, budget: int = DEFAULT_BUDGET,
                      g: GramMatrix | None = None) -> SeparationReport:
    """Separation constants eps_m for m = 2..n on a finite point set.

    eps_m is the minimum over m-point subsets and over the choice of anchor
    inside the subset of the distance from the anchor's normalized kernel
    function to the span of the other m - 1.  Subsets are enumerated in
    lexicographic order with anchors by position; at most ``budget``
    (anchor, span) pairs are evaluated per level, and a truncated level is
    flagged ``partial``.  Ties keep the first minimiser in that order.
    """
    if budget <= 0:
        raise ValueError("budget must be positive")
    if n < 2:
        raise ValueError("n must be at least 2")
    if g is None:
        g = gram(k, points, normalized=True)
    npts = g.size
    if n > npts:
        raise ValueError(f"n={n} exceeds the number of points ({npts})")
    ge = g.normalized_entries()
    report = SeparationReport(g.kernel_id, npts)
    for m in range(2, n + 1):
        report.levels[m] = _scan_level(ge, m, budget)
    lv = report.levels[2]
    report.min_pair = lv.eps
    report.min_pair_indices = tuple(sorted((lv.anchor, lv.span[0])))
    return report


def riesz_bounds(g) -> tuple[float, float]:
    """Extreme eigenvalues of the normalized Gram matrix.

    A positive minimum certifies finite Riesz bounds for the truncation; the
    maximum is a lower estimate of the Carleson constant.
    """
    w = np.linalg.eigvalsh(_normalized(g))
    return float(w[0]), float(w[-1])
