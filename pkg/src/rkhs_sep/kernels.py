"""Composable reproducing kernels.

A kernel is a tree of atoms (Szegő, Dirichlet, ball embeddings, the
weighted Bergman kernel, Fock, finite-rank and constant kernels) joined by
combinators (tensor, pointwise product, sum, power, pullback).  Every node
evaluates blocks ``K[i, j] = k(a_i, b_j)`` on point arrays of shape
``(n, dim)``; the convention is ``k(z, w) = k_w(z)``, linear in ``z``.

Kernels serialize to a JSON expression tree, see :func:`construct` and
:meth:`Kernel.to_json`.  Complex numbers are written as ``[re, im]``.
"""
from __future__ import annotations

import hashlib
import json
import math
from typing import Any, Iterable, Sequence

import numpy as np

from . import moments

__all__ = [
    "KernelError",
    "DomainError",
    "BergmanTailError",
    "Kernel",
    "Szego",
    "Dirichlet",
    "BallEmbedding",
    "WeightedBergman",
    "Fock",
    "FiniteRank",
    "Constant",
    "Tensor",
    "Product",
    "Sum",
    "Power",
    "Pullback",
    "PolyMap",
    "TableMap",
    "construct",
    "as_points",
    "bidisk_pair",
    "DEFAULT_BERGMAN_RADIUS",
]

DEFAULT_BERGMAN_RADIUS = 1.0 - 2.0**-7


class KernelError(ValueError):
    """Invalid kernel expression or failed evaluation."""


class DomainError(KernelError):
    """A point lies outside the domain of a kernel."""


class BergmanTailError(KernelError):
    """The Bergman series tail bound cannot be met with the loaded moment table."""


# -- small serialization helpers ---------------------------------------------


def _cx(v) -> complex:
    if isinstance(v, (list, tuple)):
        if len(v) != 2:
            raise KernelError(f"complex numbers are [re, im] pairs, got {v!r}")
        return complex(float(v[0]), float(v[1]))
    return complex(v)


def _cx_json(z: complex) -> list[float]:
    z = complex(z)
    return [z.real, z.imag]


def _point_json(p: Sequence[complex]) -> list[float]:
    out: list[float] = []
    for z in p:
        out.extend(_cx_json(z))
    return out


def _point_from_json(v) -> tuple[complex, ...]:
    v = list(v)
    if v and isinstance(v[0], (list, tuple)):
        return tuple(_cx(x) for x in v)
    if len(v) % 2:
        raise KernelError(f"point must have an even number of reals, got {v!r}")
    return tuple(complex(float(v[i]), float(v[i + 1])) for i in range(0, len(v), 2))


def as_points(points, dim: int | None = None) -> np.ndarray:
    """Coerce points to a complex array of shape ``(n, dim)``.

    Each point may be a complex scalar (dimension 1), a tuple or array of
    complex coordinates, or a *list* of reals ``[re, im, re, im, ...]`` as
    used in JSON input.  Lists are always read in the flat JSON form.
    """
    if isinstance(points, np.ndarray) and points.ndim == 2 and np.iscomplexobj(points):
        arr = points
    else:
        rows = []
        for p in points:
            if isinstance(p, (complex, float, int, np.number)):
                rows.append((complex(p),))
            elif isinstance(p, list) and all(isinstance(x, (float, int)) for x in p):
                rows.append(_point_from_json(p))
            else:
                rows.append(tuple(complex(x) for x in p))
        if not rows:
            return np.zeros((0, dim or 1), dtype=np.complex128)
        width = {len(r) for r in rows}
        if len(width) != 1:
            raise DomainError("points have inconsistent dimensions")
        arr = np.array(rows, dtype=np.complex128)
    if dim is not None and arr.shape[1] != dim:
        raise DomainError(f"points have dimension {arr.shape[1]}, kernel expects {dim}")
    return arr


# -- coordinate maps -----------------------------------------------------------


class PolyMap:
    """Polynomial map C^in_dim -> C^out_dim.

    ``components[k]`` is a list of ``(coef, powers)`` monomials whose sum is
    the k-th output coordinate.
    """

    def __init__(self, in_dim: int, components: Sequence[Sequence[tuple[complex, Sequence[int]]]]):
        self.in_dim = int(in_dim)
        self.components = []
        for comp in components:
            terms = []
            for coef, powers in comp:
                powers = tuple(int(p) for p in powers)
                if len(powers) != self.in_dim or min(powers, default=0) < 0:
                    raise KernelError(f"bad monomial powers {powers} for input dimension {in_dim}")
                terms.append((complex(coef), powers))
            self.components.append(terms)
        self.out_dim = len(self.components)
        if self.out_dim == 0:
            raise KernelError("polynomial map needs at least one component")

    @classmethod
    def monomial(cls, n: int) -> "PolyMap":
        """z -> z**n on one variable."""
        return cls(1, [[(1.0, (n,))]])

    @classmethod
    def coordinate(cls, i: int, in_dim: int) -> "PolyMap":
        powers = [0] * in_dim
        powers[i] = 1
        return cls(in_dim, [[(1.0, tuple(powers))]])

    @classmethod
    def diagonal(cls, copies: int) -> "PolyMap":
        """z -> (z, ..., z)."""
        return cls(1, [[(1.0, (1,))] for _ in range(copies)])

    @classmethod
    def linear(cls, matrix) -> "PolyMap":
        m = np.atleast_2d(np.asarray(matrix, dtype=np.complex128))
        comps = []
        for row in m:
            comps.append([(c, tuple(int(i == j) for i in range(m.shape[1])))
                          for j, c in enumerate(row) if c != 0])
        return cls(m.shape[1], comps)

    def __call__(self, pts: np.ndarray) -> np.ndarray:
        out = np.zeros((pts.shape[0], self.out_dim), dtype=np.complex128)
        for k, comp in enumerate(self.components):
            for coef, powers in comp:
                term = np.full(pts.shape[0], coef, dtype=np.complex128)
                for i, p in enumerate(powers):
                    for _ in range(p):
                        term = term * pts[:, i]
                out[:, k] += term
        return out

    def to_json(self) -> dict:
        return {
            "type": "poly",
            "in_dim": self.in_dim,
            "components": [[{"coef": _cx_json(c), "pow": list(p)} for c, p in comp]
                           for comp in self.components],
        }


class TableMap:
    """Map given by an explicit point table, with a default image elsewhere."""

    def __init__(self, in_dim: int, out_dim: int, entries, default):
        self.in_dim = int(in_dim)
        self.out_dim = int(out_dim)
        self.table: dict[tuple[complex, ...], tuple[complex, ...]] = {}
        for src, dst in entries:
            src, dst = tuple(complex(x) for x in src), tuple(complex(x) for x in dst)
            if len(src) != self.in_dim or len(dst) != self.out_dim:
                raise KernelError("table map entry has wrong dimension")
            self.table[src] = dst
        self.default = tuple(complex(x) for x in default)
        if len(self.default) != self.out_dim:
            raise KernelError("table map default has wrong dimension")

    def __call__(self, pts: np.ndarray) -> np.ndarray:
        return np.array([self.table.get(tuple(p), self.default) for p in pts],
                        dtype=np.complex128).reshape(len(pts), self.out_dim)

    def to_json(self) -> dict:
        return {
            "type": "table",
            "in_dim": self.in_dim,
            "out_dim": self.out_dim,
            "entries": [{"point": _point_json(s), "image": _point_json(d)}
                        for s, d in self.table.items()],
            "default": _point_json(self.default),
        }


def _map_from_json(spec) -> PolyMap | TableMap:
    kind = spec.get("type")
    if kind == "poly":
        comps = [[(_cx(t["coef"]), t["pow"]) for t in comp] for comp in spec["components"]]
        return PolyMap(spec["in_dim"], comps)
    if kind == "table":
        entries = [(_point_from_json(e["point"]), _point_from_json(e["image"]))
                   for e in spec["entries"]]
        return TableMap(spec["in_dim"], spec["out_dim"], entries, _point_from_json(spec["default"]))
    raise KernelError(f"unknown map type {kind!r}")


# -- kernel nodes --------------------------------------------------------------


class Kernel:
    """Base class for kernel expressions."""

    dim: int = 1
    #: True only when non-vanishing is certified structurally (never numerically)
    nonvanishing: bool = False

    def block(self, a: np.ndarray, b: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def log_block(self, a: np.ndarray, b: np.ndarray) -> np.ndarray:
        """Continuous logarithm of :meth:`block`; only for non-vanishing kernels."""
        raise KernelError(f"{type(self).__name__} is not certified non-vanishing")

    def in_domain(self, pts: np.ndarray) -> np.ndarray:
        return np.ones(pts.shape[0], dtype=bool)

    def to_json(self) -> dict:
        raise NotImplementedError

    # public evaluation API

    def check_points(self, points) -> np.ndarray:
        pts = as_points(points, self.dim)
        ok = self.in_domain(pts)
        if not np.all(ok):
            bad = int(np.flatnonzero(~ok)[0])
            raise DomainError(f"point {bad} {tuple(pts[bad])} lies outside the kernel domain")
        return pts

    def matrix(self, points, other=None) -> np.ndarray:
        """``K[i, j] = k(points[i], other[j])`` (``other`` defaults to ``points``)."""
        a = self.check_points(points)
        b = a if other is None else self.check_points(other)
        return self.block(a, b)

    def __call__(self, z, w) -> complex:
        return complex(self.matrix([z], [w])[0, 0])

    def diagonal(self, points) -> np.ndarray:
        pts = self.check_points(points)
        return np.array([self.block(p[None], p[None])[0, 0].real for p in pts])

    @property
    def kernel_id(self) -> str:
        blob = json.dumps(self.to_json(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()[:16]

    def __repr__(self) -> str:
        return f"{type(self).__name__}({json.dumps(self.to_json(), sort_keys=True)})"

    # operator sugar
    def __mul__(self, other: "Kernel") -> "Product":
        return Product(self, other)

    def __add__(self, other: "Kernel") -> "Sum":
        return Sum(self, other)

    def __pow__(self, t: float) -> "Power":
        return Power(self, t)


def _disk(pts: np.ndarray, cap: float = 1.0) -> np.ndarray:
    if cap >= 1.0:
        return np.all(np.abs(pts) < 1.0, axis=1)
    return np.all(np.abs(pts) <= cap, axis=1)


def _clog1p(z: np.ndarray) -> np.ndarray:
    """Principal log(1 + z) for complex z, accurate for small |z| (numpy's is not)."""
    x, y = z.real, z.imag
    return 0.5 * np.log1p(x * (2.0 + x) + y * y) + 1j * np.arctan2(y, 1.0 + x)


def _inner(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """``P[i, j] = <a_i, b_j>`` in C^d."""
    return a @ b.conj().T


class Szego(Kernel):
    """Szegő kernel 1/(1 - z conj(w)) on the unit disk."""

    dim = 1
    nonvanishing = True

    def block(self, a, b):
        return 1.0 / (1.0 - _inner(a, b))

    def log_block(self, a, b):
        return -_clog1p(-_inner(a, b))

    def in_domain(self, pts):
        return _disk(pts)

    def to_json(self):
        return {"type": "szego"}


class Dirichlet(Kernel):
    """Dirichlet kernel -log(1 - p)/p with p = z conj(w), equal to 1 at p = 0."""

    dim = 1

    def block(self, a, b):
        p = _inner(a, b)
        out = np.empty_like(p)
        small = np.abs(p) < 1e-3
        big = ~small
        out[big] = -_clog1p(-p[big]) / p[big]
        ps = p[small]
        # sum_{n<8} p^n/(n+1); truncation error < 1e-24
        acc = np.zeros_like(ps)
        for n in range(7, -1, -1):
            acc = acc * ps + 1.0 / (n + 1)
        out[small] = acc
        return out

    def in_domain(self, pts):
        return _disk(pts)

    def to_json(self):
        return {"type": "dirichlet"}


class BallEmbedding(Kernel):
    """Normalized complete Pick kernel 1/(1 - <b(z), b(w)>) for a map b into the ball."""

    nonvanishing = True

    def __init__(self, b: PolyMap | TableMap):
        self.b = b
        self.dim = b.in_dim

    def block(self, a, b):
        return 1.0 / (1.0 - _inner(self.b(a), self.b(b)))

    def log_block(self, a, b):
        return -_clog1p(-_inner(self.b(a), self.b(b)))

    def in_domain(self, pts):
        return np.linalg.norm(self.b(pts), axis=1) < 1.0

    def to_json(self):
        return {"type": "ball", "b": self.b.to_json()}


class WeightedBergman(Kernel):
    """Bergman kernel of the disk for the weight exp(-1/(1 - |z|^2)).

    Evaluated as sum_n (z conj(w))^n / c_n with the moments c_n taken from a
    cached :class:`~rkhs_sep.moments.MomentTable`.
    """

    dim = 1

    def __init__(self, weight: str = moments.WEIGHT_ID, n_max: int = moments.DEFAULT_N_MAX,
                 tol: float = moments.DEFAULT_TOL, radius_cap: float = DEFAULT_BERGMAN_RADIUS,
                 series_tol: float = 1e-15):
        if weight != moments.WEIGHT_ID:
            raise KernelError(f"unsupported Bergman weight {weight!r}")
        if not 0.0 < radius_cap < 1.0:
            raise KernelError("radius_cap must lie in (0, 1)")
        self.weight = weight
        self.n_max = int(n_max)
        self.tol = float(tol)
        self.radius_cap = float(radius_cap)
        self.series_tol = float(series_tol)
        self._table = None

    @property
    def table(self) -> moments.MomentTable:
        if self._table is None:
            self._table = moments.get_table(self.weight, self.n_max, self.tol)
        return self._table

    def block(self, a, b):
        p = _inner(a, b)
        vals, nterms = moments.bergman_sum(self.table, p.ravel(), self.series_tol)
        if np.any(nterms < 0):
            raise BergmanTailError(
                f"series tail bound not met with n_max={self.n_max}; "
                "regenerate the moment cache with a larger n_max")
        return vals.reshape(p.shape)

    def in_domain(self, pts):
        return _disk(pts, self.radius_cap)

    def to_json(self):
        return {"type": "bergman", "weight": self.weight, "n_max": self.n_max,
                "tol": self.tol, "radius_cap": self.radius_cap, "series_tol": self.series_tol}


class Fock(Kernel):
    """Bargmann-Fock kernel exp(alpha <z, w>) on C^dim."""

    nonvanishing = True

    def __init__(self, alpha: float = 1.0, dim: int = 1):
        if not alpha > 0:
            raise KernelError("Fock parameter alpha must be positive")
        self.alpha = float(alpha)
        self.dim = int(dim)

    def block(self, a, b):
        return np.exp(self.alpha * _inner(a, b))

    def log_block(self, a, b):
        return self.alpha * _inner(a, b)

    def to_json(self):
        return {"type": "fock", "alpha": self.alpha, "dim": self.dim}


class FiniteRank(Kernel):
    """g(z, w) = <u(z), u(w)> with u given by a table and a default vector."""

    def __init__(self, table, default, dim: int = 1):
        self.dim = int(dim)
        self.default = np.asarray([complex(x) for x in default], dtype=np.complex128)
        self.rank = self.default.size
        if self.rank == 0:
            raise KernelError("finite-rank kernel needs a non-empty default vector")
        self.table: dict[tuple[complex, ...], np.ndarray] = {}
        for point, vec in table:
            key = tuple(complex(x) for x in (point if isinstance(point, (tuple, list, np.ndarray))
                                             else (point,)))
            if len(key) != self.dim:
                raise KernelError(f"table point {key} has wrong dimension")
            v = np.asarray([complex(x) for x in vec], dtype=np.complex128)
            if v.size != self.rank:
                raise KernelError("all finite-rank vectors must have the same length")
            if not np.any(v):
                raise KernelError(f"zero vector listed for point {key}")
            self.table[key] = v

    def vectors(self, pts: np.ndarray) -> np.ndarray:
        return np.array([self.table.get(tuple(p), self.default) for p in pts],
                        dtype=np.complex128).reshape(len(pts), self.rank)

    def block(self, a, b):
        return _inner(self.vectors(a), self.vectors(b))

    def to_json(self):
        return {
            "type": "finite_rank",
            "dim": self.dim,
            "table": [{"point": _point_json(k), "vector": [_cx_json(x) for x in v]}
                      for k, v in self.table.items()],
            "default": [_cx_json(x) for x in self.default],
        }


class Constant(Kernel):
    nonvanishing = True

    def __init__(self, c: float, dim: int = 1):
        if not c > 0:
            raise KernelError("constant kernel needs c > 0")
        self.c = float(c)
        self.dim = int(dim)

    def block(self, a, b):
        return np.full((a.shape[0], b.shape[0]), self.c, dtype=np.complex128)

    def log_block(self, a, b):
        return np.full((a.shape[0], b.shape[0]), math.log(self.c), dtype=np.complex128)

    def to_json(self):
        return {"type": "constant", "c": self.c, "dim": self.dim}


class _Binary(Kernel):
    tag = ""

    def __init__(self, left: Kernel, right: Kernel):
        self.left = construct(left)
        self.right = construct(right)

    def to_json(self):
        return {"type": self.tag, "left": self.left.to_json(), "right": self.right.to_json()}


class Tensor(_Binary):
    """(k ⊗ l)((z1, z2), (w1, w2)) = k(z1, w1) l(z2, w2)."""

    tag = "tensor"

    def __init__(self, left, right):
        super().__init__(left, right)
        self.dim = self.left.dim + self.right.dim
        self.nonvanishing = self.left.nonvanishing and self.right.nonvanishing

    def _split(self, pts):
        return pts[:, : self.left.dim], pts[:, self.left.dim:]

    def block(self, a, b):
        a1, a2 = self._split(a)
        b1, b2 = self._split(b)
        return self.left.block(a1, b1) * self.right.block(a2, b2)

    def log_block(self, a, b):
        a1, a2 = self._split(a)
        b1, b2 = self._split(b)
        return self.left.log_block(a1, b1) + self.right.log_block(a2, b2)

    def in_domain(self, pts):
        p1, p2 = self._split(pts)
        return self.left.in_domain(p1) & self.right.in_domain(p2)


class _SameDomain(_Binary):
    def __init__(self, left, right):
        super().__init__(left, right)
        if self.left.dim != self.right.dim:
            raise KernelError(f"{self.tag}: dimension mismatch {self.left.dim} vs {self.right.dim}")
        self.dim = self.left.dim

    def in_domain(self, pts):
        return self.left.in_domain(pts) & self.right.in_domain(pts)


class Product(_SameDomain):
    """Pointwise product k(z, w) l(z, w)."""

    tag = "product"

    def __init__(self, left, right):
        super().__init__(left, right)
        self.nonvanishing = self.left.nonvanishing and self.right.nonvanishing

    def block(self, a, b):
        return self.left.block(a, b) * self.right.block(a, b)

    def log_block(self, a, b):
        return self.left.log_block(a, b) + self.right.log_block(a, b)


class Sum(_SameDomain):
    tag = "sum"

    def block(self, a, b):
        return self.left.block(a, b) + self.right.block(a, b)


class Power(Kernel):
    """k^t for real t >= 1 over a certified non-vanishing base."""

    def __init__(self, base: Kernel, t: float):
        self.base = construct(base)
        self.t = float(t)
        if not self.t >= 1.0:
            raise KernelError("power exponent must be >= 1")
        if not self.base.nonvanishing:
            raise KernelError("power requires a base certified non-vanishing "
                              f"({type(self.base).__name__} is not)")
        self.dim = self.base.dim
        self.nonvanishing = True

    def block(self, a, b):
        if self.t == 1.0:
            return self.base.block(a, b)
        return np.exp(self.t * self.base.log_block(a, b))

    def log_block(self, a, b):
        return self.t * self.base.log_block(a, b)

    def in_domain(self, pts):
        return self.base.in_domain(pts)

    def to_json(self):
        return {"type": "power", "base": self.base.to_json(), "t": self.t}


class Pullback(Kernel):
    """(k ∘ phi)(z, w) = k(phi(z), phi(w))."""

    def __init__(self, base: Kernel, phi: PolyMap | TableMap):
        self.base = construct(base)
        self.phi = phi
        if phi.out_dim != self.base.dim:
            raise KernelError(f"pullback map lands in C^{phi.out_dim}, kernel lives on C^{self.base.dim}")
        self.dim = phi.in_dim
        self.nonvanishing = self.base.nonvanishing

    def block(self, a, b):
        return self.base.block(self.phi(a), self.phi(b))

    def log_block(self, a, b):
        return self.base.log_block(self.phi(a), self.phi(b))

    def in_domain(self, pts):
        return self.base.in_domain(self.phi(pts))

    def to_json(self):
        return {"type": "pullback", "base": self.base.to_json(), "map": self.phi.to_json()}


# -- construction from JSON ----------------------------------------------------

_SHORTHANDS = {
    "szego": lambda: Szego(),
    "dirichlet": lambda: Dirichlet(),
    "fock": lambda: Fock(),
    "bergman": lambda: WeightedBergman(),
}


def construct(spec: Any) -> Kernel:
    """Build and validate a kernel from a JSON-style description.

    ``spec`` may already be a :class:`Kernel`, a shorthand name
    (``"szego"``, ``"dirichlet"``, ``"fock"``, ``"bergman"``), a JSON string
    or a dict with a ``"type"`` key.
    """
    if isinstance(spec, Kernel):
        return spec
    if isinstance(spec, str):
        s = spec.strip()
        if s.startswith("{"):
            spec = json.loads(s)
        elif s.lower() in _SHORTHANDS:
            return _SHORTHANDS[s.lower()]()
        else:
            raise KernelError(f"unknown kernel atom {spec!r}")
    if not isinstance(spec, dict):
        raise KernelError(f"cannot build a kernel from {type(spec).__name__}")
    kind = spec.get("type")
    try:
        if kind == "szego":
            return Szego()
        if kind == "dirichlet":
            return Dirichlet()
        if kind == "ball":
            return BallEmbedding(_map_from_json(spec["b"]))
        if kind == "bergman":
            kw = {k: spec[k] for k in ("weight", "n_max", "tol", "radius_cap", "series_tol") if k in spec}
            return WeightedBergman(**kw)
        if kind == "fock":
            return Fock(spec.get("alpha", 1.0), spec.get("dim", 1))
        if kind == "finite_rank":
            table = [(_point_from_json(e["point"]), [_cx(x) for x in e["vector"]])
                     for e in spec.get("table", [])]
            return FiniteRank(table, [_cx(x) for x in spec["default"]], spec.get("dim", 1))
        if kind == "constant":
            return Constant(spec["c"], spec.get("dim", 1))
        if kind == "tensor":
            return Tensor(construct(spec["left"]), construct(spec["right"]))
        if kind == "product":
            return Product(construct(spec["left"]), construct(spec["right"]))
        if kind == "sum":
            return Sum(construct(spec["left"]), construct(spec["right"]))
        if kind == "power":
            return Power(construct(spec["base"]), spec["t"])
        if kind == "pullback":
            return Pullback(construct(spec["base"]), _map_from_json(spec["map"]))
    except KeyError as exc:
        raise KernelError(f"{kind} kernel is missing field {exc}") from None
    raise KernelError(f"unknown kernel atom {kind!r}")


def bidisk_pair(bergman: WeightedBergman | None = None) -> tuple[Kernel, Kernel, Kernel]:
    """Kernels ``(s, l, K)`` on the bidisk.

    ``K = k(z1, w1) + k(z2, w2)`` for the weighted Bergman kernel ``k``,
    ``l = K * t`` with ``t`` the bidisk Szegő kernel, and
    ``s = 1 / (2 - z1 conj(w1) - z2 conj(w2))``.
    """
    k = bergman if bergman is not None else WeightedBergman()
    big_k = Sum(Pullback(k, PolyMap.coordinate(0, 2)), Pullback(k, PolyMap.coordinate(1, 2)))
    ell = Product(big_k, Tensor(Szego(), Szego()))
    s = Product(Constant(0.5, dim=2),
                BallEmbedding(PolyMap.linear(np.eye(2) / math.sqrt(2.0))))
    return s, ell, big_k


def points_json(points: Iterable) -> list[list[float]]:
    return [_point_json(p) for p in as_points(points)]
