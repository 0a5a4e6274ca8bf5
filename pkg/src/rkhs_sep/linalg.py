"""Small dense Hermitian-matrix utilities shared by the analysis modules."""
from __future__ import annotations

from typing import NamedTuple

import numpy as np

#: relative tolerance used for PSD decisions (scaled by trace / size)
TOL_PSD = 1e-9
#: tolerance for the Hermitian precondition
TOL_HERMITIAN = 1e-10


class PSDResult(NamedTuple):
    is_psd: bool
    min_eig: float


def hermitian_defect(a: np.ndarray) -> float:
    a = np.asarray(a)
    if a.size == 0:
        return 0.0
    return float(np.max(np.abs(a - a.conj().T)))


def psd_scale(a: np.ndarray) -> float:
    n = a.shape[0]
    if n == 0:
        return 0.0
    scale = abs(np.trace(a).real) / n
    if scale == 0.0:
        scale = float(np.max(np.abs(a)))
    return scale


def psd_check(a, tol: float = TOL_PSD) -> PSDResult:
    """Decide positive semi-definiteness of a Hermitian matrix.

    The matrix is accepted when its smallest eigenvalue is at least
    ``-tol * trace / size``.  Raises ``ValueError`` for non-square or
    non-Hermitian input (defect above ``1e-10`` relative to the largest entry).
    """
    a = np.asarray(a, dtype=np.complex128)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {a.shape}")
    if a.shape[0] == 0:
        return PSDResult(True, 0.0)
    if hermitian_defect(a) > TOL_HERMITIAN * max(1.0, float(np.max(np.abs(a)))):
        raise ValueError("matrix is not Hermitian")
    herm = 0.5 * (a + a.conj().T)
    min_eig = float(np.linalg.eigvalsh(herm)[0])
    return PSDResult(bool(min_eig >= -tol * psd_scale(herm)), min_eig)


def schur_product(a, b) -> np.ndarray:
    """Entrywise (Hadamard) product."""
    a = np.asarray(a)
    b = np.asarray(b)
    if a.shape != b.shape:
        raise ValueError(f"shape mismatch {a.shape} vs {b.shape}")
    return a * b
