"""Eigen-decomposition, first-order eigenvalue sensitivity, and estimation."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg


@dataclass(frozen=True)
class EigenPair:
    index: int
    value: complex
    right: np.ndarray
    left: np.ndarray            # normalized so left @ right == 1


@dataclass(frozen=True)
class SensitivityRecord:
    """One linearization point: eigenvalue, droop gains, and gradient."""

    value: complex              # start eigenvalue
    gains: np.ndarray           # start droop-gain vector, length |D|
    gradient: np.ndarray        # d(lambda)/d(gain), complex, length |D|

    def estimate(self, gains) -> complex:
        return self.value + complex(self.gradient @ (np.asarray(gains, float) - self.gains))

    def conjugate(self) -> "SensitivityRecord":
        return SensitivityRecord(np.conj(self.value), self.gains, np.conj(self.gradient))


def eigen_pairs(matrix: np.ndarray, residual_tol: float = 1e-8) -> list[EigenPair]:
    """All eigenpairs with left/right eigenvectors, in canonical order.

    Canonical order: descending real part, then descending imaginary part.
    Left vectors are scaled so l^T r = 1.
    """
    a = np.asarray(matrix, float)
    values, left, right = scipy.linalg.eig(a, left=True, right=True)
    # scipy returns left vectors satisfying l^H A = lambda l^H; the transpose
    # convention here needs conj(l).
    left = left.conj()
    order = sorted(range(len(values)), key=lambda i: (-values[i].real, -values[i].imag))
    pairs = []
    scale = max(np.linalg.norm(a), 1.0)
    for out_idx, i in enumerate(order):
        l, r, lam = left[:, i], right[:, i], values[i]
        res = np.linalg.norm(a @ r - lam * r)
        if res > residual_tol * scale:
            raise ArithmeticError(
                f"eigensolver residual {res:.2e} exceeds tolerance "
                f"(matrix norm {scale:.2e}, cond {np.linalg.cond(a):.2e})")
        dot = l @ r
        if abs(dot) > 0:
            l = l / dot
        pairs.append(EigenPair(out_idx, complex(lam), r, l))
    return pairs


def spectral_abscissa(matrix: np.ndarray) -> float:
    return float(np.max(np.linalg.eigvals(np.asarray(matrix, float)).real))


def eigen_sensitivity(pair: EigenPair, d_matrix: np.ndarray,
                      degeneracy_tol: float = 1e-12) -> complex:
    """First-order derivative of the eigenvalue along d_matrix.

    Raises ``DegeneratePair`` when l^T r is numerically zero; callers fall
    back to finite differences.
    """
    dot = pair.left @ pair.right
    if abs(dot) < degeneracy_tol:
        raise DegeneratePair(f"left/right product {abs(dot):.2e} below tolerance")
    # sign fixed by the finite-difference oracle: l^T (dA) r / (l^T r)
    return complex((pair.left @ d_matrix @ pair.right) / dot)


class DegeneratePair(ArithmeticError):
    pass


def first_order_estimate(record: SensitivityRecord, gains) -> complex:
    return record.estimate(gains)


def match_eigenvalues(prev: list[EigenPair], next_: list[EigenPair]) -> list[int]:
    """Permutation p with next_[p[n]] continuing prev[n].

    Greedy nearest-distance matching over |lambda_prev - lambda_next|, with
    eigenvector overlap breaking near-ties, keeping conjugate partners
    consistent.
    """
    if len(prev) != len(next_):
        raise ValueError("eigenpair lists differ in length")
    n = len(prev)
    dist = np.abs(np.subtract.outer([p.value for p in prev], [q.value for q in next_]))
    perm = [-1] * n
    used = set()
    # visit smallest distances first
    flat = sorted(((dist[i, j], i, j) for i in range(n) for j in range(n)))
    tol = 1e-9 * (1 + dist.max())
    for d, i, j in flat:
        if perm[i] != -1 or j in used:
            continue
        # near-tie: prefer the candidate whose eigenvector overlaps more
        best_j = j
        ties = [jj for jj in range(n) if jj not in used and dist[i, jj] <= d + tol]
        if len(ties) > 1:
            best_j = max(ties, key=lambda jj: abs(np.vdot(prev[i].right, next_[jj].right)))
        if best_j in used:
            best_j = j
        perm[i] = best_j
        used.add(best_j)
    return perm


def finite_difference_sensitivity(build_matrix, base_value: complex,
                                  h: float = 2e-4) -> complex:
    """Richardson-extrapolated central difference d(lambda)/d(param).

    ``build_matrix(delta)`` must return the matrix at param +/- delta; the
    tracked eigenvalue is the one nearest ``base_value``.  Combining the
    central differences at h and h/2 cancels the leading truncation term,
    which matters when the gradient itself is tiny.
    """
    def central(hh: float) -> complex:
        lam_p = _nearest_eig(build_matrix(+hh), base_value)
        lam_m = _nearest_eig(build_matrix(-hh), base_value)
        return (lam_p - lam_m) / (2 * hh)

    return (4 * central(h / 2) - central(h)) / 3


def _nearest_eig(matrix: np.ndarray, target: complex) -> complex:
    vals = np.linalg.eigvals(np.asarray(matrix, float))
    return complex(vals[np.argmin(np.abs(vals - target))])
