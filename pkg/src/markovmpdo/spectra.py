"""Dense Hermitian linear algebra: density matrices, Schatten norms,
partial traces, entropies, and the entropy continuity bound.

Conventions pinned here and used everywhere else:

* entropies are in nats;
* composite indices follow the Kronecker (left-varies-slowest) order, so
  for subsystems (left, right) the flat index is ``i_left * d_right + i_right``;
* subsystem indices in public APIs are 1-based, matching chain-site labels.
"""

from __future__ import annotations

import math
from typing import Iterable, Sequence

import numpy as np

from .config import EIG_FLOOR, PSD_TOL, TOL_HERM, TOL_TRACE
from .errors import NumericError, UsageError, ValidationError

__all__ = [
    "DensityMatrix",
    "schatten_norms",
    "trace_norm",
    "operator_norm",
    "partial_trace",
    "von_neumann_entropy",
    "binary_entropy",
    "cmi",
    "entropy_continuity_bound",
    "hermitian_part",
    "eigh_or_raise",
]


def _as_square_complex(matrix) -> np.ndarray:
    a = np.asarray(matrix, dtype=np.complex128)
    if a.ndim != 2 or a.shape[0] != a.shape[1] or a.shape[0] == 0:
        raise UsageError(f"expected a nonempty square matrix, got shape {a.shape}")
    return a


def hermitian_part(matrix, tol: float = TOL_HERM, what: str = "matrix") -> np.ndarray:
    """Symmetrize ``(M + M^dag)/2``; reject if the drift exceeds ``tol``."""
    a = _as_square_complex(matrix)
    drift = float(np.max(np.abs(a - a.conj().T))) if a.size else 0.0
    if drift > tol:
        raise ValidationError(f"{what} is not Hermitian: max |M - M^dag| = {drift:.3e} > {tol:.1e}")
    return (a + a.conj().T) / 2.0


def eigh_or_raise(matrix: np.ndarray):
    """Hermitian eigendecomposition, mapping LAPACK failure to NumericError."""
    try:
        return np.linalg.eigh(matrix)
    except np.linalg.LinAlgError as exc:
        raise NumericError(f"eigensolver failed to converge: {exc}") from exc


class DensityMatrix:
    """Hermitian, PSD, unit-trace operator tagged with subsystem dimensions.

    ``dims`` lists the subsystem dimensions left to right; the matrix side
    must equal their product. Validation symmetrizes sub-tolerance
    Hermiticity drift and checks the spectrum against ``psd_tol``.
    ``validate=False`` stores the raw matrix untouched (used for parsed
    witnesses whose validity is established later by the verifier).
    """

    __slots__ = ("dims", "matrix")

    def __init__(self, matrix, dims: Sequence[int] | None = None, *,
                 psd_tol: float = PSD_TOL, validate: bool = True):
        a = _as_square_complex(matrix)
        if dims is None:
            dims = (a.shape[0],)
        dims = tuple(int(d) for d in dims)
        if any(d < 1 for d in dims):
            raise UsageError(f"subsystem dimensions must be >= 1, got {dims}")
        if math.prod(dims) != a.shape[0]:
            raise UsageError(
                f"dims {dims} have product {math.prod(dims)} but matrix side is {a.shape[0]}")
        if validate:
            a = hermitian_part(a, TOL_HERM, "density matrix")
            tr = complex(np.trace(a))
            if abs(tr - 1.0) > TOL_TRACE:
                raise ValidationError(f"density matrix trace {tr} deviates from 1 beyond {TOL_TRACE:.1e}")
            lo = float(np.linalg.eigvalsh(a)[0])
            if lo < -psd_tol:
                raise ValidationError(f"density matrix has eigenvalue {lo:.3e} < -{psd_tol:.1e}")
        self.dims = dims
        self.matrix = a

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    @property
    def n_subsystems(self) -> int:
        return len(self.dims)

    def reshaped(self, dims: Sequence[int]) -> "DensityMatrix":
        """Same operator retagged with a different subsystem split."""
        return DensityMatrix(self.matrix, dims, validate=False)

    def __repr__(self):
        return f"DensityMatrix(dims={self.dims})"


def _check_one_based(indices: Iterable[int], k: int, what: str) -> tuple[int, ...]:
    idx = tuple(int(i) for i in indices)
    for i in idx:
        if not 1 <= i <= k:
            raise UsageError(f"{what} index {i} out of range 1..{k}")
    if len(set(idx)) != len(idx):
        raise UsageError(f"{what} contains repeated indices: {idx}")
    return idx


def ptrace_matrix(matrix: np.ndarray, dims: Sequence[int], keep0: Sequence[int]) -> np.ndarray:
    """Partial trace of a raw matrix over everything not in ``keep0`` (0-based)."""
    dims = tuple(dims)
    k = len(dims)
    keep = sorted(keep0)
    t = matrix.reshape(dims + dims)
    row = list(range(k))
    col = [i if i not in set(keep) else k + i for i in range(k)]
    out = [i for i in keep] + [k + i for i in keep]
    red = np.einsum(t, row + col, out)
    d_keep = math.prod(dims[i] for i in keep)
    return red.reshape(d_keep, d_keep)


def partial_trace(rho: DensityMatrix, keep: Iterable[int], *,
                  psd_tol: float = PSD_TOL, validate: bool = True) -> DensityMatrix:
    """Reduced density matrix on the 1-based subsystems in ``keep``."""
    keep_idx = _check_one_based(keep, rho.n_subsystems, "keep")
    if not keep_idx:
        raise UsageError("keep must be nonempty")
    keep0 = sorted(i - 1 for i in keep_idx)
    red = ptrace_matrix(rho.matrix, rho.dims, keep0)
    new_dims = tuple(rho.dims[i] for i in keep0)
    return DensityMatrix(red, new_dims, psd_tol=psd_tol, validate=validate)


def schatten_norms(a) -> tuple[float, float]:
    """Trace norm and operator norm of a Hermitian matrix.

    Returns ``(sum |lambda_i|, max |lambda_i|)``. Non-Hermitian input (beyond
    the Hermiticity tolerance) is a contract violation.
    """
    h = hermitian_part(a, TOL_HERM, "schatten_norms input")
    w = np.linalg.eigvalsh(h)
    absw = np.abs(w)
    return float(absw.sum()), float(absw.max())


def trace_norm(a) -> float:
    return schatten_norms(a)[0]


def operator_norm(a) -> float:
    return schatten_norms(a)[1]


def von_neumann_entropy(rho: DensityMatrix) -> float:
    """-sum lambda ln lambda in nats; eigenvalues <= 1e-12 contribute 0."""
    w = np.linalg.eigvalsh(hermitian_part(rho.matrix))
    w = w[w > EIG_FLOOR]
    if w.size == 0:
        return 0.0
    return float(-np.sum(w * np.log(w)))


def binary_entropy(p: float) -> float:
    """Binary entropy in nats, with H_b(0) = H_b(1) = 0."""
    p = float(p)
    if not 0.0 <= p <= 1.0:
        raise UsageError(f"binary_entropy argument must lie in [0, 1], got {p}")
    out = 0.0
    if p > 0.0:
        out -= p * math.log(p)
    if p < 1.0:
        out -= (1.0 - p) * math.log(1.0 - p)
    return out


def cmi(rho: DensityMatrix, split: tuple[Iterable[int], Iterable[int], Iterable[int]]) -> float:
    """Conditional mutual information I(A:C|B) = S(AB)+S(BC)-S(B)-S(ABC).

    ``split`` gives three disjoint 1-based subsystem groups; B must be
    nonempty, A or C may be empty. Subsystems outside A+B+C are traced out.
    """
    a_set, b_set, c_set = (tuple(s) for s in split)
    k = rho.n_subsystems
    _check_one_based(a_set + b_set + c_set, k, "split")
    if set(a_set) & set(b_set) or set(b_set) & set(c_set) or set(a_set) & set(c_set):
        raise UsageError("split groups overlap")
    if not b_set:
        raise UsageError("conditioning set B must be nonempty")

    def ent(keep):
        return von_neumann_entropy(partial_trace(rho, keep, psd_tol=1e-8, validate=False))

    s_ab = ent(a_set + b_set)
    s_bc = ent(b_set + c_set)
    s_b = ent(b_set)
    s_abc = ent(a_set + b_set + c_set)
    return s_ab + s_bc - s_b - s_abc


def entropy_continuity_bound(delta: float, total_dim: int) -> float:
    """Fannes-type bound 2*delta*ln(total_dim) - 2*delta*ln(2*delta)."""
    delta = float(delta)
    if not 0.0 < delta <= 0.5:
        raise UsageError(f"delta must lie in (0, 1/2], got {delta}")
    if total_dim < 1:
        raise UsageError(f"total_dim must be >= 1, got {total_dim}")
    return 2.0 * delta * math.log(total_dim) - 2.0 * delta * math.log(2.0 * delta)
