"""Dense complex linear algebra for quantum states.

Matrices are plain complex numpy arrays.  Density-matrix vectorization is
column-stacking throughout: vec(A X B) = kron(B.T, A) vec(X), so a
Hamiltonian commutator enters a superoperator as
-i*(kron(I, H) - kron(H.T, I)).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import (
    AmbiguousSteadyStateError,
    DimensionError,
    SingularStructureError,
    UnphysicalStateError,
)

HERMITICITY_TOL = 1e-10
TRACE_TOL = 1e-10
PSD_TOL = 1e-9
NORM_TOL = 1e-12

# above this superoperator dimension the SVD null-space extraction is replaced
# by a residual-verified direct solve (SVD cost grows like n^3 with a large
# constant; 2304^2 already costs ~10 s)
_SVD_SIZE_LIMIT = 1500


def dagger(a: np.ndarray) -> np.ndarray:
    """Conjugate transpose."""
    return np.conj(np.asarray(a)).T


def kron(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Kronecker product; the first factor is the slow index."""
    return np.kron(np.asarray(a), np.asarray(b))


@dataclass
class KetState:
    """Pure state vector with subsystem dimensions.

    ``amplitudes`` has length prod(dims).  Treated as immutable after
    construction.
    """

    amplitudes: np.ndarray
    dims: tuple[int, ...]

    def __post_init__(self):
        self.amplitudes = np.asarray(self.amplitudes, dtype=complex).reshape(-1)
        self.dims = tuple(int(d) for d in self.dims)
        if any(d <= 0 for d in self.dims):
            raise DimensionError(f"subsystem dimensions must be positive, got {self.dims}")
        if int(np.prod(self.dims)) != self.amplitudes.size:
            raise DimensionError(
                f"prod(dims)={int(np.prod(self.dims))} != amplitude count {self.amplitudes.size}"
            )

    @property
    def dim(self) -> int:
        return self.amplitudes.size

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def check_normalized(self, tol: float = NORM_TOL) -> None:
        if abs(self.norm() ** 2 - 1.0) > tol:
            raise UnphysicalStateError(f"squared norm {self.norm()**2!r} differs from 1 beyond {tol}")

    def to_density(self) -> "DensityMatrix":
        rho = np.outer(self.amplitudes, np.conj(self.amplitudes))
        return DensityMatrix(rho, self.dims)


@dataclass
class DensityMatrix:
    """Square complex matrix with subsystem dimensions attached."""

    data: np.ndarray
    dims: tuple[int, ...]

    def __post_init__(self):
        self.data = np.asarray(self.data, dtype=complex)
        if self.data.ndim != 2 or self.data.shape[0] != self.data.shape[1]:
            raise DimensionError(f"density matrix must be square, got shape {self.data.shape}")
        self.dims = tuple(int(d) for d in self.dims)
        if any(d <= 0 for d in self.dims):
            raise DimensionError(f"subsystem dimensions must be positive, got {self.dims}")
        if int(np.prod(self.dims)) != self.data.shape[0]:
            raise DimensionError(
                f"prod(dims)={int(np.prod(self.dims))} != matrix dimension {self.data.shape[0]}"
            )

    @property
    def dim(self) -> int:
        return self.data.shape[0]

    def trace(self) -> complex:
        return complex(np.trace(self.data))

    def hermiticity_defect(self) -> float:
        return float(np.max(np.abs(self.data - dagger(self.data))))

    def min_eigenvalue(self) -> float:
        herm = 0.5 * (self.data + dagger(self.data))
        return float(np.linalg.eigvalsh(herm)[0])

    def check_physical(
        self,
        herm_tol: float = HERMITICITY_TOL,
        trace_tol: float = TRACE_TOL,
        psd_tol: float = PSD_TOL,
    ) -> None:
        """Raise UnphysicalStateError unless Hermitian, unit trace, and PSD within tolerance."""
        defect = self.hermiticity_defect()
        if defect > herm_tol:
            raise UnphysicalStateError(f"Hermiticity defect {defect:.3e} exceeds {herm_tol}")
        tr = self.trace()
        if abs(tr - 1.0) > trace_tol:
            raise UnphysicalStateError(f"trace {tr!r} differs from 1 beyond {trace_tol}")
        lo = self.min_eigenvalue()
        if lo < -psd_tol:
            raise UnphysicalStateError(f"smallest eigenvalue {lo:.3e} below -{psd_tol}")

    def is_physical(
        self,
        herm_tol: float = HERMITICITY_TOL,
        trace_tol: float = TRACE_TOL,
        psd_tol: float = PSD_TOL,
    ) -> bool:
        try:
            self.check_physical(herm_tol, trace_tol, psd_tol)
        except UnphysicalStateError:
            return False
        return True


def expectation(rho: DensityMatrix, op: np.ndarray) -> complex:
    """Tr(rho . op)."""
    op = np.asarray(op, dtype=complex)
    if op.shape != rho.data.shape:
        raise DimensionError(f"operator shape {op.shape} != state shape {rho.data.shape}")
    return complex(np.trace(rho.data @ op))


def partial_trace(rho: DensityMatrix, keep) -> DensityMatrix:
    """Trace out every subsystem not listed in ``keep``.

    ``keep`` is a set of subsystem indices; the result's subsystems appear
    in ascending index order.
    """
    keep = sorted(set(int(k) for k in keep))
    n = len(rho.dims)
    if not keep:
        raise DimensionError("keep must name at least one subsystem")
    if keep[0] < 0 or keep[-1] >= n:
        raise DimensionError(f"keep indices {keep} out of range for {n} subsystems")

    dims = rho.dims
    arr = rho.data.reshape(dims + dims)
    # trace axis pairs for the discarded subsystems, highest index first so
    # axis numbering stays valid
    traced = [k for k in range(n) if k not in keep]
    remaining = n
    for k in sorted(traced, reverse=True):
        arr = np.trace(arr, axis1=k, axis2=k + remaining)
        remaining -= 1
    kept_dims = tuple(dims[k] for k in keep)
    d = int(np.prod(kept_dims))
    return DensityMatrix(arr.reshape(d, d), kept_dims)


def vec(mat: np.ndarray) -> np.ndarray:
    """Column-stacking vectorization."""
    return np.asarray(mat).reshape(-1, order="F")


def unvec(v: np.ndarray, dim: int) -> np.ndarray:
    return np.asarray(v).reshape(dim, dim, order="F")


def _normalize_null_vector(x: np.ndarray, dim: int, dims) -> DensityMatrix:
    rho = unvec(x, dim)
    rho = 0.5 * (rho + dagger(rho))
    tr = np.trace(rho)
    if abs(tr) < 1e-12:
        raise SingularStructureError("null vector is traceless and cannot be normalized to a state")
    rho = rho / tr
    return DensityMatrix(rho, dims)


def steady_null_solve(
    L: np.ndarray,
    dims: tuple[int, ...] | None = None,
    rank_tol: float = 1e-10,
    residual_tol: float = 1e-8,
) -> DensityMatrix:
    """Steady state of a superoperator: the trace-one Hermitian null vector of L.

    L acts on column-stacked density matrices.  Small systems use a full
    SVD (rank-revealing, so a missing or multi-dimensional null space is
    detected exactly); large systems use a trace-row replacement solve whose
    result is verified against the residual contract ||L rho_vec|| <=
    residual_tol * ||L||.

    Raises
    ------
    SingularStructureError
        No null vector within tolerance.
    AmbiguousSteadyStateError
        Null space dimension larger than one.
    """
    L = np.asarray(L, dtype=complex)
    if L.ndim != 2 or L.shape[0] != L.shape[1]:
        raise DimensionError(f"superoperator must be square, got {L.shape}")
    n = L.shape[0]
    dim = int(round(np.sqrt(n)))
    if dim * dim != n:
        raise DimensionError(f"superoperator dimension {n} is not a perfect square")
    if dims is None:
        dims = (dim,)

    if n == 1:
        # 1-dim state space: L is the scalar generator; steady state is the scalar 1
        if abs(L[0, 0]) > rank_tol:
            raise SingularStructureError("1-dim generator has no null vector")
        return DensityMatrix(np.array([[1.0 + 0j]]), dims)

    norm_L = float(np.linalg.norm(L))
    if norm_L == 0.0:
        raise AmbiguousSteadyStateError(n)

    if n <= _SVD_SIZE_LIMIT:
        rho = _svd_null_state(L, dim, dims, rank_tol)
    else:
        try:
            rho = _trace_row_solve(L, dim, dims)
        except (np.linalg.LinAlgError, SingularStructureError):
            rho = None
        if rho is None or float(np.linalg.norm(L @ vec(rho.data))) > residual_tol * norm_L:
            # fast path failed its contract; run the rank-revealing path for a
            # precise diagnosis (slow at this size, but only on failure)
            rho = _svd_null_state(L, dim, dims, rank_tol)

    resid = float(np.linalg.norm(L @ vec(rho.data)))
    if resid > residual_tol * norm_L:
        raise SingularStructureError(
            f"steady-state residual {resid:.3e} exceeds {residual_tol:.1e} * ||L|| = {residual_tol * norm_L:.3e}"
        )
    return rho


def _svd_null_state(L: np.ndarray, dim: int, dims, rank_tol: float) -> DensityMatrix:
    _, s, vh = np.linalg.svd(L)
    null_count = int(np.sum(s <= rank_tol * s[0]))
    if null_count == 0:
        raise SingularStructureError(
            f"no null vector: smallest singular value {s[-1]:.3e} vs threshold {rank_tol * s[0]:.3e}"
        )
    if null_count > 1:
        raise AmbiguousSteadyStateError(null_count)
    return _normalize_null_vector(np.conj(vh[-1]), dim, dims)


def _trace_row_solve(L: np.ndarray, dim: int, dims) -> DensityMatrix:
    """Solve L rho = 0 with the first row replaced by the trace-one constraint."""
    n = L.shape[0]
    M = L.copy()
    trace_row = np.zeros(n, dtype=complex)
    trace_row[:: dim + 1] = 1.0  # diagonal positions under column stacking
    # scale the constraint row to the magnitude of L so the solve stays balanced
    scale = float(np.linalg.norm(L)) / np.sqrt(n)
    M[0, :] = trace_row * scale
    b = np.zeros(n, dtype=complex)
    b[0] = scale
    x = np.linalg.solve(M, b)
    return _normalize_null_vector(x, dim, dims)
