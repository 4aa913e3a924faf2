"""Coherence and identifiability analytics for signature matrices.

Everything here operates on plain complex arrays; objects carrying their
matrix in an ``entries`` attribute (e.g. SignatureMatrix) are accepted too.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import combinations

import numpy as np

DETERMINISTIC_FAMILIES = ("cubic", "pr", "sidelnikov", "trace")


def as_matrix(S) -> np.ndarray:
    A = getattr(S, "entries", S)
    return np.asarray(A)


def coherence(S, block_size: int = 2048, with_pair: bool = False):
    """Maximum normalized inner product over distinct column pairs.

    Evaluated through the normalized Gram matrix in column blocks, so memory
    stays bounded at large N. Raises on zero columns.
    """
    A = as_matrix(S)
    if A.ndim != 2 or A.shape[1] < 2:
        raise ValueError("need a matrix with at least 2 columns")
    norms = np.linalg.norm(A, axis=0)
    if np.any(norms < 1e-300):
        raise ValueError("matrix has a zero column")
    An = A / norms
    N = An.shape[1]
    best = -1.0
    pair = (0, 1)
    for i0 in range(0, N, block_size):
        Bi = An[:, i0 : i0 + block_size]
        for j0 in range(i0, N, block_size):
            Bj = An[:, j0 : j0 + block_size]
            G = np.abs(Bi.conj().T @ Bj)
            if i0 == j0:
                np.fill_diagonal(G, -1.0)
            k = int(np.argmax(G))
            r, c = divmod(k, G.shape[1])
            if G[r, c] > best:
                best = float(G[r, c])
                pair = (i0 + r, j0 + c)
    best = min(best, 1.0)
    if with_pair:
        return best, pair
    return best


def welch_bound(L: int, N: int) -> float:
    """Lower bound sqrt((N - L) / (L (N - 1))) on coherence; 0 when vacuous (N <= L)."""
    if L < 1 or N < 2:
        raise ValueError("need L >= 1 and N >= 2")
    if N <= L:
        return 0.0
    return math.sqrt((N - L) / (L * (N - 1)))


def khatri_rao_lift(S) -> np.ndarray:
    """Columnwise lift s_i -> conj(s_i) kron s_i, shape (L^2, N).

    Unit-norm columns lift to unit-norm columns, and the lifted coherence is
    the square of the original one.
    """
    A = as_matrix(S)
    L, N = A.shape
    return (A.conj()[:, None, :] * A[None, :, :]).reshape(L * L, N)


def small_regime(family: str, L: int, H: int | None, n_devices: int, q_per_device: int) -> bool:
    """Whether N = N_d Q stays within the first lambda_1 = 0 mask blocks."""
    N = n_devices * q_per_device
    if family in ("cubic", "trace"):
        return N <= L * L
    if family in ("pr", "sidelnikov"):
        if H is None:
            raise ValueError(f"family {family!r} needs H")
        return N <= (H - 1) * L
    raise ValueError(f"unknown family {family!r}")


def family_coherence_bound(family: str, L: int, H: int | None, n_devices: int, q_per_device: int) -> float:
    """Published two-regime coherence upper bound for a deterministic family."""
    small = small_regime(family, L, H, n_devices, q_per_device)
    if family == "cubic":
        return 1.0 / math.sqrt(L) if small else 2.0 / math.sqrt(L)
    if family == "pr":
        return (math.sqrt(L) + 1) / L if small else (2 * math.sqrt(L) + 2) / L
    if family == "sidelnikov":
        return (math.sqrt(L + 1) + 3) / L if small else (2 * math.sqrt(L + 1) + 4) / L
    if family == "trace":
        return (math.sqrt(L + 1) + 2) / L if small else (2 * math.sqrt(L + 1) + 2) / L
    raise ValueError(f"unknown family {family!r}")


@dataclass(frozen=True)
class MlCondition:
    """Outcome of the coherence test for reliable activity estimation."""

    satisfied: bool
    threshold: float
    success_probability: float

    def __bool__(self) -> bool:
        return self.satisfied


def ml_coherence_condition(mu: float, K: int, delta: int) -> MlCondition:
    """True iff mu < 1/sqrt(K + delta - 1), strict inequality.

    When satisfied, estimation recovers any K-active configuration with
    probability exceeding 1 - 2**-delta in the large-antenna limit.
    """
    if K < 1 or delta < 1:
        raise ValueError("need K >= 1 and delta >= 1")
    threshold = 1.0 / math.sqrt(K + delta - 1)
    return MlCondition(mu < threshold, threshold, 1.0 - 2.0 ** (-delta))


def negative_fraction(x: np.ndarray, nonzero_tol: float = 1e-8) -> float:
    """Fraction of negative entries among entries with |x_i| > tol * max|x|."""
    ax = np.abs(x)
    mask = ax > nonzero_tol * ax.max()
    return float(np.count_nonzero(x[mask] < 0) / np.count_nonzero(mask))


@dataclass(frozen=True)
class SignRatioReport:
    ratio: float  # nan when the null space is empty
    null_dim: int
    samples: int

    @property
    def empty(self) -> bool:
        return self.null_dim == 0


def null_space_sign_ratio(
    S,
    num_samples: int = 1000,
    nonzero_tol: float = 1e-8,
    rng: np.random.Generator | None = None,
    sv_rel_tol: float = 1e-10,
) -> SignRatioReport:
    """Average sign balance of random real null-space vectors of the lifted matrix.

    Builds an orthonormal basis of {x in R^N : lift(S) x = 0} from the stacked
    real/imaginary parts, draws random unit combinations, and averages the
    fraction of negative entries among the nonzero ones. A ratio near 1/2
    supports the equiprobable-sign assumption behind the spark argument.
    """
    if rng is None:
        rng = np.random.default_rng()
    Sh = khatri_rao_lift(S)
    R = np.vstack([Sh.real, Sh.imag])
    rows, N = R.shape
    _, sv, vt = np.linalg.svd(R, full_matrices=rows < N)
    rank = int(np.count_nonzero(sv > sv_rel_tol * sv[0])) if sv.size else 0
    basis = vt[rank:].T  # (N, d), orthonormal columns
    d = basis.shape[1]
    if d == 0:
        return SignRatioReport(float("nan"), 0, 0)
    G = rng.standard_normal((d, num_samples))
    X = basis @ G
    ratios = [negative_fraction(X[:, j], nonzero_tol) for j in range(num_samples)]
    return SignRatioReport(float(np.mean(ratios)), d, num_samples)


@dataclass(frozen=True)
class SparkResult:
    value: int
    exact: bool  # False means spark > value - 1 was certified, not attained


def spark_bruteforce(A, k_max: int, sv_rel_tol: float = 1e-9) -> SparkResult:
    """Exhaustive spark search over column subsets of size <= k_max.

    Desk scale only: N <= 24 and k_max <= 8. Returns the exact spark when a
    dependent subset exists within the cap, otherwise the certified lower
    bound k_max + 1.
    """
    M = as_matrix(A)
    L, N = M.shape
    if N > 24:
        raise ValueError(f"N = {N} exceeds the brute-force cap of 24 columns")
    if not 1 <= k_max <= 8:
        raise ValueError("k_max must be in [1, 8]")
    norms = np.linalg.norm(M, axis=0)
    if np.any(norms < sv_rel_tol * norms.max()):
        return SparkResult(1, True)
    for k in range(2, min(k_max, N) + 1):
        if k > L:
            return SparkResult(k, True)  # more columns than rows
        for cols in combinations(range(N), k):
            sv = np.linalg.svd(M[:, cols], compute_uv=False)
            if sv[-1] < sv_rel_tol * sv[0]:
                return SparkResult(k, True)
    return SparkResult(k_max + 1, False)


@dataclass(frozen=True)
class CoherenceReport:
    """Coherence of one signature matrix next to its applicable bounds."""

    family: str
    L: int
    H: int | None
    n_devices: int
    q_per_device: int
    mu: float
    welch: float
    bound: float | None
    regime: str | None
    argmax_pair: tuple[int, int]

    CSV_HEADER = "family,L,H,N_d,Q,mu,welch,bound,regime"

    def csv_row(self) -> str:
        h = "" if self.H is None else str(self.H)
        b = "" if self.bound is None else repr(self.bound)
        r = "" if self.regime is None else self.regime
        return (
            f"{self.family},{self.L},{h},{self.n_devices},{self.q_per_device},"
            f"{self.mu!r},{self.welch!r},{b},{r}"
        )


def coherence_report(S, family: str, H: int | None, n_devices: int, q_per_device: int,
                     block_size: int = 2048) -> CoherenceReport:
    A = as_matrix(S)
    L, N = A.shape
    if N != n_devices * q_per_device:
        raise ValueError("matrix width disagrees with n_devices * q_per_device")
    mu, pair = coherence(A, block_size=block_size, with_pair=True)
    welch = welch_bound(L, N)
    if family in DETERMINISTIC_FAMILIES:
        bound = family_coherence_bound(family, L, H, n_devices, q_per_device)
        regime = "small" if small_regime(family, L, H, n_devices, q_per_device) else "general"
    else:
        bound, regime = None, None
    return CoherenceReport(family, L, H, n_devices, q_per_device, mu, welch, bound, regime, pair)


def bound_failures(report: CoherenceReport, tol: float = 1e-9) -> list[str]:
    """Bound violations in a report; empty list means all checks passed."""
    out = []
    if report.bound is not None and report.mu > report.bound + tol:
        out.append(f"mu = {report.mu} exceeds the {report.regime}-regime bound {report.bound}")
    if report.welch > report.mu + tol:
        out.append(f"mu = {report.mu} is below the Welch bound {report.welch}")
    return out
