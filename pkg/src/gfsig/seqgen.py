"""Masking-sequence families and signature matrix assembly.

Four deterministic unimodular mask families are generated from exact integer
phase numerators (cubic and trace phases live mod p, power-residue and
Sidelnikov phases mod H), then applied entrywise to the columns of the
L-point DFT matrix. Concatenating the B masked blocks yields N_s = B * L
signature sequences; a device gets a contiguous group of Q columns.

Random benchmark families (complex Gaussian, MUSA 9-point, QPSK) are drawn
with a best-of-trials coherence selection.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .analysis import coherence
from .galois import ExtField, PrimeField, build_ext_field, is_prime

RANDOM_FAMILIES = ("gaussian", "musa", "qpsk")


@dataclass(frozen=True)
class MaskingSet:
    """A family of B unimodular masks of length L plus its integer seed."""

    family: str
    L: int
    B: int
    masks: np.ndarray  # (B, L) complex, |entry| = 1
    phase_num: np.ndarray  # (B, L) integer phase numerators mod phase_den
    phase_den: int
    seed: np.ndarray | None  # published-form integer seed, when the family has one
    params: dict = field(default_factory=dict)


@dataclass(frozen=True)
class SignatureMatrix:
    """L x N matrix of unit-norm signature columns with contiguous device groups."""

    entries: np.ndarray  # (L, N) complex
    n_devices: int
    q_per_device: int
    family: str
    params: dict = field(default_factory=dict)
    meta: dict = field(default_factory=dict)

    @property
    def L(self) -> int:
        return self.entries.shape[0]

    @property
    def N(self) -> int:
        return self.entries.shape[1]

    def device_columns(self, n: int) -> slice:
        """Column slice of device n (0-based)."""
        q = self.q_per_device
        return slice(n * q, (n + 1) * q)


def _phases_to_masks(num: np.ndarray, den: int) -> np.ndarray:
    return np.exp(2j * np.pi * (num % den) / den)


def dft_matrix(L: int) -> np.ndarray:
    """L-point DFT matrix F[k, l] = exp(-2j pi k l / L) / sqrt(L)."""
    kl = np.outer(np.arange(L), np.arange(L)) % L
    return np.exp(-2j * np.pi * kl / L) / np.sqrt(L)


def gen_cubic_masks(L: int) -> MaskingSet:
    """Cubic-phase masks exp(2j pi (l1 k^3 + l2 k^2) / L), B = L^2 of them."""
    if not is_prime(L) or L == 2:
        raise ValueError(f"L must be an odd prime, got {L}")
    b = np.arange(1, L * L + 1, dtype=np.int64)
    lam1 = (b - 1) // L
    lam2 = (b - 1) % L + 1
    k = np.arange(L, dtype=np.int64)
    k3 = (k**3) % L
    k2 = (k**2) % L
    num = (lam1[:, None] * k3[None, :] + lam2[:, None] * k2[None, :]) % L
    return MaskingSet("cubic", L, L * L, _phases_to_masks(num, L), num, L, None, {"L": L})


def pr_seed(pf: PrimeField, H: int) -> np.ndarray:
    """log_alpha(k) mod H for k = 0..L-1, with log(0) = 0."""
    return np.asarray(pf.log_table % H, dtype=np.int64)


def gen_pr_masks(L: int, H: int | None = None, alpha: int | None = None) -> MaskingSet:
    """Power-residue masks exp(2j pi l2 log(k + l1) / H), B = (H-1) L of them."""
    if not is_prime(L) or L == 2:
        raise ValueError(f"L must be an odd prime, got {L}")
    if H is None:
        H = L - 1
    if H <= 2 or (L - 1) % H != 0:
        raise ValueError(f"H must exceed 2 and divide L - 1 = {L - 1}, got {H}")
    pf = PrimeField(L, alpha=alpha)
    lg = pf.log_table  # log(0) = 0 convention
    B = (H - 1) * L
    b = np.arange(1, B + 1, dtype=np.int64)
    lam1 = (b - 1) // (H - 1)
    lam2 = (b - 1) % (H - 1) + 1
    k = np.arange(L, dtype=np.int64)
    idx = (k[None, :] + lam1[:, None]) % L
    num = (lam2[:, None] * lg[idx]) % H
    params = {"L": L, "H": H, "alpha": pf.alpha}
    return MaskingSet("pr", L, B, _phases_to_masks(num, H), num, H, pr_seed(pf, H), params)


def sidelnikov_seed(fld: ExtField, H: int) -> np.ndarray:
    """log_alpha(1 + alpha^k) mod H for k = 0..L-1, with log(0) = 0."""
    p = fld.p
    codes = fld.exp_table
    c0 = codes % p
    one_plus = codes - c0 + (c0 + 1) % p  # add 1 in the constant-term digit
    return np.asarray(fld.log_table[one_plus] % H, dtype=np.int64)


def gen_sidelnikov_masks(p: int, m: int, H: int | None = None, poly=None) -> MaskingSet:
    """Sidelnikov masks exp(2j pi l2 log(1 + alpha^(k + l1)) / H), B = (H-1) L."""
    fld = build_ext_field(p, m, poly=poly)
    L = fld.q - 1
    if H is None:
        H = L
    if H < 2 or L % H != 0:
        raise ValueError(f"H must be >= 2 and divide L = {L}, got {H}")
    base = sidelnikov_seed(fld, H)
    B = (H - 1) * L
    b = np.arange(1, B + 1, dtype=np.int64)
    lam1 = (b - 1) // (H - 1)
    lam2 = (b - 1) % (H - 1) + 1
    k = np.arange(L, dtype=np.int64)
    idx = (k[None, :] + lam1[:, None]) % L
    num = (lam2[:, None] * base[idx]) % H
    params = {"p": p, "m": m, "L": L, "H": H, "poly": fld.poly}
    return MaskingSet("sidelnikov", L, B, _phases_to_masks(num, H), num, H, base, params)


def trace_seed(fld: ExtField) -> np.ndarray:
    """Tr(alpha^k) for k = 0..L-1 (a p-ary LFSR sequence of period L)."""
    return np.asarray(fld.trace_table[fld.exp_table], dtype=np.int64)


def gen_trace_masks(p: int, m: int, poly=None) -> MaskingSet:
    """Trace masks exp(2j pi Tr(a^(k+l2) + theta a^(2(k+l2))) / p), B = L (L+1).

    theta = 0 for the first L masks and alpha^(l1 - 1) afterwards, so every
    mask phase is a sum of two shifted copies of the single seed sequence.
    """
    if p == 2:
        raise ValueError("trace masks require odd characteristic")
    fld = build_ext_field(p, m, poly=poly)
    L = fld.q - 1
    t1 = trace_seed(fld)
    B = L * (L + 1)
    b = np.arange(1, B + 1, dtype=np.int64)
    lam1 = (b - 1) // L  # 0..L
    lam2 = (b - 1) % L
    k = np.arange(L, dtype=np.int64)
    j = (k[None, :] + lam2[:, None]) % L
    num = t1[j].copy()
    shifted = lam1 > 0
    second = t1[((lam1[:, None] - 1) + 2 * j) % L]
    num[shifted] = (num[shifted] + second[shifted]) % p
    params = {"p": p, "m": m, "L": L, "poly": fld.poly}
    return MaskingSet("trace", L, B, _phases_to_masks(num, p), num, p, t1, params)


def mask_block(masks: MaskingSet, b: int) -> np.ndarray:
    """The L x L signature block diag(v_b) F_L for mask index b (0-based)."""
    return masks.masks[b][:, None] * dft_matrix(masks.L)


def build_signature_matrix(masks: MaskingSet, n_devices: int, q_per_device: int) -> SignatureMatrix:
    """First N_d Q columns of the concatenated masked-DFT blocks, in block order."""
    if n_devices < 1 or q_per_device < 1:
        raise ValueError("need n_devices >= 1 and q_per_device >= 1")
    L, B = masks.L, masks.B
    N = n_devices * q_per_device
    capacity = B * L
    if N > capacity:
        raise ValueError(
            f"capacity exceeded: N_d * Q = {N} > N_s = {capacity} "
            f"(at most {capacity // q_per_device} devices)"
        )
    n_blocks = -(-N // L)
    F = dft_matrix(L)
    blocks = masks.masks[:n_blocks]  # (nb, L)
    S = (blocks.T[:, :, None] * F[:, None, :]).reshape(L, n_blocks * L)[:, :N]
    return SignatureMatrix(S, n_devices, q_per_device, masks.family, dict(masks.params))


def _draw_candidate(kind: str, L: int, N: int, rng: np.random.Generator) -> np.ndarray:
    if kind == "gaussian":
        return (rng.standard_normal((L, N)) + 1j * rng.standard_normal((L, N))) / np.sqrt(2)
    if kind == "qpsk":
        return (rng.choice([-1.0, 1.0], (L, N)) + 1j * rng.choice([-1.0, 1.0], (L, N))) / np.sqrt(2)
    if kind == "musa":
        points = np.array(
            [0, 1, -1, 1j, -1j, 1 + 1j, 1 - 1j, -1 + 1j, -1 - 1j], dtype=complex
        ) * (np.sqrt(3) / 2)
        A = rng.choice(points, (L, N))
        # an all-zero column cannot be normalized; redraw such columns
        while True:
            dead = np.flatnonzero(np.all(A == 0, axis=0))
            if dead.size == 0:
                break
            A[:, dead] = rng.choice(points, (L, dead.size))
        return A
    raise ValueError(f"unknown random family {kind!r}")


def gen_random_family(
    kind: str,
    L: int,
    N: int,
    trials: int = 10,
    rng: np.random.Generator | None = None,
    q_per_device: int = 1,
) -> SignatureMatrix:
    """Best-of-`trials` random L x N signature matrix with unit-norm columns.

    Candidates are drawn i.i.d. per entry (complex Gaussian, the 9-point MUSA
    constellation, or QPSK), column-normalized, and the draw with the lowest
    coherence is kept.
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    if N % q_per_device != 0:
        raise ValueError("q_per_device must divide N")
    if rng is None:
        rng = np.random.default_rng()
    best = None
    best_mu = np.inf
    for _ in range(trials):
        A = _draw_candidate(kind, L, N, rng)
        A = A / np.linalg.norm(A, axis=0)
        mu = coherence(A)
        if mu < best_mu:
            best, best_mu = A, mu
    return SignatureMatrix(
        best,
        N // q_per_device,
        q_per_device,
        kind,
        {"L": L},
        {"trials": trials, "coherence": best_mu},
    )


def signature_to_csv(sig: SignatureMatrix, path) -> None:
    """Write interleaved re/im values, row-major, with a metadata header line."""
    A = sig.entries
    L, N = A.shape
    with open(path, "w") as fh:
        fh.write(
            f"# family={sig.family} L={L} N={N} N_d={sig.n_devices} "
            f"Q={sig.q_per_device} params={sig.params!r}\n"
        )
        for k in range(L):
            row = np.empty(2 * N)
            row[0::2] = A[k].real
            row[1::2] = A[k].imag
            fh.write(",".join(repr(float(v)) for v in row) + "\n")


def signature_from_csv(path) -> np.ndarray:
    """Read back the matrix written by signature_to_csv (values only)."""
    rows = []
    with open(path) as fh:
        for line in fh:
            if line.startswith("#"):
                continue
            vals = np.array([float(v) for v in line.split(",")])
            rows.append(vals[0::2] + 1j * vals[1::2])
    return np.asarray(rows)
