"""Dense complex-matrix kernel: exponentials, commutators, norms, random
skew-Hermitian operators and the second-order-constraint solver.

Matrices are plain square ``numpy`` arrays of complex128.  The exponential is
scaling-and-squaring with degree-13 diagonal Pade (scipy's implementation);
the constraint solver manufactures a third operator P3 satisfying

    [P1,P2] + [P1,P3] + [P2,P3] = 0,

i.e. [P1+P2, P3] = -[P1,P2], as the minimum-Frobenius-norm least-squares
solution of the vectorized (Kronecker-form) system.  ad_{P1+P2} is always
singular (the identity commutes), so plain inversion is unavailable and the
least-squares route is the right tool.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

#: log-scale overflow guard for the exponential: exp(700) is still finite.
_EXPM_LOG_GUARD = 700.0

_SKEW_HERMITIAN_TOL = 1e-13


class ResidualTooLarge(RuntimeError):
    """Constraint solver produced a solution whose defect exceeds the gate."""


def as_complex_matrix(m) -> np.ndarray:
    """Validate and return a square complex matrix with finite entries."""
    a = np.asarray(m, dtype=np.complex128)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {a.shape}")
    if not np.all(np.isfinite(a.real)) or not np.all(np.isfinite(a.imag)):
        raise ValueError("matrix has non-finite entries")
    return a


def is_skew_hermitian(m, tol: float = _SKEW_HERMITIAN_TOL) -> bool:
    a = as_complex_matrix(m)
    return bool(np.max(np.abs(a + a.conj().T)) <= tol)


@dataclass(frozen=True)
class SkewHermitian:
    """Validated wrapper: matrix + conj-transpose vanishes entrywise to 1e-13.

    The exponential of the wrapped matrix is unitary, which models the
    norm-preserving semigroups the error bound assumes.
    """

    matrix: np.ndarray

    def __post_init__(self):
        a = as_complex_matrix(self.matrix)
        if not is_skew_hermitian(a):
            defect = float(np.max(np.abs(a + a.conj().T)))
            raise ValueError(f"matrix is not skew-Hermitian (defect {defect:.3e})")
        object.__setattr__(self, "matrix", a)


def expm(m, t: float = 1.0) -> np.ndarray:
    """e^{t M} by scaling-and-squaring with diagonal Pade."""
    a = as_complex_matrix(m)
    if abs(t) * np.linalg.norm(a, 1) > _EXPM_LOG_GUARD:
        raise OverflowError("|t| * norm(M) exceeds the exponential overflow guard")
    return scipy.linalg.expm(t * a)


def commutator(a, b) -> np.ndarray:
    """[A, B] = AB - BA."""
    a = as_complex_matrix(a)
    b = as_complex_matrix(b)
    if a.shape != b.shape:
        raise ValueError(f"dimension mismatch: {a.shape} vs {b.shape}")
    return a @ b - b @ a


def op_norm(m) -> float:
    """Spectral norm (largest singular value)."""
    return float(np.linalg.norm(as_complex_matrix(m), 2))


def frobenius_norm(m) -> float:
    return float(np.linalg.norm(as_complex_matrix(m)))


def random_skew_hermitian(n: int, seed: int) -> np.ndarray:
    """Deterministic random skew-Hermitian matrix with O(1) entries."""
    if n < 1:
        raise ValueError("dimension must be positive")
    rng = np.random.default_rng(seed)
    x = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    return (x - x.conj().T) / 2.0


def solve_second_order_constraint(p1, p2, residual_tol: float = 1e-10) -> np.ndarray:
    """Return P3 with [P1,P2] + [P1,P3] + [P2,P3] = 0.

    Solves [P1+P2, P3] = -[P1,P2] in vectorized form: with M = P1 + P2 the
    operator ad_M acts on vec(X) (column stacking) as I (x) M - M^T (x) I.
    The minimum-norm least-squares solution is re-verified against the direct
    defect before being returned; ResidualTooLarge signals the caller to
    resample.
    """
    p1 = as_complex_matrix(p1)
    p2 = as_complex_matrix(p2)
    if p1.shape != p2.shape:
        raise ValueError(f"dimension mismatch: {p1.shape} vs {p2.shape}")
    n = p1.shape[0]
    m = p1 + p2
    eye = np.eye(n, dtype=np.complex128)
    ad = np.kron(eye, m) - np.kron(m.T, eye)
    rhs = (-commutator(p1, p2)).reshape(-1, order="F")
    sol, *_ = np.linalg.lstsq(ad, rhs, rcond=None)
    p3 = sol.reshape((n, n), order="F")

    defect = commutator(p1, p2) + commutator(p1, p3) + commutator(p2, p3)
    gate = residual_tol * (1.0 + op_norm(commutator(p1, p2)))
    if op_norm(defect) > gate:
        raise ResidualTooLarge(
            f"constraint defect {op_norm(defect):.3e} exceeds gate {gate:.3e}"
        )
    return p3


# --- plain-text matrix serialization ----------------------------------------
#
# Format: first line the dimension n, then n lines of n "re,im" pairs
# separated by whitespace.


def dump_matrix(m) -> str:
    a = as_complex_matrix(m)
    lines = [str(a.shape[0])]
    for row in a:
        lines.append(" ".join(f"{float(z.real)!r},{float(z.imag)!r}" for z in row))
    return "\n".join(lines) + "\n"


def parse_matrix(text: str) -> np.ndarray:
    lines = [line for line in text.strip().splitlines() if line.strip()]
    if not lines:
        raise ValueError("empty matrix text")
    try:
        n = int(lines[0])
    except ValueError as exc:
        raise ValueError(f"bad dimension line {lines[0]!r}") from exc
    if len(lines) != n + 1:
        raise ValueError(f"expected {n} rows, found {len(lines) - 1}")
    out = np.zeros((n, n), dtype=np.complex128)
    for i, line in enumerate(lines[1:]):
        pairs = line.split()
        if len(pairs) != n:
            raise ValueError(f"row {i} has {len(pairs)} entries, expected {n}")
        for j, pair in enumerate(pairs):
            re_s, _, im_s = pair.partition(",")
            if not im_s:
                raise ValueError(f"entry {pair!r} is not a re,im pair")
            out[i, j] = complex(float(re_s), float(im_s))
    return out


def save_matrix(m, path) -> None:
    with open(path, "w", encoding="ascii") as fh:
        fh.write(dump_matrix(m))


def load_matrix(path) -> np.ndarray:
    with open(path, "r", encoding="ascii") as fh:
        return parse_matrix(fh.read())
