"""Splitting schemes as products of exponentials, and their error.

A scheme is an ordered list of (operator reference, coefficient) pairs; applied
to an operator set it becomes S(t) = e^{t c_1 X_1} e^{t c_2 X_2} ... with the
leftmost factor acting *last* on a state vector.  The exact flow it
approximates is e^{tG} with G = sum_k c_k X_k.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from functools import reduce
from math import isfinite
from typing import Mapping, Tuple

import numpy as np

from trisplit.matrix_core import as_complex_matrix, commutator, expm, op_norm

_CANONICAL_SUM_TOL = 1e-12


@dataclass(frozen=True)
class SplittingScheme:
    """Ordered exponential-product scheme.

    ``canonical`` asserts each factor is a scalar multiple of a named operator
    and, per distinct reference, the coefficients sum to 1 — so the scheme is
    consistent with the flow of the plain sum of its operators.
    """

    name: str
    operands: Tuple[Tuple[str, float], ...]
    canonical: bool = False

    def __post_init__(self):
        operands = tuple((str(ref), float(c)) for ref, c in self.operands)
        if not operands:
            raise ValueError("scheme needs at least one operand")
        for ref, c in operands:
            if not ref:
                raise ValueError("empty operator reference")
            if not isfinite(c):
                raise ValueError(f"non-finite coefficient for {ref!r}")
        object.__setattr__(self, "operands", operands)
        if self.canonical:
            for ref in self.references:
                total = sum(c for r, c in operands if r == ref)
                if abs(total - 1.0) > _CANONICAL_SUM_TOL:
                    raise ValueError(
                        f"canonical scheme: coefficients for {ref!r} sum to "
                        f"{total!r}, expected 1"
                    )

    @property
    def references(self) -> Tuple[str, ...]:
        """Distinct operator references in first-appearance order."""
        seen = dict.fromkeys(ref for ref, _ in self.operands)
        return tuple(seen)

    @property
    def is_palindromic(self) -> bool:
        return self.operands == self.operands[::-1]


@dataclass(frozen=True)
class OperatorSet:
    """Binds operator references to square complex matrices of one dimension."""

    bindings: Mapping[str, np.ndarray] = field(default_factory=dict)

    def __post_init__(self):
        validated = {}
        dim = None
        for ref, m in dict(self.bindings).items():
            a = as_complex_matrix(m)
            if dim is None:
                dim = a.shape[0]
            elif a.shape[0] != dim:
                raise ValueError(
                    f"operator {ref!r} has dimension {a.shape[0]}, expected {dim}"
                )
            validated[str(ref)] = a
        if not validated:
            raise ValueError("operator set is empty")
        object.__setattr__(self, "bindings", validated)

    @property
    def dim(self) -> int:
        return next(iter(self.bindings.values())).shape[0]

    def __getitem__(self, ref: str) -> np.ndarray:
        try:
            return self.bindings[ref]
        except KeyError:
            raise KeyError(f"unbound operator reference {ref!r}") from None


def pair_operator_set(a, b) -> OperatorSet:
    return OperatorSet({"A": a, "B": b})


def triple_operator_set(p1, p2, p3) -> OperatorSet:
    return OperatorSet({"P1": p1, "P2": p2, "P3": p3})


def make_lie_trotter() -> SplittingScheme:
    """First-order two-factor scheme e^{tA} e^{tB}."""
    return SplittingScheme("lie-trotter", (("A", 1.0), ("B", 1.0)), canonical=True)


def make_strang() -> SplittingScheme:
    """Symmetric second-order scheme e^{tA/2} e^{tB} e^{tA/2}."""
    return SplittingScheme(
        "strang", (("A", 0.5), ("B", 1.0), ("A", 0.5)), canonical=True
    )


def make_triple() -> SplittingScheme:
    """Plain three-factor scheme e^{tP1} e^{tP2} e^{tP3}."""
    return SplittingScheme(
        "triple", (("P1", 1.0), ("P2", 1.0), ("P3", 1.0)), canonical=True
    )


def generator_matrix(scheme: SplittingScheme, ops: OperatorSet) -> np.ndarray:
    """G = sum_k c_k X_k, the generator of the flow the scheme approximates."""
    return sum(c * ops[ref] for ref, c in scheme.operands)


def apply_splitting(scheme: SplittingScheme, ops: OperatorSet, t: float) -> np.ndarray:
    factors = [expm(ops[ref], c * t) for ref, c in scheme.operands]
    return reduce(np.matmul, factors)


def splitting_error(scheme: SplittingScheme, ops: OperatorSet, t: float) -> np.ndarray:
    """S(t) - e^{tG}: the fixed sign convention used throughout this package."""
    return apply_splitting(scheme, ops, t) - expm(generator_matrix(scheme, ops), t)


def triple_splitting_error(p1, p2, p3, t: float) -> np.ndarray:
    return splitting_error(make_triple(), triple_operator_set(p1, p2, p3), t)


def check_second_order(p1, p2, p3, tol: float) -> Tuple[bool, float]:
    """Residual of [P1,P2] + [P1,P3] + [P2,P3] = 0 and a scaled verdict.

    The gate is relative to 1 + sum of squared operator norms, the natural
    size of a commutator sum built from the inputs.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    defect = commutator(p1, p2) + commutator(p1, p3) + commutator(p2, p3)
    residual = op_norm(defect)
    scale = 1.0 + op_norm(p1) ** 2 + op_norm(p2) ** 2 + op_norm(p3) ** 2
    return residual <= tol * scale, residual


#: Closed forms of the cubic leading error coefficient of e^{tP1}e^{tP2}e^{tP3},
#: valid once the second-order condition holds.  "series" is the form the
#: Taylor-expansion route produces; "integral" the one the integral error
#: representation produces.  They differ by an element of the ideal generated
#: by the condition, so they agree on condition-satisfying operator triples.
E3_FORMS = ("series", "integral")


def leading_error_E3(p1, p2, p3, form: str = "series") -> np.ndarray:
    p1 = as_complex_matrix(p1)
    p2 = as_complex_matrix(p2)
    p3 = as_complex_matrix(p3)
    if form == "series":
        inner = commutator(p1, p2)
        return -commutator(p2, inner) / 6.0 - commutator(p3, inner) / 6.0
    if form == "integral":
        inner = commutator(p2, p3)
        return (commutator(p1, inner) + commutator(p2, inner)) / 6.0
    raise ValueError(f"unknown form {form!r}; expected one of {E3_FORMS}")


# --- scheme text files -------------------------------------------------------
#
# Line-oriented: "name <label>", "canonical <0|1>", then one "<ref> <coeff>"
# line per operand, in application order.  Coefficients accept "p/q" or any
# float literal.  '#' starts a comment.


def _format_coefficient(c: float) -> str:
    c = float(c)
    frac = Fraction(c).limit_denominator(10**6)
    if float(frac) == c:
        return str(frac)
    return repr(c)


def dump_scheme(scheme: SplittingScheme) -> str:
    lines = [f"name {scheme.name}", f"canonical {int(scheme.canonical)}"]
    for ref, c in scheme.operands:
        lines.append(f"{ref} {_format_coefficient(c)}")
    return "\n".join(lines) + "\n"


def parse_scheme(text: str) -> SplittingScheme:
    name = None
    canonical = False
    operands = []
    for raw in text.splitlines():
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, _, value = line.partition(" ")
        value = value.strip()
        if key == "name":
            name = value
        elif key == "canonical":
            if value.lower() not in {"0", "1", "true", "false"}:
                raise ValueError(f"bad canonical flag {value!r}")
            canonical = value.lower() in {"1", "true"}
        else:
            if not value:
                raise ValueError(f"operand line {raw!r} is missing a coefficient")
            operands.append((key, _parse_coefficient(value)))
    if name is None:
        raise ValueError("scheme file has no name line")
    return SplittingScheme(name, tuple(operands), canonical=canonical)


def _parse_coefficient(token: str) -> float:
    if "/" in token:
        return float(Fraction(token))
    return float(token)


def save_scheme(scheme: SplittingScheme, path) -> None:
    with open(path, "w", encoding="ascii") as fh:
        fh.write(dump_scheme(scheme))


def load_scheme(path) -> SplittingScheme:
    with open(path, "r", encoding="ascii") as fh:
        return parse_scheme(fh.read())


def scheme_by_name(name: str) -> SplittingScheme:
    """Look up one of the built-in schemes."""
    builtin = {
        "lie-trotter": make_lie_trotter,
        "strang": make_strang,
        "triple": make_triple,
    }
    try:
        return builtin[name]()
    except KeyError:
        raise ValueError(
            f"unknown scheme {name!r}; built-ins: {sorted(builtin)}"
        ) from None
