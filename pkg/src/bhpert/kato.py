"""Kato trace-formula terms for nondegenerate perturbation theory.

The n-th order energy correction is a trace over products of the
perturbation V and chain operators S^alpha, summed over all sets of n+1
nonnegative integer exponents adding up to n-1.  Using cyclicity of the
trace and the projector algebra of S^0 = -|m><m|, every contribution
collapses onto a matrix element

    <m| V S^{b_1} V S^{b_2} ... S^{b_{n-1}} V |m>

with integer weight, where a zero exponent marks a projector insertion that
factorizes the element into a product of irreducible brackets.  Terms are
canonicalized as an (order-irrelevant) multiset of irreducible factors, each
factor identified with its mirror image; this convention yields 10 distinct
terms at n = 5 and 627 at n = 10.  For Hermitian V the evaluated sum of the
canonicalized list equals the full trace formula (take the real part when V
is complex Hermitian).
"""
from __future__ import annotations

import os
from collections import defaultdict
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Iterator, Sequence

import numpy as np


class InvalidOrderError(ValueError):
    pass


AlphaSequence = tuple[int, ...]


def _compositions(total: int, parts: int) -> Iterator[tuple[int, ...]]:
    if parts == 1:
        yield (total,)
        return
    for first in range(total + 1):
        for rest in _compositions(total - first, parts - 1):
            yield (first,) + rest


def enumerate_alpha_sequences(n: int) -> set[AlphaSequence]:
    """All compositions of n-1 into n+1 nonnegative parts; |result| = C(2n-1, n)."""
    if n < 1:
        raise InvalidOrderError(f"order must be >= 1, got {n}")
    return set(_compositions(n - 1, n + 1))


@dataclass(frozen=True)
class KatoTerm:
    """One reduced matrix-element with combined rational weight.

    inner_alphas has length n-1; zeros mark -|m><m| projector insertions.
    """

    inner_alphas: tuple[int, ...]
    weight: Fraction

    @property
    def order(self) -> int:
        return len(self.inner_alphas) + 1

    @property
    def projector_pattern(self) -> tuple[int, ...]:
        return tuple(i for i, a in enumerate(self.inner_alphas) if a == 0)

    @property
    def factors(self) -> tuple[tuple[int, ...], ...]:
        return _split_factors(self.inner_alphas)


def _split_factors(word: Sequence[int]) -> tuple[tuple[int, ...], ...]:
    factors, cur = [], []
    for v in word:
        if v == 0:
            factors.append(tuple(cur))
            cur = []
        else:
            cur.append(v)
    factors.append(tuple(cur))
    return tuple(factors)


def _canonical_word(word: Sequence[int]) -> tuple[int, ...]:
    factors = sorted(min(f, f[::-1]) for f in _split_factors(word))
    out: list[int] = []
    for i, f in enumerate(factors):
        if i:
            out.append(0)
        out.extend(f)
    return tuple(out)


def _reduce(n: int) -> tuple[KatoTerm, ...]:
    acc: dict[tuple[int, ...], Fraction] = defaultdict(lambda: Fraction(0))
    for alpha in _compositions(n - 1, n + 1):
        a_first, a_last = alpha[0], alpha[-1]
        if (a_first == 0) != (a_last == 0):
            continue  # S^0 S^{a>0} = 0
        if a_first == 0:
            merged, sign = 0, -1  # S^0 S^0 = -S^0
        else:
            merged, sign = a_first + a_last, 1
        # cyclic word of the n exponents separating the n V's
        cyc = list(alpha[1:-1]) + [merged]
        cut = cyc.index(0)  # at least one zero: n slots summing to n-1
        sign = -sign  # tr[A (-|m><m|) B] = -<m| B A |m>
        lin = tuple(cyc[(cut + 1 + i) % n] for i in range(n - 1))
        acc[_canonical_word(lin)] += sign
    terms = tuple(
        KatoTerm(word, w)
        for word, w in sorted(acc.items())
        if w != 0
    )
    return terms


@lru_cache(maxsize=None)
def reduce_to_kato_terms(n: int, cache_dir: str | None = None) -> tuple[KatoTerm, ...]:
    """Minimal weighted term list reproducing the n-th order trace formula.

    Computed once per n; optionally persisted as a self-describing text file
    under `cache_dir`.
    """
    if n < 2:
        raise InvalidOrderError(f"order must be >= 2, got {n}")
    if cache_dir is not None:
        path = os.path.join(cache_dir, f"kato_terms_n{n}.txt")
        if os.path.exists(path):
            return read_term_table(path)
    terms = _reduce(n)
    if cache_dir is not None:
        os.makedirs(cache_dir, exist_ok=True)
        write_term_table(path, n, terms)
    return terms


def write_term_table(path: str, n: int, terms: Sequence[KatoTerm]) -> None:
    """One line per term: weight numerator/denominator, exponents, projector slots."""
    lines = [f"# kato term table", f"order {n}", f"count {len(terms)}"]
    for t in terms:
        alphas = " ".join(map(str, t.inner_alphas))
        proj = ",".join(map(str, t.projector_pattern)) or "-"
        lines.append(f"{t.weight.numerator}/{t.weight.denominator} [{alphas}] proj={proj}")
    tmp = path + ".tmp"
    with open(tmp, "w") as fh:
        fh.write("\n".join(lines) + "\n")
    os.replace(tmp, path)


def read_term_table(path: str) -> tuple[KatoTerm, ...]:
    with open(path) as fh:
        lines = [ln.strip() for ln in fh if ln.strip() and not ln.startswith("#")]
    n = int(lines[0].split()[1])
    count = int(lines[1].split()[1])
    terms = []
    for ln in lines[2:]:
        frac, rest = ln.split(" [", 1)
        alphas_str, _ = rest.split("]", 1)
        num, den = frac.split("/")
        alphas = tuple(int(x) for x in alphas_str.split()) if alphas_str else ()
        if len(alphas) != n - 1:
            raise ValueError(f"corrupt term table {path}: bad exponent count")
        terms.append(KatoTerm(alphas, Fraction(int(num), int(den))))
    if len(terms) != count:
        raise ValueError(f"corrupt term table {path}: expected {count} terms")
    return tuple(terms)


def evaluate_terms(
    terms: Sequence[KatoTerm],
    h0_diag: np.ndarray,
    v: np.ndarray,
    m: int,
) -> float:
    """Evaluate sum of weight * matrix element on an explicit matrix pair.

    h0_diag must be nondegenerate at index m.  Returns the real part, which
    for Hermitian v equals the full trace-formula value.
    """
    h0_diag = np.asarray(h0_diag, dtype=float)
    denom = h0_diag[m] - h0_diag  # E_m - E_i
    denom[m] = 1.0  # excluded from every S^{a>0} anyway
    total = 0.0
    for t in terms:
        x = v[:, m].astype(complex)
        for b in reversed(t.inner_alphas):
            if b == 0:
                y = np.zeros_like(x)
                y[m] = -x[m]
                x = y
            else:
                x = x / denom**b
                x[m] = 0.0
            x = v @ x
        total += float(t.weight) * x[m].real
    return total


def rs_energy_corrections(
    h0_diag: np.ndarray, v: np.ndarray, m: int, max_order: int
) -> list[float]:
    """Rayleigh-Schroedinger corrections E^(1)..E^(max_order), recursively.

    Independent cross-check for the reduced term lists; kept deliberately
    free of any trace-formula machinery.
    """
    h0_diag = np.asarray(h0_diag, dtype=float)
    dim = len(h0_diag)
    denom = h0_diag[m] - h0_diag
    denom[m] = 1.0  # component m is projected out below
    psi = [np.eye(dim, dtype=complex)[m]]
    energies = [h0_diag[m]]
    for n in range(1, max_order + 1):
        en = (v[m] @ psi[n - 1]).real
        energies.append(en)
        rhs = v @ psi[n - 1]
        for j in range(1, n + 1):
            rhs = rhs - energies[j] * psi[n - j]
        nxt = rhs / denom
        nxt[m] = 0.0
        psi.append(nxt)
    return [float(e) for e in energies[1:]]
