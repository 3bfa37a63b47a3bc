"""Process-chain enumeration and evaluation of hopping-expansion coefficients.

A diagram is the unordered content of a process chain: k creation events,
k annihilation events and nu hopping events whose touched sites form a
connected cluster and which jointly restore the reference Mott state.  The
per-site coefficient of |eta|^(2k) (J/U)^nu in the ground-energy density is
the sum over all such diagrams (one per translation class) and all Kato
terms of order n = 2k + nu of the ordering sum evaluated by the DP kernel.

Twist handling: for a fixed diagram every ordering carries the same product
of bond phases, exp(i (theta/l) e.D) with D the net particle displacement.
Diagrams are therefore evaluated once at zero twist, grouped into
point-group classes, and each class records the multiset of displacement
components along a reference axis; any twist is applied as a phase sum at
assembly time.
"""
from __future__ import annotations

import itertools
import math
import os
import time
from collections import Counter, defaultdict
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Iterator, Literal, Sequence

import numpy as np

from . import cache as _cache
from ._kernel import eval_diagram_terms
from .kato import InvalidOrderError, KatoTerm, reduce_to_kato_terms
from .lattice import (
    NO_TWIST,
    SiteOffset,
    TwistSpec,
    apply_op,
    neighbors,
    point_group,
)

DEFAULT_MAX_ORDER = 12


class CapacityError(RuntimeError):
    """Requested order exceeds the configured maximum."""


@dataclass(frozen=True)
class MottState:
    """Reference Mott insulator: filling g, scaled chemical potential mu/U."""

    g: int = 1
    mu_over_U: float = 0.5

    def __post_init__(self):
        if self.g < 1:
            raise ValueError(f"filling factor must be >= 1, got {self.g}")
        if not (self.g - 1 < self.mu_over_U < self.g):
            raise ValueError(
                f"mu/U = {self.mu_over_U} leaves the g = {self.g} Mott state degenerate"
            )

    def site_energy(self, n: int) -> float:
        return 0.5 * n * (n - 1) - self.mu_over_U * n


@dataclass(frozen=True)
class Event:
    kind: Literal["create", "annihilate", "hop"]
    site: SiteOffset
    target: SiteOffset | None = None


@dataclass(frozen=True)
class Diagram:
    """Symmetry-reduced diagram class with embedding bookkeeping.

    multiplicity counts the distinct per-site lattice embeddings in the
    class; axis_displacements lists (displacement component along axis 1,
    count) pairs over those embeddings, used for twist phases.
    """

    events: tuple[Event, ...]
    k: int
    nu: int
    multiplicity: int
    axis_displacements: tuple[tuple[int, int], ...] = ()

    @property
    def order(self) -> int:
        return 2 * self.k + self.nu


# -- internal embedded representation --------------------------------------
# emb = (creations, annihilations, hops) with
#   creations / annihilations: tuple of (site, count), sorted
#   hops: tuple of ((frm, to), count), sorted


def _compositions(total: int, parts: int) -> Iterator[tuple[int, ...]]:
    if parts == 1:
        yield (total,)
        return
    for first in range(total + 1):
        for rest in _compositions(total - first, parts - 1):
            yield (first,) + rest


@lru_cache(maxsize=8)
def _animals(d: int, max_sites: int) -> tuple[frozenset, ...]:
    """Translation-canonical connected site sets of size 1..max_sites."""
    origin = (0,) * d
    start = frozenset([origin])
    seen = {start}
    frontier = [start]
    while frontier:
        new = []
        for animal in frontier:
            if len(animal) == max_sites:
                continue
            for s in animal:
                for nb in neighbors(s, d):
                    if nb in animal:
                        continue
                    grown = frozenset(animal | {nb})
                    anchor = min(grown)
                    norm = frozenset(
                        tuple(x - a for x, a in zip(site, anchor)) for site in grown
                    )
                    if norm not in seen:
                        seen.add(norm)
                        new.append(norm)
        frontier = new
    return tuple(sorted(seen, key=lambda a: (len(a), sorted(a))))


def _connected_spanning(sites: tuple, bonds: list, size: int) -> Iterator[tuple]:
    """Bond subsets of given size that connect all sites."""
    nsite = len(sites)
    idx = {s: i for i, s in enumerate(sites)}
    for combo in itertools.combinations(bonds, size):
        parent = list(range(nsite))

        def find(x):
            while parent[x] != x:
                parent[x] = parent[parent[x]]
                x = parent[x]
            return x

        comps = nsite
        for (u, v) in combo:
            ru, rv = find(idx[u]), find(idx[v])
            if ru != rv:
                parent[ru] = rv
                comps -= 1
        if comps == 1:
            yield combo


def enumerate_embedded_diagrams(k: int, nu: int, d: int) -> Iterator[tuple]:
    """Every translation class of connected, number-restoring event multisets.

    Unreduced enumeration; each embedded diagram is yielded exactly once.
    """
    if k < 0 or nu < 0 or d < 1 or 2 * k + nu < 1:
        raise InvalidOrderError(f"invalid diagram order k={k}, nu={nu}, d={d}")
    origin = (0,) * d
    if nu == 0:
        yield (((origin, k),), ((origin, k),), ())
        return
    for animal in _animals(d, nu + 1):
        nsite = len(animal)
        if nsite < 2:
            continue
        if nsite - 1 > nu:
            continue
        sites = tuple(sorted(animal))
        bonds = [
            (u, v)
            for u, v in itertools.combinations(sites, 2)
            if sum(abs(x - y) for x, y in zip(u, v)) == 1
        ]
        for ssize in range(nsite - 1, min(len(bonds), nu) + 1):
            for support in _connected_spanning(sites, bonds, ssize):
                for extra in _compositions(nu - ssize, ssize):
                    totals = [1 + e for e in extra]
                    # split each bond total into forward/backward hop counts
                    for fwd in itertools.product(
                        *[range(t + 1) for t in totals]
                    ):
                        div = defaultdict(int)
                        for (u, v), t, f in zip(support, totals, fwd):
                            div[v] += f - (t - f)
                            div[u] -= f - (t - f)
                        need = {s: -div[s] for s in sites}
                        pos = sum(x for x in need.values() if x > 0)
                        neg = -sum(x for x in need.values() if x < 0)
                        if pos > k or neg > k:
                            continue
                        r = k - pos
                        hop_items = []
                        for (u, v), t, f in zip(support, totals, fwd):
                            if f:
                                hop_items.append(((u, v), f))
                            if t - f:
                                hop_items.append(((v, u), t - f))
                        hop_items = tuple(sorted(hop_items))
                        for e in _compositions(r, nsite):
                            cre, ann = [], []
                            for s, ei in zip(sites, e):
                                c = max(need[s], 0) + ei
                                a = max(-need[s], 0) + ei
                                if c:
                                    cre.append((s, c))
                                if a:
                                    ann.append((s, a))
                            yield (tuple(cre), tuple(ann), hop_items)


def _emb_transform(emb, op):
    """Apply a point-group operation and re-anchor at the origin."""
    cre, ann, hops = emb
    pts = set()
    for s, _ in cre:
        pts.add(apply_op(op, s))
    for s, _ in ann:
        pts.add(apply_op(op, s))
    for (u, v), _ in hops:
        pts.add(apply_op(op, u))
        pts.add(apply_op(op, v))
    anchor = min(pts)

    def mv(s):
        t = apply_op(op, s)
        return tuple(x - a for x, a in zip(t, anchor))

    return (
        tuple(sorted((mv(s), c) for s, c in cre)),
        tuple(sorted((mv(s), c) for s, c in ann)),
        tuple(sorted(((mv(u), mv(v)), c) for (u, v), c in hops)),
    )


def _emb_axis_displacement(emb, axis: int = 0) -> int:
    """Net particle displacement along an axis, summed over hop events."""
    _, _, hops = emb
    return sum(c * (v[axis] - u[axis]) for (u, v), c in hops)


@dataclass
class DiagramClass:
    rep: tuple  # canonical embedded representative
    multiplicity: int
    displacements: Counter  # axis-0 displacement -> embedding count


@lru_cache(maxsize=6)
def diagram_classes(k: int, nu: int, d: int) -> tuple[DiagramClass, ...]:
    """Point-group classes of embedded diagrams with displacement spectra."""
    ops = point_group(d)
    groups: dict[tuple, DiagramClass] = {}
    for emb in enumerate_embedded_diagrams(k, nu, d):
        key = min(_emb_transform(emb, op) for op in ops)
        s = _emb_axis_displacement(emb)
        cls = groups.get(key)
        if cls is None:
            groups[key] = DiagramClass(key, 1, Counter({s: 1}))
        else:
            cls.multiplicity += 1
            cls.displacements[s] += 1
    return tuple(groups[key] for key in sorted(groups))


def enumerate_diagrams(k: int, nu: int, d: int) -> list[Diagram]:
    """Symmetry-reduced diagrams with per-site embedding multiplicities."""
    out = []
    for cls in diagram_classes(k, nu, d):
        cre, ann, hops = cls.rep
        events = []
        for s, c in cre:
            events.extend([Event("create", s)] * c)
        for s, c in ann:
            events.extend([Event("annihilate", s)] * c)
        for (u, v), c in hops:
            events.extend([Event("hop", u, v)] * c)
        out.append(
            Diagram(
                events=tuple(events),
                k=k,
                nu=nu,
                multiplicity=cls.multiplicity,
                axis_displacements=tuple(sorted(cls.displacements.items())),
            )
        )
    return out


# -- evaluation --------------------------------------------------------------


def _emb_arrays(emb):
    """Local-site integer arrays consumed by the DP kernel."""
    cre, ann, hops = emb
    pts = set()
    for s, _ in cre:
        pts.add(s)
    for s, _ in ann:
        pts.add(s)
    for (u, v), _ in hops:
        pts.add(u)
        pts.add(v)
    sites = sorted(pts)
    idx = {s: i for i, s in enumerate(sites)}
    mult, kind, sa, sb = [], [], [], []
    for s, c in cre:
        mult.append(c), kind.append(0), sa.append(idx[s]), sb.append(0)
    for s, c in ann:
        mult.append(c), kind.append(1), sa.append(idx[s]), sb.append(0)
    for (u, v), c in hops:
        mult.append(c), kind.append(2), sa.append(idx[u]), sb.append(idx[v])
    return (
        np.array(mult, dtype=np.int64),
        np.array(kind, dtype=np.int64),
        np.array(sa, dtype=np.int64),
        np.array(sb, dtype=np.int64),
        len(sites),
    )


def _term_arrays(n: int, terms: Sequence[KatoTerm], prune_diagonal: bool = True):
    """Gap-exponent matrix bcol[j-1, t] and weight vector.

    Terms containing an empty factor require the Mott state on both sides of
    a single event and always evaluate to zero here; they are dropped.
    """
    use = [
        t
        for t in terms
        if not (prune_diagonal and any(len(f) == 0 for f in t.factors))
    ]
    T = len(use)
    bcol = np.zeros((max(n - 1, 1), T), dtype=np.int64)
    w = np.zeros(T, dtype=np.float64)
    for ti, t in enumerate(use):
        w[ti] = float(t.weight)
        for j in range(1, n):
            bcol[j - 1, ti] = t.inner_alphas[n - 1 - j]
    return bcol, w


def _events_to_emb(events: Sequence[Event]) -> tuple:
    cre = Counter(e.site for e in events if e.kind == "create")
    ann = Counter(e.site for e in events if e.kind == "annihilate")
    hop = Counter((e.site, e.target) for e in events if e.kind == "hop")
    return (
        tuple(sorted(cre.items())),
        tuple(sorted(ann.items())),
        tuple(sorted(hop.items())),
    )


def evaluate_diagram(
    diagram: Diagram,
    kato_term: KatoTerm,
    state: MottState,
    twist: TwistSpec = NO_TWIST,
) -> complex:
    """Ordering sum for one diagram and one Kato term, with bond phases.

    The diagram's own hop phases multiply the (real) zero-twist value; the
    embedding multiplicity is *not* applied here.
    """
    n = diagram.order
    if kato_term.order != n:
        raise InvalidOrderError(
            f"term order {kato_term.order} does not match diagram order {n}"
        )
    emb = _events_to_emb(diagram.events)
    mult, kind, sa, sb, nsites = _emb_arrays(emb)
    bcol, w = _term_arrays(n, [kato_term], prune_diagonal=False)
    base = eval_diagram_terms(
        mult, kind, sa, sb, nsites, state.g, state.mu_over_U, bcol, w
    )
    if twist.is_zero:
        return complex(base)
    disp = sum(
        c * (e.target[twist.axis] - e.site[twist.axis])
        for e, c in ((ev, 1) for ev in diagram.events if ev.kind == "hop")
    )
    return base * np.exp(1j * twist.theta_over_ell * disp)


def _eval_class(cls: DiagramClass, g: int, mu: float, bcol, w) -> float:
    mult, kind, sa, sb, nsites = _emb_arrays(cls.rep)
    return eval_diagram_terms(mult, kind, sa, sb, nsites, g, mu, bcol, w)


def compute_gamma_table(
    k: int,
    nu: int,
    params: MottState,
    d: int,
    workers: int | None = None,
    checkpoint: str | None = None,
) -> dict[int, float]:
    """Displacement-resolved per-site coefficient table.

    Returns {axis displacement s: V_s}; gamma at twist theta/l is
    sum_s V_s exp(i theta/l s).  Deterministic regardless of worker count:
    per-class values are merged in class order with exact compensated
    summation.
    """
    n = 2 * k + nu
    if n == 1:
        return {0: 0.0}
    classes = diagram_classes(k, nu, d)
    terms = reduce_to_kato_terms(n)
    bcol, w = _term_arrays(n, terms)
    g, mu = params.g, params.mu_over_U

    values: dict[int, float] = {}
    done_from_checkpoint = 0
    if checkpoint and os.path.exists(checkpoint):
        with open(checkpoint) as fh:
            for line in fh:
                i_str, v_str = line.split()
                values[int(i_str)] = float(v_str)
        done_from_checkpoint = len(values)

    todo = [i for i in range(len(classes)) if i not in values]
    nworkers = workers or os.cpu_count() or 1

    def work(i: int) -> tuple[int, float]:
        return i, _eval_class(classes[i], g, mu, bcol, w)

    if todo:
        ck = open(checkpoint, "a") if checkpoint else None
        try:
            if nworkers == 1:
                it = map(work, todo)
            else:
                pool = ThreadPoolExecutor(max_workers=nworkers)
                it = pool.map(work, todo, chunksize=16)
            for i, v in it:
                values[i] = v
                if ck is not None:
                    ck.write(f"{i} {v!r}\n")
                    if (i % 256) == 0:
                        ck.flush()
            if nworkers != 1:
                pool.shutdown()
        finally:
            if ck is not None:
                ck.close()

    table: dict[int, float] = {}
    all_s = sorted({s for cls in classes for s in cls.displacements})
    for s in all_s:
        table[s] = math.fsum(
            values[i] * cls.displacements[s]
            for i, cls in enumerate(classes)
            if s in cls.displacements
        )
    return table


def gamma_table(
    k: int,
    nu: int,
    params: MottState,
    d: int,
    workers: int | None = None,
    cache_dir: str | None = None,
    max_order: int = DEFAULT_MAX_ORDER,
) -> dict[int, float]:
    """Cached displacement-resolved table for gamma_{2k}^{(nu)}."""
    n = 2 * k + nu
    if n > max_order:
        raise CapacityError(
            f"order n = {n} exceeds the configured maximum {max_order}; "
            f"estimated cost grows faster than 2^n per diagram"
        )
    if k < 0 or nu < 0 or n < 1:
        raise InvalidOrderError(f"invalid k={k}, nu={nu}")
    key = _cache.gamma_key(d=d, g=params.g, mu_over_U=params.mu_over_U, k=k, nu=nu)
    cached = _cache.load_gamma(key, cache_dir)
    if cached is not None:
        return cached
    t0 = time.time()
    table = compute_gamma_table(k, nu, params, d, workers=workers)
    meta = {
        "n_classes": len(diagram_classes(k, nu, d)),
        "n_terms": len(reduce_to_kato_terms(n)) if n >= 2 else 0,
        "wall_time_s": time.time() - t0,
    }
    _cache.store_gamma(key, table, meta, cache_dir)
    return table


def gamma_from_table(table: dict[int, float], twist: TwistSpec = NO_TWIST) -> complex:
    if twist.is_zero:
        return complex(math.fsum(table.values()))
    th = twist.theta_over_ell
    re = math.fsum(v * math.cos(th * s) for s, v in table.items())
    im = math.fsum(v * math.sin(th * s) for s, v in table.items())
    return complex(re, im)


def gamma_coefficient(
    k: int,
    nu: int,
    params: MottState,
    d: int,
    twist: TwistSpec = NO_TWIST,
    workers: int | None = None,
    cache_dir: str | None = None,
    max_order: int = DEFAULT_MAX_ORDER,
) -> complex:
    """Per-site coefficient of |eta|^(2k) (J/U)^nu in the energy density."""
    if k == 0 and nu == 0:
        return complex(params.site_energy(params.g))
    table = gamma_table(
        k, nu, params, d, workers=workers, cache_dir=cache_dir, max_order=max_order
    )
    return gamma_from_table(table, twist)


@dataclass(frozen=True)
class HoppingSeries:
    """Truncated hopping expansion of one source coefficient c_{2k}."""

    k: int
    coefficients: dict[int, complex] = field(default_factory=dict)
    max_order: int = 0

    def coefficient_array(self) -> np.ndarray:
        return np.array(
            [self.coefficients.get(nu, 0.0) for nu in range(self.max_order + 1)]
        )


def hopping_series(
    k: int,
    params: MottState,
    d: int,
    nu_max: int,
    twist: TwistSpec = NO_TWIST,
    workers: int | None = None,
    cache_dir: str | None = None,
    max_order: int = DEFAULT_MAX_ORDER,
) -> HoppingSeries:
    coeffs = {
        nu: gamma_coefficient(
            k, nu, params, d, twist,
            workers=workers, cache_dir=cache_dir, max_order=max_order,
        )
        for nu in range(nu_max + 1)
        if 2 * k + nu >= 1
    }
    if k == 0:
        coeffs[0] = complex(params.site_energy(params.g))  # unperturbed energy density
    return HoppingSeries(k=k, coefficients=coeffs, max_order=nu_max)
