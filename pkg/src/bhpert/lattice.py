"""Geometry of the d-dimensional hypercubic lattice.

Sites are integer offsets relative to an anchor site; the lattice itself is
conceptually infinite and never stored.  This module provides neighbor
enumeration, twist phase factors for hopping bonds, the hypercubic point
group, and canonical forms of connected site clusters used for
symmetry-reduced diagram counting.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

SiteOffset = tuple[int, ...]


class InvalidDimensionError(ValueError):
    pass


class InvalidBondError(ValueError):
    pass


class InvalidClusterError(ValueError):
    pass


@dataclass(frozen=True)
class TwistSpec:
    """Phase gradient imposed along one lattice axis.

    theta_over_ell is the twist angle per site spacing (radians); direction
    is the 1-based axis index.  theta_over_ell = 0 reproduces the untwisted
    model exactly.
    """

    theta_over_ell: float = 0.0
    direction: int = 1

    def __post_init__(self):
        if self.direction < 1:
            raise InvalidDimensionError(f"twist axis must be >= 1, got {self.direction}")

    @property
    def axis(self) -> int:
        """0-based axis index."""
        return self.direction - 1

    @property
    def is_zero(self) -> bool:
        return self.theta_over_ell == 0.0


NO_TWIST = TwistSpec()


def neighbors(site: SiteOffset, d: int) -> list[SiteOffset]:
    """The 2d nearest neighbors of `site` on the d-dimensional lattice."""
    if d < 1:
        raise InvalidDimensionError(f"dimension must be >= 1, got {d}")
    if len(site) != d:
        raise InvalidDimensionError(f"site {site} does not have length {d}")
    out = []
    for axis in range(d):
        for step in (1, -1):
            s = list(site)
            s[axis] += step
            out.append(tuple(s))
    return out


def are_neighbors(a: SiteOffset, b: SiteOffset) -> bool:
    return sum(abs(x - y) for x, y in zip(a, b)) == 1


def hop_phase(frm: SiteOffset, to: SiteOffset, twist: TwistSpec) -> complex:
    """Phase factor exp(i [phi(to) - phi(frm)]) with phi(x) = (theta/l) e.x.

    The conjugate phase attaches to the reverse hop; the product over any
    closed loop of hops is 1.
    """
    if not are_neighbors(frm, to):
        raise InvalidBondError(f"{frm} -> {to} is not a nearest-neighbor bond")
    if twist.is_zero:
        return 1.0 + 0.0j
    delta = to[twist.axis] - frm[twist.axis]
    return complex(np.exp(1j * twist.theta_over_ell * delta))


@lru_cache(maxsize=None)
def point_group(d: int, fixed_axis: int | None = None) -> tuple[tuple[tuple[int, ...], ...], ...]:
    """Signed permutation matrices of the hypercubic point group (order d! 2^d).

    With `fixed_axis` (0-based) only operations mapping that axis to itself
    with positive sign are kept; a nonzero twist breaks the full symmetry.
    Matrices are returned as tuples of rows.
    """
    if d < 1:
        raise InvalidDimensionError(f"dimension must be >= 1, got {d}")
    ops = []
    for perm in itertools.permutations(range(d)):
        for signs in itertools.product((1, -1), repeat=d):
            m = tuple(
                tuple(signs[i] if perm[i] == j else 0 for j in range(d))
                for i in range(d)
            )
            if fixed_axis is not None:
                # row fixed_axis must be the +unit vector of fixed_axis
                if perm[fixed_axis] != fixed_axis or signs[fixed_axis] != 1:
                    continue
            ops.append(m)
    return tuple(ops)


def apply_op(op: tuple[tuple[int, ...], ...], site: SiteOffset) -> SiteOffset:
    return tuple(sum(row[j] * site[j] for j in range(len(site))) for row in op)


def is_connected(sites: frozenset[SiteOffset] | set[SiteOffset]) -> bool:
    """Connectivity under nearest-neighbor adjacency."""
    if not sites:
        return False
    sites = set(sites)
    d = len(next(iter(sites)))
    seen = set()
    stack = [next(iter(sites))]
    while stack:
        s = stack.pop()
        if s in seen:
            continue
        seen.add(s)
        for nb in neighbors(s, d):
            if nb in sites and nb not in seen:
                stack.append(nb)
    return seen == sites


@dataclass(frozen=True)
class Cluster:
    """A finite connected set of sites with the multiset of bonds it uses."""

    sites: frozenset[SiteOffset]
    bonds_used: tuple[tuple[SiteOffset, SiteOffset], ...] = ()

    @property
    def d(self) -> int:
        return len(next(iter(self.sites)))


def translate_to_origin(sites: frozenset[SiteOffset]) -> tuple[SiteOffset, frozenset[SiteOffset]]:
    """Shift so the lexicographically smallest site is the origin."""
    anchor = min(sites)
    moved = frozenset(tuple(x - a for x, a in zip(s, anchor)) for s in sites)
    return anchor, moved


def canonical_form(cluster: Cluster, twist: TwistSpec | None = None) -> Cluster:
    """Unique representative under translations and point-group operations.

    Under nonzero twist only operations fixing the twist axis are allowed.
    Idempotent; raises on disconnected clusters.
    """
    if not cluster.sites:
        raise InvalidClusterError("empty cluster")
    if not is_connected(cluster.sites):
        raise InvalidClusterError("cluster is not connected")
    d = cluster.d
    fixed = None
    if twist is not None and not twist.is_zero:
        fixed = twist.axis
    best = None
    for op in point_group(d, fixed):
        sites = frozenset(apply_op(op, s) for s in cluster.sites)
        shift, sites = translate_to_origin(sites)
        bonds = tuple(
            sorted(
                tuple(
                    sorted(
                        (
                            tuple(x - a for x, a in zip(apply_op(op, u), shift)),
                            tuple(x - a for x, a in zip(apply_op(op, v), shift)),
                        )
                    )
                )
                for (u, v) in cluster.bonds_used
            )
        )
        key = (tuple(sorted(sites)), bonds)
        if best is None or key < best[0]:
            best = (key, Cluster(sites, bonds))
    return best[1]
