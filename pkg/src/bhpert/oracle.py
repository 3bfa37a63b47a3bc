"""Brute-force verification on small periodic clusters.

Builds the extended Hamiltonian (on-site repulsion, hopping with optional
twist phases, homogeneous particle sources and drains) on a ring or a small
torus in an occupation-number basis, finds the ground energy with a sparse
eigensolver, and extracts the source-expansion coefficients c_{2k} by
polynomial fits of the energy density in |eta|^2.  Everything here is kept
independent of the process-chain kernel.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .chains import MottState
from .lattice import NO_TWIST, TwistSpec, hop_phase


class HilbertSpaceBudgetError(RuntimeError):
    pass


class FitConditioningError(RuntimeError):
    pass


DEFAULT_DIM_BUDGET = 4_000_000


@dataclass(frozen=True)
class ClusterModel:
    """Periodic cluster: a ring (d=1) or an L1 x L2 torus (d=2)."""

    shape: tuple[int, ...]
    n_max: int
    params: MottState = field(default_factory=MottState)
    J_over_U: float = 0.0
    eta: float = 0.0
    twist: TwistSpec = NO_TWIST
    dim_budget: int = DEFAULT_DIM_BUDGET

    @property
    def n_sites(self) -> int:
        out = 1
        for L in self.shape:
            out *= L
        return out

    @property
    def dim(self) -> int:
        return (self.n_max + 1) ** self.n_sites

    def __post_init__(self):
        if self.dim > self.dim_budget:
            raise HilbertSpaceBudgetError(
                f"Hilbert dimension {self.dim} exceeds budget {self.dim_budget}"
            )
        if self.n_max < self.params.g:
            raise ValueError("occupation cutoff below the Mott filling")


def _site_coords(shape: tuple[int, ...]) -> list[tuple[int, ...]]:
    if len(shape) == 1:
        return [(i,) for i in range(shape[0])]
    return [(i, j) for i in range(shape[0]) for j in range(shape[1])]


def bonds_of(shape: tuple[int, ...]) -> list[tuple[int, int, tuple[int, ...]]]:
    """Directed periodic bonds as (from_index, to_index, unit step).

    Each undirected bond appears once; the step is the displacement on the
    infinite lattice (used for twist phases, wrapping ignored: the twist is
    imposed as a uniform phase gradient, consistent once the total phase
    around the ring is a multiple that drops in per-site quantities only if
    the ring is longer than contributing clusters).
    """
    coords = _site_coords(shape)
    index = {c: i for i, c in enumerate(coords)}
    out = []
    for c in coords:
        for axis, L in enumerate(shape):
            if L == 1:
                continue
            nb = list(c)
            nb[axis] = (nb[axis] + 1) % L
            nb = tuple(nb)
            if L == 2 and nb < c:
                continue  # avoid double bond for length-2 axes
            step = tuple(1 if a == axis else 0 for a in range(len(shape)))
            out.append((index[c], index[nb], step))
    return out


def build_hamiltonian(model: ClusterModel) -> sp.csr_matrix:
    """Sparse extended Hamiltonian in units of U."""
    M = model.n_sites
    nb = model.n_max + 1
    dim = model.dim
    mu = model.params.mu_over_U
    occ = np.empty((dim, M), dtype=np.int64)
    idx = np.arange(dim)
    rem = idx.copy()
    for s in range(M):
        occ[:, s] = rem % nb
        rem //= nb

    diag = (0.5 * occ * (occ - 1) - mu * occ).sum(axis=1)
    H = sp.diags(diag).tolil()

    def raise_at(site, states):
        """Matrix elements of b^dagger_site: returns (rows, cols, amps)."""
        ok = occ[states, site] < model.n_max
        cols = states[ok]
        rows = cols + nb**site
        amps = np.sqrt(occ[cols, site] + 1.0)
        return rows, cols, amps

    data_rows, data_cols, data_vals = [], [], []
    if model.J_over_U != 0.0:
        steps = bonds_of(model.shape)
        for (i, j, step) in steps:
            origin = (0,) * len(model.shape)
            phase = hop_phase(origin, step, model.twist)
            # b_i^dagger b_j and Hermitian conjugate
            ok = (occ[:, j] > 0) & (occ[:, i] < model.n_max)
            cols = idx[ok]
            rows = cols + nb**i - nb**j
            amps = np.sqrt(occ[cols, j] * (occ[cols, i] + 1.0))
            val = -model.J_over_U * np.conj(phase) * amps
            data_rows.append(rows)
            data_cols.append(cols)
            data_vals.append(val)
            data_rows.append(cols)
            data_cols.append(rows)
            data_vals.append(np.conj(val))
    if model.eta != 0.0:
        for s in range(M):
            rows, cols, amps = raise_at(s, idx)
            val = model.eta * amps
            data_rows.append(rows)
            data_cols.append(cols)
            data_vals.append(val)
            data_rows.append(cols)
            data_cols.append(rows)
            data_vals.append(np.conj(val))
    if data_rows:
        rows = np.concatenate(data_rows)
        cols = np.concatenate(data_cols)
        vals = np.concatenate(data_vals)
        dtype = complex if np.iscomplexobj(vals) else float
        H = sp.csr_matrix(H, dtype=dtype) + sp.csr_matrix(
            (vals.astype(dtype), (rows, cols)), shape=(dim, dim)
        )
        return H
    return sp.csr_matrix(H)


def ground_energy(model: ClusterModel, tol: float = 1e-13) -> float:
    """Lowest eigenvalue in units of U via Lanczos iteration."""
    H = build_hamiltonian(model)
    if H.shape[0] <= 512:
        w = np.linalg.eigvalsh(H.toarray())
        return float(w[0])
    # start from the Mott product state to converge onto the right branch
    g = model.params.g
    nb = model.n_max + 1
    m_index = sum(g * nb**s for s in range(model.n_sites))
    v0 = np.zeros(H.shape[0])
    v0[m_index] = 1.0
    try:
        w = spla.eigsh(
            H, k=1, which="SA", tol=tol, v0=v0, maxiter=20000,
            return_eigenvectors=False,
        )
    except spla.ArpackNoConvergence as exc:
        raise RuntimeError(f"eigensolver failed to converge: {exc}") from exc
    return float(w[0])


def extract_source_coefficients(
    shape: tuple[int, ...],
    params: MottState,
    J_over_U: float,
    k_max: int,
    eta_grid: np.ndarray | None = None,
    n_max: int | None = None,
    twist: TwistSpec = NO_TWIST,
    residual_tol: float = 1e-8,
    fit_degree: int | None = None,
) -> np.ndarray:
    """Fit E(eta)/M as a polynomial in |eta|^2; returns [f0, c2, ..., c_{2 k_max}].

    The eta grid must be small enough that the truncation remainder stays
    below the fit tolerance; guard terms beyond k_max absorb the remainder
    and the residual is checked.
    """
    if fit_degree is None:
        fit_degree = k_max + 5
    if eta_grid is None:
        eta_grid = np.linspace(0.02, 0.2, 2 * (fit_degree + 2)) * (0.25 ** (k_max / 3))
    if n_max is None:
        n_max = params.g + 2 * k_max + 2
    M = 1
    for L in shape:
        M *= L
    energies = []
    for eta in eta_grid:
        model = ClusterModel(
            shape=shape, n_max=n_max, params=params,
            J_over_U=J_over_U, eta=float(eta), twist=twist,
        )
        energies.append(ground_energy(model) / M)
    x = np.asarray(eta_grid) ** 2
    y = np.asarray(energies)
    # fit in rescaled variable to keep the Vandermonde matrix well conditioned
    scale = float(np.max(x))
    V = np.vander(x / scale, fit_degree + 1, increasing=True)
    coef, res, rank, _ = np.linalg.lstsq(V, y, rcond=None)
    fit_residual = float(np.max(np.abs(V @ coef - y)))
    coef = coef / scale ** np.arange(fit_degree + 1)
    if rank < fit_degree + 1 or not np.isfinite(fit_residual):
        raise FitConditioningError(
            "ill-conditioned source fit; choose a different eta grid"
        )
    if fit_residual > residual_tol:
        raise FitConditioningError(
            f"source-fit residual {fit_residual:.2e} above tolerance; "
            "shrink the eta grid"
        )
    return coef[: k_max + 1]


def _mott_index(model: ClusterModel) -> int:
    g = model.params.g
    nb = model.n_max + 1
    return sum(g * nb**s for s in range(model.n_sites))


def _hop_source_operators(model: ClusterModel):
    """Sparse matrices of the hopping and source perturbations.

    The hopping operator carries the sign convention of -J/U sum b^dag b,
    so its series variable is J/U itself; the source operator multiplies
    eta (taken real).
    """
    base = ClusterModel(
        shape=model.shape, n_max=model.n_max, params=model.params,
        J_over_U=0.0, eta=0.0, twist=model.twist,
        dim_budget=model.dim_budget,
    )
    H0 = build_hamiltonian(base)
    hop = ClusterModel(
        shape=model.shape, n_max=model.n_max, params=model.params,
        J_over_U=1.0, eta=0.0, twist=model.twist,
        dim_budget=model.dim_budget,
    )
    src = ClusterModel(
        shape=model.shape, n_max=model.n_max, params=model.params,
        J_over_U=0.0, eta=1.0, twist=model.twist,
        dim_budget=model.dim_budget,
    )
    A = (build_hamiltonian(hop) - H0).tocsr()
    B = (build_hamiltonian(src) - H0).tocsr()
    return np.asarray(H0.diagonal()).copy(), A, B


def source_series_reference(
    shape: tuple[int, ...],
    params: MottState,
    k_max: int,
    nu_max: int,
    n_max: int | None = None,
    twist: TwistSpec = NO_TWIST,
    dim_budget: int = DEFAULT_DIM_BUDGET,
) -> np.ndarray:
    """Exact per-site expansion coefficients gamma[k, nu] on a finite cluster.

    Bivariate Rayleigh-Schroedinger recursion in the hopping ratio x = J/U
    and the source strength y = eta: with intermediate normalization the
    corrections satisfy

        E[i,j] = <m| A |psi[i-1,j]> + <m| B |psi[i,j-1]>
        psi[i,j] = R ( A psi[i-1,j] + B psi[i,j-1]
                       - sum_{(p,q) < (i,j)} E[i-p, j-q] psi[p,q] )

    where R is the reduced resolvent at the Mott state.  Returns the array
    gamma[k, nu] = E[nu, 2k] / n_sites for k <= k_max, nu <= nu_max.  Valid
    as infinite-lattice values while contributing clusters fit on the
    cluster without wrapping.
    """
    if n_max is None:
        # exact cutoff: a contributing path of n operators must raise and
        # then lower any given site, so it can climb at most floor(n/2)
        n_max = params.g + (nu_max + 2 * k_max) // 2
    model = ClusterModel(
        shape=shape, n_max=n_max, params=params, twist=twist,
        dim_budget=dim_budget,
    )
    h0, A, B = _hop_source_operators(model)
    m = _mott_index(model)
    dim = A.shape[0]
    e0 = h0[m]
    denom = e0 - h0
    denom[m] = 1.0
    resolvent = 1.0 / denom
    resolvent[m] = 0.0

    jmax = 2 * k_max
    E = np.zeros((nu_max + 1, jmax + 1), dtype=A.dtype)
    psi = {}
    v0 = np.zeros(dim, dtype=A.dtype)
    v0[m] = 1.0
    psi[(0, 0)] = v0
    E[0, 0] = e0
    for total in range(1, nu_max + jmax + 1):
        for i in range(min(total, nu_max) + 1):
            j = total - i
            if j > jmax:
                continue
            rhs = np.zeros(dim, dtype=A.dtype)
            if i > 0:
                rhs += A @ psi[(i - 1, j)]
            if j > 0:
                rhs += B @ psi[(i, j - 1)]
            E[i, j] = rhs[m]
            for p in range(i + 1):
                for q in range(j + 1):
                    if (p, q) == (i, j) or (p, q) == (0, 0):
                        continue
                    rhs -= E[i - p, j - q] * psi[(p, q)]
            vec = resolvent * rhs
            vec[m] = 0.0
            psi[(i, j)] = vec
    out = np.empty((k_max + 1, nu_max + 1), dtype=A.dtype)
    for k in range(k_max + 1):
        out[k] = E[:, 2 * k] / model.n_sites
    return out


def run_verification(
    max_total_order: int = 4,
    rel_tol: float = 1e-7,
    params: MottState | None = None,
    cache_dir: str | None = None,
    perturb: tuple[int, int, float] | None = None,
) -> dict:
    """Compare kernel coefficients with the cluster recursion, both dimensions.

    Checks every gamma_{2k}^(nu) with 2k + nu <= max_total_order: d=1 on a
    ring long enough to avoid wrap-around, d=2 on a 3x3 torus (orders with
    nu <= 2 only, where no cluster wraps).  `perturb` injects an artificial
    (k, nu, delta) offset into the d=1 reference, for fault-injection tests.
    Returns a report dict with a `passed` flag and per-entry records.
    """
    from .chains import gamma_coefficient  # local to avoid cycles

    if params is None:
        params = MottState()
    checks = []
    passed = True

    def record(label, d, k, nu, got, want):
        nonlocal passed
        rel = abs(got - want) / max(1.0, abs(want))
        ok = rel <= rel_tol
        passed = passed and ok
        checks.append({
            "label": label, "d": d, "k": k, "nu": nu,
            "kernel": got, "reference": want, "rel_error": rel, "ok": ok,
        })

    k_max = max_total_order // 2
    nu_max = max_total_order - 2  # k >= 1 entries reach this
    ring = (max(max_total_order + 2, 5),)
    ref1 = source_series_reference(ring, params, k_max=k_max, nu_max=nu_max)
    for k in range(1, k_max + 1):
        for nu in range(nu_max + 1):
            if 2 * k + nu > max_total_order:
                continue
            got = gamma_coefficient(k, nu, params, d=1, cache_dir=cache_dir).real
            want = float(ref1[k, nu].real)
            if perturb is not None and (k, nu) == perturb[:2]:
                want += perturb[2]
            record("ring", 1, k, nu, got, want)
    nu2 = min(2, max_total_order - 2)
    if nu2 >= 0:
        ref2 = source_series_reference(
            (3, 3), params, k_max=1, nu_max=nu2,
            n_max=params.g + max_total_order // 2,
        )
        for nu in range(nu2 + 1):
            got = gamma_coefficient(1, nu, params, d=2, cache_dir=cache_dir).real
            record("torus", 2, 1, nu, got, float(ref2[1, nu].real))
    failures = [c for c in checks if not c["ok"]]
    return {
        "passed": passed,
        "rel_tol": rel_tol,
        "n_checks": len(checks),
        "checks": checks,
        "failures": failures,
    }


def gamma_reference(
    shape: tuple[int, ...],
    params: MottState,
    k: int,
    nu_max: int,
    J_grid: np.ndarray | None = None,
    **kwargs,
) -> np.ndarray:
    """Hopping coefficients of c_{2k} from a polynomial fit in J/U.

    Independent reference for the process-chain kernel; returns the
    coefficients of (J/U)^0 .. (J/U)^{nu_max}.
    """
    if J_grid is None:
        J_grid = np.linspace(0.005, 0.035, nu_max + 3)
    c_at_J = []
    for J in J_grid:
        coefs = extract_source_coefficients(
            shape, params, float(J), k_max=max(k, 1), **kwargs
        )
        c_at_J.append(coefs[k])
    J = np.asarray(J_grid)
    scale = float(np.max(J))
    V = np.vander(J / scale, nu_max + 3, increasing=True)
    coef, *_ = np.linalg.lstsq(V, np.asarray(c_at_J), rcond=None)
    coef = coef / scale ** np.arange(nu_max + 3)
    return coef[: nu_max + 1]
