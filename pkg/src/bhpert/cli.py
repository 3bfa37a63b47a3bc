"""Command-line surface for the perturbation pipelines.

Subcommands: coefficients, lobe, exponents, potential, oracle.  Exit codes:
0 success, 2 usage error, 3 computation failure, 4 capacity/budget refusal.
Configuration comes from an optional key=value file plus flag overrides;
every output embeds the full configuration, code version, and cache keys.
"""
from __future__ import annotations

import argparse
import json
import sys
import time

import numpy as np

from . import __version__
from . import cache as _cache
from .chains import CapacityError, MottState, gamma_table, hopping_series
from .lattice import NO_TWIST, TwistSpec
from .observables import (
    InsufficientDataError,
    NoRootError,
    UnstablePotentialError,
    a2_zero,
    condensate_curve,
    dlog_exponent,
    extrapolate_exponents,
    landau_series,
    lobe_tip,
    mott_lobe,
    superfluid_curve,
)
from .oracle import (
    FitConditioningError,
    HilbertSpaceBudgetError,
    run_verification,
)
from .series import evaluate_landau, from_hopping, landau_from_sources

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_COMPUTE = 3
EXIT_CAPACITY = 4


def _parse_config_file(path: str) -> dict[str, str]:
    out = {}
    with open(path) as fh:
        for raw in fh:
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ValueError(f"malformed config line: {raw.rstrip()}")
            key, val = line.split("=", 1)
            out[key.strip().replace("-", "_")] = val.strip()
    return out


def _inject_config(argv: list[str]) -> list[str]:
    """Expand --config FILE into flags placed before the user's own flags.

    argparse keeps the last occurrence of a repeated option, so explicit
    flags override file values.
    """
    if "--config" not in argv:
        return argv
    i = argv.index("--config")
    path = argv[i + 1]
    file_vals = _parse_config_file(path)
    cfg_flags: list[str] = []
    for key, raw in file_vals.items():
        flag = "--" + key.replace("_", "-")
        if raw.lower() in ("true", "false"):
            if raw.lower() == "true":
                cfg_flags.append(flag)
        else:
            cfg_flags += [flag, raw]
    # keep the subcommand first, then file values, then user flags
    # (--config itself stays so provenance records it)
    return argv[:1] + cfg_flags + argv[1:]


def _floats(text: str) -> list[float]:
    """Comma list or start:stop:count grid."""
    if ":" in text:
        start, stop, count = text.split(":")
        return [float(x) for x in np.linspace(float(start), float(stop), int(count))]
    return [float(x) for x in text.split(",")]


def _ints(text: str) -> list[int]:
    return [int(x) for x in text.split(",")]


def _provenance(args: argparse.Namespace, cache_keys: list[str]) -> dict:
    cfg = {
        k: v for k, v in sorted(vars(args).items())
        if k not in ("func",) and v is not None
    }
    return {
        "version": __version__,
        "kernel_version": _cache.KERNEL_VERSION,
        "config": cfg,
        "cache_keys": sorted(cache_keys),
        "timestamp": time.strftime("%Y-%m-%dT%H:%M:%S", time.gmtime()),
    }


def _write_json(path: str | None, payload: dict):
    text = json.dumps(payload, indent=2, sort_keys=True, default=str)
    if path:
        with open(path, "w") as fh:
            fh.write(text + "\n")
    else:
        print(text)


def _write_csv(path: str | None, header_lines: list[str], columns: list[str], rows):
    lines = [f"# {h}" for h in header_lines]
    lines.append(",".join(columns))
    for row in rows:
        lines.append(",".join(_fmt(v) for v in row))
    text = "\n".join(lines) + "\n"
    if path:
        with open(path, "w") as fh:
            fh.write(text)
    else:
        print(text, end="")


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, float):
        return f"{v:.12g}"
    return str(v)


def _gamma_keys(d, g, mu, ks, nus) -> list[str]:
    return [
        _cache.gamma_key(d=d, g=g, mu_over_U=mu, k=k, nu=nu)
        for k in ks for nu in nus
    ]


def cmd_coefficients(args) -> int:
    params = MottState(g=args.g, mu_over_U=args.mu)
    ks = _ints(args.k)
    rows = []
    keys = []
    for k in ks:
        for nu in range(args.nu_max + 1):
            if 2 * k + nu < 1:
                continue
            table = gamma_table(
                k, nu, params, args.d,
                workers=args.workers, cache_dir=args.cache_dir,
                max_order=args.max_order,
            )
            keys.append(
                _cache.gamma_key(d=args.d, g=args.g, mu_over_U=args.mu, k=k, nu=nu)
            )
            total = sum(table.values())
            rows.append((k, nu, total, json.dumps(table, sort_keys=True)))
    prov = _provenance(args, keys)
    _write_csv(
        args.out,
        [f"gamma coefficients d={args.d} g={args.g} mu/U={args.mu}",
         f"version={prov['version']} kernel={prov['kernel_version']}",
         f"config={json.dumps(prov['config'], sort_keys=True, default=str)}",
         f"timestamp={prov['timestamp']}"],
        ["k", "nu", "gamma", "displacement_table"],
        rows,
    )
    return EXIT_OK


def cmd_lobe(args) -> int:
    mu_grid = _floats(args.mu_grid)
    if not mu_grid:
        raise SystemExit(EXIT_USAGE)
    estimates = mott_lobe(
        mu_grid, args.nu_m, args.d, g=args.g,
        workers=args.workers, cache_dir=args.cache_dir,
    )
    rows = []
    for est in estimates:
        rows.append((
            est.mu_over_U,
            est.ratio_estimate,
            est.odd_fit.intercept if est.odd_fit else None,
            est.even_fit.intercept if est.even_fit else None,
        ))
    try:
        tip = lobe_tip(estimates)
        tip_line = f"tip mu/U={tip[0]:.6g} J/U={tip[1]:.6g}"
    except InsufficientDataError:
        tip_line = "tip unavailable"
    keys = _gamma_keys(args.d, args.g, 0.0, [1], range(args.nu_m + 1))
    prov = _provenance(args, keys)
    _write_csv(
        args.out,
        [f"Mott lobe d={args.d} g={args.g} nu_m={args.nu_m}",
         tip_line,
         f"version={prov['version']} kernel={prov['kernel_version']}",
         f"config={json.dumps(prov['config'], sort_keys=True, default=str)}",
         f"timestamp={prov['timestamp']}"],
        ["mu_over_U", "ratio_estimate", "odd_extrapolation", "even_extrapolation"],
        rows,
    )
    return EXIT_OK


def cmd_exponents(args) -> int:
    params = MottState(g=args.g, mu_over_U=args.mu)
    orders = _ints(args.nu_m)
    twists = _floats(args.twists) if args.twists else []
    if args.zeta and not twists:
        print("error: superfluid exponent requires --twists", file=sys.stderr)
        return EXIT_USAGE
    J_grid = np.asarray(_floats(args.j_grid))
    beta_entries: dict[int, float] = {}
    zeta_entries: dict[float, dict[int, float]] = {t: {} for t in twists}
    windows = {}
    keys: list[str] = []
    for nu_m in orders:
        if nu_m % 2 == 1:
            continue  # odd orders give unbounded sextic potentials
        coeffs = landau_series(
            params, args.d, nu_m, workers=args.workers, cache_dir=args.cache_dir
        )
        keys += _gamma_keys(args.d, args.g, args.mu, [1, 2, 3], range(nu_m + 1))
        if args.jc is not None:
            jc = args.jc
        else:
            jc = a2_zero(coeffs, search_max=args.search_max)
        grid = jc + J_grid[J_grid > 0]
        curve = condensate_curve(coeffs, grid, nu_m)
        window = (
            (args.window_min, args.window_max)
            if args.window_min is not None else None
        )
        exponent, used = dlog_exponent(curve, jc, window)
        beta_entries[nu_m] = exponent
        windows[f"beta_c nu_m={nu_m}"] = {"J_c": jc, "window": used}
        if args.zeta:
            for theta in twists:
                tw = TwistSpec(theta_over_ell=theta, direction=1)
                coeffs_tw = landau_series(
                    params, args.d, nu_m, twist=tw,
                    workers=args.workers, cache_dir=args.cache_dir,
                )
                scurve = superfluid_curve(coeffs_tw, coeffs, grid, nu_m, tw)
                zexp, zused = dlog_exponent(scurve, jc, window)
                zeta_entries[theta][nu_m] = zexp
                windows[f"zeta nu_m={nu_m} twist={theta}"] = {
                    "J_c": jc, "window": zused,
                }
    result: dict = {"beta_c": {"finite_order": beta_entries}}
    if len(beta_entries) >= 2:
        est = extrapolate_exponents(beta_entries)
        result["beta_c"]["extrapolated"] = est.extrapolated
        result["beta"] = est.extrapolated / 2.0  # reporting convention
    else:
        result["beta_c"]["extrapolated"] = None
    if args.zeta:
        result["zeta"] = {
            "finite_order": {str(t): v for t, v in zeta_entries.items()}
        }
        if all(len(v) >= 2 for v in zeta_entries.values()):
            zest = extrapolate_exponents(kind="zeta", twist_entries=zeta_entries)
            result["zeta"]["per_twist_extrapolated"] = {
                str(t): v for t, v in zest.per_twist_extrapolated.items()
            }
            result["zeta"]["extrapolated"] = zest.extrapolated
        else:
            result["zeta"]["extrapolated"] = None
    result["fit_details"] = windows
    result["provenance"] = _provenance(args, keys)
    _write_json(args.out, result)
    return EXIT_OK


def cmd_potential(args) -> int:
    params = MottState(g=args.g, mu_over_U=args.mu)
    orders = _ints(args.nu_m)
    J_values = _floats(args.j)
    psi_sq = np.asarray(_floats(args.psi_sq_grid))
    rows = []
    keys = []
    for nu_m in orders:
        coeffs = landau_series(
            params, args.d, nu_m, workers=args.workers, cache_dir=args.cache_dir
        )
        keys += _gamma_keys(args.d, args.g, args.mu, [1, 2, 3], range(nu_m + 1))
        for J in J_values:
            la = evaluate_landau(coeffs, J)
            stable = la.a6 is not None and la.a6 > 0.0
            for x in psi_sq:
                rows.append((nu_m, J, float(x), float(la.potential(x)),
                             "ok" if stable else "unstable"))
    prov = _provenance(args, keys)
    _write_csv(
        args.out,
        [f"effective potential d={args.d} g={args.g} mu/U={args.mu}",
         "potential is per site, relative to the zero-order-parameter value",
         f"version={prov['version']} kernel={prov['kernel_version']}",
         f"config={json.dumps(prov['config'], sort_keys=True, default=str)}",
         f"timestamp={prov['timestamp']}"],
        ["nu_m", "J_over_U", "psi_sq", "potential", "stability"],
        rows,
    )
    return EXIT_OK


def cmd_oracle(args) -> int:
    report = run_verification(
        max_total_order=args.max_total_order,
        cache_dir=args.cache_dir,
        rel_tol=args.rel_tol,
    )
    report["provenance"] = _provenance(args, [])
    _write_json(args.out, report)
    return EXIT_OK if report["passed"] else EXIT_COMPUTE


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="bhpert",
        description="Strong-coupling perturbation pipelines for the "
                    "Bose-Hubbard effective potential",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", help="key=value config file; flags override")
        p.add_argument("--d", type=int, default=2, help="lattice dimension")
        p.add_argument("--g", type=int, default=1, help="Mott filling factor")
        p.add_argument("--workers", type=int, default=None)
        p.add_argument("--cache-dir", default=None,
                       help="cache root (default: BHPERT_CACHE_DIR or ~/.cache)")
        p.add_argument("--out", default=None, help="output path (default stdout)")

    p = sub.add_parser("coefficients", help="compute and cache gamma tables")
    common(p)
    p.add_argument("--mu", type=float, required=True, help="mu/U")
    p.add_argument("--k", default="1", help="comma list of source orders k")
    p.add_argument("--nu-max", type=int, default=4)
    p.add_argument("--max-order", type=int, default=12,
                   help="refuse total orders beyond this")
    p.set_defaults(func=cmd_coefficients)

    p = sub.add_parser("lobe", help="Mott lobe boundary across a mu/U grid")
    common(p)
    p.add_argument("--mu-grid", required=True,
                   help="comma list or start:stop:count")
    p.add_argument("--nu-m", type=int, default=8)
    p.set_defaults(func=cmd_lobe)

    p = sub.add_parser("exponents", help="critical exponents from Dlog analysis")
    common(p)
    p.add_argument("--mu", type=float, required=True)
    p.add_argument("--nu-m", default="4", help="comma list of truncation orders")
    p.add_argument("--zeta", action="store_true",
                   help="also compute the superfluid exponent")
    p.add_argument("--twists", default=None,
                   help="comma list of theta/ell values (required for --zeta)")
    p.add_argument("--j-grid", default="0.0002:0.06:240",
                   help="offsets above J_c, comma list or start:stop:count")
    p.add_argument("--jc", type=float, default=None,
                   help="override the boundary value (default: same-order a2 zero)")
    p.add_argument("--search-max", type=float, default=0.2)
    p.add_argument("--window-min", type=float, default=None)
    p.add_argument("--window-max", type=float, default=None)
    p.set_defaults(func=cmd_exponents)

    p = sub.add_parser("potential", help="effective potential curves")
    common(p)
    p.add_argument("--mu", type=float, required=True)
    p.add_argument("--nu-m", default="4", help="comma list of truncation orders")
    p.add_argument("--j", required=True, help="comma list of J/U values")
    p.add_argument("--psi-sq-grid", default="0:0.2:81")
    p.set_defaults(func=cmd_potential)

    p = sub.add_parser("oracle", help="verify the kernel against diagonalization")
    common(p)
    p.add_argument("--max-total-order", type=int, default=4)
    p.add_argument("--rel-tol", type=float, default=1e-7)
    p.set_defaults(func=cmd_oracle)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    if argv is None:
        argv = sys.argv[1:]
    try:
        argv = _inject_config(list(argv))
    except (OSError, ValueError, IndexError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (CapacityError, HilbertSpaceBudgetError) as exc:
        print(f"capacity error: {exc}", file=sys.stderr)
        return EXIT_CAPACITY
    except (ValueError, NoRootError, UnstablePotentialError,
            InsufficientDataError, FitConditioningError, RuntimeError) as exc:
        print(f"computation failed: {exc}", file=sys.stderr)
        return EXIT_COMPUTE


if __name__ == "__main__":
    sys.exit(main())
