"""Disk cache for computed coefficient tables.

Cache root resolution order: explicit argument, BHPERT_CACHE_DIR environment
variable, ~/.cache/bhpert.  Entries are JSON files keyed by the physical
parameters and a kernel version tag; two runs with equal configuration and
cache produce byte-identical files.
"""
from __future__ import annotations

import json
import os

KERNEL_VERSION = "bhpert-kernel-1"

ENV_VAR = "BHPERT_CACHE_DIR"


def cache_root(cache_dir: str | None = None) -> str:
    if cache_dir is not None:
        return cache_dir
    env = os.environ.get(ENV_VAR)
    if env:
        return env
    return os.path.join(os.path.expanduser("~"), ".cache", "bhpert")


def gamma_key(*, d: int, g: int, mu_over_U: float, k: int, nu: int) -> str:
    return f"d{d}_g{g}_mu{float(mu_over_U)!r}_k{k}_nu{nu}_{KERNEL_VERSION}"


def _gamma_path(key: str, cache_dir: str | None) -> str:
    return os.path.join(cache_root(cache_dir), "gamma", key + ".json")


def load_gamma(key: str, cache_dir: str | None = None) -> dict[int, float] | None:
    path = _gamma_path(key, cache_dir)
    if not os.path.exists(path):
        return None
    with open(path) as fh:
        payload = json.load(fh)
    if payload.get("version") != KERNEL_VERSION:
        return None
    return {int(s): float(v) for s, v in payload["values"].items()}


def store_gamma(
    key: str,
    table: dict[int, float],
    meta: dict | None = None,
    cache_dir: str | None = None,
) -> str:
    path = _gamma_path(key, cache_dir)
    os.makedirs(os.path.dirname(path), exist_ok=True)
    payload = {
        "version": KERNEL_VERSION,
        "key": key,
        "values": {str(s): table[s] for s in sorted(table)},
        "meta": meta or {},
    }
    tmp = path + ".tmp"
    with open(tmp, "w") as fh:
        json.dump(payload, fh, indent=1, sort_keys=True)
    os.replace(tmp, path)
    return path
