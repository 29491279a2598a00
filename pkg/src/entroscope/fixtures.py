"""Bundled, content-addressed input fixtures.

Every fixture is a JSON file under ``data/`` whose SHA-256 is pinned
below; loading verifies the digest so tests and the CLI always see the
exact bytes they were written against.
"""
from __future__ import annotations

import hashlib
from pathlib import Path

import numpy as np

from .numkernel import Povm, ValidationError, load_json, matrix_from_json

FIXTURE_DIR = Path(__file__).resolve().parent / "data"

MANIFEST = {
    "povm_0402": "db814d1698023280cba97aaf2d95b6e1eca55fab1f60d225a3df118d9d38a167",
    "gmono8x8": "fd01741075d9bfa781143cdbfbe9a4bd126cac25bc57b333d8155f3df2b9e7dd",
    "ff_theta": "3407a2678d32fa15da8917104e8fa1fc3b437005e4c5b5d0c79ba08f04cda766",
}


def digest(name: str) -> str:
    return hashlib.sha256(path(name).read_bytes()).hexdigest()


def path(name: str) -> Path:
    if name not in MANIFEST:
        raise ValidationError(f"unknown fixture {name!r}; known: {', '.join(sorted(MANIFEST))}")
    return FIXTURE_DIR / f"{name}.json"


def raw(name: str) -> dict:
    got = digest(name)
    if got != MANIFEST[name]:
        raise ValidationError(f"fixture {name} digest mismatch ({got[:12]}…)")
    return load_json(path(name))


def povm_0402() -> tuple[Povm, np.ndarray, np.ndarray, dict]:
    """(POVM, ρ₀, ρ₁, expected error values)."""
    d = raw("povm_0402")
    povm = Povm(tuple(matrix_from_json(e) for e in d["effects"]))
    return povm, matrix_from_json(d["states"]["rho0"]), matrix_from_json(d["states"]["rho1"]), d["expected"]


def gmono8x8():
    from .gausscm import cov_from_json
    return cov_from_json(raw("gmono8x8"), "gmono8x8")


def ff_theta(theta: float) -> np.ndarray:
    """Member of the Fawzi-Fawzi family, with the parameter range read from the fixture."""
    from .recovery import fawzi_fawzi_state
    d = raw("ff_theta")
    if not d["min"] <= theta <= d["max"] + 1e-12:
        raise ValidationError(f"theta={theta} outside [{d['min']}, {d['max']}]")
    return fawzi_fawzi_state(theta)


def load(name: str):
    """Parsed fixture by name (``ff_theta`` returns its generator)."""
    return {"povm_0402": povm_0402, "gmono8x8": gmono8x8, "ff_theta": lambda: ff_theta}[path(name).stem]()


def povm_0402_policy(rho0, rho1):
    """Adaptive preparation: keep (ρ₀, ρ₁) for the third copy only after two
    outcomes with index 1, otherwise swap."""
    return lambda h: (rho0, rho1) if len(h) < 2 or h == (1, 1) else (rho1, rho0)
