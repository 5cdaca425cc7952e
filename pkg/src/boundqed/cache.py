"""On-disk cache of solved Dirac channels, keyed by a hash of every input."""
from __future__ import annotations

import hashlib
import json
import os
import tempfile
from pathlib import Path

import numpy as np

from .constants import ALPHA, CONSTANTS_VERSION
from .spectrum import Channel, DiracBasis

FORMAT_VERSION = 1


def channel_key(basis: DiracBasis, Z: float, kappa: int) -> str:
    lb = basis.large
    payload = {
        "format": FORMAT_VERSION,
        "constants": CONSTANTS_VERSION,
        "alpha": ALPHA.hex(),
        "Z": float(Z).hex(),
        "kappa": int(kappa),
        "N": lb.n_points,
        "k": lb.order,
        "R": lb.radius.hex(),
        "scheme": lb.scheme,
        "quad": lb.quad_order,
        "breakpoints": [float(x).hex() for x in lb.breakpoints],
    }
    blob = json.dumps(payload, sort_keys=True).encode()
    return hashlib.sha256(blob).hexdigest()[:32]


class SpectrumCache:
    """Directory of ``<key>.npz`` files, one per (Z, kappa, basis)."""

    def __init__(self, directory):
        self.directory = Path(directory)
        self.directory.mkdir(parents=True, exist_ok=True)
        self.hits = 0
        self.misses = 0

    def path(self, basis: DiracBasis, Z: float, kappa: int) -> Path:
        return self.directory / f"{channel_key(basis, Z, kappa)}.npz"

    def get(self, basis: DiracBasis, Z: float, kappa: int) -> Channel | None:
        path = self.path(basis, Z, kappa)
        if not path.exists():
            self.misses += 1
            return None
        with np.load(path, allow_pickle=False) as data:
            if int(data["version"]) != FORMAT_VERSION or str(data["key"]) != path.stem:
                self.misses += 1
                return None
            ch = Channel(int(data["kappa"]), float(data["Z"]), data["energies"].copy(),
                         data["p_coef"].copy(), data["q_coef"].copy(), basis)
        self.hits += 1
        return ch

    def put(self, ch: Channel) -> Path:
        path = self.path(ch.basis, ch.Z, ch.kappa)
        fd, tmp = tempfile.mkstemp(dir=self.directory, suffix=".npz")
        os.close(fd)
        with open(tmp, "wb") as fh:
            np.savez(fh, version=FORMAT_VERSION, key=path.stem, kappa=ch.kappa, Z=ch.Z,
                     energies=ch.energies, p_coef=ch.p_coef, q_coef=ch.q_coef)
        os.replace(tmp, path)
        return path
