"""Run configuration, field checkpoints, CSV emission, and run manifests.

Checkpoint layout (little endian, no padding):

    magic   8 bytes  b"CKNFLD01"
    version uint32
    d       int32
    p       float64
    mode    uint8    0 = probability, 1 = surface
    L       float64
    n_s     int32
    n_phi   int32
    values  n_s * n_phi float64, C order (s-major)
    crc     uint32   zlib.crc32 of everything above

Round trips are bitwise exact.  CSV files start with '#' comment lines
carrying the run id, a parameter echo and a format version; floats are
written with repr so parsing them back returns identical doubles.
"""

from __future__ import annotations

import dataclasses
import json
import os
import struct
import zlib
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import CheckpointError, ConfigError
from .model import CylinderGrid, Field, ProblemParams, build_grid, theta_critical

MAGIC = b"CKNFLD01"
CHECKPOINT_VERSION = 1
CSV_FORMAT = "ckn-csv-1"
_HEADER = struct.Struct("<IidBdii")


def _atomic_write(path: Path, data: bytes):
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_bytes(data)
    os.replace(tmp, path)


def save_field(path, u: Field) -> None:
    g = u.grid
    mode = 0 if g.measure_mode == "probability" else 1
    head = MAGIC + _HEADER.pack(CHECKPOINT_VERSION, g.d, g.p, mode, g.L, g.n_s, g.n_phi)
    body = np.ascontiguousarray(u.values, dtype="<f8").tobytes()
    payload = head + body
    crc = struct.pack("<I", zlib.crc32(payload) & 0xFFFFFFFF)
    _atomic_write(Path(path), payload + crc)


def load_field(path, grid: CylinderGrid | None = None) -> Field:
    raw = Path(path).read_bytes()
    if len(raw) < len(MAGIC) + _HEADER.size + 4:
        raise CheckpointError(f"{path}: truncated checkpoint")
    if raw[: len(MAGIC)] != MAGIC:
        raise CheckpointError(f"{path}: bad magic {raw[:8]!r}")
    crc_stored = struct.unpack("<I", raw[-4:])[0]
    if zlib.crc32(raw[:-4]) & 0xFFFFFFFF != crc_stored:
        raise CheckpointError(f"{path}: checksum mismatch")
    version, d, p, mode, L, n_s, n_phi = _HEADER.unpack_from(raw, len(MAGIC))
    if version != CHECKPOINT_VERSION:
        raise CheckpointError(f"{path}: unsupported version {version}")
    body = raw[len(MAGIC) + _HEADER.size:-4]
    values = np.frombuffer(body, dtype="<f8").reshape(n_s, n_phi).copy()
    if grid is None:
        mode_name = "probability" if mode == 0 else "surface"
        grid = build_grid(L, n_s, n_phi, ProblemParams(d, p, 1.0, mode_name))
    else:
        if (grid.n_s, grid.n_phi) != (n_s, n_phi) or grid.d != d:
            raise CheckpointError(f"{path}: checkpoint does not match the supplied grid")
    return Field(grid, values)


class FieldStore:
    """Directory of numbered field checkpoints with deterministic ids."""

    def __init__(self, directory):
        self.dir = Path(directory)
        self.dir.mkdir(parents=True, exist_ok=True)
        self._counter = 0

    def save(self, u: Field) -> str:
        cid = f"cp_{self._counter:05d}"
        self._counter += 1
        save_field(self.dir / f"{cid}.ckn", u)
        return cid

    def load(self, cid: str, grid: CylinderGrid | None = None) -> Field:
        path = self.dir / f"{cid}.ckn"
        if not path.exists():
            raise CheckpointError(f"checkpoint {cid} not found in {self.dir}")
        return load_field(path, grid)


@dataclass
class RunConfig:
    """All knobs of one reproducible run; round-trips through JSON."""

    d: int = 5
    p: float = 2.8
    theta_list: list = field(default_factory=lambda: [0.72, 0.75, 0.8, 0.85, 0.9, 0.95, 1.0])
    measure_mode: str = "surface"
    L: float | None = None
    n_s: int = 400
    n_phi: int = 48
    mu0_factor: float = 1.2
    eps: float = 0.05
    eta: float | None = None
    kappa_stop: float | None = None
    mu_min_factor: float = 0.1
    tol: float = 1e-10
    eigen_tol: float = 1e-9
    out: str = "ckn_out"
    run_id: str = "ckn-run"

    def __post_init__(self):
        if self.d < 3:
            raise ConfigError(f"d must be >= 3, got {self.d}")
        if not 2.0 < self.p < 2.0 * self.d / (self.d - 2.0):
            raise ConfigError(f"p={self.p} outside (2, 2d/(d-2))")
        tc = theta_critical(self.p, self.d)
        for th in self.theta_list:
            if not tc - 1e-12 <= th <= 1.0 + 1e-12:
                raise ConfigError(f"theta={th} outside [{tc}, 1]")
        for name in ("n_s", "n_phi", "mu0_factor", "eps", "mu_min_factor", "tol", "eigen_tol"):
            if getattr(self, name) <= 0:
                raise ConfigError(f"{name} must be positive")
        for name in ("L", "eta", "kappa_stop"):
            v = getattr(self, name)
            if v is not None and v <= 0:
                raise ConfigError(f"{name} must be positive when given")
        if self.measure_mode not in ("probability", "surface"):
            raise ConfigError(f"unknown measure_mode {self.measure_mode}")

    def params(self, theta: float = 1.0) -> ProblemParams:
        return ProblemParams(self.d, self.p, theta, self.measure_mode)

    def half_length(self, mu_min: float) -> float:
        """Truncation policy: 12/sqrt(mu_min), floored at 8."""
        if self.L is not None:
            return self.L
        return max(8.0, 12.0 / np.sqrt(mu_min))

    def to_json(self) -> str:
        return json.dumps(dataclasses.asdict(self), indent=2, sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "RunConfig":
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config is not valid JSON: {exc}") from exc
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        return cls(**data)

    @classmethod
    def load(cls, path) -> "RunConfig":
        return cls.from_json(Path(path).read_text())


def _fmt(x) -> str:
    if isinstance(x, float):
        return repr(float(x))
    return str(x)


def write_csv(path, comments: list[str], header: list[str], rows) -> None:
    lines = [f"# {c}" for c in comments]
    lines.append(f"# format: {CSV_FORMAT}")
    lines.append(",".join(header))
    for row in rows:
        lines.append(",".join(_fmt(x) for x in row))
    _atomic_write(Path(path), ("\n".join(lines) + "\n").encode())


def read_csv(path):
    """Parse a ckn CSV back into (comments, header, rows of floats/strings)."""
    comments, header, rows = [], None, []
    for line in Path(path).read_text().splitlines():
        if not line:
            continue
        if line.startswith("#"):
            comments.append(line[1:].strip())
            continue
        cells = line.split(",")
        if header is None:
            header = cells
            continue
        parsed = []
        for c in cells:
            try:
                parsed.append(float(c))
            except ValueError:
                parsed.append(c)
        rows.append(parsed)
    return comments, header, rows


def config_echo(config: RunConfig) -> list[str]:
    return [
        f"run_id: {config.run_id}",
        f"params: d={config.d} p={config.p} measure_mode={config.measure_mode} "
        f"n_s={config.n_s} n_phi={config.n_phi}",
    ]


def write_manifest(path, config: RunConfig, extra: dict) -> None:
    import scipy

    payload = {
        "config": dataclasses.asdict(config),
        "versions": {
            "ckn": "0.1.0",
            "numpy": np.__version__,
            "scipy": scipy.__version__,
        },
    }
    payload.update(extra)
    _atomic_write(Path(path), json.dumps(payload, indent=2, sort_keys=True).encode())
