"""Field snapshots, run configuration files, trajectories and manifests.

Snapshot layout: an ASCII header of ``key value`` lines closed by ``end``,
followed by raw 64-bit floats, component-major with x1 varying fastest.
The header carries a SHA-256 digest of the payload.
"""
from __future__ import annotations

import hashlib
import json
import os
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .grid import Grid

MAGIC = "WNSLAB-FIELD 1"
_ENDIAN = {"little": "<f8", "big": ">f8"}


class FieldFormatError(ValueError):
    """Malformed, truncated or corrupted snapshot file."""


@dataclass
class LoadedField:
    data: np.ndarray
    grid: Grid
    params: dict = field(default_factory=dict)
    digest: str = ""


def sha256_file(path: str | os.PathLike) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def _payload(u: np.ndarray, endian: str) -> bytes:
    # (c, i1, i2, i3) -> x1 fastest: reverse the spatial axes before a C-order dump
    flipped = np.ascontiguousarray(np.transpose(u, (0, 3, 2, 1)), dtype=_ENDIAN[endian])
    return flipped.tobytes()


def save_field(path: str | os.PathLike, u: np.ndarray, grid: Grid, params: dict | None = None,
               endian: str = "little") -> str:
    """Write a snapshot and return the payload digest."""
    if endian not in _ENDIAN:
        raise ValueError(f"endian must be 'little' or 'big', got {endian!r}")
    u = np.asarray(u, dtype=float)
    if u.ndim == 3:
        u = u[None]
    if u.shape[1:] != grid.shape:
        raise ValueError(f"field shape {u.shape} does not match grid {grid.shape}")
    payload = _payload(u, endian)
    digest = hashlib.sha256(payload).hexdigest()
    header = "\n".join([
        MAGIC,
        f"n {grid.n}",
        f"box_length {grid.box_length!r}",
        f"components {u.shape[0]}",
        f"endian {endian}",
        "dtype float64",
        f"params {json.dumps(params or {}, sort_keys=True)}",
        f"sha256 {digest}",
        "end",
        "",
    ])
    with open(path, "wb") as fh:
        fh.write(header.encode("ascii"))
        fh.write(payload)
    return digest


def load_field(path: str | os.PathLike) -> LoadedField:
    """Read a snapshot, verifying size and digest; data comes back in native byte order."""
    raw = Path(path).read_bytes()
    marker = b"\nend\n"
    cut = raw.find(marker)
    if not raw.startswith(MAGIC.encode()) or cut < 0:
        raise FieldFormatError(f"{path}: missing or malformed header")
    lines = raw[:cut].decode("ascii", errors="replace").split("\n")[1:]
    head = {}
    for line in lines:
        key, _, value = line.partition(" ")
        head[key] = value
    try:
        n = int(head["n"])
        box_length = float(head["box_length"])
        comps = int(head["components"])
        endian = head["endian"]
        dtype = head["dtype"]
        params = json.loads(head.get("params", "{}"))
        digest = head["sha256"]
    except (KeyError, ValueError) as exc:
        raise FieldFormatError(f"{path}: bad header field ({exc})") from exc
    if endian not in _ENDIAN or dtype != "float64":
        raise FieldFormatError(f"{path}: unsupported encoding {endian}/{dtype}")
    payload = raw[cut + len(marker):]
    expected = comps * n ** 3 * 8
    if len(payload) != expected:
        raise FieldFormatError(f"{path}: payload has {len(payload)} bytes, header promises {expected} (truncated?)")
    if hashlib.sha256(payload).hexdigest() != digest:
        raise FieldFormatError(f"{path}: digest mismatch")
    flat = np.frombuffer(payload, dtype=_ENDIAN[endian]).astype(np.float64)
    data = np.ascontiguousarray(np.transpose(flat.reshape(comps, n, n, n), (0, 3, 2, 1)))
    return LoadedField(data, Grid(n, box_length), params, digest)


# ---------------------------------------------------------------------------
# configuration

DEFAULTS: dict[str, object] = {
    # discretization
    "n": 32,
    "box_length": 16.0,
    # mollifier and time stepping
    "epsilon": 0.5,
    "alpha": 0.5,
    "dt": 1e-3,
    "t_end": 0.05,
    "snapshot_stride": 1,
    "dealias": True,
    "nonlinear": True,
    "seed": 0,
    # initial data (used when no --u0 file is given)
    "field": "bump",
    "amplitude": 1.0,
    "sigma": 1.5,
    "offset": 0.0,
    "decay": 0.6,
    # split
    "p": 4.0,
    "gamma": 1.0,
    "r": 6.0,
    "eta": 0.1,
    # constants of the existence bounds
    "C0": 1.0,
    "C1": 1.0,
    "C2": 1.0,
    "horizon": 1.0,
    # convergence study
    "n_levels": 4,
    # tolerances
    "tol_div": 1e-8,
    "tol_duhamel": 1e-4,
    "tol_v_residual": 1e-3,
    "tol_energy": 0.01,
    "tol_rescale": 1e-3,
    "rescale_lambda": 0.5,
}


def _coerce(value: str):
    low = value.lower()
    if low in ("true", "yes", "on"):
        return True
    if low in ("false", "no", "off"):
        return False
    for cast in (int, float):
        try:
            return cast(value)
        except ValueError:
            pass
    return value


def parse_config(text: str, strict: bool = True) -> dict:
    """Parse ``key = value`` lines (``#`` starts a comment) over the defaults."""
    cfg = dict(DEFAULTS)
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        if not sep:
            raise ValueError(f"line {lineno}: expected key=value, got {line!r}")
        key, value = key.strip(), value.strip()
        if strict and key not in DEFAULTS and key != "u0":
            raise ValueError(f"line {lineno}: unknown key {key!r}")
        val = _coerce(value)
        default = DEFAULTS.get(key)
        if isinstance(default, float) and isinstance(val, int) and not isinstance(val, bool):
            val = float(val)
        cfg[key] = val
    return cfg


def load_config(path: str | os.PathLike, strict: bool = True) -> dict:
    return parse_config(Path(path).read_text(), strict)


def format_config(cfg: dict) -> str:
    return "".join(f"{k} = {v!r}\n" if isinstance(v, float) else f"{k} = {v}\n" for k, v in cfg.items())


# ---------------------------------------------------------------------------
# trajectories


def save_trajectory(directory: str | os.PathLike, traj, extra_meta: dict | None = None) -> dict[str, str]:
    """Numbered snapshots, a diagnostics CSV and trajectory.json; returns file digests."""
    from .weighted import NormReport, append_norm_rows

    d = Path(directory)
    d.mkdir(parents=True, exist_ok=True)
    digests = {}
    csv_path = d / "diagnostics.csv"
    if csv_path.exists():
        csv_path.unlink()
    scalars = []
    for i, (t, u, diag) in enumerate(zip(traj.times, traj.snapshots, traj.diagnostics)):
        name = f"snap_{i:04d}.field"
        digests[name] = save_field(d / name, u, traj.grid, {"time": float(t), "index": i})
        append_norm_rows(csv_path, t, [v for v in diag.values() if isinstance(v, NormReport)])
        scalars.append({k: float(v) for k, v in diag.items() if not isinstance(v, NormReport)})
    meta = {
        "times": [float(t) for t in traj.times],
        "blowup": traj.blowup,
        "last_valid_time": traj.last_valid_time,
        "meta": dict(traj.meta, **(extra_meta or {})),
        "scalars": scalars,
        "n": traj.grid.n,
        "box_length": traj.grid.box_length,
    }
    (d / "trajectory.json").write_text(json.dumps(meta, indent=1, sort_keys=True))
    digests["diagnostics.csv"] = sha256_file(csv_path)
    digests["trajectory.json"] = sha256_file(d / "trajectory.json")
    return digests


def load_trajectory(directory: str | os.PathLike):
    from .mollified import Trajectory
    from .weighted import NormReport, read_norm_rows

    d = Path(directory)
    meta = json.loads((d / "trajectory.json").read_text())
    grid = Grid(meta["n"], meta["box_length"])
    snaps = [load_field(d / f"snap_{i:04d}.field").data for i in range(len(meta["times"]))]
    names = {(0.0, 2.0): "l2", (2.0, 2.0): "l2_phi2", (4.0, 2.0): "l2_phi4"}
    diags: list[dict] = [dict(s) for s in meta["scalars"]]
    times = np.array(meta["times"])
    for row in read_norm_rows(d / "diagnostics.csv"):
        i = int(np.argmin(np.abs(times - row["time"])))
        key = "linf" if np.isinf(row["p_or_s"]) else names.get((row["gamma"], row["p_or_s"]))
        if key:
            diags[i][key] = NormReport(row["value"], row["p_or_s"], row["gamma"], row["kind"])
    return Trajectory(times, snaps, diags, grid, meta["blowup"], meta["last_valid_time"], meta["meta"])


def write_manifest(path: str | os.PathLike, config: dict, inputs: dict[str, str], outputs: dict[str, str],
                   wall_time: float, extra: dict | None = None) -> None:
    from . import __version__
    from .grid import worker_count

    manifest = {
        "config": config,
        "code_version": __version__,
        "workers": worker_count(),
        "wall_time": wall_time,
        "inputs": inputs,
        "outputs": outputs,
    }
    if extra:
        manifest.update(extra)
    Path(path).write_text(json.dumps(manifest, indent=1, sort_keys=True, default=str))
