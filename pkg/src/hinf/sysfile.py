"""JSON system files and CSV singular-value tables.

A system file is a JSON object::

    {"kind": "centered" | "descriptor",
     "z0": [re, im], "alpha": [re, im],         # centered only
     "E": ..., "A": ..., "B": ..., "C": ..., "D": ...,
     "partition": {"m1": .., "m2": .., "p1": .., "p2": ..}}   # optional

Matrix entries are ``[re, im]`` pairs; bare real numbers are accepted on
load.  Files are written with pairs and shortest round-trip floats.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Optional, Union

import numpy as np

from .errors import CenterMismatch, DimensionMismatch, InputError
from .realization import CenteredRealization, DescriptorRealization, PartitionedPlant

__all__ = ["SystemFile", "load_system", "save_system", "dumps_system", "parse_system",
           "write_sigma_csv", "format_sigma_csv", "parse_complex", "fixture_path"]

_MATRICES = ("E", "A", "B", "C", "D")


class SchemaError(InputError):
    """Malformed system file."""


@dataclass(frozen=True, eq=False)
class SystemFile:
    system: Union[CenteredRealization, DescriptorRealization]
    partition: Optional[dict] = None

    @property
    def kind(self) -> str:
        return "centered" if isinstance(self.system, CenteredRealization) else "descriptor"

    def plant(self) -> PartitionedPlant:
        if self.partition is None:
            raise SchemaError("system file has no partition")
        if not isinstance(self.system, CenteredRealization):
            raise SchemaError("a partitioned plant must be a centered realization")
        p = self.partition
        return PartitionedPlant(self.system, p["m1"], p["m2"], p["p1"], p["p2"])


def parse_complex(value) -> complex:
    if isinstance(value, bool):
        raise SchemaError(f"not a number: {value!r}")
    if isinstance(value, (int, float)):
        return complex(float(value), 0.0)
    if (isinstance(value, list) and len(value) == 2
            and all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in value)):
        return complex(float(value[0]), float(value[1]))
    raise SchemaError(f"expected a number or [re, im] pair, got {value!r}")


def fixture_path(name: str) -> Path:
    """Path of a bundled data file, e.g. ``fixture_path("f16.json")``."""
    return Path(str(resources.files("hinf") / "data" / name))


def _parse_matrix(obj, name):
    if not isinstance(obj, list):
        raise SchemaError(f"{name} must be a list of rows")
    if not obj:
        return np.zeros((0, 0), dtype=complex)
    if not all(isinstance(r, list) for r in obj):
        raise SchemaError(f"{name} must be a list of rows")
    rows = [[parse_complex(v) for v in r] for r in obj]
    widths = {len(r) for r in rows}
    if len(widths) != 1:
        raise SchemaError(f"{name} has ragged rows")
    return np.array(rows, dtype=complex).reshape(len(rows), widths.pop())


def _fit(M, rows, cols, name):
    if M.size == 0 and (rows == 0 or cols == 0):
        return np.zeros((rows, cols), dtype=complex)
    if M.shape != (rows, cols):
        raise DimensionMismatch(f"{name} has shape {M.shape}, expected {(rows, cols)}")
    return M


def parse_system(obj: dict) -> SystemFile:
    if not isinstance(obj, dict):
        raise SchemaError("system file must be a JSON object")
    kind = obj.get("kind")
    if kind not in ("centered", "descriptor"):
        raise SchemaError(f"kind must be 'centered' or 'descriptor', got {kind!r}")
    missing = [k for k in _MATRICES if k not in obj]
    if missing:
        raise SchemaError(f"missing matrices: {', '.join(missing)}")
    mats = {k: _parse_matrix(obj[k], k) for k in _MATRICES}
    D = mats["D"]
    if D.size == 0 and D.shape == (0, 0):
        raise SchemaError("D must not be empty")
    p, m = D.shape
    n = mats["A"].shape[0] if mats["A"].size else 0
    A = _fit(mats["A"], n, n, "A")
    E = _fit(mats["E"], n, n, "E")
    B = _fit(mats["B"], n, m, "B")
    C = _fit(mats["C"], p, n, "C")
    if kind == "descriptor":
        system = DescriptorRealization(A, E, B, C, D)
    else:
        if "alpha" not in obj:
            raise SchemaError("centered file needs alpha")
        alpha = parse_complex(obj["alpha"])
        if "z0" in obj:
            z0 = parse_complex(obj["z0"])
            if abs(z0 - alpha * alpha) > 1e-12 * max(1.0, abs(z0)):
                raise CenterMismatch("z0 must equal alpha**2")
        system = CenteredRealization(A, E, B, C, D, alpha)
    partition = obj.get("partition")
    if partition is not None:
        if not isinstance(partition, dict) or set(partition) != {"m1", "m2", "p1", "p2"}:
            raise SchemaError("partition must have keys m1, m2, p1, p2")
        if not all(isinstance(v, int) and not isinstance(v, bool) and v >= 0
                   for v in partition.values()):
            raise SchemaError("partition widths must be nonnegative integers")
        if partition["m1"] + partition["m2"] != m or partition["p1"] + partition["p2"] != p:
            raise DimensionMismatch("partition widths do not add up to the system size")
        partition = {k: partition[k] for k in ("m1", "m2", "p1", "p2")}
    return SystemFile(system, partition)


def load_system(path) -> SystemFile:
    try:
        obj = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise SchemaError(f"{path}: invalid JSON ({exc})") from exc
    except OSError as exc:
        raise SchemaError(f"{path}: {exc.strerror}") from exc
    return parse_system(obj)


def _pair(z):
    z = complex(z)
    # adding 0.0 turns -0.0 into 0.0
    return [float(z.real) + 0.0, float(z.imag) + 0.0]


def _encode(M):
    return [[_pair(v) for v in row] for row in np.asarray(M)]


def _to_obj(sf: SystemFile) -> dict:
    s = sf.system
    obj = {"kind": sf.kind}
    if isinstance(s, CenteredRealization):
        obj["z0"] = _pair(s.z0)
        obj["alpha"] = _pair(s.alpha)
    for k in _MATRICES:
        obj[k] = _encode(getattr(s, k))
    if sf.partition is not None:
        obj["partition"] = dict(sf.partition)
    return obj


def dumps_system(sf: SystemFile) -> str:
    return json.dumps(_to_obj(sf), separators=(", ", ": ")) + "\n"


def save_system(sf: SystemFile, path) -> None:
    Path(path).write_text(dumps_system(sf))


def format_sigma_csv(theta, sigma) -> str:
    sigma = np.asarray(sigma)
    k = sigma.shape[1] if sigma.ndim == 2 else 0
    lines = [",".join(["theta"] + [f"sigma_{i + 1}" for i in range(k)])]
    for t, row in zip(theta, sigma):
        lines.append(",".join(f"{v:.9g}" for v in (t, *row)))
    return "\n".join(lines) + "\n"


def write_sigma_csv(theta, sigma, path) -> None:
    with open(path, "w", newline="\n") as fh:
        fh.write(format_sigma_csv(theta, sigma))
