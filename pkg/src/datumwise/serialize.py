"""Deterministic on-disk model container.

Layout: magic ``DWZ1``, a u32 format version, a length-prefixed JSON header
(kind, dimensions, label/category names, vocabulary), then length-prefixed
little-endian float64 arrays (weights, scaler bounds or idf).  Nothing
time- or environment-dependent is written, so saving the same model twice
produces byte-identical files.  A JSON sidecar ``<path>.json`` records the
training configuration for provenance.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .data import FeatureScaler
from .errors import DatasetError
from .feature_mdp import constrained_layout, unconstrained_layout
from .mdp import LinearPolicy
from .text_mdp import text_layout

_MAGIC = b"DWZ1"
_VERSION = 1


@dataclass(frozen=True)
class ModelBundle:
    """A trained policy plus everything needed to apply it to raw data."""

    policy: LinearPolicy
    kind: str  # "feature" or "text"
    n_features: int
    n_classes: int
    constrained: bool = False
    scaler: FeatureScaler | None = None
    label_names: tuple[str, ...] = ()
    mode: str = ""
    vocabulary: tuple[str, ...] = ()
    idf: np.ndarray | None = None
    category_names: tuple[str, ...] = ()


def _write_array(handle, name: str, arr: np.ndarray) -> None:
    data = np.ascontiguousarray(arr, dtype=np.float64).tobytes()
    name_b = name.encode("utf-8")
    handle.write(struct.pack("<H", len(name_b)))
    handle.write(name_b)
    handle.write(struct.pack("<Q", len(data) // 8))
    handle.write(data)


def _read_array(handle) -> tuple[str, np.ndarray]:
    (name_len,) = struct.unpack("<H", handle.read(2))
    name = handle.read(name_len).decode("utf-8")
    (count,) = struct.unpack("<Q", handle.read(8))
    arr = np.frombuffer(handle.read(count * 8), dtype="<f8").copy()
    return name, arr


def save_model(path: str | Path, bundle: ModelBundle, config: dict | None = None) -> None:
    header = {
        "kind": bundle.kind,
        "n_features": bundle.n_features,
        "n_classes": bundle.n_classes,
        "constrained": bundle.constrained,
        "block_dim": bundle.policy.block_dim,
        "label_names": list(bundle.label_names),
        "mode": bundle.mode,
        "vocabulary": list(bundle.vocabulary),
        "category_names": list(bundle.category_names),
    }
    header_b = json.dumps(header, sort_keys=True).encode("utf-8")
    arrays: list[tuple[str, np.ndarray]] = [("theta", bundle.policy.theta)]
    if bundle.scaler is not None:
        arrays.append(("scaler_lo", bundle.scaler.lo))
        arrays.append(("scaler_hi", bundle.scaler.hi))
    if bundle.idf is not None:
        arrays.append(("idf", bundle.idf))
    with open(path, "wb") as handle:
        handle.write(_MAGIC)
        handle.write(struct.pack("<I", _VERSION))
        handle.write(struct.pack("<Q", len(header_b)))
        handle.write(header_b)
        handle.write(struct.pack("<I", len(arrays)))
        for name, arr in arrays:
            _write_array(handle, name, arr)
    if config is not None:
        sidecar = Path(str(path) + ".json")
        sidecar.write_text(
            json.dumps(config, sort_keys=True, indent=2) + "\n", encoding="utf-8"
        )


def load_model(path: str | Path) -> ModelBundle:
    with open(path, "rb") as handle:
        magic = handle.read(4)
        if magic != _MAGIC:
            raise DatasetError(f"{path}: not a model file (bad magic {magic!r})")
        (version,) = struct.unpack("<I", handle.read(4))
        if version != _VERSION:
            raise DatasetError(f"{path}: unsupported model format version {version}")
        (header_len,) = struct.unpack("<Q", handle.read(8))
        header = json.loads(handle.read(header_len).decode("utf-8"))
        (n_arrays,) = struct.unpack("<I", handle.read(4))
        arrays = dict(_read_array(handle) for _ in range(n_arrays))

    kind = header["kind"]
    n = int(header["n_features"])
    c = int(header["n_classes"])
    if kind == "feature":
        layout = (
            constrained_layout(n, c) if header["constrained"] else unconstrained_layout(n, c)
        )
    elif kind == "text":
        layout = text_layout(n, c)
    else:
        raise DatasetError(f"{path}: unknown model kind {kind!r}")
    policy = LinearPolicy(theta=arrays["theta"], layout=layout)
    scaler = None
    if "scaler_lo" in arrays:
        scaler = FeatureScaler(lo=arrays["scaler_lo"], hi=arrays["scaler_hi"])
    return ModelBundle(
        policy=policy,
        kind=kind,
        n_features=n,
        n_classes=c,
        constrained=bool(header["constrained"]),
        scaler=scaler,
        label_names=tuple(header.get("label_names", ())),
        mode=header.get("mode", ""),
        vocabulary=tuple(header.get("vocabulary", ())),
        idf=arrays.get("idf"),
        category_names=tuple(header.get("category_names", ())),
    )
