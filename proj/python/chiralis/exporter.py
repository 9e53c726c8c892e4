# Copyright 2026 The Chiralis Authors
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#     http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.


"""File-level interface for external view-feature exporters.

An exporter renders a mesh from the views of a camera manifest, extracts image
features for every view and for its horizontally flipped image, and writes two
view-maps containers plus a sidecar manifest. The model-backed extraction is
not part of this package; these helpers define and validate the files it must
produce so that ``chiralis aggregate`` can consume them.
"""

from __future__ import annotations

import dataclasses
import json
import os
import struct
import zlib
from pathlib import Path
from typing import Sequence

import numpy as np

MAGIC = b"CFV1"
VERSION = 1
KIND_VIEW_MAPS = 1
KIND_VERTEX_FEATURES = 2


@dataclasses.dataclass
class ExportJob:
    mesh: Path
    prompt: str
    camera_manifest: Path
    models: Sequence[str]
    output_dir: Path


def _encode(kind: int, array: np.ndarray) -> bytes:
    data = np.ascontiguousarray(array, dtype="<f4")
    body = MAGIC + struct.pack("<IB3x", VERSION, kind) + struct.pack(f"<{data.ndim}I", *data.shape)
    body += data.tobytes()
    return body + struct.pack("<I", zlib.crc32(body))


def write_view_maps(path: os.PathLike, maps: np.ndarray) -> None:
    """Write an (N, H, W, C) float array. Background pixels must be exactly zero."""
    maps = np.asarray(maps)
    if maps.ndim != 4 or 0 in maps.shape:
        raise ValueError(f"view maps must be a non-empty (N, H, W, C) array, got shape {maps.shape}")
    if not np.all(np.isfinite(maps)):
        raise ValueError("view maps contain non-finite values")
    Path(path).write_bytes(_encode(KIND_VIEW_MAPS, maps))


def read_container(path: os.PathLike) -> np.ndarray:
    data = Path(path).read_bytes()
    if len(data) < 16 or data[:4] != MAGIC:
        raise ValueError(f"{path}: not a feature container")
    version, kind = struct.unpack_from("<IB", data, 4)
    if version != VERSION:
        raise ValueError(f"{path}: unsupported version {version}")
    ndim = {KIND_VIEW_MAPS: 4, KIND_VERTEX_FEATURES: 2}.get(kind)
    if ndim is None:
        raise ValueError(f"{path}: unknown kind {kind}")
    header = 12 + 4 * ndim
    if len(data) < header + 4:
        raise ValueError(f"{path}: size mismatch")
    dims = struct.unpack_from(f"<{ndim}I", data, 12)
    if len(data) != header + 4 * int(np.prod(dims)) + 4:
        raise ValueError(f"{path}: size mismatch")
    (stored,) = struct.unpack_from("<I", data, len(data) - 4)
    if stored != zlib.crc32(data[:-4]):
        raise ValueError(f"{path}: checksum mismatch")
    return np.frombuffer(data, dtype="<f4", count=int(np.prod(dims)), offset=header).reshape(dims)


def write_view_maps_manifest(path: os.PathLike, shape_id: str, camera_manifest: os.PathLike, provenance: str,
                             channel_groups: Sequence[int] = ()) -> None:
    """Sidecar for a pair of view-maps containers.

    ``channel_groups`` lists the per-model channel widths in container order;
    ``chiralis aggregate --maps-manifest`` normalises and concatenates them.
    """
    path = Path(path)
    doc = {
        "format": "chiralis-view-maps",
        "version": 1,
        "shape_id": shape_id,
        "camera_manifest": Path(os.path.relpath(Path(camera_manifest).resolve(), path.resolve().parent)).as_posix(),
        "provenance": provenance,
    }
    if channel_groups:
        doc["channel_groups"] = [int(c) for c in channel_groups]
    path.write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")


def read_camera_manifest(path: os.PathLike) -> list[dict]:
    doc = json.loads(Path(path).read_text())
    if doc.get("format") != "chiralis-cameras":
        raise ValueError(f"{path}: not a camera manifest")
    return doc["views"]


def mask_agreement(original: np.ndarray, flipped_images: np.ndarray) -> float:
    """Fraction of pixels whose foreground state matches after flipping the second set back."""
    a = np.any(np.asarray(original) != 0, axis=-1)
    b = np.any(np.asarray(flipped_images)[:, :, ::-1, :] != 0, axis=-1)
    return float(np.mean(a == b))


def export_features(job: ExportJob) -> None:
    raise NotImplementedError("feature extraction needs an external diffusion/DINO runtime; write the containers "
                              "with write_view_maps and write_view_maps_manifest")
