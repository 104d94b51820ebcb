"""Checkpoint manifests and the deterministic weight-blob format.

A checkpoint is a directory holding one binary blob per parameter group
(encoder, heads, projection, LM base, LM adapters) plus a `manifest.txt`
key/value file recording the stage, blob paths, content digests, and a full
config snapshot. Blob bytes are a pure function of the weights: named
tensors in sorted order, little-endian, no timestamps. Loading verifies
every digest, so two runs with the same seed produce byte-identical
checkpoints and a corrupted blob is rejected.

Blob layout: magic "RVLMW001", then per tensor (sorted by name):
  u32 name length, name utf-8, u32 dtype-string length, dtype string,
  u32 ndim, u64 per dimension, raw C-order little-endian payload.

Manifest lines are `key=value`, one per line; `weights.<role>` and
`digest.<role>` pairs name the blobs, `config.<section>.<key>` lines hold
the snapshot.
"""

from __future__ import annotations

import hashlib
import struct
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, Iterable, Mapping, Optional, Tuple

import numpy as np
import torch

from ..model.adapters import (
    AdapterSpec,
    attach_adapters,
    named_adapter_parameters,
    named_base_parameters,
)
from ..model.encoder import TinyVisionEncoder
from ..model.heads import ClassificationHeads
from ..model.lm import TinyCausalLM
from ..model.projection import VisualProjection
from .config import ArchConfig

MAGIC = b"RVLMW001"
MANIFEST_NAME = "manifest.txt"
MANIFEST_FORMAT = "refvlm-checkpoint-v1"


class CheckpointError(ValueError):
    pass


class DigestMismatchError(CheckpointError):
    pass


class MissingFileError(CheckpointError):
    pass


def _tensor_items(tensors: Mapping[str, "torch.Tensor | np.ndarray"]) -> Iterable[Tuple[str, np.ndarray]]:
    for name in sorted(tensors):
        value = tensors[name]
        if isinstance(value, torch.Tensor):
            value = value.detach().cpu().numpy()
        yield name, np.ascontiguousarray(value)


def serialize_tensors(tensors: Mapping[str, "torch.Tensor | np.ndarray"]) -> bytes:
    out = bytearray(MAGIC)
    for name, arr in _tensor_items(tensors):
        name_b = name.encode("utf-8")
        dtype_b = arr.dtype.str.encode("ascii")  # e.g. "<f8"
        out += struct.pack("<I", len(name_b)) + name_b
        out += struct.pack("<I", len(dtype_b)) + dtype_b
        out += struct.pack("<I", arr.ndim)
        for dim in arr.shape:
            out += struct.pack("<Q", dim)
        out += arr.tobytes(order="C")
    return bytes(out)


def deserialize_tensors(data: bytes) -> Dict[str, np.ndarray]:
    if data[: len(MAGIC)] != MAGIC:
        raise CheckpointError("not a weight blob: bad magic")
    pos = len(MAGIC)
    out: Dict[str, np.ndarray] = {}
    view = memoryview(data)
    while pos < len(data):
        (name_len,) = struct.unpack_from("<I", view, pos)
        pos += 4
        name = bytes(view[pos : pos + name_len]).decode("utf-8")
        pos += name_len
        (dtype_len,) = struct.unpack_from("<I", view, pos)
        pos += 4
        dtype = np.dtype(bytes(view[pos : pos + dtype_len]).decode("ascii"))
        pos += dtype_len
        (ndim,) = struct.unpack_from("<I", view, pos)
        pos += 4
        shape = struct.unpack_from(f"<{ndim}Q", view, pos) if ndim else ()
        pos += 8 * ndim
        count = int(np.prod(shape, dtype=np.int64)) if ndim else 1
        nbytes = count * dtype.itemsize
        arr = np.frombuffer(view[pos : pos + nbytes], dtype=dtype).reshape(shape).copy()
        pos += nbytes
        out[name] = arr
    return out


def save_tensors(path: Path, tensors: Mapping[str, "torch.Tensor | np.ndarray"]) -> str:
    data = serialize_tensors(tensors)
    path.write_bytes(data)
    return sha256_hex(data)


def load_tensors(path: Path) -> Dict[str, np.ndarray]:
    if not path.exists():
        raise MissingFileError(f"weight blob not found: {path}")
    return deserialize_tensors(path.read_bytes())


def sha256_hex(data: bytes) -> str:
    return "sha256:" + hashlib.sha256(data).hexdigest()


def file_digest(path: Path) -> str:
    return sha256_hex(path.read_bytes())


def module_tensors(module: torch.nn.Module) -> Dict[str, torch.Tensor]:
    """Base parameters under canonical (adapter-free) names."""
    return {name: param for name, param in named_base_parameters(module)}


def module_digest(module: torch.nn.Module) -> str:
    return sha256_hex(serialize_tensors(module_tensors(module)))


def load_module_tensors(module: torch.nn.Module, tensors: Mapping[str, np.ndarray]) -> None:
    own = module_tensors(module)
    if set(own) != set(tensors):
        missing = set(own) ^ set(tensors)
        raise CheckpointError(f"parameter names do not match the module: {sorted(missing)}")
    with torch.no_grad():
        for name, param in own.items():
            arr = tensors[name]
            if tuple(param.shape) != tuple(arr.shape):
                raise CheckpointError(f"shape mismatch for {name}: {tuple(param.shape)} vs {arr.shape}")
            param.copy_(torch.from_numpy(arr))


@dataclass
class CheckpointManifest:
    stage: int
    weights: Dict[str, str]            # role -> blob filename (relative to the manifest)
    digests: Dict[str, str]            # role -> sha256 of the blob file
    config: Dict[str, str]             # flattened "section.key" -> value snapshot
    directory: Optional[Path] = None   # set once saved/loaded
    extra: Dict[str, str] = field(default_factory=dict)

    def blob_path(self, role: str) -> Path:
        if self.directory is None:
            raise CheckpointError("manifest has no directory; save or load it first")
        return (self.directory / self.weights[role]).resolve()

    def arch(self) -> ArchConfig:
        prefix = "arch."
        return ArchConfig.from_dict(
            {k[len(prefix):]: v for k, v in self.config.items() if k.startswith(prefix)}
        )

    def save(self, directory: Path) -> Path:
        directory = Path(directory)
        directory.mkdir(parents=True, exist_ok=True)
        lines = [f"format={MANIFEST_FORMAT}", f"stage={self.stage}"]
        for role in sorted(self.weights):
            lines.append(f"weights.{role}={self.weights[role]}")
            lines.append(f"digest.{role}={self.digests[role]}")
        for key in sorted(self.config):
            lines.append(f"config.{key}={self.config[key]}")
        for key in sorted(self.extra):
            lines.append(f"{key}={self.extra[key]}")
        path = directory / MANIFEST_NAME
        path.write_text("\n".join(lines) + "\n", encoding="utf-8")
        self.directory = directory
        return path

    @classmethod
    def load(cls, path: Path, verify: bool = True) -> "CheckpointManifest":
        path = Path(path)
        if path.is_dir():
            path = path / MANIFEST_NAME
        if not path.exists():
            raise MissingFileError(f"manifest not found: {path}")
        weights: Dict[str, str] = {}
        digests: Dict[str, str] = {}
        config: Dict[str, str] = {}
        extra: Dict[str, str] = {}
        stage = None
        for raw in path.read_text(encoding="utf-8").splitlines():
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            key, _, value = line.partition("=")
            if key == "format":
                if value != MANIFEST_FORMAT:
                    raise CheckpointError(f"unsupported manifest format: {value}")
            elif key == "stage":
                stage = int(value)
            elif key.startswith("weights."):
                weights[key[len("weights."):]] = value
            elif key.startswith("digest."):
                digests[key[len("digest."):]] = value
            elif key.startswith("config."):
                config[key[len("config."):]] = value
            else:
                extra[key] = value
        if stage is None:
            raise CheckpointError(f"manifest {path} is missing the stage key")
        manifest = cls(
            stage=stage, weights=weights, digests=digests, config=config,
            directory=path.parent, extra=extra,
        )
        if verify:
            manifest.verify()
        return manifest

    def verify(self) -> None:
        for role in self.weights:
            blob = self.blob_path(role)
            if not blob.exists():
                raise MissingFileError(f"weight blob for {role!r} not found: {blob}")
            actual = file_digest(blob)
            if actual != self.digests[role]:
                raise DigestMismatchError(
                    f"digest mismatch for {role!r}: manifest says {self.digests[role]}, file is {actual}"
                )


def build_stage1_modules(arch: ArchConfig, seed: int = 0) -> Tuple[TinyVisionEncoder, ClassificationHeads]:
    encoder = TinyVisionEncoder(
        patch_size=arch.patch_size,
        hidden_dim=arch.encoder_hidden_dim,
        feature_dim=arch.encoder_feature_dim,
        depth=arch.encoder_depth,
        n_heads=arch.encoder_heads,
        seed=seed,
    )
    heads = ClassificationHeads(arch.encoder_feature_dim, seed=seed + 1)
    return encoder, heads


def build_lm(arch: ArchConfig, seed: int = 0) -> TinyCausalLM:
    return TinyCausalLM(
        embed_dim=arch.lm_embed_dim,
        n_layers=arch.lm_layers,
        n_heads=arch.lm_heads,
        ffn_dim=arch.lm_ffn_dim,
        context_window=arch.lm_context_window,
        seed=seed,
    )


def build_projection(arch: ArchConfig, seed: int = 0) -> VisualProjection:
    return VisualProjection(arch.encoder_hidden_dim, arch.lm_embed_dim, seed=seed)


def load_stage1_handles(manifest: CheckpointManifest) -> Tuple[TinyVisionEncoder, ClassificationHeads]:
    arch = manifest.arch()
    encoder, heads = build_stage1_modules(arch)
    load_module_tensors(encoder, load_tensors(manifest.blob_path("encoder")))
    load_module_tensors(heads, load_tensors(manifest.blob_path("heads")))
    encoder.eval()
    heads.eval()
    return encoder, heads


def load_stage2_handles(manifest: CheckpointManifest):
    """Returns (encoder, heads, projection, lm-with-adapters)."""
    if manifest.stage != 2:
        raise CheckpointError(f"expected a stage-2 manifest, got stage {manifest.stage}")
    arch = manifest.arch()
    encoder, heads = load_stage1_handles(manifest)
    projection = build_projection(arch)
    load_module_tensors(projection, load_tensors(manifest.blob_path("projection")))
    lm = build_lm(arch)
    load_module_tensors(lm, load_tensors(manifest.blob_path("lm_base")))
    spec = AdapterSpec(
        layer_indices=tuple(int(i) for i in manifest.extra["adapter.layers"].split(",") if i != ""),
        rank=int(manifest.extra["adapter.rank"]),
    )
    attach_adapters(lm, spec, seed=0)
    adapter_values = load_tensors(manifest.blob_path("lm_adapter"))
    own = dict(named_adapter_parameters(lm))
    if set(own) != set(adapter_values):
        raise CheckpointError("adapter parameter names do not match the manifest blob")
    with torch.no_grad():
        for name, param in own.items():
            param.copy_(torch.from_numpy(adapter_values[name]))
    projection.eval()
    lm.eval()
    return encoder, heads, projection, lm
