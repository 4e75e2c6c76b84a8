"""Self-describing binary checkpoint: config, vocabulary and all tensors.

Layout (all integers little-endian):
    8s  magic "CATGENCK"
    I   format version (currently 1)
    Q   config byte count, then UTF-8 key=value lines
    Q   vocabulary byte count, then UTF-8 newline-joined tokens
    I   tensor count, then per tensor:
        H   name byte count, then UTF-8 name
        B   ndim
        Q*  dims
        Q   data byte count, then row-major float64 little-endian values

Serialization is deterministic, so save -> load -> save reproduces the file
byte for byte.
"""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

from .corpus import SPECIAL_TOKENS, Vocabulary
from .layers import AffineParams, EmbeddingTable, LstmCellParams
from .model import ModelConfig, ModelParams

MAGIC = b"CATGENCK"
VERSION = 1


def _pack_block(data: bytes) -> bytes:
    return struct.pack("<Q", len(data)) + data


def save_checkpoint(path: str | Path, cfg: ModelConfig, vocab: Vocabulary, params: ModelParams) -> None:
    chunks = [MAGIC, struct.pack("<I", VERSION)]
    config_text = "\n".join(f"{k}={v}" for k, v in cfg.to_kv().items())
    chunks.append(_pack_block(config_text.encode("utf-8")))
    chunks.append(_pack_block("\n".join(vocab.id_to_token).encode("utf-8")))
    named = params.named_arrays()
    chunks.append(struct.pack("<I", len(named)))
    for name, arr in named.items():
        raw = np.ascontiguousarray(arr, dtype="<f8").tobytes()
        encoded = name.encode("utf-8")
        chunks.append(struct.pack("<H", len(encoded)) + encoded)
        chunks.append(struct.pack("<B", arr.ndim))
        chunks.append(struct.pack(f"<{arr.ndim}Q", *arr.shape))
        chunks.append(_pack_block(raw))
    Path(path).write_bytes(b"".join(chunks))


class _Reader:
    def __init__(self, data: bytes):
        self.data = data
        self.pos = 0

    def take(self, n: int) -> bytes:
        if self.pos + n > len(self.data):
            raise ValueError("truncated checkpoint file")
        out = self.data[self.pos : self.pos + n]
        self.pos += n
        return out

    def unpack(self, fmt: str):
        vals = struct.unpack(fmt, self.take(struct.calcsize(fmt)))
        return vals[0] if len(vals) == 1 else vals

    def block(self) -> bytes:
        return self.take(self.unpack("<Q"))


def load_checkpoint(path: str | Path) -> tuple[ModelConfig, Vocabulary, ModelParams]:
    reader = _Reader(Path(path).read_bytes())
    if reader.take(8) != MAGIC:
        raise ValueError(f"{path} is not a checkpoint file")
    version = reader.unpack("<I")
    if version != VERSION:
        raise ValueError(f"unsupported checkpoint version {version}")
    kv = {}
    for line in reader.block().decode("utf-8").splitlines():
        key, _, value = line.partition("=")
        kv[key] = value
    cfg = ModelConfig.from_kv(kv)
    tokens = reader.block().decode("utf-8").split("\n")
    if tuple(tokens[:4]) != SPECIAL_TOKENS:
        raise ValueError("checkpoint vocabulary lacks the reserved special tokens")
    vocab = Vocabulary(
        id_to_token=tokens,
        token_to_id={t: i for i, t in enumerate(tokens)},
        max_size=len(tokens),
    )

    tensors: dict[str, np.ndarray] = {}
    for _ in range(reader.unpack("<I")):
        name = reader.take(reader.unpack("<H")).decode("utf-8")
        ndim = reader.unpack("<B")
        shape = struct.unpack(f"<{ndim}Q", reader.take(8 * ndim))
        raw = reader.block()
        tensors[name] = np.frombuffer(raw, dtype="<f8").reshape(shape).astype(np.float64)

    params = ModelParams(
        glove=EmbeddingTable(table=tensors["glove.table"], trainable=False),
        learned=EmbeddingTable(table=tensors["learned.table"]),
        dense1=AffineParams(W=tensors["dense1.W"], b=tensors["dense1.b"]),
        lstm1=LstmCellParams(
            W_ih=tensors["lstm1.W_ih"], W_hh=tensors["lstm1.W_hh"], b=tensors["lstm1.b"]
        ),
        lstm2=LstmCellParams(
            W_ih=tensors["lstm2.W_ih"], W_hh=tensors["lstm2.W_hh"], b=tensors["lstm2.b"]
        ),
        dense2=AffineParams(W=tensors["dense2.W"], b=tensors["dense2.b"]),
        out_proj=AffineParams(W=tensors["out_proj.W"], b=tensors["out_proj.b"]),
    )
    for name, arr in params.named_arrays().items():
        expected = _expected_shape(name, cfg)
        if arr.shape != expected:
            raise ValueError(f"tensor {name} has shape {arr.shape}, expected {expected}")
    if len(vocab) != cfg.vocab_size:
        raise ValueError("vocabulary size does not match the stored config")
    return cfg, vocab, params


def _expected_shape(name: str, cfg: ModelConfig) -> tuple[int, ...]:
    shapes = {
        "glove.table": (cfg.vocab_size, cfg.glove_dim),
        "learned.table": (cfg.vocab_size, cfg.input_embed_dim),
        "dense1.W": (cfg.dense1_dim, cfg.input_dim),
        "dense1.b": (cfg.dense1_dim,),
        "lstm1.W_ih": (4 * cfg.lstm1_dim, cfg.dense1_dim),
        "lstm1.W_hh": (4 * cfg.lstm1_dim, cfg.lstm1_dim),
        "lstm1.b": (4 * cfg.lstm1_dim,),
        "lstm2.W_ih": (4 * cfg.lstm2_dim, cfg.lstm1_dim),
        "lstm2.W_hh": (4 * cfg.lstm2_dim, cfg.lstm2_dim),
        "lstm2.b": (4 * cfg.lstm2_dim,),
        "dense2.W": (cfg.dense2_dim, cfg.lstm2_dim),
        "dense2.b": (cfg.dense2_dim,),
        "out_proj.W": (cfg.vocab_size, cfg.dense2_dim),
        "out_proj.b": (cfg.vocab_size,),
    }
    return shapes[name]
