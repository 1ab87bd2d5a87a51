"""
PETW binary container for named tensors (little-endian, no padding).

    magic 'PETW' | u32 version | u32 count
    per tensor: u32 name_len | name (UTF-8) | u8 dtype | u8 rank | rank x u64 dims | payload
"""
import os
import struct
from typing import Dict, Mapping

import numpy as np

from petforge.config.settings import DTYPE_CODES, DTYPE_NAMES, PETW_MAGIC, PETW_VERSION
from petforge.core.errors import FormatError

_HEADER = struct.Struct('<4sII')
_U32 = struct.Struct('<I')
_DTYPE_RANK = struct.Struct('<BB')


class _Reader:
    def __init__(self, blob: bytes):
        self.blob = blob
        self.offset = 0

    def take(self, count: int, what: str) -> bytes:
        end = self.offset + count
        if end > len(self.blob):
            raise FormatError(f"truncated container while reading {what}", offset=self.offset)
        chunk = self.blob[self.offset:end]
        self.offset = end
        return chunk


class PetwSerializer:
    """Encode and decode the PETW weights container."""

    @staticmethod
    def encode(tensors: Mapping[str, np.ndarray]) -> bytes:
        parts = [_HEADER.pack(PETW_MAGIC, PETW_VERSION, len(tensors))]
        for name, value in tensors.items():
            arr = np.asarray(value)
            dtype_name = arr.dtype.name
            if dtype_name not in DTYPE_CODES:
                raise FormatError(f"tensor '{name}' has unsupported dtype {dtype_name}")
            encoded = name.encode('utf-8')
            parts.append(_U32.pack(len(encoded)))
            parts.append(encoded)
            parts.append(_DTYPE_RANK.pack(DTYPE_CODES[dtype_name], arr.ndim))
            parts.append(struct.pack(f'<{arr.ndim}Q', *arr.shape))
            parts.append(np.ascontiguousarray(arr, dtype=arr.dtype.newbyteorder('<')).tobytes())
        return b''.join(parts)

    @staticmethod
    def decode(blob: bytes) -> Dict[str, np.ndarray]:
        reader = _Reader(blob)
        magic, version, count = _HEADER.unpack(reader.take(_HEADER.size, 'header'))
        if magic != PETW_MAGIC:
            raise FormatError(f"bad magic {magic!r}, expected {PETW_MAGIC!r}", offset=0)
        if version != PETW_VERSION:
            raise FormatError(f"unsupported container version {version}", offset=4)

        tensors: Dict[str, np.ndarray] = {}
        for _ in range(count):
            start = reader.offset
            (name_len,) = _U32.unpack(reader.take(_U32.size, 'name length'))
            raw_name = reader.take(name_len, 'name')
            try:
                name = raw_name.decode('utf-8')
            except UnicodeDecodeError:
                raise FormatError("tensor name is not valid UTF-8", offset=start + _U32.size) from None
            code_offset = reader.offset
            code, rank = _DTYPE_RANK.unpack(reader.take(_DTYPE_RANK.size, 'dtype/rank'))
            if code not in DTYPE_NAMES:
                raise FormatError(f"unknown dtype code {code} for tensor '{name}'", offset=code_offset)
            dims = struct.unpack(f'<{rank}Q', reader.take(8 * rank, 'dims'))
            dtype = np.dtype(DTYPE_NAMES[code]).newbyteorder('<')
            count_values = int(np.prod(dims, dtype=np.int64)) if rank else 1
            payload = reader.take(count_values * dtype.itemsize, f"payload of '{name}'")
            if name in tensors:
                raise FormatError(f"duplicate tensor name '{name}'", offset=start)
            arr = np.frombuffer(payload, dtype=dtype).reshape(dims)
            tensors[name] = arr.astype(DTYPE_NAMES[code])
        if reader.offset != len(blob):
            raise FormatError("trailing bytes after the last tensor", offset=reader.offset)
        return tensors

    @staticmethod
    def save_to_file(tensors: Mapping[str, np.ndarray], file_path: str):
        """Write atomically: a partial file never replaces a good one."""
        directory = os.path.dirname(file_path)
        if directory:
            os.makedirs(directory, exist_ok=True)
        tmp_path = f"{file_path}.tmp"
        with open(tmp_path, 'wb') as f:
            f.write(PetwSerializer.encode(tensors))
        os.replace(tmp_path, file_path)

    @staticmethod
    def load_from_file(file_path: str) -> Dict[str, np.ndarray]:
        with open(file_path, 'rb') as f:
            return PetwSerializer.decode(f.read())
