# Copyright 2026 The Polaron Authors.
# SPDX-License-Identifier: Apache-2.0
"""Minimal PLRN tensor writer/reader shared by the fixture scripts."""

import struct

import numpy as np


def write(path, array):
    a = np.ascontiguousarray(np.asarray(array, dtype="<f8"))
    with open(path, "wb") as f:
        f.write(b"PLRN")
        f.write(struct.pack("<HH", 1, a.ndim))
        for d in a.shape:
            f.write(struct.pack("<I", d))
        f.write(a.tobytes())


def read(path):
    with open(path, "rb") as f:
        raw = f.read()
    assert raw[:4] == b"PLRN"
    version, rank = struct.unpack_from("<HH", raw, 4)
    assert version == 1
    dims = struct.unpack_from("<" + "I" * rank, raw, 8)
    offset = 8 + 4 * rank
    return np.frombuffer(raw, dtype="<f8", offset=offset).reshape(dims)
