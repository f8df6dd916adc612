"""Binary dump format: layout, round trip, rejection of malformed files."""

import struct

import numpy as np
import pytest

import cnls
from cnls.fieldio import FORMAT_VERSION, MAGIC, read_fields, write_fields

from conftest import random_complex_states


def test_round_trip(tmp_path):
    g = cnls.Grid((64, 32), (10.0, 7.5))
    rng = np.random.default_rng(0)
    state = cnls.FieldVector.from_arrays(
        g, [rng.standard_normal((64, 32)) + 1j * rng.standard_normal((64, 32))
            for _ in range(3)])
    path = tmp_path / "state.nlsf"
    write_fields(path, state)
    back = read_fields(path)
    assert back.grid == g
    assert back.ell == 3
    for a, b in zip(state.arrays(), back.arrays()):
        np.testing.assert_array_equal(a, b)


def test_header_layout(tmp_path):
    g = cnls.Grid((8,), (2.0,))
    state = cnls.FieldVector.from_arrays(g, [np.arange(8).astype(complex)])
    path = tmp_path / "s.nlsf"
    write_fields(path, state)
    raw = path.read_bytes()
    assert raw[:4] == MAGIC == b"NLSF"
    version, n_dims, ell = struct.unpack_from("<III", raw, 4)
    assert (version, n_dims, ell) == (FORMAT_VERSION, 1, 1)
    (points,) = struct.unpack_from("<I", raw, 16)
    (length,) = struct.unpack_from("<d", raw, 20)
    assert points == 8 and length == 2.0
    # interleaved little-endian doubles, row-major
    first_re, first_im = struct.unpack_from("<dd", raw, 28)
    assert (first_re, first_im) == (0.0, 0.0)
    third_re, _ = struct.unpack_from("<dd", raw, 28 + 2 * 16)
    assert third_re == 2.0
    assert len(raw) == 28 + 8 * 16


def test_bad_magic_rejected(tmp_path):
    path = tmp_path / "bad.nlsf"
    path.write_bytes(b"XXXX" + b"\x00" * 32)
    with pytest.raises(ValueError, match="magic"):
        read_fields(path)


def test_truncated_rejected(tmp_path, bench_grid):
    state = random_complex_states(bench_grid, 1, 1, seed=0)[0]
    path = tmp_path / "t.nlsf"
    write_fields(path, state)
    path.write_bytes(path.read_bytes()[:-8])
    with pytest.raises(ValueError, match="size"):
        read_fields(path)


def test_wrong_version_rejected(tmp_path, bench_grid):
    state = random_complex_states(bench_grid, 1, 1, seed=0)[0]
    path = tmp_path / "v.nlsf"
    write_fields(path, state)
    raw = bytearray(path.read_bytes())
    raw[4:8] = struct.pack("<I", 99)
    path.write_bytes(bytes(raw))
    with pytest.raises(ValueError, match="version"):
        read_fields(path)
