import struct

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra import numpy as hnp

from ltprune.tensor_io import (
    HEADER_SIZE,
    MAGIC,
    EmbeddingMatrix,
    FormatError,
    IndexMask,
    Role,
    encode_ltp1,
    load_mask,
    load_matrix,
    read_kv_file,
    save_mask,
    save_matrix,
)


def test_csv_identity(tmp_path):
    p = tmp_path / "eye.csv"
    p.write_text("1.0,0.0\n0.0,1.0")
    m = load_matrix(p)
    assert (m.rows, m.cols) == (2, 2)
    assert m.data.ravel().tolist() == [1, 0, 0, 1]


def test_csv_crlf_and_trailing_blank(tmp_path):
    p = tmp_path / "m.csv"
    p.write_bytes(b"1,2,3\r\n4,5,6\r\n\r\n")
    m = load_matrix(p)
    assert m.data.tolist() == [[1, 2, 3], [4, 5, 6]]


def test_ltp1_header_shape(tmp_path):
    rng = np.random.default_rng(0)
    data = rng.standard_normal((576, 1024)).astype("<f4")
    p = tmp_path / "v.ltp"
    p.write_bytes(struct.pack("<8sIIB", MAGIC, 576, 1024, 0) + data.tobytes())
    m = load_matrix(p)
    assert (m.rows, m.cols) == (576, 1024)
    assert m.role is Role.VISUAL


@pytest.mark.parametrize("shape", [(7, 13), (1000, 8), (1, 1)])
def test_ltp1_round_trip_bytes(tmp_path, shape):
    rng = np.random.default_rng(sum(shape))
    data = (rng.standard_normal(shape) * 1e3).astype(np.float32)
    m = EmbeddingMatrix(data, Role.TEXT)
    p = tmp_path / "m.ltp"
    save_matrix(m, p)
    raw = p.read_bytes()
    assert len(raw) == HEADER_SIZE + 4 * data.size
    back = load_matrix(p)
    assert back == m
    assert back.data.tobytes() == data.tobytes()
    assert encode_ltp1(back) == raw


def test_minimal_matrix(tmp_path):
    p = tmp_path / "one.ltp"
    save_matrix(EmbeddingMatrix([[42.5]]), p)
    assert load_matrix(p).data.tolist() == [[42.5]]


def test_csv_round_trip_is_bit_exact(tmp_path):
    rng = np.random.default_rng(3)
    data = rng.standard_normal((7, 13)).astype(np.float32)
    p = tmp_path / "m.csv"
    save_matrix(EmbeddingMatrix(data), p)
    assert load_matrix(p).data.tobytes() == data.tobytes()


@settings(max_examples=50, deadline=None)
@given(
    hnp.arrays(
        np.float32,
        hnp.array_shapes(min_dims=2, max_dims=2, max_side=12),
        elements=st.floats(width=32, allow_nan=False, allow_infinity=False),
    ),
    st.sampled_from(list(Role)),
)
def test_round_trip_property(tmp_path_factory, data, role):
    d = tmp_path_factory.mktemp("rt")
    m = EmbeddingMatrix(data, role)
    for name in ("m.ltp", "m.csv"):
        save_matrix(m, d / name)
        back = load_matrix(d / name, role)
        assert back.data.tobytes() == m.data.tobytes()


class TestLoadErrors:
    def test_bad_magic(self, tmp_path):
        p = tmp_path / "x.ltp"
        p.write_bytes(b"NOTMAGIC" + bytes(9))
        with pytest.raises(FormatError, match="byte 0"):
            load_matrix(p)

    def test_truncated_header(self, tmp_path):
        p = tmp_path / "x.ltp"
        p.write_bytes(MAGIC + b"\x01\x00")
        with pytest.raises(FormatError, match="truncated"):
            load_matrix(p)

    def test_size_mismatch(self, tmp_path):
        p = tmp_path / "x.ltp"
        p.write_bytes(struct.pack("<8sIIB", MAGIC, 2, 3, 0) + bytes(4 * 5))
        with pytest.raises(FormatError, match="payload"):
            load_matrix(p)

    def test_nan_reports_byte(self, tmp_path):
        vals = np.array([1.0, 2.0, np.nan, 4.0], dtype="<f4")
        p = tmp_path / "x.ltp"
        p.write_bytes(struct.pack("<8sIIB", MAGIC, 2, 2, 0) + vals.tobytes())
        with pytest.raises(FormatError, match=f"byte {HEADER_SIZE + 8}"):
            load_matrix(p)

    def test_unknown_role(self, tmp_path):
        p = tmp_path / "x.ltp"
        p.write_bytes(struct.pack("<8sIIB", MAGIC, 1, 1, 9) + bytes(4))
        with pytest.raises(FormatError, match="role"):
            load_matrix(p)

    def test_csv_inf_reports_line(self, tmp_path):
        p = tmp_path / "x.csv"
        p.write_text("1,2\n3,inf\n")
        with pytest.raises(FormatError, match="line 2, column 2"):
            load_matrix(p)

    def test_csv_ragged(self, tmp_path):
        p = tmp_path / "x.csv"
        p.write_text("1,2\n3\n")
        with pytest.raises(FormatError, match="line 2"):
            load_matrix(p)

    def test_csv_garbage(self, tmp_path):
        p = tmp_path / "x.csv"
        p.write_text("1,abc\n")
        with pytest.raises(FormatError, match="line 1, column 2"):
            load_matrix(p)

    def test_empty_csv(self, tmp_path):
        p = tmp_path / "x.csv"
        p.write_text("")
        with pytest.raises(FormatError):
            load_matrix(p)


def test_matrix_rejects_nonfinite():
    with pytest.raises(ValueError):
        EmbeddingMatrix([[1.0, float("nan")]])


def test_mask_file_layout(tmp_path):
    p = tmp_path / "m.txt"
    save_mask(IndexMask(4, (0, 2)), p)
    assert p.read_bytes() == b"total=4\n0\n2\n"
    assert load_mask(p) == IndexMask(4, (0, 2))


def test_full_mask_round_trip(tmp_path):
    p = tmp_path / "m.txt"
    save_mask(IndexMask.full(576), p)
    assert load_mask(p).kept == tuple(range(576))


def test_random_mask_round_trip(tmp_path):
    rng = np.random.default_rng(11)
    kept = np.sort(rng.choice(576, size=200, replace=False))
    mask = IndexMask(576, tuple(kept.tolist()))
    p = tmp_path / "m.txt"
    save_mask(mask, p)
    assert load_mask(p) == mask


@pytest.mark.parametrize(
    "body, msg",
    [
        ("total=4\n0\n0\n", "duplicate"),
        ("total=4\n0\n4\n", "out of range"),
        ("total=4\n2\n1\n", "increasing"),
        ("total=4\n", "no indices"),
        ("0\n1\n", "header"),
        ("total=4\n-1\n", "out of range"),
    ],
)
def test_mask_load_errors(tmp_path, body, msg):
    p = tmp_path / "m.txt"
    p.write_text(body)
    with pytest.raises(FormatError, match=msg):
        load_mask(p)


def test_mask_constructor_never_repairs():
    with pytest.raises(ValueError):
        IndexMask(4, (2, 1))
    with pytest.raises(ValueError):
        IndexMask(4, ())
    assert IndexMask.from_indices(4, [3, 1]).kept == (1, 3)


def test_kv_file(tmp_path):
    p = tmp_path / "c.cfg"
    p.write_text("# comment\nalpha = 0.5  # trailing\n\nmode=identity\n")
    assert read_kv_file(p) == {"alpha": "0.5", "mode": "identity"}
