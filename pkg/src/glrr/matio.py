"""On-disk interchange formats.

GMAT is the binary matrix container used for all bit-exact artifacts:
magic ``GMAT``, then little-endian u32 version (=1), u32 rows, u32 cols,
then rows*cols little-endian float64 in row-major order. Larger objects
reuse it as a record: a points file is an index record (N x 2 matrix of
group ordinal and label) followed by one basis record per point; a Gram
tensor file is a 1 x 1 slice-count record followed by one N x N record
per slice.

CSV matrices are headerless, comma-separated, 17 significant digits.
Label files are two-column CSVs with a header row. IDX is the standard
big-endian image container (magic 0x00000803 for u8 image stacks,
0x00000801 for u8 label vectors).
"""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

from .errors import FormatError, MissingLabels, ShapeError
from .gram import GramTensor
from .manifold import GrassmannPoint

_GMAT_MAGIC = b"GMAT"
_GMAT_VERSION = 1


def _write_gmat_record(fh, matrix: np.ndarray) -> None:
    arr = np.ascontiguousarray(np.asarray(matrix, dtype="<f8"))
    if arr.ndim != 2:
        raise ShapeError(f"GMAT stores 2-D matrices, got ndim={arr.ndim}")
    fh.write(_GMAT_MAGIC)
    fh.write(struct.pack("<III", _GMAT_VERSION, arr.shape[0], arr.shape[1]))
    fh.write(arr.tobytes(order="C"))


def _read_gmat_record(fh, path) -> np.ndarray | None:
    magic = fh.read(4)
    if magic == b"":
        return None
    if magic != _GMAT_MAGIC:
        raise FormatError(f"{path}: bad magic {magic!r}, expected {_GMAT_MAGIC!r}")
    header = fh.read(12)
    if len(header) != 12:
        raise FormatError(f"{path}: truncated GMAT header")
    version, rows, cols = struct.unpack("<III", header)
    if version != _GMAT_VERSION:
        raise FormatError(f"{path}: unsupported GMAT version {version}")
    payload = fh.read(rows * cols * 8)
    if len(payload) != rows * cols * 8:
        raise FormatError(
            f"{path}: payload truncated, expected {rows * cols * 8} bytes, "
            f"got {len(payload)}"
        )
    return np.frombuffer(payload, dtype="<f8").reshape(rows, cols).astype(float)


def save_gmat(path, matrix: np.ndarray) -> None:
    with open(path, "wb") as fh:
        _write_gmat_record(fh, matrix)


def load_gmat(path) -> np.ndarray:
    with open(path, "rb") as fh:
        matrix = _read_gmat_record(fh, path)
        if matrix is None:
            raise FormatError(f"{path}: empty file")
        if fh.read(1):
            raise FormatError(f"{path}: trailing bytes after single matrix")
    return matrix


def save_matrix_csv(path, matrix: np.ndarray) -> None:
    arr = np.asarray(matrix, dtype=float)
    if arr.ndim != 2:
        raise ShapeError(f"CSV matrix must be 2-D, got ndim={arr.ndim}")
    np.savetxt(path, arr, delimiter=",", fmt="%.17g", newline="\n")


def load_matrix_csv(path) -> np.ndarray:
    try:
        return np.loadtxt(path, delimiter=",", ndmin=2, dtype=float)
    except ValueError as err:
        raise FormatError(f"{path}: not a numeric CSV matrix: {err}") from err


def save_labels_csv(path, labels) -> None:
    """Cluster-label artifact: header ``index,label``, one row per point."""
    arr = np.asarray(labels, dtype=int)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("index,label\n")
        for i, lab in enumerate(arr):
            fh.write(f"{i},{int(lab)}\n")


def load_labels_csv(path) -> np.ndarray:
    """Read an ``index,label`` artifact back into an int vector ordered
    by index."""
    pairs = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line or (lineno == 1 and line.lower() == "index,label"):
                continue
            parts = line.split(",")
            if len(parts) != 2:
                raise FormatError(f"{path}:{lineno}: expected 'index,label'")
            try:
                pairs.append((int(parts[0]), int(parts[1])))
            except ValueError as err:
                raise FormatError(f"{path}:{lineno}: {err}") from err
    if not pairs:
        raise FormatError(f"{path}: no label rows")
    pairs.sort()
    indices = [i for i, _ in pairs]
    if indices != list(range(len(pairs))):
        raise FormatError(f"{path}: indices are not 0..N-1 without gaps")
    return np.array([lab for _, lab in pairs], dtype=int)


def save_group_labels(path, labels_by_id: dict[str, int]) -> None:
    """Dataset sidecar: header ``group_id,label``."""
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("group_id,label\n")
        for gid in sorted(labels_by_id):
            fh.write(f"{gid},{int(labels_by_id[gid])}\n")


def load_group_labels(path) -> dict[str, int]:
    path = Path(path)
    if not path.exists():
        raise MissingLabels(f"label sidecar not found: {path}")
    table: dict[str, int] = {}
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line or (lineno == 1 and line.lower() == "group_id,label"):
                continue
            parts = line.split(",")
            if len(parts) != 2:
                raise FormatError(f"{path}:{lineno}: expected 'group_id,label'")
            try:
                table[parts[0]] = int(parts[1])
            except ValueError as err:
                raise FormatError(f"{path}:{lineno}: {err}") from err
    if not table:
        raise MissingLabels(f"{path}: no label rows")
    return table


def save_points(path, points: list[GrassmannPoint], labels) -> None:
    """Concatenated-GMAT points file: an N x 2 index record of
    (group ordinal, label), then one d x p basis record per point."""
    labels = np.asarray(labels, dtype=int)
    if labels.shape != (len(points),):
        raise ShapeError(
            f"labels length {labels.shape} does not match {len(points)} points"
        )
    index = np.column_stack(
        [np.arange(len(points), dtype=float), labels.astype(float)]
    )
    with open(path, "wb") as fh:
        _write_gmat_record(fh, index)
        for pt in points:
            _write_gmat_record(fh, pt.basis)


def load_points(path) -> tuple[list[GrassmannPoint], np.ndarray]:
    with open(path, "rb") as fh:
        index = _read_gmat_record(fh, path)
        if index is None:
            raise FormatError(f"{path}: empty points file")
        if index.ndim != 2 or index.shape[1] != 2:
            raise FormatError(
                f"{path}: first record must be an N x 2 index, got {index.shape}"
            )
        n = index.shape[0]
        points = []
        for i in range(n):
            basis = _read_gmat_record(fh, path)
            if basis is None:
                raise FormatError(f"{path}: expected {n} basis records, got {i}")
            points.append(GrassmannPoint(basis))
        if fh.read(1):
            raise FormatError(f"{path}: trailing bytes after {n} basis records")
    return points, index[:, 1].astype(int)


def save_gram(path, tensor: GramTensor) -> None:
    """Gram tensor file: a 1 x 1 slice-count record, then one N x N
    record per slice."""
    with open(path, "wb") as fh:
        _write_gmat_record(fh, np.array([[float(tensor.n_points)]]))
        for i in range(tensor.n_points):
            _write_gmat_record(fh, tensor.slices[i])


def load_gram(path) -> GramTensor:
    with open(path, "rb") as fh:
        header = _read_gmat_record(fh, path)
        if header is None or header.shape != (1, 1):
            raise FormatError(f"{path}: missing 1 x 1 slice-count header")
        n = int(header[0, 0])
        slices = np.zeros((n, n, n))
        for i in range(n):
            sl = _read_gmat_record(fh, path)
            if sl is None:
                raise FormatError(f"{path}: expected {n} slices, got {i}")
            if sl.shape != (n, n):
                raise FormatError(
                    f"{path}: slice {i} has shape {sl.shape}, expected ({n}, {n})"
                )
            slices[i] = sl
        if fh.read(1):
            raise FormatError(f"{path}: trailing bytes after {n} slices")
    return GramTensor(slices)


_IDX_IMAGE_MAGIC = 0x00000803
_IDX_LABEL_MAGIC = 0x00000801


def load_idx_images(path) -> np.ndarray:
    """Read a stack of u8 images from an IDX file as (count, rows, cols)."""
    with open(path, "rb") as fh:
        header = fh.read(4)
        if len(header) != 4:
            raise FormatError(f"{path}: truncated IDX header")
        magic = struct.unpack(">I", header)[0]
        if magic != _IDX_IMAGE_MAGIC:
            raise FormatError(
                f"{path}: bad IDX image magic 0x{magic:08x}, "
                f"expected 0x{_IDX_IMAGE_MAGIC:08x}"
            )
        dims = struct.unpack(">III", fh.read(12))
        count, rows, cols = dims
        payload = fh.read(count * rows * cols)
        if len(payload) != count * rows * cols:
            raise FormatError(f"{path}: truncated IDX payload")
        if fh.read(1):
            raise FormatError(f"{path}: trailing bytes in IDX file")
    return np.frombuffer(payload, dtype=np.uint8).reshape(count, rows, cols)


def load_idx_labels(path) -> np.ndarray:
    with open(path, "rb") as fh:
        header = fh.read(8)
        if len(header) != 8:
            raise FormatError(f"{path}: truncated IDX header")
        magic, count = struct.unpack(">II", header)
        if magic != _IDX_LABEL_MAGIC:
            raise FormatError(
                f"{path}: bad IDX label magic 0x{magic:08x}, "
                f"expected 0x{_IDX_LABEL_MAGIC:08x}"
            )
        payload = fh.read(count)
        if len(payload) != count:
            raise FormatError(f"{path}: truncated IDX payload")
    return np.frombuffer(payload, dtype=np.uint8).astype(int)


def vectorize_images(images: np.ndarray) -> np.ndarray:
    """Stack images into a d x M sample matrix, one column per image.

    Pixel (r, c) of an m x n image maps to vector index r * n + c.
    """
    imgs = np.asarray(images, dtype=float)
    if imgs.ndim != 3:
        raise ShapeError(f"expected (count, rows, cols), got shape {imgs.shape}")
    count = imgs.shape[0]
    return imgs.reshape(count, -1).T
