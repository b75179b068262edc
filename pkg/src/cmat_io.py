"""
CMAT text format for complex matrices.

    # optional comment lines
    %%CMAT <rows> <cols>
    <re> <im>          rows*cols lines, row-major

Values are written with 17 significant digits, so a write/read round trip
restores every binary64 component bit for bit. Matrices exported from
external channel generators can be ingested the same way.
"""

import math
from pathlib import Path
from typing import List, Union

import numpy as np

from dense_complex import CMatrix, as_cmatrix
from errors import CmatFormatError
from utils import get_logger

logger = get_logger('cmat_io', 'cmat_io')

HEADER_TAG = '%%CMAT'
CMAT_SUFFIX = '.cmat'


def write_cmat(path: Union[str, Path], matrix: CMatrix, comment: str = None) -> Path:
    """
    Write a matrix to a CMAT file.

    Args:
        path: Output file
        matrix: Matrix (vectors are written as one column)
        comment: Optional text written as '#' lines before the header

    Returns:
        Path: The written file
    """
    path = Path(path)
    matrix = as_cmatrix(matrix)
    rows, cols = matrix.shape

    lines = []
    if comment:
        lines.extend(f"# {line}" for line in comment.splitlines())
    lines.append(f"{HEADER_TAG} {rows} {cols}")
    lines.extend(f"{z.real:.17g} {z.imag:.17g}" for z in matrix.ravel())

    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text("\n".join(lines) + "\n")
    logger.info(f"Wrote {rows}x{cols} matrix to {path}")
    return path


def read_cmat(path: Union[str, Path], allow_nonfinite: bool = False) -> CMatrix:
    """
    Read a CMAT file.

    Raises:
        FileNotFoundError: path does not exist
        CmatFormatError: malformed header, wrong value count, bad or
            non-finite number (with the 1-based line number)
    """
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"CMAT file not found at path: {path}")
    text_lines = path.read_text().splitlines()

    # Skip leading comments and blank lines
    idx = 0
    while idx < len(text_lines) and (not text_lines[idx].strip() or text_lines[idx].lstrip().startswith('#')):
        idx += 1
    if idx == len(text_lines):
        raise CmatFormatError("missing %%CMAT header", max(len(text_lines), 1), str(path))

    header = text_lines[idx].split()
    header_line = idx + 1
    if len(header) != 3 or header[0] != HEADER_TAG:
        raise CmatFormatError(f"expected '{HEADER_TAG} <rows> <cols>', got '{text_lines[idx].strip()}'",
                              header_line, str(path))
    try:
        rows, cols = int(header[1]), int(header[2])
    except ValueError:
        raise CmatFormatError(f"non-integer dimensions in header '{text_lines[idx].strip()}'", header_line, str(path))
    if rows < 1 or cols < 1:
        raise CmatFormatError(f"dimensions must be positive, got {rows}x{cols}", header_line, str(path))

    # Trailing blank lines are tolerated, blank lines inside the data are not
    body = text_lines[idx + 1:]
    while body and not body[-1].strip():
        body.pop()

    expected = rows * cols
    if len(body) < expected:
        raise CmatFormatError(f"expected {expected} value lines, found {len(body)}",
                              header_line + len(body), str(path))
    if len(body) > expected:
        raise CmatFormatError(f"unexpected extra line (header says {rows}x{cols})",
                              header_line + expected + 1, str(path))

    values: List[complex] = []
    for offset, line in enumerate(body):
        line_no = header_line + offset + 1
        tokens = line.split()
        if len(tokens) != 2:
            raise CmatFormatError(f"expected '<re> <im>', got '{line.strip()}'", line_no, str(path))
        try:
            re, im = float(tokens[0]), float(tokens[1])
        except ValueError:
            raise CmatFormatError(f"non-numeric value in '{line.strip()}'", line_no, str(path))
        if not allow_nonfinite and not (math.isfinite(re) and math.isfinite(im)):
            raise CmatFormatError(f"non-finite value in '{line.strip()}'", line_no, str(path))
        values.append(complex(re, im))

    matrix = np.array(values, dtype=np.complex128).reshape(rows, cols)
    logger.info(f"Read {rows}x{cols} matrix from {path}")
    return matrix


def list_cmat_files(directory: Union[str, Path]) -> List[Path]:
    """CMAT files of a directory, sorted by name"""
    directory = Path(directory)
    if not directory.is_dir():
        raise FileNotFoundError(f"Directory not found: {directory}")
    return sorted(p for p in directory.iterdir() if p.suffix == CMAT_SUFFIX and p.is_file())
