"""CSV readers for observation matrices and graphs."""

from __future__ import annotations

import csv
import math

import numpy as np

from .givens import DomainError
from .models import NetworkData, PpcaData


class DataError(DomainError):
    """Malformed input file."""


def _rows(path):
    with open(path, newline="") as fh:
        return [r for r in csv.reader(fh) if r and any(c.strip() for c in r)]


def _is_numeric(row) -> bool:
    try:
        for c in row:
            float(c)
    except ValueError:
        return False
    return True


def _strip_header(rows):
    if rows and not _is_numeric(rows[0]):
        return rows[1:], 2
    return rows, 1


def read_matrix(path) -> np.ndarray:
    """Numeric CSV with an optional header row.

    Ragged or non-numeric rows raise :class:`DataError` naming the file line.
    """
    rows, first_line = _strip_header(_rows(path))
    if not rows:
        raise DataError(f"{path}: no data rows")
    width = len(rows[0])
    out = np.empty((len(rows), width))
    for k, row in enumerate(rows):
        line = first_line + k
        if len(row) != width:
            raise DataError(f"{path}: row {line} has {len(row)} fields, expected {width}")
        try:
            out[k] = [float(c) for c in row]
        except ValueError:
            raise DataError(f"{path}: row {line} is not numeric") from None
    if not np.all(np.isfinite(out)):
        raise DataError(f"{path}: non-finite value")
    return out


def read_observations(path) -> PpcaData:
    """One observation per row; returns the sufficient statistics."""
    X = read_matrix(path)
    if X.shape[0] < 2:
        raise DataError(f"{path}: need at least two observations")
    return PpcaData.from_observations(X)


def write_observations(path, X) -> None:
    X = np.asarray(X, dtype=float)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow([f"x{k + 1}" for k in range(X.shape[1])])
        for row in X:
            w.writerow([repr(float(v)) for v in row])


def _edge_list(rows, path, first_line) -> np.ndarray:
    labels: dict[str, int] = {}
    edges = []
    for k, row in enumerate(rows):
        a, b = (c.strip() for c in row)
        if a == b:
            raise DataError(f"{path}: row {first_line + k} is a self-loop")
        edges.append((labels.setdefault(a, len(labels)), labels.setdefault(b, len(labels))))
    A = np.zeros((len(labels), len(labels)), dtype=int)
    for i, j in edges:
        A[i, j] = A[j, i] = 1
    return A


def read_network(path) -> NetworkData:
    """Dense 0/1 adjacency matrix, or a two-column edge list.

    The format is chosen by column count: two columns mean an edge list with
    arbitrary node labels (so dense input needs at least three nodes).
    """
    raw = _rows(path)
    if raw and len(raw[0]) == 2:
        rows, first_line = raw, 1
        if rows and rows[0][0].strip().lower() in {"source", "from", "i", "node1", "u"}:
            rows, first_line = rows[1:], 2
        for k, row in enumerate(rows):
            if len(row) != 2:
                raise DataError(f"{path}: row {first_line + k} has {len(row)} fields, expected 2")
        if not rows:
            raise DataError(f"{path}: no edges")
        A = _edge_list(rows, path, first_line)
    else:
        M = read_matrix(path)
        if M.shape[0] != M.shape[1]:
            raise DataError(f"{path}: adjacency matrix is {M.shape[0]}x{M.shape[1]}, not square")
        A = M
    try:
        return NetworkData(A)
    except DomainError as exc:
        raise DataError(f"{path}: {exc}") from None


def holdout_mask(n_nodes: int, fraction: float, rng) -> np.ndarray:
    """Symmetric boolean mask of observed dyads; ``fraction`` of the upper triangle is hidden."""
    if not 0 <= fraction < 1:
        raise DomainError(f"holdout fraction must lie in [0, 1), got {fraction}")
    iu = np.triu_indices(n_nodes, 1)
    hide = rng.permutation(iu[0].size)[: int(math.floor(fraction * iu[0].size))]
    mask = np.ones((n_nodes, n_nodes), dtype=bool)
    mask[iu[0][hide], iu[1][hide]] = False
    mask = mask & mask.T
    np.fill_diagonal(mask, False)
    return mask
