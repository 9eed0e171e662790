"""Linear node features: similarity-weighted miRNA interaction profiles.

Node order is fixed here for the whole package: lncRNAs occupy rows
``0..p-1`` of the stacked feature matrix, diseases rows ``p..p+q-1``.
"""

import numpy as np

from .ingest import AssociationMatrix
from .numerics import ShapeError, matmul


def _values(m):
    return m.values if isinstance(m, AssociationMatrix) else np.asarray(m, dtype=np.float64)


def lncrna_linear(lfs, ml):
    return matmul(lfs, _values(ml))


def disease_linear(ds, md):
    return matmul(ds, _values(md))


def stack(fl, fd):
    fl = np.asarray(fl, dtype=np.float64)
    fd = np.asarray(fd, dtype=np.float64)
    if fl.shape[1] != fd.shape[1]:
        raise ShapeError(f"feature widths differ: lncRNA {fl.shape}, disease {fd.shape}")
    return np.vstack([fl, fd])


def split(f, p):
    """Inverse of :func:`stack` given the lncRNA count ``p``."""
    return f[:p], f[p:]


def row_normalize(f):
    norms = np.linalg.norm(f, axis=1, keepdims=True)
    return np.divide(f, norms, out=np.zeros_like(f), where=norms > 0)


def linear_features(lfs, ds, ml, md, normalize=False):
    f = stack(lncrna_linear(lfs, ml), disease_linear(ds, md))
    return row_normalize(f) if normalize else f


def write_features_tsv(path, f, node_ids):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for name, row in zip(node_ids, f):
            fh.write(name + "\t" + "\t".join(repr(float(x)) for x in row) + "\n")
