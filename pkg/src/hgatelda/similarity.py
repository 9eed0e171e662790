"""Disease semantic similarity over the DAG and lncRNA functional similarity."""

import numpy as np

from .ingest import AssociationMatrix, IngestError, ancestors
from .numerics import ShapeError

DEFAULT_DELTA = 0.5


def contribution(dag, d, delta=DEFAULT_DELTA):
    """Semantic contribution of every ancestor of ``d`` (``d`` itself gets 1).

    An ancestor's value is ``delta`` times the largest value among its
    children that also lie in the ancestor set of ``d``. Nodes are visited
    child-before-parent so each max is taken over finished children.
    """
    if not 0.0 < delta < 1.0:
        raise ValueError(f"delta must lie in (0, 1), got {delta}")
    scope = ancestors(dag, d)
    pending = {m: sum(1 for c in dag.children(m) if c in scope) for m in scope}
    values = {}
    ready = [d]
    while ready:
        m = ready.pop()
        if m == d:
            values[m] = 1.0
        else:
            values[m] = delta * max(values[c] for c in dag.children(m) if c in scope)
        for parent in dag.parents[m]:
            pending[parent] -= 1
            if pending[parent] == 0:
                ready.append(parent)
    return values


def semantic_value(dag, d, delta=DEFAULT_DELTA):
    return sum(contribution(dag, d, delta).values())


def contribution_matrix(dag, registry, delta=DEFAULT_DELTA):
    """q x q matrix whose row i holds the contributions of each disease to disease i."""
    q = registry.q
    out = np.zeros((q, q))
    for i, d in enumerate(registry.diseases):
        if d not in dag:
            raise IngestError(f"disease {d!r} is not a DAG node")
        for m, value in contribution(dag, d, delta).items():
            out[i, registry.index("diseases", m)] = value
    return out


def disease_similarity(dag, registry, delta=DEFAULT_DELTA):
    contrib = contribution_matrix(dag, registry, delta)
    present = (contrib > 0).astype(np.float64)
    dv = contrib.sum(axis=1)
    shared = contrib @ present.T
    # shared[i, j] sums D_i(m) over m in T(i) & T(j); adding the transpose
    # gives the numerator and keeps the result exactly symmetric.
    ds = (shared + shared.T) / (dv[:, None] + dv[None, :])
    np.clip(ds, 0.0, 1.0, out=ds)
    np.fill_diagonal(ds, 1.0)
    return ds


def _ld_values(ld):
    return ld.values if isinstance(ld, AssociationMatrix) else np.asarray(ld, dtype=np.float64)


def lncrna_functional_similarity(ds, ld):
    """Best-match average of disease similarity between two lncRNAs' disease sets.

    lncRNAs without any associated disease get 0 off the diagonal.
    """
    ds = np.asarray(ds, dtype=np.float64)
    ld = _ld_values(ld)
    if ds.ndim != 2 or ds.shape[0] != ds.shape[1]:
        raise ShapeError(f"disease similarity must be square, got {ds.shape}")
    if ld.ndim != 2 or ld.shape[1] != ds.shape[0]:
        raise ShapeError(f"LD matrix {ld.shape} does not match disease similarity {ds.shape}")
    p = ld.shape[0]
    linked = ld > 0
    counts = linked.sum(axis=1).astype(np.float64)
    # best[i, d] = max over d1 in D(l_i) of DS(d, d1)
    best = np.zeros((p, ds.shape[0]))
    for i in range(p):
        if counts[i]:
            best[i] = ds[:, linked[i]].max(axis=1)
    scores = linked.astype(np.float64) @ best.T  # scores[j, i] = sum_{d in D(l_j)} best[i, d]
    total = counts[:, None] + counts[None, :]
    both = (counts[:, None] > 0) & (counts[None, :] > 0)
    lfs = np.zeros((p, p))
    np.divide(scores + scores.T, total, out=lfs, where=both)
    np.clip(lfs, 0.0, 1.0, out=lfs)
    np.fill_diagonal(lfs, 1.0)
    return lfs


def write_similarity_tsv(path, matrix, ids):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for i, a in enumerate(ids):
            for j, b in enumerate(ids):
                fh.write(f"{a}\t{b}\t{float(matrix[i, j])!r}\n")
