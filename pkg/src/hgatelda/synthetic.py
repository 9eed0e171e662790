"""Synthetic datasets in the on-disk input format.

``planted_block`` builds a rank-2 association structure: lncRNAs and
diseases belong to community A, B, both or neither, and a pair is
associated when the two share a community. miRNA profiles and the disease
DAG follow the same communities so that linear and graph features both
carry signal. A fraction ``noise`` of LD entries is then flipped.

Run ``python -m hgatelda.synthetic OUT_DIR`` to write the planted fixture.
"""

import sys
from importlib import resources
from pathlib import Path

import numpy as np

from .numerics import make_rng

FILES = {
    "lncrnas": "lncrnas.txt",
    "diseases": "diseases.txt",
    "mirnas": "mirnas.txt",
    "ld": "ld.tsv",
    "ml": "ml.tsv",
    "md": "md.tsv",
    "dag": "dag.tsv",
}


def fixture_dir(name):
    """Path of a fixture shipped inside the package (``planted`` or ``siblings``)."""
    return Path(str(resources.files("hgatelda") / "data" / name))


def fixture_paths(directory):
    directory = Path(directory)
    return {key: directory / fname for key, fname in FILES.items()}


def _memberships(n, counts, rng):
    # counts = (A only, B only, both); the rest belong to neither
    labels = np.zeros((n, 2), dtype=bool)
    order = rng.permutation(n)
    a, b, both = counts
    labels[order[:a], 0] = True
    labels[order[a:a + b], 1] = True
    labels[order[a + b:a + b + both]] = True
    return labels


def _profiles(members, groups, p_in, p_background, rng):
    # groups: (n_mirna,) in {0: A, 1: B, 2: other}
    n = len(members)
    own = np.zeros((n, len(groups)), dtype=bool)
    own |= members[:, [0]] & (groups == 0)[None, :]
    own |= members[:, [1]] & (groups == 1)[None, :]
    own |= ~members.any(axis=1, keepdims=True) & (groups == 2)[None, :]
    prob = np.where(own, p_in, p_background)
    return rng.random(prob.shape) < prob


def _dag_edges(members, rng):
    """Child -> parent edges: one small tree per community, both-members get two parents."""
    community = np.where(members.all(axis=1), 3, np.where(members[:, 0], 0, np.where(members[:, 1], 1, 2)))
    edges = []
    placed = {0: [], 1: [], 2: []}
    for d in rng.permutation(len(members)):
        c = community[d]
        targets = (0, 1) if c == 3 else (c,)
        for t in targets:
            if placed[t]:
                edges.append((int(d), int(placed[t][rng.integers(len(placed[t]))])))
        if c != 3:
            placed[c].append(int(d))
    return edges


def planted_block(n_lnc=40, n_dis=60, n_mir=30, noise=0.05, seed=7):
    """Returns a dict of in-memory tables: id lists, edge lists and the DAG."""
    rng = make_rng(seed)
    lnc_members = _memberships(n_lnc, (15, 15, 4), rng)
    dis_members = _memberships(n_dis, (22, 22, 6), rng)
    truth = (lnc_members.astype(int) @ dis_members.T.astype(int)) > 0
    flips = rng.random(truth.shape) < noise
    ld = truth ^ flips
    groups = np.repeat([0, 1, 2], [12, 12, n_mir - 24])
    ml = _profiles(lnc_members, groups, 0.35, 0.02, rng)
    md = _profiles(dis_members, groups, 0.40, 0.02, rng)
    lnc_ids = [f"lnc{i + 1:03d}" for i in range(n_lnc)]
    dis_ids = [f"dis{j + 1:03d}" for j in range(n_dis)]
    mir_ids = [f"mir{m + 1:03d}" for m in range(n_mir)]
    return {
        "lncrnas": lnc_ids,
        "diseases": dis_ids,
        "mirnas": mir_ids,
        "ld": [(lnc_ids[i], dis_ids[j]) for i, j in np.argwhere(ld)],
        "ml": [(lnc_ids[i], mir_ids[m]) for i, m in np.argwhere(ml)],
        "md": [(dis_ids[j], mir_ids[m]) for j, m in np.argwhere(md)],
        "dag": [(dis_ids[c], dis_ids[p]) for c, p in sorted(_dag_edges(dis_members, rng))],
    }


def siblings():
    """Two sibling diseases under one parent, each linked to one lncRNA."""
    return {
        "lncrnas": ["l1", "l2"],
        "diseases": ["d1", "d2", "d3"],
        "mirnas": ["m1", "m2"],
        "ld": [("l1", "d2"), ("l2", "d3")],
        "ml": [("l1", "m1"), ("l2", "m2")],
        "md": [("d1", "m1"), ("d2", "m1"), ("d3", "m2")],
        "dag": [("d2", "d1"), ("d3", "d1")],
    }


def write_tables(tables, directory):
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    paths = fixture_paths(directory)
    for key, path in paths.items():
        rows = tables[key]
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            for row in rows:
                fh.write((row if isinstance(row, str) else "\t".join(row)) + "\n")
    return paths


def main(argv=None):
    argv = sys.argv[1:] if argv is None else argv
    if len(argv) != 1:
        print("usage: python -m hgatelda.synthetic OUT_DIR", file=sys.stderr)
        return 2
    write_tables(planted_block(), argv[0])
    return 0


if __name__ == "__main__":
    sys.exit(main())
