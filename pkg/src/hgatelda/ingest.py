"""Readers for entity lists, association edge lists and the disease DAG.

All inputs are plain UTF-8 text. Entity lists hold one ID per line, edge
lists and the DAG hold two tab-separated IDs per line. Lines starting with
``#`` and blank lines are skipped. IDs are case-sensitive and trimmed.
"""

from collections import deque
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

ROLES = {
    # role: (row axis, column axis)
    "LD": ("lncrnas", "diseases"),
    "ML": ("lncrnas", "mirnas"),
    "MD": ("diseases", "mirnas"),
}


class IngestError(ValueError):
    pass


class CycleError(IngestError):
    def __init__(self, cycle):
        self.cycle = list(cycle)
        super().__init__("disease DAG contains a cycle: " + " -> ".join(self.cycle))


def _read_lines(path, header=False):
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"input file not found: {path}")
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            if header and lineno == 1:
                continue
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            yield lineno, raw.rstrip("\r\n")


@dataclass(frozen=True)
class EntityRegistry:
    lncrnas: tuple
    diseases: tuple
    mirnas: tuple
    _index: dict = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        index = {}
        for axis in ("lncrnas", "diseases", "mirnas"):
            ids = getattr(self, axis)
            lookup = {name: i for i, name in enumerate(ids)}
            if len(lookup) != len(ids):
                raise IngestError(f"duplicate IDs in {axis}")
            index[axis] = lookup
        object.__setattr__(self, "_index", index)

    @property
    def p(self):
        return len(self.lncrnas)

    @property
    def q(self):
        return len(self.diseases)

    @property
    def r(self):
        return len(self.mirnas)

    def index(self, axis, name):
        return self._index[axis][name]

    def has(self, axis, name):
        return name in self._index[axis]

    def size(self, axis):
        return len(getattr(self, axis))


def read_entities(path, header=False):
    seen = {}
    for lineno, line in _read_lines(path, header):
        name = line.strip()
        if name in seen:
            raise IngestError(f"{path}:{lineno}: duplicate ID {name!r} (first seen on line {seen[name]})")
        seen[name] = lineno
    if not seen:
        raise IngestError(f"{path}: no IDs found")
    return tuple(seen)


def load_registry(lncrna_path, disease_path, mirna_path, header=False):
    return EntityRegistry(
        read_entities(lncrna_path, header),
        read_entities(disease_path, header),
        read_entities(mirna_path, header),
    )


@dataclass(frozen=True)
class AssociationMatrix:
    """Binary interaction matrix whose axes are fixed by ``role``."""

    role: str
    values: np.ndarray
    duplicates: int = 0

    def __post_init__(self):
        if self.role not in ROLES:
            raise IngestError(f"unknown association role {self.role!r}")
        v = np.array(self.values, dtype=np.float64)
        if v.ndim != 2 or not np.all((v == 0.0) | (v == 1.0)):
            raise IngestError(f"{self.role} matrix must be a 2-d 0/1 matrix")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @property
    def shape(self):
        return self.values.shape

    @property
    def n_edges(self):
        return int(self.values.sum())

    def with_values(self, values):
        return AssociationMatrix(self.role, values)


def load_associations(path, role, registry, header=False):
    if role not in ROLES:
        raise IngestError(f"unknown association role {role!r}")
    row_axis, col_axis = ROLES[role]
    values = np.zeros((registry.size(row_axis), registry.size(col_axis)))
    duplicates = 0
    for lineno, line in _read_lines(path, header):
        parts = [p.strip() for p in line.split("\t")]
        if len(parts) != 2:
            raise IngestError(f"{path}:{lineno}: expected 2 tab-separated columns, found {len(parts)}")
        src, dst = parts
        for name, axis in ((src, row_axis), (dst, col_axis)):
            if not registry.has(axis, name):
                raise IngestError(f"{path}:{lineno}: unknown {axis[:-1]} ID {name!r}")
        i, j = registry.index(row_axis, src), registry.index(col_axis, dst)
        if values[i, j]:
            duplicates += 1
        values[i, j] = 1.0
    return AssociationMatrix(role, values, duplicates)


@dataclass(frozen=True)
class DiseaseDag:
    """Disease ontology as child -> parent edges over registry diseases."""

    nodes: tuple
    parents: dict  # node -> tuple of parents

    def __post_init__(self):
        known = set(self.nodes)
        for child, ps in self.parents.items():
            for node in (child, *ps):
                if node not in known:
                    raise IngestError(f"DAG edge references unknown disease {node!r}")
        cycle = _find_cycle(self.nodes, self.parents)
        if cycle:
            raise CycleError(cycle)
        children = {n: [] for n in self.nodes}
        for child, ps in self.parents.items():
            for parent in ps:
                children[parent].append(child)
        object.__setattr__(self, "_children", {n: tuple(c) for n, c in children.items()})

    @classmethod
    def from_edges(cls, nodes, edges):
        parents = {n: [] for n in nodes}
        for child, parent in edges:
            if child not in parents:
                raise IngestError(f"DAG edge references unknown disease {child!r}")
            if parent not in parents[child]:
                parents[child].append(parent)
        return cls(tuple(nodes), {n: tuple(p) for n, p in parents.items()})

    def children(self, node):
        return self._children[node]

    def __contains__(self, node):
        return node in self.parents


def _find_cycle(nodes, parents):
    # Iterative DFS with colouring; returns one cycle as a node list or None.
    WHITE, GREY, BLACK = 0, 1, 2
    colour = {n: WHITE for n in nodes}
    for start in nodes:
        if colour[start] != WHITE:
            continue
        stack = [(start, iter(parents.get(start, ())))]
        path = [start]
        colour[start] = GREY
        while stack:
            node, it = stack[-1]
            nxt = next(it, None)
            if nxt is None:
                colour[node] = BLACK
                stack.pop()
                path.pop()
            elif colour[nxt] == GREY:
                return path[path.index(nxt):] + [nxt]
            elif colour[nxt] == WHITE:
                colour[nxt] = GREY
                stack.append((nxt, iter(parents.get(nxt, ()))))
                path.append(nxt)
    return None


def load_dag(path, registry, header=False):
    edges = []
    for lineno, line in _read_lines(path, header):
        parts = [p.strip() for p in line.split("\t")]
        if len(parts) != 2:
            raise IngestError(f"{path}:{lineno}: expected child<TAB>parent, found {len(parts)} columns")
        for name in parts:
            if not registry.has("diseases", name):
                raise IngestError(f"{path}:{lineno}: unknown disease ID {name!r}")
        edges.append(tuple(parts))
    return DiseaseDag.from_edges(registry.diseases, edges)


def ancestors(dag, d):
    """Reflexive-transitive parent closure of ``d``."""
    if d not in dag:
        raise IngestError(f"unknown disease {d!r}")
    seen = {d}
    queue = deque([d])
    while queue:
        for parent in dag.parents[queue.popleft()]:
            if parent not in seen:
                seen.add(parent)
                queue.append(parent)
    return seen


@dataclass(frozen=True)
class Dataset:
    registry: EntityRegistry
    ld: AssociationMatrix
    ml: AssociationMatrix
    md: AssociationMatrix
    dag: DiseaseDag


def load_dataset(lncrnas, diseases, mirnas, ld, ml, md, dag, header=False):
    registry = load_registry(lncrnas, diseases, mirnas, header)
    return Dataset(
        registry,
        load_associations(ld, "LD", registry, header),
        load_associations(ml, "ML", registry, header),
        load_associations(md, "MD", registry, header),
        load_dag(dag, registry, header),
    )
