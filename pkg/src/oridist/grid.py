"""Multiresolution gridding of unique 3D rotations.

The grid starts from the 600-cell, the regular 4-polytope whose 120
vertices lie on the unit 3-sphere and whose 600 cells are tetrahedra.
Rotations are quotiented by the antipodal map: of the 600 cells, the 330
whose normalized centroid has ``w >= 0`` are retained (the 60 straddling
the ``w = 0`` equator are kept on both sides), and each retained
tetrahedron is split into 8 per subdivision level, with edge midpoints
re-projected onto the sphere and coincident vertices merged.

At level 2 this yields exactly 3885 vertices. Because the retained
complex wraps the equator, a thin band of orientations appears under both
antipodal signs (3885 vertices cover 3240 distinct rotations); all
distance computations use the antipodally invariant rotation angle, so
queries are unaffected.
"""
import itertools
import json
import os

import numpy as np
from scipy.spatial import cKDTree

from . import quaternion as quat
from .kernels import topk_abs_dot

GOLDEN = (1.0 + np.sqrt(5.0)) / 2.0

# closed-sphere combinatorics of the subdivided 600-cell:
# V' = V + E,  E' = 2E + 3F + T,  F' = 4F + 8T,  T' = 8T
_FULL_SPHERE = {"V": 120, "E": 720, "F": 1200, "T": 600}

# vertices within this 4D distance are the same point up to roundoff
_MERGE_TOL = 1e-8

CACHE_FORMAT = 1


def _base_vertices():
    """The 120 vertices of the 600-cell, unit norm by construction."""
    verts = set()
    for signs in itertools.product((0.5, -0.5), repeat=4):
        verts.add(signs)
    for i in range(4):
        for s in (1.0, -1.0):
            v = [0.0] * 4
            v[i] = s
            verts.add(tuple(v))
    base = (GOLDEN / 2.0, 0.5, 1.0 / (2.0 * GOLDEN), 0.0)
    for p in itertools.permutations(range(4)):
        if _parity(p) != 1:
            continue
        for signs in itertools.product((1.0, -1.0), repeat=4):
            verts.add(tuple(signs[i] * base[p.index(i)] for i in range(4)))
    return np.array(sorted(verts))


def _parity(p):
    p = list(p)
    parity = 1
    for i in range(len(p)):
        while p[i] != i:
            j = p[i]
            p[i], p[j] = p[j], p[i]
            parity = -parity
    return parity


def _base_cells(verts):
    """600 tetrahedral cells as 4-cliques at the minimal edge distance.

    Adjacent 600-cell vertices have dot product ``cos(36 deg)``.
    """
    gram = verts @ verts.T
    np.fill_diagonal(gram, -2.0)
    adj = np.abs(gram - GOLDEN / 2.0) < 1e-9
    nbrs = [set(np.nonzero(row)[0]) for row in adj]
    n_edges = int(adj.sum()) // 2
    if n_edges != 720:
        raise RuntimeError(f"600-cell edge count {n_edges} != 720")
    cells = set()
    for i in range(len(verts)):
        for j in sorted(nbrs[i]):
            if j < i:
                continue
            common = sorted(n for n in (nbrs[i] & nbrs[j]) if n > j)
            for a_pos, a in enumerate(common):
                for b in common[a_pos + 1:]:
                    if b in nbrs[a]:
                        cells.add((i, j, a, b))
    if len(cells) != 600:
        raise RuntimeError(f"600-cell cell count {len(cells)} != 600")
    return np.array(sorted(cells))


def _subdivide_once(verts, tets):
    """Split every tetrahedron into 8 via sphere-projected edge midpoints."""
    edge_id = {}
    edges = []
    for tet in tets:
        for a, b in itertools.combinations(sorted(tet.tolist()), 2):
            if (a, b) not in edge_id:
                edge_id[(a, b)] = len(verts) + len(edges)
                edges.append((a, b))
    pairs = np.array(edges)
    mids = verts[pairs[:, 0]] + verts[pairs[:, 1]]
    mids /= np.linalg.norm(mids, axis=1, keepdims=True)
    new_verts = np.vstack([verts, mids])

    out = np.empty((len(tets) * 8, 4), dtype=np.int64)
    for t, tet in enumerate(tets):
        a, b, c, d = sorted(tet.tolist())
        mab = edge_id[(a, b)]
        mac = edge_id[(a, c)]
        mad = edge_id[(a, d)]
        mbc = edge_id[(b, c)]
        mbd = edge_id[(b, d)]
        mcd = edge_id[(c, d)]
        out[8 * t:8 * t + 8] = [
            (a, mab, mac, mad),
            (b, mab, mbc, mbd),
            (c, mac, mbc, mcd),
            (d, mad, mbd, mcd),
            # central octahedron, fanned around the mab-mcd diagonal
            (mab, mcd, mac, mbc),
            (mab, mcd, mbc, mbd),
            (mab, mcd, mbd, mad),
            (mab, mcd, mad, mac),
        ]
    return new_verts, out


def _merge_coincident(verts, tets):
    """Merge vertices closer than the roundoff tolerance; keep first index."""
    tree = cKDTree(verts)
    pairs = tree.query_pairs(_MERGE_TOL, output_type="ndarray")
    remap = np.arange(len(verts))
    for a, b in sorted(map(tuple, pairs)):
        remap[b] = remap[a]
    while np.any(remap[remap] != remap):  # collapse merge chains
        remap = remap[remap]
    used = np.unique(remap[np.unique(tets)])
    new_id = np.full(len(verts), -1, dtype=np.int64)
    new_id[used] = np.arange(len(used))
    return verts[used], new_id[remap[tets]]


def _sort_vertices(verts, tets):
    order = np.lexsort(np.flipud(verts.T))
    rank = np.empty(len(order), dtype=np.int64)
    rank[order] = np.arange(len(order))
    return verts[order], np.sort(rank[tets], axis=1)


class S3Grid:
    """Immutable rotation grid: vertices, tetrahedra, and nearest queries."""

    def __init__(self, level, vertices, tetra, full_sphere_vertex_count):
        self.level = int(level)
        self.vertices = np.ascontiguousarray(vertices, dtype=np.float64)
        self.tetra = np.asarray(tetra, dtype=np.int64)
        self.full_sphere_vertex_count = int(full_sphere_vertex_count)
        self.vertices.setflags(write=False)
        self.tetra.setflags(write=False)

    def __len__(self):
        return len(self.vertices)

    @property
    def unique_orientation_count(self):
        """Number of distinct rotations among the vertices (antipodal classes)."""
        can = quat.canonical(self.vertices)
        return len(np.unique(np.round(can, 9), axis=0))

    def nearest(self, q, k=1):
        """The ``k`` nearest vertices to quaternion ``q``.

        Returns ``(indices, angles)``, sorted by increasing rotation angle
        with exact ties broken by vertex index.
        """
        idx, absdot = topk_abs_dot(np.asarray(q, dtype=float)[None, :],
                                   self.vertices, k)
        ang = 2.0 * np.arccos(np.clip(absdot[0], 0.0, 1.0))
        return idx[0], ang

    def nearest_many(self, qs, k=1):
        """Batched :meth:`nearest`; ``qs`` has shape ``(B, 4)``."""
        idx, absdot = topk_abs_dot(np.asarray(qs, dtype=float), self.vertices, k)
        return idx, 2.0 * np.arccos(np.clip(absdot, 0.0, 1.0))

    def coverage_stats(self, n_samples, rng):
        """Max and mean rotation angle (degrees) to the nearest vertex.

        Sampled over ``n_samples`` uniform random rotations.
        """
        max_ang = 0.0
        sum_ang = 0.0
        remaining = int(n_samples)
        while remaining > 0:
            m = min(remaining, 20000)
            qs = quat.random_uniform(rng, m)
            _, ang = self.nearest_many(qs, k=1)
            max_ang = max(max_ang, float(ang.max()))
            sum_ang += float(ang.sum())
            remaining -= m
        return np.degrees(max_ang), np.degrees(sum_ang / n_samples)

    def validate(self):
        """Check structural invariants; raises ``ValueError`` on failure."""
        norms = np.linalg.norm(self.vertices, axis=1)
        if np.any(np.abs(norms - 1.0) > 1e-9):
            raise ValueError("grid vertex not unit norm")
        if len(self.tetra) and (self.tetra.min() < 0
                                or self.tetra.max() >= len(self.vertices)):
            raise ValueError("tetra index out of range")
        tree = cKDTree(self.vertices)
        if len(tree.query_pairs(_MERGE_TOL)) > 0:
            raise ValueError("duplicate vertices within merge tolerance")
        if self.full_sphere_vertex_count != _full_counts(self.level)["V"]:
            raise ValueError("inconsistent full-sphere vertex count")

    def save(self, path):
        payload = {
            "format": CACHE_FORMAT,
            "level": self.level,
            "full_sphere_vertex_count": self.full_sphere_vertex_count,
            "vertices": self.vertices.tolist(),
            "tetra": self.tetra.tolist(),
        }
        with open(path, "w") as f:
            json.dump(payload, f)

    @classmethod
    def load(cls, path):
        with open(path) as f:
            payload = json.load(f)
        if payload.get("format") != CACHE_FORMAT:
            raise ValueError(f"unsupported grid cache format in {path}")
        g = cls(payload["level"], np.array(payload["vertices"]),
                np.array(payload["tetra"]),
                payload["full_sphere_vertex_count"])
        g.validate()
        return g


def _full_counts(level):
    c = dict(_FULL_SPHERE)
    for _ in range(level):
        c = {"V": c["V"] + c["E"],
             "E": 2 * c["E"] + 3 * c["F"] + c["T"],
             "F": 4 * c["F"] + 8 * c["T"],
             "T": 8 * c["T"]}
    return c


def build_grid(level, cache_dir=None):
    """Construct (or load from cache) the rotation grid at ``level``.

    Construction is deterministic: identical levels produce bitwise
    identical grids.
    """
    if cache_dir is not None:
        path = os.path.join(cache_dir, f"s3grid_level{level}.json")
        if os.path.exists(path):
            return S3Grid.load(path)

    verts = _base_vertices()
    tets = _base_cells(verts)
    cents = verts[tets].mean(axis=1)
    cents /= np.linalg.norm(cents, axis=1, keepdims=True)
    tets = tets[cents[:, 0] >= -1e-12]
    for _ in range(level):
        verts, tets = _subdivide_once(verts, tets)
    verts, tets = _merge_coincident(verts, tets)
    verts, tets = _sort_vertices(verts, tets)

    grid = S3Grid(level, verts, tets, _full_counts(level)["V"])
    grid.validate()
    if cache_dir is not None:
        os.makedirs(cache_dir, exist_ok=True)
        grid.save(path)
    return grid
