"""Point-to-key resolution over static boundary layers.

The index is a bounding-box tree bulk-loaded with sort-tile-recursive
packing: entries are first ordered by key code (so identical inputs
always produce identical structure), then tiled by bbox centers into
fixed-capacity nodes. Boundaries never change after deployment, so
there is no incremental insert path.

Containment is planar even-odd ray casting in lon/lat degrees with a
half-open vertex rule: an edge counts iff exactly one endpoint's
latitude lies strictly above the query latitude, and the crossing's
longitude lies strictly to the right of the query point. Points shared
by several polygons (edges, vertices) resolve to the lexicographically
smallest code so batch output never depends on traversal order.
"""

from __future__ import annotations

import math
import struct
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .boundaries import BoundarySet, PolygonShape, Ring
from .errors import SpatialError
from .geo import GeoKey, GeoLevel, LonLat

NODE_CAPACITY = 16

_MAGIC = b"ALSIDX1\x00"


def _ring_array(ring: Ring) -> np.ndarray:
    pts = [(v.lon, v.lat) for v in ring.vertices]
    if pts and pts[0] != pts[-1]:
        pts.append(pts[0])
    return np.asarray(pts, dtype=np.float64)


def _contains(rings: list[np.ndarray], lon: float, lat: float) -> bool:
    """Even-odd test over all rings (holes fall out of the parity)."""
    crossings = 0
    for arr in rings:
        lon1, lat1 = arr[:-1, 0], arr[:-1, 1]
        lon2, lat2 = arr[1:, 0], arr[1:, 1]
        straddle = (lat1 > lat) != (lat2 > lat)
        if not straddle.any():
            continue
        s = np.nonzero(straddle)[0]
        xint = lon1[s] + (lat - lat1[s]) * (lon2[s] - lon1[s]) / (lat2[s] - lat1[s])
        crossings += int(np.count_nonzero(lon < xint))
    return crossings % 2 == 1


# Below this edge count a plain Python loop beats numpy's per-call
# overhead; the two paths evaluate the identical expression, so they
# agree bit-for-bit.
_SCALAR_EDGE_LIMIT = 128


def _contains_edges(edges: list[tuple[float, float, float, float]], lon: float, lat: float) -> bool:
    crossings = 0
    for lon1, lat1, lon2, lat2 in edges:
        if (lat1 > lat) != (lat2 > lat):
            if lon < lon1 + (lat - lat1) * (lon2 - lon1) / (lat2 - lat1):
                crossings += 1
    return crossings & 1 == 1


@dataclass
class _Node:
    bbox: tuple[float, float, float, float]
    child_start: int
    child_count: int
    is_leaf: bool


class SpatialIndex:
    """Immutable bbox tree over one BoundarySet; safe for concurrent readers."""

    def __init__(self, level: GeoLevel, keys: list[GeoKey], shapes: list[PolygonShape], vintage: str = ""):
        self.level = level
        self.vintage = vintage
        self.keys = keys
        self.shapes = shapes
        self._rings = [[_ring_array(r) for r in s.rings] for s in shapes]
        self._entry_bbox = np.asarray([s.bbox for s in shapes], dtype=np.float64)
        self._build_tree()

    # -- construction ---------------------------------------------------

    def _build_tree(self):
        n = len(self.keys)
        centers_x = (self._entry_bbox[:, 0] + self._entry_bbox[:, 2]) / 2.0
        centers_y = (self._entry_bbox[:, 1] + self._entry_bbox[:, 3]) / 2.0

        # STR tiling over entry order (already sorted by key): sort by
        # center lon, cut into vertical slices, sort each slice by center
        # lat, then chunk. Stable sorts keep the layout deterministic.
        order = np.argsort(centers_x, kind="stable")
        n_leaves = math.ceil(n / NODE_CAPACITY)
        n_slices = math.ceil(math.sqrt(n_leaves))
        slice_size = math.ceil(n / n_slices)
        permutation: list[int] = []
        for s in range(0, n, slice_size):
            chunk = order[s : s + slice_size]
            chunk = chunk[np.argsort(centers_y[chunk], kind="stable")]
            permutation.extend(int(i) for i in chunk)

        self.keys = [self.keys[i] for i in permutation]
        self.shapes = [self.shapes[i] for i in permutation]
        self._rings = [self._rings[i] for i in permutation]
        self._entry_bbox = self._entry_bbox[permutation]

        nodes: list[_Node] = []
        # Leaf level: contiguous entry runs.
        level_start = 0
        for start in range(0, n, NODE_CAPACITY):
            count = min(NODE_CAPACITY, n - start)
            bb = self._entry_bbox[start : start + count]
            nodes.append(
                _Node(
                    bbox=(bb[:, 0].min(), bb[:, 1].min(), bb[:, 2].max(), bb[:, 3].max()),
                    child_start=start,
                    child_count=count,
                    is_leaf=True,
                )
            )
        level_count = len(nodes)
        # Upper levels: contiguous node runs, until a single root remains.
        while level_count > 1:
            next_start = len(nodes)
            for start in range(level_start, level_start + level_count, NODE_CAPACITY):
                count = min(NODE_CAPACITY, level_start + level_count - start)
                children = nodes[start : start + count]
                nodes.append(
                    _Node(
                        bbox=(
                            min(c.bbox[0] for c in children),
                            min(c.bbox[1] for c in children),
                            max(c.bbox[2] for c in children),
                            max(c.bbox[3] for c in children),
                        ),
                        child_start=start,
                        child_count=count,
                        is_leaf=False,
                    )
                )
            level_start = next_start
            level_count = len(nodes) - next_start
        self._nodes = nodes
        self._root = len(nodes) - 1
        self._node_bbox = np.asarray([nd.bbox for nd in nodes], dtype=np.float64)

        # Flat float lists for the scalar hot path: per-query work on
        # sixteen-wide nodes is faster without array slicing overhead.
        self._nbox = [nd.bbox for nd in nodes]
        self._nstart = [nd.child_start for nd in nodes]
        self._ncount = [nd.child_count for nd in nodes]
        self._nleaf = [nd.is_leaf for nd in nodes]
        self._ebox = [tuple(b) for b in self._entry_bbox.tolist()]
        self._edges: list[list[tuple[float, float, float, float]]] = []
        self._big: list[bool] = []
        for rings in self._rings:
            edges = []
            for arr in rings:
                pts = arr.tolist()
                edges.extend(
                    (pts[i][0], pts[i][1], pts[i + 1][0], pts[i + 1][1])
                    for i in range(len(pts) - 1)
                )
            self._edges.append(edges)
            self._big.append(len(edges) > _SCALAR_EDGE_LIMIT)

    # -- queries ----------------------------------------------------------

    def candidates(self, p: LonLat) -> list[int]:
        """Entry indices whose bbox contains p (the exact-test workload)."""
        lon, lat = p.lon, p.lat
        out: list[int] = []
        stack = [self._root]
        nbox, nstart, ncount, nleaf, ebox = (
            self._nbox, self._nstart, self._ncount, self._nleaf, self._ebox,
        )
        while stack:
            ni = stack.pop()
            lo, la, ho, ha = nbox[ni]
            if lon < lo or lon > ho or lat < la or lat > ha:
                continue
            start = nstart[ni]
            end = start + ncount[ni]
            if nleaf[ni]:
                for e in range(start, end):
                    lo, la, ho, ha = ebox[e]
                    if lo <= lon <= ho and la <= lat <= ha:
                        out.append(e)
            else:
                stack.extend(range(start, end))
        return out

    def resolve_point(self, p: LonLat) -> GeoKey | None:
        lon, lat = p.lon, p.lat
        best: GeoKey | None = None
        for idx in self.candidates(p):
            if self._big[idx]:
                inside = _contains(self._rings[idx], lon, lat)
            else:
                inside = _contains_edges(self._edges[idx], lon, lat)
            if inside:
                key = self.keys[idx]
                if best is None or key.code < best.code:
                    best = key
        return best

    def resolve_batch(self, points: list[LonLat], workers: int = 1) -> list[GeoKey | None]:
        """Elementwise resolve_point, order preserved regardless of workers."""
        if workers <= 1 or len(points) < 256:
            return [self.resolve_point(p) for p in points]
        chunk = math.ceil(len(points) / workers)
        pieces = [points[i : i + chunk] for i in range(0, len(points), chunk)]
        with ThreadPoolExecutor(max_workers=workers) as pool:
            mapped = pool.map(lambda ps: [self.resolve_point(p) for p in ps], pieces)
        out: list[GeoKey | None] = []
        for piece in mapped:
            out.extend(piece)
        return out

    # -- serialization ----------------------------------------------------

    def to_bytes(self) -> bytes:
        """Canonical byte form: level, vintage, then entries sorted by code.

        The tree itself is not stored; rebuilding it from sorted entries
        is deterministic, which keeps the format trivial and the
        byte-identity guarantee easy to uphold.
        """
        order = sorted(range(len(self.keys)), key=lambda i: self.keys[i].code)
        parts = [_MAGIC]
        level_b = self.level.value.encode("ascii")
        vintage_b = self.vintage.encode("utf-8")
        parts.append(struct.pack("<B", len(level_b)))
        parts.append(level_b)
        parts.append(struct.pack("<H", len(vintage_b)))
        parts.append(vintage_b)
        parts.append(struct.pack("<I", len(order)))
        for i in order:
            code_b = self.keys[i].code.encode("ascii")
            parts.append(struct.pack("<B", len(code_b)))
            parts.append(code_b)
            rings = self._rings[i]
            parts.append(struct.pack("<H", len(rings)))
            for arr in rings:
                parts.append(struct.pack("<I", arr.shape[0]))
                parts.append(arr.astype("<f8").tobytes())
        return b"".join(parts)

    @classmethod
    def from_bytes(cls, data: bytes) -> "SpatialIndex":
        if data[: len(_MAGIC)] != _MAGIC:
            raise SpatialError("BadIndexFile", "not a serialized spatial index")
        off = len(_MAGIC)
        (level_len,) = struct.unpack_from("<B", data, off)
        off += 1
        level = GeoLevel(data[off : off + level_len].decode("ascii"))
        off += level_len
        (vintage_len,) = struct.unpack_from("<H", data, off)
        off += 2
        vintage = data[off : off + vintage_len].decode("utf-8")
        off += vintage_len
        (n,) = struct.unpack_from("<I", data, off)
        off += 4
        keys: list[GeoKey] = []
        shapes: list[PolygonShape] = []
        for _ in range(n):
            (code_len,) = struct.unpack_from("<B", data, off)
            off += 1
            code = data[off : off + code_len].decode("ascii")
            off += code_len
            (n_rings,) = struct.unpack_from("<H", data, off)
            off += 2
            rings = []
            for _ in range(n_rings):
                (n_verts,) = struct.unpack_from("<I", data, off)
                off += 4
                arr = np.frombuffer(data, dtype="<f8", count=n_verts * 2, offset=off).reshape(-1, 2)
                off += n_verts * 2 * 8
                rings.append(Ring([LonLat(float(x), float(y)) for x, y in arr]))
            keys.append(GeoKey(level, code))
            shapes.append(PolygonShape.from_rings(rings))
        return cls(level, keys, shapes, vintage=vintage)


def build_index(bset: BoundarySet) -> SpatialIndex:
    """Pack a validated BoundarySet into an immutable query structure."""
    if not bset.entries:
        raise SpatialError("EmptySet", "cannot index an empty boundary set")
    keys = sorted(bset.entries, key=lambda k: k.code)
    shapes = [bset.entries[k] for k in keys]
    return SpatialIndex(bset.level, keys, shapes, vintage=bset.vintage)


def resolve_point(index: SpatialIndex, p: LonLat) -> GeoKey | None:
    return index.resolve_point(p)


def resolve_batch(index: SpatialIndex, points: list[LonLat], workers: int = 1) -> list[GeoKey | None]:
    return index.resolve_batch(points, workers=workers)


# --- crosswalks --------------------------------------------------------------


@dataclass
class Crosswalk:
    """Tabular mapping between unit systems, optionally weighted."""

    from_level: GeoLevel
    to_level: GeoLevel
    pairs: dict[GeoKey, list[tuple[GeoKey, float]]]


def load_crosswalk_csv(text: str, from_level: GeoLevel, to_level: GeoLevel) -> Crosswalk:
    """Parse `from_code,to_code,weight` CSV (weight column optional).

    With a weight column present, each source key's weights must sum to
    1 within 1e-9; without one, every pair carries weight 1.
    """
    import csv
    import io

    reader = csv.reader(io.StringIO(text))
    try:
        header = next(reader)
    except StopIteration:
        raise SpatialError("EmptyCrosswalk", "crosswalk file has no header") from None
    header = [h.strip().lower() for h in header]
    if header[:2] != ["from_code", "to_code"]:
        raise SpatialError(
            "BadCrosswalkHeader", f"expected from_code,to_code[,weight]; got {header}"
        )
    weighted = len(header) > 2 and header[2] == "weight"

    from .geo import parse_geo_key

    pairs: dict[GeoKey, list[tuple[GeoKey, float]]] = {}
    for row in reader:
        if not row or not any(cell.strip() for cell in row):
            continue
        src = parse_geo_key(row[0], from_level)
        dst = parse_geo_key(row[1], to_level)
        weight = 1.0
        if weighted and len(row) > 2 and row[2].strip():
            weight = float(row[2])
        if not 0.0 <= weight <= 1.0:
            raise SpatialError("BadWeights", f"weight {weight} outside [0, 1] for {src}")
        pairs.setdefault(src, []).append((dst, weight))
    if weighted:
        for src, targets in pairs.items():
            total = sum(w for _, w in targets)
            if abs(total - 1.0) > 1e-9:
                raise SpatialError("BadWeights", f"weights for {src} sum to {total}, not 1")
    return Crosswalk(from_level=from_level, to_level=to_level, pairs=pairs)


def crosswalk_lookup(xw: Crosswalk, key: GeoKey) -> list[tuple[GeoKey, float]]:
    """Mapped (target, weight) pairs for one source key; [] when unmapped."""
    if key.level is not xw.from_level:
        raise SpatialError(
            "LevelMismatch", f"{key.level} key queried against a {xw.from_level} crosswalk"
        )
    return list(xw.pairs.get(key, ()))
