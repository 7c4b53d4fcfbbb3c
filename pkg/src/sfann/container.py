"""Binary index container.

Layout (all little-endian)::

    b"SFAN"  u32 version  u32 header_len  header  u32 n_sections  section*

The header packs ``n, dim`` (u64), ``eps, c`` (f64), ``flags`` (u32),
``seed, start`` (u64) and the multires ``eps`` (f64).  A section is
``u16 name_len, name, u8 dtype code, u8 ndim, u64 shape[ndim], payload``.

Arbitrary-precision quadtree coordinates (origin and shift) are stored as
fixed-width two's-complement byte strings.  The multires slices are stored;
their cluster graphs are rebuilt on load, which is deterministic.
"""

from __future__ import annotations

import struct
from typing import Optional

import numpy as np

from .errors import FormatError
from .greedy import GreedyOrder, make_greedy
from .hst import AncestorIndex, Hst
from .metric import PointSet
from .multires import ClusterGraph, MultiResIndex, Slice
from .navgraph import NavGraph, build_graph
from .reverse_tree import ReverseTree
from .rough import ExactRough, RoughAnnIndex
from .search import SpreadFreeIndex

MAGIC = b"SFAN"
VERSION = 1
FLAG_MULTIRES = 1
FLAG_EXACT_ROUGH = 2

_HEADER = struct.Struct("<QQddIQQd")
_DTYPES = {0: "<f8", 1: "<i8", 2: "<u1"}
_CODES = {v: k for k, v in _DTYPES.items()}


def _bigints_to_array(vals) -> np.ndarray:
    width = max((v.bit_length() + 8) // 8 for v in vals) if vals else 1
    buf = b"".join(int(v).to_bytes(width, "little", signed=True) for v in vals)
    return np.frombuffer(buf, dtype=np.uint8).reshape(len(vals), width)


def _array_to_bigints(arr: np.ndarray) -> tuple:
    return tuple(int.from_bytes(row.tobytes(), "little", signed=True) for row in arr)


def _sections(index: SpreadFreeIndex, multires: Optional[MultiResIndex]) -> dict[str, np.ndarray]:
    g, G, H, A = index.greedy, index.graph, index.hst, index.anc
    out = {
        "points": index.P.points,
        "greedy.order": g.order,
        "greedy.radii": g.radii,
        "greedy.friend_offsets": g.friend_offsets,
        "greedy.friend_ranks": g.friend_ranks,
        "graph.offsets": G.offsets,
        "graph.targets": G.targets,
        "graph.labels": G.labels,
    }
    for name in ("parent", "left", "right", "label", "rep", "tin", "tout",
                 "leaf_lo", "leaf_hi", "leaf_order", "sigma_min"):
        out[f"hst.{name}"] = getattr(H, name)
    for name in ("vertex", "edge", "down", "up"):
        out[f"anc.{name}"] = getattr(A, name)
    out["rev.parent"] = index.rev.parent
    R = index.rough
    if isinstance(R, RoughAnnIndex):
        out["rough.width"] = np.array([R.width], dtype=np.int64)
        out["rough.origin"] = _bigints_to_array(R.origin)
        out["rough.shift"] = _bigints_to_array(R.shift)
        out["rough.shift_float"] = R.shift_float
        out["rough.node_depth"] = R.node_depth
        out["rough.node_rep"] = R.node_rep
        out["rough.node_parent"] = R.node_parent
        out["rough.rho"] = np.array([R.rho])
    if multires is not None:
        res = sorted(multires.slices)
        sl = [multires.slices[i] for i in res]
        out["mr.resolutions"] = np.array(res, dtype=np.int64)
        out["mr.offsets"] = np.cumsum([0] + [s.members.shape[0] for s in sl]).astype(np.int64)
        cat = lambda xs: np.concatenate(xs) if xs else np.zeros(0, dtype=np.int64)  # noqa: E731
        out["mr.members"] = cat([s.members for s in sl])
        out["mr.heads"] = cat([s.heads for s in sl])
        out["mr.graph_ids"] = cat([s.graph_ids for s in sl])
        out["mr.M"] = np.array([multires.M], dtype=np.int64)
    return out


def dumps(index: SpreadFreeIndex, multires: Optional[MultiResIndex] = None) -> bytes:
    flags = (FLAG_MULTIRES if multires is not None else 0) | (
        FLAG_EXACT_ROUGH if isinstance(index.rough, ExactRough) else 0
    )
    header = _HEADER.pack(
        index.n, index.P.dim, index.eps, index.greedy.c_const, flags, index.seed,
        int(index.greedy.order[0]),
        multires.eps if multires is not None else 0.0,
    )
    parts = [MAGIC, struct.pack("<II", VERSION, len(header)), header]
    secs = _sections(index, multires)
    parts.append(struct.pack("<I", len(secs)))
    for name, arr in secs.items():
        arr = np.asarray(arr)
        dt = {"f": "<f8", "i": "<i8", "u": "<u1"}.get(arr.dtype.kind)
        if dt is None or (dt == "<u1" and arr.dtype.itemsize != 1):
            raise TypeError(f"section {name} has unsupported dtype {arr.dtype}")
        key = name.encode()
        parts.append(struct.pack("<H", len(key)) + key)
        parts.append(struct.pack("<BB", _CODES[dt], arr.ndim))
        parts.append(struct.pack(f"<{arr.ndim}Q", *arr.shape))
        parts.append(np.ascontiguousarray(arr, dtype=dt).tobytes())
    return b"".join(parts)


class _Reader:
    def __init__(self, data: bytes):
        self.data = data
        self.pos = 0

    def take(self, k: int) -> bytes:
        if self.pos + k > len(self.data):
            raise FormatError("index file is truncated")
        out = self.data[self.pos : self.pos + k]
        self.pos += k
        return out

    def unpack(self, fmt: str):
        return struct.unpack(fmt, self.take(struct.calcsize(fmt)))


def loads(data: bytes) -> tuple[SpreadFreeIndex, Optional[MultiResIndex], dict]:
    """Inverse of :func:`dumps`; returns ``(index, multires or None, header)``."""
    rd = _Reader(data)
    if rd.take(4) != MAGIC:
        raise FormatError("not an SFAN index file")
    version, hlen = rd.unpack("<II")
    if version != VERSION:
        raise FormatError(f"index format version {version}, expected {VERSION}")
    if hlen != _HEADER.size:
        raise FormatError("unexpected header size")
    n, dim, eps, c, flags, seed, start, mr_eps = _HEADER.unpack(rd.take(hlen))
    (count,) = rd.unpack("<I")
    secs: dict[str, np.ndarray] = {}
    for _ in range(count):
        (klen,) = rd.unpack("<H")
        name = rd.take(klen).decode()
        code, ndim = rd.unpack("<BB")
        if code not in _DTYPES:
            raise FormatError(f"section {name}: unknown dtype code {code}")
        shape = rd.unpack(f"<{ndim}Q")
        dt = np.dtype(_DTYPES[code])
        size = int(np.prod(shape, dtype=np.int64)) * dt.itemsize
        secs[name] = np.frombuffer(rd.take(size), dtype=dt).reshape(shape).copy()
    if rd.pos != len(data):
        raise FormatError("trailing bytes after last section")
    try:
        return _assemble(secs, n, dim, eps, c, flags, seed, mr_eps) + (
            {"n": n, "dim": dim, "eps": eps, "c": c, "flags": flags, "seed": seed, "start": start},
        )
    except KeyError as exc:
        raise FormatError(f"missing section {exc}") from None


def _assemble(secs, n, dim, eps, c, flags, seed, mr_eps):
    P = PointSet(secs["points"])
    if P.n != n or P.dim != dim:
        raise FormatError("header does not match the stored points")
    order = secs["greedy.order"]
    rank_of = np.empty_like(order)
    rank_of[order] = np.arange(n, dtype=np.int64)
    greedy = GreedyOrder(
        order, rank_of, secs["greedy.radii"], secs["greedy.friend_offsets"],
        secs["greedy.friend_ranks"], eps, c,
    )
    graph = NavGraph(secs["graph.offsets"], secs["graph.targets"], secs["graph.labels"])
    H = Hst(*(secs[f"hst.{k}"] for k in (
        "parent", "left", "right", "label", "rep", "tin", "tout",
        "leaf_lo", "leaf_hi", "leaf_order", "sigma_min")))
    A = AncestorIndex(*(secs[f"anc.{k}"] for k in ("vertex", "edge", "down", "up")))
    rev = ReverseTree(secs["rev.parent"])
    if flags & FLAG_EXACT_ROUGH:
        rough = ExactRough(P)
    else:
        rough = RoughAnnIndex(
            width=int(secs["rough.width"][0]),
            origin=_array_to_bigints(secs["rough.origin"]),
            shift=_array_to_bigints(secs["rough.shift"]),
            shift_float=secs["rough.shift_float"],
            node_depth=secs["rough.node_depth"],
            node_rep=secs["rough.node_rep"],
            node_parent=secs["rough.node_parent"],
            rho=float(secs["rough.rho"][0]),
            P=P,
        )
    index = SpreadFreeIndex(P, greedy, graph, H, A, rev, rough, seed)
    mr = None
    if flags & FLAG_MULTIRES:
        mr = _assemble_multires(secs, P, H, A, rough, mr_eps, c)
    return index, mr


def _assemble_multires(secs, P, H, A, rough, eps, c) -> MultiResIndex:
    res, offs = secs["mr.resolutions"], secs["mr.offsets"]
    members, heads, gids = secs["mr.members"], secs["mr.heads"], secs["mr.graph_ids"]
    slices = {}
    by_gid: dict[int, np.ndarray] = {}
    for k, i in enumerate(res.tolist()):
        lo, hi = int(offs[k]), int(offs[k + 1])
        sl = Slice(i, members[lo:hi], heads[lo:hi], gids[lo:hi])
        slices[i] = sl
        for g in np.unique(sl.graph_ids).tolist():
            if g not in by_gid:
                by_gid[g] = sl.members[sl.graph_ids == g]
    graphs = []
    for g in range(len(by_gid)):
        if g not in by_gid:
            raise FormatError("multires graph ids are not contiguous")
        mem = by_gid[g]
        sub = P.subset(mem)
        greedy = make_greedy(sub, eps / 2.0, c)
        graphs.append(ClusterGraph(mem, sub, greedy, build_graph(greedy)))
    return MultiResIndex(P, H, A, rough, eps, int(secs["mr.M"][0]), slices, graphs, c)


def save(path, index: SpreadFreeIndex, multires: Optional[MultiResIndex] = None) -> None:
    with open(path, "wb") as fh:
        fh.write(dumps(index, multires))


def load(path) -> tuple[SpreadFreeIndex, Optional[MultiResIndex], dict]:
    with open(path, "rb") as fh:
        return loads(fh.read())
