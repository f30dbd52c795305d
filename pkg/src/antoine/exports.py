"""File exporters: stage meshes (OBJ/PLY), escape-depth volume grids, point clouds.

Numeric text is always written with 17 significant digits (lossless for
float64) and binary payloads are little-endian, so every artifact
regenerates byte-identically from the same parameters. Each artifact
embeds or sits next to the parameters that produced it.
"""
from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .dynamics import DEFAULT_BUDGET, ESCAPED, EXTERIOR, classify_points
from .errors import TooManyTori
from .geom3 import SolidTorus
from .necklace import Address, Necklace, torus_at

VOL_EXTERIOR = 0xFFFE
VOL_SURVIVED = 0xFFFF
MAX_EXPORT_TORI = 10**6
DEFAULT_BBOX = ((-1.6, -1.6, -1.6), (1.6, 1.6, 1.6))  # contains the parent torus with margin


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


# ---------------------------------------------------------------------------
# meshes


def torus_mesh(t: SolidTorus, nu: int, nv: int) -> tuple[np.ndarray, np.ndarray]:
    """Watertight nu x nv tube tessellation: (nu*nv, 3) vertices, (2*nu*nv, 3) triangles.

    nu runs along the core circle, nv around the tube; triangles are ordered
    with outward normals (positive signed volume).
    """
    if nu < 8 or nv < 8:
        raise ValueError("need nu >= 8 and nv >= 8")
    u_basis, v_basis = t.core.basis()
    normal = t.core.normal
    a = np.linspace(0.0, 2.0 * math.pi, nu, endpoint=False)
    b = np.linspace(0.0, 2.0 * math.pi, nv, endpoint=False)
    radial = np.cos(a)[:, None] * u_basis + np.sin(a)[:, None] * v_basis  # (nu, 3)
    ring = t.core.center + t.core.radius * radial
    verts = (
        ring[:, None, :]
        + t.tube * (np.cos(b)[None, :, None] * radial[:, None, :] + np.sin(b)[None, :, None] * normal)
    ).reshape(nu * nv, 3)

    idx = np.arange(nu * nv).reshape(nu, nv)
    i00 = idx
    i10 = np.roll(idx, -1, axis=0)
    i01 = np.roll(idx, -1, axis=1)
    i11 = np.roll(np.roll(idx, -1, axis=0), -1, axis=1)
    tri_a = np.stack([i00, i10, i11], axis=2).reshape(-1, 3)
    tri_b = np.stack([i00, i11, i01], axis=2).reshape(-1, 3)
    tris = np.concatenate([tri_a, tri_b], axis=0)
    if mesh_signed_volume(verts, tris) < 0.0:
        tris = tris[:, ::-1]
    return verts, tris


def mesh_signed_volume(verts: np.ndarray, tris: np.ndarray) -> float:
    """Signed volume via the divergence theorem; positive for outward orientation."""
    a, b, c = verts[tris[:, 0]], verts[tris[:, 1]], verts[tris[:, 2]]
    return float(np.einsum("ij,ij->i", a, np.cross(b, c)).sum() / 6.0)


def mesh_is_watertight(verts: np.ndarray, tris: np.ndarray) -> bool:
    """Every undirected edge in exactly 2 triangles, each directed edge used once."""
    directed = np.concatenate([tris[:, [0, 1]], tris[:, [1, 2]], tris[:, [2, 0]]])
    seen = set(map(tuple, directed.tolist()))
    if len(seen) != len(directed):
        return False
    # consistent orientation: the reverse of every directed edge must appear
    return all((e[1], e[0]) in seen for e in seen)


def mesh_euler_characteristic(verts: np.ndarray, tris: np.ndarray) -> int:
    directed = np.concatenate([tris[:, [0, 1]], tris[:, [1, 2]], tris[:, [2, 0]]])
    undirected = {tuple(sorted(e)) for e in directed.tolist()}
    return verts.shape[0] - len(undirected) + tris.shape[0]


@dataclass(frozen=True, eq=False)
class MeshStage:
    """All tori of one stage, tessellated: one (vertices, triangles) pair per torus."""

    stage: int
    nu: int
    nv: int
    addresses: tuple[Address, ...]
    meshes: tuple[tuple[np.ndarray, np.ndarray], ...]


def mesh_stage(n: Necklace, k: int, nu: int = 32, nv: int = 16) -> MeshStage:
    """Tessellate every stage-k torus; raises TooManyTori above 10^6 tori."""
    if k < 0:
        raise ValueError("stage must be >= 0")
    count = n.multiplicity**k
    if count > MAX_EXPORT_TORI:
        raise TooManyTori(f"stage {k} holds {count} tori, cap is {MAX_EXPORT_TORI}")
    addresses = tuple(itertools.product(range(1, n.multiplicity + 1), repeat=k))
    meshes = tuple(torus_mesh(torus_at(n, a), nu, nv) for a in addresses)
    return MeshStage(k, nu, nv, addresses, meshes)


def _object_name(address: Address) -> str:
    return "torus_base" if not address else "torus_" + "-".join(map(str, address))


def write_obj(stage: MeshStage, path: str | Path, header: dict | None = None) -> None:
    """ASCII OBJ: one `o` object per torus, global 1-based indices, 17-digit floats."""
    lines = []
    if header:
        for key, value in header.items():
            lines.append(f"# {key}={value}")
    offset = 0
    for address, (verts, tris) in zip(stage.addresses, stage.meshes):
        lines.append(f"o {_object_name(address)}")
        for v in verts:
            lines.append(f"v {_fmt(v[0])} {_fmt(v[1])} {_fmt(v[2])}")
        for t in tris:
            lines.append(f"f {t[0] + 1 + offset} {t[1] + 1 + offset} {t[2] + 1 + offset}")
        offset += verts.shape[0]
    Path(path).write_text("\n".join(lines) + "\n")


def parse_obj(path: str | Path) -> list[tuple[np.ndarray, np.ndarray]]:
    """Read back an OBJ written by write_obj, one (vertices, triangles) per object."""
    objects: list[tuple[list, list]] = []
    offsets: list[int] = []
    total = 0
    for line in Path(path).read_text().splitlines():
        if line.startswith("o "):
            offsets.append(total)
            objects.append(([], []))
        elif line.startswith("v "):
            objects[-1][0].append([float(x) for x in line.split()[1:4]])
            total += 1
        elif line.startswith("f "):
            objects[-1][1].append([int(x) - 1 - offsets[-1] for x in line.split()[1:4]])
    return [(np.array(v), np.array(f, dtype=int)) for v, f in objects]


def write_ply(stage: MeshStage, path: str | Path, header: dict | None = None) -> None:
    """Binary little-endian PLY: float64 vertices, int32 index lists, tori merged."""
    verts = np.concatenate([v for v, _ in stage.meshes], axis=0)
    offsets = np.cumsum([0] + [v.shape[0] for v, _ in stage.meshes[:-1]])
    tris = np.concatenate([t + off for (_, t), off in zip(stage.meshes, offsets)], axis=0)
    comments = "".join(f"comment {k}={v}\n" for k, v in (header or {}).items())
    head = (
        "ply\n"
        "format binary_little_endian 1.0\n"
        f"{comments}"
        f"element vertex {verts.shape[0]}\n"
        "property double x\nproperty double y\nproperty double z\n"
        f"element face {tris.shape[0]}\n"
        "property list uchar int32 vertex_indices\n"
        "end_header\n"
    )
    with open(path, "wb") as fh:
        fh.write(head.encode("ascii"))
        fh.write(verts.astype("<f8").tobytes())
        face_dtype = np.dtype([("n", "u1"), ("idx", "<i4", (3,))])
        faces = np.empty(tris.shape[0], dtype=face_dtype)
        faces["n"] = 3
        faces["idx"] = tris.astype("<i4")
        fh.write(faces.tobytes())


def export_mesh(
    n: Necklace, k: int, nu: int, nv: int, fmt: str, path: str | Path
) -> MeshStage:
    """Write the stage-k tessellation in the requested format and return it."""
    stage = mesh_stage(n, k, nu, nv)
    header = {"m": n.multiplicity, "stage": k, "nu": nu, "nv": nv}
    if fmt == "obj":
        write_obj(stage, path, header)
    elif fmt == "ply":
        write_ply(stage, path, header)
    else:
        raise ValueError(f"unknown mesh format {fmt!r}")
    return stage


# ---------------------------------------------------------------------------
# escape-depth volume grids


@dataclass(frozen=True, eq=False)
class VolumeGrid:
    """Escape depths on a voxel grid, encoded as uint16.

    values are flat in x-fastest order (index = ix + nx*(iy + ny*iz)) and
    hold the escape depth, with 0xFFFE for exterior voxels and 0xFFFF for
    budget survivors.
    """

    dims: tuple[int, int, int]
    bbox_min: np.ndarray
    bbox_max: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        if len(self.dims) != 3 or any(d < 2 for d in self.dims):
            raise ValueError("dims must be three values >= 2")
        lo = np.asarray(self.bbox_min, dtype=float)
        hi = np.asarray(self.bbox_max, dtype=float)
        if not np.all(hi > lo):
            raise ValueError("bounding box is degenerate")
        vals = np.asarray(self.values, dtype=np.uint16)
        if vals.size != self.dims[0] * self.dims[1] * self.dims[2]:
            raise ValueError("value count does not match dims")
        for name, arr in (("bbox_min", lo), ("bbox_max", hi), ("values", vals)):
            arr = arr.copy()
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        object.__setattr__(self, "dims", tuple(int(d) for d in self.dims))


def voxel_centers(dims, bbox_min, bbox_max) -> np.ndarray:
    """(N, 3) voxel centers in x-fastest order."""
    lo = np.asarray(bbox_min, dtype=float)
    hi = np.asarray(bbox_max, dtype=float)
    axes = [lo[i] + (hi[i] - lo[i]) * (np.arange(dims[i]) + 0.5) / dims[i] for i in range(3)]
    zz, yy, xx = np.meshgrid(axes[2], axes[1], axes[0], indexing="ij")
    return np.stack([xx, yy, zz], axis=-1).reshape(-1, 3)


def classify_volume(
    n: Necklace, dims, bbox=DEFAULT_BBOX, budget: int = DEFAULT_BUDGET
) -> VolumeGrid:
    """Classify every voxel center; deterministic for identical arguments."""
    dims = tuple(int(d) for d in dims)
    if any(d > 1024 for d in dims):
        raise ValueError("dims are capped at 1024 per axis")
    lo, hi = np.asarray(bbox[0], dtype=float), np.asarray(bbox[1], dtype=float)
    status, depth, _ = classify_points(n, voxel_centers(dims, lo, hi), budget)
    values = np.full(status.shape, VOL_SURVIVED, dtype=np.uint16)
    values[status == EXTERIOR] = VOL_EXTERIOR
    escaped = status == ESCAPED
    values[escaped] = depth[escaped].astype(np.uint16)
    return VolumeGrid(dims, lo, hi, values)


def write_volume(
    grid: VolumeGrid,
    path: str | Path,
    m: int,
    budget: int,
    seed: int = 0,
) -> None:
    """Raw little-endian uint16 voxels plus a JSON sidecar at path + '.json'."""
    path = Path(path)
    path.write_bytes(grid.values.astype("<u2").tobytes())
    sidecar = {
        "dims": list(grid.dims),
        "bbox": [[float(x) for x in grid.bbox_min], [float(x) for x in grid.bbox_max]],
        "budget": budget,
        "m": m,
        "seed": seed,
        "encoding": {"exterior": VOL_EXTERIOR, "survived": VOL_SURVIVED},
        "order": "x-fastest, little-endian uint16",
    }
    Path(str(path) + ".json").write_text(json.dumps(sidecar, indent=2) + "\n")


def load_volume(path: str | Path) -> VolumeGrid:
    sidecar = json.loads(Path(str(path) + ".json").read_text())
    values = np.frombuffer(Path(path).read_bytes(), dtype="<u2")
    return VolumeGrid(tuple(sidecar["dims"]), sidecar["bbox"][0], sidecar["bbox"][1], values)


def export_volume(
    n: Necklace,
    dims,
    bbox=DEFAULT_BBOX,
    budget: int = DEFAULT_BUDGET,
    path: str | Path = "escape.vol",
    seed: int = 0,
) -> VolumeGrid:
    grid = classify_volume(n, dims, bbox, budget)
    write_volume(grid, path, n.multiplicity, budget, seed)
    return grid


# ---------------------------------------------------------------------------
# point clouds


def export_points(samples: np.ndarray, fmt: str, path: str | Path) -> None:
    """One point per line at 17 significant digits; order follows the input."""
    pts = np.asarray(samples, dtype=float).reshape(-1, 3)
    if fmt == "xyz":
        lines = [f"{_fmt(p[0])} {_fmt(p[1])} {_fmt(p[2])}" for p in pts]
    elif fmt == "csv":
        lines = ["x,y,z"] + [f"{_fmt(p[0])},{_fmt(p[1])},{_fmt(p[2])}" for p in pts]
    else:
        raise ValueError(f"unknown point format {fmt!r}")
    Path(path).write_text("\n".join(lines) + ("\n" if lines else ""))
