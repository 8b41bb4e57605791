"""Tube meshes around sampled curves and Wavefront OBJ export.

Cross-sections are oriented by a rotation-minimizing frame propagated with
the double-reflection rule, so the tube does not inherit the spin of the
Frenet frame where torsion is large.  On closed curves the frame's total
twist is spread evenly over the rings so the seam closes up.
"""

import os
import tempfile
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.signal import resample

from .curvegeom import GeometryError, _dot, _norm

DEFAULT_RADIUS = 0.25
DEFAULT_RINGS = 256
DEFAULT_SEGMENTS = 24
RADIUS_SAFETY = 0.9


class RadiusTooLargeError(GeometryError):
    """The tube would overlap itself."""

    def __init__(self, radius, limit, reason, pair=None):
        self.radius = float(radius)
        self.limit = float(limit)
        self.reason = reason
        self.pair = pair
        where = f" (samples {pair[0]} and {pair[1]})" if pair else ""
        super().__init__("radius-too-large", f"radius {radius:.6g} exceeds {limit:.6g} set by {reason}{where}")


@dataclass(frozen=True, eq=False)
class TubeMesh:
    """Quad mesh of a tube.

    ``vertices`` and ``normals`` have one row per vertex, ring by ring;
    ``faces`` holds 0-based vertex indices of each quad, counter-clockwise
    seen from outside.  Closed tubes have ``rings`` rings joined back to the
    first; open tubes have ``rings + 1`` rings and two boundary circles.
    """

    vertices: np.ndarray
    normals: np.ndarray
    faces: np.ndarray
    centers: np.ndarray
    tangents: np.ndarray
    frames: np.ndarray
    radius: float
    rings: int
    segments: int
    closed: bool

    @property
    def ring_count(self):
        return self.centers.shape[0]

    def edges(self):
        """Unique undirected edges as an ``(E, 2)`` array."""
        a = self.faces
        pairs = np.concatenate([a[:, [i, (i + 1) % 4]] for i in range(4)])
        return np.unique(np.sort(pairs, axis=1), axis=0)

    def euler_characteristic(self):
        return len(self.vertices) - len(self.edges()) + len(self.faces)

    def face_areas(self):
        p = self.vertices[self.faces]
        return 0.5 * _norm(np.cross(p[:, 2] - p[:, 0], p[:, 3] - p[:, 1]))

    def face_normals(self):
        p = self.vertices[self.faces]
        return np.cross(p[:, 2] - p[:, 0], p[:, 3] - p[:, 1])

    def consistent_winding(self):
        """Every directed edge is used at most once (orientable, coherent)."""
        a = self.faces
        directed = np.concatenate([a[:, [i, (i + 1) % 4]] for i in range(4)])
        return len(np.unique(directed, axis=0)) == len(directed)

    def outward_fraction(self):
        """Share of faces whose normal points away from the centerline."""
        rings = self.faces // self.segments
        centre = 0.5 * (self.centers[rings[:, 0]] + self.centers[rings[:, 2]])
        p = self.vertices[self.faces]
        out = _dot(self.face_normals(), p.mean(axis=1) - centre)
        return float(np.mean(out > 0))

    def ring_orthogonality(self):
        """Largest ``|(vertex - center) . tangent| / radius`` over all rings."""
        v = self.vertices.reshape(self.ring_count, self.segments, 3)
        off = v - self.centers[:, None, :]
        return float(np.max(np.abs(_dot(off, self.tangents[:, None, :]))) / self.radius)

    def max_twist_step(self):
        """Largest angle between consecutive ring frames after transport."""
        u = self.frames
        steps = []
        for j in range(self.ring_count - 1 + int(self.closed)):
            k = (j + 1) % self.ring_count
            t = self.tangents[k]
            a = _transport(self.centers[j], self.tangents[j], u[j], self.centers[k], t)
            steps.append(abs(np.arctan2(_dot(np.cross(a, u[k]), t), _dot(a, u[k]))))
        return float(max(steps))


def _transport(x0, t0, r0, x1, t1):
    """Double-reflection step of a rotation-minimizing frame vector."""
    v1 = x1 - x0
    c1 = _dot(v1, v1)
    if c1 == 0.0:
        rl, tl = r0, t0
    else:
        rl = r0 - (2.0 / c1) * _dot(v1, r0) * v1
        tl = t0 - (2.0 / c1) * _dot(v1, t0) * v1
    v2 = t1 - tl
    c2 = _dot(v2, v2)
    r1 = rl if c2 == 0.0 else rl - (2.0 / c2) * _dot(v2, rl) * v2
    r1 = r1 - _dot(r1, t1) * t1
    return r1 / _norm(r1)


def _initial_normal(t):
    axis = np.zeros(3)
    axis[np.argmin(np.abs(t))] = 1.0
    u = axis - _dot(axis, t) * t
    return u / _norm(u)


def rotation_minimizing_frame(centers, tangents, closed=True):
    """First frame vector ``U`` per ring; the second is ``t x U``.

    For closed curves the frame is carried once around and the residual
    rotation is removed in equal steps, so ring ``M`` would coincide with
    ring 0.
    """
    m = len(centers)
    u = np.empty_like(centers)
    u[0] = _initial_normal(tangents[0])
    for j in range(m - 1):
        u[j + 1] = _transport(centers[j], tangents[j], u[j], centers[j + 1], tangents[j + 1])
    if closed:
        back = _transport(centers[-1], tangents[-1], u[-1], centers[0], tangents[0])
        t0 = tangents[0]
        phi = np.arctan2(_dot(np.cross(back, u[0]), t0), _dot(back, u[0]))
        angles = phi * np.arange(m) / m
        v = np.cross(tangents, u)
        u = np.cos(angles)[:, None] * u + np.sin(angles)[:, None] * v
    return u


def _ring_samples(c, rings):
    """Centers and unit tangents at ``rings`` equally spaced grid parameters."""
    if rings > c.n:
        raise ValueError(f"rings ({rings}) may not exceed the sample count ({c.n})")
    gap = c.end_position - c.r[0]
    ramp = (np.arange(c.n) / c.n)[:, None] * gap
    if c.n % rings == 0:
        step = c.n // rings
        centers, d1 = c.r[::step], c.d1[::step]
    else:
        centers = resample(c.r - ramp, rings, axis=0) + (np.arange(rings) / rings)[:, None] * gap
        d1 = resample(c.d1, rings, axis=0)
    return centers, d1 / _norm(d1)[:, None]


def max_radius(c, radius=None):
    """Largest admissible tube radius and what limits it.

    Two conditions: ``radius * k < 1`` everywhere, and any two samples
    more than ``pi * radius`` apart along the curve are at least
    ``2 * radius`` apart in space.  Returns ``(limit, reason, pair)``; when
    ``radius`` is given, the chord condition uses that radius's arc cutoff.
    """
    k_limit = 1.0 / float(np.max(c.k))
    r = k_limit if radius is None else float(radius)
    sig = c.sigma[:-1]
    limit, reason, pair = k_limit, "curvature", None
    for _ in range(50):
        best, best_pair = np.inf, None
        for start in range(0, c.n, 128):
            rows = np.arange(start, min(start + 128, c.n))
            arc = np.abs(sig[rows, None] - sig[None, :])
            arc = np.minimum(arc, c.length - arc)
            chord = _norm(c.r[rows, None, :] - c.r[None, :, :])
            chord = np.where(arc > np.pi * r, chord, np.inf)
            idx = np.unravel_index(np.argmin(chord), chord.shape)
            if chord[idx] < best:
                best, best_pair = float(chord[idx]), (int(rows[idx[0]]), int(idx[1]))
        chord_limit = 0.5 * best
        if chord_limit < k_limit:
            limit, reason, pair = chord_limit, "chord", best_pair
        else:
            limit, reason, pair = k_limit, "curvature", None
        if radius is not None or limit >= r * (1 - 1e-12):
            break
        r = limit
    return limit, reason, pair


def auto_radius(curves, preferred=DEFAULT_RADIUS):
    """``min(preferred, 0.9 * limit)`` over all ``curves``."""
    limit = min(max_radius(c)[0] for c in curves)
    return min(preferred, RADIUS_SAFETY * limit)


def tube_mesh(c, radius=DEFAULT_RADIUS, rings=DEFAULT_RINGS, ring_segments=DEFAULT_SEGMENTS, allow_open=False):
    """Tube of circular cross-section around ``c``.

    Raises :class:`RadiusTooLargeError` when ``radius`` violates
    :func:`max_radius`.  Curves that do not close raise ``not-closed``
    unless ``allow_open`` is set, in which case the tube gets an extra ring
    at the end of the parameter range and stays open.
    """
    if rings < 3 or ring_segments < 3:
        raise ValueError("need at least 3 rings and 3 segments")
    closed = c.is_closed()
    if not closed and not allow_open:
        c.require_closed()
    if not radius > 0:
        raise ValueError(f"radius must be positive, got {radius}")
    limit, reason, pair = max_radius(c, radius)
    if radius >= limit:
        raise RadiusTooLargeError(radius, limit, reason, pair)
    centers, tangents = _ring_samples(c, rings)
    if not closed:
        centers = np.vstack([centers, c.end_position])
        tangents = np.vstack([tangents, tangents[:1]])
    u = rotation_minimizing_frame(centers, tangents, closed)
    v = np.cross(tangents, u)
    theta = 2.0 * np.pi * np.arange(ring_segments) / ring_segments
    normals = np.cos(theta)[None, :, None] * u[:, None, :] + np.sin(theta)[None, :, None] * v[:, None, :]
    vertices = centers[:, None, :] + radius * normals
    nring = len(centers)
    j = np.arange(rings)[:, None]
    jn = (j + 1) % nring
    m = np.arange(ring_segments)[None, :]
    mn = (m + 1) % ring_segments
    s = ring_segments
    faces = np.stack(np.broadcast_arrays(j * s + m, j * s + mn, jn * s + mn, jn * s + m), axis=-1)
    return TubeMesh(
        vertices.reshape(-1, 3),
        normals.reshape(-1, 3),
        faces.reshape(-1, 4),
        centers,
        tangents,
        u,
        float(radius),
        rings,
        ring_segments,
        closed,
    )


def obj_text(mesh):
    """OBJ source of ``mesh``: ``v``, ``vn`` and quad ``f a//a ...`` lines."""
    lines = [f"# tube: {mesh.rings} rings x {mesh.segments} segments, radius {mesh.radius:.9g}"]
    # adding 0.0 turns -0.0 into 0.0 so equal meshes print identically
    lines += ["v %.9g %.9g %.9g" % tuple(p) for p in mesh.vertices + 0.0]
    lines += ["vn %.9g %.9g %.9g" % tuple(n) for n in mesh.normals + 0.0]
    lines += ["f " + " ".join(f"{i}//{i}" for i in face) for face in mesh.faces + 1]
    return "\n".join(lines) + "\n"


def atomic_write(path, data):
    """Write ``data`` (str or bytes) to ``path`` through a temporary file and rename."""
    path = Path(path)
    payload = data.encode("ascii") if isinstance(data, str) else data
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(payload)
        umask = os.umask(0)
        os.umask(umask)
        os.chmod(tmp, 0o666 & ~umask)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def export_obj(mesh, destination):
    """Write ``mesh`` as OBJ to a path (atomically) or a binary stream.

    Returns the bytes written.
    """
    data = obj_text(mesh).encode("ascii")
    if hasattr(destination, "write"):
        destination.write(data)
    else:
        atomic_write(destination, data)
    return data


def read_obj(source):
    """Parse ``v``, ``vn`` and ``f`` lines; faces come back 0-based."""
    text = Path(source).read_text() if not hasattr(source, "read") else source.read()
    if isinstance(text, bytes):
        text = text.decode("ascii")
    verts, norms, faces = [], [], []
    for line in text.splitlines():
        parts = line.split()
        if not parts or parts[0].startswith("#"):
            continue
        if parts[0] == "v":
            verts.append([float(x) for x in parts[1:4]])
        elif parts[0] == "vn":
            norms.append([float(x) for x in parts[1:4]])
        elif parts[0] == "f":
            faces.append([int(p.split("/")[0]) - 1 for p in parts[1:]])
    return np.array(verts), np.array(norms), np.array(faces, dtype=int)


def obj_name(stem, eps):
    """``<stem>_eps<value>.obj`` with the shortest round-tripping value text."""
    return f"{stem}_eps{float(eps):g}.obj"
