"""Planar kinematics, signed distances and contact Jacobians.

Conventions: the contact normal points from body B toward body A and
phi = n . (witness_a - witness_b). The tangent is the normal rotated by +90
degrees. Contact Jacobian rows are [normal; tangent] mapped through the
difference of the two bodies' point Jacobians.
"""
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np

from ctrplan.models import (
    Body,
    Box,
    BoxUnion,
    Circle,
    ContactKinematics,
    Geometry,
    HalfPlane,
    Pose,
    RevoluteChain,
    SystemModel,
)

_TIE_EPS = 1e-12


@dataclass(frozen=True, eq=False)
class SignedDistance:
    phi: float
    witness_a: np.ndarray
    witness_b: np.ndarray
    normal: np.ndarray

    def flipped(self) -> "SignedDistance":
        return SignedDistance(self.phi, self.witness_b, self.witness_a, -self.normal)


# Kinematics
def rotation(theta: float) -> np.ndarray:
    c, s = np.cos(theta), np.sin(theta)
    return np.array([[c, -s], [s, c]])


def compose_pose(outer: Pose, inner: Pose) -> Pose:
    offset = rotation(outer[2]) @ np.asarray(inner[:2], dtype=float)
    return (outer[0] + offset[0], outer[1] + offset[1], outer[2] + inner[2])


def _chain_origins(chain: RevoluteChain, q: np.ndarray) -> Tuple[List[np.ndarray], float]:
    """Joint origins plus the end point, and the final link angle."""
    origin = np.asarray(chain.base[:2], dtype=float)
    angle = chain.base[2]
    origins = [origin]
    for length, idx in zip(chain.link_lengths, chain.joint_indices):
        angle += q[idx]
        origin = origin + length * np.array([np.cos(angle), np.sin(angle)])
        origins.append(origin)
    return origins, angle


def body_pose(body: Body, q: np.ndarray) -> Pose:
    joint = body.joint
    if isinstance(joint, RevoluteChain):
        origins, angle = _chain_origins(joint, q)
        return (float(origins[-1][0]), float(origins[-1][1]), float(angle))
    values = [
        float(q[idx]) if idx is not None else float(fixed)
        for idx, fixed in zip(joint.indices, joint.fixed)
    ]
    return (values[0], values[1], values[2])


def point_jacobian(body: Body, q: np.ndarray, point: np.ndarray, n_q: int) -> np.ndarray:
    """2 x n_q Jacobian of a world point rigidly attached to `body`."""
    J = np.zeros((2, n_q))
    joint = body.joint
    if isinstance(joint, RevoluteChain):
        origins, _ = _chain_origins(joint, q)
        for origin, idx in zip(origins[:-1], joint.joint_indices):
            J[0, idx] += -(point[1] - origin[1])
            J[1, idx] += point[0] - origin[0]
        return J
    x, y, _ = body_pose(body, q)
    ix, iy, itheta = joint.indices
    if ix is not None:
        J[0, ix] += 1.0
    if iy is not None:
        J[1, iy] += 1.0
    if itheta is not None:
        J[0, itheta] += -(point[1] - y)
        J[1, itheta] += point[0] - x
    return J


def box_vertices(box: Box, pose: Pose) -> np.ndarray:
    ex, ey = box.half_extents
    local = np.array([[ex, ey], [-ex, ey], [-ex, -ey], [ex, -ey]])
    return local @ rotation(pose[2]).T + np.asarray(pose[:2], dtype=float)


def _box_axes(pose: Pose) -> np.ndarray:
    return rotation(pose[2]).T  # rows are the world directions of the local x and y axes


# Primitive pairs, A first
def _circle_circle(ra: float, ca: np.ndarray, rb: float, cb: np.ndarray) -> SignedDistance:
    delta = ca - cb
    dist = float(np.linalg.norm(delta))
    normal = delta / dist if dist > _TIE_EPS else np.array([1.0, 0.0])
    return SignedDistance(dist - ra - rb, ca - ra * normal, cb + rb * normal, normal)


def _circle_halfplane(r: float, center: np.ndarray, plane: HalfPlane, pose: Pose) -> SignedDistance:
    normal = rotation(pose[2]) @ np.asarray(plane.normal, dtype=float)
    offset = plane.offset + float(normal @ np.asarray(pose[:2], dtype=float))
    height = float(normal @ center) - offset
    return SignedDistance(height - r, center - r * normal, center - height * normal, normal)


def _circle_box(r: float, center: np.ndarray, box: Box, pose: Pose) -> SignedDistance:
    R = rotation(pose[2])
    origin = np.asarray(pose[:2], dtype=float)
    extents = np.asarray(box.half_extents, dtype=float)
    local = R.T @ (center - origin)
    clamped = np.clip(local, -extents, extents)
    diff = local - clamped
    dist = float(np.linalg.norm(diff))
    if dist > _TIE_EPS:
        normal = R @ (diff / dist)
        surface = origin + R @ clamped
        return SignedDistance(dist - r, center - r * normal, surface, normal)
    # center inside: leave through the nearest face, x before y on ties
    margins = extents - np.abs(local)
    axis = int(np.argmin(margins))
    sign = 1.0 if local[axis] >= 0 else -1.0
    normal_local = np.zeros(2)
    normal_local[axis] = sign
    face_point = local.copy()
    face_point[axis] = sign * extents[axis]
    normal = R @ normal_local
    return SignedDistance(
        -float(margins[axis]) - r, center - r * normal, origin + R @ face_point, normal
    )


def _box_halfplane(box: Box, pose_a: Pose, plane: HalfPlane, pose_b: Pose) -> SignedDistance:
    normal = rotation(pose_b[2]) @ np.asarray(plane.normal, dtype=float)
    offset = plane.offset + float(normal @ np.asarray(pose_b[:2], dtype=float))
    verts = box_vertices(box, pose_a)
    heights = verts @ normal - offset
    k = int(np.argmin(heights))
    return SignedDistance(float(heights[k]), verts[k], verts[k] - heights[k] * normal, normal)


def _point_segment(p: np.ndarray, a: np.ndarray, b: np.ndarray) -> Tuple[float, np.ndarray]:
    ab = b - a
    t = float(np.clip((p - a) @ ab / (ab @ ab), 0.0, 1.0))
    closest = a + t * ab
    return float(np.linalg.norm(p - closest)), closest


def _box_box(box_a: Box, pose_a: Pose, box_b: Box, pose_b: Pose) -> SignedDistance:
    verts_a = box_vertices(box_a, pose_a)
    verts_b = box_vertices(box_b, pose_b)
    center_a = np.asarray(pose_a[:2], dtype=float)
    center_b = np.asarray(pose_b[:2], dtype=float)
    axes = np.vstack([_box_axes(pose_b), _box_axes(pose_a)])

    best_depth = np.inf
    best_normal = None
    separated = False
    for axis in axes:
        proj_a = verts_a @ axis
        proj_b = verts_b @ axis
        overlap = min(proj_a.max(), proj_b.max()) - max(proj_a.min(), proj_b.min())
        if overlap < 0:
            separated = True
            break
        if overlap < best_depth - _TIE_EPS:
            best_depth = overlap
            best_normal = axis if (center_a - center_b) @ axis >= 0 else -axis

    if separated:
        best: Optional[SignedDistance] = None
        for verts_p, verts_s, p_is_a in ((verts_a, verts_b, True), (verts_b, verts_a, False)):
            for p in verts_p:
                for k in range(4):
                    dist, closest = _point_segment(p, verts_s[k], verts_s[(k + 1) % 4])
                    if best is None or dist < best.phi - _TIE_EPS:
                        wa, wb = (p, closest) if p_is_a else (closest, p)
                        best = SignedDistance(dist, wa, wb, (wa - wb) / dist)
        assert best is not None
        return best

    assert best_normal is not None
    k = int(np.argmin(verts_a @ best_normal))
    witness_a = verts_a[k]
    return SignedDistance(
        -float(best_depth), witness_a, witness_a + best_depth * best_normal, best_normal
    )


def _parts(geometry: Geometry, pose: Pose) -> List[Tuple[Geometry, Pose]]:
    """Members of a box union posed in the world; any other primitive as itself."""
    if isinstance(geometry, BoxUnion):
        return [(member.box, compose_pose(pose, member.pose)) for member in geometry.members]
    return [(geometry, pose)]


def signed_distance(
    geom_a: Geometry, pose_a: Pose, geom_b: Geometry, pose_b: Pose
) -> SignedDistance:
    """Signed distance between two posed primitives; the normal points from B toward A."""
    if isinstance(geom_a, BoxUnion) or isinstance(geom_b, BoxUnion):
        parts_a = _parts(geom_a, pose_a)
        parts_b = _parts(geom_b, pose_b)
        best: Optional[SignedDistance] = None
        for ga, pa in parts_a:
            for gb, pb in parts_b:
                sd = signed_distance(ga, pa, gb, pb)
                if best is None or sd.phi < best.phi - _TIE_EPS:
                    best = sd
        assert best is not None
        return best

    center_a = np.asarray(pose_a[:2], dtype=float)
    center_b = np.asarray(pose_b[:2], dtype=float)
    if isinstance(geom_a, Circle):
        if isinstance(geom_b, Circle):
            return _circle_circle(geom_a.radius, center_a, geom_b.radius, center_b)
        if isinstance(geom_b, HalfPlane):
            return _circle_halfplane(geom_a.radius, center_a, geom_b, pose_b)
        if isinstance(geom_b, Box):
            return _circle_box(geom_a.radius, center_a, geom_b, pose_b)
    if isinstance(geom_a, Box):
        if isinstance(geom_b, Box):
            return _box_box(geom_a, pose_a, geom_b, pose_b)
        if isinstance(geom_b, HalfPlane):
            return _box_halfplane(geom_a, pose_a, geom_b, pose_b)
        if isinstance(geom_b, Circle):
            return _circle_box(geom_b.radius, center_b, geom_a, pose_a).flipped()
    if isinstance(geom_a, HalfPlane) and isinstance(geom_b, (Circle, Box)):
        return signed_distance(geom_b, pose_b, geom_a, pose_a).flipped()
    raise ValueError(
        f"unsupported geometry pair: {type(geom_a).__name__} vs {type(geom_b).__name__}"
    )


# Contacts
def pair_distance(system: SystemModel, q: np.ndarray, pair_index: int) -> SignedDistance:
    pair = system.pairs[pair_index]
    body_a, body_b = system.bodies[pair.body_a], system.bodies[pair.body_b]
    return signed_distance(
        body_a.geometry, body_pose(body_a, q), body_b.geometry, body_pose(body_b, q)
    )


def contact_kinematics(
    system: SystemModel, q: np.ndarray, pair_indices: Sequence[int]
) -> List[ContactKinematics]:
    """Contact frames, Jacobians and Anitescu offsets for the given pairs at q."""
    q = np.asarray(q, dtype=float)
    contacts = []
    for i in pair_indices:
        pair = system.pairs[i]
        sd = pair_distance(system, q, i)
        body_a, body_b = system.bodies[pair.body_a], system.bodies[pair.body_b]
        J_rel = point_jacobian(body_a, q, sd.witness_a, system.n_q) - point_jacobian(
            body_b, q, sd.witness_b, system.n_q
        )
        tangent = np.array([-sd.normal[1], sd.normal[0]])
        rows = [sd.normal @ J_rel]
        if pair.cone_dim == 2:
            rows.append(tangent @ J_rel)
        J = np.vstack(rows)
        offset = np.zeros(pair.cone_dim)
        offset[0] = sd.phi
        contacts.append(
            ContactKinematics(
                pair_index=i,
                phi=sd.phi,
                cone_dim=pair.cone_dim,
                mu=pair.mu,
                J=J,
                c=offset - J @ q,
                normal=sd.normal,
                witness_a=sd.witness_a,
                witness_b=sd.witness_b,
            )
        )
    return contacts


def detect_contacts(
    system: SystemModel, q: np.ndarray, phi_threshold: Optional[float] = None
) -> List[ContactKinematics]:
    """Pairs with phi below the threshold, in pair-index order."""
    threshold = system.phi_threshold if phi_threshold is None else phi_threshold
    active = [
        i for i in range(len(system.pairs)) if pair_distance(system, q, i).phi < threshold
    ]
    return contact_kinematics(system, q, active)


def min_distance(
    system: SystemModel, q: np.ndarray, pair_indices: Optional[Sequence[int]] = None
) -> float:
    indices = range(len(system.pairs)) if pair_indices is None else pair_indices
    return min((pair_distance(system, q, i).phi for i in indices), default=np.inf)
