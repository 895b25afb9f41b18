import itertools
import logging
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Dict, FrozenSet, List, Optional, Sequence, Tuple

import numpy as np
from scipy.spatial import ConvexHull, QhullError

from . import rational as rq
from .errors import (DimensionMismatchError, FaceNotFoundError,
                     MalformedInputError, NegativeScaleError,
                     NotInPolytopeError)
from .rational import Vector

logger = logging.getLogger(__name__)

# point sets above this size get candidate facets from Qhull before exact checks
QHULL_THRESHOLD = 16


@dataclass(frozen=True)
class Halfspace:
    """<normal, x> >= offset (or == offset when used as an equation)."""
    normal: Vector
    offset: Fraction

    def value(self, x: Vector) -> Fraction:
        return rq.dot(self.normal, x) - self.offset


@dataclass(frozen=True)
class Face:
    dim: int
    vertices: FrozenSet[int]
    facets: FrozenSet[int]

    def key(self) -> Tuple[int, Tuple[int, ...]]:
        return (self.dim, tuple(sorted(self.vertices)))


class Polytope:
    """Exact convex polytope with V-rep, H-rep and its full face lattice.

    Equations carry the affine hull; inequalities are the facets, with normals
    inside the direction space of the affine hull. Instances are immutable.
    """

    def __init__(self, ambient_dim: int, vertices: Sequence[Vector], equations: Sequence[Halfspace],
                 inequalities: Sequence[Halfspace], faces: Sequence[Face],
                 face_facets: Dict[FrozenSet[int], List[FrozenSet[int]]], directions: Sequence[Vector]):
        self.ambient_dim = ambient_dim
        self.vertices: Tuple[Vector, ...] = tuple(vertices)
        self.equations: Tuple[Halfspace, ...] = tuple(equations)
        self.inequalities: Tuple[Halfspace, ...] = tuple(inequalities)
        self.faces: Tuple[Face, ...] = tuple(sorted(faces, key=Face.key))
        self.directions: Tuple[Vector, ...] = tuple(directions)
        self.dim = len(self.directions)
        self._face_facets = face_facets
        self._faces_by_vertices = {f.vertices: f for f in self.faces}
        self._face_polytopes: Dict[FrozenSet[int], "Polytope"] = {}

    # identity

    @property
    def key(self) -> Tuple[Vector, ...]:
        return self.vertices

    def __eq__(self, other: object) -> bool:
        return isinstance(other, Polytope) and self.vertices == other.vertices

    def __hash__(self) -> int:
        return hash(self.vertices)

    def __repr__(self) -> str:
        return f"Polytope(dim={self.dim}, n={self.ambient_dim}, vertices={len(self.vertices)})"

    @property
    def intrinsic_dim(self) -> int:
        return self.dim

    @property
    def halfspaces(self) -> Tuple[Halfspace, ...]:
        """Full H-rep as >= constraints (each equation enters with both signs)."""
        both = []
        for eq in self.equations:
            both.append(eq)
            both.append(Halfspace(rq.neg(eq.normal), -eq.offset))
        return self.inequalities + tuple(both)

    # membership

    def contains(self, x: Vector) -> bool:
        if len(x) != self.ambient_dim:
            raise DimensionMismatchError(f"Point of dimension {len(x)} in R^{self.ambient_dim}")
        return (all(eq.value(x) == 0 for eq in self.equations)
                and all(h.value(x) >= 0 for h in self.inequalities))

    def relint_contains(self, x: Vector) -> bool:
        return (all(eq.value(x) == 0 for eq in self.equations)
                and all(h.value(x) > 0 for h in self.inequalities))

    def contains_polytope(self, other: "Polytope") -> bool:
        return all(self.contains(v) for v in other.vertices)

    def tight_facets(self, x: Vector) -> FrozenSet[int]:
        return frozenset(i for i, h in enumerate(self.inequalities) if h.value(x) == 0)

    def face_of_point(self, x: Vector) -> Face:
        """The unique face whose relative interior holds x."""
        if not self.contains(x):
            raise NotInPolytopeError("Point is not in the polytope", point=list(x))
        tight = self.tight_facets(x)
        verts = frozenset(i for i, v in enumerate(self.vertices)
                          if all(self.inequalities[j].value(v) == 0 for j in tight))
        return self._faces_by_vertices[verts]

    # faces

    def faces_of_dim(self, k: int) -> List[Face]:
        return [f for f in self.faces if f.dim == k]

    @property
    def proper_faces(self) -> List[Face]:
        return [f for f in self.faces if f.dim < self.dim]

    @property
    def top_face(self) -> Face:
        return self._faces_by_vertices[frozenset(range(len(self.vertices)))]

    def face_by_vertices(self, vertices: FrozenSet[int]) -> Face:
        try:
            return self._faces_by_vertices[frozenset(vertices)]
        except KeyError as e:
            raise FaceNotFoundError("Vertex set is not a face", vertices=sorted(vertices)) from e

    def find_face(self, face_or_polytope) -> Face:
        """Accept a Face of this polytope or a Polytope equal to one of its faces."""
        if isinstance(face_or_polytope, Face):
            if self._faces_by_vertices.get(face_or_polytope.vertices) != face_or_polytope:
                raise FaceNotFoundError("Face does not belong to this polytope")
            return face_or_polytope
        if isinstance(face_or_polytope, Polytope):
            index = {v: i for i, v in enumerate(self.vertices)}
            try:
                verts = frozenset(index[v] for v in face_or_polytope.vertices)
            except KeyError as e:
                raise FaceNotFoundError("Polytope is not a face") from e
            return self.face_by_vertices(verts)
        raise FaceNotFoundError(f"Not a face: {face_or_polytope!r}")

    def subfacets(self, face: Face) -> List[Face]:
        return [self._faces_by_vertices[v] for v in self._face_facets.get(face.vertices, [])]

    def face_polytope(self, face: Face) -> "Polytope":
        cached = self._face_polytopes.get(face.vertices)
        if cached is None:
            cached = convex_hull([self.vertices[i] for i in sorted(face.vertices)])
            self._face_polytopes[face.vertices] = cached
        return cached

    def face_points(self, face: Face) -> List[Vector]:
        return [self.vertices[i] for i in sorted(face.vertices)]

    def face_barycenter(self, face: Face) -> Vector:
        return rq.centroid(self.face_points(face))

    def face_directions(self, face: Face) -> List[Vector]:
        pts = self.face_points(face)
        return rq.row_basis([rq.sub(p, pts[0]) for p in pts[1:]]) if len(pts) > 1 else []

    @property
    def barycenter(self) -> Vector:
        return rq.centroid(list(self.vertices))

    @property
    def bounding_box(self) -> List[Tuple[Fraction, Fraction]]:
        return [(min(v[i] for v in self.vertices), max(v[i] for v in self.vertices))
                for i in range(self.ambient_dim)]

    # triangulation and volume

    def triangulate(self, face: Optional[Face] = None) -> List[Tuple[int, ...]]:
        """Pulling triangulation of a face (default: the polytope) from its lowest vertex."""
        face = face or self.top_face
        if face.dim == 0 or len(face.vertices) == face.dim + 1:
            return [tuple(sorted(face.vertices))]
        apex = min(face.vertices)
        simplices = []
        for sub in self.subfacets(face):
            if apex in sub.vertices:
                continue
            simplices.extend((apex,) + s for s in self.triangulate(sub))
        return simplices

    def simplex_volume(self, simplex: Sequence[int]) -> float:
        pts = [self.vertices[i] for i in simplex]
        k = len(pts) - 1
        if k == 0:
            return 1.0
        edges = [rq.sub(p, pts[0]) for p in pts[1:]]
        gram = [[rq.dot(a, b) for b in edges] for a in edges]
        return math.sqrt(float(max(rq.det(gram), Fraction(0)))) / math.factorial(k)

    def volume(self, face: Optional[Face] = None) -> float:
        """k-dimensional volume of a k-face (default: the polytope itself)."""
        return sum(self.simplex_volume(s) for s in self.triangulate(face))

    def relative_volume(self) -> Fraction:
        """Exact volume in the coordinate projection fixed by the affine hull.

        Only comparable between polytopes that share an affine hull.
        """
        if self.dim == 0:
            return Fraction(1)
        _, pivots = rq.rref(list(self.directions), self.ambient_dim)
        total = Fraction(0)
        for simplex in self.triangulate():
            pts = [self.vertices[i] for i in simplex]
            rows = [[(p[c] - pts[0][c]) for c in pivots] for p in pts[1:]]
            total += abs(rq.det(rows))
        return total / math.factorial(self.dim)

    def is_simplex(self) -> bool:
        return len(self.vertices) == self.dim + 1


# hull construction


def _affine_frame(points: Sequence[Vector]) -> Tuple[List[Vector], List[Vector]]:
    base = points[0]
    directions = rq.row_basis([rq.sub(p, base) for p in points[1:]])
    complement = rq.orthogonal_complement(directions, len(base))
    return directions, complement


def _canonical_sign(v: Vector) -> Vector:
    first = next(x for x in v if x != 0)
    return v if first > 0 else rq.neg(v)


def _facet_from_subset(points: Sequence[Vector], subset: Sequence[int],
                       complement: Sequence[Vector]) -> Optional[Halfspace]:
    """Supporting halfspace through the given points if they span a facet hyperplane."""
    base = points[subset[0]]
    rows = [rq.sub(points[i], base) for i in subset[1:]] + list(complement)
    null = rq.nullspace(rows, len(base))
    if len(null) != 1:
        return None
    normal = rq.primitive(null[0])
    offset = rq.dot(normal, base)
    values = [rq.dot(normal, p) - offset for p in points]
    if all(v >= 0 for v in values):
        return Halfspace(normal, offset)
    if all(v <= 0 for v in values):
        return Halfspace(rq.neg(normal), -offset)
    return None


def _brute_force_facets(points: Sequence[Vector], d: int, complement: Sequence[Vector]) -> List[Halfspace]:
    found: Dict[Tuple[Vector, Fraction], Halfspace] = {}
    for subset in itertools.combinations(range(len(points)), d):
        h = _facet_from_subset(points, subset, complement)
        if h is not None:
            found.setdefault((h.normal, h.offset), h)
    return list(found.values())


def _qhull_facets(points: Sequence[Vector], directions: Sequence[Vector],
                  complement: Sequence[Vector]) -> Optional[List[Halfspace]]:
    """Candidate facets from Qhull, each verified exactly; None if not certified."""
    d = len(directions)
    _, pivots = rq.rref(list(directions), len(points[0]))
    coords = np.array([[float(p[c]) for c in pivots] for p in points])
    try:
        hull = ConvexHull(coords)
    except (QhullError, ValueError) as e:
        logger.debug(f"Qhull failed, falling back to brute force: {str(e)}")
        return None
    found: Dict[Tuple[Vector, Fraction], Halfspace] = {}
    for simplex in hull.simplices:
        # rounding can produce simplices that are not exact facets; the ridge check catches gaps
        h = _facet_from_subset(points, [int(i) for i in simplex], complement)
        if h is not None:
            found.setdefault((h.normal, h.offset), h)
    facets = list(found.values())
    if not facets or not _ridges_certified(points, facets, d):
        return None
    return facets


def _ridges_certified(points: Sequence[Vector], facets: Sequence[Halfspace], d: int) -> bool:
    """Every ridge of every facet lies in exactly two facets."""
    counts: Dict[Tuple[Vector, ...], int] = {}
    for h in facets:
        sub = convex_hull([p for p in points if h.value(p) == 0])
        for ridge in sub.faces_of_dim(d - 2):
            key = tuple(sub.vertices[i] for i in sorted(ridge.vertices))
            counts[key] = counts.get(key, 0) + 1
    return all(c == 2 for c in counts.values())


def _build_lattice(n_vertices: int, facet_sets: Sequence[FrozenSet[int]], dim: int,
                   points: Sequence[Vector]) -> Tuple[List[Face], Dict[FrozenSet[int], List[FrozenSet[int]]]]:
    vertex_facets: Dict[int, List[int]] = {v: [] for v in range(n_vertices)}
    for j, fs in enumerate(facet_sets):
        for v in fs:
            vertex_facets[v].append(j)

    def supporting(vs: FrozenSet[int]) -> FrozenSet[int]:
        return frozenset(j for j, fs in enumerate(facet_sets) if vs <= fs)

    top = frozenset(range(n_vertices))
    faces = {top: Face(dim, top, frozenset())}
    face_facets: Dict[FrozenSet[int], List[FrozenSet[int]]] = {}
    level = [top]
    current_dim = dim
    while current_dim > 0:
        next_level: Dict[FrozenSet[int], None] = {}
        for g in level:
            touching = {j for v in g for j in vertex_facets[v]}
            candidates = {g & facet_sets[j] for j in touching if not g <= facet_sets[j]}
            candidates.discard(frozenset())
            maximal = [c for c in candidates if not any(c < o for o in candidates)]
            face_facets[g] = sorted(maximal, key=lambda s: tuple(sorted(s)))
            for c in maximal:
                next_level.setdefault(c)
        current_dim -= 1
        for c in next_level:
            if c not in faces:
                k = rq.affine_rank([points[i] for i in sorted(c)])
                if k != current_dim:
                    raise MalformedInputError(f"Face lattice is not graded at dimension {current_dim}")
                faces[c] = Face(current_dim, c, supporting(c))
        level = list(next_level)
    return list(faces.values()), face_facets


def convex_hull(points: Sequence[Sequence]) -> Polytope:
    """Exact convex hull with H-rep and face lattice; lower-dimensional hulls allowed."""
    if not points:
        raise MalformedInputError("convex_hull needs at least one point")
    pts = [rq.to_vector(p) for p in points]
    n = len(pts[0])
    if any(len(p) != n for p in pts):
        raise DimensionMismatchError("Points of different ambient dimensions")
    pts = sorted(set(pts))
    directions, complement = _affine_frame(pts)
    d = len(directions)
    equations = [Halfspace(_canonical_sign(rq.primitive(c)), Fraction(0)) for c in complement]
    equations = [Halfspace(e.normal, rq.dot(e.normal, pts[0])) for e in equations]

    if d == 0:
        face = Face(0, frozenset([0]), frozenset())
        return Polytope(n, pts, equations, [], [face], {}, [])

    facets = None
    if len(pts) > QHULL_THRESHOLD and d >= 2:
        facets = _qhull_facets(pts, directions, complement)
        if facets is None:
            logger.warning(f"Qhull candidates not certified for {len(pts)} points; using brute force")
    if facets is None:
        facets = _brute_force_facets(pts, d, complement)

    # vertices: points where the tight facet normals span the direction space
    vertices = []
    for p in pts:
        tight_normals = [h.normal for h in facets if h.value(p) == 0]
        if rq.rank(tight_normals) == d:
            vertices.append(p)
    vertices.sort()
    facets.sort(key=lambda h: (h.normal, h.offset))
    facet_sets = [frozenset(i for i, v in enumerate(vertices) if h.value(v) == 0) for h in facets]
    faces, face_facets = _build_lattice(len(vertices), facet_sets, d, vertices)
    directions = rq.row_basis([rq.sub(v, vertices[0]) for v in vertices[1:]])
    polytope = Polytope(n, vertices, equations, facets, faces, face_facets, directions)
    logger.debug(f"Built {polytope!r} with {len(facets)} facets and {len(faces)} faces")
    return polytope


def point_polytope(x: Sequence) -> Polytope:
    return convex_hull([x])


# cones


def cone_facet_normals(generators: Sequence[Vector], n: int) -> List[Vector]:
    """H-rep normals (a . v >= 0) of cone(generators); equations enter as +/- pairs."""
    gens = sorted({rq.primitive(g) for g in generators if any(x != 0 for x in g)})
    span = rq.row_basis(gens)
    m = len(span)
    perp = rq.orthogonal_complement(span, n)
    normals = set()
    for p in perp:
        pp = rq.primitive(p)
        normals.add(pp)
        normals.add(rq.neg(pp))
    if m >= 1:
        for subset in itertools.combinations(gens, m - 1):
            null = rq.nullspace(list(subset) + perp, n)
            if len(null) != 1:
                continue
            a = rq.primitive(null[0])
            values = [rq.dot(a, g) for g in gens]
            if all(v >= 0 for v in values):
                normals.add(a)
            elif all(v <= 0 for v in values):
                normals.add(rq.neg(a))
    return sorted(normals)


@dataclass(frozen=True)
class Cone:
    """Closed convex polyhedral cone in both representations.

    halfspaces: normals a with <a, x - apex> >= 0. generators: extreme rays of the
    pointed part plus +/- a basis of the lineality space.
    """
    ambient_dim: int
    apex: Vector
    generators: Tuple[Vector, ...]
    halfspaces: Tuple[Vector, ...]

    @classmethod
    def from_generators(cls, generators: Sequence[Vector], n: int, apex: Optional[Vector] = None) -> "Cone":
        normals = cone_facet_normals(generators, n)
        gens = cone_facet_normals(normals, n)
        return cls(n, apex or rq.zero(n), tuple(gens), tuple(normals))

    @classmethod
    def from_halfspaces(cls, normals: Sequence[Vector], n: int, apex: Optional[Vector] = None) -> "Cone":
        gens = cone_facet_normals(normals, n)
        canonical = cone_facet_normals(gens, n)
        return cls(n, apex or rq.zero(n), tuple(gens), tuple(canonical))

    def contains(self, v: Vector) -> bool:
        direction = rq.sub(v, self.apex)
        return all(rq.dot(a, direction) >= 0 for a in self.halfspaces)

    def contains_direction(self, v: Vector) -> bool:
        return all(rq.dot(a, v) >= 0 for a in self.halfspaces)

    def same_set(self, other: "Cone") -> bool:
        return (self.apex == other.apex
                and all(other.contains_direction(g) for g in self.generators)
                and all(self.contains_direction(g) for g in other.generators))

    @property
    def lineality(self) -> List[Vector]:
        return rq.nullspace(list(self.halfspaces), self.ambient_dim) if self.halfspaces else \
            [rq.unit(self.ambient_dim, i) for i in range(self.ambient_dim)]

    @property
    def span(self) -> List[Vector]:
        return rq.row_basis(list(self.generators))

    @property
    def dim(self) -> int:
        return len(self.span)

    def is_pointed(self) -> bool:
        return not self.lineality

    def pointed_rays(self) -> List[Vector]:
        """Generators that are not in the lineality space."""
        lin = self.lineality
        return [g for g in self.generators if not rq.in_span(lin, g)]

    def dilate(self, t: Fraction) -> "Cone":
        return Cone(self.ambient_dim, self.apex, tuple(rq.scale(g, t) for g in self.generators), self.halfspaces)

    def negate(self) -> "Cone":
        return Cone.from_generators([rq.neg(g) for g in self.generators], self.ambient_dim, rq.neg(self.apex))


def tangent_cone(P: Polytope, x: Sequence) -> Cone:
    """Cone of feasible directions at x (apex at the origin)."""
    point = rq.to_vector(x)
    if not P.contains(point):
        raise NotInPolytopeError("tangent_cone needs a point of the polytope", point=list(point))
    normals = [P.inequalities[j].normal for j in sorted(P.tight_facets(point))]
    for eq in P.equations:
        normals.extend([eq.normal, rq.neg(eq.normal)])
    return Cone.from_halfspaces(normals, P.ambient_dim)


def tangent_cone_at_face(P: Polytope, face: Face) -> Cone:
    return tangent_cone(P, P.face_barycenter(face))


def dual_cone(C: Cone) -> Cone:
    """C° = {y : y(x) >= 0 for all x in C}; taken for the direction cone at the apex."""
    n = C.ambient_dim
    return Cone(n, rq.zero(n), tuple(C.halfspaces), tuple(C.generators))


def normal_cone(P: Polytope, face: Face) -> Cone:
    """(T_x P)° for x in the relative interior of the face (covectors pointing inward)."""
    gens = [P.inequalities[j].normal for j in sorted(face.facets)]
    for eq in P.equations:
        gens.extend([eq.normal, rq.neg(eq.normal)])
    return Cone.from_generators(gens, P.ambient_dim)


def outward_normal_cone(P: Polytope, face: Face) -> Cone:
    return normal_cone(P, face).negate()


# external angles


def _angle_between(a: Vector, b: Vector) -> float:
    ab = rq.dot(a, b)
    cross_sq = rq.dot(a, a) * rq.dot(b, b) - ab * ab
    return math.atan2(math.sqrt(float(max(cross_sq, Fraction(0)))), float(ab))


def _solid_angle(a: Vector, b: Vector, c: Vector) -> float:
    gram = [[rq.dot(p, q) for q in (a, b, c)] for p in (a, b, c)]
    triple = math.sqrt(float(max(rq.det(gram), Fraction(0))))
    na, nb, nc = (math.sqrt(float(rq.dot(v, v))) for v in (a, b, c))
    denom = na * nb * nc + float(rq.dot(a, b)) * nc + float(rq.dot(a, c)) * nb + float(rq.dot(b, c)) * na
    return 2.0 * math.atan2(triple, denom)


def _cyclic_rays(rays: List[Vector], n: int) -> List[Vector]:
    """Order the extreme rays of a pointed 3-cone along its boundary (exact adjacency)."""
    normals = [a for a in cone_facet_normals(rays, n) if any(rq.dot(a, r) != 0 for r in rays)]
    adjacency: Dict[int, List[int]] = {i: [] for i in range(len(rays))}
    for a in normals:
        on = [i for i, r in enumerate(rays) if rq.dot(a, r) == 0]
        if len(on) == 2:
            adjacency[on[0]].append(on[1])
            adjacency[on[1]].append(on[0])
    order = [0]
    previous = None
    while len(order) < len(rays):
        current = order[-1]
        nxt = next(j for j in adjacency[current] if j != previous and j not in order)
        previous = current
        order.append(nxt)
    return [rays[i] for i in order]


def external_angle_with_error(face: Face, P: Polytope, samples: int = 200_000,
                              seed: int = 0) -> Tuple[float, float]:
    """Normalized solid angle of the normal cone of a face and its standard error."""
    face = P.find_face(face)
    m = P.dim - face.dim
    if m == 0:
        return 1.0, 0.0
    if m == 1:
        return 0.5, 0.0
    rays = [P.inequalities[j].normal for j in sorted(face.facets)]
    n = P.ambient_dim
    if m == 2:
        return _angle_between(rays[0], rays[1]) / (2.0 * math.pi), 0.0
    if m == 3:
        ordered = _cyclic_rays(rays, n)
        total = sum(_solid_angle(ordered[0], ordered[i], ordered[i + 1]) for i in range(1, len(ordered) - 1))
        return total / (4.0 * math.pi), 0.0
    normals = [a for a in cone_facet_normals(rays, n) if any(rq.dot(a, r) != 0 for r in rays)]
    u, _, _ = np.linalg.svd(np.array([[float(x) for x in r] for r in rays]).T, full_matrices=False)
    basis = u[:, :m]
    rng = np.random.default_rng(seed)
    z = rng.standard_normal((samples, m)) @ basis.T
    inside = np.all(z @ np.array([[float(x) for x in a] for a in normals]).T >= 0.0, axis=1)
    fraction = float(inside.mean())
    return fraction, math.sqrt(fraction * (1.0 - fraction) / samples)


def external_angle(face: Face, P: Polytope) -> float:
    return external_angle_with_error(face, P)[0]


# affine maps


def affine_image(P: Polytope, t, x: Sequence) -> Polytope:
    """tP + x with exact coordinates."""
    t = rq.to_fraction(t)
    shift = rq.to_vector(x)
    if len(shift) != P.ambient_dim:
        raise DimensionMismatchError("Translation vector has the wrong dimension")
    if t < 0:
        raise NegativeScaleError("affine_image needs t >= 0", t=str(t))
    if t == 0:
        return point_polytope(shift)
    return convex_hull([rq.add(rq.scale(v, t), shift) for v in P.vertices])


def negate(P: Polytope) -> Polytope:
    return convex_hull([rq.neg(v) for v in P.vertices])


# intersection


def intersect(P: Polytope, Q: Polytope) -> Optional[Polytope]:
    """Exact intersection, None when empty."""
    if P.ambient_dim != Q.ambient_dim:
        raise DimensionMismatchError("Polytopes live in different ambient spaces")
    for (lo1, hi1), (lo2, hi2) in zip(P.bounding_box, Q.bounding_box):
        if hi1 < lo2 or hi2 < lo1:
            return None
    if P.contains_polytope(Q):
        return Q
    if Q.contains_polytope(P):
        return P
    n = P.ambient_dim
    constraints = sorted({(h.normal, h.offset) for h in P.halfspaces + Q.halfspaces})
    points = set()
    for subset in itertools.combinations(constraints, n):
        x = rq.solve([list(a) for a, _ in subset], [b for _, b in subset])
        if x is None or x in points:
            continue
        if P.contains(x) and Q.contains(x):
            points.add(x)
    if not points:
        return None
    return convex_hull(sorted(points))


# generators


def cube(n: int, lo=0, hi=1) -> Polytope:
    lo, hi = rq.to_fraction(lo), rq.to_fraction(hi)
    return convex_hull([tuple(hi if b else lo for b in bits) for bits in itertools.product((0, 1), repeat=n)])


def simplex(n: int) -> Polytope:
    return convex_hull([rq.zero(n)] + [rq.unit(n, i) for i in range(n)])


def random_hull(n: int, count: int, seed: int, denominator: int = 16) -> Polytope:
    rng = np.random.default_rng(seed)
    raw = rng.integers(-denominator, denominator + 1, size=(count, n))
    return convex_hull([tuple(Fraction(int(c), denominator) for c in row) for row in raw])


def _rational_circle_point(theta: float, max_denominator: int) -> Tuple[Fraction, Fraction]:
    flip = math.cos(theta) < 0
    if flip:
        theta -= math.pi
    t = Fraction(math.tan(theta / 2.0)).limit_denominator(max_denominator)
    x, y = (1 - t * t) / (1 + t * t), 2 * t / (1 + t * t)
    return (-x, -y) if flip else (x, y)


def regular_polygon(m: int, max_denominator: int = 10 ** 6) -> Polytope:
    """Regular m-gon inscribed in the unit circle, vertices exactly on the circle."""
    return convex_hull([_rational_circle_point(2.0 * math.pi * i / m, max_denominator) for i in range(m)])


def sphere_polytope(m: int, max_denominator: int = 10 ** 4) -> Polytope:
    """Latitude/longitude polytope with m meridians inscribed in the unit sphere.

    Every parallel reuses the same rational azimuth points, so the bands between
    parallels are exactly planar trapezoids.
    """
    if m < 3:
        raise MalformedInputError("sphere_polytope needs at least 3 meridians", m=m)
    azimuths = [_rational_circle_point(2.0 * math.pi * j / m, max_denominator) for j in range(m)]
    points = [(Fraction(0), Fraction(0), Fraction(1)), (Fraction(0), Fraction(0), Fraction(-1))]
    parallels = max(m // 2 - 1, 1)
    for i in range(1, parallels + 1):
        z, r = _rational_circle_point(math.pi * i / (parallels + 1), max_denominator)
        points.extend((r * c, r * s, z) for c, s in azimuths)
    return convex_hull(points)
