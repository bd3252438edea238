"""
Measurable maps between probability spaces: tabular maps on finite spaces,
the analytic maps (affine, rotation, reflection, interval swap), compositions,
ball truncations and small tanh networks, plus push-forward of spaces.

Maps are applied to (N, dim) point arrays. On finite spaces a point is the
index of an atom, so a tabular map is just a lookup table.
"""

import math

import numpy as np

from .divergence import divergence
from .errors import (DimensionMismatch, LabelMismatch, MissingInverse, MissingJacobian,
                     NonpositiveLength, NotSpecialOrthogonal, NotTotal, OutsideDomain,
                     OverlappingIntervals, TargetBoxTooSmall, UnequalMasses, UnknownLabel)
from .probspace import FiniteSpace, GridDensity, SampleSet, grid_from_values, make_grid_density

ORTHOGONAL_TOL = 1e-10
MASS_EQUAL_TOL = 1e-12
PUSHED_MASS_TOL = 1e-3 # mass the pushed density may lose outside the target box
MAX_NET_WIDTH = 32


def as_points(points, dim):
    """Coerces scalars, flat vectors and (N, dim) arrays to (N, dim) float64."""
    points = np.asarray(points, dtype=np.float64)
    if points.ndim == 0:
        points = points.reshape(1, 1)
    elif points.ndim == 1:
        points = points[:, None] if dim == 1 else points[None, :]
    if points.shape[1] != dim:
        raise DimensionMismatch(f"expected {dim}-d points, got shape {points.shape}")
    return points


class MeasurableMap:
    """
    A map between spaces. `inverse` and `jacobian_logdet` are optional; when
    present, `inverse.inverse is self`. Treat instances as immutable.
    """

    def __init__(self, kind, domain_dim, codomain_dim, fn, params=None, jacobian_logdet=None,
                 domain=None, codomain=None, domain_radius=None, is_identity=False, name=None):
        self.kind = kind
        self.domain_dim = domain_dim
        self.codomain_dim = codomain_dim
        self.params = params or {}
        self.jacobian_logdet = jacobian_logdet
        self.domain = domain        # FiniteSpace for tabular maps
        self.codomain = codomain
        self.domain_radius = domain_radius
        self.is_identity = is_identity
        self.name = name or kind
        self.inverse = None
        self._fn = fn

    def __repr__(self):
        return f"MeasurableMap({self.name}: R^{self.domain_dim} -> R^{self.codomain_dim})"

    @property
    def has_inverse(self):
        return self.inverse is not None

    @property
    def is_tabular(self):
        return self.kind == 'tabular'

    def outside_domain(self, points):
        if self.domain_radius is None:
            return np.zeros(len(points), dtype=bool)
        return np.linalg.norm(points, axis=1) > self.domain_radius * (1 + 1e-12)

    def __call__(self, points):
        points = as_points(points, self.domain_dim)
        outside = self.outside_domain(points)
        if outside.any():
            raise OutsideDomain(f"{int(outside.sum())} points lie outside the ball of radius {self.domain_radius}")
        return self._fn(points)

    def evaluate_unchecked(self, points):
        return self._fn(as_points(points, self.domain_dim))

    # tabular helpers

    @property
    def table(self):
        assert self.is_tabular, f"{self.name} is not tabular"
        return self.params['table']

    @property
    def assignment(self):
        """label -> label dict for tabular maps, in domain label order."""
        return {self.domain.labels[i]: self.codomain.labels[j] for i, j in enumerate(self.table)}

    def apply_label(self, label):
        if not self.domain.has_label(label):
            raise UnknownLabel(label)
        return self.codomain.labels[self.table[self.domain.index_of(label)]]


def _link(forward, backward):
    forward.inverse = backward
    backward.inverse = forward
    return forward


# -----------------------------------------------------------------------------
# finite spaces

def tabular_map(domain, codomain, assignment, name='tabular'):
    """
    A map of finite spaces given as {domain label: codomain label}. The inverse
    is populated iff the assignment is a bijection.
    """
    for label in assignment:
        if not domain.has_label(label):
            raise UnknownLabel(label)
    missing = [l for l in domain.labels if l not in assignment]
    if missing:
        raise NotTotal(f"assignment does not cover {missing}")
    table = []
    for label in domain.labels:
        image = assignment[label]
        if not codomain.has_label(image):
            raise UnknownLabel(image)
        table.append(codomain.index_of(image))
    return tabular_from_table(domain, codomain, np.array(table, dtype=np.int64), name)


def tabular_from_table(domain, codomain, table, name='tabular'):
    table = np.asarray(table, dtype=np.int64)
    table.flags.writeable = False
    same_labels = domain.labels == codomain.labels

    def fn(points):
        return table[points[:, 0].astype(np.int64)][:, None].astype(np.float64)

    m = MeasurableMap('tabular', 1, 1, fn, params={'table': table},
                      jacobian_logdet=lambda x: np.zeros(len(x)),
                      domain=domain, codomain=codomain,
                      is_identity=same_labels and bool(np.all(table == np.arange(len(table)))),
                      name=name)
    if len(domain) == len(codomain) and len(set(table.tolist())) == len(table):
        inv_table = np.empty_like(table)
        inv_table[table] = np.arange(len(table))
        inv_table.flags.writeable = False

        def inv_fn(points):
            return inv_table[points[:, 0].astype(np.int64)][:, None].astype(np.float64)

        inv = MeasurableMap('tabular', 1, 1, inv_fn, params={'table': inv_table},
                            jacobian_logdet=lambda x: np.zeros(len(x)),
                            domain=codomain, codomain=domain,
                            is_identity=m.is_identity, name=f"{name}^-1")
        _link(m, inv)
    return m


def _atom_index(space, key):
    if space.has_label(key):
        return space.index_of(key)
    if isinstance(key, (int, np.integer)) and 0 <= key < len(space):
        return int(key)
    raise UnknownLabel(key)


def atom_transposition(space, j, k):
    """Swaps atoms j and k (labels, or indices when not a label) of equal mass."""
    j, k = _atom_index(space, j), _atom_index(space, k)
    if abs(space.masses[j] - space.masses[k]) > MASS_EQUAL_TOL:
        raise UnequalMasses(f"atoms {space.labels[j]!r} and {space.labels[k]!r} have masses "
                            f"{space.masses[j]} and {space.masses[k]}")
    table = np.arange(len(space))
    table[[j, k]] = table[[k, j]]
    return tabular_from_table(space, space, table,
                               name=f"swap({space.labels[j]},{space.labels[k]})")


# -----------------------------------------------------------------------------
# analytic maps on R^n

def affine(matrix, shift=None, name='affine'):
    """x -> A x + b. Invertible (with constant logdet) when A is square and nonsingular."""
    A = np.atleast_2d(np.asarray(matrix, dtype=np.float64))
    b = np.zeros(A.shape[0]) if shift is None else np.asarray(shift, dtype=np.float64).reshape(A.shape[0])
    out_dim, in_dim = A.shape
    is_id = out_dim == in_dim and np.array_equal(A, np.eye(in_dim)) and not b.any()
    m = MeasurableMap('affine', in_dim, out_dim, lambda x: x @ A.T + b,
                      params={'matrix': A, 'shift': b}, is_identity=is_id, name=name)
    if out_dim == in_dim:
        sign, logdet = np.linalg.slogdet(A)
        if sign != 0:
            A_inv = np.linalg.inv(A)
            b_inv = -A_inv @ b
            m.jacobian_logdet = lambda x: np.full(len(x), logdet)
            inv = MeasurableMap('affine', in_dim, in_dim, lambda x: x @ A_inv.T + b_inv,
                                params={'matrix': A_inv, 'shift': b_inv},
                                jacobian_logdet=lambda x: np.full(len(x), -logdet),
                                is_identity=is_id, name=f"{name}^-1")
            _link(m, inv)
    return m


def identity(space_or_dim):
    if isinstance(space_or_dim, FiniteSpace):
        return tabular_from_table(space_or_dim, space_or_dim, np.arange(len(space_or_dim)), name='identity')
    if isinstance(space_or_dim, GridDensity):
        space_or_dim = space_or_dim.dim
    return affine(np.eye(space_or_dim), name='identity')


def shift(offset):
    offset = np.atleast_1d(np.asarray(offset, dtype=np.float64))
    return affine(np.eye(len(offset)), offset, name=f"shift({', '.join(f'{o:g}' for o in offset)})")


def reflection(center, axes=None, name=None):
    """x -> 2c - x on the chosen axes (all by default), identity on the rest. Self-inverse."""
    center = np.atleast_1d(np.asarray(center, dtype=np.float64))
    dim = len(center)
    axes = list(range(dim)) if axes is None else sorted(int(a) for a in axes)
    mask = np.zeros(dim, dtype=bool)
    mask[axes] = True

    def fn(x):
        return np.where(mask, 2 * center - x, x)

    m = MeasurableMap('reflection', dim, dim, fn, params={'center': center, 'axes': axes},
                      jacobian_logdet=lambda x: np.zeros(len(x)), is_identity=not axes,
                      name=name or 'reflection')
    m.inverse = m
    return m


def reflection_interval(c):
    """x -> c - x, an automorphism of [0, c] with Lebesgue measure."""
    if c <= 0:
        raise NonpositiveLength(f"interval length must be positive, got {c}")
    m = reflection([c / 2.0], name=f"reflection[0,{c:g}]")
    m.params['c'] = float(c)
    return m


def interval_swap(a, b, d, domain=(0.0, 1.0)):
    """
    Exchanges [a, a+d) and [b, b+d) by translation, identity elsewhere.
    Piecewise smooth: the Jacobian is taken as 0 off the measure-zero seams.
    """
    if d <= 0:
        raise NonpositiveLength(f"interval length must be positive, got {d}")
    a, b = sorted((float(a), float(b)))
    if a + d > b:
        raise OverlappingIntervals(f"[{a}, {a + d}) and [{b}, {b + d}) overlap")
    lo, hi = domain
    if a < lo or b + d > hi:
        raise ValueError(f"intervals [{a}, {a + d}) and [{b}, {b + d}) leave the domain [{lo}, {hi}]")
    offset = b - a

    def fn(x):
        out = x.copy()
        first = (x >= a) & (x < a + d)
        second = (x >= b) & (x < b + d)
        out[first] += offset
        out[second] -= offset
        return out

    m = MeasurableMap('interval_swap', 1, 1, fn,
                      params={'a': a, 'b': b, 'd': float(d), 'domain': (float(lo), float(hi)), 'seam': True},
                      jacobian_logdet=lambda x: np.zeros(len(x)),
                      name=f"swap[{a:g},{a + d:g})<->[{b:g},{b + d:g})")
    m.inverse = m
    return m


def _givens(dim, i, j, angle):
    g = np.eye(dim)
    c, s = math.cos(angle), math.sin(angle)
    g[i, i], g[i, j], g[j, i], g[j, j] = c, -s, s, c
    return g


def rotation(dim=None, angles=None, matrix=None):
    """
    A rotation of R^dim, either from an orthogonal matrix with determinant +1
    or from plane angles, one per coordinate plane (0,1), (0,2), ..., (1,2), ...
    applied in that order.
    """
    if matrix is not None:
        Q = np.atleast_2d(np.asarray(matrix, dtype=np.float64))
        if Q.shape[0] != Q.shape[1]:
            raise NotSpecialOrthogonal(f"rotation matrix must be square, got {Q.shape}")
        dim = Q.shape[0]
        err = np.abs(Q.T @ Q - np.eye(dim)).max()
        if err > ORTHOGONAL_TOL or abs(np.linalg.det(Q) - 1.0) > ORTHOGONAL_TOL:
            raise NotSpecialOrthogonal(f"matrix is not in SO({dim}): |Q^T Q - I|_max = {err:.2e}, "
                                       f"det = {np.linalg.det(Q):.6f}")
        # snap to the nearest orthogonal matrix
        u, _, vt = np.linalg.svd(Q)
        Q = u @ vt
    else:
        assert dim is not None, "rotation needs dim with angles"
        angles = np.atleast_1d(np.asarray(0.0 if angles is None else angles, dtype=np.float64))
        planes = [(i, j) for i in range(dim) for j in range(i + 1, dim)]
        if len(angles) != len(planes):
            raise DimensionMismatch(f"rotation of R^{dim} takes {len(planes)} plane angles, got {len(angles)}")
        Q = np.eye(dim)
        for (i, j), angle in zip(planes, angles):
            Q = _givens(dim, i, j, angle) @ Q
    return _rotation_from_matrix(Q)


def _rotation_from_matrix(Q, name='rotation'):
    Qt = Q.T.copy()
    is_id = np.array_equal(Q, np.eye(len(Q)))
    zero = lambda x: np.zeros(len(x))
    m = MeasurableMap('rotation', len(Q), len(Q), lambda x: x @ Q.T,
                      params={'matrix': Q}, jacobian_logdet=zero, is_identity=is_id, name=name)
    inv = MeasurableMap('rotation', len(Q), len(Q), lambda x: x @ Qt.T,
                        params={'matrix': Qt}, jacobian_logdet=zero, is_identity=is_id, name=f"{name}^-1")
    return _link(m, inv)


# -----------------------------------------------------------------------------
# parametric maps

def parametric_net(layers, name='net'):
    """
    Two-hidden-layer tanh perceptron from [(W1, b1), (W2, b2), (W3, b3)] with
    W of shape (out, in). Forward only: no inverse and no Jacobian.
    """
    assert len(layers) == 3, f"expected 3 (weight, bias) layers, got {len(layers)}"
    layers = [(np.asarray(W, dtype=np.float64), np.asarray(b, dtype=np.float64)) for W, b in layers]
    for W, b in layers[:2]:
        if W.shape[0] > MAX_NET_WIDTH:
            raise ValueError(f"hidden width {W.shape[0]} exceeds {MAX_NET_WIDTH}")
    for (W, _), (W_next, _) in zip(layers, layers[1:]):
        if W.shape[0] != W_next.shape[1]:
            raise DimensionMismatch(f"layer widths do not chain: {W.shape} then {W_next.shape}")
    (W1, b1), (W2, b2), (W3, b3) = layers

    def fn(x):
        h = np.tanh(x @ W1.T + b1)
        h = np.tanh(h @ W2.T + b2)
        return h @ W3.T + b3

    return MeasurableMap('parametric_net', W1.shape[1], W3.shape[0], fn,
                         params={'layers': layers}, name=name)


# -----------------------------------------------------------------------------
# combinators

def compose(*maps):
    """compose(f, g, h) applies f first, then g, then h."""
    parts = []
    for m in maps:
        parts.extend(m.params['parts'] if m.kind == 'composite' else [m])
    assert parts, "compose needs at least one map"
    for first, second in zip(parts, parts[1:]):
        if first.codomain_dim != second.domain_dim:
            raise DimensionMismatch(f"cannot compose {first.name} (-> R^{first.codomain_dim}) "
                                    f"with {second.name} (R^{second.domain_dim} ->)")
    if all(p.is_tabular for p in parts):
        return parts[0] if len(parts) == 1 else _compose_tabular(parts)
    plain_ids = [p.is_identity and p.domain_radius is None for p in parts]
    if not all(plain_ids):
        parts = [p for p, plain in zip(parts, plain_ids) if not plain]
    if len(parts) == 1:
        return parts[0]
    m = _composite(parts)
    if all(p.has_inverse for p in parts):
        _link(m, _composite([p.inverse for p in reversed(parts)]))
    return m


def _compose_tabular(parts):
    table = np.arange(len(parts[0].domain))
    for first, second in zip(parts, parts[1:]):
        if first.codomain.labels != second.domain.labels:
            raise LabelMismatch(f"{first.name} lands in {first.codomain.labels}, "
                                f"{second.name} starts from {second.domain.labels}")
    for p in parts:
        table = p.table[table]
    return tabular_from_table(parts[0].domain, parts[-1].codomain, table,
                               name=' . '.join(p.name for p in reversed(parts)))


def _composite(parts):
    def fn(x):
        for p in parts:
            x = p(x)
        return x

    logdet = None
    if all(p.jacobian_logdet is not None for p in parts):
        def logdet(x):
            total = np.zeros(len(x))
            for p in parts:
                total += p.jacobian_logdet(x)
                x = p.evaluate_unchecked(x)
            return total

    return MeasurableMap('composite', parts[0].domain_dim, parts[-1].codomain_dim, fn,
                         params={'parts': list(parts)}, jacobian_logdet=logdet,
                         domain_radius=parts[0].domain_radius,
                         is_identity=all(p.is_identity for p in parts),
                         name=' . '.join(p.name for p in reversed(parts)))


def conjugate(f, T):
    """S = f . T . f^-1, an automorphism of f_*mu whenever T is one of mu."""
    if not f.has_inverse:
        raise MissingInverse(f"conjugating map {f.name} has no inverse")
    if not (T.domain_dim == T.codomain_dim == f.domain_dim):
        raise DimensionMismatch(f"{T.name} acts on R^{T.domain_dim}, {f.name} starts from R^{f.domain_dim}")
    if f.is_tabular and T.is_tabular and f.domain.labels != T.domain.labels:
        raise LabelMismatch(f"{T.name} and {f.name} live on different label sets")
    return compose(f.inverse, T, f)


def truncate_ball(m, R):
    """Restricts m to the closed ball of radius R; evaluation outside raises OutsideDomain."""
    if R <= 0:
        raise NonpositiveLength(f"ball radius must be positive, got {R}")
    restricted = _restricted(m, R)
    if m.has_inverse:
        # rotations and the identity keep the ball invariant, so their inverse
        # lives on the same ball; otherwise the image is not a ball
        if m.kind == 'rotation' or m.is_identity:
            _link(restricted, _restricted(m.inverse, R))
        else:
            restricted.inverse = m.inverse
    return restricted


def _restricted(m, R):
    return MeasurableMap(m.kind, m.domain_dim, m.codomain_dim, m._fn, params=m.params,
                         jacobian_logdet=m.jacobian_logdet, domain=m.domain, codomain=m.codomain,
                         domain_radius=float(R), is_identity=m.is_identity, name=f"{m.name}|B({R:g})")


# -----------------------------------------------------------------------------
# push-forward

def pushforward(m, source, target_box=None, resolution=None):
    """
    finite -> masses summed over preimages
    grid   -> (m_* p)(y) = p(m^-1 y) exp(-logdet_m(m^-1 y)) tabulated on target_box
    samples -> pointwise images
    """
    if isinstance(source, FiniteSpace):
        return _pushforward_finite(m, source)
    if isinstance(source, SampleSet):
        if source.dim != m.domain_dim:
            raise DimensionMismatch(f"{m.name} acts on R^{m.domain_dim}, samples are {source.dim}-d")
        points = m(source.points)
        labels = None
        if source.labels is not None and m.is_tabular:
            labels = tuple(m.codomain.labels[int(i)] for i in points[:, 0])
        return SampleSet(dim=m.codomain_dim, points=points, seed=source.seed, labels=labels)
    if isinstance(source, GridDensity):
        return _pushforward_grid(m, source, target_box, resolution)
    raise TypeError(f"cannot push forward {type(source).__name__}")


def _pushforward_finite(m, source):
    if not m.is_tabular:
        raise DimensionMismatch(f"{m.name} is not a map of finite spaces")
    if set(source.labels) != set(m.domain.labels):
        raise LabelMismatch(f"{m.name} is defined on {m.domain.labels}, space has {source.labels}")
    masses = np.zeros(len(m.codomain))
    for label, mass in zip(source.labels, source.masses):
        masses[m.table[m.domain.index_of(label)]] += mass
    masses.flags.writeable = False
    return FiniteSpace(labels=m.codomain.labels, masses=masses)


def _pushforward_grid(m, source, target_box, resolution):
    if m.domain_dim != source.dim:
        raise DimensionMismatch(f"{m.name} acts on R^{m.domain_dim}, density is {source.dim}-d")
    if target_box is None:
        if m.codomain_dim != source.dim:
            raise DimensionMismatch(f"{m.name} changes dimension; give a target box")
        target_box = source.box
    if resolution is None:
        resolution = source.resolution
    grid = make_grid_density(target_box, resolution, _ones)
    if m.is_identity and m.domain_radius is None and grid.same_grid(source):
        return source
    if not m.has_inverse:
        raise MissingInverse(f"grid push-forward through {m.name} needs its inverse")
    if m.jacobian_logdet is None:
        raise MissingJacobian(f"grid push-forward through {m.name} needs its Jacobian")
    y = grid.cell_centers()
    x = m.inverse.evaluate_unchecked(y)
    values = source.density_at(x) * np.exp(-m.jacobian_logdet(x))
    values[m.outside_domain(x)] = 0.0
    mass = float(values.sum() * grid.cell_volume)
    if 1.0 - mass > PUSHED_MASS_TOL:
        raise TargetBoxTooSmall(f"push-forward through {m.name} keeps mass {mass:.6f} inside the target box")
    return grid_from_values(target_box, resolution, values, raw_mass=mass)


def regrid(density, box, resolution):
    """Re-tabulates a density on another box/resolution, renormalized."""
    out = make_grid_density(box, resolution, density.density_at)
    return density if out.same_grid(density) else out


def _ones(x):
    return np.ones(len(x))


# -----------------------------------------------------------------------------
# checks

class PreservationReport:
    def __init__(self, divergence_name, discrepancy, tolerance, support_violation=False):
        self.divergence_name = divergence_name
        self.discrepancy = float(discrepancy)
        self.tolerance = float(tolerance)
        self.verdict = self.discrepancy <= self.tolerance
        self.support_violation = support_violation

    def __repr__(self):
        return (f"PreservationReport({self.divergence_name}: {self.discrepancy:.3e} "
                f"<= {self.tolerance:.1e} is {self.verdict})")

    def to_dict(self):
        return {'divergence': self.divergence_name, 'discrepancy': self.discrepancy,
                'tolerance': self.tolerance, 'verdict': self.verdict,
                'support_violation': self.support_violation}


def is_measure_preserving(m, space, divergence_name='TV', tol=1e-9):
    """Certifies m_* space = space up to tol in the named divergence."""
    pushed = pushforward(m, space)
    value, violation = divergence(divergence_name, pushed, space, with_flag=True)
    return PreservationReport(divergence_name, max(value, 0.0), tol, violation)


def round_trip_error(m, points):
    """max |m^-1(m(x)) - x| over the given points."""
    if not m.has_inverse:
        raise MissingInverse(f"{m.name} has no inverse")
    points = as_points(points, m.domain_dim)
    back = m.inverse(m(points))
    return float(np.max(np.linalg.norm(back - points, axis=1)))


# -----------------------------------------------------------------------------
# JSON

def map_to_dict(m):
    if m.is_tabular:
        return {"kind": "tabular", "assignment": {str(k): v for k, v in m.assignment.items()}}
    d = {"kind": m.kind}
    if m.kind == 'composite':
        d["parts"] = [map_to_dict(p) for p in m.params['parts']]
    elif m.kind == 'rotation':
        d["matrix"] = m.params['matrix'].tolist()
    elif m.kind == 'affine':
        d["matrix"] = m.params['matrix'].tolist()
        d["shift"] = m.params['shift'].tolist()
    elif m.kind == 'reflection':
        d["center"] = m.params['center'].tolist()
        d["axes"] = list(m.params['axes'])
    elif m.kind == 'interval_swap':
        d.update(a=m.params['a'], b=m.params['b'], d=m.params['d'], domain=list(m.params['domain']))
    elif m.kind == 'parametric_net':
        d["layers"] = [{"weight": W.tolist(), "bias": b.tolist()} for W, b in m.params['layers']]
    if m.domain_radius is not None:
        d["radius"] = m.domain_radius
    return d


def map_from_dict(d, domain=None, codomain=None):
    """
    Builds a map from its JSON form. Finite maps need the spaces they act
    between; `codomain` defaults to `domain`.
    """
    d = dict(d)
    kind = d.pop("kind", None)
    radius = d.pop("radius", None)
    codomain = domain if codomain is None else codomain
    if kind == "tabular":
        assert domain is not None, "tabular maps need their domain space"
        m = tabular_map(domain, codomain, d["assignment"])
    elif kind == "transposition":
        assert domain is not None, "transpositions need their space"
        m = atom_transposition(domain, d["j"], d["k"])
    elif kind == "identity":
        m = identity(domain if domain is not None else int(d.get("dim", 1)))
    elif kind == "composite":
        m = compose(*[map_from_dict(p, domain, codomain) for p in d["parts"]])
    elif kind == "rotation":
        if "matrix" in d:
            m = rotation(matrix=d["matrix"])
        else:
            m = rotation(dim=int(d.get("dim", 2)), angles=d.get("angles", d.get("angle", 0.0)))
    elif kind == "affine":
        m = affine(d["matrix"], d.get("shift"))
    elif kind == "shift":
        m = shift(d["offset"])
    elif kind == "reflection":
        if "c" in d:
            m = reflection_interval(d["c"])
        else:
            m = reflection(d.get("center", [0.0]), d.get("axes"))
    elif kind == "interval_swap":
        m = interval_swap(d["a"], d["b"], d["d"], tuple(d.get("domain", (0.0, 1.0))))
    elif kind == "parametric_net":
        m = parametric_net([(layer["weight"], layer["bias"]) for layer in d["layers"]])
    else:
        raise ValueError(f"unknown map kind: {kind!r}")
    if radius is not None:
        m = truncate_ball(m, radius)
    return m
