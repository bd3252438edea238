"""
The pure CycleGAN loss

    L(G, F) = D_f(G_* mu || nu) + D_f(F_* nu || mu) + a_cyc (E|F(G(x)) - x| + E|G(F(y)) - y|)

and the extended loss, which adds a_id (E|G(x) - x| + E|F(y) - y|).

Finite spaces are evaluated exactly. On grids the divergence terms use the
change-of-variables push-forward when both maps are invertible, and otherwise
histograms of mapped samples at several resolutions. Expectations on grids are
Monte Carlo means with their standard errors.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from .divergence import divergence, f_divergence_histogram, get_divergence
from .errors import AmbientMismatch, DimensionMismatch, MissingInverse
from .maps import compose, pushforward, regrid
from .probspace import FiniteSpace, GridDensity, SampleSet, histogram_masses, sample

NORMS = ('L1', 'L2')
EMBEDDINGS = ('onehot', 'index')


@dataclass
class LossConfig:
    alpha_cyc: float = 10.0
    alpha_id: float = 0.0
    divergence: str = 'KL'
    norm: str = 'L1'
    mc_samples: int = 100_000
    seed: int = 0
    embedding: str = 'onehot' # how finite labels sit in R^n for the norm terms
    histogram_resolutions: tuple = (32, 64, 128)

    def __post_init__(self):
        if not self.alpha_cyc > 0:
            raise ValueError(f"alpha_cyc must be > 0, got {self.alpha_cyc}")
        if not self.alpha_id >= 0:
            raise ValueError(f"alpha_id must be >= 0, got {self.alpha_id}")
        if self.mc_samples < 1:
            raise ValueError(f"mc_samples must be >= 1, got {self.mc_samples}")
        if self.norm not in NORMS:
            raise ValueError(f"norm must be one of {NORMS}, got {self.norm!r}")
        if self.embedding not in EMBEDDINGS:
            raise ValueError(f"embedding must be one of {EMBEDDINGS}, got {self.embedding!r}")
        if not self.histogram_resolutions:
            raise ValueError("at least one histogram resolution is needed")
        self.histogram_resolutions = tuple(int(r) for r in self.histogram_resolutions)
        get_divergence(self.divergence)

    @property
    def spec(self):
        return get_divergence(self.divergence)


@dataclass
class LossReport:
    div_xy: float
    div_yx: float
    cyc_x: float
    cyc_y: float
    id_x: float
    id_y: float
    alpha_cyc: float
    alpha_id: float
    divergence: str = 'KL'
    norm: str = 'L1'
    mc_stderr: dict = field(default_factory=dict) # per expectation term
    divergence_path: str = 'grid'
    support_violation: bool = False
    histogram: dict = None # {term: {resolution: value}} on the histogram path

    @property
    def total_pure(self):
        return self.div_xy + self.div_yx + self.alpha_cyc * (self.cyc_x + self.cyc_y)

    @property
    def total_ext(self):
        return self.total_pure + self.alpha_id * (self.id_x + self.id_y)

    @property
    def pure_stderr(self):
        s = self.mc_stderr
        return self.alpha_cyc * math.hypot(s.get('cyc_x', 0.0), s.get('cyc_y', 0.0))

    @property
    def ext_stderr(self):
        s = self.mc_stderr
        return math.hypot(self.pure_stderr, self.alpha_id * math.hypot(s.get('id_x', 0.0), s.get('id_y', 0.0)))

    def terms(self):
        return {'div_xy': self.div_xy, 'div_yx': self.div_yx, 'cyc_x': self.cyc_x, 'cyc_y': self.cyc_y,
                'id_x': self.id_x, 'id_y': self.id_y,
                'total_pure': self.total_pure, 'total_ext': self.total_ext}

    def to_dict(self):
        d = self.terms()
        d.update(alpha_cyc=self.alpha_cyc, alpha_id=self.alpha_id, divergence=self.divergence,
                 norm=self.norm, mc_stderr=dict(self.mc_stderr), divergence_path=self.divergence_path,
                 support_violation=self.support_violation)
        if self.histogram is not None:
            d['histogram'] = {term: {str(r): v for r, v in values.items()}
                              for term, values in self.histogram.items()}
        return d

    def to_row(self):
        """Flat dict for CSV tables."""
        row = self.terms()
        row.update({f"stderr_{k}": v for k, v in self.mc_stderr.items()})
        row.update(divergence=self.divergence, path=self.divergence_path,
                   support_violation=self.support_violation)
        return row


# -----------------------------------------------------------------------------
# expectation terms

def _distance(diff, norm):
    if norm == 'L1':
        return np.abs(diff).sum(axis=1)
    return np.sqrt((diff ** 2).sum(axis=1))


def _mean_and_stderr(values):
    n = len(values)
    stderr = float(values.std(ddof=1) / math.sqrt(n)) if n > 1 else 0.0
    return float(values.mean()), stderr


def _draw(space, n, seed):
    return space if isinstance(space, SampleSet) else sample(space, n, seed)


def _atom_distances(image_idx, image_labels, source_labels, norm, embedding):
    """Per-atom distance between the image of atom i and atom i under the declared embedding."""
    if embedding == 'onehot':
        mismatch = np.array([image_labels[j] != source_labels[i] for i, j in enumerate(image_idx)])
        return mismatch * (2.0 if norm == 'L1' else math.sqrt(2.0))
    return np.abs(np.asarray(image_idx) - np.arange(len(image_idx))).astype(np.float64)


def _check_finite_map(m, domain, codomain, role):
    if not m.is_tabular:
        raise DimensionMismatch(f"{role} must be a tabular map between finite spaces")
    if m.domain.labels != domain.labels or m.codomain.labels != codomain.labels:
        raise DimensionMismatch(f"{role} maps {m.domain.labels} -> {m.codomain.labels}, "
                                f"expected {domain.labels} -> {codomain.labels}")


def _check_continuous_map(m, domain_dim, codomain_dim, role):
    if m.domain_dim != domain_dim or m.codomain_dim != codomain_dim:
        raise DimensionMismatch(f"{role} maps R^{m.domain_dim} -> R^{m.codomain_dim}, "
                                f"expected R^{domain_dim} -> R^{codomain_dim}")


def _finite_cycle(G, F, X, Y, norm, embedding):
    _check_finite_map(G, X, Y, 'G')
    _check_finite_map(F, Y, X, 'F')
    round_x = F.table[G.table]
    round_y = G.table[F.table]
    cyc_x = X.masses @ _atom_distances(round_x, X.labels, X.labels, norm, embedding)
    cyc_y = Y.masses @ _atom_distances(round_y, Y.labels, Y.labels, norm, embedding)
    return float(cyc_x), float(cyc_y)


def _finite_identity(G, F, X, Y, norm, embedding):
    if embedding == 'index' and X.labels != Y.labels:
        raise AmbientMismatch("index embedding needs X and Y to share their labels")
    id_x = X.masses @ _atom_distances(G.table, Y.labels, X.labels, norm, embedding)
    id_y = Y.masses @ _atom_distances(F.table, X.labels, Y.labels, norm, embedding)
    return float(id_x), float(id_y)


def _samples(X, Y, mc_samples, seed):
    return _draw(X, mc_samples, seed), _draw(Y, mc_samples, seed + 1)


def _continuous_cycle(G, F, xs, ys, norm):
    _check_continuous_map(G, xs.dim, ys.dim, 'G')
    _check_continuous_map(F, ys.dim, xs.dim, 'F')
    cyc_x = _mean_and_stderr(_distance(F(G(xs.points)) - xs.points, norm))
    cyc_y = _mean_and_stderr(_distance(G(F(ys.points)) - ys.points, norm))
    return cyc_x, cyc_y


def _continuous_identity(G, F, xs, ys, norm):
    if xs.dim != ys.dim:
        raise AmbientMismatch(f"X is {xs.dim}-d and Y is {ys.dim}-d; identity terms need a shared ambient space")
    id_x = _mean_and_stderr(_distance(G(xs.points) - xs.points, norm))
    id_y = _mean_and_stderr(_distance(F(ys.points) - ys.points, norm))
    return id_x, id_y


def cycle_term(G, F, X, Y, norm='L1', mc_samples=100_000, seed=0, embedding='onehot'):
    """(E|F(G(x)) - x|, E|G(F(y)) - y|); exact on finite spaces."""
    if isinstance(X, FiniteSpace):
        return _finite_cycle(G, F, X, Y, norm, embedding)
    xs, ys = _samples(X, Y, mc_samples, seed)
    (cyc_x, _), (cyc_y, _) = _continuous_cycle(G, F, xs, ys, norm)
    return cyc_x, cyc_y


# -----------------------------------------------------------------------------
# divergence terms

def _grid_divergences(G, F, X, Y, spec):
    pushed_x = pushforward(G, X, target_box=Y.box, resolution=Y.resolution)
    pushed_y = pushforward(F, Y, target_box=X.box, resolution=X.resolution)
    div_xy, flag_xy = divergence(spec, pushed_x, Y, with_flag=True)
    div_yx, flag_yx = divergence(spec, pushed_y, X, with_flag=True)
    return div_xy, div_yx, flag_xy or flag_yx


def _histogram_divergence(mapped, target, spec, resolutions):
    """Mapped samples that leave the target box stay in the histogram as mass where the target has none."""
    values, violation = {}, False
    for r in resolutions:
        masses, outside = histogram_masses(mapped, target.box, r)
        reference = regrid(target, target.box, r)
        values[r], flag = f_divergence_histogram(spec, masses, outside, reference, with_flag=True)
        violation = violation or flag
    return values, violation


def _histogram_divergences(G, F, X, Y, xs, ys, spec, resolutions):
    mapped_x = SampleSet(dim=G.codomain_dim, points=G(xs.points), seed=xs.seed)
    mapped_y = SampleSet(dim=F.codomain_dim, points=F(ys.points), seed=ys.seed)
    values_xy, flag_xy = _histogram_divergence(mapped_x, Y, spec, resolutions)
    values_yx, flag_yx = _histogram_divergence(mapped_y, X, spec, resolutions)
    headline = resolutions[len(resolutions) // 2]
    return (values_xy[headline], values_yx[headline], flag_xy or flag_yx,
            {'div_xy': values_xy, 'div_yx': values_yx})


def _invertible(m):
    return m.has_inverse and m.jacobian_logdet is not None


# -----------------------------------------------------------------------------
# losses

def _evaluate(G, F, X, Y, config, require_identity):
    spec = config.spec
    nan = float('nan')
    if isinstance(X, FiniteSpace) or isinstance(Y, FiniteSpace):
        if not (isinstance(X, FiniteSpace) and isinstance(Y, FiniteSpace)):
            raise AmbientMismatch("X and Y must both be finite or both be continuous")
        cyc_x, cyc_y = _finite_cycle(G, F, X, Y, config.norm, config.embedding)
        div_xy, flag_xy = divergence(spec, pushforward(G, X), Y, with_flag=True)
        div_yx, flag_yx = divergence(spec, pushforward(F, Y), X, with_flag=True)
        try:
            id_x, id_y = _finite_identity(G, F, X, Y, config.norm, config.embedding)
        except AmbientMismatch:
            if require_identity:
                raise
            id_x = id_y = nan
        stderr = {'cyc_x': 0.0, 'cyc_y': 0.0, 'id_x': 0.0, 'id_y': 0.0}
        return LossReport(div_xy, div_yx, cyc_x, cyc_y, id_x, id_y, config.alpha_cyc, config.alpha_id,
                          spec.name, config.norm, stderr, 'finite', flag_xy or flag_yx)

    xs, ys = _samples(X, Y, config.mc_samples, config.seed)
    (cyc_x, s_cx), (cyc_y, s_cy) = _continuous_cycle(G, F, xs, ys, config.norm)
    stderr = {'cyc_x': s_cx, 'cyc_y': s_cy}
    if xs.dim == ys.dim:
        (id_x, s_ix), (id_y, s_iy) = _continuous_identity(G, F, xs, ys, config.norm)
        stderr.update(id_x=s_ix, id_y=s_iy)
    elif require_identity:
        raise AmbientMismatch(f"X is {xs.dim}-d and Y is {ys.dim}-d; identity terms need a shared ambient space")
    else:
        id_x = id_y = nan

    histogram = None
    if not (isinstance(X, GridDensity) and isinstance(Y, GridDensity)):
        raise TypeError("divergence terms need X and Y as grid densities")
    if _invertible(G) and _invertible(F):
        div_xy, div_yx, violation = _grid_divergences(G, F, X, Y, spec)
        path = 'grid'
    else:
        div_xy, div_yx, violation, histogram = _histogram_divergences(
            G, F, X, Y, xs, ys, spec, config.histogram_resolutions)
        path = 'histogram'
    return LossReport(div_xy, div_yx, cyc_x, cyc_y, id_x, id_y, config.alpha_cyc, config.alpha_id,
                      spec.name, config.norm, stderr, path, violation, histogram)


def pure_loss(G, F, X, Y, config):
    """Itemized pure loss; identity terms are filled in too when X and Y share an ambient space."""
    return _evaluate(G, F, X, Y, config, require_identity=False)


def extended_loss(G, F, X, Y, config):
    return _evaluate(G, F, X, Y, config, require_identity=True)


def twist(G, F, phi):
    """(G . phi, phi^-1 . F) for an automorphism phi of X."""
    if not phi.has_inverse:
        raise MissingInverse(f"twisting by {phi.name} needs its inverse")
    return compose(phi, G), compose(F, phi.inverse)


@dataclass
class SymmetryProbe:
    report_base: LossReport
    report_twisted: LossReport
    deltas: dict

    def to_dict(self):
        return {'base': self.report_base.to_dict(), 'twisted': self.report_twisted.to_dict(),
                'deltas': dict(self.deltas)}


def symmetry_probe(G, F, X, Y, phi, config):
    """Evaluates the loss at (G, F) and at (G . phi, phi^-1 . F) on the same samples."""
    evaluate = extended_loss if _shares_ambient(X, Y, config) else pure_loss
    base = evaluate(G, F, X, Y, config)
    twisted = evaluate(*twist(G, F, phi), X, Y, config)
    base_terms, twisted_terms = base.terms(), twisted.terms()
    deltas = {k: twisted_terms[k] - base_terms[k] for k in base_terms}
    return SymmetryProbe(base, twisted, deltas)


def _shares_ambient(X, Y, config):
    if isinstance(X, FiniteSpace):
        return config.embedding == 'onehot' or X.labels == Y.labels
    return X.dim == Y.dim
