"""
Numerical checks of the extended-loss perturbation bound

    L_ext(G . phi, phi^-1 . F) <= max(C, 1) L_ext(G, F) + 2 a_id E|phi(x) - x|

where C is the Lipschitz constant of phi^-1, and of its asymptotic form along
a sequence of pairs whose pure loss goes to zero.
"""

import math
from dataclasses import dataclass

import numpy as np

from .cycleloss import extended_loss, twist
from .errors import AmbientMismatch, MissingInverse, NotAutomorphism
from .maps import is_measure_preserving, shift
from .probspace import FiniteSpace, GridDensity, sample

SIGMA_MARGIN = 3.0 # statistical verdicts allow this many MC standard errors
ROUNDOFF = 1e-12
LIPSCHITZ_BLOCK = 1000
FINITE_PRESERVATION_TOL = 1e-9
GRID_PRESERVATION_TOL = 1e-2


@dataclass(frozen=True)
class LipschitzEstimate:
    value: float
    is_lower_bound: bool
    method: str # 'analytic' or 'sampled'

    def __float__(self):
        return self.value


def _norm(diff, norm):
    return np.abs(diff).sum(axis=1) if norm == 'L1' else np.sqrt((diff ** 2).sum(axis=1))


def _analytic_lipschitz(m, norm):
    if m.is_identity or m.kind in ('reflection', 'interval_swap', 'tabular'):
        return 1.0
    if m.kind == 'rotation':
        # induced L1 norm is the max column sum; rotations are L2 isometries
        return 1.0 if norm == 'L2' else float(np.linalg.norm(m.params['matrix'], 1))
    if m.kind == 'affine':
        return float(np.linalg.norm(m.params['matrix'], 1 if norm == 'L1' else 2))
    return None


def estimate_lipschitz(m, space=None, n_pairs=LIPSCHITZ_BLOCK, seed=0, norm='L2'):
    """
    Lipschitz constant of m: exact for isometric and affine kinds, otherwise the
    max ratio |m(u) - m(v)| / |u - v| over sampled pairs. Pairs come in nested
    blocks, so more pairs never lower the estimate.
    """
    if n_pairs < LIPSCHITZ_BLOCK:
        raise ValueError(f"n_pairs must be >= {LIPSCHITZ_BLOCK}, got {n_pairs}")
    analytic = _analytic_lipschitz(m, norm)
    if analytic is not None:
        return LipschitzEstimate(analytic, False, 'analytic')

    best = 0.0
    for k in range(math.ceil(n_pairs / LIPSCHITZ_BLOCK)):
        block_seed = int(np.random.SeedSequence([seed, k]).generate_state(1)[0])
        rng = np.random.default_rng(block_seed)
        if isinstance(space, GridDensity):
            u = sample(space, LIPSCHITZ_BLOCK, block_seed).points
        else:
            u = rng.standard_normal((LIPSCHITZ_BLOCK, m.domain_dim))
        # pairs at every scale from 1e-3 to 1
        scale = 10 ** rng.uniform(-3, 0, size=(LIPSCHITZ_BLOCK, 1))
        v = u + scale * rng.standard_normal(u.shape)
        take = min(LIPSCHITZ_BLOCK, n_pairs - k * LIPSCHITZ_BLOCK)
        u, v = u[:take], v[:take]
        dist = _norm(u - v, norm)
        keep = dist > 0
        ratios = _norm(m.evaluate_unchecked(u) - m.evaluate_unchecked(v), norm)[keep] / dist[keep]
        if len(ratios):
            best = max(best, float(ratios.max()))
    return LipschitzEstimate(best, True, 'sampled')


# -----------------------------------------------------------------------------
# single bound

@dataclass(frozen=True)
class BoundReport:
    lhs: float           # L_ext(G . phi, phi^-1 . F)
    base: float          # L_ext(G, F)
    lipschitz: float     # C for phi^-1
    displacement: float  # E|phi(x) - x|
    alpha_id: float
    mc_stderr: float
    is_lower_bound: bool = False
    map_name: str = ''
    seam: bool = False

    @property
    def rhs(self):
        return max(self.lipschitz, 1.0) * self.base + 2 * self.alpha_id * self.displacement

    @property
    def slack(self):
        return self.rhs - self.lhs

    @property
    def verdict(self):
        return self.slack >= -(SIGMA_MARGIN * self.mc_stderr + ROUNDOFF)

    def to_dict(self):
        return {'lhs': self.lhs, 'base': self.base, 'lipschitz': self.lipschitz,
                'displacement': self.displacement, 'alpha_id': self.alpha_id, 'rhs': self.rhs,
                'slack': self.slack, 'mc_stderr': self.mc_stderr, 'verdict': self.verdict,
                'is_lower_bound': self.is_lower_bound, 'map': self.map_name, 'seam': self.seam}


def _displacement(phi, X, config):
    """E|phi(x) - x| with its standard error, on the same x samples the loss uses."""
    if isinstance(X, FiniteSpace):
        moved = phi.table != np.arange(len(X))
        if config.embedding == 'onehot':
            per_atom = moved * (2.0 if config.norm == 'L1' else math.sqrt(2.0))
        else:
            per_atom = np.abs(phi.table - np.arange(len(X))).astype(np.float64)
        return float(X.masses @ per_atom), 0.0
    xs = sample(X, config.mc_samples, config.seed)
    d = _norm(phi(xs.points) - xs.points, config.norm)
    stderr = float(d.std(ddof=1) / math.sqrt(len(d))) if len(d) > 1 else 0.0
    return float(d.mean()), stderr


def _check_automorphism(phi, X, tol):
    if tol is None:
        tol = FINITE_PRESERVATION_TOL if isinstance(X, FiniteSpace) else GRID_PRESERVATION_TOL
    report = is_measure_preserving(phi, X, 'TV', tol)
    if not report.verdict:
        raise NotAutomorphism(f"{phi.name} is not measure-preserving: TV = {report.discrepancy:.3e} > {tol:.1e}")


def check_bound(G, F, phi, X, Y, config, preservation_tol=None, lipschitz_pairs=LIPSCHITZ_BLOCK):
    report, _ = _bound_and_base(G, F, phi, X, Y, config, preservation_tol, lipschitz_pairs)
    return report


def _bound_and_base(G, F, phi, X, Y, config, preservation_tol, lipschitz_pairs=LIPSCHITZ_BLOCK):
    if not phi.has_inverse:
        raise MissingInverse(f"{phi.name} has no inverse")
    if isinstance(X, GridDensity) and isinstance(Y, GridDensity) and X.dim != Y.dim:
        raise AmbientMismatch(f"X is {X.dim}-d and Y is {Y.dim}-d")
    _check_automorphism(phi, X, preservation_tol)

    base = extended_loss(G, F, X, Y, config)
    twisted = extended_loss(*twist(G, F, phi), X, Y, config)
    displacement, disp_stderr = _displacement(phi, X, config)
    C = estimate_lipschitz(phi.inverse, X, lipschitz_pairs, config.seed, config.norm)

    rhs_stderr = math.hypot(max(C.value, 1.0) * base.ext_stderr, 2 * config.alpha_id * disp_stderr)
    report = BoundReport(lhs=twisted.total_ext, base=base.total_ext, lipschitz=C.value,
                         displacement=displacement, alpha_id=config.alpha_id,
                         mc_stderr=math.hypot(twisted.ext_stderr, rhs_stderr),
                         is_lower_bound=C.is_lower_bound, map_name=phi.name,
                         seam=bool(phi.params.get('seam', False)))
    return report, base


# -----------------------------------------------------------------------------
# asymptotic bound

@dataclass
class AsymptoticReport:
    series: list        # BoundReport per index
    identity_terms: list # id_x + id_y of (G_i, F_i)
    pure_losses: list
    tail_window: int
    limsup_id: float
    limit_rhs: float
    verdict: bool

    def to_dict(self):
        return {'tail_window': self.tail_window, 'limsup_id': self.limsup_id,
                'limit_rhs': self.limit_rhs, 'verdict': self.verdict,
                'series': [r.to_dict() for r in self.series]}

    def rows(self):
        return [{'i': i + 1, 'base': r.base, 'lhs': r.lhs, 'rhs': r.rhs, 'slack': r.slack,
                 'stderr': r.mc_stderr, 'pure': pure, 'identity': ident}
                for i, (r, pure, ident) in enumerate(zip(self.series, self.pure_losses, self.identity_terms))]


def asymptotic_check(pair_sequence, phi, X, Y, config, tail_window=None, preservation_tol=None):
    """
    Tail lhs against max(C, 1) a_id limsup_id + 2 a_id E|phi(x) - x|, where the
    limsup is the max of the identity terms over the last tail_window pairs
    (default: the last quarter of the sequence, at least 3).
    """
    pair_sequence = list(pair_sequence)
    if tail_window is None:
        tail_window = max(3, len(pair_sequence) // 4)
    if not 3 <= tail_window <= len(pair_sequence):
        raise ValueError(f"need len(sequence) >= tail_window >= 3, got {len(pair_sequence)} and {tail_window}")

    series, identity_terms, pure_losses = [], [], []
    for G, F in pair_sequence:
        report, base = _bound_and_base(G, F, phi, X, Y, config, preservation_tol)
        series.append(report)
        identity_terms.append(base.id_x + base.id_y)
        pure_losses.append(base.total_pure)
    if any(b > a for a, b in zip(pure_losses, pure_losses[1:])):
        print(f"warning: pure loss is not decreasing along the sequence: {[f'{l:.4f}' for l in pure_losses]}")

    tail = series[-tail_window:]
    limsup_id = max(identity_terms[-tail_window:])
    last = series[-1]
    limit_rhs = (max(last.lipschitz, 1.0) * config.alpha_id * limsup_id
                 + 2 * config.alpha_id * last.displacement)
    margin = SIGMA_MARGIN * max(r.mc_stderr for r in tail) + ROUNDOFF
    verdict = max(r.lhs for r in tail) <= limit_rhs + margin
    return AsymptoticReport(series, identity_terms, pure_losses, tail_window, limsup_id, limit_rhs, verdict)


def affine_shift_sequence(length=40):
    """G_i(x) = x + 1/i, F_i(y) = y - 1/i for i = 1..length."""
    return [(shift(1.0 / i), shift(-1.0 / i)) for i in range(1, length + 1)]
