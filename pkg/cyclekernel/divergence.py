"""
f-divergences D_f(p || q) = sum q f(p / q), exactly on finite spaces and as a
Riemann sum on grids, plus the numerical push-forward check
D_f(phi_* p || q) == D_f(p || (phi^-1)_* q).
"""

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.special import xlogy

from .errors import GridMismatch, LabelMismatch, MissingInverse, UnknownDivergence
from .probspace import FiniteSpace, GridDensity

EPS = 1e-12 # q is clamped to this where q = 0 < p


@dataclass(frozen=True)
class DivergenceSpec:
    name: str
    generator: Callable
    clamp_p: bool = False # generator is singular at t = 0

    def __call__(self, t):
        return self.generator(t)


def _kl(t):
    return xlogy(t, t)

def _reverse_kl(t):
    return -np.log(t)

def _js(t):
    return 0.5 * (xlogy(t, t) - xlogy(1 + t, (1 + t) / 2))

def _tv(t):
    return 0.5 * np.abs(t - 1)

def _chi2(t):
    return (t - 1) ** 2


DIVERGENCES = {
    'KL': DivergenceSpec('KL', _kl),
    'reverseKL': DivergenceSpec('reverseKL', _reverse_kl, clamp_p=True),
    'JS': DivergenceSpec('JS', _js),
    'TV': DivergenceSpec('TV', _tv),
    'chi2': DivergenceSpec('chi2', _chi2),
}


def get_divergence(name):
    if isinstance(name, DivergenceSpec):
        return name
    try:
        return DIVERGENCES[name]
    except KeyError:
        raise UnknownDivergence(f"unknown divergence {name!r}; choose from {sorted(DIVERGENCES)}") from None


def _f_sum(spec, p, q, weight):
    """sum weight * q f(p/q) over cells where p or q is positive; flags q = 0 < p."""
    active = (p > 0) | (q > 0)
    p, q = p[active], q[active]
    violation = bool(np.any((q <= 0) & (p > 0)))
    q = np.where(q > 0, q, EPS)
    if spec.clamp_p:
        p = np.where(p > 0, p, EPS)
    return float(weight * np.sum(q * spec(p / q))), violation


def f_divergence_finite(spec, p, q, with_flag=False):
    spec = get_divergence(spec)
    if set(p.labels) != set(q.labels) or len(p) != len(q):
        raise LabelMismatch(f"label sets differ: {p.labels} vs {q.labels}")
    q_masses = np.array([q.mass(label) for label in p.labels])
    value, violation = _f_sum(spec, np.asarray(p.masses), q_masses, 1.0)
    return (value, violation) if with_flag else value


def f_divergence_grid(spec, p, q, with_flag=False):
    spec = get_divergence(spec)
    if not p.same_grid(q):
        raise GridMismatch(f"grids differ: {p.box} @ {p.resolution} vs {q.box} @ {q.resolution}")
    value, violation = _f_sum(spec, p.values.ravel(), q.values.ravel(), p.cell_volume)
    return (value, violation) if with_flag else value


def f_divergence_histogram(spec, masses, outside, q, with_flag=False):
    """
    D_f between a histogram of samples and a grid density q on the same grid.
    masses are per-cell sample fractions, outside the fraction that left q's
    box; it is scored as one more cell where q = 0.
    """
    spec = get_divergence(spec)
    masses = np.asarray(masses, dtype=np.float64)
    if masses.shape != tuple(q.resolution):
        raise GridMismatch(f"histogram of shape {masses.shape} on a grid of resolution {q.resolution}")
    p = np.append(masses.ravel(), outside)
    q_masses = np.append(q.values.ravel() * q.cell_volume, 0.0)
    value, violation = _f_sum(spec, p, q_masses, 1.0)
    return (value, violation) if with_flag else value


def divergence(spec, p, q, with_flag=False):
    if isinstance(p, FiniteSpace) and isinstance(q, FiniteSpace):
        return f_divergence_finite(spec, p, q, with_flag)
    if isinstance(p, GridDensity) and isinstance(q, GridDensity):
        return f_divergence_grid(spec, p, q, with_flag)
    raise TypeError(f"no divergence between {type(p).__name__} and {type(q).__name__}")


def gaussian_kl(mean_p, std_p, mean_q, std_q):
    """Closed-form KL between axis-aligned Gaussians."""
    mean_p, std_p, mean_q, std_q = (np.atleast_1d(np.asarray(a, dtype=np.float64))
                                    for a in (mean_p, std_p, mean_q, std_q))
    terms = np.log(std_q / std_p) + (std_p ** 2 + (mean_p - mean_q) ** 2) / (2 * std_q ** 2) - 0.5
    return float(terms.sum())


# -----------------------------------------------------------------------------
# push-forward property

@dataclass(frozen=True)
class PushforwardReport:
    spec: str
    map_name: str
    lhs: float
    rhs: float
    gap: float
    tolerance: float
    verdict: bool
    support_violation: bool
    seam: bool # map is only piecewise smooth; the seams have measure zero

    def to_dict(self):
        return {"spec": self.spec, "map": self.map_name, "lhs": self.lhs, "rhs": self.rhs,
                "gap": self.gap, "tolerance": self.tolerance, "verdict": self.verdict,
                "support_violation": self.support_violation, "seam": self.seam}


def check_pushforward_property(spec, p, q, phi, tol=1e-2):
    from .maps import pushforward

    spec = get_divergence(spec)
    if not phi.has_inverse:
        raise MissingInverse(f"push-forward check needs the inverse of {phi.name}")
    pushed_p = pushforward(phi, p, target_box=q.box, resolution=q.resolution)
    pulled_q = pushforward(phi.inverse, q, target_box=p.box, resolution=p.resolution)
    lhs, lhs_flag = f_divergence_grid(spec, pushed_p, q, with_flag=True)
    rhs, rhs_flag = f_divergence_grid(spec, p, pulled_q, with_flag=True)
    gap = abs(lhs - rhs)
    if not math.isfinite(gap):
        gap = math.inf
    return PushforwardReport(spec=spec.name, map_name=phi.name, lhs=lhs, rhs=rhs, gap=gap,
                             tolerance=tol, verdict=gap <= tol,
                             support_violation=lhs_flag or rhs_flag,
                             seam=bool(phi.params.get('seam', False)))
