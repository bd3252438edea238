import math

import numpy as np
import pytest

from cyclekernel.cycleloss import LossConfig, cycle_term, extended_loss, pure_loss, symmetry_probe, twist
from cyclekernel.errors import AmbientMismatch, DimensionMismatch, UnknownDivergence
from cyclekernel.maps import atom_transposition, identity, parametric_net, reflection, shift, tabular_map
from cyclekernel.probspace import gaussian_density, gaussian_standard, make_finite


def exact_solution(X, Y):
    G = tabular_map(X, Y, {'a': 'u', 'b': 'v', 'c': 'w'})
    return G, G.inverse


def constant_net(value):
    return parametric_net([(np.zeros((2, 1)), np.zeros(2)), (np.zeros((2, 2)), np.zeros(2)),
                           (np.zeros((1, 2)), np.array([value]))])


def tiny_net(seed):
    rng = np.random.default_rng(seed)
    return parametric_net([(0.5 * rng.normal(size=(4, 1)), 0.1 * rng.normal(size=4)),
                           (0.5 * rng.normal(size=(4, 4)), 0.1 * rng.normal(size=4)),
                           (rng.normal(size=(1, 4)), 0.1 * rng.normal(size=1))])


def test_config_validation():
    with pytest.raises(ValueError):
        LossConfig(alpha_cyc=0.0)
    with pytest.raises(ValueError):
        LossConfig(alpha_id=-1.0)
    with pytest.raises(ValueError):
        LossConfig(norm='Linf')
    with pytest.raises(UnknownDivergence):
        LossConfig(divergence='Hellinger')


# -----------------------------------------------------------------------------
# finite spaces

def test_exact_solution_has_zero_pure_loss(uniform3, uniform3_y):
    G, F = exact_solution(uniform3, uniform3_y)
    report = pure_loss(G, F, uniform3, uniform3_y, LossConfig())
    assert report.total_pure == 0.0
    assert report.divergence_path == 'finite'
    assert not report.support_violation


def test_finite_cycle_terms_count_mismatched_atoms(uniform3, uniform3_y):
    G, _ = exact_solution(uniform3, uniform3_y)
    F = tabular_map(uniform3_y, uniform3, {'u': 'a', 'v': 'a', 'w': 'a'})
    # b and c (resp. v and w) fail to come back; one-hot L1 distance 2 each
    cyc_x, cyc_y = cycle_term(G, F, uniform3, uniform3_y)
    assert cyc_x == pytest.approx(4 / 3)
    assert cyc_y == pytest.approx(4 / 3)
    cyc_x, _ = cycle_term(G, F, uniform3, uniform3_y, norm='L2')
    assert cyc_x == pytest.approx(2 / 3 * math.sqrt(2))


def test_mass_on_a_null_atom_flags_support_violation(uniform3):
    Y = make_finite(['u', 'v', 'w'], [0.5, 0.5, 0.0])
    G = tabular_map(uniform3, Y, {'a': 'u', 'b': 'v', 'c': 'w'})
    report = pure_loss(G, G.inverse, uniform3, Y, LossConfig(divergence='KL'))
    assert report.support_violation
    assert report.div_xy > 1.0
    assert report.cyc_x == 0.0


def test_index_embedding_identity_terms(uniform3):
    swap = atom_transposition(uniform3, 'a', 'b')
    config = LossConfig(alpha_id=1.0, embedding='index')
    report = extended_loss(swap, swap, uniform3, uniform3, config)
    assert report.total_pure == 0.0
    assert report.id_x == pytest.approx(2 / 3)
    assert report.total_ext == pytest.approx(4 / 3)


def test_index_embedding_needs_shared_labels(uniform3, uniform3_y):
    G, F = exact_solution(uniform3, uniform3_y)
    config = LossConfig(embedding='index')
    with pytest.raises(AmbientMismatch):
        extended_loss(G, F, uniform3, uniform3_y, config)
    assert math.isnan(pure_loss(G, F, uniform3, uniform3_y, config).id_x)


def test_wrong_map_direction(uniform3, uniform3_y):
    G, F = exact_solution(uniform3, uniform3_y)
    with pytest.raises(DimensionMismatch):
        pure_loss(F, G, uniform3, uniform3_y, LossConfig())


# -----------------------------------------------------------------------------
# grids

def test_identity_pair_on_grid(std_normal):
    report = extended_loss(identity(1), identity(1), std_normal, std_normal, LossConfig(alpha_id=1.0))
    assert report.total_ext == 0.0
    assert report.divergence_path == 'grid'


def test_shift_pair_terms(std_normal):
    config = LossConfig(alpha_cyc=1.0, alpha_id=1.0, divergence='KL', mc_samples=10_000)
    report = extended_loss(shift(0.5), shift(-0.5), std_normal, std_normal, config)
    assert report.div_xy == pytest.approx(0.125, abs=2e-3)
    assert report.div_yx == pytest.approx(0.125, abs=2e-3)
    assert report.cyc_x == pytest.approx(0.0, abs=1e-14)
    assert report.id_x == pytest.approx(0.5, abs=1e-12)
    assert report.mc_stderr['id_x'] == pytest.approx(0.0, abs=1e-12)


def test_identity_maps_between_shifted_gaussians():
    X = gaussian_density([0.0], [1.0], [(-8.0, 8.0)], 1024)
    Y = gaussian_density([1.0], [1.0], [(-8.0, 8.0)], 1024)
    report = pure_loss(identity(1), identity(1), X, Y, LossConfig())
    # KL(N(0, 1) || N(1, 1)) = KL(N(1, 1) || N(0, 1)) = 1/2, no cycle cost
    assert report.total_pure == pytest.approx(1.0, abs=5e-3)
    assert report.cyc_x == report.cyc_y == 0.0


def test_cycle_term_of_a_one_way_shift(std_normal):
    cyc_x, cyc_y = cycle_term(shift(1.0), identity(1), std_normal, std_normal, mc_samples=1000)
    assert cyc_x == pytest.approx(1.0, abs=1e-12)
    assert cyc_y == pytest.approx(1.0, abs=1e-12)


def test_totals_grow_with_their_weights(std_normal):
    weights = (0.0, 0.5, 1.0, 10.0)
    G, F = shift(0.4), shift(-0.1)
    ext = [extended_loss(G, F, std_normal, std_normal, LossConfig(alpha_id=a, mc_samples=5000)).total_ext
           for a in weights]
    pure = [pure_loss(G, F, std_normal, std_normal, LossConfig(alpha_cyc=a, mc_samples=5000)).total_pure
            for a in weights[1:]]
    assert ext == sorted(ext)
    assert pure == sorted(pure)
    assert ext[-1] > ext[0]
    assert pure[-1] > pure[0]


def test_mc_estimates_are_seeded(std_normal):
    G, F = shift(0.3), shift(-0.2)
    config = LossConfig(alpha_id=1.0, mc_samples=5000, seed=11)
    a = extended_loss(G, F, std_normal, std_normal, config)
    b = extended_loss(G, F, std_normal, std_normal, config)
    assert a.terms() == b.terms()


def test_histogram_path_for_nets(std_normal):
    config = LossConfig(divergence='JS', mc_samples=20_000)
    report = pure_loss(tiny_net(0), tiny_net(1), std_normal, std_normal, config)
    assert report.divergence_path == 'histogram'
    assert set(report.histogram['div_xy']) == {32, 64, 128}
    assert report.div_xy == report.histogram['div_xy'][64]
    assert 0 <= report.div_xy <= math.log(2) + 1e-9


def test_mass_leaving_the_box_is_charged(std_normal):
    config = LossConfig(divergence='JS', mc_samples=5000)
    report = pure_loss(constant_net(20.0), identity(1), std_normal, std_normal, config)
    assert report.divergence_path == 'histogram'
    assert report.support_violation
    # G_* mu sits entirely outside the box of Y: JS is at its maximum
    assert report.div_xy == pytest.approx(math.log(2), abs=1e-6)
    assert report.cyc_x > 10.0


def test_half_the_mass_leaving_the_box(std_normal):
    # Y is N(8, 1) cut to [0, 8], G shifts N(0, 1) onto N(8, 1): inside the box
    # G_* mu is exactly Y / 2, the other half is outside
    Y = gaussian_density([8.0], [1.0], [(0.0, 8.0)], 512)
    config = LossConfig(divergence='JS', mc_samples=100_000)
    report = pure_loss(shift(8.0), constant_net(0.0), std_normal, Y, config)
    assert report.divergence_path == 'histogram'
    assert report.support_violation
    # q f(1/2) over the box plus (1/2) log(2) / 2 for the outside half
    expected = 0.5 * (0.5 * math.log(0.5) - 1.5 * math.log(0.75)) + 0.25 * math.log(2)
    assert report.div_xy == pytest.approx(expected, abs=0.01)


def test_dimension_change_leaves_identity_terms_undefined():
    X = gaussian_standard(2, 6.0, 64)
    Y = gaussian_standard(1, 6.0, 256)
    rng = np.random.default_rng(0)
    G = parametric_net([(rng.normal(size=(4, 2)), np.zeros(4)), (np.eye(4), np.zeros(4)),
                        (rng.normal(size=(1, 4)), np.zeros(1))])
    F = parametric_net([(rng.normal(size=(4, 1)), np.zeros(4)), (np.eye(4), np.zeros(4)),
                        (rng.normal(size=(2, 4)), np.zeros(2))])
    config = LossConfig(divergence='JS', mc_samples=5000)
    report = pure_loss(G, F, X, Y, config)
    assert math.isnan(report.id_x)
    assert math.isfinite(report.total_pure)
    with pytest.raises(AmbientMismatch):
        extended_loss(G, F, X, Y, config)


# -----------------------------------------------------------------------------
# symmetry

def test_twist_by_reflection_keeps_pure_loss(std_normal):
    config = LossConfig(alpha_cyc=1.0, alpha_id=1.0, divergence='JS', mc_samples=100_000)
    report = symmetry_probe(identity(1), identity(1), std_normal, std_normal, reflection([0.0]), config)
    assert report.deltas['total_pure'] == pytest.approx(0.0, abs=1e-9)
    # E|2x| + E|2y| for x, y ~ N(0, 1)
    assert report.deltas['total_ext'] == pytest.approx(4 * math.sqrt(2 / math.pi), abs=0.03)


def test_twist_on_finite_space(uniform3, uniform3_y):
    G, F = exact_solution(uniform3, uniform3_y)
    phi = atom_transposition(uniform3, 'a', 'b')
    G2, F2 = twist(G, F, phi)
    assert G2.assignment == {'a': 'v', 'b': 'u', 'c': 'w'}
    assert pure_loss(G2, F2, uniform3, uniform3_y, LossConfig()).total_pure == 0.0
