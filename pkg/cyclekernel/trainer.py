"""
Fit parametric map pairs (G, F) on toy distributions by SGD on the surrogate

    MMD(G_* X, Y) + MMD(F_* Y, X) + a_cyc (cycle terms) + a_id (identity terms)

and classify which automorphism of the source a converged G realizes.

A task whose source is symmetric (a bimodal mixture mapped to itself) has
several exact solutions, one per automorphism, all with the same loss. Which
one a run lands on depends on the seed; seed_sweep collects the histogram.
"""

import dataclasses
import math
import time
from collections import Counter
from dataclasses import dataclass, field

import numpy as np
import torch
from tqdm import tqdm

from .cycleloss import LossConfig, extended_loss
from .errors import DivergedLoss, MinSeeds
from .maps import compose, identity, interval_swap, is_measure_preserving, reflection
from .model import MAX_WIDTH, CycleMaps
from .probspace import GridDensity, bimodal_density, gaussian_density, sample

CLASS_THRESHOLD = 0.1 # class_distance above this is 'unclassified'
REFERENCE_TOL = 1e-2


@dataclass
class ToyTask:
    name: str
    source: GridDensity
    target: GridDensity
    references: dict # name -> MeasurableMap, in tie-breaking order

    def __post_init__(self):
        if not isinstance(self.source, GridDensity) or not isinstance(self.target, GridDensity):
            raise TypeError("toy tasks train on grid densities")
        for name, rho in self.references.items():
            report = is_measure_preserving(rho, self.source, 'TV', REFERENCE_TOL)
            if not report.verdict:
                raise ValueError(f"reference {name} is not an automorphism of the source: TV = {report.discrepancy:.3e}")

    @property
    def dim(self):
        return self.source.dim


def gaussian_task(resolution=512):
    """N(0, 1) -> N(0, 1)."""
    box = ((-6.0, 6.0),)
    g = gaussian_density([0.0], [1.0], box, resolution)
    return ToyTask('gaussian', g, g, {'identity': identity(1), 'reflection': reflection([0.0])})


def bimodal_task(resolution=1000):
    """
    1/2 N(-2, 0.3^2) + 1/2 N(2, 0.3^2) -> itself. The references are the four
    maps that keep or swap the modes and keep or flip each mode.
    """
    g = bimodal_density(centers=(-2.0, 2.0), std=0.3, box=((-5.0, 5.0),), resolution=resolution)
    mode_swap = interval_swap(-4.0, 0.0, 4.0, domain=(-4.0, 4.0))
    mode_flip = compose(mode_swap, reflection([0.0]))
    return ToyTask('bimodal', g, g, {'identity': identity(1), 'reflection': reflection([0.0]),
                                      'mode_swap': mode_swap, 'mode_flip': mode_flip})


@dataclass
class TrainConfig:
    widths: tuple = (16, 16)
    steps: int = 3000
    learning_rate: float = 0.02
    momentum: float = 0.9 # 0 gives plain SGD
    grad_clip: float = 1.0 # clip gradients at this norm, or disable if == 0.0
    decay_lr: bool = True # linear warmup, then cosine decay to learning_rate / 10
    warmup_steps: int = 100
    batch_size: int = 256
    seed: int = 0
    alpha_cyc: float = 1.0
    alpha_id: float = 0.0
    norm: str = 'L1'
    bandwidths: tuple = (0.25, 0.5, 1.0, 2.0) # MMD surrogate, used for training
    histogram_resolution: int = 64 # histogram-JS, evaluation only
    pool_size: int = 10_000
    eval_samples: int = 20_000
    max_loss: float = 1e4
    checkpoint_interval: int = 100
    log_interval: int = 500
    wandb_log: bool = False
    wandb_project: str = 'cyclekernel'

    def __post_init__(self):
        self.widths = tuple(int(w) for w in self.widths)
        self.bandwidths = tuple(float(s) for s in self.bandwidths)
        if self.steps < 1:
            raise ValueError(f"steps must be >= 1, got {self.steps}")
        if len(self.widths) != 2 or not all(1 <= w <= MAX_WIDTH for w in self.widths):
            raise ValueError(f"widths must be two hidden sizes in [1, {MAX_WIDTH}], got {self.widths}")
        if not self.bandwidths or min(self.bandwidths) <= 0:
            raise ValueError(f"at least one positive MMD bandwidth is needed, got {self.bandwidths}")
        if self.histogram_resolution < 2:
            raise ValueError(f"histogram_resolution must be >= 2, got {self.histogram_resolution}")
        if not self.learning_rate > 0:
            raise ValueError(f"learning_rate must be > 0, got {self.learning_rate}")
        if not 0 <= self.momentum < 1:
            raise ValueError(f"momentum must be in [0, 1), got {self.momentum}")
        if self.grad_clip < 0 or self.warmup_steps < 0:
            raise ValueError(f"need grad_clip >= 0 and warmup_steps >= 0, got {self.grad_clip} and {self.warmup_steps}")
        if self.batch_size < 2 or self.pool_size < self.batch_size:
            raise ValueError(f"need 2 <= batch_size <= pool_size, got {self.batch_size} and {self.pool_size}")
        if not self.alpha_cyc > 0 or not self.alpha_id >= 0:
            raise ValueError(f"need alpha_cyc > 0 and alpha_id >= 0, got {self.alpha_cyc} and {self.alpha_id}")
        if self.checkpoint_interval < 1:
            raise ValueError(f"checkpoint_interval must be >= 1, got {self.checkpoint_interval}")

    def lr_at(self, step):
        if not self.decay_lr:
            return self.learning_rate
        min_lr = self.learning_rate / 10
        if step < self.warmup_steps:
            return self.learning_rate * (step + 1) / self.warmup_steps
        decay_ratio = min((step - self.warmup_steps) / max(self.steps - self.warmup_steps, 1), 1.0)
        coeff = 0.5 * (1.0 + math.cos(math.pi * decay_ratio)) # coeff ranges 0..1
        return min_lr + coeff * (self.learning_rate - min_lr)

    def loss_config(self):
        """Evaluation of the final maps: histogram JS at resolution r/2, r, 2r."""
        r = self.histogram_resolution
        return LossConfig(alpha_cyc=self.alpha_cyc, alpha_id=self.alpha_id, divergence='JS', norm=self.norm,
                          mc_samples=self.eval_samples, seed=self.seed,
                          histogram_resolutions=(max(r // 2, 2), r, 2 * r))


@dataclass
class RunRecord:
    task: str
    config: TrainConfig
    history: list # per step: loss, mmd_xy, mmd_yx, cyc_x, cyc_y, id_x, id_y
    checkpoints: list # {'step', 'G', 'F'} with layers as nested lists
    G_layers: list
    F_layers: list
    G: object = field(repr=False, default=None) # MeasurableMap views of the final nets
    F: object = field(repr=False, default=None)
    nearest_reference: str = ''
    class_distance: float = float('nan')
    final_loss: object = None # LossReport on the histogram path
    diverged_step: int = None

    @classmethod
    def diverged(cls, task, config, error):
        return cls(task, config, [], [], [], [], diverged_step=error.step)

    @property
    def solution_class(self):
        if self.diverged_step is not None:
            return 'diverged'
        return self.nearest_reference if self.class_distance <= CLASS_THRESHOLD else 'unclassified'

    def history_arrays(self):
        return {k: [row[k] for row in self.history] for k in self.history[0]} if self.history else {}

    def to_dict(self):
        return {
            'task': self.task,
            'config': dataclasses.asdict(self.config),
            'architecture': {'hidden': list(self.config.widths), 'activation': 'tanh'},
            'history': self.history_arrays(),
            'final': {'G': _layers_to_lists(self.G_layers), 'F': _layers_to_lists(self.F_layers)},
            'solution_class': self.solution_class,
            'nearest_reference': self.nearest_reference,
            'class_distance': self.class_distance,
            'final_loss': self.final_loss.to_dict() if self.final_loss is not None else None,
            'diverged_step': self.diverged_step,
        }

    def to_row(self):
        row = {'seed': self.config.seed, 'class': self.solution_class, 'distance': self.class_distance,
               'surrogate': self.history[-1]['loss'] if self.history else float('nan')}
        if self.final_loss is not None:
            row.update(total_pure=self.final_loss.total_pure, total_ext=self.final_loss.total_ext,
                       js_xy=self.final_loss.div_xy, js_yx=self.final_loss.div_yx)
        return row


def _layers_to_lists(layers):
    return [{'weight': W.tolist(), 'bias': b.tolist()} for W, b in layers]


# -----------------------------------------------------------------------------
# training

def _pools(task, config):
    x = sample(task.source, config.pool_size, config.seed).points
    y = sample(task.target, config.pool_size, config.seed + 1).points
    return torch.from_numpy(x), torch.from_numpy(y)


def _build_model(task, config):
    torch.manual_seed(config.seed)
    model = CycleMaps(dim=task.dim, widths=config.widths, alpha_cyc=config.alpha_cyc, alpha_id=config.alpha_id,
                      bandwidths=config.bandwidths, norm=config.norm)
    return model.double()


def train_toy(task, config, verbose=True):
    model = _build_model(task, config)
    x_pool, y_pool = _pools(task, config)
    generator = torch.Generator().manual_seed(config.seed)
    optimizer = torch.optim.SGD(model.parameters(), lr=config.learning_rate, momentum=config.momentum)

    if config.wandb_log:
        import wandb
        run_name = f'{task.name}-seed{config.seed}-{time.time():.2f}'
        wandb.init(project=config.wandb_project, name=run_name, config=dataclasses.asdict(config))

    history, checkpoints = [], []
    for step in range(config.steps):
        xb = x_pool[torch.randint(len(x_pool), (config.batch_size,), generator=generator)]
        yb = y_pool[torch.randint(len(y_pool), (config.batch_size,), generator=generator)]
        lr = config.lr_at(step)
        for param_group in optimizer.param_groups:
            param_group['lr'] = lr
        optimizer.zero_grad(set_to_none=True)
        output = model(xb, yb)
        loss = output['loss'].item()
        if not math.isfinite(loss) or loss > config.max_loss:
            if config.wandb_log:
                wandb.finish()
            raise DivergedLoss(step, loss)
        output['loss'].backward()
        if config.grad_clip != 0.0:
            torch.nn.utils.clip_grad_norm_(model.parameters(), config.grad_clip)
        optimizer.step()

        row = {k: v.item() for k, v in output.items()}
        history.append(row)
        if verbose and (step % config.log_interval == 0 or step == config.steps - 1):
            print(f"step {step}: loss {loss:.4f}, mmd {row['mmd_xy']:.4f}/{row['mmd_yx']:.4f}, "
                  f"cyc {row['cyc_x']:.4f}/{row['cyc_y']:.4f}, id {row['id_x']:.4f}/{row['id_y']:.4f}")
        if config.wandb_log:
            wandb.log({'lr': lr, **{f'losses/{k}': v for k, v in row.items()}}, step=step)
        if (step + 1) % config.checkpoint_interval == 0:
            checkpoints.append({'step': step + 1, 'G': _layers_to_lists(model.G.layers()),
                                'F': _layers_to_lists(model.F.layers())})

    G, F = model.G.to_measurable_map('G'), model.F.to_measurable_map('F')
    record = RunRecord(task.name, config, history, checkpoints, model.G.layers(), model.F.layers(), G, F)
    record.nearest_reference, record.class_distance = classify_solution(record, task, config.eval_samples, config.seed)
    if not math.isfinite(record.class_distance):
        # the final maps send source samples to inf or nan
        if config.wandb_log:
            wandb.finish()
        raise DivergedLoss(config.steps, record.class_distance)
    record.final_loss = extended_loss(G, F, task.source, task.target, config.loss_config())
    if verbose:
        print(f"seed {config.seed}: {record.solution_class} (distance {record.class_distance:.4f}), "
              f"pure loss {record.final_loss.total_pure:.4f}")
    if config.wandb_log:
        wandb.log({'final/class_distance': record.class_distance, 'final/total_pure': record.final_loss.total_pure})
        wandb.finish()
    return record


def classify_solution(record, task, mc_samples=20_000, seed=0):
    """
    Nearest reference automorphism rho under E|G(x) - rho(x)|_1, x ~ source.
    record may be a RunRecord or a map G. Ties go to the earlier reference.
    """
    G = record.G if isinstance(record, RunRecord) else record
    xs = sample(task.source, mc_samples, seed).points
    gx = G.evaluate_unchecked(xs)
    best_name, best_distance = None, math.inf
    for name, rho in task.references.items():
        d = float(np.abs(gx - rho.evaluate_unchecked(xs)).sum(axis=1).mean())
        if d < best_distance:
            best_name, best_distance = name, d
    return best_name, best_distance


# -----------------------------------------------------------------------------
# seed sweeps

@dataclass
class SweepResult:
    records: list
    histogram: dict # solution_class -> count
    loss_equivalence_gap: float # max - min total_pure over converged runs; nan with fewer than two

    def rows(self):
        return [r.to_row() for r in self.records]

    def to_dict(self):
        return {'histogram': dict(self.histogram), 'loss_equivalence_gap': self.loss_equivalence_gap,
                'runs': self.rows()}


def seed_sweep(task, config, seeds, progress=True):
    """
    One run per seed, sequentially; each run seeds its own pools, batches and
    initialization, so the result does not depend on run order. A run that
    blows up is kept in the histogram as 'diverged'.
    """
    seeds = list(seeds)
    if len(seeds) < 2:
        raise MinSeeds(f"a sweep needs at least 2 seeds, got {len(seeds)}")
    records = []
    for s in tqdm(seeds, desc=f'{task.name} sweep', disable=not progress):
        run_config = dataclasses.replace(config, seed=int(s))
        try:
            records.append(train_toy(task, run_config, verbose=False))
        except DivergedLoss as e:
            records.append(RunRecord.diverged(task.name, run_config, e))
    histogram = Counter(r.solution_class for r in records)
    converged = [r.final_loss.total_pure for r in records if r.class_distance <= CLASS_THRESHOLD]
    gap = max(converged) - min(converged) if len(converged) >= 2 else float('nan')
    return SweepResult(records, dict(sorted(histogram.items())), gap)


# -----------------------------------------------------------------------------
# gradient check

@dataclass
class GradCheckReport:
    analytic: list # directional derivatives from autograd
    numeric: list # central finite differences along the same directions
    step: float

    @property
    def rel_error(self):
        """Norm-wise relative error over all points."""
        a, b = np.asarray(self.analytic), np.asarray(self.numeric)
        return float(np.linalg.norm(a - b) / max(np.linalg.norm(a), np.linalg.norm(b), 1e-300))

    def to_dict(self):
        return {'analytic': list(self.analytic), 'numeric': list(self.numeric), 'step': self.step,
                'rel_error': self.rel_error}


def gradient_check(task, config, n_points=10, step=1e-5, seed=0, batch_size=64):
    """
    Autograd against central differences of the training objective on one
    fixed batch, at n_points random parameter vectors, each along a random
    unit direction.
    """
    model = _build_model(task, config)
    x_pool, y_pool = _pools(task, config)
    xb, yb = x_pool[:batch_size], y_pool[:batch_size]
    params = list(model.parameters())
    theta0 = torch.nn.utils.parameters_to_vector(params).detach()
    generator = torch.Generator().manual_seed(seed)

    def objective(theta):
        torch.nn.utils.vector_to_parameters(theta, params)
        return model(xb, yb)['loss']

    analytic, numeric = [], []
    for _ in range(n_points):
        theta = theta0 + 0.5 * torch.randn(theta0.shape, generator=generator, dtype=theta0.dtype)
        direction = torch.randn(theta0.shape, generator=generator, dtype=theta0.dtype)
        direction /= direction.norm()

        model.zero_grad(set_to_none=True)
        objective(theta).backward()
        grad = torch.cat([p.grad.reshape(-1) for p in params])
        a = float(grad @ direction)
        with torch.no_grad():
            b = float((objective(theta + step * direction) - objective(theta - step * direction)) / (2 * step))
        analytic.append(a)
        numeric.append(b)
    return GradCheckReport(analytic, numeric, step)
