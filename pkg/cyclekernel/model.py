"""
The networks the trainer fits: a pair of small tanh perceptrons G: X -> Y and
F: Y -> X, scored by an MMD surrogate of the divergence terms plus the cycle
and identity terms of the extended loss.
"""

import numpy as np
import torch
import torch.nn as nn

from .maps import parametric_net

MAX_WIDTH = 32


def mmd(a, b, bandwidths):
    """
    Biased MMD^2 between two point clouds (n, d) and (m, d) under a mixture of
    Gaussian kernels, one per bandwidth.
    """
    def kernel(u, v):
        sq = ((u[:, None, :] - v[None, :, :]) ** 2).sum(dim=-1)
        return sum(torch.exp(-sq / (2 * s ** 2)) for s in bandwidths)

    return kernel(a, a).mean() + kernel(b, b).mean() - 2 * kernel(a, b).mean()


def distance(diff, norm='L1'):
    if norm == 'L1':
        return diff.abs().sum(dim=-1)
    return diff.pow(2).sum(dim=-1).sqrt()


class MapNet(nn.Module):
    def __init__(self, dim: int = 1, widths: tuple = (16, 16)):
        """
        dim: dimension of the space the map acts on
        widths: sizes of the two tanh hidden layers
        """
        super().__init__()
        assert len(widths) == 2, f"MapNet has exactly two hidden layers, got widths {widths}"
        assert max(widths) <= MAX_WIDTH, f"hidden widths are capped at {MAX_WIDTH}, got {widths}"
        self.dim, self.widths = dim, tuple(widths)
        self.fc1 = nn.Linear(dim, widths[0])
        self.fc2 = nn.Linear(widths[0], widths[1])
        self.out = nn.Linear(widths[1], dim)

    def forward(self, x):
        h = torch.tanh(self.fc1(x))
        h = torch.tanh(self.fc2(h))
        return self.out(h)

    @torch.no_grad()
    def layers(self):
        """[(W, b), ...] as float64 numpy arrays, W of shape (out, in)."""
        return [(m.weight.detach().cpu().double().numpy().copy(), m.bias.detach().cpu().double().numpy().copy())
                for m in (self.fc1, self.fc2, self.out)]

    @torch.no_grad()
    def load_layers(self, layers):
        for m, (W, b) in zip((self.fc1, self.fc2, self.out), layers):
            m.weight.copy_(torch.as_tensor(np.asarray(W), dtype=m.weight.dtype))
            m.bias.copy_(torch.as_tensor(np.asarray(b), dtype=m.bias.dtype))

    def to_measurable_map(self, name='net'):
        return parametric_net(self.layers(), name=name)


class CycleMaps(nn.Module):
    def __init__(self, dim: int = 1, widths: tuple = (16, 16), alpha_cyc: float = 1.0, alpha_id: float = 0.0,
                 bandwidths: tuple = (0.25, 0.5, 1.0, 2.0), norm: str = 'L1'):
        """
        alpha_cyc: weight of the cycle terms E|F(G(x)) - x| + E|G(F(y)) - y|
        alpha_id: weight of the identity terms E|G(x) - x| + E|F(y) - y|
        bandwidths: Gaussian kernel bandwidths of the MMD surrogate
        """
        super().__init__()
        self.G = MapNet(dim, widths)
        self.F = MapNet(dim, widths)
        self.alpha_cyc, self.alpha_id = alpha_cyc, alpha_id
        self.bandwidths = tuple(bandwidths)
        self.norm = norm

    def forward(self, x, y):
        gx, fy = self.G(x), self.F(y)
        terms = {
            'mmd_xy': mmd(gx, y, self.bandwidths),
            'mmd_yx': mmd(fy, x, self.bandwidths),
            'cyc_x': distance(self.F(gx) - x, self.norm).mean(),
            'cyc_y': distance(self.G(fy) - y, self.norm).mean(),
            'id_x': distance(gx - x, self.norm).mean(),
            'id_y': distance(fy - y, self.norm).mean(),
        }
        terms['loss'] = (terms['mmd_xy'] + terms['mmd_yx']
                         + self.alpha_cyc * (terms['cyc_x'] + terms['cyc_y'])
                         + self.alpha_id * (terms['id_x'] + terms['id_y']))
        return terms
