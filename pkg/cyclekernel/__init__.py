"""A numerical lab for the solution space of the cycle-consistent loss."""

__version__ = '0.1.0'
