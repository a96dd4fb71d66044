"""
ramlab - near-Ramanujan random graphs and the free-group machinery behind them.

Stallings core graphs, primitivity rank, Moebius inversion on quotient posets,
random regular graph and random cover samplers, new-eigenvalue extraction and
the bound tables, at desk scale.
"""

__version__ = "0.4.0"
