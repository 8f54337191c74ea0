"""Conductance networks and Dirichlet-form renormalization on self-similar fractals.

The package is organised around five layers:

* :mod:`fractalforms.structure` -- combinatorial self-similar structures,
  level graphs and approximating measures;
* :mod:`fractalforms.network` -- conductance-network algebra (energy, trace,
  effective resistance, replication, renormalization, spectra);
* :mod:`fractalforms.family` -- one-parameter invariant families, the
  renormalization functions alpha/rho and their limits;
* :mod:`fractalforms.shorting` -- the high-conductance quotient, limit
  structure and its fixed-point certification;
* :mod:`fractalforms.metrics` / :mod:`fractalforms.simulate` -- resistance
  metric diagnostics and continuous-time random-walk experiments.

Everything is driven by JSON structure configs; see ``fractalforms.configs``
for the shipped Sierpinski gasket and weighted Vicsek examples.
"""

from fractalforms.structure import SelfSimilarStructure, build_level, measure_level, embed_level
from fractalforms.network import ConductanceNetwork, trace, effective_resistance, replicate, renormalize
from fractalforms.family import OneParamFamily

__all__ = [
    "SelfSimilarStructure",
    "build_level",
    "measure_level",
    "embed_level",
    "ConductanceNetwork",
    "trace",
    "effective_resistance",
    "replicate",
    "renormalize",
    "OneParamFamily",
]

__version__ = "0.1.0"
