"""Direct tomography of Kraus operators, states, unitaries and observables
through a controlled probe-system-environment dilation.

The core idea: a qubit probe controls whether the system sees a fixed
reference unitary or the unknown process.  Interference between the two
branches, read out in the probe's sigma_x and sigma_y bases, hands back a
single complex matrix element of the unknown operator.
"""

from . import errors, framework, mzi, noise, qmath, tomography, values
from .framework import (
    DilationConfig,
    ProbabilityTable,
    TripartiteSystem,
    build_upse,
    evolve,
    extract_element,
    joint_probabilities,
    kraus_from_dilation,
)

__version__ = "0.1.0"

__all__ = [
    "errors", "framework", "mzi", "noise", "qmath", "tomography", "values",
    "DilationConfig", "ProbabilityTable", "TripartiteSystem",
    "build_upse", "evolve", "extract_element", "joint_probabilities", "kraus_from_dilation",
    "__version__",
]
