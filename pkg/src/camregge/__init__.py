"""Complex angular momentum analysis of tabulated S-matrix elements.

Rational continuation of ``S^J(E)`` in ``J`` and ``E``, Regge poles and
residues, unfolded amplitudes and their fold-back onto the differential
cross section, resonance decompositions, trajectories and complex-energy
poles with derived observables.
"""

__version__ = "0.1.0"

from .errors import CamReggeError, InputError, NumericalError  # noqa: E402
from .smatrix_io import PartialWaveTable, TransitionLabel, load_table, save_table  # noqa: E402

__all__ = ["CamReggeError", "InputError", "NumericalError", "PartialWaveTable",
           "TransitionLabel", "load_table", "save_table", "__version__"]
