"""Interferometric and pointer-based estimation of non-Hermitian operator averages.

The package splits into five layers:

* :mod:`mzweak.jones` - 2x2 polarization algebra, polar decomposition, weak values.
* :mod:`mzweak.mzi` - analytic Mach-Zehnder propagation and the visibility/phase
  inference pipeline.
* :mod:`mzweak.fringe_synth` - synthetic spatial fringe profiles with detector
  effects and seeded noise.
* :mod:`mzweak.fringe_fit` - visibility extraction from profiles (peak/dip
  envelope method and full-model least squares).
* :mod:`mzweak.weakmeas` - conventional weak measurement of a projector via a
  displaced-pointer simulation.

``mzweak.cli`` wires these into reproducible, config-driven runs.
"""

__version__ = "0.1.0"

from . import errors, fringe_fit, fringe_synth, jones, mzi, weakmeas  # noqa: F401
