"""Spatial and temporal mode analysis of collective Stokes Raman scattering.

The package is organized as a pipeline:

* :mod:`artifact.specfun` -- Laguerre polynomials, terminating 2F1, LG modes
* :mod:`artifact.geometry` -- experimental regimes and dimensionless reduction
* :mod:`artifact.coupling` -- closed-form coupling matrix elements
* :mod:`artifact.modes` -- weighted SVD into photonic/atomic eigenmodes
* :mod:`artifact.temporal` -- correlation functions under decoherence
* :mod:`artifact.estimator` -- optimal photon-count weights for spin-wave number
* :mod:`artifact.oracle` -- time-slicing and covariance propagation checks
* :mod:`artifact.cli` -- command-line entry point
"""

__version__ = "0.1.0"
