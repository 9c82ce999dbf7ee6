"""Numerical tolerances and resource caps shared across the package.

All entropies are in nats (natural log). Tolerances below are the single
source of truth; functions take overrides only where a knob is part of
their contract (``tol_cptp`` on the verifier, caps on dense routines).
"""

# Hermiticity drift allowed before an input is rejected (max-abs of M - M^dag).
TOL_HERM = 1e-10

# Eigenvalue floor for density matrices: spectra below -PSD_TOL are invalid.
PSD_TOL = 1e-10

# Relaxed floor for states produced by channel application / contraction,
# where tol_cptp-level channel defects can leak into the spectrum.
PSD_TOL_RELAXED = 1e-8

# Unit-trace tolerance for density matrices.
TOL_TRACE = 1e-10

# Eigenvalues at or below this are treated as exact zeros (0*log 0 = 0,
# kernel detection in the Petz construction).
EIG_FLOOR = 1e-12

# Default CP/TP defect tolerance for channel validation. CLI-overridable;
# part of the verifier's trusted configuration, never of the witness.
TOL_CPTP = 1e-8

# Largest total Hilbert-space dimension for dense (oracle-grade) routines.
DENSE_CAP = 4096

# Largest contiguous-window width for exact MPDO marginals.
WINDOW_CAP = 6
