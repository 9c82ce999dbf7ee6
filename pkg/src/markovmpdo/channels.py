"""Quantum channels in Choi form.

The Choi matrix is stored unnormalized, ``C = sum_{ij} |i><j| (x) Phi(|i><j|)``,
with the input copy as the LEFT (slow) tensor factor. CP holds iff C is PSD,
TP iff the partial trace over the output factor equals the input identity.
The Jamiolkowski state is ``C / d_in``.
"""

from __future__ import annotations

import math
from typing import Iterable, Sequence

import numpy as np

from .config import EIG_FLOOR, PSD_TOL_RELAXED, TOL_CPTP
from .errors import (
    InvalidChannelError,
    PrecisionTooLowError,
    UsageError,
)
from .spectra import (
    DensityMatrix,
    eigh_or_raise,
    hermitian_part,
    partial_trace,
    ptrace_matrix,
    trace_norm,
)

__all__ = [
    "QuantumChannel",
    "channel_from_choi",
    "apply",
    "compose_then_trace",
    "jamiolkowski_state",
    "channel_distance_bound",
    "round_density_matrix",
    "round_channel",
    "identity_channel",
    "replacement_channel",
]


class QuantumChannel:
    """CPTP map ``B(H_in) -> B(H_out1 (x) ... (x) H_outk)`` in Choi form.

    The constructor stores the data as given; use :func:`channel_from_choi`
    to validate. ``cp_defect``/``tp_defect`` quantify how far the Choi matrix
    is from CP (most negative eigenvalue) and TP (operator-norm deviation of
    the traced-out Choi from the identity).
    """

    __slots__ = ("d_in", "out_dims", "choi")

    def __init__(self, choi, d_in: int, out_dims: Sequence[int]):
        self.d_in = int(d_in)
        self.out_dims = tuple(int(d) for d in out_dims)
        if self.d_in < 1 or any(d < 1 for d in self.out_dims) or not self.out_dims:
            raise UsageError(f"bad channel dimensions d_in={d_in}, out_dims={out_dims}")
        c = np.asarray(choi, dtype=np.complex128)
        side = self.d_in * self.d_out
        if c.shape != (side, side):
            raise UsageError(f"Choi matrix side {c.shape} does not match d_in*d_out = {side}")
        self.choi = c

    @property
    def d_out(self) -> int:
        return math.prod(self.out_dims)

    def cp_defect(self) -> float:
        lo = float(np.linalg.eigvalsh(hermitian_part(self.choi, 1e-6, "Choi matrix"))[0])
        return max(0.0, -lo)

    def tp_defect(self) -> float:
        traced = ptrace_matrix(self.choi, (self.d_in, self.d_out), (0,))
        w = np.linalg.eigvalsh(hermitian_part(traced - np.eye(self.d_in), 1e-6, "traced Choi"))
        return float(np.max(np.abs(w)))

    def __repr__(self):
        return f"QuantumChannel(d_in={self.d_in}, out_dims={self.out_dims})"


def channel_from_choi(choi, d_in: int, out_dims: Sequence[int],
                      tol_cptp: float = TOL_CPTP) -> QuantumChannel:
    """Validate a Choi matrix as a CPTP channel.

    Raises :class:`InvalidChannelError` carrying both defects when the CP or
    TP deviation exceeds ``tol_cptp``.
    """
    phi = QuantumChannel(choi, d_in, out_dims)
    cp = phi.cp_defect()
    tp = phi.tp_defect()
    if cp > tol_cptp or tp > tol_cptp:
        raise InvalidChannelError(
            f"Choi matrix fails CPTP validation: CP defect {cp:.3e}, TP defect {tp:.3e} "
            f"(tolerance {tol_cptp:.1e})", cp, tp)
    return phi


def apply(phi: QuantumChannel, rho: DensityMatrix, site: int) -> DensityMatrix:
    """Apply ``phi`` to the 1-based subsystem ``site`` of ``rho``.

    The channel's output subsystems are spliced in place of the input
    subsystem; spectators are untouched. The result is validated with the
    relaxed PSD floor, since tol-level channel defects may perturb the
    output spectrum.
    """
    s = int(site) - 1
    if not 0 <= s < rho.n_subsystems:
        raise UsageError(f"site {site} out of range 1..{rho.n_subsystems}")
    if rho.dims[s] != phi.d_in:
        raise UsageError(
            f"channel input dimension {phi.d_in} does not match subsystem {site} "
            f"dimension {rho.dims[s]}")
    d_l = math.prod(rho.dims[:s])
    d_r = math.prod(rho.dims[s + 1:])
    d_out = phi.d_out
    c4 = phi.choi.reshape(phi.d_in, d_out, phi.d_in, d_out)
    t = rho.matrix.reshape(d_l, phi.d_in, d_r, d_l, phi.d_in, d_r)
    out = np.einsum("lirLjR,iajb->larLbR", t, c4)
    out = out.reshape(d_l * d_out * d_r, d_l * d_out * d_r)
    new_dims = rho.dims[:s] + phi.out_dims + rho.dims[s + 1:]
    return DensityMatrix(out, new_dims, psd_tol=PSD_TOL_RELAXED)


def compose_then_trace(phi: QuantumChannel, traced_out: Iterable[int],
                       tol_cptp: float = TOL_CPTP) -> QuantumChannel:
    """The channel ``X -> Tr_{traced_out}[phi(X)]``.

    ``traced_out`` lists 1-based output subsystems. Tracing outputs of the
    Choi matrix yields the composed map's Choi directly.
    """
    traced = sorted(set(int(i) for i in traced_out))
    k = len(phi.out_dims)
    for i in traced:
        if not 1 <= i <= k:
            raise UsageError(f"output subsystem {i} out of range 1..{k}")
    if len(traced) == k:
        raise UsageError("cannot trace out every output subsystem (scalar maps unsupported)")
    keep0 = [0] + [j for j in range(1, k + 1) if j not in traced]
    choi_dims = (phi.d_in,) + phi.out_dims
    new_choi = ptrace_matrix(phi.choi, choi_dims, keep0)
    new_out = tuple(phi.out_dims[j - 1] for j in range(1, k + 1) if j not in traced)
    return channel_from_choi(new_choi, phi.d_in, new_out, tol_cptp)


def jamiolkowski_state(phi: QuantumChannel) -> DensityMatrix:
    """The normalized Choi state ``C / d_in`` on dims ``(d_in, d_out)``."""
    return DensityMatrix(phi.choi / phi.d_in, (phi.d_in, phi.d_out),
                         psd_tol=PSD_TOL_RELAXED)


def channel_distance_bound(phi: QuantumChannel, psi: QuantumChannel) -> tuple[float, float]:
    """Diamond-norm surrogate bounds from the Jamiolkowski states.

    Returns ``(sharp, loose)`` with
    ``sharp = ||Tr_out |rho_phi - rho_psi|||`` (operator norm) and
    ``loose = d_in * ||rho_phi - rho_psi||_1``; ``sharp <= loose`` always.
    """
    if phi.d_in != psi.d_in or phi.out_dims != psi.out_dims:
        raise UsageError("channels must share d_in and out_dims")
    delta = (phi.choi - psi.choi) / phi.d_in
    w, v = eigh_or_raise(hermitian_part(delta, 1e-6, "Choi difference"))
    absdelta = (v * np.abs(w)) @ v.conj().T
    traced = ptrace_matrix(absdelta, (phi.d_in, phi.d_out), (0,))
    sharp = float(np.max(np.abs(np.linalg.eigvalsh(hermitian_part(traced)))))
    loose = phi.d_in * float(np.abs(w).sum())
    return sharp, loose


def _truncate_toward_zero(x: np.ndarray, bits: int) -> np.ndarray:
    scale = 2.0 ** bits
    return np.trunc(x * scale) / scale


def round_density_matrix(rho: DensityMatrix, bits: int) -> DensityMatrix:
    """Finite-precision rounding of a density matrix.

    Eigenvector amplitudes (real and imaginary parts separately) and all
    eigenvalues but the largest are truncated toward zero to ``bits``
    fractional bits; the largest eigenvalue absorbs the normalization
    residue so the trace is exactly 1. The trace-norm perturbation obeys
    ``||rho - rho~||_1 <= 5 d^2 2^-bits``.
    """
    bits = int(bits)
    if bits < 4:
        raise UsageError(f"bits must be >= 4, got {bits}")
    w, v = eigh_or_raise(hermitian_part(rho.matrix))
    d = rho.dim
    vt = _truncate_toward_zero(v.real, bits) + 1j * _truncate_toward_zero(v.imag, bits)
    wt = _truncate_toward_zero(np.clip(w, 0.0, None), bits)
    norms = np.sum(np.abs(vt) ** 2, axis=0).real
    if norms[-1] <= 0.0:
        raise PrecisionTooLowError(
            f"{bits} bits truncate the dominant eigenvector to zero (d={d})")
    absorber = (1.0 - float(np.dot(wt[:-1], norms[:-1]))) / float(norms[-1])
    if absorber < -TOL_CPTP:
        raise PrecisionTooLowError(
            f"absorbing eigenvalue {absorber:.3e} is negative beyond tolerance at {bits} bits")
    q = np.concatenate([wt[:-1], [absorber]])
    mat = (vt * q) @ vt.conj().T
    return DensityMatrix(mat, rho.dims, psd_tol=PSD_TOL_RELAXED)


def _project_tp(choi: np.ndarray, d_in: int, d_out: int) -> np.ndarray:
    defect = np.eye(d_in) - ptrace_matrix(choi, (d_in, d_out), (0,))
    return choi + np.kron(defect, np.eye(d_out)) / d_out


def _project_cptp(choi: np.ndarray, d_in: int, d_out: int, tol_cptp: float,
                  max_rounds: int = 200) -> np.ndarray:
    """Alternate the TP affine projection with a PSD clip until both defects
    sit safely inside ``tol_cptp``. Rounding perturbations are tiny, so this
    converges in a handful of rounds."""
    c = hermitian_part(choi, 1e-6, "rounded Choi")
    target = 0.25 * tol_cptp
    for _ in range(max_rounds):
        c = _project_tp(c, d_in, d_out)
        c = (c + c.conj().T) / 2.0
        w, v = eigh_or_raise(c)
        if w[0] >= -target:
            return c
        c = (v * np.clip(w, 0.0, None)) @ v.conj().T
    raise PrecisionTooLowError(
        "CPTP re-projection of the rounded Choi matrix did not converge")


def round_channel(phi: QuantumChannel, bits: int,
                  tol_cptp: float = TOL_CPTP) -> tuple[QuantumChannel, float]:
    """Round a channel via its Jamiolkowski state.

    The state is rounded with :func:`round_density_matrix` and mapped back
    to an exactly-TP, PSD-clipped Choi matrix. Returns the rounded channel
    together with the loose diamond-norm budget
    ``d_in * ||rho_phi - rho_phi~||_1`` measured against the final channel.
    """
    bits = int(bits)
    if bits < 4:
        raise UsageError(f"bits must be >= 4, got {bits}")
    jam = jamiolkowski_state(phi)
    rounded = round_density_matrix(jam, bits)
    choi = _project_cptp(rounded.matrix * phi.d_in, phi.d_in, phi.d_out, tol_cptp)
    out = channel_from_choi(choi, phi.d_in, phi.out_dims, tol_cptp)
    budget = phi.d_in * trace_norm(jam.matrix - choi / phi.d_in)
    return out, budget


def identity_channel(d: int) -> QuantumChannel:
    """The identity map on a d-dimensional system."""
    e = np.eye(d, dtype=np.complex128).reshape(d * d)
    return QuantumChannel(np.outer(e, e.conj()), d, (d,))


def replacement_channel(tau: DensityMatrix, d_in: int) -> QuantumChannel:
    """The trace-and-replace map ``X -> Tr(X) tau``."""
    return QuantumChannel(np.kron(np.eye(d_in, dtype=np.complex128), tau.matrix),
                          d_in, tuple(tau.dims))
