"""Witness and instance documents, the polynomial-time verifier, and the
decision rule.

Documents are canonical JSON: keys sorted, two-space indent, one trailing
newline, complex matrix entries as two-element ``["re", "im"]`` arrays of
shortest round-trip decimal strings, matrices row-major. Parsing any
canonical document and re-serializing reproduces it byte for byte.

Witness grammar::

    { "version": "1", "n_sites": N, "site_dims": [...],
      "initial": {"dim": d1, "matrix": [[["re","im"], ...], ...]},
      "channels": [{"site": i, "d_in": di, "out_dims": [di, di1],
                    "choi_matrix": [...]}, ...],
      "declared_epsilon": eps }          # optional

Instance grammar::

    { "site_dims": [...],
      "terms": [{"start": i, "window": w, "matrix": [...]}, ...],
      "temperature": T, "alpha": a, "beta": b }
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from . import channels as ch
from . import mpdo as mp
from . import spectra as sp
from . import spinchain as sc
from .config import TOL_CPTP
from .errors import (
    FormatError,
    UsageError,
    ValidationError,
)

__all__ = [
    "WitnessDocument",
    "Verdict",
    "parse_witness",
    "serialize_witness",
    "parse_instance",
    "serialize_instance",
    "verify",
    "round_witness",
]

FORMAT_VERSION = "1"

POLICIES = ("sound", "midpoint")


@dataclass(frozen=True)
class WitnessDocument:
    """A parsed witness: the (not yet CPTP-validated) chain plus metadata."""

    version: str
    mpdo: mp.MarkovianMpdo
    declared_epsilon: float | None = None


@dataclass(frozen=True)
class Verdict:
    """Verifier output. ``accepted`` holds iff the witness is wellformed and
    the certified free-energy upper bound clears the threshold; when the
    witness is malformed the numeric fields are None."""

    wellformed: bool
    epsilon_max: float | None
    free_energy_upper: float | None
    threshold_used: float
    accepted: bool
    diagnostics: tuple[str, ...]

    def render(self) -> str:
        def fmt(x):
            return "n/a" if x is None else repr(float(x))

        lines = [
            f"wellformed: {'true' if self.wellformed else 'false'}",
            f"epsilon_max: {fmt(self.epsilon_max)}",
            f"free_energy_upper: {fmt(self.free_energy_upper)}",
            f"threshold_used: {fmt(self.threshold_used)}",
            f"accepted: {'true' if self.accepted else 'false'}",
        ]
        if self.diagnostics:
            lines.append("diagnostics:")
            lines += [f"- {d}" for d in self.diagnostics]
        else:
            lines.append("diagnostics: (none)")
        return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# low-level encoding


def _finite(x) -> float:
    x = float(x)
    if not math.isfinite(x):
        raise FormatError(f"non-finite value {x!r} cannot be serialized")
    return x


def _encode_float(x) -> str:
    return repr(_finite(x))


def _decode_float(value, where: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float, str)):
        raise FormatError(f"{where}: expected a decimal value, got {value!r}")
    try:
        x = float(value)
    except ValueError as exc:
        raise FormatError(f"{where}: bad decimal {value!r}") from exc
    if not math.isfinite(x):
        raise FormatError(f"{where}: non-finite value {value!r}")
    return x


def _encode_matrix(a: np.ndarray):
    return [[[_encode_float(entry.real), _encode_float(entry.imag)] for entry in row]
            for row in np.asarray(a, dtype=np.complex128)]


def _decode_matrix(value, side: int, where: str) -> np.ndarray:
    if not isinstance(value, list) or len(value) != side:
        raise FormatError(f"{where}: expected {side} matrix rows")
    out = np.empty((side, side), dtype=np.complex128)
    for r, row in enumerate(value):
        if not isinstance(row, list) or len(row) != side:
            raise FormatError(f"{where}: row {r} must have {side} entries")
        for c, entry in enumerate(row):
            if not isinstance(entry, list) or len(entry) != 2:
                raise FormatError(f"{where}: entry ({r},{c}) must be a [re, im] pair")
            out[r, c] = complex(_decode_float(entry[0], f"{where} entry ({r},{c}) re"),
                                _decode_float(entry[1], f"{where} entry ({r},{c}) im"))
    return out


def _canonical_bytes(doc) -> bytes:
    return (json.dumps(doc, sort_keys=True, indent=2, allow_nan=False) + "\n").encode("utf-8")


def _load_json(data, what: str):
    if isinstance(data, bytes):
        data = data.decode("utf-8")
    try:
        doc = json.loads(data, parse_constant=lambda c: (_ for _ in ()).throw(
            FormatError(f"{what}: non-finite constant {c!r}")))
    except json.JSONDecodeError as exc:
        raise FormatError(f"{what}: syntax error: {exc}") from exc
    if not isinstance(doc, dict):
        raise FormatError(f"{what}: top level must be an object")
    return doc


def _require(doc, field: str, what: str):
    if field not in doc:
        raise FormatError(f"{what}: missing field '{field}'")
    return doc[field]


def _int_field(value, where: str) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise FormatError(f"{where}: expected an integer, got {value!r}")
    return value


def _dims_field(value, where: str) -> tuple[int, ...]:
    if not isinstance(value, list) or not value:
        raise FormatError(f"{where}: expected a nonempty list of dimensions")
    dims = tuple(_int_field(d, where) for d in value)
    if any(d < 1 for d in dims):
        raise FormatError(f"{where}: dimensions must be >= 1, got {dims}")
    return dims


# ---------------------------------------------------------------------------
# witness documents


def parse_witness(data) -> WitnessDocument:
    """Parse witness bytes. Structure and dimensions are enforced here;
    CPTP and density validity are deferred to the verifier."""
    doc = _load_json(data, "witness")
    version = _require(doc, "version", "witness")
    if version != FORMAT_VERSION:
        raise FormatError(f"witness: unsupported version {version!r}")
    n_sites = _int_field(_require(doc, "n_sites", "witness"), "witness n_sites")
    site_dims = _dims_field(_require(doc, "site_dims", "witness"), "witness site_dims")
    if len(site_dims) != n_sites or n_sites < 1:
        raise FormatError(
            f"witness: n_sites {n_sites} does not match site_dims of length {len(site_dims)}")
    init_doc = _require(doc, "initial", "witness")
    if not isinstance(init_doc, dict):
        raise FormatError("witness: 'initial' must be an object")
    d1 = _int_field(_require(init_doc, "dim", "witness initial"), "witness initial dim")
    if d1 != site_dims[0]:
        raise FormatError(
            f"witness: initial dim {d1} does not match site 1 dimension {site_dims[0]}")
    init_mat = _decode_matrix(_require(init_doc, "matrix", "witness initial"),
                              d1, "witness initial matrix")
    initial = sp.DensityMatrix(init_mat, (d1,), validate=False)

    chan_docs = _require(doc, "channels", "witness")
    if not isinstance(chan_docs, list) or len(chan_docs) != n_sites - 1:
        raise FormatError(
            f"witness: expected {n_sites - 1} channels, got "
            f"{len(chan_docs) if isinstance(chan_docs, list) else 'non-list'}")
    channel_list = []
    for k, cdoc in enumerate(chan_docs):
        site = k + 1
        if not isinstance(cdoc, dict):
            raise FormatError(f"witness: channel at site {site} must be an object")
        declared_site = _int_field(_require(cdoc, "site", f"witness channel {site}"),
                                   f"witness channel {site} site")
        if declared_site != site:
            raise FormatError(
                f"witness: channel {k} declares site {declared_site}, expected {site}")
        d_in = _int_field(_require(cdoc, "d_in", f"witness channel {site}"),
                          f"witness channel {site} d_in")
        if d_in != site_dims[k]:
            raise FormatError(
                f"witness: channel at site {site} has d_in {d_in} but site dimension "
                f"is {site_dims[k]}")
        out_dims = _dims_field(_require(cdoc, "out_dims", f"witness channel {site}"),
                               f"witness channel {site} out_dims")
        if out_dims != (site_dims[k], site_dims[k + 1]):
            raise FormatError(
                f"witness: channel at site {site} has out_dims {list(out_dims)}, expected "
                f"{[site_dims[k], site_dims[k + 1]]}")
        side = d_in * math.prod(out_dims)
        choi = _decode_matrix(_require(cdoc, "choi_matrix", f"witness channel {site}"),
                              side, f"witness channel {site} choi_matrix")
        channel_list.append(ch.QuantumChannel(choi, d_in, out_dims))

    declared_epsilon = None
    if "declared_epsilon" in doc:
        declared_epsilon = _decode_float(doc["declared_epsilon"], "witness declared_epsilon")
    mpdo_obj = mp.MarkovianMpdo(initial, channel_list, validate=False)
    return WitnessDocument(version=version, mpdo=mpdo_obj,
                           declared_epsilon=declared_epsilon)


def serialize_witness(witness, declared_epsilon: float | None = None) -> bytes:
    """Serialize a MarkovianMpdo or WitnessDocument to canonical bytes."""
    if isinstance(witness, WitnessDocument):
        if declared_epsilon is None:
            declared_epsilon = witness.declared_epsilon
        witness = witness.mpdo
    doc = {
        "version": FORMAT_VERSION,
        "n_sites": witness.n,
        "site_dims": list(witness.site_dims),
        "initial": {"dim": witness.site_dims[0],
                    "matrix": _encode_matrix(witness.initial.matrix)},
        "channels": [
            {"site": k + 1, "d_in": phi.d_in, "out_dims": list(phi.out_dims),
             "choi_matrix": _encode_matrix(phi.choi)}
            for k, phi in enumerate(witness.channels)
        ],
    }
    if declared_epsilon is not None:
        doc["declared_epsilon"] = _finite(declared_epsilon)
    return _canonical_bytes(doc)


# ---------------------------------------------------------------------------
# instance documents


def parse_instance(data) -> sc.FreeEnergyInstance:
    doc = _load_json(data, "instance")
    site_dims = _dims_field(_require(doc, "site_dims", "instance"), "instance site_dims")
    term_docs = _require(doc, "terms", "instance")
    if not isinstance(term_docs, list):
        raise FormatError("instance: 'terms' must be a list")
    terms = []
    for t_idx, tdoc in enumerate(term_docs):
        if not isinstance(tdoc, dict):
            raise FormatError(f"instance: term {t_idx} must be an object")
        start = _int_field(_require(tdoc, "start", f"instance term {t_idx}"),
                           f"instance term {t_idx} start")
        window = _int_field(_require(tdoc, "window", f"instance term {t_idx}"),
                            f"instance term {t_idx} window")
        if not (1 <= start and window >= 1 and start + window - 1 <= len(site_dims)):
            raise FormatError(
                f"instance: term {t_idx} window [{start}..{start + window - 1}] does not "
                f"fit a chain of {len(site_dims)} sites")
        side = math.prod(site_dims[start - 1:start - 1 + window])
        op = _decode_matrix(_require(tdoc, "matrix", f"instance term {t_idx}"),
                            side, f"instance term {t_idx} matrix")
        terms.append((start, op))
    temperature = _decode_float(_require(doc, "temperature", "instance"),
                                "instance temperature")
    alpha = _decode_float(_require(doc, "alpha", "instance"), "instance alpha")
    beta = _decode_float(_require(doc, "beta", "instance"), "instance beta")
    try:
        hamiltonian = sc.LocalHamiltonian(site_dims, terms)
        return sc.FreeEnergyInstance(hamiltonian=hamiltonian, temperature=temperature,
                                     alpha=alpha, beta_threshold=beta)
    except (ValidationError, UsageError) as exc:
        raise FormatError(f"instance: {exc}") from exc


def serialize_instance(instance: sc.FreeEnergyInstance) -> bytes:
    doc = {
        "site_dims": list(instance.hamiltonian.site_dims),
        "terms": [
            {"start": start, "window": width, "matrix": _encode_matrix(op)}
            for start, width, op in instance.hamiltonian.supports()
        ],
        "temperature": _finite(instance.temperature),
        "alpha": _finite(instance.alpha),
        "beta": _finite(instance.beta_threshold),
    }
    return _canonical_bytes(doc)


# ---------------------------------------------------------------------------
# verifier


def _as_mpdo(witness) -> mp.MarkovianMpdo:
    return witness.mpdo if isinstance(witness, WitnessDocument) else witness


def verify(instance: sc.FreeEnergyInstance, witness, policy: str = "sound",
           tol_cptp: float = TOL_CPTP) -> Verdict:
    """Check a witness against an instance and decide.

    Wellformedness validates the initial state and every channel at
    ``tol_cptp`` (the verifier's trusted configuration). For a wellformed
    witness the per-site defects and the certified free-energy upper bound
    are computed; acceptance compares the bound against the policy's
    threshold: ``beta`` under "sound", the midpoint of the promise gap
    under "midpoint".
    """
    if policy not in POLICIES:
        raise UsageError(f"unknown policy {policy!r}; expected one of {POLICIES}")
    m = _as_mpdo(witness)
    blocked_h = sc.block_hamiltonian(instance.hamiltonian, m.site_dims)
    threshold = (instance.beta_threshold if policy == "sound"
                 else (instance.alpha + instance.beta_threshold) / 2.0)

    diagnostics = []
    try:
        sp.DensityMatrix(m.initial.matrix, m.initial.dims)
    except ValidationError as exc:
        diagnostics.append(f"initial state: {exc}")
    for k, phi in enumerate(m.channels):
        try:
            cp, tp = phi.cp_defect(), phi.tp_defect()
        except ValidationError as exc:
            diagnostics.append(f"channel at site {k + 1}: {exc}")
            continue
        if cp > tol_cptp or tp > tol_cptp:
            diagnostics.append(
                f"channel at site {k + 1}: CP defect {cp:.3e}, TP defect {tp:.3e} "
                f"exceed tolerance {tol_cptp:.1e}")
    if diagnostics:
        return Verdict(wellformed=False, epsilon_max=None, free_energy_upper=None,
                       threshold_used=threshold, accepted=False,
                       diagnostics=tuple(diagnostics))

    value, report = mp.free_energy_upper_bound(m, blocked_h, instance.temperature)
    if not report.certified:
        diagnostics.append(
            f"epsilon_max {report.epsilon_max!r} exceeds 1/2: entropy bound not "
            f"certified, no finite free-energy bound claimed")
    accepted = bool(value <= threshold)
    return Verdict(wellformed=True, epsilon_max=report.epsilon_max,
                   free_energy_upper=value, threshold_used=threshold,
                   accepted=accepted, diagnostics=tuple(diagnostics))


def round_witness(witness, bits: int) -> tuple[mp.MarkovianMpdo, float]:
    """Round every component of a witness to ``bits`` fractional bits.

    Returns the rounded chain and the accumulated trace-norm budget
    ``||rho1 - rho1~||_1 + sum_i d_in ||rho_Phi_i - rho_Phi_i~||_1``, an
    upper bound on the trace distance between the two contractions.
    """
    bits = int(bits)
    if bits < 8:
        raise UsageError(f"bits must be >= 8 for witness rounding, got {bits}")
    m = _as_mpdo(witness)
    initial = ch.round_density_matrix(m.initial, bits)
    budget = sp.trace_norm(m.initial.matrix - initial.matrix)
    rounded_channels = []
    for phi in m.channels:
        phi_r, part = ch.round_channel(phi, bits)
        rounded_channels.append(phi_r)
        budget += part
    return mp.MarkovianMpdo(initial, rounded_channels), float(budget)
