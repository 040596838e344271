"""Write-process entanglement source at the emitting node.

A weak write pulse scatters a photon into one of two time bins (early or
late) while leaving a matching collective excitation in one of two
spin-wave modes.  The emitted joint state is, to lowest order, the
maximally entangled pair

    (|dn>|E> + e^{-i phi(t)} |up>|L>) / sqrt(2)

where the relative phase precesses at the differential Zeeman rate set
by the bias field.  Higher-order terms (two excitations in one bin, or
one in each) are retained up to the configured Fock cutoff because they
are the dominant intrinsic noise of the protocol.

Branch probabilities use the convention that the single-pair
probability is exactly ``chi``; the vacuum amplitude absorbs whatever
is left after the retained ladder, and anything beyond the cutoff is
counted as unretrievable (a negligible O(chi^3) correction).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import dualrail
from .constants import CODATA, PhysicalConstants
from .qcore import DensityMatrix, post_select

ATOM_VACUUM = "g"
ATOM_MODE1 = "d"   # spin-wave mode paired with the early bin
ATOM_MODE2 = "u"   # spin-wave mode paired with the late bin
PHOTON_VACUUM = "vac"
PHOTON_MODE1 = "E"
PHOTON_MODE2 = "L"


class SourceConfigError(ValueError):
    """Raised for physically inconsistent source parameters."""


@dataclass(frozen=True)
class SourceParams:
    """Knobs of the write process.

    Attributes:
        chi: probability of emitting exactly one photon/spin-wave pair
            per write attempt.
        phi0: initial relative phase between the two branches (rad).
        bias_field_gauss: bias magnetic field driving the phase
            precession between the spin-wave modes.
        fock_cutoff: maximum total excitation number retained per side.
        double_amp_scale: multiplier on the within-bin double-excitation
            amplitude relative to the uncorrelated-ladder value 1.0.
            This is a calibration parameter, not a measured quantity.
        write_imbalance: fractional asymmetry of the two write pulses;
            0 gives a balanced superposition.
        collection: probability that the emitted write photon ends up in
            the outgoing collection mode.  The default is fixed so that
            chi x collection x channel efficiency x mean storage map-in
            reproduces the published entangling efficiency of 3.1e-4.
    """

    chi: float = 0.054
    phi0: float = 0.0
    bias_field_gauss: float = 6.93e-3
    fock_cutoff: int = 2
    double_amp_scale: float = 1.0
    write_imbalance: float = 0.0
    collection: float = 0.29622295

    def __post_init__(self) -> None:
        if not 0.0 < self.chi < 1.0:
            raise SourceConfigError(f"chi must be in (0, 1), got {self.chi}")
        if self.chi * (1.0 + self.chi) >= 1.0:
            raise SourceConfigError(
                f"chi={self.chi} too large for a subnormalized truncated ladder"
            )
        if self.fock_cutoff < 2:
            raise SourceConfigError(
                f"fock_cutoff must be at least 2, got {self.fock_cutoff}"
            )
        if self.double_amp_scale < 0.0:
            raise SourceConfigError("double_amp_scale must be non-negative")
        if not -1.0 < self.write_imbalance < 1.0:
            raise SourceConfigError(
                f"write_imbalance must be in (-1, 1), got {self.write_imbalance}"
            )
        if not 0.0 <= self.collection <= 1.0:
            raise SourceConfigError(
                f"collection must be in [0, 1], got {self.collection}"
            )


@dataclass
class AtomPhotonState:
    """Joint atom-photon state right after a write attempt.

    ``state`` lives on (atomic sector) x (photonic sector), the atomic
    factor first.  ``ladder_weight`` is the total probability assigned
    to the modeled excitation branches (vacuum excluded); it is bounded
    by 1 with the remainder sitting in the vacuum amplitude.
    """

    state: DensityMatrix
    cutoff: int
    ladder_weight: float

    @property
    def atom_dim(self) -> int:
        return dualrail.sector_dim(self.cutoff)

    @property
    def photon_dim(self) -> int:
        return dualrail.sector_dim(self.cutoff)

    def excitation_probabilities(self) -> np.ndarray:
        """Probability of each total photon number 0..cutoff."""
        occs = dualrail.occupations(self.cutoff)
        pops = self.state.probabilities().reshape(self.atom_dim, self.photon_dim)
        photon_pops = pops.sum(axis=0)
        out = np.zeros(self.cutoff + 1)
        for j, (n1, n2) in enumerate(occs):
            out[n1 + n2] += photon_pops[j]
        return out


def atom_labels(cutoff: int) -> tuple[str, ...]:
    return dualrail.sector_labels(cutoff, ATOM_VACUUM, ATOM_MODE1, ATOM_MODE2)


def photon_labels(cutoff: int) -> tuple[str, ...]:
    return dualrail.sector_labels(cutoff, PHOTON_VACUUM, PHOTON_MODE1, PHOTON_MODE2)


def joint_labels(cutoff: int) -> tuple[str, ...]:
    return tuple(
        f"{a},{p}" for a in atom_labels(cutoff) for p in photon_labels(cutoff)
    )


def evolution_phase(t: float, p: SourceParams,
                    constants: PhysicalConstants = CODATA) -> float:
    """Relative phase phi(t) between the two branches after storage time t.

    phi(t) = mu_B * B * t / hbar + phi0, with B the bias field in gauss.
    """
    if t < 0.0:
        raise ValueError(f"storage time must be non-negative, got {t}")
    return constants.zeeman_rate_rad_per_s_gauss * p.bias_field_gauss * t + p.phi0


def _bin_amplitudes(chi_bin: float, cutoff: int) -> list[float]:
    """Amplitude ladder within one time bin: a_k for k = 0..cutoff.

    a_0 is left at 1 here; the joint vacuum amplitude is fixed at the
    end so the retained branches keep their exact probabilities.  The
    double-excitation scale is applied per total excitation number when
    the bins are combined, so that it damps every multi-pair event,
    within-bin and across-bin alike.
    """
    return [chi_bin ** (k / 2.0) for k in range(cutoff + 1)]


def atom_photon_state(p: SourceParams,
                      constants: PhysicalConstants = CODATA) -> AtomPhotonState:
    """Build the joint density matrix of one write attempt at t = 0.

    The two bins are independent ladders with single-pair probability
    chi/2 each (modulo write imbalance), correlated excitation-by-
    excitation between the photonic bin and its spin-wave mode.  The
    relative phase of the late branch is phi0 per late excitation.
    """
    cutoff = p.fock_cutoff
    dim = dualrail.sector_dim(cutoff)
    idx = dualrail.index_of(cutoff)
    chi_e = p.chi * (1.0 + p.write_imbalance) / 2.0
    chi_l = p.chi * (1.0 - p.write_imbalance) / 2.0
    amps_e = _bin_amplitudes(chi_e, cutoff)
    amps_l = _bin_amplitudes(chi_l, cutoff)

    ket = np.zeros(dim * dim, dtype=complex)
    ladder_weight = 0.0
    for ke in range(cutoff + 1):
        for kl in range(cutoff + 1 - ke):
            if ke == 0 and kl == 0:
                continue
            amp = (amps_e[ke] * amps_l[kl]
                   * p.double_amp_scale ** max(ke + kl - 1, 0)
                   * np.exp(-1j * p.phi0 * kl))
            j = idx[(ke, kl)]
            ket[j * dim + j] = amp
            ladder_weight += abs(amp) ** 2
    if ladder_weight >= 1.0:
        raise SourceConfigError(
            f"excitation ladder weight {ladder_weight:.4f} reaches 1; "
            "lower chi or double_amp_scale"
        )
    ket[0] = math.sqrt(1.0 - ladder_weight)

    mat = np.outer(ket, ket.conj())
    state = DensityMatrix(mat, joint_labels(cutoff))
    return AtomPhotonState(state=state, cutoff=cutoff, ladder_weight=ladder_weight)


def writeout_rate(p: SourceParams, coupling: float | None = None) -> float:
    """Probability per attempt that a collected write photon leaves the node."""
    c = p.collection if coupling is None else coupling
    if not 0.0 <= c <= 1.0:
        raise ValueError(f"coupling must be in [0, 1], got {c}")
    return p.chi * c


def single_excitation_block(s: AtomPhotonState) -> DensityMatrix:
    """Post-select the one-spin-wave x one-photon qubit pair.

    Returns a 4-dimensional state ordered (dn,E), (dn,L), (up,E),
    (up,L); its weight is the branch probability of that sector.
    """
    dim = dualrail.sector_dim(s.cutoff)
    a1, a2 = dualrail.qubit_indices(s.cutoff)
    indices = [a1 * dim + a1, a1 * dim + a2, a2 * dim + a1, a2 * dim + a2]
    return post_select(s.state, indices)
