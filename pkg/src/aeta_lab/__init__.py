"""Simulation toolkit for key-recovery analysis of the alpha-eta (Y-00) stream cipher.

Modules
-------
keystream  LFSR keystreams and running-key segmentation
channel    alpha-eta encryption and the heterodyne noise channel
inference  exact key posteriors, spurious keys, equivocation, mutual information
bounds     closed-form spurious-key bounds
attacks    MAP attack, unicity distance, majority vote over periods
cli        ``aeta-lab`` command-line front end
"""

from aeta_lab.attacks import (
    NOT_REACHED,
    AttackResult,
    majority_vote_attack,
    map_attack_success,
    unicity_distance,
)
from aeta_lab.channel import (
    CiphertextSeq,
    NoiseModel,
    PlaintextSource,
    SystemParams,
    decrypt_seq,
    encrypt_seq,
    sigma_from_photon_number,
)
from aeta_lab.inference import (
    CapError,
    EmptySupportError,
    avg_spurious,
    equivocation_identity_check,
    key_equivocation,
    key_posterior,
    per_symbol_info_U,
    pi_function,
    sequence_info,
    spurious_count,
    support_set,
)
from aeta_lab.keystream import LfsrSpec, dependency_distance, keystream_bits, period, running_key
from aeta_lab.kernels import BACKEND
from aeta_lab.montecarlo import Estimate

__version__ = "0.1.0"
