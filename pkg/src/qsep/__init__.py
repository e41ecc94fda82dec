"""Robustness certificates for matrix and LTI feedback loops.

Constructive equivalences between structured feedback uncertainty
(scaling, congruence, rotation, unitary) and structured separation
multipliers (phasal, gain), with adversarial witness construction and
randomized falsification.
"""

__version__ = "0.1.0"

from . import _kernels as kernels
from .adversary import Witness, destabilize, falsify_random, haar_unitary
from .lti import (
    FrequencyCertificate,
    FrequencyGrid,
    StateSpace,
    allpass_first_order,
    check_iqc_sufficient,
    endpoint_congruence_check,
    feedback_stable,
    freq_response,
    necessity_multiplier,
    sweep_certificate,
)
from .matcore import (
    DEFAULT_TOL,
    Tolerances,
    accretivity_classify,
    nr_witness,
    numerical_range_boundary,
    principal_sqrt,
    stein_split,
)
from .phase import (
    PhaseProfile,
    classify_and_phases,
    phase_sum_condition,
    sectorial_factorize,
)
from .separation import (
    Form,
    Multiplier,
    SeparationReport,
    convert_form,
    graph_sep_check,
    verify_multiplier,
)
from .synthesis import (
    SynthesisResult,
    synth_gain_rotation,
    synth_gain_unitary,
    synth_phasal_congruence,
    synth_phasal_scaling,
)

__all__ = [
    "__version__",
    "kernels",
    "Witness",
    "destabilize",
    "falsify_random",
    "haar_unitary",
    "FrequencyCertificate",
    "FrequencyGrid",
    "StateSpace",
    "allpass_first_order",
    "check_iqc_sufficient",
    "endpoint_congruence_check",
    "feedback_stable",
    "freq_response",
    "necessity_multiplier",
    "sweep_certificate",
    "DEFAULT_TOL",
    "Tolerances",
    "accretivity_classify",
    "nr_witness",
    "numerical_range_boundary",
    "principal_sqrt",
    "stein_split",
    "PhaseProfile",
    "classify_and_phases",
    "phase_sum_condition",
    "sectorial_factorize",
    "Form",
    "Multiplier",
    "SeparationReport",
    "convert_form",
    "graph_sep_check",
    "verify_multiplier",
    "SynthesisResult",
    "synth_gain_rotation",
    "synth_gain_unitary",
    "synth_phasal_congruence",
    "synth_phasal_scaling",
]
