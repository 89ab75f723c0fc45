"""Numerical certification of approximate wavelet duals on Hardy spaces H^p, 0 < p <= 1."""

from __future__ import annotations

from .atoms import Atom, MoleculeDecomposition, hp_atomic_bound, make_atom, molecule_decompose, verify_appendix_c
from .czkernel import CZConstants, cz_constant, cz_from_values, kappa_alpha, sigma_alpha, tau_alpha, verify_kernel_bounds
from .errors import HpDualError
from .frameops import (
    CoefficientArray,
    DilationGrid,
    SampledSignal,
    SampleGrid,
    analyze,
    apply_U,
    expand,
    f02p_seqnorm,
    k_space_norm,
    neumann_invert,
    synthesize,
    weighted_seqnorm,
)
from .generators import (
    GeneratorFunction,
    GeneratorQuadruple,
    bandlimited_orthonormal_pair,
    check_hypotheses,
    load_generator,
    mexican_hat,
    meyer,
    n_of_p,
)
from .hardy import (
    CertificateInputs,
    CertificateReport,
    certify,
    certify_from_constants,
    constants_c1_c4,
    delta_of_b,
    moment_polynomials,
    mp_bound,
)
from .numerics import DecayEnvelope, EstimatedValue, integrate_line, lattice_sum, minimize_scalar

__version__ = "0.1.0"

__all__ = [
    "Atom", "CZConstants", "CertificateInputs", "CertificateReport", "CoefficientArray", "DecayEnvelope",
    "DilationGrid", "EstimatedValue", "GeneratorFunction", "GeneratorQuadruple", "HpDualError",
    "MoleculeDecomposition", "SampleGrid", "SampledSignal", "analyze", "apply_U", "bandlimited_orthonormal_pair",
    "certify", "certify_from_constants", "check_hypotheses", "constants_c1_c4", "cz_constant", "cz_from_values",
    "delta_of_b", "expand", "f02p_seqnorm", "hp_atomic_bound", "integrate_line", "k_space_norm", "kappa_alpha",
    "lattice_sum", "load_generator", "make_atom", "mexican_hat", "meyer", "minimize_scalar", "molecule_decompose",
    "moment_polynomials", "mp_bound", "n_of_p", "neumann_invert", "sigma_alpha", "synthesize", "tau_alpha",
    "verify_appendix_c", "verify_kernel_bounds", "weighted_seqnorm",
]
