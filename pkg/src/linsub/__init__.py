"""Linear-optical synthesis of conditional operators on bosonic modes."""

from .errors import (DegreeError, DimensionError, DomainError, InfeasibleError, LinsubError,
                     NodeCollisionError, SingularParameterError)
from .fock import (FockSpace, OperatorMatrix, StateVector, annihilation, coherent_state, creation,
                   fock_state, identity, number, phase_aligned_distance, product_state, vacuum)
from .optics import (BALANCED, BALANCED_MINUS, IDENTITY_PARAMS, BeamSplitterParams, Network,
                     bs_factorized, bs_unitary, compose_params, heisenberg_residual, phase_shifter)
from .conditional import (DetectionPattern, DeviceSpec, conditional_operator, device_closed_form,
                          device_operator, success_probability)
from .resource import (CLONERS, PreparedResource, ResourceSpec, build_resource, optimal_alpha,
                       resource_probability, resource_state)
from .synthesis import (JointDevice, KerrProduct, MonomialSpec, Stage, SynthesisSchedule,
                        compose_schedule, exponential_zn_schedule, general_ladder,
                        photon_number_schedule, roots_to_schedule)
from .applications import (KerrTarget, PermutationSpec, fidelity, n_mode_mirror, prep_multiphoton,
                           synthesize_cross_kerr, teleport_identity)
from .ordering import (power_of_n_from_s_ordered, s_ordered_exponential, s_ordered_power_of_n,
                       round_trip_residuals)

__version__ = "0.1.0"
