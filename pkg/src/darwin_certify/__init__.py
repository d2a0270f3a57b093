"""Certify classical objectivity and noncontextuality of quantum Darwinism channels."""
from .bounds import (Verdict, agreement_lower_bound, bph_deviation_bound, classical_objectivity_verdict,
                     distinguishability_bound, ic_contextuality_bound, projective_bound)
from .channels import (BroadcastSpec, FiniteEnvSpec, MeasureAndPrepareChannel, apply, choi,
                       finite_env_channel, is_ssb_form, make_broadcast, reduce_to_bob, simulate_finite_env)
from .ctx_bound import contextuality_distance_bound, diamond_distance, effect_constant
from .discrimination import DiscriminationInstance, agreement_probability, eta, helstrom_two, p_guess, pgm
from .ontology import (build_nc_model, check_context_respect, compare_bob_models, model_predict,
                       verify_reproduction)
from .qmath import Povm, PovmError, ValidationError
from .scenario import load_scenario
from .simplex_geometry import caratheodory_witness, is_affinely_independent, simplex_coordinates

__version__ = "0.1.0"
