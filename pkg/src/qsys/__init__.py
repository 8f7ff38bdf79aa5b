"""qsys: quantum gates and input-output systems as transfer functions.

Build quantum gates from reactance matrices through the Cayley transform,
wire them into circuits, close feedback loops into dynamical systems,
reproduce every transfer function both classically (state space) and by
S-matrix resummation (Dyson equation, self-energies), and verify the
structural theorems (Pi-orthogonality, pole-zero symmetry) numerically.
"""

from .polyrat import Poly, RatFun, RatMat, poly_roots, rat_equal, s, tilde
from .statespace import (StateSpace, cascade, feedback_lft, from_ratfun,
                         from_ratmat, inverse, is_controllable, is_observable,
                         minimal_realization, parallel, poles, similarity,
                         ss_tilde, transfer_function, transmission_zeros)
from .gates import (AffineMap, Reactance, cayley, check_gauge, compose_bch,
                    compose_cayley, conjugate_coefficients,
                    displacement_feedback, displacement_feedforward,
                    eliminate_internal, from_quadrature, interaction_coefficient,
                    inverse_cayley, lift_to_doubled, make_gate, to_quadrature)
from .closure import (ClosedSystem, LoopSpec, catalog_system, close,
                      feedback_connection, loop_propagator, toeplitz_chain,
                      u1_dynamic_propagator, with_termination)
from .smatrix import (ContractionTable, SelfEnergy, contraction_table,
                      dressed_external, dyson, feedback_vertex_series,
                      linear_self_energy, off_diagonal_doubling, resum)
from .symmetry import (PiForm, embed_self_energy, is_pi_orthogonal,
                       pi_certificate, pole_zero_symmetry,
                       self_energy_state_conditions,
                       self_energy_symmetry_conditions)
from .chainscatter import (ChainRep, chain, chain_inverse, chain_statespace,
                           dual_chain, dual_chain_statespace, dual_homographic,
                           homographic, homographic_statespace)
from .nonlinear import (NonlinearParams, SpinParams, correlation_self_energy,
                        damped_oscillator, first_order_self_energy,
                        flip_channel, gw_sensitivity, kraus_unital,
                        n_quantum_decay_vertex, nonlinear_pole_formula,
                        nonlinear_poles, nonlinear_transfer,
                        qnd_exponential_fusion, qnd_fusion_amplitude,
                        second_order_self_energy, spin_decay_amplitude,
                        spin_in_cavity_transfer, spin_spin_exchange_amplitude,
                        spin_transfer, xx_su2_pair_amplitudes)

__all__ = [name for name in dir() if not name.startswith("_")]
__version__ = "0.1.0"
