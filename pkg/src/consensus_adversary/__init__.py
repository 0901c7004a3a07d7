"""Consensus averaging under two optimal adversarial attacks: link breaking
ranked by dissipated power, and power-capped noise injection synthesized from
a contraction fixed point of the co-state equation."""

from .dynamics import (Kernel, TimeGrid, Trajectory, average_and_disagreement,
                       matrix_exponential, objective, propagate)
from .link_attack import (Attack1Outcome, SweepResult, costate_backward,
                          edge_power, forward_backward_sweep, greedy_control,
                          simulate_attack1, switching_functions,
                          verify_greedy_mp_consistency, verify_scale_invariance)
from .noise_attack import (Attack2Outcome, ContractionSetup,
                           baseline_constant_control, contraction_setup,
                           costate_fixed_point, default_seed, g_term,
                           lagrange_multiplier,
                           optimal_noise, simulate_attack2)
from .scenario import (LinkAttackSpec, NoiseAttackSpec, ScenarioConfig,
                       ScenarioError, load_scenario, paper_k4_scenario,
                       paper_k4_topology, save_scenario, write_report)
from .topology import (LinkControl, NetworkTopology, TopologyError,
                       build_system_matrix, connected_components,
                       min_cut_size, pair_to_slot, slot_to_pair)

__version__ = "0.1.0"
