"""Coverage certification for mobile planar sensor networks.

Builds time-varying alpha complexes from sensor positions (or pairwise
distances alone), extracts boundary cycles through a fat-graph rotation
system, tracks which holes may still contain an undetected intruder, and
measures detection-time statistics for Brownian, billiard, and collective
motion models.
"""

__version__ = "0.1.0"

from .geometry import (AlphaComplex, DegenerateSimplex, InconsistentDistances,
                       LocalDistanceTable, alpha_complex,
                       alpha_complex_delaunay,
                       alpha_complex_from_local_distances, circumdisk,
                       local_distance_table, rotation_data)
from .topology import (Dart, FatGraph, RotationMismatch, boundary_cycles,
                       build_fat_graph, canonicalize, cycle_vertices,
                       vertex_components)
from .evasion import (MissingLabel, NoFenceCycle, ReebEvent, StateSnapshot,
                      StepDiagnostics, TransitionKind, adaptive_step,
                      build_snapshot, case_based_update, classify_transition,
                      evasion_possible, initial_labelling,
                      snapshot_from_arrays, transition_signature,
                      update_labelling, update_labelling_powerdown)
from .motion import (BilliardParams, BrownianParams, DOrsognaParams,
                     InvalidRadius, MotionState, ScriptedMotion,
                     fence_positions, init_network, make_model)
from .harness import (ResolutionTooCoarse, SimulationConfig, SimulationResult,
                      StatsRow, brute_force_oracle, monte_carlo_sweep,
                      run_simulation, write_outputs)
