"""anyonsim: interferometric vs projective measurement of nonabelian anyons.

The package simulates anyonic systems described by multiplicity-free unitary
modular tensor categories: fusion-tree state spaces, a planar diagram
calculus, projective and asymptotic interferometric measurement channels,
and the forced-measurement ping-pong protocol that lets interferometers
reproduce projective measurement of composite charge.
"""

from .category import (CategoryError, CategorySpec, ChargeLabel, OmegaLoop,
                       builtin_names, check_pentagon, load_builtin,
                       load_category, monodromy, omega_coefficients,
                       resolve_category, smatrix_report, verify_detection)
from .diagrams import (Diagram, DiagramError, DiagramValue, evaluate_closed,
                       parse_diagram, reduce_open)
from .measure import (InterferometerRegion, MeasurementError,
                      MeasurementOutcome, int_decohere_unread, int_measure,
                      proj_measure)
from .rng import SplitMix64, derive_seed
from .states import (AnyonDensityMatrix, AnyonKet, FusionBasis,
                     charge_distribution, create_from_vacuum,
                     create_nested_from_vacuum, density_from_ket, f_move,
                     fuse_leaves, fusion_basis, reduced_suffix, snapshot)
from .protocols import (ProtocolError, ProtocolStats, Trajectory,
                        collect_stats, forced_measurement,
                        ket_only_simulation, run_script_density,
                        simulate_projective_on_group)

__version__ = "0.1.0"
