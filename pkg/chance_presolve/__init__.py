from .norm_type import NormType  # noqa
from .instance import (ScenarioSet, PBPInstance, ChanceEvaluation,  # noqa
                       InstanceError, validate, normalize, chance_check,
                       load_instance, dump_instance)
from .geometry import (Hull, SeparabilityVerdict, hull, contains,  # noqa
                       vertex_indices, enclosed_indices, separability_check)
from .convex_oracle import (ProjectionResult, ProjectionStatus,  # noqa
                            BigMBound, UnsupportedNormError,
                            OracleInconsistencyError, project, project_ball,
                            big_m, min_distance_lb)
from .minimal_subsets import (MinimalSubsetFamily, OracleError,  # noqa
                              is_minimal, enumerate_equiprobable,
                              next_minimal_subset, iterate_minimal_subsets,
                              reduce_to_minimal, brute_force_solve)
from .presolve import (PartitionState, Bounds, ValidInequality,  # noqa
                       InequalityKind, Certificate, CertificateKind,
                       PresolveConfig, PresolveReport,
                       PresolveContradictionError, run_pipeline,
                       replay_certificate)
from .solve_result import SolveResult, SolveStatus  # noqa
from .solver import (SolverConfig, BBNode, solve, greedy_incumbent,  # noqa
                     verify)
from .bench import (BenchConfig, BenchConfigError, BenchRecord,  # noqa
                    BenchTable, SolveMode, generate_instance, run,
                    render_table)

__version__ = "1.0.0"
__status__ = "Production"
