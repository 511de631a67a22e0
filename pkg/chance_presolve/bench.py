from typing import List, Optional, Dict, Iterable
from enum import Enum
import time

import numpy

from .instance import ScenarioSet, PBPInstance
from .norm_type import NormType
from .minimal_subsets import brute_force_solve, ENUMERATION_LIMIT
from .presolve import run_pipeline, PresolveConfig
from .solver import solve, SolverConfig
from .solve_result import SolveResult, SolveStatus
from .serialization import TableSerialization, T_table, json_float
from .ccp_utils import T_logger, silent_if_none

# Overall time limits (seconds) per dimension
BENCH_TIME_LIMITS: Dict[int, float] = {2: 500.0, 3: 720.0}
# R = RADIUS_FACTOR * p * max ||xi||_inf
RADIUS_FACTOR: float = 23.0 / 25.0
# R_bar = BOX_FACTOR * max ||xi||_inf
BOX_FACTOR: float = 2.0
# Absolute slack under which the upper bound equals the optimum
GAP_TOLERANCE: float = 1e-9


class BenchConfigError(ValueError):
    """Raised when the benchmark configuration is not valid."""
    pass


class SolveMode(Enum):
    """How a trial is solved."""
    # Presolve pipeline, then branch-and-bound with the report
    presolve = "presolve"
    # Branch-and-bound without presolve
    direct = "direct"
    # Enumeration of the minimal subsets
    brute = "brute"


def generate_instance(p: int,
                      n: int,
                      tau: float,
                      seed: int,
                      /, *,  # noqa E999
                      random_mass: bool = False,
                      o_tilde: Optional[NormType] = None) -> PBPInstance:
    """Draw a random instance from the seeded PCG64 generator.

    Coordinates are i.i.d. standard normal scaled to the unit max-norm
        radius; the ball radius is 23/25 * p and the box radius 2 (both
        relative to the largest scenario coordinate) and x_bar is uniform
        in the box.

    Args:
        p (int): Dimension, 2 or 3.
        n (int): Number of scenarios.
        tau (float): Risk level.
        seed (int): Seed of the generator.
        random_mass (bool): Dirichlet distributed probabilities instead of
            the equiprobable ones.
        o_tilde (Optional[NormType]): Ball norm, None for L1.

    Returns:
        PBPInstance: The instance (objective norm L2).
    """
    # Quick sanity check:
    if p not in (2, 3):
        raise BenchConfigError("Dimension p has to be 2 or 3!")
    if n < 1:
        raise BenchConfigError("At least one scenario is required!")
    generator = numpy.random.Generator(numpy.random.PCG64(seed))
    points = generator.standard_normal((n, p))
    scale = float(numpy.max(numpy.abs(points)))
    if scale > 0:
        points = points / scale
    radius_inf = float(numpy.max(numpy.abs(points))) or 1.0
    if random_mass:
        probs = generator.dirichlet(numpy.ones(n))
    else:
        probs = numpy.full(n, 1.0 / n)
    box_radius = BOX_FACTOR * radius_inf
    x_bar = generator.uniform(-box_radius, box_radius, p)
    return PBPInstance(
        ScenarioSet(p, points, probs),
        x_bar,
        radius=RADIUS_FACTOR * p * radius_inf,
        box_radius=box_radius,
        tau=tau,
        objective_norm=NormType.L2,
        constraint_norm=NormType.L1 if o_tilde is None else o_tilde
    )


class BenchConfig(object):
    """Configuration of a benchmark run (one solve mode).

    Attributes:
        p (int): Dimension.
        n (int): Number of scenarios.
        tau (float): Risk level.
        mode (SolveMode): How every trial is solved.
        seed (int): Seed of the first trial (trial t uses seed + t).
        time_limit (float): Overall seconds per trial.
        trials (int): Number of trials.
        out_path (Optional[str]): Target of the report, None for none.
        random_mass (bool): Dirichlet probabilities.
        o_tilde (NormType): Ball norm of the instances.
    """

    def __init__(self, *,
                 p: int,
                 n: int,
                 tau: float,
                 mode: SolveMode = SolveMode.presolve,
                 seed: int = 0,
                 time_limit: Optional[float] = None,
                 trials: int = 5,
                 out_path: Optional[str] = None,
                 random_mass: bool = False,
                 o_tilde: NormType = NormType.L1):
        mode = SolveMode(mode)
        o_tilde = NormType(o_tilde)
        # Quick sanity check:
        if p not in (2, 3):
            raise BenchConfigError("Dimension p has to be 2 or 3!")
        if n < 1:
            raise BenchConfigError("At least one scenario is required!")
        if not 0.0 < tau < 1.0:
            raise BenchConfigError("Risk level tau has to lie in (0,1)!")
        if trials < 1:
            raise BenchConfigError("At least one trial is required!")
        if time_limit is None:
            time_limit = BENCH_TIME_LIMITS[p]
        if not time_limit > 0:
            raise BenchConfigError("Time limit has to be positive!")
        if mode is SolveMode.brute and n > ENUMERATION_LIMIT:
            raise BenchConfigError(f"Brute force accepts at most "
                                   f"{ENUMERATION_LIMIT} scenarios!")
        if o_tilde not in (NormType.L1, NormType.Linf):
            raise BenchConfigError("Ball norm has to be L1 or Linf!")
        self.p: int = p
        self.n: int = n
        self.tau: float = tau
        self.mode: SolveMode = mode
        self.seed: int = seed
        self.time_limit: float = float(time_limit)
        self.trials: int = trials
        self.out_path: Optional[str] = out_path
        self.random_mass: bool = random_mass
        self.o_tilde: NormType = o_tilde

    def instance(self, trial: int) -> PBPInstance:
        """Instance of the trial (identical across the modes)."""
        return generate_instance(self.p, self.n, self.tau, self.seed + trial,
                                 random_mass=self.random_mass,
                                 o_tilde=self.o_tilde)

    def to_dictionary(self) -> dict:
        return {
            "p": self.p, "n": self.n, "tau": self.tau,
            "mode": self.mode.value, "seed": self.seed,
            "time_limit": self.time_limit, "trials": self.trials,
            "random_mass": self.random_mass, "o_tilde": self.o_tilde.value
        }


class TrialSummary(object):
    """Outcome of one trial.

    Attributes:
        seed (int): Seed of the instance.
        result (Optional[SolveResult]): Solver output, None on failure.
        presolve_time (float): Seconds spent in presolve.
        error (Optional[str]): Failure message.
    """

    def __init__(self,
                 seed: int,
                 /, *,  # noqa E999
                 result: Optional[SolveResult] = None,
                 presolve_time: float = 0.0,
                 error: Optional[str] = None):
        self.seed: int = seed
        self.result: Optional[SolveResult] = result
        self.presolve_time: float = presolve_time
        self.error: Optional[str] = error

    @property
    def solved(self) -> bool:
        return self.result is not None and self.result.solved

    @property
    def upper(self) -> float:
        """Best upper bound of the trial (inf if unknown)."""
        if self.result is None:
            return numpy.inf
        return self.result.upper

    @property
    def total_time(self) -> float:
        if self.result is None:
            return self.presolve_time
        return self.presolve_time + self.result.wall_time

    def to_dictionary(self) -> dict:
        return {
            "seed": self.seed,
            "result": None if self.result is None
            else self.result.to_dictionary(),
            "presolve_ms": int(round(self.presolve_time * 1000)),
            "error": self.error
        }


def relative_gap(upper: float, optimum: float) -> float:
    """Relative gap (UB - F*) / F*, zero when the bound is attained."""
    if upper - optimum <= GAP_TOLERANCE * max(1.0, abs(optimum)):
        return 0.0
    if optimum <= 0 or not numpy.isfinite(upper):
        return numpy.inf
    return (upper - optimum) / optimum


class BenchRecord(object):
    """Trials of one benchmark configuration with the aggregates.

    Attributes:
        config (BenchConfig): The configuration.
        trials (List[TrialSummary]): Summary of each trial.
    """

    def __init__(self, config: BenchConfig, trials: List[TrialSummary]):
        self.config: BenchConfig = config
        self.trials: List[TrialSummary] = trials

    @property
    def solved_count(self) -> int:
        return sum(1 for trial in self.trials if trial.solved)

    @property
    def average_time(self) -> Optional[float]:
        """Mean time of the solved trials (None if none was solved)."""
        times = [trial.total_time for trial in self.trials if trial.solved]
        if not times:
            return None
        return float(numpy.mean(times))

    @property
    def total_nodes(self) -> int:
        return sum(trial.result.nodes_explored for trial in self.trials
                   if trial.result is not None)

    def average_gap(self,
                    optima: Optional[Dict[int, float]] = None
                    ) -> Optional[float]:
        """Mean relative gap of the trials against the reference optima.

        Args:
            optima (Optional[Dict[int, float]]): Optimum of each trial seed,
                None to use the values of this record.

        Returns:
            Optional[float]: The mean, None if no trial has a reference.
        """
        if optima is None:
            optima = reference_optima([self])
        gaps = [relative_gap(trial.upper, optima[trial.seed])
                for trial in self.trials
                if trial.error is None and trial.seed in optima]
        if not gaps:
            return None
        return float(numpy.mean(gaps))

    def to_dictionary(self) -> dict:
        return {
            "config": self.config.to_dictionary(),
            "trials": [trial.to_dictionary() for trial in self.trials],
            "solved": self.solved_count,
            "average_time": json_float(self.average_time),
            "average_gap": json_float(self.average_gap())
        }


def reference_optima(records: Iterable[BenchRecord]) -> Dict[int, float]:
    """Best value of each trial seed over the records.

    Proven optima win; trials never solved fall back to the best upper bound.
    """
    solved: Dict[int, float] = {}
    best: Dict[int, float] = {}
    for record in records:
        for trial in record.trials:
            if trial.error is not None:
                continue
            best[trial.seed] = min(best.get(trial.seed, numpy.inf),
                                   trial.upper)
            if trial.solved:
                solved[trial.seed] = min(solved.get(trial.seed, numpy.inf),
                                         trial.result.value)
    return {seed: solved.get(seed, value) for seed, value in best.items()
            if numpy.isfinite(solved.get(seed, value))}


def _run_trial(config: BenchConfig, trial: int,
               warning_logger: T_logger) -> TrialSummary:
    seed = config.seed + trial
    instance = config.instance(trial)
    if config.mode is SolveMode.brute:
        return TrialSummary(seed, result=brute_force_solve(
            instance, warning_logger=warning_logger))
    if config.mode is SolveMode.direct:
        return TrialSummary(seed, result=solve(instance, None, SolverConfig(
            time_limit=config.time_limit, warning_logger=warning_logger)))
    start = time.perf_counter()
    presolve_config = PresolveConfig(
        separability_time_limit=min(config.time_limit,
                                    PresolveConfig().time_limit(config.p)),
        warning_logger=warning_logger)
    report = run_pipeline(instance, presolve_config)
    presolve_time = time.perf_counter() - start
    remaining = config.time_limit - presolve_time
    if remaining <= 0:
        bounds = report.bounds
        return TrialSummary(seed, result=SolveResult(
            SolveStatus.time_limit, bounds.upper, minimizer=bounds.incumbent,
            lower=bounds.lower, upper=bounds.upper),
            presolve_time=presolve_time)
    result = solve(instance, report, SolverConfig(
        time_limit=remaining, warning_logger=warning_logger))
    return TrialSummary(seed, result=result, presolve_time=presolve_time)


def run(config: BenchConfig,
        /, *,  # noqa E999
        warning_logger: Optional[T_logger] = None) -> BenchRecord:
    """Solve every trial of the configuration.

    Presolve time is charged against the overall time limit of a trial.
        Failures are recorded per trial and the run continues.

    Args:
        config (BenchConfig): The configuration.
        warning_logger (Optional[Callable[[str], None]]): Function that
            logs the warnings (or None if skipped).

    Returns:
        BenchRecord: Summary of the trials.
    """
    warning_logger = silent_if_none(warning_logger)
    summaries: List[TrialSummary] = []
    for trial in range(config.trials):
        try:
            summaries.append(_run_trial(config, trial, warning_logger))
        except (ValueError, RuntimeError) as error:
            warning_logger(f"Trial with seed {config.seed + trial} failed "
                           f"({config.mode.value}): {error}")
            summaries.append(TrialSummary(config.seed + trial,
                                          error=str(error)))
    return BenchRecord(config, summaries)


def _percent(value: Optional[float]) -> Optional[str]:
    if value is None:
        return None
    if value == 0:
        return "0%"
    if not numpy.isfinite(value):
        return "inf"
    return f"{value * 100:.2f}%"


class BenchTable(TableSerialization):
    """Comparison table of the benchmark records: one row per record.

    Attributes:
        records (List[BenchRecord]): Rows of the table.
    """
    HEADER: List[str] = ["method", "p", "tau", "N", "avg time solved [s]",
                         "# solved", "avg (UB-F*)/F*", "nodes"]

    def __init__(self,
                 records: List[BenchRecord],
                 /, *,  # noqa E999
                 warning_logger: Optional[T_logger] = None):
        super().__init__(warning_logger=warning_logger)
        # Quick sanity check:
        if not records:
            raise ValueError("Table needs at least one record!")
        self.records: List[BenchRecord] = list(records)

    def to_2d_list(self) -> T_table:
        optima = reference_optima(self.records)
        table: T_table = [list(self.HEADER)]
        for record in self.records:
            config = record.config
            average_time = record.average_time
            table.append([
                config.mode.value,
                config.p,
                config.tau,
                config.n,
                None if average_time is None else round(average_time, 3),
                f"{record.solved_count}/{len(record.trials)}",
                _percent(record.average_gap(optima)),
                record.total_nodes
            ])
        return table


def render_table(records: List[BenchRecord]) -> str:
    """Render the records as the fixed width text table."""
    return BenchTable(records).to_text()
