"""Age-optimal threshold policies for energy-harvesting sensors with finite batteries."""

from .core_model import (
    AgeAccumulator,
    BatteryState,
    EnergyCausalityError,
    RechargeModel,
    ThresholdPolicy,
    TimeRegressionError,
    accumulate_age,
    age_area,
    battery_step,
    next_update_time,
)
from .dinkelbach import BracketError, RootResult, find_root
from .epoch import (
    EpochSample,
    ObjectiveEstimate,
    SolveBudget,
    estimate_objective,
    generic_solve,
    independence_diagnostic,
    simulate_epoch_ibr,
    simulate_epoch_rbr,
)
from .ibr import IbrSolution, ibr_x1, ibr_x2, ibr_x3, p4_ibr, solve_ibr
from .rbr import RbrSolution, f_sequence, p_rbr, rbr_epoch_schedule, solve_rbr
from .sim import (
    BatteryAwareAdaptive,
    BestEffortUniform,
    MarkovOnOff,
    OptimalThreshold,
    Poisson,
    SimResult,
    gen_arrivals,
    monte_carlo,
    run_policy,
)

__version__ = "0.1.0"
