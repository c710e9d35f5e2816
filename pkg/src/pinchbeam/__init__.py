"""Linear beamforming and element-wise position optimisation for
pinching-antenna systems (PASS), with a fixed hybrid-MIMO baseline."""

from .channel import (
    EffectiveChannel,
    PinchingLayout,
    effective_channel,
    make_layout,
    pi_coefficient,
    sample_users,
)
from .config import ScenarioConfig, dbm_to_watt, watt_to_dbm
from .downlink import dl_beamformer, dl_sumrate
from .errors import (
    ConstraintViolationError,
    DegenerateChannelError,
    DegenerateGeometryError,
    InvalidConfigError,
    PinchError,
    PlanFailedError,
    SchemeInfeasibleError,
    SingularChannelError,
    SingularUpdateError,
)
from .harness import ExperimentPlan, ResultRow, emit_results, load_config, run_plan
from .hmimo import baseline_channel, baseline_sumrate
from .optimizer import SweepResult, init_layout, run_sweep
from .uplink import ul_combiner, ul_sumrate

__version__ = "0.1.0"
