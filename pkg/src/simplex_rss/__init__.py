"""Simplex runtime assurance under goal-aware RSS for a pull-over manoeuvre.

Subpackages and modules:

kinematics   exact/float longitudinal kinematics and scenario constants
rss          RSS distance, preconditions, goals and safety predicates
machines     guarded-event machines M40-M42 (stop at target), M30-M32 (lane change)
po           proof-obligation generation and randomized discharge
controller   AC strategies, baseline-controller schedules, decision module
harness      trace runner, violation detection, sweeps, CSV/JSON writers
extensions   multi-phase plans and S1/S2 predicates
config, cli  INI run configuration and the ``simplex-rss`` command
"""

from .errors import (ConfigError, ContractError, DomainError, FeatureError, ModelError,
                     PreconditionError, SimplexRSSError)
from .kinematics import (EXACT, FLOAT, ScenarioConstants, VehicleKinematics,
                         extrapolate_max_accel, plan_cycle, step_const_accel)
from .state import BCSchedule, Ctrl, PovState, WorldState, make_pov
from .rss import d_rss, env_holds, phi3, phi3_dm, phi3_machine, phi4
from .scenarios import SPEC_S3, SPEC_S4, SubscenarioSpec, get_spec, register_spec
from .machines import MACHINE_NAMES, build_machine
from .po import POKind, Status, Verdict, check_machines, check_pos, generate_pos, shrink
from .controller import (CLIP, SUBSTITUTE, Decision, MaxAccel, RandomAdmissible,
                         compute_schedule_s3, compute_schedule_s4, dm_decide, make_strategy,
                         simplex_cycle, simplex_step)
from .harness import (Lattice, Trace, TraceStatus, make_initial_state, run_trace,
                      sweep_initial_states)
from .extensions import MultiPhasePlan, Phase, plan_executor_step, s2_safety_pred

__version__ = "0.1.0"
