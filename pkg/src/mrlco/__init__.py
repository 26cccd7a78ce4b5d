"""Meta-RL computation offloading for multi-access edge computing.

A simulator for DAG task offloading across a user device, wireless channels,
and an edge host; deterministic scheduling baselines; and a seq2seq policy
trained with PPO inner loops plus a first-order meta-gradient outer loop.
"""

from .dag import (
    DagApp,
    GeneratorConfig,
    RankedDag,
    TaskProfile,
    compute_rank,
    embed_dag,
    generate_dag,
    generate_dataset,
    load_dataset,
    save_dataset,
)
from .errors import CapacityError, ConfigError, ProtocolError
from .sim import (
    EnvStep,
    OffloadEnv,
    ScheduleState,
    SystemParams,
    TaskLatencies,
    advance,
    evaluate_plan,
    task_latencies,
    total_latency,
)

__version__ = "0.1.0"
