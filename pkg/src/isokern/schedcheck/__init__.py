from isokern.schedcheck.edf import edf_test
from isokern.schedcheck.experiment import (
    DEFAULT_JITTER_US,
    ExperimentResult,
    Kind,
    schedulability_experiment,
)
from isokern.schedcheck.fp import fp_schedulable, rta_fixed_priority
from isokern.schedcheck.locks import Blocking, mcs_blocking, reader_bound, rw_blocking, writer_bound
from isokern.schedcheck.model import ResourceUse, Role, SchedCurve, Task, TaskSet, sua
from isokern.schedcheck.partition import partition_tasks, worst_fit_decreasing
from isokern.schedcheck.taskgen import generate_taskset, randfixedsum

__all__ = [
    "DEFAULT_JITTER_US",
    "Blocking",
    "ExperimentResult",
    "Kind",
    "ResourceUse",
    "Role",
    "SchedCurve",
    "Task",
    "TaskSet",
    "edf_test",
    "fp_schedulable",
    "generate_taskset",
    "mcs_blocking",
    "partition_tasks",
    "randfixedsum",
    "reader_bound",
    "rta_fixed_priority",
    "rw_blocking",
    "schedulability_experiment",
    "sua",
    "worst_fit_decreasing",
    "writer_bound",
]
