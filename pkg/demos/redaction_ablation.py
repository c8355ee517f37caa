"""Blank the analyst's output in planner memory and watch context-transition tasks fail.

Tasks that only concatenate independent subtasks are unaffected, since nothing
needs to flow from one subtask into the next.
"""

from agent_nexus.builtin import core_suite, oracle_backends
from agent_nexus.env.state import builtin_device
from agent_nexus.scheduler import SchedulerConfig, run_episode

device, backends = builtin_device(), oracle_backends()
print(f"{'task':<10} {'type':<22} {'full memory':<14} redacted")
for task in core_suite().tasks:
    full = run_episode(task, device, "clean", backends)
    blind = run_episode(task, device, "clean", backends, SchedulerConfig(redact_think=True))
    print(f"{task.id:<10} {task.composition_type.value:<22} {full.termination.value:<14} {blind.termination.value}")
