"""Hierarchical scheduling for compositional device-use tasks, with a
deterministic simulated phone and an evaluation harness."""

from .backends import BackendReply, HttpBackend, ScriptedAnalyst, ScriptedNavigator, ScriptedPlanner
from .env import Device, EnvState, Goal, builtin_device, observe, reward, step
from .eval import MetricsReport, TerminationReason, TrajectoryRecord, compute_pgr, summarize
from .memory import ActResult, MemoryEntry, ProcessMemory, ThinkResult, ToolResult, render_context
from .scheduler import Backends, Plan, SchedulerConfig, Subtask, parse_plan, plan, replay, run_episode
from .task_model import CompositionalTask, TaskSuite, TaskTemplate, evaluate_logic, instantiate, load_suite, validate

__version__ = "0.1.0"
