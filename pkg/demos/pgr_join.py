"""Join three reports into a PGR table.

The weak run blanks think results, the strong run is the plain oracle, and the
bridged run blanks them for every other context-transition task only. The
numbers are synthetic; the point is the table shape and the arithmetic.
"""

from agent_nexus.builtin import core_suite, oracle_backends
from agent_nexus.eval.metrics import DEFAULT_PRICING
from agent_nexus.eval.report import pgr_table, render_pgr, summarize
from agent_nexus.env.state import builtin_device
from agent_nexus.scheduler import SchedulerConfig, run_episode
from agent_nexus.task_model import CompositionType

device, backends = builtin_device(), oracle_backends()
pricing = {**DEFAULT_PRICING, **{b.identity: DEFAULT_PRICING["gpt-4o"] for b in
                                 (backends.planner, backends.navigator, backends.analyst)}}
tasks = core_suite(expand=True).tasks
blind = SchedulerConfig(redact_think=True)

weak = [run_episode(t, device, "clean", backends, blind) for t in tasks]
strong = [run_episode(t, device, "clean", backends) for t in tasks]
ct_seen = 0
bridged = []
for t, w, s in zip(tasks, weak, strong):
    if t.composition_type is CompositionType.CONTEXT_TRANSITION:
        ct_seen += 1
        bridged.append(w if ct_seen % 2 else s)
    else:
        bridged.append(s)

reports = [summarize(r, pricing, suite=name) for r, name in
           ((weak, "weak"), (strong, "strong"), (bridged, "bridged"))]
print(render_pgr(pgr_table(*reports)), end="")
