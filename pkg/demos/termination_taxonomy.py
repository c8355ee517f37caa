"""Each shipped fault config drives every episode into one termination class."""

import tempfile
from collections import Counter
from pathlib import Path

from agent_nexus.builtin import data_path
from agent_nexus.cli import load_config, run

for name in ("oracle", "early-done", "no-stop", "infeasible", "garbage"):
    config = load_config(data_path("configs", f"{name}.json"))
    with tempfile.TemporaryDirectory() as tmp:
        config.output_dir = Path(tmp)
        _, report = run(config)
    counts = Counter(e.termination for e in report.episodes)
    sigs = Counter(s for e in report.episodes for s in e.signatures)
    print(f"{name:<11} {dict(counts)}  signatures={dict(sigs) or '-'}")
