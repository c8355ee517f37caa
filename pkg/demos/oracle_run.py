"""Run the core suite with the scripted oracle backends and print the report.

    python3 demos/oracle_run.py [--expand]
"""

import json
import sys
import tempfile
from pathlib import Path

from agent_nexus.builtin import data_path
from agent_nexus.cli import load_config, run

config = load_config(data_path("configs", "oracle.json"))
config.expand_templates = "--expand" in sys.argv
with tempfile.TemporaryDirectory() as tmp:
    config.output_dir = Path(tmp)
    status, report = run(config)
    print(report.to_text(), end="")
    first = sorted((Path(tmp) / "trajectories").glob("*.jsonl"))[0]
    kinds = [json.loads(line)["kind"] for line in first.read_text().splitlines()]
    print(f"\n{len(report.episodes)} episodes, exit status {status}")
    print(f"{first.name} events: {' '.join(kinds)}")
