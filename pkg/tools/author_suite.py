"""Regenerate the shipped task suite and oracle response tables.

    python tools/author_suite.py

Writes src/agent_nexus/data/suites/core.json and data/oracle/*.json. Each task
is declared once below together with its oracle plan; planner stages are
derived from the plan so the two cannot drift apart.
"""

import json
import re
from pathlib import Path

DATA = Path(__file__).resolve().parents[1] / "src" / "agent_nexus" / "data"

# env steps taken by the oracle navigator per instruction family
NAV_STEPS = {"open_note": 2, "send": 5, "toggle": 2, "create_note": 7, "add_alarm": 7,
             "alarm_on": 2, "expense": 9, "open_app": 1, "open_chat": 2}

NAVIGATOR_RULES = [
    ("open_note", r'Open the note titled "(?P<title>[^"]*)" in Notes',
     ["TapLabel Notes", "TapLabel {title}"]),
    ("send", r'Send "(?P<msg>[^"]*)" to (?P<contact>[A-Za-z]+) in Messaging',
     ["TapLabel Messaging", "TapLabel {contact}", "Tap msg_input", "Type {msg}", "Tap send"]),
    ("toggle", r"Turn on (?P<setting>[A-Za-z][\w -]*) in Settings",
     ["TapLabel Settings", "TapLabel {setting}"]),
    ("create_note", r'Create a note titled "(?P<title>[^"]*)" with body "(?P<body>[^"]*)" in Notes',
     ["TapLabel Notes", "Tap new_note", "Tap title_input", "Type {title}", "Tap body_input",
      "Type {body}", "Tap save"]),
    ("add_alarm", r'Add an alarm at (?P<time>\d\d:\d\d) labeled "(?P<label>[^"]*)" in Clock',
     ["TapLabel Clock", "Tap add_alarm", "Tap time_input", "Type {time}", "Tap label_input",
      "Type {label}", "Tap save_alarm"]),
    ("alarm_on", r'Turn on the alarm "(?P<alarm>[^"]*)" in Clock',
     ["TapLabel Clock", "TapLabel {alarm}"]),
    ("expense", r'Record an expense "(?P<item>[^"]*)" of (?P<amount>[\d.]*) in category "(?P<cat>[^"]*)" in ExpenseLedger',
     ["TapLabel ExpenseLedger", "Tap add_expense", "Tap item_input", "Type {item}", "Tap amount_input",
      "Type {amount}", "Tap category_input", "Type {cat}", "Tap save_expense"]),
    ("open_chat", r"Open the chat with (?P<contact>[A-Za-z]+) in Messaging",
     ["TapLabel Messaging", "TapLabel {contact}"]),
    ("open_app", r"Open (?P<app>Notes|Messaging|ExpenseLedger|Clock|Settings)",
     ["TapLabel {app}"]),
]

LIST_ITEM = r'"((?:[^"\\]|\\.)*)"'
ANALYST_RULES = [
    {"match": r"Extract the body of the open note", "op": "extract",
     "pattern": r'^note_body \[text\] "Body" = ' + LIST_ITEM},
    {"match": r"Extract the text of the latest message in the open chat", "op": "extract", "which": "last",
     "pattern": r"^message_\d+ \[list-item\] " + LIST_ITEM},
    {"match": r'Read the time of the alarm labeled "(?P<label>[^"]*)" on screen', "op": "extract",
     "pattern": r'^alarm_\d+ \[toggle\] "{label} at (\d\d:\d\d)"'},
    {"match": r"Sum the amounts of all expenses on screen|[Ss]um the visible expenses", "op": "sum",
     "pattern": r'^expense_\d+ \[list-item\] "[^"]*: ([\d.]+) \([^)]*\)"'},
    {"match": r"Sum the amounts of the (?P<cat>\w+) expenses on screen", "op": "sum",
     "pattern": r'^expense_\d+ \[list-item\] "[^"]*: ([\d.]+) \({cat}\)"'},
    {"match": r"Find the item of the largest expense on screen", "op": "argmax",
     "pattern": r'^expense_\d+ \[list-item\] "(?P<key>[^"]*): (?P<value>[\d.]+) \('},
    {"match": r"Count the enabled alarms on screen", "op": "count",
     "pattern": r'^alarm_\d+ \[toggle\] "[^"]*" = "on"'},
]


def nav_family(instr: str) -> str:
    for fam, pattern, _ in NAVIGATOR_RULES:
        if re.fullmatch(pattern, instr.replace("{think}", "0")):
            return fam
    raise ValueError(f"no navigator rule for {instr!r}")


def oracle_steps(plan):
    steps = 0
    for kind, text, *_ in plan:
        if kind == "TOOL":
            steps += 1
        elif kind == "ACT":
            steps += NAV_STEPS[nav_family(text)]
    return steps


def stages(plan):
    """Plan text per stage; items mentioning {think} show a preview until the think ran."""
    think_at = next((i for i, (k, *_) in enumerate(plan) if k == "THINK"), None)
    out = []
    for s in range(len(plan)):
        lines = []
        for n, (kind, text, *preview) in enumerate(plan[s:], start=1):
            shown = text
            if "{think}" in text and (think_at is None or think_at >= s):
                shown = preview[0]
            lines.append(f"{n}. [{kind}] {shown}")
        out.append("\n".join(lines))
    out.append("DONE")
    return out


def cp(subtask, app, path, op, expected):
    return {"app": app, "subtask": subtask, "predicate": {"path": path, "op": op, "expected": expected}}


def sub(sid, command, env, **params):
    return {"id": sid, "command": command, "params": params, "environment": env}


HOME = ("TOOL", "HOME")
TASKS = []


def task(tid, ctype, instruction, subtasks, logic, checkpoints, plan, deps=()):
    TASKS.append({
        "id": tid, "instruction": instruction, "subtasks": subtasks,
        "dependencies": [list(d) for d in deps], "logic": logic, "composition_type": ctype,
        "checkpoints": checkpoints, "optimal_steps": oracle_steps(plan), "_plan": plan,
    })


SC, CT, DD = "SimpleConcatenation", "ContextTransition", "DeepDive"

task("sc-01", SC, 'Turn on Bluetooth, and create a note titled "packing" with body "charger".',
     [sub("a", "turn on a setting", "settings", setting="Bluetooth"),
      sub("b", "create a note", "notes", title="packing", body="charger")],
     {"kind": "conjunctive", "children": ["a", "b"]},
     [cp("a", "settings", "settings[name=Bluetooth].on", "eq", True),
      cp("b", "notes", "notes[title=packing].body", "eq", "charger")],
     [HOME, ("ACT", "Turn on Bluetooth in Settings"), HOME,
      ("ACT", 'Create a note titled "packing" with body "charger" in Notes')])

task("sc-02", SC, 'Send "running late" to Alice, and add an alarm at 08:15 labeled "leave".',
     [sub("a", "send a message", "messaging", contact="Alice", msg="running late"),
      sub("b", "add an alarm", "clock", time="08:15", label="leave")],
     {"kind": "conjunctive", "children": ["a", "b"]},
     [cp("a", "messaging", "messages[to=Alice].text", "eq", "running late"),
      cp("b", "clock", "alarms[label=leave].time", "eq", "08:15")],
     [HOME, ("ACT", 'Send "running late" to Alice in Messaging'), HOME,
      ("ACT", 'Add an alarm at 08:15 labeled "leave" in Clock')])

task("sc-03", SC, 'First record an expense "Parking" of 6 in category "transport", then turn on Dark mode.',
     [sub("a", "record an expense", "expenses", item="Parking", amount="6", category="transport"),
      sub("b", "turn on a setting", "settings", setting="Dark mode")],
     {"kind": "sequential", "children": ["a", "b"]},
     [cp("a", "expenses", "expenses[item=Parking].amount", "eq", 6),
      cp("b", "settings", "settings[name=Dark mode].on", "eq", True)],
     [HOME, ("ACT", 'Record an expense "Parking" of 6 in category "transport" in ExpenseLedger'), HOME,
      ("ACT", "Turn on Dark mode in Settings")])

task("sc-04", SC, "Turn on Wi-Fi or Bluetooth, and also turn on the standup alarm.",
     [sub("a", "turn on a setting", "settings", setting="Wi-Fi"),
      sub("b", "turn on a setting", "settings", setting="Bluetooth"),
      sub("c", "enable an alarm", "clock", label="standup")],
     {"kind": "conjunctive", "children": [{"kind": "disjunctive", "children": ["a", "b"]}, "c"]},
     [cp("a", "settings", "settings[name=Wi-Fi].on", "eq", True),
      cp("b", "settings", "settings[name=Bluetooth].on", "eq", True),
      cp("c", "clock", "alarms[label=standup].enabled", "eq", True)],
     [HOME, ("ACT", "Turn on Wi-Fi in Settings"), HOME,
      ("ACT", 'Turn on the alarm "standup at 09:30" in Clock')])

task("sc-05", SC, 'Define "trip prep" as turning on Airplane mode and adding an alarm at 05:30 labeled "flight", then do it.',
     [sub("a", "turn on a setting", "settings", setting="Airplane mode"),
      sub("b", "add an alarm", "clock", time="05:30", label="flight")],
     {"kind": "hierarchical", "label": "trip prep", "children": ["a", "b"]},
     [cp("a", "settings", "settings[name=Airplane mode].on", "eq", True),
      cp("b", "clock", "alarms[label=flight].time", "eq", "05:30"),
      cp("b", "clock", "alarms[label=flight].enabled", "eq", True)],
     [HOME, ("ACT", "Turn on Airplane mode in Settings"), HOME,
      ("ACT", 'Add an alarm at 05:30 labeled "flight" in Clock')])

task("ct-01", CT, "Forward my meeting note to Yuan.",
     [sub("a", "read a note", "notes", title="meeting"),
      sub("b", "send the note content", "messaging", contact="Yuan")],
     "b", [cp("b", "messaging", "messages[to=Yuan].text", "eq", "Project sync moved to 3pm")],
     [HOME, ("ACT", 'Open the note titled "meeting" in Notes'),
      ("THINK", "Extract the body of the open note"), HOME,
      ("ACT", 'Send "{think}" to Yuan in Messaging', "Send the extracted note body to Yuan in Messaging")],
     deps=[("a", "b")])

task("ct-02", CT, "Share the wifi password note with Bob.",
     [sub("a", "read a note", "notes", title="wifi password"),
      sub("b", "send the note content", "messaging", contact="Bob")],
     "b", [cp("b", "messaging", "messages[to=Bob].text", "eq", "sunflower42")],
     [HOME, ("ACT", 'Open the note titled "wifi password" in Notes'),
      ("THINK", "Extract the body of the open note"), HOME,
      ("ACT", 'Send "{think}" to Bob in Messaging', "Send the extracted note body to Bob in Messaging")],
     deps=[("a", "b")])

task("ct-03", CT, 'Create a note titled "standup time" holding the time of my standup alarm.',
     [sub("a", "read an alarm time", "clock", label="standup"),
      sub("b", "create a note", "notes", title="standup time")],
     "b", [cp("b", "notes", "notes[title=standup time].body", "eq", "09:30")],
     [HOME, ("ACT", "Open Clock"),
      ("THINK", 'Read the time of the alarm labeled "standup" on screen'), HOME,
      ("ACT", 'Create a note titled "standup time" with body "{think}" in Notes',
       'Create a note titled "standup time" with the alarm time as body in Notes')],
     deps=[("a", "b")])

task("ct-04", CT, 'Save the latest message in my chat with Alice as a note titled "from Alice".',
     [sub("a", "read the latest message", "messaging", contact="Alice"),
      sub("b", "create a note", "notes", title="from Alice")],
     "b", [cp("b", "notes", "notes[title=from Alice].body", "eq", "bring the slides")],
     [HOME, ("ACT", "Open the chat with Alice in Messaging"),
      ("THINK", "Extract the text of the latest message in the open chat"), HOME,
      ("ACT", 'Create a note titled "from Alice" with body "{think}" in Notes',
       'Create a note titled "from Alice" with the message as body in Notes')],
     deps=[("a", "b")])

task("dd-01", DD, 'Add up all my expenses and save the total in a note titled "total".',
     [sub("a", "total the expenses", "expenses"),
      sub("b", "record the total", "notes", title="total")],
     "b", [cp("b", "notes", "notes[title=total].body", "eq", 176)],
     [HOME, ("ACT", "Open ExpenseLedger"), ("THINK", "Sum the amounts of all expenses on screen"), HOME,
      ("ACT", 'Create a note titled "total" with body "{think}" in Notes',
       'Create a note titled "total" with the computed sum as body in Notes')],
     deps=[("a", "b")])

task("dd-02", DD, "Tell Bob which item was my largest expense.",
     [sub("a", "find the largest expense", "expenses"),
      sub("b", "send the item name", "messaging", contact="Bob")],
     "b", [cp("b", "messaging", "messages[to=Bob].text", "eq", "Books")],
     [HOME, ("ACT", "Open ExpenseLedger"), ("THINK", "Find the item of the largest expense on screen"), HOME,
      ("ACT", 'Send "{think}" to Bob in Messaging', "Send the item name to Bob in Messaging")],
     deps=[("a", "b")])

task("dd-03", DD, "Count how many alarms are enabled and text the number to Chen.",
     [sub("a", "count enabled alarms", "clock"),
      sub("b", "send the count", "messaging", contact="Chen")],
     "b", [cp("b", "messaging", "messages[to=Chen].text", "eq", 2)],
     [HOME, ("ACT", "Open Clock"), ("THINK", "Count the enabled alarms on screen"), HOME,
      ("ACT", 'Send "{think}" to Chen in Messaging', "Send the count to Chen in Messaging")],
     deps=[("a", "b")])

task("dd-04", DD, 'Work out my total food spending and log it as an expense "Food total" in category "summary".',
     [sub("a", "total the food expenses", "expenses", category="food"),
      sub("b", "record the total", "expenses", item="Food total")],
     "b", [cp("b", "expenses", "expenses[item=Food total].amount", "eq", 45)],
     [HOME, ("ACT", "Open ExpenseLedger"), ("THINK", "Sum the amounts of the food expenses on screen"), HOME,
      ("ACT", 'Record an expense "Food total" of {think} in category "summary" in ExpenseLedger',
       'Record the food total as an expense "Food total" in category "summary" in ExpenseLedger')],
     deps=[("a", "b")])


TEMPLATES = []


def sample(text, domains):
    """Fill placeholders with the first domain value so the step count can be read off."""
    for name, values in domains.items():
        text = text.replace("{" + name + "}", values[0])
    return text


def template(tid, ctype, instruction, match, subtasks, logic, checkpoints, plan, domains, derived=None, deps=()):
    skeleton = {
        "instruction": instruction, "subtasks": subtasks, "dependencies": [list(d) for d in deps],
        "logic": logic, "composition_type": ctype, "checkpoints": checkpoints,
        "optimal_steps": oracle_steps([(k, sample(t, domains), *p) for k, t, *p in plan]),
    }
    TEMPLATES.append({"id": tid, "skeleton": skeleton, "domains": domains, "derived": derived or {},
                      "_match": match, "_plan": plan})


template("tpl-msg-setting", SC, 'Send "{msg}" to {contact}, and turn on {setting}.',
         r'Send "(?P<msg>[^"]*)" to (?P<contact>[A-Za-z]+), and turn on (?P<setting>.+)\.',
         [sub("a", "send a message", "messaging", contact="{contact}", msg="{msg}"),
          sub("b", "turn on a setting", "settings", setting="{setting}")],
         {"kind": "conjunctive", "children": ["a", "b"]},
         [cp("a", "messaging", "messages[to={contact}].text", "eq", "{msg}"),
          cp("b", "settings", "settings[name={setting}].on", "eq", True)],
         [HOME, ("ACT", 'Send "{msg}" to {contact} in Messaging'), HOME, ("ACT", "Turn on {setting} in Settings")],
         {"msg": ["on my way", "call me", "thanks", "see you at 5"],
          "contact": ["Alice", "Bob", "Chen", "Yuan"],
          "setting": ["Wi-Fi", "Bluetooth", "Dark mode", "Airplane mode"]})

template("tpl-note-to-contact", CT, 'Send the content of the note "{note}" to {contact}.',
         r'Send the content of the note "(?P<note>[^"]*)" to (?P<contact>[A-Za-z]+)\.',
         [sub("a", "read a note", "notes", title="{note}"),
          sub("b", "send the note content", "messaging", contact="{contact}")],
         "b", [cp("b", "messaging", "messages[to={contact}].text", "eq", "{body}")],
         [HOME, ("ACT", 'Open the note titled "{note}" in Notes'),
          ("THINK", "Extract the body of the open note"), HOME,
          ("ACT", 'Send "{think}" to {contact} in Messaging', "Send the extracted note body to {contact} in Messaging")],
         {"note": ["groceries", "meeting", "wifi password"], "contact": ["Alice", "Bob", "Chen", "Yuan"]},
         {"body": {"from": "note", "map": {"groceries": "milk, eggs, bread",
                                            "meeting": "Project sync moved to 3pm",
                                            "wifi password": "sunflower42"}}},
         deps=[("a", "b")])

template("tpl-category-total", DD, 'Work out my total {category} spending and save it in a note titled "{title}".',
         r'Work out my total (?P<category>\w+) spending and save it in a note titled "(?P<title>[^"]*)"\.',
         [sub("a", "total a category", "expenses", category="{category}"),
          sub("b", "record the total", "notes", title="{title}")],
         "b", [cp("b", "notes", "notes[title={title}].body", "eq", "{total}")],
         [HOME, ("ACT", "Open ExpenseLedger"), ("THINK", "Sum the amounts of the {category} expenses on screen"), HOME,
          ("ACT", 'Create a note titled "{title}" with body "{think}" in Notes',
           'Create a note titled "{title}" with the computed sum as body in Notes')],
         {"category": ["food", "transport", "education"], "title": ["spent", "budget", "summary"]},
         {"total": {"from": "category", "map": {"food": "45", "transport": "30", "education": "101"}}},
         deps=[("a", "b")])

template("tpl-alarm-note", SC, 'Add an alarm at {time} labeled "{label}", and create a note titled "{label}" with body "{body}".',
         r'Add an alarm at (?P<time>\d\d:\d\d) labeled "(?P<label>[^"]*)", and create a note titled "[^"]*" with body "(?P<body>[^"]*)"\.',
         [sub("a", "add an alarm", "clock", time="{time}", label="{label}"),
          sub("b", "create a note", "notes", title="{label}", body="{body}")],
         {"kind": "conjunctive", "children": ["a", "b"]},
         [cp("a", "clock", "alarms[label={label}].time", "eq", "{time}"),
          cp("b", "notes", "notes[title={label}].body", "eq", "{body}")],
         [HOME, ("ACT", 'Add an alarm at {time} labeled "{label}" in Clock'), HOME,
          ("ACT", 'Create a note titled "{label}" with body "{body}" in Notes')],
         {"time": ["06:45", "21:00"], "label": ["run", "meds"], "body": ["remember", "done"]})


def main():
    suite = {
        "name": "nexus-core",
        "version": "1.0",
        "tasks": [{k: v for k, v in t.items() if not k.startswith("_")} for t in TASKS],
        "templates": [{k: v for k, v in t.items() if not k.startswith("_")} for t in TEMPLATES],
    }
    planner_rules = [{"match": re.escape(t["instruction"]), "stages": stages(t["_plan"])} for t in TASKS]
    planner_rules += [{"match": t["_match"], "stages": stages(t["_plan"])} for t in TEMPLATES]
    nav_rules = [{"match": pattern, "actions": actions, "stop": {"completed": True, "note": "done"}}
                 for _, pattern, actions in NAVIGATOR_RULES]
    files = {
        DATA / "suites" / "core.json": suite,
        DATA / "oracle" / "planner.json": {"role": "planner", "identity": "oracle-planner",
                                          "latency_ms": 800, "rules": planner_rules},
        DATA / "oracle" / "navigator.json": {"role": "navigator", "identity": "oracle-navigator",
                                            "latency_ms": 400, "rules": nav_rules},
        DATA / "oracle" / "analyst.json": {"role": "analyst", "identity": "oracle-analyst",
                                          "latency_ms": 600, "rules": ANALYST_RULES},
    }
    for path, obj in files.items():
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(json.dumps(obj, indent=2, ensure_ascii=False) + "\n", encoding="utf-8")
        print("wrote", path.relative_to(DATA.parents[2]))


if __name__ == "__main__":
    main()
