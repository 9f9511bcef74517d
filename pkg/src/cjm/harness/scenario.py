"""Scenario files: a line-oriented script of per-thread monitor operations.

Format (UTF-8, ``#`` comments, blank lines ignored)::

    monitors A B
    thread T1: lock A; sync s1; unlock A
    thread T2: sync s1; lock A; assert_owned A true; unlock A

One ``thread NAME: ...`` line per thread (repeat a name to append steps).
Steps, separated by ``;``:

    lock M                      acquire M
    unlock M                    release M (an expected error is a step too)
    wait M [TIMEOUT_MS]         wait on M, optional timeout
    notify M / notifyall M      wake one / all waiters of M
    hash M                      read M's identity hash (stability is checked)
    interrupt T                 post an interrupt to thread T
    sync ID                     barrier across every thread that names ID
    await_arrivals M K          block until >= K lock calls have begun on M
    pause MS                    sleep (timing scenarios only)
    assert_owned M true|false   check current ownership of M
    assert_result RESULT        check this thread's most recent wait result
                                (notified | timedout | interrupted)

Barriers totally order cross-thread phases; every referenced monitor and
thread must be declared (monitors via the ``monitors`` line, threads by
having a program).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, List, Optional

VALID_RESULTS = ("notified", "timedout", "interrupted")


class ScenarioError(ValueError):
    """Parse or validation failure, pointing at the offending line."""


@dataclass(frozen=True)
class Step:
    op: str
    arg: Optional[str] = None  # monitor or thread or barrier id
    value: Optional[float] = None  # timeout ms / pause ms / arrival count
    flag: Optional[str] = None  # assert payloads
    line: int = 0

    def __str__(self) -> str:
        parts = [self.op]
        if self.arg is not None:
            parts.append(self.arg)
        if self.value is not None:
            parts.append(str(int(self.value)))
        if self.flag is not None:
            parts.append(self.flag)
        return " ".join(parts)


@dataclass
class Scenario:
    name: str
    monitors: List[str] = field(default_factory=list)
    programs: Dict[str, List[Step]] = field(default_factory=dict)

    @property
    def barrier_parties(self) -> Dict[str, int]:
        parties: Dict[str, int] = {}
        for steps in self.programs.values():
            seen = {s.arg for s in steps if s.op == "sync"}
            for b in seen:
                parties[b] = parties.get(b, 0) + 1
        return parties

    def validate(self) -> None:
        declared = set(self.monitors)
        threads = set(self.programs)
        if not self.programs:
            raise ScenarioError(f"{self.name}: no thread programs")
        for tname, steps in self.programs.items():
            for s in steps:
                if s.op in ("lock", "unlock", "wait", "notify", "notifyall",
                            "hash", "assert_owned", "await_arrivals"):
                    if s.arg not in declared:
                        raise ScenarioError(
                            f"{self.name} line {s.line}: monitor {s.arg!r} not declared"
                        )
                elif s.op == "interrupt":
                    if s.arg not in threads:
                        raise ScenarioError(
                            f"{self.name} line {s.line}: thread {s.arg!r} not declared"
                        )


def _parse_step(raw: str, line_no: int) -> Step:
    tokens = raw.split()
    if not tokens:
        raise ScenarioError(f"line {line_no}: empty step")
    op = tokens[0].lower()
    args = tokens[1:]

    def need(n: int) -> None:
        if len(args) != n:
            raise ScenarioError(
                f"line {line_no}: {op} takes {n} argument(s), got {len(args)}"
            )

    if op in ("lock", "unlock", "notify", "notifyall", "hash"):
        need(1)
        return Step(op, args[0], line=line_no)
    if op == "wait":
        if len(args) == 1:
            return Step(op, args[0], line=line_no)
        if len(args) == 2:
            return Step(op, args[0], value=float(args[1]), line=line_no)
        raise ScenarioError(f"line {line_no}: wait takes 1 or 2 arguments")
    if op == "interrupt":
        need(1)
        return Step(op, args[0], line=line_no)
    if op == "sync":
        need(1)
        return Step(op, args[0], line=line_no)
    if op == "await_arrivals":
        need(2)
        return Step(op, args[0], value=float(args[1]), line=line_no)
    if op == "pause":
        need(1)
        return Step(op, value=float(args[0]), line=line_no)
    if op == "assert_owned":
        need(2)
        if args[1].lower() not in ("true", "false"):
            raise ScenarioError(f"line {line_no}: assert_owned wants true|false")
        return Step(op, args[0], flag=args[1].lower(), line=line_no)
    if op == "assert_result":
        need(1)
        if args[0].lower() not in VALID_RESULTS:
            raise ScenarioError(
                f"line {line_no}: assert_result wants one of {VALID_RESULTS}"
            )
        return Step(op, flag=args[0].lower(), line=line_no)
    raise ScenarioError(f"line {line_no}: unknown step {op!r}")


def parse_scenario(text: str, name: str = "<scenario>") -> Scenario:
    scenario = Scenario(name=name)
    for line_no, raw_line in enumerate(text.splitlines(), start=1):
        line = raw_line.split("#", 1)[0].strip()
        if not line:
            continue
        if line.lower().startswith("monitors"):
            names = line.split()[1:]
            if not names:
                raise ScenarioError(f"line {line_no}: monitors line declares nothing")
            scenario.monitors.extend(n for n in names if n not in scenario.monitors)
            continue
        if line.lower().startswith("thread"):
            head, sep, body = line.partition(":")
            if not sep:
                raise ScenarioError(f"line {line_no}: thread line missing ':'")
            head_tokens = head.split()
            if len(head_tokens) != 2:
                raise ScenarioError(f"line {line_no}: expected 'thread NAME:'")
            tname = head_tokens[1]
            steps = scenario.programs.setdefault(tname, [])
            for raw_step in body.split(";"):
                raw_step = raw_step.strip()
                if raw_step:
                    steps.append(_parse_step(raw_step, line_no))
            continue
        raise ScenarioError(f"line {line_no}: unrecognized line {line!r}")
    scenario.validate()
    return scenario


def load_scenario(path) -> Scenario:
    from pathlib import Path

    p = Path(path)
    return parse_scenario(p.read_text(encoding="utf-8"), name=p.stem)
