"""Scenario parsing, the bundled corpus, determinism, exhaustive mode."""

from pathlib import Path

import pytest

from cjm.harness.cli import corpus_dir
from cjm.harness.runner import run_scenario, run_scenario_exhaustive
from cjm.harness.scenario import ScenarioError, load_scenario, parse_scenario

CORPUS = sorted(corpus_dir().glob("*.scn"))


def test_corpus_is_bundled():
    assert len(CORPUS) >= 20


def test_parse_basic():
    scn = parse_scenario(
        """
        # comment
        monitors A B
        thread T1: lock A; lock B; unlock B; unlock A
        thread T2: sync s1; wait A 25; assert_result timedout
        thread T1: sync s1
        """,
        "demo",
    )
    assert scn.monitors == ["A", "B"]
    assert len(scn.programs["T1"]) == 5  # appended second line
    assert scn.programs["T2"][1].value == 25.0
    assert scn.barrier_parties == {"s1": 2}


@pytest.mark.parametrize(
    "text,fragment",
    [
        ("thread T1 lock A", "missing ':'"),
        ("monitors A\nthread T1: frobnicate A", "unknown step"),
        ("monitors A\nthread T1: lock B", "not declared"),
        ("monitors A\nthread T1: interrupt T9", "not declared"),
        ("monitors A\nthread T1: wait A 10 20 30", "wait takes"),
        ("monitors A\nthread T1: assert_result maybe", "assert_result"),
        ("monitors\nthread T1: lock A", "declares nothing"),
        ("what even is this", "unrecognized"),
    ],
)
def test_parse_errors_have_line_info(text, fragment):
    with pytest.raises(ScenarioError) as err:
        parse_scenario(text, "bad")
    assert fragment in str(err.value)
    assert "line" in str(err.value)


def test_step_roundtrip_str():
    scn = parse_scenario("monitors A\nthread T: wait A 50; sync p1", "s")
    assert str(scn.programs["T"][0]) == "wait A 50"
    assert str(scn.programs["T"][1]) == "sync p1"


@pytest.mark.parametrize("path", CORPUS, ids=lambda p: p.stem)
@pytest.mark.parametrize("strategy", ["chain", "external"])
def test_corpus_passes(path, strategy):
    scenario = load_scenario(path)
    report = run_scenario(scenario, strategy=strategy)
    assert report.passed, report.render()


def test_determinism_same_report_twice():
    path = corpus_dir() / "06_fifo_six.scn"
    scenario = load_scenario(path)
    a = run_scenario(scenario, seed=42)
    b = run_scenario(scenario, seed=42)
    assert a.passed and b.passed
    assert [c[:2] for c in a.checks] == [c[:2] for c in b.checks]


def test_exhaustive_race_explores_both_outcomes():
    path = corpus_dir() / "21_notify_vs_timeout_race.scn"
    scenario = load_scenario(path)
    report = run_scenario_exhaustive(scenario, strategy="chain")
    assert report.passed, report.render()
    assert report.interleavings >= 4


def test_exhaustive_rejects_large_scenarios():
    scn = parse_scenario(
        "monitors A\n"
        + "\n".join(f"thread T{i}: lock A; unlock A" for i in range(5)),
        "too-big",
    )
    with pytest.raises(ValueError):
        run_scenario_exhaustive(scn)
