"""Acceptance gate: one test per numbered criterion.

Each test prints a single pass/fail line and asserts every clause of its
criterion; a failing clause shows the full measured-vs-target table.  The
underlying scenario runs are cached inside finstab.suite, so each of the
seven built-in scenarios executes once per session.
"""
import finstab.suite as suite


def _render(result):
    lines = [f"{result.key}: {result.title}"]
    for c in result.clauses:
        mark = "ok " if c.passed else "BAD"
        lines.append(f"  [{mark}] {c.description}: {c.measured} (target: {c.target})")
    return "\n".join(lines)


def _check(key):
    result = suite.CRITERIA[key]()
    status = "pass" if result.passed else "FAIL"
    print(f"[{status}] {result.key}: {result.title}")
    assert result.passed, "\n" + _render(result)


def test_c1_heat_settling_bound():
    _check("c1-heat-settling")


def test_c2_heat_decay_envelope_sharpness():
    _check("c2-heat-envelope")


def test_c3_unobservable_component_barrier():
    _check("c3-unobservable-decay")


def test_c4_transport_heat_global_settling():
    _check("c4-transport-heat")


def test_c5_wave_observable_settling():
    # the capped coordinate-ratio compensation under-compensates the higher
    # oscillators (the H2 check on this model reports the same), leaving a
    # slowly decaying tail; the settling clause is asserted as stated
    _check("c5-wave")


def test_c6_beam_rank_one_horizon():
    _check("c6-beam-rank-one")


def test_c7_decomposition_oracle_equivalence():
    _check("c7-decomposition-oracle")


def test_c8_control_invariance_and_scaling():
    _check("c8-control-invariance")


def test_c9_stability_of_every_run():
    _check("c9-stability-sweep")
