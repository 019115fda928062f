"""Built-in invariant suite.

run_selfcheck bundles randomized sweeps of the core identities (correlation
bounds, velocity-limit reductions, flow fixed point, two-path equality, and
a small round trip). On a healthy build every check passes with a wide
margin; the report formatter must label failures loudly.
"""

from __future__ import annotations

from rsinvert import run_selfcheck
from rsinvert.selfcheck import (
    CheckResult,
    check_correlation_bounds,
    check_flow_fixed_point,
    check_round_trip,
    check_two_path,
    check_velocity_reductions,
    format_report,
)


class TestIndividualChecks:
    def test_correlation_bounds_sweep_is_clean(self):
        result = check_correlation_bounds(trials=120)
        assert result.passed
        assert "0 violations" in result.detail

    def test_velocity_reductions_are_exact(self):
        result = check_velocity_reductions(samples=20_000)
        assert result.passed
        assert "0.00e+00" in result.detail

    def test_flow_fixed_point_holds(self):
        result = check_flow_fixed_point(samples=30_000)
        assert result.passed

    def test_two_path_routes_agree(self):
        result = check_two_path()
        assert result.passed

    def test_round_trip_quality(self):
        result = check_round_trip()
        assert result.passed
        assert "dB" in result.detail


class TestRunSelfcheck:
    def test_all_checks_pass_with_distinct_names(self):
        results = run_selfcheck()
        assert len(results) == 5
        assert all(r.passed for r in results)
        names = [r.name for r in results]
        assert len(set(names)) == 5
        assert all(r.seconds >= 0.0 for r in results)

    def test_format_report_labels_status(self):
        results = [
            CheckResult("alpha", True, "fine", 0.1),
            CheckResult("beta", False, "broken", 0.2),
        ]
        text = format_report(results)
        assert "[PASS] alpha" in text
        assert "[FAIL] beta" in text
        assert "FAILURES PRESENT" in text

    def test_format_report_all_green(self):
        text = format_report([CheckResult("alpha", True, "fine", 0.1)])
        assert "all checks passed" in text
