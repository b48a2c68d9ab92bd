import math
from unittest.mock import patch

import numpy as np
import pytest

from grassmann_quantization.verification import (
    DEFAULT_TOLERANCES,
    HOLONOMY_STEPS,
    KNOWN_ANCHORS,
    ORACLE_SAMPLES,
    SUITES,
    Case,
    Outcome,
    SuiteConfig,
    VerificationReport,
    build_cases,
    path_study,
    run_suite,
)


@pytest.mark.parametrize(
    "kwargs, error, message",
    [
        ({"suite": "everything"}, ValueError, "Unknown suite"),
        ({"dims": (1,)}, ValueError, "outside 2..16"),
        ({"dims": (17,)}, ValueError, "outside 2..16"),
        ({"ranks": (0,)}, ValueError, "at least 1"),
        ({"dims": (2,), "ranks": (2,)}, ValueError, "No \\(d, n\\) pair"),
        ({"tolerances": {"speed": 1.0}}, ValueError, "Unknown tolerance names: speed"),
        ({"samples": 0}, ValueError, "samples must be at least 1"),
        ({"workers": 1.5}, TypeError, "workers must be an integer"),
        ({"seed": -3}, ValueError, "non-negative"),
    ],
)
def test_suite_config_validation(kwargs, error, message):
    """
    Test SuiteConfig validation.

    GIVEN: One invalid field at a time.
    WHEN: SuiteConfig is built.
    THEN: The matching error is raised with a readable message.
    """
    with pytest.raises(error, match=message):
        SuiteConfig(**kwargs)


def test_suite_config_pairs_and_echo():
    """
    Test the (d, n) pairs and the JSON echo of a configuration.

    GIVEN: dims 2,3,4, ranks 1,2,3 and one tolerance override.
    WHEN: pairs and echo are read.
    THEN: Only pairs with n < d remain and every tolerance is resolved.
    """
    config = SuiteConfig(dims=[2, 3, 4], ranks=[1, 2, 3], tolerances={"moment": 0.05})
    echo = config.echo()

    assert config.pairs == [(2, 1), (3, 1), (3, 2), (4, 1), (4, 2), (4, 3)]
    assert echo["dims"] == [2, 3, 4]
    assert set(echo["tolerances"]) == set(DEFAULT_TOLERANCES)
    assert echo["tolerances"]["moment"] == 0.05
    assert echo["tolerances"]["holonomy"] == DEFAULT_TOLERANCES["holonomy"]


def test_every_case_has_a_known_anchor():
    """
    Test that every case of the full suite names a known anchor and a unique name.

    GIVEN: The "all" suite over d ∈ {2, 3}, n ∈ {1, 2}.
    WHEN: The case list is built.
    THEN: Every anchor is in KNOWN_ANCHORS and every anchor is used.
    """
    cases = build_cases(SuiteConfig())
    anchors = {case.anchor for case in cases}

    assert anchors <= set(KNOWN_ANCHORS)
    assert anchors == set(KNOWN_ANCHORS)
    assert len({case.name for case in cases}) == len(cases)


@pytest.mark.parametrize("suite", ["tessarine", "hyperkahler"])
def test_small_suites_pass(suite):
    """
    Test that the exact-algebra suites pass on a small configuration.

    GIVEN: Three instances per case on d ∈ {2, 3}, n = 1.
    WHEN: The suite runs.
    THEN: The verdict is PASS and the exit code is 0.
    """
    report = run_suite(SuiteConfig(suite=suite, dims=(2, 3), ranks=(1,), cases=3))

    assert report.verdict == "PASS", [c for c in report.cases if not c.passed]
    assert report.exit_code == 0
    assert report.config["suite"] == suite


def test_report_does_not_depend_on_worker_count():
    """
    Test determinism across thread counts.

    GIVEN: The same tessarine configuration with 1 and 3 workers.
    WHEN: Both run.
    THEN: Names, residuals, bounds and verdicts agree case by case.
    """
    single = run_suite(SuiteConfig(suite="tessarine", ranks=(1,), cases=3, seed=5, workers=1))
    threaded = run_suite(SuiteConfig(suite="tessarine", ranks=(1,), cases=3, seed=5, workers=3))

    def strip(report):
        return [(c.name, c.anchor, c.residual, c.bound, c.passed) for c in report.cases]

    assert strip(single) == strip(threaded)


def test_raising_case_becomes_failed_case():
    """
    Test that an exception inside a case is recorded and the run continues.

    GIVEN: A suite with one raising case and one passing case.
    WHEN: run_suite runs it.
    THEN: The first case fails with the exception in its diagnostic, the second passes.
    """

    def boom(config, rng):
        raise RuntimeError("no convergence")

    def fine(config, rng):
        return Outcome(0.0, 1.0, True)

    cases = [Case("raising", "flat model", boom), Case("fine", "flat model", fine)]
    with patch.dict(SUITES, {"flat": lambda config: cases}):
        report = run_suite(SuiteConfig(suite="flat"))

    failed, passed = report.cases
    assert not failed.passed
    assert failed.residual is None and failed.bound is None
    assert failed.diagnostic == "RuntimeError: no convergence"
    assert passed.passed
    assert report.verdict == "FAIL" and report.exit_code == 1


def test_run_suite_needs_config():
    """
    Test the argument type of run_suite.

    GIVEN: A plain dict.
    WHEN: run_suite is called with it.
    THEN: A TypeError is raised.
    """
    with pytest.raises(TypeError, match="SuiteConfig"):
        run_suite({"suite": "flat"})


def test_report_dict_round_trip_and_schema():
    """
    Test VerificationReport.to_dict / from_dict and the schema check.

    GIVEN: A report of the tessarine suite.
    WHEN: It is converted to a dict and back, then given a wrong schema version.
    THEN: The round trip preserves the cases; the wrong version is a ValueError.
    """
    report = run_suite(SuiteConfig(suite="tessarine", dims=(2,), ranks=(1,), cases=2))
    data = report.to_dict()

    assert data["aggregate"] == {"verdict": report.verdict, "cases": len(report.cases), "failed": 0}
    assert VerificationReport.from_dict(data).cases == report.cases

    data["schema_version"] = 2
    with pytest.raises(ValueError, match="Unsupported report schema version 2"):
        VerificationReport.from_dict(data)


def test_path_study_rows():
    """
    Test the transport convergence series.

    GIVEN: The cone loop at m = 300, the octant loop at m = 3 and an empty list.
    WHEN: path_study runs.
    THEN: The cone row has phase ±π/2, the coarse octant row is NaN, and no steps give no rows.
    """
    (cone,) = path_study("unitary_flow", [300])
    (coarse,) = path_study("sphere_octant", [3])

    assert cone["m"] == 300
    assert abs(abs(cone["phase"]) - np.pi / 2) < 1e-2
    assert cone["error"] < 0.1
    assert coarse["m"] == 3 and math.isnan(coarse["error"]) and math.isnan(coarse["phase"])
    assert path_study("sphere_octant", []) == []


def test_path_study_unknown_geometry():
    """
    Test geometry validation.

    GIVEN: An unknown geometry name.
    WHEN: path_study is called.
    THEN: A ValueError is raised.
    """
    with pytest.raises(ValueError, match="Unknown geometry"):
        path_study("torus", [10])


def test_selected_propagator_cases_pass():
    """
    Test the reproducing projection, the linear curvature difference and the scaled kernel cases.

    GIVEN: The propagator suite on d ∈ {2, 3}, n = 1 with 20000 samples and five instances.
    WHEN: Only the three cases run.
    THEN: All pass; the scaled kernel reports a rejection margin below its bound of 1.
    """
    config = SuiteConfig(suite="propagator", dims=(2, 3), ranks=(1,), samples=20000, cases=5, seed=3)
    labels = ("reproducing projection", "curvature linear difference", "scaled kernel rejected")
    selected = [case for case in build_cases(config) if case.name.startswith(labels)]

    with patch.dict(SUITES, {"propagator": lambda config: selected}):
        report = run_suite(config)

    assert len(report.cases) == 6
    assert report.verdict == "PASS", [c for c in report.cases if not c.passed]
    for case in report.cases:
        if case.name.startswith("scaled kernel rejected"):
            assert case.residual < case.bound == 1.0
            assert case.diagnostic.startswith("rejection margin")
        if case.name.startswith("reproducing projection"):
            assert "idempotency residual" in case.diagnostic


def test_holonomy_cases_use_ten_thousand_steps():
    """
    Test the holonomy cases of the path suite at their full step count.

    GIVEN: The octant and cone loop cases, which walk 10⁴ steps.
    WHEN: Only those two cases run.
    THEN: Both pass, and the octant phase is within 1e-6 of π/4.
    """
    config = SuiteConfig(suite="path", dims=(2,), ranks=(1,))
    selected = [case for case in build_cases(config) if case.name.endswith("loop holonomy")]

    with patch.dict(SUITES, {"path": lambda config: selected}):
        report = run_suite(config)

    octant, cone = report.cases
    assert HOLONOMY_STEPS == 10**4
    assert report.verdict == "PASS", report.cases
    assert octant.residual < 1e-6
    assert cone.residual < cone.bound


def test_moment_case_records_oracle():
    """
    Test the Berezin moment case and its brute-force oracle.

    GIVEN: The quantization suite's moment case with the oracle at 2·10⁵ samples instead of 10⁷.
    WHEN: Only that case runs.
    THEN: It passes and its diagnostic records the oracle diagonal, near (2/3, 1/3).
    """
    config = SuiteConfig(suite="quantization", dims=(2,), ranks=(1,), samples=20000, seed=2)
    selected = [case for case in build_cases(config) if case.name.startswith("berezin moment target")]

    with patch.dict(SUITES, {"quantization": lambda config: selected}), patch(
        "grassmann_quantization.verification.ORACLE_SAMPLES", 200000
    ):
        report = run_suite(config)

    (case,) = report.cases
    assert ORACLE_SAMPLES == 10**7
    assert case.passed, case.diagnostic
    assert case.diagnostic.startswith("oracle at N=200000: diagonal [0.66")
