"""End-to-end acceptance checks, one test per criterion, each under its time budget.

Every test records a pass/fail line that ``conftest.pytest_terminal_summary``
prints at the end of the run.
"""

import random
import time
from contextlib import contextmanager
from fractions import Fraction

import test_matcher
import test_metrics
import test_traffic_log
from conftest import ACCEPTANCE_RESULTS, ix
from echo_server import MIXED_EXPECTED, MIXED_UNMATCHED, fidelity_problems, run_mixed
from gen_cases import random_log, random_spec_doc
from restcov.matcher import match_log, match_operation
from restcov.metrics import compute_report
from restcov.spec_model import build_model, load_spec
from restcov.traffic_log import read_har

PETSTORE = "http://petstore.swagger.io/v1"
JSON = (("Content-Type", "application/json"),)


@contextmanager
def criterion(name: str, budget: float):
    """Time the body; fail if it raises or runs over ``budget`` seconds."""
    state = {"detail": ""}
    start = time.perf_counter()
    try:
        yield state
    except BaseException as exc:
        ACCEPTANCE_RESULTS.append((name, False, time.perf_counter() - start, f"{type(exc).__name__}: {exc}"[:300]))
        raise
    elapsed = time.perf_counter() - start
    ok = elapsed < budget
    detail = state["detail"] if ok else f"took {elapsed:.2f}s, budget {budget}s"
    ACCEPTANCE_RESULTS.append((name, ok, elapsed, detail))
    assert ok, detail


def pairs(report):
    return {name: (v.numerator, v.denominator) if v.is_computed else None for name, v in report.metrics.items()}


def test_1_petstore_golden(petstore):
    with criterion("1 petstore golden report", 1.0) as state:
        log = [
            ix("GET", f"{PETSTORE}/pets", 200, resp=JSON),
            ix("GET", f"{PETSTORE}/pets/42", 200, resp=JSON),
            ix("GET", f"{PETSTORE}/pets/42", 404),
            ix("GET", f"{PETSTORE}/unknown", 404),
        ]
        report = compute_report(petstore, match_log(petstore, log))
        assert pairs(report) == {
            "path": (2, 2),
            "operation": (2, 2),
            "parameter": (1, 1),
            "parameter_value": None,
            "request_content_type": None,
            "status_code_class": (2, 2),
            "status_code": (2, 2),
            "response_content_type": (2, 2),
        }
        diag = report.diagnostics
        assert diag.total_interactions - diag.matched_interactions == 1
        assert diag.unmatched["no_path"] == 1
        (undocumented,) = diag.undocumented_status_codes
        assert (undocumented.operation, undocumented.status, undocumented.covered_by) == ("GET /pets/{petId}", 404, "default")
        state["detail"] = "8 metrics exact, 1 unmatched, 404 described by 'default'"


def test_2_status_class_rule(petstore):
    with criterion("2 status class 50%/100% rule", 1.0) as state:
        url = f"{PETSTORE}/pets"
        cases = {
            "only 2XX": ([200, 201, 204], Fraction(1, 2)),
            "only 4XX/5XX": ([400, 404, 500, 503], Fraction(1, 2)),
            "mixed": ([200, 500], Fraction(1)),
        }
        for label, (statuses, expected) in cases.items():
            report = compute_report(petstore, match_log(petstore, [ix("GET", url, s) for s in statuses]))
            assert report.status_code_class.ratio == expected, label
        state["detail"] = "0.5, 0.5, 1.0"


def test_3_oracle_equivalence():
    with criterion("3 oracle equivalence, 500 seeded cases", 30.0) as state:
        for seed in range(500):
            try:
                test_metrics.check_oracle(random.Random(seed))
            except AssertionError as exc:
                raise AssertionError(f"seed {seed}: {exc}") from exc
        state["detail"] = "500/500 exact"


def test_4_property_suite():
    with criterion("4 metric properties, 200 cases each", 60.0) as state:
        for name, check in test_metrics.PROPERTY_CHECKS.items():
            for seed in range(200):
                try:
                    check(random.Random(seed))
                except AssertionError as exc:
                    raise AssertionError(f"{name}, seed {seed}: {exc}") from exc
        state["detail"] = f"{len(test_metrics.PROPERTY_CHECKS)} properties x 200 cases"


def test_5_matcher_properties():
    with criterion("5 matcher specificity/partition, 200 cases each", 30.0) as state:
        for seed in range(200):
            r = random.Random(seed)
            general, specific, path = test_matcher.specificity_case(r)
            templates = [general, specific]
            r.shuffle(templates)
            model = build_model({"openapi": "3.0.0", "paths": test_matcher.get_ops(*templates)})
            op, _ = match_operation(model, "GET", "http://h" + path)
            assert op.path_template == specific, f"seed {seed}: {path} matched {op.path_template}"
        for seed in range(200):
            r = random.Random(10_000 + seed)
            doc = random_spec_doc(r, max_ops=4)
            test_matcher.check_partition_and_oracle(doc, random_log(r, doc, max_len=20))
        state["detail"] = "200 specificity + 200 partition/brute-force cases"


def test_6_proxy_fidelity(tmp_path, fixtures):
    with criterion("6 proxy fidelity, 100 concurrent requests", 30.0) as state:
        seen, _, log = run_mixed(tmp_path / "capture.jsonl", count=100)
        assert len(seen) == 100
        assert len(log) == 100
        problems = fidelity_problems(seen, log)
        assert problems == [], problems[:5]
        model = load_spec((fixtures / "echo.yaml").read_bytes())
        report = compute_report(model, match_log(model, log))
        assert pairs(report) == MIXED_EXPECTED
        assert report.diagnostics.unmatched == MIXED_UNMATCHED
        state["detail"] = "100 records byte-identical, coverage as expected"


def test_7_format_round_trips(fixtures):
    with criterion("7 JSONL and HAR round-trips", 10.0) as state:
        for seed in range(200):
            log = test_traffic_log.random_log(random.Random(seed))
            assert test_traffic_log.roundtrip(log) == log, f"seed {seed}"
        har = read_har((fixtures / "two_entries.har").read_bytes())
        assert har.interactions == test_traffic_log.HAR_EXPECTED
        state["detail"] = "200 JSONL logs equal, HAR fixture matches"
