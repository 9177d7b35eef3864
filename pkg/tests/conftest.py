import csv

import numpy as np
import pytest

from simplexreg.composition import close

CELL_TYPES = ["B", "T.CD4", "T.CD8", "Macro", "NK", "Mast", "DC", "Eos", "Neut"]


def random_composition(rng, n, D, weights="average", spread=1.0):
    return close(np.exp(rng.normal(0.0, spread, (n, D))),
                 [f"p{j}" for j in range(D)], weights=weights)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def write_cohort(path, n=160, seed=3, zero_below=0.004, race_effect=None):
    """Synthetic immune-fraction cohort: 9 parts, race (AA/EA) and age."""
    r = np.random.default_rng(seed)
    race = np.where(r.random(n) < 0.25, "AA", "EA")
    age = np.round(r.normal(65, 12, n), 1)
    base = np.log([0.08, 0.25, 0.12, 0.35, 0.05, 0.06, 0.05, 0.01, 0.03])
    eff = np.array([0.4, 0.45, -0.1, -0.3, 0, 0, 0, 0, 0] if race_effect is None
                   else race_effect)
    lv = base + np.outer(race == "AA", eff) + r.normal(0, 0.7, (n, 9))
    v = np.exp(lv)
    v /= v.sum(axis=1, keepdims=True)
    v[v < zero_below] = 0.0
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["id", *CELL_TYPES, "race", "age"])
        for i in range(n):
            w.writerow([f"S{i:03d}", *(repr(float(x)) for x in v[i]), race[i], age[i]])
    return path


@pytest.fixture
def cohort_csv(tmp_path):
    return write_cohort(tmp_path / "cohort.csv")


_ACCEPTANCE = {}


def pytest_runtest_logreport(report):
    if "test_acceptance.py::test_criterion_" not in report.nodeid:
        return
    name = report.nodeid.split("::")[-1][len("test_criterion_"):]
    if report.skipped:
        _ACCEPTANCE[name] = "SKIPPED"
    elif report.failed:
        _ACCEPTANCE[name] = "FAIL"
    elif report.when == "call":
        _ACCEPTANCE.setdefault(name, "PASS")


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for name, status in _ACCEPTANCE.items():
        terminalreporter.write_line(f"{status:8s} criterion {name}")
