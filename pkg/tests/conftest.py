import time

import numpy as np
import pytest

import safeadp as sa


class RunResult:
    def __init__(self, problem, log, summary, wall):
        self.problem = problem
        self.log = log
        self.summary = summary
        self.wall = wall


def _execute(name):
    cfg = sa.preset(name)
    problem, _ = sa.build_problem(cfg)
    t0 = time.time()
    log, summary = sa.run(problem)
    return RunResult(problem, log, summary, time.time() - t0)


@pytest.fixture(scope="session")
def study1_run():
    return _execute("study1")


@pytest.fixture(scope="session")
def study2_run():
    return _execute("study2")


@pytest.fixture(scope="session")
def study2_nocbf_run():
    return _execute("study2_nocbf")


@pytest.fixture(scope="session")
def oracle_run():
    return _execute("lq_oracle")


@pytest.fixture(scope="session")
def study_model():
    return sa.vamvoudakis2d(u_bar=10.0, box_halfwidth=3.0)


@pytest.fixture(scope="session")
def rng():
    return np.random.default_rng(12345)
