"""Shared fixtures: one full-scale trained setup reused across test modules.

Training the classifier and the attention network takes well under a minute
on a CPU; doing it once per session keeps both the attention unit tests and
the acceptance suite honest (they probe the same artifacts a user would get).
"""

from __future__ import annotations

import re
import time
from dataclasses import dataclass

import pytest

from scanpaths.attention import AttentionModel, AttentionTrainConfig, new_attention_model, train_attention
from scanpaths.data import LabeledStimulus, make_synthetic_dataset
from scanpaths.foveation import FoveationConfig
from scanpaths.tasks import TaskModel, TaskTrainConfig, train_classifier

DATASET_SEED = 7
TRAIN_SIZE = 2000
TEST_SIZE = 500
FOVEATION = FoveationConfig(sigma_fovea=0.12, sigma_blur=0.10, gamma=0.3)
HORIZON = 5


@dataclass
class TrainedWorld:
    train: list[LabeledStimulus]
    test: list[LabeledStimulus]
    task: TaskModel
    attn: AttentionModel
    foveation: FoveationConfig
    horizon: int
    train_seconds: float


@pytest.fixture(scope="session")
def trained_world() -> TrainedWorld:
    t0 = time.time()
    samples = make_synthetic_dataset(TRAIN_SIZE + TEST_SIZE, seed=DATASET_SEED)
    train, test = samples[:TRAIN_SIZE], samples[TRAIN_SIZE:]
    task = train_classifier(train, TaskTrainConfig(seed=0))
    attn = new_attention_model(3, width=16, foveation=FOVEATION, seed=0)
    attn = train_attention(
        attn,
        task,
        train,
        AttentionTrainConfig(horizon=HORIZON, unroll_depth=1, epochs=6, batch_size=64, lr=1e-3, seed=0, foveation=FOVEATION),
    )
    return TrainedWorld(
        train=train,
        test=test,
        task=task,
        attn=attn,
        foveation=FOVEATION,
        horizon=HORIZON,
        train_seconds=time.time() - t0,
    )


# --------------------------------------------------------------------------
# acceptance reporting: one summary line per criterion, whatever the outcome
# --------------------------------------------------------------------------

ACCEPTANCE_RESULTS: dict[int, str] = {}


def pytest_runtest_logreport(report):
    name = report.nodeid.rsplit("::", 1)[-1]
    match = re.match(r"test_criterion_(\d+)", name)
    if not match:
        return
    n = int(match.group(1))
    if report.skipped:
        reason = ""
        if isinstance(report.longrepr, tuple):
            reason = f" ({report.longrepr[2].removeprefix('Skipped: ')})"
        ACCEPTANCE_RESULTS[n] = f"SKIPPED{reason}"
    elif report.when == "call":
        ACCEPTANCE_RESULTS[n] = "PASS" if report.passed else "FAIL"


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE_RESULTS):
        terminalreporter.write_line(f"criterion {n}: {ACCEPTANCE_RESULTS[n]}")
