import os
import sys

import numpy as np
import pytest

sys.path.insert(0, os.path.dirname(__file__))

MNIST_DIR = os.environ.get("FPENGINE_MNIST_DIR", "/root/data/mnist")
TRAIN_IMAGES = os.path.join(MNIST_DIR, "train-images-idx3-ubyte")
TRAIN_LABELS = os.path.join(MNIST_DIR, "train-labels-idx1-ubyte")


@pytest.fixture(scope="session")
def mnist_paths():
    if not (os.path.exists(TRAIN_IMAGES) and os.path.exists(TRAIN_LABELS)):
        pytest.skip(f"MNIST IDX files not found in {MNIST_DIR} (set FPENGINE_MNIST_DIR)")
    return TRAIN_IMAGES, TRAIN_LABELS


@pytest.fixture(scope="session")
def mnist(mnist_paths):
    from fpengine.formats import load_idx
    return load_idx(mnist_paths[0]), load_idx(mnist_paths[1])


def random_sdrs(rng, n, d=64, p=0.25):
    x = (rng.random((n, d)) < p).astype(np.float64)
    x[x.sum(axis=1) == 0, 0] = 1.0
    return x


def prototype_stream(rng, n, d=64, prototypes=12, p=0.25, flip=0.05):
    """Noisy copies of a few random prototypes, so thresholds actually group inputs."""
    protos = random_sdrs(rng, prototypes, d, p)
    picks = rng.integers(0, prototypes, n)
    flips = rng.random((n, d)) < flip
    x = np.abs(protos[picks] - flips)
    x[x.sum(axis=1) == 0, 0] = 1.0
    return x


# --- acceptance reporting -----------------------------------------------------

ACCEPTANCE: dict[str, tuple[str, str]] = {}


@pytest.fixture
def criterion(request):
    """Record one PASS/FAIL line for an acceptance criterion.

    Usage: ``criterion("C1", "what was measured")`` at the end of the test
    body; if the test fails first, the line is recorded as FAIL.
    """
    name = request.node.name
    state = {}

    def record(label, detail):
        state["label"], state["detail"] = label, detail

    yield record
    label = state.get("label", name)
    rep = getattr(request.node, "rep_call", None)
    ok = rep is not None and rep.passed
    line = f"{label} {'PASS' if ok else 'FAIL'}  {state.get('detail', '')}"
    ACCEPTANCE[label] = (line, name)
    print("\n" + line)


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    if rep.when == "call":
        item.rep_call = rep


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for label in sorted(ACCEPTANCE, key=lambda s: int(s[1:])):
            terminalreporter.write_line(ACCEPTANCE[label][0])
