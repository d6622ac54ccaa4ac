import numpy as np
import pytest

from metades.dataset import MinMaxScaler, SplitSpec, stratified_split
from metades.linear_classifiers import bagging_generate
from metades.synthetic import gaussians


@pytest.fixture(scope="session")
def parts():
    """Scaled (train, meta_train, dsel, test) of a 400-sample two-Gaussian problem."""
    ds = gaussians(n=400, seed=3)
    train, meta, dsel, test = stratified_split(ds, SplitSpec(seed=1))
    sc = MinMaxScaler().fit(np.vstack([train.features, meta.features]))
    return tuple(sc.transform(p) for p in (train, meta, dsel, test))


@pytest.fixture(scope="session")
def pool(parts):
    return bagging_generate(parts[0], M=15, seed=2, epochs=20)


def pytest_terminal_summary(terminalreporter):
    lines = []
    for outcome in ("passed", "failed"):
        for rep in terminalreporter.stats.get(outcome, []):
            if rep.when != "call" or "test_acceptance" not in rep.nodeid:
                continue
            props = dict(rep.user_properties)
            lines.append((props.get("criterion", 0), f"[{outcome.upper()[:4]}] criterion {props.get('criterion', '?')}: "
                          f"{props.get('title', rep.nodeid)} -- {props.get('detail', '')}"))
    if lines:
        terminalreporter.section("acceptance criteria")
        for _, line in sorted(lines):
            terminalreporter.write_line(line)
