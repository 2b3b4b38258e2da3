from __future__ import annotations

import numpy as np
import pytest

from spreadrisk.model import make_network


def random_network(rng: np.random.Generator, n: int, density: float = 0.2, *, beta_max: float = 0.5,
                   delta: tuple[float, float] = (0.5, 1.5), cost: tuple[float, float] = (0.0, 1.0),
                   ranges: bool = False):
    """Random directed network without self-loops.

    With ``ranges`` every rate gets a nontrivial ``[lo, hi]`` interval so all
    resource channels have room.
    """
    mask = rng.random((n, n)) < density
    np.fill_diagonal(mask, False)
    dst, src = np.nonzero(mask)
    beta_hi = rng.uniform(0.05, beta_max, src.size)
    d_lo = rng.uniform(*delta, n)
    kwargs = {}
    if ranges:
        kwargs = dict(beta_lo=beta_hi * rng.uniform(0.05, 0.5, src.size),
                      delta_hi=d_lo * rng.uniform(1.2, 2.0, n),
                      lambda_hi=rng.uniform(0.2, 2.0, n), tau_hi=rng.uniform(0.5, 1.0, n))
    return make_network(n, src, dst, beta_hi, delta_lo=d_lo, cost=rng.uniform(*cost, n), **kwargs)


def dense_abscissa(A) -> float:
    """Independent oracle: largest real eigenvalue part of a dense copy."""
    M = A.toarray() if hasattr(A, "toarray") else np.asarray(A)
    return float(np.max(np.linalg.eigvals(M).real))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


_ACCEPTANCE: dict[int, tuple[str, str]] = {}


def pytest_runtest_logreport(report):
    name = report.nodeid.rsplit("::", 1)[-1]
    if "test_acceptance.py" not in report.nodeid or not name.startswith("test_criterion_"):
        return
    k = int(name.split("_")[2])
    if report.when == "call" or (report.when == "setup" and report.outcome != "passed"):
        detail = dict(report.user_properties).get("detail", "")
        _ACCEPTANCE[k] = ("PASS" if report.outcome == "passed" else "FAIL", detail)


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(_ACCEPTANCE):
        outcome, detail = _ACCEPTANCE[k]
        terminalreporter.write_line(f"criterion {k:2d}: {outcome}  {detail}")
