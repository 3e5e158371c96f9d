import hashlib
import os
import pickle
from pathlib import Path

import pytest

ROOT = Path(__file__).resolve().parents[1]
CACHE = ROOT / ".acceptance_cache"

# filled by the acceptance tests, printed at the end of the session
RESULTS = {}


def record(criterion, ok, detail):
    RESULTS[criterion] = (bool(ok), detail)
    print(f"criterion {criterion}: {'PASS' if ok else 'FAIL'} - {detail}")
    return ok


def pytest_terminal_summary(terminalreporter):
    if not RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(RESULTS):
        ok, detail = RESULTS[k]
        terminalreporter.write_line(f"criterion {k}: {'PASS' if ok else 'FAIL'} - {detail}")


def _source_digest():
    h = hashlib.sha256()
    for p in sorted((ROOT / "src" / "dnsarsa").glob("*.py")):
        h.update(p.name.encode())
        h.update(p.read_bytes())
    return h.hexdigest()[:16]


@pytest.fixture(scope="session")
def acceptance_batch():
    """13 seeds x 100k steps with the default configuration, cached on disk.

    The cache key covers the package source and the configuration, so any
    code change re-runs the batch. ``DNSARSA_WORKERS`` sets the process count.
    """
    from dnsarsa.experiment import ExperimentConfig, run_batch

    cfg = ExperimentConfig(seed=0)
    key = hashlib.sha256((_source_digest() + repr(cfg)).encode()).hexdigest()[:16]
    path = CACHE / f"batch13_{key}.pkl"
    if path.exists():
        with open(path, "rb") as fh:
            return cfg, pickle.load(fh)
    workers = int(os.environ.get("DNSARSA_WORKERS", "0")) or None
    res = run_batch(cfg, 13, workers=workers)
    CACHE.mkdir(exist_ok=True)
    with open(path, "wb") as fh:
        pickle.dump(res, fh)
    return cfg, res
