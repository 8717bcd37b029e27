import json
import os
import sys
from pathlib import Path

import pytest

sys.path.insert(0, os.path.dirname(__file__))

from gzpar import fixtures  # noqa: E402

_RESULTS = {}


class Corpus:
    """Seeded fixtures compressed with the system gzip, cached across runs."""

    def __init__(self, root: Path):
        self.root = root
        root.mkdir(parents=True, exist_ok=True)

    def raw_path(self, kind, size, seed=7):
        p = self.root / f"{kind}-{size}-s{seed}.raw"
        if not p.exists():
            tmp = p.with_suffix(".tmp")
            tmp.write_bytes(fixtures.generate(kind, size, seed))
            tmp.rename(p)
        return p

    def gz_path(self, kind, size, level, seed=7):
        p = self.root / f"{kind}-{size}-s{seed}.{level}.gz"
        if not p.exists():
            raw = self.raw_path(kind, size, seed).read_bytes()
            tmp = p.with_suffix(".tmp")
            tmp.write_bytes(fixtures.reference_compress(raw, level))
            tmp.rename(p)
        return p

    def raw(self, kind, size, seed=7):
        return self.raw_path(kind, size, seed).read_bytes()

    def gz(self, kind, size, level, seed=7):
        return self.gz_path(kind, size, level, seed).read_bytes()

    def boundaries(self, kind, size, level, seed=7):
        """Block list of the reference inflater (cached as JSON)."""
        from reference_inflate import inflate_gzip

        p = self.root / f"{kind}-{size}-s{seed}.{level}.blocks.json"
        if not p.exists():
            _, blocks, end, _ = inflate_gzip(self.gz(kind, size, level, seed))
            p.write_text(json.dumps({"blocks": blocks, "end_bit": end}))
        return json.loads(p.read_text())


@pytest.fixture(scope="session")
def corpus(request):
    return Corpus(Path(request.config.cache.mkdir("gzpar_fixtures")))


@pytest.fixture
def criterion():
    """Record an acceptance criterion outcome for the end-of-run summary."""

    def record(number, passed, detail=""):
        _RESULTS[number] = (bool(passed), detail)
        print(f"criterion {number}: {'PASS' if passed else 'FAIL'} {detail}")

    return record


def pytest_terminal_summary(terminalreporter):
    if not _RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_RESULTS):
        ok, detail = _RESULTS[n]
        terminalreporter.write_line(f"criterion {n:2d}: {'PASS' if ok else 'FAIL'}  {detail}")


def pytest_configure(config):
    config.addinivalue_line("markers", "slow: long-running acceptance checks")
