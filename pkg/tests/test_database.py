import pytest

from database import (STATUS_DONE, STATUS_FAILED, STATUS_PENDING, CellRecord, RunRegistry)
from errors import InputError


def cell(seed=0, alpha=0.3, subject="S01"):
    return CellRecord(protocol="sweep", method="rlihf", alpha=alpha, subject=subject, seed=seed,
                      run_dir=f"/runs/sweep/{alpha:g}/{subject}/{seed}")


def test_register_and_fetch(tmp_path):
    registry = RunRegistry.for_protocol_dir(str(tmp_path))
    registry.register_cell(cell())
    stored = registry.get_cell("sweep", "rlihf", 0.3, "S01", 0)
    assert stored.status == STATUS_PENDING
    assert stored.run_dir == "/runs/sweep/0.3/S01/0"
    assert registry.get_cell("sweep", "rlihf", 0.3, "S01", 1) is None


def test_re_registering_keeps_status(tmp_path):
    registry = RunRegistry(str(tmp_path / "r.db"))
    registry.register_cell(cell())
    registry.set_status(cell(), STATUS_DONE)
    registry.register_cell(cell())
    assert registry.get_cell("sweep", "rlihf", 0.3, "S01", 0).status == STATUS_DONE


def test_status_queries(tmp_path):
    registry = RunRegistry(str(tmp_path / "r.db"))
    for seed in range(3):
        registry.register_cell(cell(seed=seed))
    registry.set_status(cell(seed=1), STATUS_FAILED, "stream exhausted")
    failed = registry.get_cells(STATUS_FAILED)
    assert [(c.seed, c.message) for c in failed] == [(1, "stream exhausted")]
    assert registry.get_status_counts() == {STATUS_PENDING: 2, STATUS_FAILED: 1}
    assert [c.seed for c in registry.get_cells()] == [0, 1, 2]


def test_unknown_status_rejected(tmp_path):
    with pytest.raises(InputError):
        RunRegistry(str(tmp_path / "r.db")).set_status(cell(), "lost")


def test_meta_values(tmp_path):
    registry = RunRegistry(str(tmp_path / "r.db"))
    assert registry.get_meta("fingerprint", "none") == "none"
    registry.set_meta("fingerprint", "abc")
    registry.set_meta("fingerprint", "def")
    assert RunRegistry(str(tmp_path / "r.db")).get_meta("fingerprint") == "def"
