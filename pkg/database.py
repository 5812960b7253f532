"""
Run registry for ErrPilot sweeps.
Uses SQLite for zero-dependency portable storage.
Tracks every (method, alpha, subject, seed) cell of a protocol and its status.
"""

import sqlite3
import os
from dataclasses import dataclass
from typing import Optional, List
from datetime import datetime, timezone

from errors import InputError
from utils.paths import REGISTRY_FILE

STATUS_PENDING = "pending"
STATUS_RUNNING = "running"
STATUS_DONE = "done"
STATUS_FAILED = "failed"

STATUSES = (STATUS_PENDING, STATUS_RUNNING, STATUS_DONE, STATUS_FAILED)


@dataclass
class CellRecord:
    """One sweep cell as stored in the registry."""
    protocol: str = ""
    method: str = ""
    alpha: float = 0.0
    subject: str = ""
    seed: int = 0
    run_dir: str = ""
    status: str = STATUS_PENDING
    message: str = ""
    updated_at: str = ""


def _now() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="seconds")


class RunRegistry:
    """SQLite store of sweep cells and protocol metadata."""

    def __init__(self, db_path: str):
        self.db_path = db_path
        os.makedirs(os.path.dirname(os.path.abspath(db_path)), exist_ok=True)
        self._init_db()

    @classmethod
    def for_protocol_dir(cls, directory: str) -> "RunRegistry":
        return cls(os.path.join(directory, REGISTRY_FILE))

    def _get_conn(self) -> sqlite3.Connection:
        conn = sqlite3.connect(self.db_path, timeout=30.0)
        conn.row_factory = sqlite3.Row
        return conn

    def _init_db(self):
        conn = self._get_conn()
        try:
            conn.executescript("""
                CREATE TABLE IF NOT EXISTS cells (
                    protocol    TEXT NOT NULL,
                    method      TEXT NOT NULL,
                    alpha       REAL NOT NULL,
                    subject     TEXT NOT NULL,
                    seed        INTEGER NOT NULL,
                    run_dir     TEXT NOT NULL,
                    status      TEXT NOT NULL DEFAULT 'pending',
                    message     TEXT NOT NULL DEFAULT '',
                    updated_at  TEXT NOT NULL DEFAULT '',
                    PRIMARY KEY (protocol, method, alpha, subject, seed)
                );

                CREATE TABLE IF NOT EXISTS meta (
                    key   TEXT PRIMARY KEY,
                    value TEXT NOT NULL DEFAULT ''
                );
            """)
            conn.commit()
        finally:
            conn.close()

    @staticmethod
    def _row_to_cell(row) -> CellRecord:
        return CellRecord(
            protocol=row["protocol"], method=row["method"], alpha=row["alpha"],
            subject=row["subject"], seed=row["seed"], run_dir=row["run_dir"],
            status=row["status"], message=row["message"], updated_at=row["updated_at"]
        )

    # ---- Cells --------------------------------------------------------------------------------------------

    def register_cell(self, cell: CellRecord):
        """Insert a cell, keeping the stored status if it already exists."""
        conn = self._get_conn()
        try:
            conn.execute(
                """INSERT INTO cells (protocol, method, alpha, subject, seed, run_dir, status,
                                      message, updated_at)
                   VALUES (?, ?, ?, ?, ?, ?, ?, ?, ?)
                   ON CONFLICT (protocol, method, alpha, subject, seed)
                   DO UPDATE SET run_dir = excluded.run_dir""",
                (cell.protocol, cell.method, float(cell.alpha), cell.subject, int(cell.seed),
                 cell.run_dir, cell.status, cell.message, _now())
            )
            conn.commit()
        finally:
            conn.close()

    def set_status(self, cell: CellRecord, status: str, message: str = ""):
        if status not in STATUSES:
            raise InputError(f"unknown cell status '{status}'")
        conn = self._get_conn()
        try:
            conn.execute(
                """UPDATE cells SET status = ?, message = ?, updated_at = ?
                   WHERE protocol = ? AND method = ? AND alpha = ? AND subject = ? AND seed = ?""",
                (status, message, _now(), cell.protocol, cell.method, float(cell.alpha),
                 cell.subject, int(cell.seed))
            )
            conn.commit()
        finally:
            conn.close()

    def get_cell(self, protocol: str, method: str, alpha: float,
                 subject: str, seed: int) -> Optional[CellRecord]:
        conn = self._get_conn()
        try:
            row = conn.execute(
                """SELECT * FROM cells
                   WHERE protocol = ? AND method = ? AND alpha = ? AND subject = ? AND seed = ?""",
                (protocol, method, float(alpha), subject, int(seed))
            ).fetchone()
            return self._row_to_cell(row) if row else None
        finally:
            conn.close()

    def get_cells(self, status: Optional[str] = None) -> List[CellRecord]:
        conn = self._get_conn()
        try:
            if status is None:
                rows = conn.execute(
                    "SELECT * FROM cells ORDER BY method, alpha, subject, seed"
                ).fetchall()
            else:
                rows = conn.execute(
                    "SELECT * FROM cells WHERE status = ? ORDER BY method, alpha, subject, seed",
                    (status,)
                ).fetchall()
            return [self._row_to_cell(r) for r in rows]
        finally:
            conn.close()

    def get_status_counts(self) -> dict:
        conn = self._get_conn()
        try:
            rows = conn.execute(
                "SELECT status, COUNT(*) as cnt FROM cells GROUP BY status"
            ).fetchall()
            return {r["status"]: r["cnt"] for r in rows}
        finally:
            conn.close()

    # ---- Meta ---------------------------------------------------------------------------------------------

    def get_meta(self, key: str, default: str = "") -> str:
        conn = self._get_conn()
        try:
            row = conn.execute(
                "SELECT value FROM meta WHERE key = ?", (key,)
            ).fetchone()
            return row["value"] if row else default
        finally:
            conn.close()

    def set_meta(self, key: str, value: str):
        conn = self._get_conn()
        try:
            conn.execute(
                "INSERT OR REPLACE INTO meta (key, value) VALUES (?, ?)",
                (key, value)
            )
            conn.commit()
        finally:
            conn.close()
