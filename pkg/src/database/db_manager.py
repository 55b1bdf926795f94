import sqlite3
import json
from dataclasses import asdict, dataclass, field
from datetime import datetime
from pathlib import Path
from typing import Any, Dict, List, Optional

from ..services.search_service import TrialRecord, best_trial


@dataclass
class RunManifest:
    """What one command consumed and produced."""

    command: str
    config: Dict[str, Any] = field(default_factory=dict)
    fingerprints: Dict[str, str] = field(default_factory=dict)
    seed: Optional[int] = None
    artifacts: Dict[str, str] = field(default_factory=dict)
    metrics: Dict[str, Any] = field(default_factory=dict)
    created_at: str = field(default_factory=lambda: datetime.now().isoformat())

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=2, sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "RunManifest":
        return cls(**json.loads(text))


class DatabaseManager:
    """SQLite store of run manifests and search trial logs."""

    def __init__(self, db_file="runs.db"):
        self.db_file = str(db_file)
        Path(self.db_file).parent.mkdir(parents=True, exist_ok=True)
        self._create_tables()

    def _create_tables(self):
        conn = sqlite3.connect(self.db_file)
        c = conn.cursor()

        c.execute('''CREATE TABLE IF NOT EXISTS runs
                    (id INTEGER PRIMARY KEY AUTOINCREMENT,
                     command TEXT,
                     config TEXT,
                     fingerprints TEXT,
                     seed INTEGER,
                     artifacts TEXT,
                     metrics TEXT,
                     created_at TIMESTAMP)''')

        c.execute('''CREATE TABLE IF NOT EXISTS trials
                    (id INTEGER PRIMARY KEY AUTOINCREMENT,
                     run_id INTEGER,
                     trial_index INTEGER,
                     config TEXT,
                     mrr FLOAT,
                     status TEXT,
                     error TEXT,
                     FOREIGN KEY (run_id) REFERENCES runs(id))''')

        conn.commit()
        conn.close()

    def record_run(self, manifest: RunManifest) -> int:
        conn = sqlite3.connect(self.db_file)
        c = conn.cursor()
        try:
            c.execute("""INSERT INTO runs
                        (command, config, fingerprints, seed, artifacts, metrics, created_at)
                        VALUES (?, ?, ?, ?, ?, ?, ?)""",
                      (manifest.command, json.dumps(manifest.config),
                       json.dumps(manifest.fingerprints), manifest.seed,
                       json.dumps(manifest.artifacts), json.dumps(manifest.metrics),
                       manifest.created_at))
            run_id = c.lastrowid
            conn.commit()
            return run_id
        finally:
            conn.close()

    def get_run(self, run_id: int) -> Optional[RunManifest]:
        conn = sqlite3.connect(self.db_file)
        conn.row_factory = sqlite3.Row
        c = conn.cursor()
        try:
            c.execute("SELECT * FROM runs WHERE id = ?", (run_id,))
            row = c.fetchone()
            return self._manifest_from_row(row) if row else None
        finally:
            conn.close()

    def get_runs(self, command: str = None, limit: int = 50) -> List[Dict[str, Any]]:
        conn = sqlite3.connect(self.db_file)
        conn.row_factory = sqlite3.Row
        c = conn.cursor()
        try:
            if command:
                c.execute("""SELECT * FROM runs WHERE command = ?
                            ORDER BY id DESC LIMIT ?""", (command, limit))
            else:
                c.execute("SELECT * FROM runs ORDER BY id DESC LIMIT ?", (limit,))
            return [dict(row) for row in c.fetchall()]
        finally:
            conn.close()

    def save_trials(self, run_id: int, trials: List[TrialRecord]):
        conn = sqlite3.connect(self.db_file)
        c = conn.cursor()
        try:
            c.executemany("""INSERT INTO trials
                            (run_id, trial_index, config, mrr, status, error)
                            VALUES (?, ?, ?, ?, ?, ?)""",
                          [(run_id, t.index, json.dumps(t.config), t.mrr, t.status, t.error)
                           for t in trials])
            conn.commit()
        finally:
            conn.close()

    def get_trials(self, run_id: int) -> List[TrialRecord]:
        conn = sqlite3.connect(self.db_file)
        conn.row_factory = sqlite3.Row
        c = conn.cursor()
        try:
            c.execute("""SELECT * FROM trials WHERE run_id = ?
                        ORDER BY trial_index""", (run_id,))
            return [
                TrialRecord(
                    index=row["trial_index"],
                    config=json.loads(row["config"]),
                    mrr=row["mrr"],
                    status=row["status"],
                    error=row["error"],
                )
                for row in c.fetchall()
            ]
        finally:
            conn.close()

    def best_trial(self, run_id: int) -> Optional[TrialRecord]:
        """Argmax of a stored trials log, by the same rule the search uses."""
        return best_trial(self.get_trials(run_id))

    def get_trial_summary(self, run_id: int) -> Dict[str, Any]:
        conn = sqlite3.connect(self.db_file)
        c = conn.cursor()
        try:
            c.execute("""SELECT
                        COUNT(*) as total_trials,
                        SUM(CASE WHEN status = 'ok' THEN 1 ELSE 0 END) as succeeded,
                        MAX(mrr) as best_mrr,
                        AVG(mrr) as avg_mrr
                        FROM trials
                        WHERE run_id = ?""", (run_id,))
            row = c.fetchone()
            return {
                'total_trials': row[0],
                'succeeded': row[1] or 0,
                'best_mrr': row[2],
                'avg_mrr': row[3],
            }
        finally:
            conn.close()

    @staticmethod
    def _manifest_from_row(row) -> RunManifest:
        return RunManifest(
            command=row["command"],
            config=json.loads(row["config"]),
            fingerprints=json.loads(row["fingerprints"]),
            seed=row["seed"],
            artifacts=json.loads(row["artifacts"]),
            metrics=json.loads(row["metrics"]),
            created_at=str(row["created_at"]),
        )
