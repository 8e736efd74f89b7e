"""
Diagnostics ledger
Records flagged results, violated preconditions and slow or inaccurate
solver runs as JSON lines so a sweep can be audited after the fact
"""
import json
import logging
import os
from datetime import datetime
from pathlib import Path
from typing import Any, Dict, List, Optional

from .core.config import get_settings

logger = logging.getLogger(__name__)

SEVERITIES = ("LOW", "MEDIUM", "HIGH")


class DiagnosticsTracker:
    """Collects flags for one run; persists them when a path is configured"""

    def __init__(self, path: Optional[str] = None, slow_ms: float = 60_000.0):
        path = path or get_settings().DIAGNOSTICS_PATH
        self.path = Path(os.path.expanduser(path)) if path else None
        self.session_id = self._generate_session_id()
        self.slow_ms = slow_ms
        self.entries: List[Dict[str, Any]] = []

    def _generate_session_id(self) -> str:
        return f"session_{datetime.now().strftime('%Y%m%d_%H%M%S')}"

    def log_flag(
        self,
        kind: str,
        description: str,
        severity: str = "MEDIUM",
        context: Optional[Dict[str, Any]] = None,
        metrics: Optional[Dict[str, Any]] = None,
    ) -> Dict[str, Any]:
        """Record a flagged condition"""
        if severity not in SEVERITIES:
            severity = "MEDIUM"
        entry = {
            "session_id": self.session_id,
            "timestamp": datetime.now().isoformat(timespec="seconds"),
            "kind": kind,
            "severity": severity,
            "description": description,
        }
        if context:
            entry["context"] = context
        if metrics:
            entry["metrics"] = metrics
        self.entries.append(entry)

        if self.path is not None:
            self.path.parent.mkdir(parents=True, exist_ok=True)
            with open(self.path, "a") as f:
                f.write(json.dumps(entry, sort_keys=True, default=str) + "\n")

        logger.info(f"diagnostic flagged: {kind} - {description}")
        return entry

    def log_precondition(self, name: str, description: str, context: Optional[Dict[str, Any]] = None) -> None:
        """A precondition was violated but the computation continued"""
        self.log_flag("Precondition", f"{name}: {description}", severity="HIGH", context=context)

    def log_solver_run(
        self,
        operation: str,
        dimension: int,
        iterations: Optional[int],
        residual: float,
        duration_ms: float,
        tolerance: Optional[float] = None,
    ) -> None:
        """Flag solves that missed their tolerance or ran long"""
        metrics = {
            "dimension": dimension,
            "iterations": iterations,
            "residual": residual,
            "duration_ms": duration_ms,
        }
        if tolerance is not None and residual > tolerance:
            self.log_flag(
                "Solver Accuracy",
                f"{operation} residual {residual:.3e} above tolerance {tolerance:.1e}",
                severity="HIGH",
                metrics=metrics,
            )
        elif duration_ms > self.slow_ms:
            self.log_flag(
                "Performance Issue",
                f"slow {operation} on dimension {dimension}",
                severity="LOW",
                context={"hint": "lower n_max / N or raise --workers"},
                metrics=metrics,
            )

    def get_session_summary(self) -> Dict[str, Any]:
        by_severity = {s: 0 for s in SEVERITIES}
        for e in self.entries:
            by_severity[e["severity"]] += 1
        return {
            "session_id": self.session_id,
            "flags": [f"[{e['severity']}] {e['kind']}: {e['description']}" for e in self.entries],
            "by_severity": by_severity,
            "total": len(self.entries),
        }

