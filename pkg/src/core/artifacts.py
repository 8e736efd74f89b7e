"""
CSV / JSON result writers

Every CSV starts with a `# config-hash: <sha256>` line followed by the
header row; floats are written with 17 significant digits so identical
runs produce identical files.
"""
import csv
import hashlib
import json
import logging
import math
from pathlib import Path
from typing import Any, Dict, Iterable, List, Optional, Sequence

logger = logging.getLogger(__name__)


def canonical_json(payload: Any) -> str:
    return json.dumps(payload, sort_keys=True, separators=(",", ":"), default=_default)


def config_hash(config: Dict[str, Any]) -> str:
    """sha256 of the canonical JSON rendering"""
    return hashlib.sha256(canonical_json(config).encode("utf-8")).hexdigest()


def _default(value: Any) -> Any:
    if hasattr(value, "tolist"):
        return value.tolist()
    if hasattr(value, "to_dict"):
        return value.to_dict()
    return str(value)


def format_cell(value: Any) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        if math.isnan(value):
            return "nan"
        return repr(value) if math.isinf(value) else f"{value:.17g}"
    if isinstance(value, (list, tuple)):
        return " ".join(format_cell(v) for v in value)
    if hasattr(value, "item"):
        return format_cell(value.item())
    return str(value)


def write_csv(
    path: Path,
    columns: Sequence[str],
    rows: Iterable[Dict[str, Any]],
    digest: Optional[str] = None,
) -> Path:
    """Write rows in the fixed column order; missing cells are left empty"""
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as f:
        if digest is not None:
            f.write(f"# config-hash: {digest}\n")
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(list(columns))
        count = 0
        for row in rows:
            writer.writerow([format_cell(row.get(c)) for c in columns])
            count += 1
    logger.info(f"wrote {count} rows to {path}")
    return path


def read_csv(path: Path) -> List[Dict[str, str]]:
    """Rows of a CSV written by write_csv (comment lines skipped)"""
    with open(path, newline="", encoding="utf-8") as f:
        lines = [line for line in f if not line.startswith("#")]
    return list(csv.DictReader(lines))


def _sanitize(value: Any) -> Any:
    if isinstance(value, float) and not math.isfinite(value):
        return None if math.isnan(value) else ("inf" if value > 0 else "-inf")
    if isinstance(value, dict):
        return {str(k): _sanitize(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_sanitize(v) for v in value]
    return value


def write_json(path: Path, payload: Dict[str, Any]) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    text = json.dumps(_sanitize(json.loads(json.dumps(payload, default=_default))), indent=2, sort_keys=True)
    path.write_text(text + "\n", encoding="utf-8")
    logger.info(f"wrote {path}")
    return path


def write_error(out_dir: Optional[Path], record: Dict[str, Any]) -> Optional[Path]:
    if out_dir is None:
        return None
    return write_json(out_dir / "error.json", record)
