"""
Run metrics (prometheus-client)

Batch runs have no scrape endpoint, so the registry is exported as a
textfile next to the CSV/JSON artifacts.
"""
import time
from contextlib import contextmanager
from pathlib import Path
from typing import Iterator

from prometheus_client import CollectorRegistry, Counter, Gauge, Histogram, write_to_textfile

REGISTRY = CollectorRegistry()

EIGENSOLVES = Counter(
    "binding_bench_eigensolves_total",
    "Lowest-eigenpair solves",
    ["method"],
    registry=REGISTRY,
)
LINEAR_SOLVES = Counter(
    "binding_bench_linear_solves_total",
    "Projected resolvent linear solves",
    registry=REGISTRY,
)
STAGE_SECONDS = Histogram(
    "binding_bench_stage_seconds",
    "Wall time per computational stage",
    ["stage"],
    registry=REGISTRY,
    buckets=(0.01, 0.1, 0.5, 1.0, 5.0, 30.0, 120.0, 600.0),
)
BASIS_DIMENSION = Gauge(
    "binding_bench_basis_dimension",
    "Dimension of the most recently built Fock basis",
    ["basis"],
    registry=REGISTRY,
)


@contextmanager
def stage_timer(stage: str) -> Iterator[None]:
    """Observe the wall time of the enclosed block under `stage`"""
    start = time.perf_counter()
    try:
        yield
    finally:
        STAGE_SECONDS.labels(stage=stage).observe(time.perf_counter() - start)


def write_metrics(out_dir: Path) -> Path:
    """Write the registry in Prometheus text format to out_dir/metrics.prom"""
    out_dir.mkdir(parents=True, exist_ok=True)
    path = out_dir / "metrics.prom"
    write_to_textfile(str(path), REGISTRY)
    return path
