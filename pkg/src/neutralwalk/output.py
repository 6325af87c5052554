"""CSV and JSON serialization of explorations, batches and sweeps.

Files are written to a temporary sibling and renamed into place, so an
interrupted write never leaves a half-written file behind.  Floats carry six
significant digits and all formatting ignores the locale.
"""

from __future__ import annotations

import json
import os
import tempfile
from pathlib import Path
from typing import Dict, Iterable, List, Mapping, Optional, Sequence, Tuple, Union

import numpy as np

from .experiments import RunAggregate
from .explorer import BOUNDARY, NEUTRAL, ExplorationResult, TopologyReport, evolvability, nn_size
from .genotypes import ModelKind

SERIES_HEADER = ("step", "nn_size", "unique_boundary_phenotypes", "duplicates")
EDGES_HEADER = ("src_id", "dst_id", "target_class")
SWEEP_HEADER = (
    "model",
    "parameter",
    "value",
    "runs",
    "nn_size_mean",
    "nn_size_std",
    "nn_size_min",
    "nn_size_max",
    "evolvability_mean",
    "evolvability_std",
    "evolvability_min",
    "evolvability_max",
)


def fmt(value) -> str:
    """Locale-independent text for one CSV cell."""
    if value is None:
        return ""
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        if float(value).is_integer() and abs(value) < 1e15:
            return str(int(value))
        return format(float(value), ".6g")
    if hasattr(value, "value"):
        return str(value.value)
    return str(value)


def _json_number(value):
    if value is None:
        return None
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, (int, np.integer)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        v = float(format(float(value), ".6g"))
        return int(v) if v.is_integer() and abs(v) < 1e15 else v
    return value


def _atomic_write(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", dir=path.parent)
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except OSError as exc:
        try:
            os.unlink(tmp)
        except OSError:
            pass
        raise OSError(exc.errno, f"cannot write {path}: {exc.strerror}") from exc


def _csv(header: Sequence[str], rows: Iterable[Sequence]) -> str:
    lines = [",".join(header)]
    lines.extend(",".join(fmt(v) for v in row) for row in rows)
    return "\n".join(lines) + "\n"


def _json(data: Mapping) -> str:
    return json.dumps(data, indent=2, sort_keys=False) + "\n"


def _alpha_value(alpha):
    if isinstance(alpha, float) and alpha.is_integer():
        return int(alpha)
    return alpha


def result_summary(
    result: ExplorationResult, topology: Optional[TopologyReport] = None, max_steps: Optional[int] = None
) -> Dict:
    cfg = result.config
    return {
        "model": cfg.model.value,
        "task_count": cfg.task_count,
        "fleet_size": cfg.fleet_size,
        "alpha": _json_number(_alpha_value(result.alpha)),
        "max_steps": max_steps if max_steps is not None else result.steps_executed,
        "seed": result.seed,
        "nn_size": nn_size(result),
        "evolvability": evolvability(result),
        "steps_executed": result.steps_executed,
        "degree_average": _json_number(topology.degree_average) if topology else None,
        "path_length_average": _json_number(topology.path_length_average) if topology else None,
    }


def write_exploration(
    result: ExplorationResult,
    out_dir: Union[str, Path],
    topology: Optional[TopologyReport] = None,
    max_steps: Optional[int] = None,
) -> List[Path]:
    out = Path(out_dir)
    summary = result_summary(result, topology, max_steps)
    flags = result.neutral_flags
    files = {
        "series.csv": _csv(SERIES_HEADER, result.series.tolist()),
        "edges.csv": _csv(EDGES_HEADER, ((u, v, NEUTRAL if flags[v] else BOUNDARY) for u, v in result.edges)),
        "summary.json": _json(summary),
    }
    return _write_all(out, files)


def aggregate_summary(agg: RunAggregate) -> Dict:
    cfg = agg.config
    nn, ev = agg.nn_size, agg.evolvability
    return {
        "model": cfg.model.value,
        "task_count": cfg.task_count,
        "fleet_size": cfg.fleet_size,
        "alpha": _json_number(_alpha_value(agg.alpha)),
        "max_steps": agg.max_steps,
        "seed": agg.master_seed,
        "nn_size": _json_number(nn.mean),
        "evolvability": _json_number(ev.mean),
        "steps_executed": _json_number(float(np.mean(agg.steps_executed))),
        "degree_average": _json_number(agg.degree_average),
        "path_length_average": _json_number(agg.path_length_average),
        "runs": agg.run_count,
        "nn_size_std": _json_number(nn.std),
        "evolvability_std": _json_number(ev.std),
    }


def sweep_rows(table: Mapping[Tuple[ModelKind, object], RunAggregate], parameter: str) -> List[Tuple]:
    rows = []
    for (model, value), agg in table.items():
        nn, ev = agg.nn_size, agg.evolvability
        rows.append(
            (
                ModelKind(model).value,
                parameter,
                _alpha_value(value),
                agg.run_count,
                nn.mean,
                nn.std,
                nn.min,
                nn.max,
                ev.mean,
                ev.std,
                ev.min,
                ev.max,
            )
        )
    return rows


def write_aggregate(agg: RunAggregate, out_dir: Union[str, Path]) -> List[Path]:
    files = {
        "series.csv": _csv(SERIES_HEADER, agg.mean_series.tolist()),
        "summary.json": _json(aggregate_summary(agg)),
    }
    return _write_all(Path(out_dir), files)


def write_sweep_csv(
    table: Mapping[Tuple[ModelKind, object], RunAggregate], out_dir: Union[str, Path], parameter: str
) -> List[Path]:
    return _write_all(Path(out_dir), {"sweep.csv": _csv(SWEEP_HEADER, sweep_rows(table, parameter))})


def write_sweep(
    table: Mapping[Tuple[ModelKind, object], RunAggregate],
    out_dir: Union[str, Path],
    parameter: str,
) -> List[Path]:
    """``sweep.csv`` plus one ``<model>_<parameter><value>/`` directory per cell."""
    out = Path(out_dir)
    written = write_sweep_csv(table, out, parameter)
    for (model, value), agg in table.items():
        sub = out / f"{ModelKind(model).value}_{parameter}{fmt(_alpha_value(value))}"
        written += write_aggregate(agg, sub)
    return written


def write_outputs(obj, out_dir: Union[str, Path], **kwargs) -> List[Path]:
    """Write whatever ``obj`` is: an exploration, a batch aggregate or a sweep table."""
    if isinstance(obj, ExplorationResult):
        return write_exploration(obj, out_dir, **kwargs)
    if isinstance(obj, RunAggregate):
        return write_aggregate(obj, out_dir, **kwargs)
    if isinstance(obj, Mapping):
        return write_sweep(obj, out_dir, **kwargs)
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def _write_all(out: Path, files: Mapping[str, str]) -> List[Path]:
    written = []
    for name, text in files.items():
        path = out / name
        _atomic_write(path, text)
        written.append(path)
    return written
