"""JSON and CSV readers/writers for grids, distributions, quotes, payoffs and allocations.

JSON is canonical.  Floats are written with Python's shortest round-trip
``repr``, so save/load is lossless.  CSV files carry one row per bin
(``bin_left,<column>``) followed by a closing row holding the last right
edge with an empty value; scalar header fields go on leading ``# key=value``
lines.
"""

from __future__ import annotations

import csv
import io as _io
import json
import math
import os
import tempfile
from pathlib import Path
from typing import Any

import numpy as np

from .allocator import Allocation
from .dist import Grid, ProbMass
from .errors import Unbounded
from .market import MarketQuotes
from .payoff import Payoff


class SchemaError(ValueError):
    """An input file does not match its schema."""

    def __init__(self, message: str, path: str | os.PathLike | None = None, field: str | None = None):
        where = f"{path}: " if path is not None else ""
        super().__init__(where + message)
        self.path = path
        self.field = field


def to_jsonable(obj: Any) -> Any:
    """Recursively convert numpy values, NaN and ``Unbounded`` into plain JSON types."""
    if isinstance(obj, Unbounded):
        return str(obj)
    if isinstance(obj, dict):
        return {str(k): to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [to_jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        if math.isnan(v):
            return None
        if math.isinf(v):
            return "+inf" if v > 0 else "-inf"
        return v
    return obj


def dumps(obj: Any) -> str:
    return json.dumps(to_jsonable(obj), indent=2, allow_nan=False) + "\n"


def write_text(path: str | os.PathLike, text: str) -> None:
    """Write atomically: the target either gets the full text or is left untouched."""
    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=path.parent or ".", prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


# --- parsing helpers -------------------------------------------------------


def read_json(path: str | os.PathLike) -> dict:
    try:
        with open(path, encoding="utf-8") as fh:
            data = json.load(fh)
    except FileNotFoundError:
        raise SchemaError("file not found", path) from None
    except json.JSONDecodeError as exc:
        raise SchemaError(f"invalid JSON at line {exc.lineno}, column {exc.colno}: {exc.msg}", path) from None
    if not isinstance(data, dict):
        raise SchemaError("top-level JSON value must be an object", path)
    return data


def _number_list(data: dict, key: str, path, length: int | None = None) -> np.ndarray:
    if key not in data:
        raise SchemaError(f"missing required field {key!r}", path, key)
    value = data[key]
    if not isinstance(value, list) or not all(
        isinstance(v, (int, float)) and not isinstance(v, bool) for v in value
    ):
        raise SchemaError(f"field {key!r} must be a list of numbers", path, key)
    if length is not None and len(value) != length:
        raise SchemaError(f"field {key!r} has {len(value)} entries, expected {length}", path, key)
    return np.array(value, dtype=np.float64)


def _number(data: dict, key: str, path, default: float | None = None) -> float:
    if key not in data:
        if default is not None:
            return default
        raise SchemaError(f"missing required field {key!r}", path, key)
    value = data[key]
    if not isinstance(value, (int, float)) or isinstance(value, bool):
        raise SchemaError(f"field {key!r} must be a number", path, key)
    return float(value)


def _integer(data: dict, key: str, path) -> int:
    if key not in data:
        raise SchemaError(f"missing required field {key!r}", path, key)
    value = data[key]
    if not isinstance(value, int) or isinstance(value, bool):
        raise SchemaError(f"field {key!r} must be an integer", path, key)
    return value


def _grid(data: dict, path) -> Grid:
    edges = _number_list(data, "edges", path)
    try:
        return Grid(edges)
    except ValueError as exc:
        raise SchemaError(str(exc), path, "edges") from None


def _build(factory, path, field, *args):
    try:
        return factory(*args)
    except ValueError as exc:
        raise SchemaError(str(exc), path, field) from None


def grid_from_dict(data: dict, path=None) -> Grid:
    return _grid(data, path)


def dist_from_dict(data: dict, path=None, key: str = "masses", grid: Grid | None = None) -> ProbMass:
    grid = grid or _grid(data, path)
    masses = _number_list(data, key, path, grid.bins)
    return _build(ProbMass, path, key, grid, masses)


def quotes_from_dict(data: dict, path=None, grid: Grid | None = None) -> MarketQuotes:
    grid = grid or _grid(data, path)
    returns = _number_list(data, "returns", path, grid.bins)
    risk_free = _number(data, "risk_free", path, default=1.0)
    return _build(MarketQuotes, path, "returns", grid, returns, risk_free)


def payoff_from_dict(data: dict, path=None) -> Payoff:
    grid = _grid(data, path)
    values = _number_list(data, "values", path, grid.bins)
    return _build(Payoff, path, "values", grid, values)


def allocation_from_dict(data: dict, path=None) -> Allocation:
    grid = _grid(data, path)
    alphas = _number_list(data, "alphas", path, grid.bins)
    alpha0 = _number(data, "alpha0", path, default=0.0)
    return _build(Allocation, path, "alphas", grid, alphas, alpha0)


def grid_to_dict(grid: Grid) -> dict:
    return {"edges": grid.edges.tolist()}


def dist_to_dict(dist: ProbMass) -> dict:
    return {"edges": dist.grid.edges.tolist(), "masses": dist.masses.tolist()}


def quotes_to_dict(quotes: MarketQuotes) -> dict:
    return {
        "edges": quotes.grid.edges.tolist(),
        "returns": quotes.returns.tolist(),
        "risk_free": quotes.risk_free,
    }


def payoff_to_dict(payoff: Payoff) -> dict:
    return {"edges": payoff.grid.edges.tolist(), "values": payoff.values.tolist()}


def allocation_to_dict(alloc: Allocation) -> dict:
    return {
        "edges": alloc.grid.edges.tolist(),
        "alphas": alloc.alphas.tolist(),
        "alpha0": alloc.alpha0,
    }


# --- CSV -------------------------------------------------------------------

# CSV value column -> (object kind, JSON field name)
_CSV_COLUMNS = {
    "mass": ("distribution", "masses"),
    "return": ("quotes", "returns"),
    "value": ("payoff", "values"),
    "alpha": ("allocation", "alphas"),
}


def _csv_text(edges: np.ndarray, column: str, values: np.ndarray, header: dict[str, float]) -> str:
    buf = _io.StringIO()
    for k, v in header.items():
        buf.write(f"# {k}={float(v)!r}\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["bin_left", column])
    for left, v in zip(edges[:-1], values):
        writer.writerow([repr(float(left)), repr(float(v))])
    writer.writerow([repr(float(edges[-1])), ""])
    return buf.getvalue()


def to_csv(obj) -> str:
    if isinstance(obj, ProbMass):
        return _csv_text(obj.grid.edges, "mass", obj.masses, {})
    if isinstance(obj, MarketQuotes):
        return _csv_text(obj.grid.edges, "return", obj.returns, {"risk_free": obj.risk_free})
    if isinstance(obj, Payoff):
        return _csv_text(obj.grid.edges, "value", obj.values, {})
    if isinstance(obj, Allocation):
        return _csv_text(obj.grid.edges, "alpha", obj.alphas, {"alpha0": obj.alpha0})
    raise TypeError(f"no CSV form for {type(obj).__name__}")


def from_csv(text: str, path=None):
    """Parse any of the binned CSV forms; the value column name selects the type."""
    header: dict[str, float] = {}
    rows = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        if line.startswith("#"):
            key, sep, value = line[1:].strip().partition("=")
            if not sep:
                raise SchemaError(f"line {lineno}: header field must look like '# key=value'", path)
            try:
                header[key.strip()] = float(value)
            except ValueError:
                raise SchemaError(f"line {lineno}: header {key.strip()!r} is not a number", path, key) from None
        elif line.strip():
            rows.append((lineno, next(csv.reader([line]))))
    if not rows or len(rows[0][1]) != 2 or rows[0][1][0] != "bin_left":
        raise SchemaError("expected header row 'bin_left,<column>'", path)
    column = rows[0][1][1]
    if column not in _CSV_COLUMNS:
        raise SchemaError(f"unknown value column {column!r}", path, column)
    lefts, values = [], []
    body = rows[1:]
    if len(body) < 2:
        raise SchemaError("need at least one bin row and the closing edge row", path)
    for i, (lineno, row) in enumerate(body):
        last = i == len(body) - 1
        if len(row) != 2:
            raise SchemaError(f"line {lineno}: expected 2 columns, got {len(row)}", path)
        try:
            lefts.append(float(row[0]))
            if last:
                if row[1].strip():
                    raise SchemaError(f"line {lineno}: closing edge row must have an empty value", path, column)
            else:
                values.append(float(row[1]))
        except ValueError:
            raise SchemaError(f"line {lineno}: non-numeric entry", path, column) from None
    kind, key = _CSV_COLUMNS[column]
    data: dict[str, Any] = {"edges": lefts, key: values}
    if kind == "distribution":
        return dist_from_dict(data, path)
    if kind == "quotes":
        if "risk_free" in header:
            data["risk_free"] = header["risk_free"]
        return quotes_from_dict(data, path)
    if kind == "payoff":
        return payoff_from_dict(data, path)
    if "alpha0" in header:
        data["alpha0"] = header["alpha0"]
    return allocation_from_dict(data, path)


# --- file-level entry points ----------------------------------------------


def _is_csv(path) -> bool:
    return str(path).lower().endswith(".csv")


def _load_any(path):
    if _is_csv(path):
        try:
            text = Path(path).read_text(encoding="utf-8")
        except FileNotFoundError:
            raise SchemaError("file not found", path) from None
        return from_csv(text, path)
    return read_json(path)


def load_distribution(path) -> ProbMass:
    data = _load_any(path)
    if isinstance(data, ProbMass):
        return data
    if isinstance(data, dict):
        return dist_from_dict(data, path)
    raise SchemaError("file does not hold a distribution", path)


def load_quotes(path) -> MarketQuotes:
    data = _load_any(path)
    if isinstance(data, MarketQuotes):
        return data
    if isinstance(data, dict):
        return quotes_from_dict(data, path)
    raise SchemaError("file does not hold market quotes", path)


def load_payoff(path) -> Payoff:
    data = _load_any(path)
    if isinstance(data, Payoff):
        return data
    if isinstance(data, dict):
        return payoff_from_dict(data, path)
    raise SchemaError("file does not hold a payoff", path)


def load_allocation(path) -> Allocation:
    data = _load_any(path)
    if isinstance(data, Allocation):
        return data
    if isinstance(data, dict):
        return allocation_from_dict(data, path)
    raise SchemaError("file does not hold an allocation", path)


def load_market(path) -> ProbMass | MarketQuotes:
    """Load either a market distribution (``masses``) or market quotes (``returns``)."""
    data = _load_any(path)
    if isinstance(data, (ProbMass, MarketQuotes)):
        return data
    if isinstance(data, dict):
        if "returns" in data:
            return quotes_from_dict(data, path)
        if "masses" in data:
            return dist_from_dict(data, path)
        raise SchemaError("market file needs a 'masses' or a 'returns' field", path, "masses")
    raise SchemaError("file holds neither a market distribution nor quotes", path)


def save(obj, path) -> None:
    """Save a core object as JSON, or as CSV if ``path`` ends in ``.csv``."""
    if _is_csv(path):
        write_text(path, to_csv(obj))
        return
    converters = {
        ProbMass: dist_to_dict,
        MarketQuotes: quotes_to_dict,
        Payoff: payoff_to_dict,
        Allocation: allocation_to_dict,
        Grid: grid_to_dict,
    }
    for cls, conv in converters.items():
        if isinstance(obj, cls):
            write_text(path, dumps(conv(obj)))
            return
    raise TypeError(f"cannot save {type(obj).__name__}")


# --- simulation ------------------------------------------------------------


def sim_config_from_dict(data: dict, path=None):
    """``{"edges", "realized", "belief", "returns", "risk_free", "rounds", "paths", "seed"}``."""
    from .simulator import SimConfig

    grid = _grid(data, path)
    realized = dist_from_dict(data, path, key="realized", grid=grid)
    belief = dist_from_dict(data, path, key="belief", grid=grid)
    quotes = quotes_from_dict(data, path, grid=grid)
    rounds = _integer(data, "rounds", path)
    paths = _integer(data, "paths", path)
    seed = _integer(data, "seed", path)
    return _build(SimConfig, path, "rounds", rounds, paths, seed, realized, belief, quotes)


def sim_config_to_dict(cfg) -> dict:
    return {
        "edges": cfg.quotes.grid.edges.tolist(),
        "realized": cfg.realized.masses.tolist(),
        "belief": cfg.belief.masses.tolist(),
        "returns": cfg.quotes.returns.tolist(),
        "risk_free": cfg.quotes.risk_free,
        "rounds": cfg.rounds,
        "paths": cfg.paths,
        "seed": cfg.seed,
    }


def load_sim_config(path):
    return sim_config_from_dict(read_json(path), path)


def sim_result_to_dict(result) -> dict:
    return {
        "mean_log_rate": result.mean_log_rate,
        "std_error": result.std_error,
        "target_rate": result.target_rate,
        "rounds": result.rounds,
        "paths": result.paths,
        "ruined_paths": result.ruined_paths,
        "per_path_terminal_log_wealth": result.per_path_terminal_log_wealth,
    }


def _rate(value, path, key):
    if value in ("-inf", "+inf"):
        return Unbounded.NEG if value == "-inf" else Unbounded.POS
    if isinstance(value, (int, float)) and not isinstance(value, bool):
        return float(value)
    raise SchemaError(f"field {key!r} must be a number or '-inf'/'+inf'", path, key)


def sim_result_from_dict(data: dict, path=None):
    from .simulator import SimResult

    for key in ("mean_log_rate", "std_error", "target_rate", "rounds", "per_path_terminal_log_wealth"):
        if key not in data:
            raise SchemaError(f"missing required field {key!r}", path, key)
    wealth = data["per_path_terminal_log_wealth"]
    if not isinstance(wealth, list):
        raise SchemaError("field 'per_path_terminal_log_wealth' must be a list", path)
    terminal = np.array([np.nan if v is None else v for v in wealth], dtype=np.float64)
    mean = data["mean_log_rate"]
    return SimResult(
        mean_log_rate=float("nan") if mean is None else float(mean),
        std_error=float("nan") if data["std_error"] is None else float(data["std_error"]),
        per_path_terminal_log_wealth=terminal,
        target_rate=_rate(data["target_rate"], path, "target_rate"),
        rounds=_integer(data, "rounds", path),
        ruined_paths=int(data.get("ruined_paths", 0)),
    )
