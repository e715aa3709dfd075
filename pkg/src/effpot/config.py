"""JSON run configuration: parsing, validation and defaults.

A configuration has five blocks; only ``model`` and ``potential`` are
required::

    {
      "model": {"r": 2, "M": [[1, 1], [1, 0]], "lambda": 0.5},
      "potential": {"type": "builtin", "name": "x_only", "values": [0, 1]},
      "solver": {"tol": 1e-10, "max_iter": 100000, "base_word": null,
                 "accel": false, "depth": null},
      "sweep": {"beta_grid": [1, 2, 4, 8]},
      "output": {"dir": "out", "formats": ["json", "csv"]}
    }

A table potential lists every allowed pair::

    {"type": "table", "y_depth": 1, "x_depth": 1, "masked": false,
     "entries": [{"y": "1", "x": "2", "v": 0.5}, ...]}
"""

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import (
    BadLambdaError,
    ConfigParseError,
    ConfigValidationError,
    EffpotError,
    ModelError,
    NonSymmetricError,
    ReducibleError,
)
from .potentials import builtin_potential, make_pair_potential
from .sft import DEFAULT_LAMBDA, build_sft, parse_word
from .zerotemp import DEFAULT_GRID

DEFAULT_SOLVER = {"tol": 1e-10, "max_iter": 10**5, "base_word": None, "accel": False, "depth": None}
DEFAULT_OUTPUT = {"dir": "out", "formats": ["json", "csv"]}
FORMATS = ("json", "csv")

_BUILTIN_PARAMS = {
    "zero": (),
    "x_only": ("values",),
    "y_only": ("values",),
    "diagonal": ("eps",),
    "sum": ("x_values", "y_values"),
}


@dataclass(eq=False)
class RunConfig:
    model: dict
    potential: dict
    solver: dict
    sweep: dict
    output: dict
    spec: object = field(repr=False)
    A: object = field(repr=False)
    text: str = field(default="", repr=False)

    @property
    def w0(self):
        bw = self.solver["base_word"]
        return None if bw is None else parse_word(bw)

    def to_dict(self):
        return {
            "model": self.model,
            "potential": self.potential,
            "solver": self.solver,
            "sweep": self.sweep,
            "output": self.output,
        }


def _check_keys(block, allowed, path):
    if not isinstance(block, dict):
        raise ConfigValidationError(path, "must be an object")
    for key in block:
        if key not in allowed:
            where = f"{path}.{key}" if path else key
            raise ConfigValidationError(where, "unknown key")


def _require(block, key, path):
    if key not in block:
        raise ConfigValidationError(f"{path}.{key}" if path else key, "required")
    return block[key]


def _number(value, path, positive=False):
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigValidationError(path, "must be a number")
    if not np.isfinite(value):
        raise ConfigValidationError(path, "must be finite")
    if positive and value <= 0:
        raise ConfigValidationError(path, "must be positive")
    return float(value)


def _integer(value, path, minimum=None):
    if isinstance(value, bool) or not isinstance(value, int):
        raise ConfigValidationError(path, "must be an integer")
    if minimum is not None and value < minimum:
        raise ConfigValidationError(path, f"must be at least {minimum}")
    return value


def _word(spec, text, depth, path):
    try:
        w = parse_word(text) if isinstance(text, str) else None
    except ValueError:
        w = None
    if w is None:
        raise ConfigValidationError(path, f"not a word: {text!r}")
    if len(w) != depth:
        raise ConfigValidationError(path, f"word {text!r} must have {depth} letters")
    if w not in spec.words(depth).index:
        raise ConfigValidationError(path, f"word {text!r} is not allowed")
    return w


def _parse_model(block):
    _check_keys(block, ("r", "M", "lambda"), "model")
    r = _integer(_require(block, "r", "model"), "model.r", minimum=2)
    M = _require(block, "M", "model")
    if not (isinstance(M, list) and all(isinstance(row, list) for row in M)):
        raise ConfigValidationError("model.M", "must be a list of rows")
    lam = _number(block.get("lambda", DEFAULT_LAMBDA), "model.lambda")
    try:
        spec = build_sft(r, M, lam)
    except NonSymmetricError:
        raise ConfigValidationError("model.M", "not symmetric") from None
    except ReducibleError:
        raise ConfigValidationError("model.M", "reducible") from None
    except BadLambdaError as exc:
        raise ConfigValidationError("model.lambda", str(exc)) from None
    except (ModelError, ValueError, TypeError) as exc:
        raise ConfigValidationError("model.M", str(exc)) from None
    return {"r": r, "M": [list(map(int, row)) for row in M], "lambda": lam}, spec


def _parse_potential(block, spec):
    if not isinstance(block, dict):
        raise ConfigValidationError("potential", "must be an object")
    kind = _require(block, "type", "potential")
    masked = block.get("masked", False)
    if not isinstance(masked, bool):
        raise ConfigValidationError("potential.masked", "must be true or false")
    if kind == "builtin":
        name = _require(block, "name", "potential")
        if name not in _BUILTIN_PARAMS:
            raise ConfigValidationError("potential.name", f"unknown builtin {name!r}")
        params = _BUILTIN_PARAMS[name]
        _check_keys(block, ("type", "name", "masked") + params, "potential")
        kwargs = {}
        for p in params:
            if name == "diagonal" and p not in block:
                continue
            raw = _require(block, p, "potential")
            if p == "eps":
                kwargs[p] = _number(raw, "potential.eps")
            else:
                if not isinstance(raw, list) or len(raw) != spec.r:
                    raise ConfigValidationError(f"potential.{p}", f"must be a list of {spec.r} numbers")
                kwargs[p] = [_number(v, f"potential.{p}[{i}]") for i, v in enumerate(raw)]
        A = builtin_potential(spec, name, masked=masked, **kwargs)
        return {"type": "builtin", "name": name, "masked": masked, **kwargs}, A
    if kind == "table":
        _check_keys(block, ("type", "y_depth", "x_depth", "masked", "entries"), "potential")
        m = _integer(_require(block, "y_depth", "potential"), "potential.y_depth", minimum=1)
        n = _integer(_require(block, "x_depth", "potential"), "potential.x_depth", minimum=1)
        entries = _require(block, "entries", "potential")
        if not isinstance(entries, list):
            raise ConfigValidationError("potential.entries", "must be a list")
        table = {}
        for i, e in enumerate(entries):
            path = f"potential.entries[{i}]"
            _check_keys(e, ("y", "x", "v"), path)
            y = _word(spec, _require(e, "y", path), m, f"{path}.y")
            x = _word(spec, _require(e, "x", path), n, f"{path}.x")
            if (y, x) in table:
                raise ConfigValidationError(path, "duplicate pair")
            table[(y, x)] = _number(_require(e, "v", path), f"{path}.v")
        try:
            A = make_pair_potential(spec, m, n, table, masked)
        except EffpotError as exc:
            raise ConfigValidationError("potential.entries", str(exc)) from None
        return {"type": "table", "y_depth": m, "x_depth": n, "masked": masked, "entries": entries}, A
    raise ConfigValidationError("potential.type", f"must be 'builtin' or 'table', got {kind!r}")


def _parse_solver(block, spec, A):
    _check_keys(block, tuple(DEFAULT_SOLVER), "solver")
    out = dict(DEFAULT_SOLVER)
    out.update(block)
    out["tol"] = _number(out["tol"], "solver.tol", positive=True)
    out["max_iter"] = _integer(out["max_iter"], "solver.max_iter", minimum=1)
    if not isinstance(out["accel"], bool):
        raise ConfigValidationError("solver.accel", "must be true or false")
    if out["depth"] is not None:
        out["depth"] = _integer(out["depth"], "solver.depth", minimum=1)
    if out["base_word"] is not None:
        bw = out["base_word"]
        if not isinstance(bw, str) or len(bw) < A.y_depth:
            raise ConfigValidationError("solver.base_word", f"must be a word of at least {A.y_depth} letters")
        _word(spec, bw[: A.y_depth], A.y_depth, "solver.base_word")
    return out


def _parse_sweep(block):
    _check_keys(block, ("beta_grid",), "sweep")
    grid = block.get("beta_grid", list(DEFAULT_GRID))
    if not isinstance(grid, list) or not grid:
        raise ConfigValidationError("sweep.beta_grid", "must be a nonempty list")
    grid = [_number(b, f"sweep.beta_grid[{i}]", positive=True) for i, b in enumerate(grid)]
    if any(b2 <= b1 for b1, b2 in zip(grid, grid[1:])):
        raise ConfigValidationError("sweep.beta_grid", "must be strictly increasing")
    return {"beta_grid": grid}


def _parse_output(block):
    _check_keys(block, tuple(DEFAULT_OUTPUT), "output")
    out = {"dir": DEFAULT_OUTPUT["dir"], "formats": list(DEFAULT_OUTPUT["formats"])}
    out.update(block)
    if not isinstance(out["dir"], str) or not out["dir"]:
        raise ConfigValidationError("output.dir", "must be a nonempty string")
    fmts = out["formats"]
    if not isinstance(fmts, list) or any(f not in FORMATS for f in fmts):
        raise ConfigValidationError("output.formats", f"must be a list drawn from {list(FORMATS)}")
    return out


def parse_config(source):
    """Parse and validate a configuration.

    Parameters
    ----------
    source : str, Path or dict
        A path to a JSON file, JSON text, or an already decoded mapping.

    Raises
    ------
    ConfigParseError
        Malformed JSON; ``line`` and ``column`` locate the problem.
    ConfigValidationError
        Well-formed JSON with an invalid field; ``path`` names it.
    """
    if isinstance(source, dict):
        data, text = source, json.dumps(source, sort_keys=True)
    else:
        text = source
        if isinstance(source, Path) or not str(source).lstrip().startswith("{"):
            text = Path(source).read_text()
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigParseError(f"invalid JSON: {exc.msg}", exc.lineno, exc.colno) from None
    _check_keys(data, ("model", "potential", "solver", "sweep", "output"), "")
    model, spec = _parse_model(_require(data, "model", ""))
    potential, A = _parse_potential(_require(data, "potential", ""), spec)
    solver = _parse_solver(data.get("solver", {}), spec, A)
    sweep = _parse_sweep(data.get("sweep", {}))
    output = _parse_output(data.get("output", {}))
    return RunConfig(model, potential, solver, sweep, output, spec, A, text)
