"""Run configuration: ``key = value`` files with environment overrides."""
from __future__ import annotations

import dataclasses
import os
from dataclasses import dataclass, fields
from pathlib import Path
from typing import Mapping, Optional

from ..errors import ConfigError

MODES = ("sync", "async-sim", "async-threads", "async-tcp")
SCHEDULES = ("lockstep", "seeded-random")
DEFAULT_GRAPH = "synthetic:n=1000,avg=8.0,dangling=0.1,seed=42"
ENV_PREFIX = "RANK_"


@dataclass(frozen=True)
class RunConfig:
    graph: str = DEFAULT_GRAPH
    base_index: int = 0
    alpha: float = 0.85
    v: str = "uniform"
    tolerance: float = 1e-6
    kernel: str = "power"
    mode: str = "sync"
    p: int = 4
    pcmax_ue: int = 1
    pcmax_monitor: int = 1
    schedule: str = "seeded-random"
    seed: int = 0
    delay_bound: int = 2
    drop_rate: float = 0.0
    max_iters: int = 10000
    report_path: str = ""
    top_k: int = 10
    paired_sync: bool = True
    base_port: int = 0
    send_timeout: float = 1.0
    step_pause: float = 1e-4

    def validate(self):
        def bad(key, msg):
            raise ConfigError(msg, key=key)

        if not 0.0 < self.alpha < 1.0:
            bad("alpha", f"must lie in (0, 1), got {self.alpha}")
        if not self.tolerance > 0:
            bad("tolerance", f"must be positive, got {self.tolerance}")
        if self.p < 1:
            bad("p", f"must be >= 1, got {self.p}")
        if self.kernel not in ("power", "linear"):
            bad("kernel", f"must be power or linear, got {self.kernel!r}")
        if self.mode not in MODES:
            bad("mode", f"must be one of {', '.join(MODES)}, got {self.mode!r}")
        if self.schedule not in SCHEDULES:
            bad("schedule", f"must be one of {', '.join(SCHEDULES)}, got {self.schedule!r}")
        if self.base_index not in (0, 1):
            bad("base_index", f"must be 0 or 1, got {self.base_index}")
        for key in ("pcmax_ue", "pcmax_monitor", "max_iters", "top_k"):
            if getattr(self, key) < 1:
                bad(key, f"must be >= 1, got {getattr(self, key)}")
        if self.delay_bound < 0:
            bad("delay_bound", f"must be >= 0, got {self.delay_bound}")
        if not 0.0 <= self.drop_rate < 1.0:
            bad("drop_rate", f"must lie in [0, 1), got {self.drop_rate}")
        if self.schedule == "lockstep" and self.mode == "async-sim" \
                and (self.delay_bound or self.drop_rate):
            bad("schedule", "lockstep takes no delay_bound or drop_rate")
        if not 0 <= self.base_port < 65536:
            bad("base_port", f"must be a port number, got {self.base_port}")
        if not self.send_timeout > 0:
            bad("send_timeout", f"must be positive, got {self.send_timeout}")
        if self.step_pause < 0:
            bad("step_pause", f"must be >= 0, got {self.step_pause}")
        return self

    def as_dict(self) -> dict:
        return dataclasses.asdict(self)


_FIELDS = {f.name: f for f in fields(RunConfig)}
_ALIASES = {"pcmax": "pcmax_ue", "graph_source": "graph", "alpha_": "alpha"}


def _canonical(key: str) -> str:
    key = key.strip().lower().replace("-", "_")
    return _ALIASES.get(key, key)


def _convert(key: str, raw: str, line_number=None):
    kind = _FIELDS[key].type
    raw = raw.strip()
    try:
        if kind == "bool":
            low = raw.lower()
            if low in ("1", "true", "yes", "on"):
                return True
            if low in ("0", "false", "no", "off"):
                return False
            raise ValueError(raw)
        if kind == "int":
            return int(raw)
        if kind == "float":
            return float(raw)
        return raw
    except ValueError:
        raise ConfigError(f"invalid {kind} value {raw!r}", key=key,
                          line_number=line_number) from None


def parse_config(text: str, env: Optional[Mapping[str, str]] = None,
                 base_dir: Optional[Path] = None) -> RunConfig:
    values, lines = {}, {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ConfigError(f"expected 'key = value', got {line!r}", line_number=lineno)
        key, value = line.split("=", 1)
        key = _canonical(key)
        if key not in _FIELDS:
            raise ConfigError("unknown key", key=key, line_number=lineno)
        value = value.split(" #", 1)[0]
        values[key] = _convert(key, value, lineno)
        lines[key] = lineno

    for name, value in (env or {}).items():
        if not name.startswith(ENV_PREFIX):
            continue
        key = _canonical(name[len(ENV_PREFIX):])
        if key not in _FIELDS:
            continue
        values[key] = _convert(key, value)
        lines.pop(key, None)

    graph = values.get("graph")
    if graph and base_dir is not None and not graph.startswith("synthetic:"):
        if not Path(graph).is_absolute():
            values["graph"] = str(Path(base_dir) / graph)
    v = values.get("v")
    if v and v != "uniform" and base_dir is not None and not Path(v).is_absolute():
        values["v"] = str(Path(base_dir) / v)

    cfg = RunConfig(**values)
    try:
        return cfg.validate()
    except ConfigError as exc:
        if exc.key in lines:
            raise ConfigError(str(exc).split(": ", 1)[1], key=exc.key,
                              line_number=lines[exc.key]) from None
        raise


def load_config(path, env: Optional[Mapping[str, str]] = None) -> RunConfig:
    """Read a configuration file; ``RANK_<KEY>`` variables in ``env``
    (default ``os.environ``) override file values."""
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from exc
    return parse_config(text, os.environ if env is None else env, base_dir=path.parent)


def parse_synthetic_spec(spec: str) -> dict:
    """``n=1000,avg=8,dangling=0.1,seed=42`` -> generator keyword arguments."""
    if spec.startswith("synthetic:"):
        spec = spec[len("synthetic:"):]
    names = {"n": ("n", int), "avg": ("avg_out_degree", float),
             "avg_out_degree": ("avg_out_degree", float),
             "dangling": ("dangling_fraction", float),
             "dangling_fraction": ("dangling_fraction", float),
             "seed": ("seed", int)}
    out = {"avg_out_degree": 8.0, "dangling_fraction": 0.1, "seed": 0}
    for part in filter(None, (s.strip() for s in spec.split(","))):
        if "=" not in part:
            raise ConfigError(f"synthetic spec entry {part!r} is not key=value", key="graph")
        k, v = (s.strip() for s in part.split("=", 1))
        if k not in names:
            raise ConfigError(f"unknown synthetic parameter {k!r}", key="graph")
        name, conv = names[k]
        try:
            out[name] = conv(v)
        except ValueError:
            raise ConfigError(f"bad value {v!r} for {k}", key="graph") from None
    if "n" not in out:
        raise ConfigError("synthetic spec needs n=<pages>", key="graph")
    return out
