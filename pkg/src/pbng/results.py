from __future__ import annotations

import csv
import io
import json
from dataclasses import asdict, dataclass, field
from typing import IO, Optional, Union

import numpy as np

from .graph import VertexSide


@dataclass
class RunMetrics:
    support_updates: int = 0
    wedges_traversed: int = 0
    links_traversed: int = 0
    iterations_rho: int = 0
    wall_time: float = 0.0
    phase_times: dict = field(default_factory=dict)
    extra: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(eq=False)
class DecompositionResult:
    kind: str                         # "wing" or "tip"
    entity_numbers: np.ndarray
    metrics: RunMetrics
    side: Optional[VertexSide] = None
    plan: Optional[object] = None

    @property
    def theta(self) -> np.ndarray:
        return self.entity_numbers

    @property
    def max_theta(self) -> int:
        return int(self.entity_numbers.max()) if self.entity_numbers.size else 0

    def to_csv(self, dest: Union[str, IO, None] = None) -> str:
        """``entity_id,theta`` rows sorted by entity id."""
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["entity_id", "theta"])
        for i, t in enumerate(self.entity_numbers.tolist()):
            w.writerow([i, t])
        text = buf.getvalue()
        if isinstance(dest, str):
            with open(dest, "w", newline="") as fh:
                fh.write(text)
        elif dest is not None:
            dest.write(text)
        return text

    def metrics_json(self) -> str:
        d = self.metrics.to_dict()
        d["kind"] = self.kind
        if self.side is not None:
            d["side"] = self.side.value
        return json.dumps(d, indent=2, sort_keys=True, default=_jsonable)


def _jsonable(x):
    if isinstance(x, np.integer):
        return int(x)
    if isinstance(x, np.floating):
        return float(x)
    if isinstance(x, np.ndarray):
        return x.tolist()
    raise TypeError(type(x))
