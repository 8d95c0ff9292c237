"""Throughput metrics and their line-delimited / tab-separated serialisation."""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .netmodel import CATEGORY_NAMES, MACRO_I, PICO_I

SCHEMA = "hetnet-abrb/metrics/1"


@dataclass
class MetricsReport:
    algorithm: str
    seed: int
    superframes: list = field(default_factory=list)
    final: dict = field(default_factory=dict)
    users: list = field(default_factory=list)
    header: dict = field(default_factory=dict)

    def jsonl(self) -> str:
        lines = [dict(schema=SCHEMA, type="header", algorithm=self.algorithm, seed=self.seed,
                      **self.header)]
        lines += [dict(schema=SCHEMA, type="superframe", **r) for r in self.superframes]
        lines.append(dict(schema=SCHEMA, type="final", **self.final))
        return "".join(json.dumps(x, sort_keys=True) + "\n" for x in lines)

    def users_tsv(self) -> str:
        cols = ["user", "label", "category", "serving", "rate_bpshz", "throughput_kbps"]
        rows = ["\t".join(cols)]
        for u in self.users:
            rows.append("\t".join(str(u[c]) if not isinstance(u[c], float) else repr(u[c])
                                  for c in cols))
        return "\n".join(rows) + "\n"

    def series(self, key: str) -> np.ndarray:
        return np.array([r[key] for r in self.superframes], dtype=float)


def worst_fraction_mean(values, fraction: float = 0.1) -> float:
    v = np.sort(np.asarray(values, dtype=float))
    n = max(1, int(math.ceil(fraction * len(v))))
    return float(v[:n].mean())


def compute_metrics(mean_rate, graph, subband_hz: float, family=None, weights=None) -> dict:
    """Summary of long-run per-user rates (bits/s/Hz summed over subbands).

    Throughputs are ``rate * subband bandwidth``; the cell capacity divides
    the total by the number of macro cells.
    """
    r = np.asarray(mean_rate, dtype=float)
    if r.size == 0:
        raise ValueError("empty rate history")
    thr = r * subband_hz
    cat = graph.category

    def group_mean(mask):
        return float(thr[mask].mean() / 1e3) if mask.any() else 0.0

    out = {
        "cell_capacity_mbps": float(thr.sum() / graph.n_macro / 1e6),
        "mean_kbps": float(thr.mean() / 1e3),
        "macro_i_kbps": group_mean(cat == MACRO_I),
        "pico_i_kbps": group_mean(cat == PICO_I),
        "worst10_kbps": worst_fraction_mean(thr) / 1e3,
        "group_counts": {CATEGORY_NAMES[c]: int(np.sum(cat == c)) for c in range(4)},
    }
    if family is not None:
        w = np.ones_like(r) if weights is None else np.asarray(weights, dtype=float)
        out["utility"] = float(np.sum(w * family.u(r)))
    return out


def user_table(mean_rate, graph, subband_hz: float) -> list:
    return [
        {"user": k, "label": graph.user_labels[k], "category": CATEGORY_NAMES[int(graph.category[k])],
         "serving": graph.bs_labels[graph.serving[k]], "rate_bpshz": float(mean_rate[k]),
         "throughput_kbps": float(mean_rate[k] * subband_hz / 1e3)}
        for k in range(graph.n_users)
    ]
