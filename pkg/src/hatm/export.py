"""JSON and CSV serialization of series and diagnostic data."""

from __future__ import annotations

import csv
import io
import json
from typing import Iterable

from .engine import DeformationSeries
from .model import system_from_dict, system_to_dict
from .series import BiPoly


def fmt(x: float) -> str:
    return f"{float(x):.17g}"


def poly_to_list(p: BiPoly) -> list[dict]:
    return [{"hbar_exp": a, "t_exp": b, "coef": c} for (a, b), c in p]


def poly_from_list(items: Iterable[dict]) -> BiPoly:
    return BiPoly({(int(d["hbar_exp"]), int(d["t_exp"])): float(d["coef"]) for d in items})


def series_to_dict(series: DeformationSeries) -> dict:
    sys = series.system
    return {
        "order": series.order,
        "system": system_to_dict(sys),
        "states": {
            name: {
                "components": [poly_to_list(x) for x in series.components[i]],
                "partial_sum": poly_to_list(series.partial_sum(i)),
            }
            for i, name in enumerate(sys.names)
        },
    }


def series_from_dict(doc: dict) -> DeformationSeries:
    sys = system_from_dict(doc["system"])
    comps = tuple(
        tuple(poly_from_list(c) for c in doc["states"][name]["components"]) for name in sys.names
    )
    return DeformationSeries(sys, int(doc["order"]), comps)


def dumps(doc: dict) -> str:
    return json.dumps(doc, indent=1) + "\n"


def csv_text(header: list[str], rows: Iterable[Iterable]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([fmt(v) if isinstance(v, float) else v for v in row])
    return buf.getvalue()


def curve_csv(curve) -> str:
    return csv_text(["hbar", "value"], ((float(h), float(v)) for h, v in zip(curve.hbar, curve.values)))


def residual_csv(grid, names: list[str]) -> str:
    header = ["t"] + [f"E_{n}" for n in names]
    rows = ([float(t)] + [float(v) for v in grid.values[:, k]] for k, t in enumerate(grid.t))
    return csv_text(header, rows)


def comparison_csv(cmp, names: list[str]) -> str:
    rows = []
    for k, t in enumerate(cmp.t):
        for i, name in enumerate(names):
            rows.append([float(t), name, float(cmp.hatm[k, i]), float(cmp.oracle[k, i]),
                         float(cmp.rel_err[k, i])])
    return csv_text(["t", "state", "hatm", "oracle", "rel_err"], rows)
