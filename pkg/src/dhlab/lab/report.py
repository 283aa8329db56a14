"""Report writers: JSON, long-format CSV and SVG plots.

``report.json`` is a pure function of config and seed; wall-clock times go
to ``timing.json`` so repeated runs produce byte-identical reports.
"""

from __future__ import annotations

import csv
import json
from pathlib import Path
from typing import List

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

from .experiments import Report  # noqa: E402

__all__ = ["write_report", "load_report", "CSV_COLUMNS", "dumps"]

CSV_COLUMNS = ["experiment", "cell_id", "params", "quantity", "value", "verdict"]


def dumps(obj) -> str:
    return json.dumps(obj, sort_keys=True, indent=2, allow_nan=False) + "\n"


def _csv_rows(rep: dict) -> List[list]:
    rows = []
    for cell in rep["cells"]:
        params = json.dumps(cell["params"], sort_keys=True, separators=(",", ":"))
        values = dict(cell.get("values", {}))
        if cell.get("error"):
            values["error"] = cell["error"]
        for q in sorted(values):
            v = values[q]
            rows.append([rep["experiment"], cell["cell_id"], params, q,
                         repr(v) if isinstance(v, float) else v, cell["verdict"]])
    return rows


def _float(v):
    if isinstance(v, str):
        return float(v)
    return float("nan") if v is None else float(v)


def _save(fig, path: Path) -> None:
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)


def _plots(rep: dict, out: Path) -> List[str]:
    plt.rcParams["svg.hashsalt"] = "dhlab"
    name = rep["experiment"]
    cells = [c for c in rep["cells"] if not c.get("error")]
    made = []

    def new(title, xlabel, ylabel):
        fig, ax = plt.subplots(figsize=(6, 4))
        ax.set_title(title)
        ax.set_xlabel(xlabel)
        ax.set_ylabel(ylabel)
        ax.grid(True, alpha=0.3)
        return fig, ax

    if name == "unitary":
        fig, ax = new("singular value deviation", "cell", "max |dev| / s0")
        devs = [max(_float(c["values"]["deviation"]), 1e-18) for c in cells]
        ax.bar(range(len(devs)), devs)
        ax.set_yscale("log")
        ax.set_xticks(range(len(devs)))
        ax.set_xticklabels([c["cell_id"] for c in cells], rotation=70, fontsize=6)
        fig.tight_layout()
        _save(fig, out / "deviation.svg")
        made.append("deviation.svg")
    elif name == "besov_schatten":
        fig, ax = new("Schatten / Besov ratio vs dilation", "log2 lambda", "ratio")
        groups = {}
        for c in cells:
            if c["params"]["symbol"] == "bump":
                groups.setdefault(c["params"]["case"], []).append(c)
        for case, g in groups.items():
            ax.plot([c["params"]["lambda_exponent"] for c in g],
                    [_float(c["values"]["ratio"]) for c in g], "o-", label=case)
        ax.set_yscale("log")
        ax.legend(fontsize=7)
        _save(fig, out / "ratio_vs_lambda.svg")
        made.append("ratio_vs_lambda.svg")
    elif name == "sharpness":
        norms = [c for c in cells if c["params"]["kind"] == "norms"]
        if norms:
            fig, ax = new("Schatten / Besov ratio vs n", "n", "ratio")
            ns = [c["params"]["n"] for c in norms]
            ax.plot(ns, [_float(c["values"]["ratio"]) for c in norms], "o-", label="ratio")
            ax.set_xscale("log", base=2)
            ax.legend()
            _save(fig, out / "ratio_vs_n.svg")
            fig, ax = new("discrete norm vs block bound", "n", "S_p norm")
            ax.plot(ns, [_float(c["values"]["schatten"]) for c in norms], "o-", label="discrete")
            ax.plot(ns, [_float(c["values"]["block_bound"]) for c in norms], "s--", label="block bound")
            ax.set_xscale("log", base=2)
            ax.set_yscale("log")
            ax.legend()
            _save(fig, out / "block_bound.svg")
            made += ["ratio_vs_n.svg", "block_bound.svg"]
        hs = [c for c in cells if c["params"]["kind"] == "hs"]
        if hs:
            fig, ax = new("HS norm squared vs log(1/delta)", "log(1/delta)", "HS^2")
            for a in sorted({c["params"]["a"] for c in hs}, reverse=True):
                g = [c for c in hs if c["params"]["a"] == a]
                ax.plot([_float(c["values"]["log_inv_delta"]) for c in g],
                        [_float(c["values"]["hs_squared"]) for c in g], "o-", label=f"a={a:g}")
            ax.set_yscale("log")
            ax.legend()
            _save(fig, out / "hs_vs_log_delta.svg")
            made.append("hs_vs_log_delta.svg")
    elif name == "window":
        fig, ax = new("max battery ratio vs N", "N", "R = ||Qm||_p / ||m||_p")
        groups = {}
        for c in cells:
            groups.setdefault(c["params"]["group"], []).append(c)
        for gname, g in groups.items():
            ax.plot([c["params"]["size"] for c in g], [_float(c["values"]["R_max"]) for c in g],
                    "o-", label=gname)
        ax.set_xscale("log", base=2)
        ax.set_yscale("log")
        ax.legend(fontsize=6)
        _save(fig, out / "ratio_vs_N.svg")
        made.append("ratio_vs_N.svg")
    elif name == "quasinorm":
        fig, ax = new("S_1 / S_p ratio vs n", "n", "ratio")
        ax.plot([c["params"]["n"] for c in cells], [_float(c["values"]["ratio"]) for c in cells], "o-")
        ax.set_xscale("log", base=2)
        ax.set_yscale("log")
        _save(fig, out / "ratio_vs_n.svg")
        made.append("ratio_vs_n.svg")
    return made


def write_report(report: Report, out_dir) -> Path:
    """Write ``report.json``, ``timing.json``, ``cells.csv`` and plots under
    ``out_dir/<experiment>``; returns that directory."""
    out = Path(out_dir) / report.experiment
    out.mkdir(parents=True, exist_ok=True)
    rep = report.to_dict()
    rep["plots"] = _plots(rep, out)
    (out / "report.json").write_text(dumps(rep))
    (out / "timing.json").write_text(dumps(report.timing))
    with open(out / "cells.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(CSV_COLUMNS)
        w.writerows(_csv_rows(rep))
    return out


def load_report(path) -> dict:
    p = Path(path)
    if p.is_dir():
        p = p / "report.json"
    return json.loads(p.read_text())
