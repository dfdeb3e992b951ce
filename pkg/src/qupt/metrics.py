"""Evaluation metrics and report rendering.

Precision under zero positive predictions is stored as undefined (None)
and rendered as 0.00 with a flag; F1 falls back to 0 whenever precision is
undefined or precision + recall is 0.  AUC uses the rank (Mann-Whitney)
formulation with ties counted half.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np


@dataclass
class EvalReport:
    accuracy_pct: float
    precision: float | None
    recall: float
    f1: float
    auc: float | None
    tp: int
    fp: int
    fn: int
    tn: int
    degenerate_prediction: bool
    scenario: dict = field(default_factory=dict)
    scores: list[float] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "accuracy_pct": self.accuracy_pct,
            "precision": self.precision,
            "recall": self.recall,
            "f1": self.f1,
            "auc": self.auc,
            "confusion": {"tp": self.tp, "fp": self.fp, "fn": self.fn, "tn": self.tn},
            "degenerate_prediction": self.degenerate_prediction,
            "scenario": self.scenario,
            "scores": self.scores,
        }

    def dumps(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_dict(cls, d: dict) -> "EvalReport":
        c = d["confusion"]
        return cls(
            d["accuracy_pct"],
            d["precision"],
            d["recall"],
            d["f1"],
            d["auc"],
            c["tp"],
            c["fp"],
            c["fn"],
            c["tn"],
            d["degenerate_prediction"],
            d.get("scenario", {}),
            d.get("scores", []),
        )


def _tie_averaged_ranks(values: np.ndarray) -> np.ndarray:
    order = np.argsort(values, kind="mergesort")
    ranks = np.empty(values.size, dtype=np.float64)
    sorted_vals = values[order]
    i = 0
    while i < values.size:
        j = i
        while j + 1 < values.size and sorted_vals[j + 1] == sorted_vals[i]:
            j += 1
        # 1-based ranks, ties get the mean rank of their run
        ranks[order[i : j + 1]] = (i + j) / 2.0 + 1.0
        i = j + 1
    return ranks


def roc_auc(scores, labels) -> float:
    """Probability a random positive outranks a random negative (ties half)."""
    scores = np.asarray(scores, dtype=np.float64)
    labels = np.asarray(labels)
    n_pos = int(np.sum(labels == 1))
    n_neg = int(np.sum(labels == 0))
    if n_pos == 0 or n_neg == 0:
        raise ValueError("AUC is undefined with single-class labels")
    ranks = _tie_averaged_ranks(scores)
    pos_rank_sum = float(np.sum(ranks[labels == 1]))
    return (pos_rank_sum - n_pos * (n_pos + 1) / 2.0) / (n_pos * n_neg)


def compute_metrics(scores, labels, threshold: float = 0.5) -> EvalReport:
    """Confusion-matrix metrics for probability scores against 0/1 labels."""
    scores = np.asarray(scores, dtype=np.float64)
    labels = np.asarray(labels)
    if scores.size == 0:
        raise ValueError("empty score list")
    if scores.shape != labels.shape:
        raise ValueError("scores and labels must have the same length")
    preds = (scores >= threshold).astype(np.int64)
    tp = int(np.sum((preds == 1) & (labels == 1)))
    fp = int(np.sum((preds == 1) & (labels == 0)))
    fn = int(np.sum((preds == 0) & (labels == 1)))
    tn = int(np.sum((preds == 0) & (labels == 0)))
    accuracy_pct = 100.0 * (tp + tn) / scores.size
    precision = tp / (tp + fp) if (tp + fp) > 0 else None
    recall = tp / (tp + fn) if (tp + fn) > 0 else 0.0
    if precision is None or precision + recall == 0.0:
        f1 = 0.0
    else:
        f1 = 2.0 * precision * recall / (precision + recall)
    try:
        auc = roc_auc(scores, labels)
    except ValueError:
        auc = None
    degenerate = bool(np.all(preds == preds[0]))
    return EvalReport(
        accuracy_pct,
        precision,
        recall,
        f1,
        auc,
        tp,
        fp,
        fn,
        tn,
        degenerate,
        scores=[float(s) for s in scores],
    )


def impact_pct(benign: float | None, attacked: float | None) -> float | None:
    """Relative degradation in percent; None mirrors an N.A. table cell."""
    if benign is None or attacked is None or benign == 0:
        return None
    return 100.0 * (benign - attacked) / benign


_ATTACK_ORDER = {"none": 0, "A": 1, "B": 2, "C": 3}


def _sort_key(report: EvalReport):
    scen = report.scenario
    return (
        str(scen.get("noise_model", "")),
        _ATTACK_ORDER.get(scen.get("attack_class", "none"), 9),
    )


def _fmt(value: float | None, na: str = "N.A") -> str:
    return na if value is None else f"{value:.4f}"


def render_report(reports: list[EvalReport], fmt: str = "table") -> str:
    """Render reports as an aligned table (with impact rows) or as CSV."""
    if not reports:
        raise ValueError("no reports to render")
    reports = sorted(reports, key=_sort_key)
    if fmt == "csv":
        lines = [
            "noise_model,attack_class,accuracy,precision,precision_defined,"
            "recall,f1,auc,degenerate"
        ]
        for r in reports:
            scen = r.scenario
            precision = 0.0 if r.precision is None else r.precision
            auc = "" if r.auc is None else repr(r.auc)
            lines.append(
                f"{scen.get('noise_model', '')},{scen.get('attack_class', 'none')},"
                f"{r.accuracy_pct!r},{precision!r},{r.precision is not None},"
                f"{r.recall!r},{r.f1!r},{auc},{r.degenerate_prediction}"
            )
        return "\n".join(lines) + "\n"
    if fmt != "table":
        raise ValueError(f"unknown format {fmt!r}")

    header = f"{'Noise-model':<14}{'Attack':<8}{'Acc(%)':>8}{'Prec':>8}{'Recall':>8}{'F1':>8}{'AUC':>8}"
    lines = [header, "-" * len(header)]
    baselines: dict[str, EvalReport] = {}
    for r in reports:
        if r.scenario.get("attack_class", "none") == "none":
            baselines[str(r.scenario.get("noise_model", ""))] = r
    for r in reports:
        scen = r.scenario
        model = str(scen.get("noise_model", ""))
        attack = scen.get("attack_class", "none")
        prec = "0.00*" if r.precision is None else f"{r.precision:.4f}"
        auc = "N.A" if r.auc is None else f"{r.auc:.4f}"
        lines.append(
            f"{model:<14}{attack:<8}{r.accuracy_pct:>8.2f}{prec:>8}"
            f"{r.recall:>8.4f}{r.f1:>8.4f}{auc:>8}"
        )
        base = baselines.get(model)
        if base is not None and attack != "none":
            cells = [
                impact_pct(base.accuracy_pct, r.accuracy_pct),
                impact_pct(base.precision, r.precision),
                impact_pct(base.recall, r.recall),
                impact_pct(base.f1, r.f1),
                impact_pct(base.auc, r.auc),
            ]
            text = "".join(
                f"{_fmt(c):>8}" if c is None else f"{c:>8.2f}" for c in cells
            )
            lines.append(f"{'':<14}{'Impact%':<8}{text}")
    if any(r.precision is None for r in reports):
        lines.append("* precision undefined (no positive predictions), shown as 0.00")
    return "\n".join(lines) + "\n"
