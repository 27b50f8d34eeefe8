import json
import logging
from enum import Enum
from typing import Any, Dict, List, Optional

import pandas as pd
from pydantic import BaseModel

from . import __version__
from .certify import Certificate
from .empirical_lab import MonteCarloSummary
from .empirical_protocol import EmpiricalVerdict
from .generic_bounds import BoundTable

logger = logging.getLogger(__name__)


class OutputFormat(str, Enum):
    TABLE = "table"
    JSON = "json"
    CSV = "csv"


class ReportEnvelope(BaseModel):
    command: str
    inputs: Dict[str, Any]
    results: Any
    tool_version: str = __version__
    seed: Optional[int] = None


def make_envelope(command: str, inputs: Dict[str, Any], results: Any, seed: Optional[int] = None) -> ReportEnvelope:
    if isinstance(results, BaseModel):
        results = results.model_dump(mode="json", by_alias=True)
    elif isinstance(results, list):
        results = [r.model_dump(mode="json", by_alias=True) if isinstance(r, BaseModel) else r for r in results]
    return ReportEnvelope(command=command, inputs=inputs, results=results, seed=seed)


def render_json(envelope: ReportEnvelope) -> str:
    """Stable key order and no timestamps, so equal runs give equal bytes."""
    return json.dumps(envelope.model_dump(mode="json"), sort_keys=True, indent=2)


def bound_table_frame(table: BoundTable) -> pd.DataFrame:
    rows = [
        {
            "bound": e.bound_id.value,
            "max_rank": e.max_rank,
            "min_rank": e.min_rank,
            "count": len(e.rank_set),
            "fields": "+".join(f.value for f in e.fields),
            "literature_only": e.literature_only,
            "method": e.method,
            "reason": e.reason or "",
        }
        for e in table.entries
    ]
    return pd.DataFrame(rows, columns=["bound", "max_rank", "min_rank", "count", "fields", "literature_only", "method", "reason"])


def certificate_frame(certificates: List[Certificate]) -> pd.DataFrame:
    rows = []
    for cert in certificates:
        for o in cert.outcomes:
            rows.append({
                "certificate": cert.route.value,
                "verdict": cert.verdict.value,
                "condition": o.condition_id.value,
                "route": o.route.value if o.route else "",
                "status": o.status.value,
                "m": o.detail.get("m", ""),
                "witness_weight": o.witness.weight if o.witness else "",
            })
    return pd.DataFrame(rows)


def monte_carlo_frame(summary: MonteCarloSummary) -> pd.DataFrame:
    return pd.DataFrame([t.model_dump() for t in summary.conditions])


def empirical_frame(verdict: EmpiricalVerdict) -> pd.DataFrame:
    columns = ["init", "fit", "iterations", "converged", "kept", "congruence_to_truth", "error"]
    return pd.DataFrame([r.model_dump() for r in verdict.runs], columns=columns)


def _table_header(envelope: ReportEnvelope, lines: List[str]) -> str:
    head = [f"tenuniq {envelope.tool_version} {envelope.command}"]
    head.extend(lines)
    return "\n".join(head)


def render(
    envelope: ReportEnvelope,
    frame: pd.DataFrame,
    fmt: OutputFormat,
    summary_lines: Optional[List[str]] = None,
) -> str:
    if fmt is OutputFormat.JSON:
        return render_json(envelope)
    if fmt is OutputFormat.CSV:
        return frame.to_csv(index=False).rstrip("\n")
    body = frame.to_string(index=False) if not frame.empty else "(no rows)"
    return _table_header(envelope, summary_lines or []) + "\n\n" + body
