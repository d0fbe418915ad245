# nonholo/pdf/report_table.py
from __future__ import annotations

from typing import Iterable, List, Sequence

from reportlab.lib import colors
from reportlab.lib.units import mm
from reportlab.platypus import Table, TableStyle

from nonholo.diagnostics.drift import DriftReport

# Column widths (in mm); Observable absorbs remainder
COL_W_INITIAL = 30 * mm
COL_W_MAX = 24 * mm
COL_W_REL = 24 * mm
COL_W_SLOPE = 24 * mm
COL_W_VERDICT = 18 * mm

W_GRID    = 0.50
W_OUTLINE = 0.70
W_HEAVY   = 1.00

BODY_ROW_H = 7 * mm

PADDING_V = (4, 4)   # top, bottom
PADDING_H = (6, 6)   # left, right

BRAND = colors.HexColor("#1B1464")
FAIL_COLOR = colors.HexColor("#B00020")

HEADERS = ["Observable", "Initial", "Max |d|", "Relative", "Slope", "Verdict"]


def _col_widths(content_width: float) -> list[float]:
    fixed = COL_W_INITIAL + COL_W_MAX + COL_W_REL + COL_W_SLOPE + COL_W_VERDICT
    name = max(30 * mm, content_width - fixed)
    return [name, COL_W_INITIAL, COL_W_MAX, COL_W_REL, COL_W_SLOPE, COL_W_VERDICT]


def drift_rows(reports: Iterable[DriftReport]) -> List[List[str]]:
    return [
        [
            r.observable,
            f"{r.initial:.10g}",
            f"{r.max_abs_drift:.3e}",
            f"{r.relative_drift:.3e}",
            f"{r.slope:.3e}",
            r.verdict,
        ]
        for r in reports
    ]


def build_drift_table(rows: Sequence[Sequence[str]], content_width: float) -> Table:
    """Drift table, one row per observable plus the header.

    rows: cells in ``HEADERS`` order, already formatted
    content_width: usable width inside margins
    """
    data: List[List[str]] = [list(HEADERS)]
    data.extend(list(r) for r in rows)
    if len(data) == 1:
        data.append(["(no drift observables)", "", "", "", "", ""])

    t = Table(data, colWidths=_col_widths(content_width), rowHeights=[BODY_ROW_H] * len(data), repeatRows=1)

    ts = TableStyle()
    ts.add("GRID", (0, 0), (-1, -1), W_GRID, BRAND)
    ts.add("LINEABOVE", (0, 0), (-1, 0), W_OUTLINE, BRAND)
    ts.add("LINEBELOW", (0, -1), (-1, -1), W_OUTLINE, BRAND)
    ts.add("LINEBEFORE", (0, 0), (0, -1), W_OUTLINE, BRAND)
    ts.add("LINEAFTER", (-1, 0), (-1, -1), W_OUTLINE, BRAND)

    # Header
    ts.add("FONTNAME", (0, 0), (-1, 0), "Helvetica-Bold")
    ts.add("FONTSIZE", (0, 0), (-1, 0), 10)
    ts.add("TEXTCOLOR", (0, 0), (-1, 0), BRAND)
    ts.add("ALIGN", (1, 0), (-1, 0), "CENTER")
    ts.add("LINEBELOW", (0, 0), (-1, 0), W_HEAVY, BRAND)

    # Body
    ts.add("FONTNAME", (0, 1), (-1, -1), "Helvetica")
    ts.add("FONTSIZE", (0, 1), (-1, -1), 9)
    ts.add("TEXTCOLOR", (0, 1), (-1, -1), BRAND)
    ts.add("ALIGN", (1, 1), (4, -1), "RIGHT")
    ts.add("ALIGN", (5, 1), (5, -1), "CENTER")
    for i, row in enumerate(data[1:], start=1):
        if row[5] == "fail":
            ts.add("TEXTCOLOR", (5, i), (5, i), FAIL_COLOR)
            ts.add("FONTNAME", (5, i), (5, i), "Helvetica-Bold")

    ts.add("LEFTPADDING",  (0, 0), (-1, -1), PADDING_H[0])
    ts.add("RIGHTPADDING", (0, 0), (-1, -1), PADDING_H[1])
    ts.add("TOPPADDING",   (0, 0), (-1, -1), PADDING_V[0])
    ts.add("BOTTOMPADDING",(0, 0), (-1, -1), PADDING_V[1])
    ts.add("VALIGN", (0, 0), (-1, -1), "MIDDLE")

    t.setStyle(ts)
    return t
