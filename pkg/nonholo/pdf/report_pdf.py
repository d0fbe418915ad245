from __future__ import annotations

from pathlib import Path
from typing import TYPE_CHECKING, List, Tuple

from reportlab.lib import colors
from reportlab.lib.pagesizes import A4
from reportlab.lib.units import mm
from reportlab.lib.utils import simpleSplit
from reportlab.pdfgen.canvas import Canvas

from nonholo import __version__
from nonholo.pdf.report_table import build_drift_table, drift_rows

if TYPE_CHECKING:
    from nonholo.scenario.runner import RunSummary


# ===== Layout constants =====
PAGE_SIZE = A4
PAGE_WIDTH, PAGE_HEIGHT = PAGE_SIZE

MARGIN_LEFT = 20 * mm
MARGIN_RIGHT = 20 * mm
MARGIN_TOP = 20 * mm
MARGIN_BOTTOM = 20 * mm

TITLE_FONT_SIZE = 20
LABEL_FONT_SIZE = 11
TEXT_FONT_SIZE = 10
SMALL_FONT_SIZE = 8
LINE_GAP = 5 * mm
SECTION_GAP = 8 * mm

BRAND = colors.HexColor("#1B1464")
FAIL_COLOR = colors.HexColor("#B00020")
TEXT_COLOR = BRAND
RULE_COLOR = BRAND

FONT = "Helvetica"
BOLD_FONT = "Helvetica-Bold"


def _header_lines(summary: "RunSummary") -> List[Tuple[str, str]]:
    lines = [
        ("Scenario", summary.scenario),
        ("Model", summary.model_id),
        ("Seed", str(summary.seed)),
        ("Integrator", f"{summary.method}, h={summary.h:g}, t_end={summary.t_end:g}, projection {'on' if summary.project else 'off'}"),
        ("Records", f"{summary.records} (accepted {summary.accepted_steps}, rejected {summary.rejected_steps})"),
    ]
    status = "ok" if summary.exit_code == 0 else f"exit code {summary.exit_code}"
    if summary.final_time is not None:
        status += f", t_final={summary.final_time:.6g}"
    lines.append(("Status", status))
    return lines


class _Cursor:
    """Top-down writer that starts a new page when the bottom margin is hit."""

    def __init__(self, c: Canvas) -> None:
        self.c = c
        self.y = PAGE_HEIGHT - MARGIN_TOP

    def need(self, height: float) -> None:
        if self.y - height < MARGIN_BOTTOM:
            self.c.showPage()
            self.y = PAGE_HEIGHT - MARGIN_TOP

    def text(self, s: str, font: str = FONT, size: float = TEXT_FONT_SIZE, color=TEXT_COLOR) -> None:
        for part in simpleSplit(s, font, size, PAGE_WIDTH - MARGIN_LEFT - MARGIN_RIGHT) or [""]:
            self.need(LINE_GAP)
            self.c.setFont(font, size)
            self.c.setFillColor(color)
            self.c.drawString(MARGIN_LEFT, self.y - size, part)
            self.y -= LINE_GAP

    def rule(self) -> None:
        self.c.setStrokeColor(RULE_COLOR)
        self.c.line(MARGIN_LEFT, self.y, PAGE_WIDTH - MARGIN_RIGHT, self.y)
        self.y -= 2 * mm


def build_report_pdf(summary: "RunSummary", out_path: Path | str) -> Path:
    """Draw the drift/residual summary of a run on A4 pages and return the path."""
    out = Path(out_path)
    out.parent.mkdir(parents=True, exist_ok=True)

    c = Canvas(str(out), pagesize=PAGE_SIZE)
    c.setAuthor(f"nonholo {__version__}")
    c.setTitle(f"Run report {summary.scenario}")
    c.setLineWidth(0.5)
    c.setFillColor(TEXT_COLOR)
    c.setStrokeColor(RULE_COLOR)

    cur = _Cursor(c)
    c.setFont(BOLD_FONT, TITLE_FONT_SIZE)
    c.drawString(MARGIN_LEFT, cur.y - TITLE_FONT_SIZE, "Run report")
    cur.y -= TITLE_FONT_SIZE + 4 * mm
    cur.rule()

    for label, value in _header_lines(summary):
        cur.text(f"{label}: {value}")
    if summary.error:
        cur.text(f"Error: {summary.error}", color=FAIL_COLOR)
    cur.y -= SECTION_GAP - LINE_GAP

    content_width = PAGE_WIDTH - MARGIN_LEFT - MARGIN_RIGHT
    cur.text("Drift", font=BOLD_FONT, size=LABEL_FONT_SIZE)
    table = build_drift_table(drift_rows(summary.drift), content_width)
    _w, h = table.wrapOn(c, content_width, PAGE_HEIGHT)
    cur.need(h)
    table.drawOn(c, MARGIN_LEFT, cur.y - h)
    cur.y -= h + SECTION_GAP

    if summary.residual_max:
        cur.text(f"Constraint residuals (tolerance {summary.residual_tolerance:.3g})", font=BOLD_FONT, size=LABEL_FONT_SIZE)
        for key, value in sorted(summary.residual_max.items()):
            color = FAIL_COLOR if value > summary.residual_tolerance else TEXT_COLOR
            cur.text(f"{key}: max |r| = {value:.6e}", color=color)
        cur.y -= SECTION_GAP - LINE_GAP

    if summary.demo:
        cur.text("Unboundedness checkpoints", font=BOLD_FONT, size=LABEL_FONT_SIZE)
        for t, omega, x in summary.demo:
            cur.text(f"t = {t:.6g}: max |omega| = {omega:.6g}, max |X| = {x:.6g}")
        cur.y -= SECTION_GAP - LINE_GAP

    if summary.conditions is not None:
        cur.text("Conservation conditions", font=BOLD_FONT, size=LABEL_FONT_SIZE)
        for record in summary.conditions.to_records():
            cur.text(record, size=SMALL_FONT_SIZE)

    c.save()
    return out
