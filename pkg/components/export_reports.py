"""
Export and Reports component: the evaluation report as CSV or PDF.
"""

import base64
from io import BytesIO
from typing import Dict, Optional

import pandas as pd
from dash import dcc, html
from reportlab.lib import colors
from reportlab.lib.pagesizes import letter
from reportlab.lib.styles import getSampleStyleSheet
from reportlab.platypus import Paragraph, SimpleDocTemplate, Spacer, Table, TableStyle

from harness.evaluate import EvalReport
from utils.data_loader import RunLoader
from utils.formatters import Formatters

HEADER_STYLE = [
    ('BACKGROUND', (0, 0), (-1, 0), colors.grey),
    ('TEXTCOLOR', (0, 0), (-1, 0), colors.whitesmoke),
    ('FONTNAME', (0, 0), (-1, 0), 'Helvetica-Bold'),
    ('BOTTOMPADDING', (0, 0), (-1, 0), 8),
    ('GRID', (0, 0), (-1, -1), 1, colors.black),
]


class ExportReports:
    """Evaluation report export."""

    def __init__(self, run_loader: RunLoader):
        self.run_loader = run_loader

    def create_export_card(self) -> html.Div:
        return html.Div(
            className="card export-card",
            children=[
                html.H3("Export & Reports", className="card-title"),
                html.Div(
                    className="export-controls",
                    children=[
                        html.Div([
                            html.Label("Export Format:"),
                            dcc.Dropdown(
                                id="export-format-dd",
                                options=[
                                    {"label": "CSV", "value": "csv"},
                                    {"label": "PDF Report", "value": "pdf"}
                                ],
                                value="csv",
                                className="dropdown"
                            )
                        ]),
                        html.Div([
                            html.Label("Contents:"),
                            dcc.Dropdown(
                                id="export-scope-dd",
                                options=[
                                    {"label": "Metrics", "value": "metrics"},
                                    {"label": "Captions", "value": "captions"},
                                    {"label": "Loss curve", "value": "losses"}
                                ],
                                value="metrics",
                                className="dropdown"
                            )
                        ]),
                        html.Button(
                            "Generate Export",
                            id="export-generate-btn",
                            className="btn-primary",
                            n_clicks=0
                        )
                    ]
                ),
                html.Div(
                    id="download-section",
                    className="download-section",
                    children=[
                        html.H4("Download Ready", className="download-title"),
                        html.Div(id="export-download-link", className="download-link"),
                        html.Div(id="export-status", className="status-message")
                    ],
                    style={"display": "none"}
                ),
            ],
        )

    def export_frame(self, scope: str) -> pd.DataFrame:
        report = self.run_loader.report
        if scope == "losses":
            return self.run_loader.losses
        if report is None:
            return pd.DataFrame()
        return report.captions_frame() if scope == "captions" else report.metrics_frame()

    def generate_csv(self, scope: str) -> Dict[str, Optional[str]]:
        df = self.export_frame(scope)
        if df.empty:
            return {"content": "", "filename": "", "error": "No data available for export"}
        b64 = base64.b64encode(df.to_csv(index=False).encode()).decode()
        return {"content": f"data:text/csv;base64,{b64}",
                "filename": self.get_export_filename(scope, "csv"), "error": None}

    def generate_pdf_report(self, report: Optional[EvalReport] = None) -> Dict[str, Optional[str]]:
        """PDF with the metric table and the first generated captions."""
        report = report or self.run_loader.report
        if report is None:
            return {"content": "", "filename": "", "error": "No evaluation report in this run"}
        try:
            buffer = BytesIO()
            doc = SimpleDocTemplate(buffer, pagesize=letter)
            styles = getSampleStyleSheet()
            elements = [
                Paragraph("Caption Evaluation Report", styles['Title']),
                Spacer(1, 12),
                Paragraph(f"Run: {self.run_loader.run_dir}", styles['Normal']),
                Paragraph(f"Split: {report.split} • {report.samples} samples • beam width {report.beam_width}",
                          styles['Normal']),
                Spacer(1, 12),
            ]

            metrics = [['Metric', 'Value']]
            metrics.extend([name, Formatters.format_number(value)] for name, value in report.summary().items())
            metric_table = Table(metrics)
            metric_table.setStyle(TableStyle(HEADER_STYLE + [('ALIGN', (0, 0), (-1, -1), 'CENTER')]))
            elements.extend([Paragraph("Scores", styles['Heading2']), Spacer(1, 6), metric_table, Spacer(1, 20)])

            preview = [['#', 'Caption']]
            preview.extend([str(i), " ".join(words) or "(empty)"] for i, words in enumerate(report.captions[:10]))
            caption_table = Table(preview)
            caption_table.setStyle(TableStyle(HEADER_STYLE + [
                ('FONTSIZE', (0, 1), (-1, -1), 8),
                ('ROWBACKGROUNDS', (0, 1), (-1, -1), [colors.white, colors.lightgrey]),
            ]))
            elements.extend([Paragraph("Captions (first 10)", styles['Heading2']), Spacer(1, 6), caption_table])

            doc.build(elements)
            b64 = base64.b64encode(buffer.getvalue()).decode()
            return {"content": f"data:application/pdf;base64,{b64}",
                    "filename": self.get_export_filename("report", "pdf"), "error": None}
        except Exception as e:
            return {"content": "", "filename": "", "error": f"PDF generation error: {str(e)}"}

    def get_export_filename(self, scope: str, format_type: str) -> str:
        run = self.run_loader.run_dir.name or "run"
        return f"r2m_{run}_{scope}.{format_type}"
