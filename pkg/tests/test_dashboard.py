import base64
import math

import pandas as pd
import pytest

from app import create_app
from components.charts.attention_heatmap import AttentionHeatmap
from components.export_reports import ExportReports
from components.kpi_cards import KPICards
from components.layout import TABS, DashboardLayout
from components.trend_analysis import TrendAnalysis
from config import settings
from harness.evaluate import EvalReport
from harness.trainer import LossRecord, append_loss_curve
from model.trace_export import attention_frame, write_attention_csv
from model.vocabulary import ConceptSet
from utils.data_loader import RunLoader
from utils.formatters import Formatters


@pytest.fixture
def run_dir(tmp_path, make_model):
    root = tmp_path / "demo"
    records = [LossRecord(1, epoch, batch, 3.0 - 0.1 * epoch - 0.01 * batch, xe=3.0 - 0.1 * epoch)
               for epoch in (1, 2, 3) for batch in (0, 1)]
    records += [LossRecord(2, 1, batch, 2.5, xe=2.0, rec=0.5) for batch in (0, 1)]
    append_loss_curve(root / settings.LOSS_CURVES_FILE, records)
    EvalReport(bleu=[0.6, 0.4, 0.3, 0.2], concept_recall=0.8, beam_width=3,
               captions=[["a", "dog"], ["a", "man"]], split="image_val").save(root / settings.EVAL_REPORT_FILE)
    model = make_model()
    _, trace = model.decode_teacher_forced(model.encode(ConceptSet.from_ids([3])), [5, model.vocab.end_id])
    write_attention_csv(attention_frame(trace, model.vocab), root / settings.ATTENTION_DIR / "w3_w5.csv")
    return root


def test_run_loader_reads_every_artifact(run_dir):
    loader = RunLoader(run_dir)
    assert loader.get_stages() == ["All", "1", "2"]
    assert loader.get_sentences() == ["w3_w5"]
    assert loader.report.split == "image_val"
    assert len(loader.filter_losses("1")) == 6


def test_epoch_curve_averages_batches(run_dir):
    curve = RunLoader(run_dir).get_epoch_curve("All")
    assert curve["step"].tolist() == [1, 2, 3, 4]
    assert curve["loss"].iloc[0] == pytest.approx(3.0 - 0.1 - 0.005)
    assert curve["rolling_loss"].iloc[2] == pytest.approx(curve["loss"].iloc[:3].mean())
    assert curve["rolling_loss"].iloc[3] == pytest.approx(2.5)


def test_summary_stats(run_dir):
    stats = RunLoader(run_dir).get_summary_stats("2")
    assert stats["bleu4"] == 0.2
    assert stats["concept_recall"] == 0.8
    assert stats["final_loss"] == pytest.approx(2.5)


def test_fresh_run_directory_is_empty_not_an_error(tmp_path):
    loader = RunLoader(tmp_path)
    assert loader.get_stages() == ["All"]
    assert loader.get_attention("missing").empty
    stats = loader.get_summary_stats("All")
    assert all(math.isnan(value) for value in stats.values())


def test_loss_file_without_required_columns_is_rejected(tmp_path):
    pd.DataFrame({"stage": [1], "loss": [1.0]}).to_csv(tmp_path / settings.LOSS_CURVES_FILE, index=False)
    with pytest.raises(ValueError):
        RunLoader(tmp_path)


def test_loss_figures(run_dir, tmp_path):
    trend = TrendAnalysis(RunLoader(run_dir))
    assert len(trend.create_loss_figure("All").data) == 3
    rec = trend.create_trend_figure("All", "rec", "area")
    assert len(rec.data) == 2
    assert len(rec.data[0].x) == 0
    stats = trend.get_trend_statistics("1", "xe")
    assert len(stats) == 6

    empty = TrendAnalysis(RunLoader(tmp_path)).create_loss_figure("All")
    assert empty.layout.annotations[0].text == "No loss curve recorded yet"


def test_attention_heatmap(run_dir):
    frame = RunLoader(run_dir).get_attention("w3_w5")
    fig = AttentionHeatmap.create_figure(frame)
    assert len(fig.data) == 2
    assert len(fig.data[0].y) == 2
    assert len(AttentionHeatmap.create_figure(frame.iloc[0:0]).data) == 0


def test_csv_export(run_dir):
    export = ExportReports(RunLoader(run_dir))
    result = export.generate_csv("metrics")
    assert result["error"] is None
    assert result["filename"] == "r2m_demo_metrics.csv"
    payload = base64.b64decode(result["content"].split(",", 1)[1]).decode()
    assert payload.splitlines()[0] == "metric,value"
    assert "concept_recall" in payload


def test_pdf_export(run_dir):
    result = ExportReports(RunLoader(run_dir)).generate_pdf_report()
    assert result["error"] is None
    assert base64.b64decode(result["content"].split(",", 1)[1]).startswith(b"%PDF")


def test_exports_without_report(tmp_path):
    export = ExportReports(RunLoader(tmp_path))
    assert export.generate_csv("captions")["error"]
    assert export.generate_pdf_report()["error"]


def test_formatters():
    assert Formatters.format_number(float("nan")) == "—"
    assert Formatters.format_number(1234.5, decimals=1) == "1,234.5"
    assert Formatters.format_percentage(0.25) == "25.0%"
    assert Formatters.format_scope("3") == "Stage 3 • L_M"
    assert Formatters.format_sentence("a_dog") == "a dog"


def test_layout_builds_every_tab(run_dir):
    layout = DashboardLayout(RunLoader(run_dir))
    assert layout.create_layout().id == "app-container"
    for tab_id, _ in TABS:
        assert layout.create_tab_layout(tab_id) is not None


def test_app_factory(run_dir):
    app = create_app(str(run_dir))
    assert app.title == settings.APP_TITLE
    assert app.layout is not None


def test_kpi_row_has_a_value_slot_per_metric():
    row = KPICards().create_kpi_row()
    value_ids = [card.children[1].id for card in row.children]
    assert value_ids == ["kpi-bleu1", "kpi-bleu4", "kpi-recall", "kpi-loss"]
    assert row.children[2].children[1].className == "kpi-value accent"
