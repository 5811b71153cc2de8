import struct

import pytest

import cli
from config import settings
from datakit.io import save_detections
from harness.checkpoints import save_model
from harness.evaluate import EvalReport
from model.seq2seq import R2MModel
from model.vocabulary import ConceptSet
from numcore.errors import (CheckpointError, ContractError, DataFileNotFoundError, DataFormatError,
                            NumericError, VocabularyError)


@pytest.fixture
def config_file(tmp_path, small_config, dataset_dir):
    path = tmp_path / "run.cfg"
    small_config.replace(data_dir=str(dataset_dir), run_dir=str(tmp_path / "run")).save(path)
    return path


@pytest.mark.parametrize("exc, code", [
    (NumericError("nan"), cli.EXIT_NUMERIC),
    (DataFormatError("f.txt", 3, "bad"), cli.EXIT_DATA),
    (DataFileNotFoundError("corpus", "c.txt"), cli.EXIT_DATA),
    (VocabularyError("zebra"), cli.EXIT_DATA),
    (CheckpointError("bad magic"), cli.EXIT_DATA),
    (ContractError("order"), cli.EXIT_USAGE),
])
def test_exit_codes(exc, code):
    assert cli.exit_code_for(exc) == code


def test_usage_errors_exit_with_one():
    with pytest.raises(SystemExit) as excinfo:
        cli.main(["no-such-command"])
    assert excinfo.value.code == cli.EXIT_USAGE


def test_synth_data_writes_a_dataset(tmp_path):
    out = tmp_path / "data"
    code = cli.main(["synth-data", "--out", str(out), "--seed", "1", "--n-corpus", "12",
                     "--n-images", "6", "--d-img", "4"])
    assert code == cli.EXIT_OK
    for name in (settings.CORPUS_FILE, settings.FEATURES_FILE, settings.VOCAB_FILE,
                 *settings.SPLIT_FILES.values()):
        assert (out / name).is_file()


def test_missing_data_is_a_data_error(tmp_path, small_config):
    path = tmp_path / "run.cfg"
    small_config.replace(data_dir=str(tmp_path / "absent"), run_dir=str(tmp_path / "run")).save(path)
    assert cli.main(["train", "--config", str(path)]) == cli.EXIT_DATA


def test_bad_config_is_a_usage_error(tmp_path):
    path = tmp_path / "run.cfg"
    path.write_text("colour = red\n", encoding="utf-8")
    assert cli.main(["train", "--config", str(path)]) == cli.EXIT_USAGE


def test_corrupt_checkpoint_is_a_data_error(tmp_path, dataset_dir):
    ckpt = tmp_path / "model.ckpt"
    ckpt.write_bytes(b"XXXX" + struct.pack("<I", 0))
    split = dataset_dir / settings.SPLIT_FILES["image_val"]
    assert cli.main(["evaluate", "--ckpt", str(ckpt), "--split", str(split)]) == cli.EXIT_DATA


def test_generate_captions_repeated_images_identically(tmp_path, small_config, small_dataset, dataset_dir):
    model = R2MModel.build(small_config.replace(data_dir=str(dataset_dir)), small_dataset.vocab)
    ckpt = save_model(model, tmp_path / "model.ckpt", stage=4, epoch=1)
    ids = sorted(small_dataset.dictionary_ids)
    repeated = ConceptSet(tuple((i, 1.0) for i in ids[:4]))
    other = ConceptSet(((ids[4], 1.0),))
    detections = tmp_path / "detections.txt"
    save_detections(detections, [repeated, other, repeated, repeated], small_dataset.vocab)

    out = tmp_path / "captions.txt"
    assert cli.main(["generate", "--ckpt", str(ckpt), "--features", str(detections),
                     "--out", str(out)]) == cli.EXIT_OK
    lines = out.read_text(encoding="utf-8").splitlines()
    assert len(lines) == 4
    assert lines[0] == lines[2] == lines[3]


@pytest.mark.slow
def test_train_evaluate_generate_and_export(tmp_path, config_file, dataset_dir):
    run = tmp_path / "run"
    assert cli.main(["train", "--config", str(config_file)]) == cli.EXIT_OK
    ckpt = run / "checkpoints" / "stage4.ckpt"
    assert ckpt.is_file()
    assert (run / settings.LOSS_CURVES_FILE).is_file()

    split = dataset_dir / settings.SPLIT_FILES["image_val"]
    assert cli.main(["evaluate", "--ckpt", str(ckpt), "--split", str(split), "--beam", "2"]) == cli.EXIT_OK
    report = EvalReport.load(run / settings.EVAL_REPORT_FILE)
    assert report.beam_width == 2 and report.split == "image_val"

    captions = tmp_path / "captions.txt"
    detections = dataset_dir / settings.DETECTIONS_FILE
    assert cli.main(["generate", "--ckpt", str(ckpt), "--features", str(detections),
                     "--out", str(captions)]) == cli.EXIT_OK
    lines = captions.read_text(encoding="utf-8").splitlines()
    assert len(lines) == len(detections.read_text(encoding="utf-8").splitlines())

    sentence = " ".join(report.captions[0]) or "a man"
    assert cli.main(["export-attention", "--ckpt", str(ckpt), "--sentence", sentence, "--html"]) == cli.EXIT_OK
    written = list((run / settings.ATTENTION_DIR).glob("*.csv"))
    assert len(written) == 1
    assert written[0].with_suffix(".html").is_file()

    assert cli.main(["train", "--resume", str(ckpt)]) == cli.EXIT_OK


@pytest.mark.slow
def test_gradcheck_command_reports_status(capsys):
    assert cli.main(["gradcheck", "--seed", "0"]) == cli.EXIT_OK
    assert "seed=0 status=pass" in capsys.readouterr().out
