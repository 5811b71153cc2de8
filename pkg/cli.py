"""
Command-line entry point: data synthesis, training, generation, evaluation,
gradient checks, attention export and the curriculum comparison.

Exit codes: 0 success, 1 usage or configuration error, 2 data error,
3 numeric failure (including failed gradient checks).
"""

import argparse
import logging
import sys
from pathlib import Path
from typing import List, Optional, Set

from config import settings
from config.train_config import TrainConfig
from numcore.errors import (
    CheckpointError,
    ContractError,
    DataFileNotFoundError,
    DataFormatError,
    NumericError,
    R2MError,
    VocabularyError,
)

logger = logging.getLogger("cli")

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_NUMERIC = 3


class CliParser(argparse.ArgumentParser):
    """Argument parser whose usage errors exit with status 1."""

    def error(self, message: str):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def exit_code_for(exc: BaseException) -> int:
    if isinstance(exc, NumericError):
        return EXIT_NUMERIC
    if isinstance(exc, (DataFormatError, DataFileNotFoundError, VocabularyError, CheckpointError)):
        return EXIT_DATA
    return EXIT_USAGE


def _load_config(path: Optional[str]) -> TrainConfig:
    return TrainConfig.load(path) if path else TrainConfig().validate()


def _write_output(lines: List[str], out: Optional[str]) -> None:
    text = "".join(f"{line}\n" for line in lines)
    if out:
        path = Path(out)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(text, encoding="utf-8")
        logger.info(f"Wrote {path}")
    else:
        sys.stdout.write(text)


def _dictionary_ids(vocab, dictionary_path: Optional[str], data_dir: Optional[str]) -> Set[int]:
    """Visual dictionary as vocabulary ids; every non-reserved token when none is available."""
    from datakit.io import load_dictionary

    if dictionary_path:
        words = load_dictionary(dictionary_path)
    elif data_dir and (Path(data_dir) / settings.DICTIONARY_FILE).is_file():
        words = load_dictionary(Path(data_dir) / settings.DICTIONARY_FILE)
    else:
        logger.warning("No visual dictionary available; every vocabulary token counts as a concept")
        words = [t for t in vocab.tokens if t not in settings.RESERVED_TOKENS]
    return {vocab.id_of(word) for word in words if word in vocab}


# Subcommands

def cmd_synth_data(args) -> int:
    from datakit.grammar import Grammar, default_grammar
    from datakit.io import save_dataset
    from datakit.synth import synthesize_dataset

    grammar = Grammar.load(args.grammar) if args.grammar else default_grammar()
    dataset = synthesize_dataset(grammar, args.seed, args.n_corpus, args.n_images, args.d_img)
    save_dataset(dataset, args.out)
    return EXIT_OK


def cmd_train(args) -> int:
    from datakit.io import load_dataset
    from harness.checkpoints import load_model
    from harness.trainer import CorpusData, ImageData, StagePlan, Trainer, completed_stage_of
    from model.seq2seq import R2MModel

    completed, resume_epoch = 0, 0
    if args.resume:
        loaded = load_model(args.resume)
        model = loaded.model
        config = TrainConfig.load(args.config) if args.config else model.config
        completed, resume_epoch = completed_stage_of(loaded.stage, loaded.epoch, config)
    else:
        config = _load_config(args.config)
    if args.data_dir:
        config = config.replace(data_dir=args.data_dir)
    if args.run_dir:
        config = config.replace(run_dir=args.run_dir)

    dataset = load_dataset(config.data_dir)
    if args.resume:
        if model.vocab != dataset.vocab:
            raise CheckpointError(f"{args.resume}: vocabulary differs from the dataset in {config.data_dir}")
        model.config = config
    else:
        model = R2MModel.build(config, dataset.vocab)

    if args.stage == "all":
        plan = StagePlan(tuple(range(completed + 1, 5))) if completed < 4 else None
    else:
        plan = StagePlan.parse(args.stage)
    if plan is None:
        logger.info("All stages already completed")
        return EXIT_OK

    config.save(Path(config.run_dir) / "config.cfg")
    trainer = Trainer(model, config, config.run_dir, completed, resume_epoch)
    needs_corpus = any(stage in (1, 2) for stage in plan.stages)
    needs_images = any(stage in (3, 4) for stage in plan.stages)
    results = trainer.run(plan,
                          corpus=CorpusData.from_dataset(dataset) if needs_corpus else None,
                          images=ImageData.from_dataset(dataset) if needs_images else None)
    for result in results:
        logger.info(f"Stage {result.stage}: final loss {result.final_loss:.6f}, checkpoint {result.checkpoint}")
    return EXIT_OK


def cmd_generate(args) -> int:
    from datakit.io import load_detections
    from harness.checkpoints import load_model
    from harness.evaluate import caption
    from model.encoder import filter_concepts

    model = load_model(args.ckpt).model
    config = model.config
    dictionary = _dictionary_ids(model.vocab, args.dictionary, config.data_dir)
    detections = load_detections(args.features, model.vocab)
    width = args.beam or config.beam_width
    lines = []
    for scored in detections:
        concepts = filter_concepts(scored, dictionary, config.concept_threshold)
        lines.append(" ".join(caption(model, concepts, width, config.max_len)))
    _write_output(lines, args.out)
    return EXIT_OK


def cmd_evaluate(args) -> int:
    from datakit.io import load_dataset, load_split
    from harness.checkpoints import load_model
    from harness.evaluate import EvalSet, evaluate

    model = load_model(args.ckpt).model
    split_path = Path(args.split)
    indices = load_split(split_path)
    data_dir = args.data_dir or str(split_path.parent)
    dataset = load_dataset(data_dir)
    if split_path.stem.startswith("corpus"):
        eval_set = EvalSet.from_corpus(dataset, indices, name=split_path.stem)
    else:
        eval_set = EvalSet.from_images(dataset, indices, model.config.concept_threshold, name=split_path.stem)
    report = evaluate(model, eval_set, beam_width=args.beam)
    _write_output(report.to_lines(), args.out)
    report.save(Path(args.run_dir or model.config.run_dir) / settings.EVAL_REPORT_FILE)
    return EXIT_OK


def cmd_gradcheck(args) -> int:
    from harness.gradchecks import run_gradchecks

    config = _load_config(args.config)
    failed = False
    for seed in args.seed:
        report = run_gradchecks(config, seed)
        name, error = report.worst() or ("-", 0.0)
        status = "pass" if report.passed() else "fail"
        print(f"seed={seed} status={status} worst={name} max_rel_error={error:.3e}")
        if not report.usable:
            print(f"seed={seed} unusable={report.reason}")
        failed = failed or not report.passed()
    return EXIT_NUMERIC if failed else EXIT_OK


def cmd_export_attention(args) -> int:
    from datakit.synth import decoder_targets, tokenize
    from harness.checkpoints import load_model
    from model.trace_export import attention_frame, write_attention_csv
    from model.vocabulary import ConceptSet
    from numcore.tensor import no_grad

    model = load_model(args.ckpt).model
    vocab = model.vocab
    tokens = tokenize(args.sentence)
    if not tokens:
        raise ContractError("--sentence must contain at least one token")
    dictionary = _dictionary_ids(vocab, args.dictionary, model.config.data_dir)
    concept_ids = []
    for token_id in vocab.encode(tokens):
        if token_id in dictionary and token_id not in concept_ids:
            concept_ids.append(token_id)
    with no_grad():
        v = model.encode(ConceptSet.from_ids(concept_ids), settings.EVAL_ORDER_SEED)
        _, trace = model.decode_teacher_forced(v, decoder_targets(tokens, vocab))
    frame = attention_frame(trace, vocab)

    out_dir = Path(args.out or Path(model.config.run_dir) / settings.ATTENTION_DIR)
    stem = "_".join(tokens)[:80]
    path = write_attention_csv(frame, out_dir / f"{stem}.csv")
    logger.info(f"Wrote attention trace {path}")
    if args.html:
        from components.charts.attention_heatmap import AttentionHeatmap

        AttentionHeatmap.create_figure(frame).write_html(str(out_dir / f"{stem}.html"))
    return EXIT_OK


def cmd_ablate(args) -> int:
    from datakit.io import load_dataset
    from harness.ablation import ablation_lines, run_curriculum_ablation

    config = _load_config(args.config)
    dataset = load_dataset(args.data_dir or config.data_dir)
    results = run_curriculum_ablation(config, dataset, args.seeds)
    _write_output(ablation_lines(results), args.out)
    return EXIT_OK


def build_parser() -> CliParser:
    parser = CliParser(prog="r2m", description="Concepts-to-sentence captioning with relational memories")
    parser.add_argument("--log-level", default="INFO", choices=["DEBUG", "INFO", "WARNING", "ERROR"])
    commands = parser.add_subparsers(dest="command", required=True)

    synth = commands.add_parser("synth-data", help="generate the synthetic unpaired dataset")
    synth.add_argument("--grammar", help="grammar file (default: built-in grammar)")
    synth.add_argument("--out", required=True, help="dataset directory to write")
    synth.add_argument("--seed", type=int, default=0)
    synth.add_argument("--n-corpus", type=int, default=settings.DEFAULT_N_CORPUS)
    synth.add_argument("--n-images", type=int, default=settings.DEFAULT_N_IMAGES)
    synth.add_argument("--d-img", type=int, default=settings.DEFAULT_D_IMG)
    synth.set_defaults(handler=cmd_synth_data)

    train = commands.add_parser("train", help="run curriculum stages")
    train.add_argument("--config", help="key = value config file")
    train.add_argument("--stage", default="all", choices=["1", "2", "3", "4", "all"])
    train.add_argument("--resume", help="checkpoint to continue from")
    train.add_argument("--data-dir")
    train.add_argument("--run-dir")
    train.set_defaults(handler=cmd_train)

    generate = commands.add_parser("generate", help="caption images from a detections file")
    generate.add_argument("--ckpt", required=True)
    generate.add_argument("--features", required=True, help="detections file, one image of token:score items per line")
    generate.add_argument("--beam", type=int)
    generate.add_argument("--dictionary")
    generate.add_argument("--out")
    generate.set_defaults(handler=cmd_generate)

    evaluate = commands.add_parser("evaluate", help="BLEU-1..4 and concept recall on a split")
    evaluate.add_argument("--ckpt", required=True)
    evaluate.add_argument("--split", required=True, help="split file inside a dataset directory")
    evaluate.add_argument("--data-dir")
    evaluate.add_argument("--beam", type=int)
    evaluate.add_argument("--run-dir")
    evaluate.add_argument("--out")
    evaluate.set_defaults(handler=cmd_evaluate)

    gradcheck = commands.add_parser("gradcheck", help="finite-difference gradient checks")
    gradcheck.add_argument("--config")
    gradcheck.add_argument("--seed", type=int, nargs="+", default=[0])
    gradcheck.set_defaults(handler=cmd_gradcheck)

    export = commands.add_parser("export-attention", help="FM/RM attention weights for one sentence")
    export.add_argument("--ckpt", required=True)
    export.add_argument("--sentence", required=True)
    export.add_argument("--dictionary")
    export.add_argument("--out", help="output directory")
    export.add_argument("--html", action="store_true", help="also write a plotly heatmap")
    export.set_defaults(handler=cmd_export_attention)

    ablate = commands.add_parser("ablate", help="concept recall after stage 2 versus stage 4")
    ablate.add_argument("--config")
    ablate.add_argument("--data-dir")
    ablate.add_argument("--seeds", type=int, nargs="+", default=[0, 1, 2])
    ablate.add_argument("--out")
    ablate.set_defaults(handler=cmd_ablate)
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=getattr(logging, args.log_level),
                        format="%(asctime)s %(levelname)s %(name)s: %(message)s")
    try:
        return args.handler(args)
    except R2MError as exc:
        code = exit_code_for(exc)
        logger.error(f"{args.command} failed: {exc}")
        return code
    except ValueError as exc:
        logger.error(f"{args.command} failed: {exc}")
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
