"""Command-line entry point.

One binary, ten subcommands covering the whole pipeline: corpus
synthesis, augmentation, test-set construction, features, VAD, training,
embedding extraction, scoring, evaluation, and the ratio sweep.

Conventions: every pipeline subcommand takes a required --seed and is
fully reproducible from its argv; `--config FILE` supplies key=value
defaults (keys are long option names, '#' starts a comment) that
explicit flags override; the resolved configuration is echoed to stderr;
PADAUG_THREADS caps the worker pool. Exit codes: 0 success, 1 pipeline
failure, 2 usage error.
"""

import argparse
import sys
from pathlib import Path

from .audio_io import read_wav, write_wav
from .augment import PadAugConfig, pad_aug_utterance
from .errors import InvalidConfigError, PadAugError
from .features import FbankConfig, FeatureMatrix, cmn, fbank, read_feature_dump, write_feature_dump
from .manifest import UtteranceRecord, read_manifest, write_manifest
from .metrics import det_metrics, format_report, read_scores, read_trials, score_trials, write_scores
from .model import (
    ToyModelConfig,
    embed_utterance,
    load_model,
    load_training_set,
    save_model,
    train,
)
from .seeding import child_seed, make_rng
from .synth import build_corpus
from .testset import PLACEMENTS, TEST_SNR_DB, VARIANT_KINDS, TestVariant, build_testset
from .vad import VadConfig, detect, drop_silence, write_mask_dump
from .workers import worker_map


def _log_config(args) -> None:
    shown = {k: v for k, v in sorted(vars(args).items()) if k != "func"}
    print("resolved-config: " + " ".join(f"{k}={v}" for k, v in shown.items()), file=sys.stderr)


def _load_config_tokens(path) -> list:
    tokens = []
    for lineno, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise InvalidConfigError(f"{path}:{lineno}: expected key=value")
        key, value = (part.strip() for part in line.split("=", 1))
        if not key:
            raise InvalidConfigError(f"{path}:{lineno}: empty key")
        flag = "--" + key.replace("_", "-")
        if value.lower() == "true":
            tokens.append(flag)
        elif value.lower() == "false":
            pass  # store_true flags default to false
        else:
            tokens.extend([flag, value])
    return tokens


def _splice_config(argv: list) -> list:
    """Replace `--config FILE` with the file's tokens, placed right after
    the subcommand so explicit flags win."""
    if "--config" not in argv:
        return argv
    i = argv.index("--config")
    if i + 1 >= len(argv):
        raise InvalidConfigError("--config needs a file path")
    if i == 0:
        raise InvalidConfigError("--config must follow a subcommand")
    tokens = _load_config_tokens(argv[i + 1])
    rest = argv[:i] + argv[i + 2 :]
    return [rest[0]] + tokens + rest[1:]


# ---------------------------------------------------------------------------
# Subcommand implementations


def _cmd_synth(args) -> int:
    records, trials = build_corpus(args.n_speakers, args.n_utts, args.duration, args.out, args.seed)
    print(f"wrote {len(records)} utterances, {len(trials)} trials under {args.out}")
    return 0


def _cmd_augment(args) -> int:
    records = read_manifest(args.manifest)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)

    def one(rec: UtteranceRecord) -> UtteranceRecord:
        rng = make_rng(child_seed(args.seed, rec.utt_id))
        w = read_wav(rec.wav_path)
        sr = w.sample_rate_hz
        cfg = PadAugConfig(
            t_min=round(args.t_min * sr),
            t_max=round(args.t_max * sr),
            snr_min_db=args.snr_min,
            snr_max_db=args.snr_max,
            use_mid=args.mode == "hmt",
        )
        out = pad_aug_utterance(w, cfg, rng).waveform
        dst = out_dir / f"{rec.utt_id}.wav"
        write_wav(out, dst)
        return UtteranceRecord(rec.utt_id, rec.speaker_id, str(dst), len(out), sr)

    new_records = worker_map(one, records)
    write_manifest(new_records, out_dir / "manifest.tsv")
    print(f"augmented {len(new_records)} utterances into {out_dir}")
    return 0


def _cmd_build_testset(args) -> int:
    variant = TestVariant(kind=args.variant, k_seconds=args.k, placement=args.placement)
    records = read_manifest(args.manifest)
    snr = None if args.zero_pad else args.snr_db
    new_records = build_testset(records, variant, args.out, args.seed, snr_db=snr, from_start=args.from_start)
    print(f"built {variant.tag()} with {len(new_records)} utterances under {args.out}")
    return 0


def _cmd_featurize(args) -> int:
    records = read_manifest(args.manifest)
    cfg = FbankConfig(n_mels=args.n_mels, dither=args.dither)
    if cfg.dither > 0.0 and args.seed is None:
        raise InvalidConfigError("--dither requires --seed")

    def one(rec):
        rng = make_rng(child_seed(args.seed, rec.utt_id)) if cfg.dither > 0.0 else None
        feats = fbank(read_wav(rec.wav_path), cfg, rng)
        return rec.utt_id, cmn(feats) if args.cmn else feats

    write_feature_dump(args.out, worker_map(one, records))
    print(f"wrote features for {len(records)} utterances to {args.out}")
    return 0


def _cmd_vad(args) -> int:
    records = read_manifest(args.manifest)
    cfg = VadConfig(
        energy_offset_db=args.offset_db,
        hang_before=args.hang_before,
        hang_over=args.hang_over,
        floor_percentile=args.floor_percentile,
    )
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)

    def one(rec):
        w = read_wav(rec.wav_path)
        mask = detect(w, cfg)
        if mask.flags.any():
            out = drop_silence(w, mask)
        else:
            out = w  # nothing classified as speech: keep the original
        dst = out_dir / f"{rec.utt_id}.wav"
        write_wav(out, dst)
        rec_out = UtteranceRecord(rec.utt_id, rec.speaker_id, str(dst), len(out), w.sample_rate_hz)
        return rec_out, (rec.utt_id, mask)

    results = worker_map(one, records)
    write_manifest([r for r, _ in results], out_dir / "manifest.tsv")
    if args.mask_out:
        write_mask_dump(args.mask_out, [m for _, m in results])
    print(f"dropped silence for {len(records)} utterances into {out_dir}")
    return 0


def _cmd_train(args) -> int:
    records = read_manifest(args.manifest)
    ts = load_training_set(records, read_wav)
    cfg = ToyModelConfig(
        n_speakers=len(ts.speakers),
        hidden_dim=args.hidden_dim,
        embed_dim=args.embed_dim,
        scale=args.scale,
        margin_final=args.margin,
        lr_init=args.lr_init,
        lr_final=args.lr_final,
        warmup_steps=args.warmup_steps,
        total_steps=args.steps,
        margin_warm_steps=args.margin_warm_steps,
        batch_size=args.batch_size,
        chunk_len=args.chunk_frames,
        seed=args.seed,
    )
    sr = ts.waveforms[0].sample_rate_hz
    pad_cfg = PadAugConfig(
        t_min=round(args.t_min * sr),
        t_max=round(args.t_max * sr),
        snr_min_db=args.snr_min,
        snr_max_db=args.snr_max,
        use_mid=args.augment == "hmt",
    )
    result = train(cfg, ts, augment=args.augment, pad_cfg=pad_cfg)
    meta = {
        "augment": args.augment,
        "speakers": ",".join(ts.speakers),
        "steps": cfg.total_steps,
        "final_loss": f"{result.log[-1][1]:.6f}",
        "seed": args.seed,
    }
    save_model(result.model, args.out, meta)
    if args.log:
        log_path = Path(args.log)
        log_path.parent.mkdir(parents=True, exist_ok=True)
        with open(log_path, "w", encoding="utf-8") as f:
            f.write("step\tloss\tlr\tmargin\n")
            for step, loss, lr, margin in result.log:
                f.write(f"{step}\t{loss:.6f}\t{lr:.8f}\t{margin:.6f}\n")
    print(f"trained {cfg.total_steps} steps (final loss {result.log[-1][1]:.4f}), saved {args.out}")
    return 0


def _cmd_embed(args) -> int:
    model = load_model(args.model)
    records = read_manifest(args.manifest)

    def one(rec):
        emb = embed_utterance(model, read_wav(rec.wav_path))
        return rec.utt_id, FeatureMatrix(emb[None, :])

    write_feature_dump(args.out, worker_map(one, records))
    print(f"wrote {len(records)} embeddings to {args.out}")
    return 0


def _cmd_score(args) -> int:
    trials = read_trials(args.trials)
    store = {utt: mat.values[0] for utt, mat in read_feature_dump(args.embeddings).items()}
    write_scores(score_trials(trials, store), args.out)
    print(f"scored {len(trials)} trials to {args.out}")
    return 0


def _cmd_eval(args) -> int:
    trials = read_trials(args.trials)
    records = read_scores(args.scores, trials)
    m = det_metrics(records, p_target=args.p_target, c_miss=args.c_miss, c_fa=args.c_fa)
    report = format_report([(args.name, m)])
    if args.out:
        Path(args.out).write_text(report, encoding="utf-8")
    sys.stdout.write(report)
    return 0


def _cmd_sweep(args) -> int:
    records = read_manifest(args.manifest)
    trials = read_trials(args.trials)
    models = []
    for spec in args.model:
        if "=" not in spec:
            raise InvalidConfigError(f"--model wants NAME=PATH, got {spec!r}")
        name, path = spec.split("=", 1)
        models.append((name, load_model(path)))
    work_dir = Path(args.work_dir) if args.work_dir else Path(str(args.out) + ".work")
    snr = None if args.zero_pad else args.snr_db

    lines = ["system\tk_seconds\tratio\teer\tmin_dcf"]
    for k in range(9):
        variant = TestVariant(kind="ratio", k_seconds=k, placement=args.placement)
        new_records = build_testset(records, variant, work_dir / f"ratio{k}", args.seed, snr_db=snr)
        waves = worker_map(lambda r: (r.utt_id, read_wav(r.wav_path)), new_records)
        for name, model in models:
            store = dict(worker_map(lambda uw: (uw[0], embed_utterance(model, uw[1])), waves))
            m = det_metrics(score_trials(trials, store), p_target=args.p_target)
            lines.append(f"{name}\t{k}\t{k / 3.0:.4f}\t{m.eer:.6f}\t{m.min_dcf:.6f}")
            print(f"ratio {k}/3 {name}: eer {m.eer:.4f} min_dcf {m.min_dcf:.4f}", file=sys.stderr)
    text = "\n".join(lines) + "\n"
    Path(args.out).parent.mkdir(parents=True, exist_ok=True)
    Path(args.out).write_text(text, encoding="utf-8")
    print(f"wrote sweep table to {args.out}")
    return 0


# ---------------------------------------------------------------------------
# Parser


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="padaug",
        description="Silence-padding augmentation and a desk-scale speaker-verification pipeline.",
        epilog="Any subcommand accepts --config FILE with key=value lines; explicit flags override.",
    )
    sub = parser.add_subparsers(dest="command", required=True, metavar="subcommand")

    def add(name, fn, help_text):
        p = sub.add_parser(name, help=help_text)
        p.set_defaults(func=fn)
        return p

    p = add("synth", _cmd_synth, "generate a synthetic multi-speaker corpus")
    p.add_argument("--out", required=True)
    p.add_argument("--n-speakers", type=int, default=20)
    p.add_argument("--n-utts", type=int, default=50)
    p.add_argument("--duration", type=float, default=4.0)
    p.add_argument("--seed", type=int, required=True)

    p = add("augment", _cmd_augment, "apply padding augmentation to a manifest")
    p.add_argument("--manifest", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--mode", choices=("ht", "hmt"), default="ht")
    p.add_argument("--t-min", type=float, default=1.0, help="minimum chunk seconds")
    p.add_argument("--t-max", type=float, default=3.0, help="output length in seconds")
    p.add_argument("--snr-min", type=float, default=15.0)
    p.add_argument("--snr-max", type=float, default=30.0)
    p.add_argument("--seed", type=int, required=True)

    p = add("build-testset", _cmd_build_testset, "materialize an evaluation variant")
    p.add_argument("--manifest", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--variant", choices=VARIANT_KINDS, required=True)
    p.add_argument("--k", type=int, default=0, help="padding seconds for the ratio variant")
    p.add_argument("--placement", choices=PLACEMENTS, default="head-tail-even")
    p.add_argument("--snr-db", type=float, default=TEST_SNR_DB)
    p.add_argument("--zero-pad", action="store_true", help="pad with digital zeros instead of noise")
    p.add_argument("--from-start", action="store_true", help="chunk from the utterance start")
    p.add_argument("--seed", type=int, required=True)

    p = add("featurize", _cmd_featurize, "extract log-Mel features to a binary dump")
    p.add_argument("--manifest", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--n-mels", type=int, default=80)
    p.add_argument("--cmn", action="store_true", help="apply utterance-level mean normalization")
    p.add_argument("--dither", type=float, default=0.0)
    p.add_argument("--seed", type=int, default=None)

    p = add("vad", _cmd_vad, "drop silent frames with an energy VAD")
    p.add_argument("--manifest", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--mask-out", default=None)
    p.add_argument("--offset-db", type=float, default=9.0)
    p.add_argument("--hang-before", type=int, default=10)
    p.add_argument("--hang-over", type=int, default=20)
    p.add_argument("--floor-percentile", type=float, default=0.1)

    p = add("train", _cmd_train, "train the toy embedding model")
    p.add_argument("--manifest", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--augment", choices=("none", "ht", "hmt"), default="none")
    p.add_argument("--steps", type=int, default=1000)
    p.add_argument("--batch-size", type=int, default=32)
    p.add_argument("--hidden-dim", type=int, default=64)
    p.add_argument("--embed-dim", type=int, default=32)
    p.add_argument("--scale", type=float, default=32.0)
    p.add_argument("--margin", type=float, default=0.2)
    p.add_argument("--lr-init", type=float, default=1e-1)
    p.add_argument("--lr-final", type=float, default=5e-5)
    p.add_argument("--warmup-steps", type=int, default=100)
    p.add_argument("--margin-warm-steps", type=int, default=-1)
    p.add_argument("--chunk-frames", type=int, default=300)
    p.add_argument("--t-min", type=float, default=1.0)
    p.add_argument("--t-max", type=float, default=3.0)
    p.add_argument("--snr-min", type=float, default=15.0)
    p.add_argument("--snr-max", type=float, default=30.0)
    p.add_argument("--log", default=None, help="optional per-step training log TSV")
    p.add_argument("--seed", type=int, required=True)

    p = add("embed", _cmd_embed, "extract embeddings with a trained model")
    p.add_argument("--manifest", required=True)
    p.add_argument("--model", required=True)
    p.add_argument("--out", required=True)

    p = add("score", _cmd_score, "cosine-score a trial list")
    p.add_argument("--trials", required=True)
    p.add_argument("--embeddings", required=True)
    p.add_argument("--out", required=True)

    p = add("eval", _cmd_eval, "compute EER and minDCF from scores")
    p.add_argument("--trials", required=True)
    p.add_argument("--scores", required=True)
    p.add_argument("--name", default="testset")
    p.add_argument("--p-target", type=float, default=0.01)
    p.add_argument("--c-miss", type=float, default=1.0)
    p.add_argument("--c-fa", type=float, default=1.0)
    p.add_argument("--out", default=None)

    p = add("sweep", _cmd_sweep, "evaluate models across the padding-ratio sweep")
    p.add_argument("--manifest", required=True)
    p.add_argument("--trials", required=True)
    p.add_argument("--model", action="append", required=True, help="NAME=PATH, repeatable")
    p.add_argument("--out", required=True)
    p.add_argument("--work-dir", default=None)
    p.add_argument("--placement", choices=PLACEMENTS, default="head-tail-even")
    p.add_argument("--snr-db", type=float, default=TEST_SNR_DB)
    p.add_argument("--zero-pad", action="store_true")
    p.add_argument("--p-target", type=float, default=0.01)
    p.add_argument("--seed", type=int, required=True)

    return parser


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    try:
        argv = _splice_config(argv)
        args = _build_parser().parse_args(argv)
        _log_config(args)
        return args.func(args)
    except PadAugError as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    except OSError as e:
        print(f"error: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
