"""Command-line driver: pestoi / per / eer / ratings experiment runs.

Each command assembles corpus + metric modules into a MetricReport shaped
like the published tables, writes it losslessly (CSV or JSON) and prints a
two-decimal console table. Every command accepts ``--fixtures`` with
precomputed per-utterance/per-speaker values so the table-reproduction
suite runs without audio or private data.

Exit codes: 0 success, 2 validation error, 3 missing input,
4 numeric/metric failure.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path

from . import __version__
from .audio import FrontEndConfig, load_wav
from .corpus import (
    CONTROL_STAGE,
    GROUP_CONTROL,
    load_manifest,
    resolve_corpus_root,
    select_utterances,
)
from .errors import (
    EmptySelection,
    InputValidationError,
    MetricComputationError,
    MissingEmbeddings,
    MissingInputError,
    MissingTranscripts,
    ParseError,
    PvcevalError,
)
from .intelligibility import build_reference, p_estoi_speaker, p_estoi_utterance
from .phonemes import per_speaker, per_table, read_transcripts
from .report import MetricReport, render_csv, render_json, render_table
from .stats import (
    MOS_SCALE,
    SEVERITY_SCALE,
    SIMILARITY_SCALE,
    aggregate_severity,
    likert_to_percent,
    pearson,
    read_rating_matrix,
)
from .verification import eer, read_embeddings, eer_table

GT_SYSTEM = "GT"


@dataclass
class ExperimentConfig:
    command: str
    manifest: str | None = None
    corpus_root: str | None = None
    embeddings: str | None = None
    phonemes: list = field(default_factory=list)  # "SYSTEM=path" entries
    ratings: list = field(default_factory=list)  # "LABEL=path" entries
    fixtures: str | None = None
    out: str = "."
    format: str = "csv"
    seed: int = 0
    jobs: int = 1
    include_all_speakers: bool = False

    def __post_init__(self):
        if self.jobs < 1:
            raise InputValidationError("--jobs must be >= 1")


def _provenance(cfg: ExperimentConfig) -> dict:
    # hash only what determines the computation, not where results land
    payload = {k: v for k, v in asdict(cfg).items() if k not in ("out", "format")}
    digest = hashlib.sha256(
        json.dumps(payload, sort_keys=True).encode("utf-8")
    ).hexdigest()
    return {
        "toolkit_version": __version__,
        "config_hash": digest[:16],
        "seed": str(cfg.seed),
    }


def _load_fixture(path) -> dict:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except FileNotFoundError as exc:
        raise MissingInputError(f"fixture file {path} not found") from exc
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}: {exc}") from exc


def split_utterance_id(utterance_id: str) -> tuple[str, str, str]:
    """Utterance ids follow SPEAKER_STAGE_SENTENCE (sentence may contain _)."""
    parts = utterance_id.split("_", 2)
    if len(parts) != 3:
        raise InputValidationError(
            f"utterance id {utterance_id!r} is not SPEAKER_STAGE_SENTENCE"
        )
    return parts[0], parts[1], parts[2]


# --- pestoi -----------------------------------------------------------------


def _pestoi_fixture_report(cfg: ExperimentConfig) -> MetricReport:
    doc = _load_fixture(cfg.fixtures)
    speakers = list(doc["speakers"])
    scores = doc["scores"]
    if not speakers or not scores:
        raise EmptySelection("fixture lists no speakers or systems")
    systems = list(scores)
    rows = [
        {"row": spk, **{sysname: scores[sysname].get(spk) for sysname in systems}}
        for spk in speakers
    ]
    aggregates = []
    if GT_SYSTEM in systems and len(systems) > 1:
        gt_col = [scores[GT_SYSTEM][spk] for spk in speakers]
        r_row = {"row": "r_GT", GT_SYSTEM: None}
        for sysname in systems:
            if sysname == GT_SYSTEM:
                continue
            sys_col = [scores[sysname][spk] for spk in speakers]
            r_row[sysname] = pearson(sys_col, gt_col).r
        aggregates.append(r_row)
    return MetricReport(
        experiment_id="pestoi",
        columns=systems,
        rows=rows,
        aggregates=aggregates,
        provenance=_provenance(cfg),
    )


def _pestoi_audio_report(cfg: ExperimentConfig) -> MetricReport:
    if not cfg.manifest:
        raise MissingInputError("pestoi needs --manifest or --fixtures")
    manifest = load_manifest(cfg.manifest)
    root = resolve_corpus_root(cfg.manifest, manifest, cfg.corpus_root)
    front_cfg = FrontEndConfig()

    controls = [s for s in manifest.speakers if s.group == GROUP_CONTROL]
    reference_cache: dict[str, object] = {}

    def reference_for(sentence: str):
        if sentence not in reference_cache:
            buffers = []
            for ctl in controls:
                key = (ctl.id, CONTROL_STAGE, sentence)
                if key in manifest.utterances:
                    buffers.append(load_wav(root / manifest.utterances[key]))
            reference_cache[sentence] = (
                build_reference(buffers, front_cfg, sentence_id=sentence) if buffers else None
            )
        return reference_cache[sentence]

    def score_one(task):
        speaker_id, stage, sentence, path = task
        utt_id = f"{speaker_id}_{stage}_{sentence}"
        ref = reference_for(sentence)
        if ref is None:
            raise EmptySelection(f"{utt_id}: no control utterances for sentence {sentence}")
        try:
            return p_estoi_utterance(
                load_wav(root / path), ref, front_cfg, utterance_id=utt_id, speaker_id=speaker_id
            )
        except PvcevalError as exc:
            raise type(exc)(f"{utt_id}: {exc}") from exc

    rows = []
    for rec in manifest.speakers:
        if rec.group == GROUP_CONTROL:
            continue
        for stage in rec.stages:
            tasks = [
                (rec.id, stage, sentence, path)
                for sentence, path in select_utterances(manifest, rec.id, stage)
            ]
            if not tasks:
                continue
            # warm the reference cache serially; scoring itself is parallel
            for task in tasks:
                reference_for(task[2])
            if cfg.jobs > 1:
                with ThreadPoolExecutor(max_workers=cfg.jobs) as pool:
                    scores = list(pool.map(score_one, tasks))
            else:
                scores = [score_one(t) for t in tasks]
            summary = p_estoi_speaker(scores, stage=stage)
            rows.append(
                {
                    "row": f"{rec.id}_{stage}",
                    GT_SYSTEM: summary.value,
                    "utterances": float(summary.utterance_count),
                }
            )
    if not rows:
        raise EmptySelection("no pathological utterances found in the manifest")
    return MetricReport(
        experiment_id="pestoi",
        columns=[GT_SYSTEM, "utterances"],
        rows=rows,
        aggregates=[],
        provenance=_provenance(cfg),
    )


def cmd_pestoi(cfg: ExperimentConfig) -> MetricReport:
    if cfg.fixtures:
        return _pestoi_fixture_report(cfg)
    return _pestoi_audio_report(cfg)


# --- per --------------------------------------------------------------------


def _per_columns(per_system: dict, provenance: dict) -> MetricReport:
    table = per_table(per_system)
    systems = list(per_system)
    speakers = sorted(next(iter(per_system.values())))
    flag_columns = [
        f"{sysname}_overenhanced" for sysname in systems if sysname != GT_SYSTEM
    ] if GT_SYSTEM in per_system else []

    def build_row(label: str) -> dict:
        row = {"row": label}
        for sysname in systems:
            row[sysname] = table[sysname][label]
        for sysname in systems:
            if sysname == GT_SYSTEM or GT_SYSTEM not in per_system:
                continue
            row[f"{sysname}_overenhanced"] = table[sysname][label] < table[GT_SYSTEM][label]
        return row

    rows = [build_row(spk) for spk in speakers]
    aggregates = [build_row("Average")]
    return MetricReport(
        experiment_id="per",
        columns=systems + flag_columns,
        rows=rows,
        aggregates=aggregates,
        provenance=provenance,
    )


def cmd_per(cfg: ExperimentConfig) -> MetricReport:
    if cfg.fixtures:
        doc = _load_fixture(cfg.fixtures)
        per_system = {name: dict(col) for name, col in doc["per"].items()}
        return _per_columns(per_system, _provenance(cfg))
    if not cfg.phonemes:
        raise MissingTranscripts("per needs --phonemes SYSTEM=path or --fixtures")
    per_system = {}
    for entry in cfg.phonemes:
        sysname, _, path = entry.partition("=")
        if not path:
            raise InputValidationError(f"--phonemes entry {entry!r} is not SYSTEM=path")
        pairs = read_transcripts(path)
        by_speaker: dict[str, list] = {}
        for ref, hyp in pairs:
            spk, stage, _ = split_utterance_id(ref.utterance_id)
            by_speaker.setdefault(f"{spk}_{stage}", []).append((ref, hyp))
        per_system[sysname] = {
            label: per_speaker(items) for label, items in by_speaker.items()
        }
    return _per_columns(per_system, _provenance(cfg))


# --- eer --------------------------------------------------------------------


def _eer_report_from_scores(
    per_speaker_scores: dict, distributions: dict, provenance: dict
) -> tuple[MetricReport, dict]:
    rows = []
    for spk in sorted(per_speaker_scores):
        entry = per_speaker_scores[spk]
        if not entry["T1"]:
            continue  # nontarget-only speakers have no target row
        non = entry["nontarget"]
        t1 = entry["T1"]
        t1t2 = entry["T1"] + entry["T1+T2"]
        rows.append(
            {
                "row": spk,
                "T1": eer(t1, non).eer,
                "T1-T2": eer(t1t2, non).eer,
            }
        )
    pooled_t1 = distributions["T1"]
    pooled_t1t2 = distributions["T1"] + distributions["T1+T2"]
    pooled_non = distributions["nontarget"]
    aggregates = [
        {
            "row": "All",
            "T1": eer(pooled_t1, pooled_non).eer,
            "T1-T2": eer(pooled_t1t2, pooled_non).eer,
        }
    ]
    report = MetricReport(
        experiment_id="eer",
        columns=["T1", "T1-T2"],
        rows=rows,
        aggregates=aggregates,
        provenance=provenance,
    )
    return report, distributions


def cmd_eer(cfg: ExperimentConfig) -> tuple[MetricReport, dict]:
    if cfg.fixtures:
        doc = _load_fixture(cfg.fixtures)
        distributions = {"T1": [], "T1+T2": [], "nontarget": []}
        per_speaker_scores: dict[str, dict] = {}

        def bucket(spk):
            return per_speaker_scores.setdefault(
                spk, {"T1": [], "T1+T2": [], "nontarget": []}
            )

        for trial in doc["trials"]:
            group = trial["group"]
            score = float(trial["score"])
            distributions[group].append(score)
            for spk in trial["speakers"]:
                bucket(spk)[group].append(score)
        return _eer_report_from_scores(per_speaker_scores, distributions, _provenance(cfg))

    if not cfg.embeddings:
        raise MissingEmbeddings("eer needs --embeddings or --fixtures")
    records = read_embeddings(cfg.embeddings)
    manifest = load_manifest(cfg.manifest) if cfg.manifest else None
    table, distributions = eer_table(records, manifest, cfg.include_all_speakers)
    rows = [
        {"row": spk, "T1": table[spk]["T1"].eer, "T1-T2": table[spk]["T1-T2"].eer}
        for spk in table
        if spk != "All"
    ]
    aggregates = [
        {"row": "All", "T1": table["All"]["T1"].eer, "T1-T2": table["All"]["T1-T2"].eer}
    ]
    report = MetricReport(
        experiment_id="eer",
        columns=["T1", "T1-T2"],
        rows=rows,
        aggregates=aggregates,
        provenance=_provenance(cfg),
    )
    return report, distributions


def render_distributions_csv(distributions: dict) -> str:
    lines = ["group,score"]
    for group in ("T1", "T1+T2", "nontarget"):
        for score in distributions.get(group, []):
            lines.append(f"{group},{repr(float(score))}")
    return "\n".join(lines) + "\n"


# --- ratings ----------------------------------------------------------------


def _ratings_fixture_report(cfg: ExperimentConfig) -> MetricReport:
    doc = _load_fixture(cfg.fixtures)
    fixture_rows = doc["rows"]
    systems = []
    for entry in fixture_rows:
        for sysname in entry.get("mos", {}):
            if sysname not in systems:
                systems.append(sysname)
    rows = []
    for entry in fixture_rows:
        row = {"row": entry["speaker"]}
        for sysname in systems:
            row[sysname] = entry.get("mos", {}).get(sysname)
        row["severity"] = entry.get("severity")
        row["external"] = bool(entry.get("external", False))
        rows.append(row)
    return _finish_mos_report(rows, systems, _provenance(cfg))


def _finish_mos_report(rows: list, systems: list, provenance: dict) -> MetricReport:
    internal = [r for r in rows if not r.get("external")]
    average = {"row": "Average", "severity": None, "external": None}
    for sysname in systems:
        values = [r[sysname] for r in internal if r.get(sysname) is not None]
        average[sysname] = sum(values) / len(values) if values else None
    aggregates = [average]

    paired = [
        (r["severity"], r[GT_SYSTEM])
        for r in internal
        if r.get("severity") is not None and r.get(GT_SYSTEM) is not None
    ]
    if len(paired) >= 2:
        corr = pearson([p[0] for p in paired], [p[1] for p in paired])
        r_row = {"row": "r_severity_GT", "external": None, "severity": None}
        for sysname in systems:
            r_row[sysname] = corr.r if sysname == GT_SYSTEM else None
        aggregates.append(r_row)
    return MetricReport(
        experiment_id="ratings",
        columns=systems + ["severity", "external"],
        rows=rows,
        aggregates=aggregates,
        provenance=provenance,
    )


def cmd_ratings(cfg: ExperimentConfig):
    """Returns (mos_report, similarity_report_or_None)."""
    if cfg.fixtures:
        return _ratings_fixture_report(cfg), None

    if not cfg.ratings:
        raise MissingInputError("ratings needs --ratings LABEL=path or --fixtures")
    mos_means: dict[str, dict[str, float]] = {}
    severity: dict[str, float] = {}
    similarity_means: dict[str, dict[str, float]] = {}
    for entry in cfg.ratings:
        label, _, path = entry.partition("=")
        if not path:
            raise InputValidationError(f"--ratings entry {entry!r} is not LABEL=path")
        if label.startswith("mos:"):
            matrix = read_rating_matrix(path, MOS_SCALE)
            mos_means[label[4:]] = {
                item: float(matrix.values[:, k].mean())
                for k, item in enumerate(matrix.item_ids)
            }
        elif label == "severity":
            matrix = read_rating_matrix(path, SEVERITY_SCALE)
            severity.update(aggregate_severity(matrix))
        elif label.startswith("similarity:"):
            matrix = read_rating_matrix(path, SIMILARITY_SCALE)
            similarity_means[label[len("similarity:") :]] = {
                item: float(
                    sum(likert_to_percent(v) for v in matrix.values[:, k])
                    / matrix.raters
                )
                for k, item in enumerate(matrix.item_ids)
            }
        else:
            raise InputValidationError(
                f"--ratings label {label!r} must be mos:SYSTEM, similarity:NAME or severity"
            )

    systems = list(mos_means)
    speakers: list[str] = []
    for col in mos_means.values():
        for item in col:
            if item not in speakers:
                speakers.append(item)
    rows = []
    for spk in speakers:
        row = {"row": spk, "external": False, "severity": severity.get(spk)}
        for sysname in systems:
            row[sysname] = mos_means[sysname].get(spk)
        rows.append(row)
    mos_report = _finish_mos_report(rows, systems, _provenance(cfg)) if rows else None

    similarity_report = None
    if similarity_means:
        sim_names = list(similarity_means)
        items: list[str] = []
        for col in similarity_means.values():
            for item in col:
                if item not in items:
                    items.append(item)
        sim_rows = [
            {"row": item, **{name: similarity_means[name].get(item) for name in sim_names}}
            for item in items
        ]
        average = {"row": "Average"}
        for name in sim_names:
            values = [similarity_means[name][i] for i in items if i in similarity_means[name]]
            average[name] = sum(values) / len(values) if values else None
        similarity_report = MetricReport(
            experiment_id="ratings_similarity",
            columns=sim_names,
            rows=sim_rows,
            aggregates=[average],
            provenance=_provenance(cfg),
        )
    if mos_report is None and similarity_report is None:
        raise MissingInputError("no usable rating files given")
    return mos_report, similarity_report


# --- driver -------------------------------------------------------------------


def _write_report(report: MetricReport, cfg: ExperimentConfig, name: str) -> Path:
    out_dir = Path(cfg.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    if cfg.format == "structured":
        path = out_dir / f"{name}.json"
        path.write_text(render_json(report), encoding="utf-8")
    else:
        path = out_dir / f"{name}.csv"
        path.write_text(render_csv(report), encoding="utf-8")
    return path


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="pvceval",
        description="Pathological voice conversion evaluation toolkit",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name, desc in [
        ("pestoi", "P-ESTOI severity table"),
        ("per", "phoneme error rate table"),
        ("eer", "embedding similarity EER table and score distributions"),
        ("ratings", "MOS / similarity rating summaries"),
    ]:
        cmd = sub.add_parser(name, help=desc)
        cmd.add_argument("--manifest")
        cmd.add_argument("--corpus-root")
        cmd.add_argument("--embeddings")
        cmd.add_argument("--phonemes", action="append", default=[], metavar="SYSTEM=PATH")
        cmd.add_argument("--ratings", action="append", default=[], metavar="LABEL=PATH")
        cmd.add_argument("--fixtures")
        cmd.add_argument("--out", default=".")
        cmd.add_argument("--format", choices=["csv", "structured"], default="csv")
        cmd.add_argument("--seed", type=int, default=0)
        cmd.add_argument("--jobs", type=int, default=1)
        if name == "eer":
            cmd.add_argument("--include-all-speakers", action="store_true")
    return parser


def run(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    cfg = ExperimentConfig(
        command=args.command,
        manifest=args.manifest,
        corpus_root=args.corpus_root,
        embeddings=args.embeddings,
        phonemes=args.phonemes,
        ratings=args.ratings,
        fixtures=args.fixtures,
        out=args.out,
        format=args.format,
        seed=args.seed,
        jobs=args.jobs,
        include_all_speakers=getattr(args, "include_all_speakers", False),
    )
    if cfg.command == "pestoi":
        report = cmd_pestoi(cfg)
        path = _write_report(report, cfg, "pestoi")
        sys.stdout.write(render_table(report))
        sys.stdout.write(f"wrote {path}\n")
    elif cfg.command == "per":
        report = cmd_per(cfg)
        path = _write_report(report, cfg, "per")
        sys.stdout.write(render_table(report))
        sys.stdout.write(f"wrote {path}\n")
    elif cfg.command == "eer":
        report, distributions = cmd_eer(cfg)
        path = _write_report(report, cfg, "eer")
        scores_path = Path(cfg.out) / "eer_scores.csv"
        scores_path.write_text(render_distributions_csv(distributions), encoding="utf-8")
        sys.stdout.write(render_table(report))
        sys.stdout.write(f"wrote {path}\nwrote {scores_path}\n")
    else:
        mos_report, similarity_report = cmd_ratings(cfg)
        if mos_report is not None:
            path = _write_report(mos_report, cfg, "ratings_mos")
            sys.stdout.write(render_table(mos_report))
            sys.stdout.write(f"wrote {path}\n")
        if similarity_report is not None:
            path = _write_report(similarity_report, cfg, "ratings_similarity")
            sys.stdout.write(render_table(similarity_report))
            sys.stdout.write(f"wrote {path}\n")
    return 0


def main(argv=None) -> int:
    try:
        return run(argv)
    except MissingInputError as exc:
        sys.stderr.write(f"error: {exc}\n")
        return 3
    except FileNotFoundError as exc:
        sys.stderr.write(f"error: missing input: {exc}\n")
        return 3
    except InputValidationError as exc:
        sys.stderr.write(f"error: {exc}\n")
        return 2
    except MetricComputationError as exc:
        sys.stderr.write(f"error: numeric failure: {exc}\n")
        return 4


if __name__ == "__main__":
    sys.exit(main())
