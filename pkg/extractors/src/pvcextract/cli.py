"""Extractor command line, flag names mirroring the evaluation CLI.

    pvcextract embeddings --manifest m.json --corpus-root DIR --out emb.jsonl
    pvcextract phonemes   --manifest m.json --corpus-root DIR --out tr.jsonl
"""

from __future__ import annotations

import argparse
import sys

from .backends import DEFAULT_EMBEDDING_MODEL, DEFAULT_G2P, DEFAULT_RECOGNIZER
from .errors import ExtractError, ManifestError, MissingText, ModelLoadError
from .extract import ExtractionJob, extract_embeddings, extract_phonemes


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="pvcextract", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    emb = sub.add_parser("embeddings", help="extract speaker embeddings to a JSONL file")
    emb.add_argument("--manifest", required=True)
    emb.add_argument("--corpus-root")
    emb.add_argument("--out", required=True)
    emb.add_argument("--model", default=DEFAULT_EMBEDDING_MODEL)

    pho = sub.add_parser("phonemes", help="extract ref/hyp phoneme transcripts to a JSONL file")
    pho.add_argument("--manifest", required=True)
    pho.add_argument("--corpus-root")
    pho.add_argument("--out", required=True)
    pho.add_argument("--recognizer", default=DEFAULT_RECOGNIZER)
    pho.add_argument("--g2p", default=DEFAULT_G2P)
    return parser


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        if args.command == "embeddings":
            job = ExtractionJob(
                manifest=args.manifest,
                corpus_root=args.corpus_root,
                embedding_model=args.model,
                embeddings_out=args.out,
            )
            path = extract_embeddings(job)
        else:
            job = ExtractionJob(
                manifest=args.manifest,
                corpus_root=args.corpus_root,
                recognizer=args.recognizer,
                g2p=args.g2p,
                phonemes_out=args.out,
            )
            path = extract_phonemes(job)
    except (ModelLoadError, MissingText, ManifestError) as exc:
        sys.stderr.write(f"error: {exc}\n")
        return 2
    except FileNotFoundError as exc:
        sys.stderr.write(f"error: missing input: {exc}\n")
        return 3
    except ExtractError as exc:
        sys.stderr.write(f"error: {exc}\n")
        return 4
    sys.stdout.write(f"wrote {path}\n")
    return 0


if __name__ == "__main__":
    sys.exit(main())
