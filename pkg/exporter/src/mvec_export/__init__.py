"""mvec-export: dump per-token contextual embeddings to MVEC files.

The tool reads the same JSONL dialogue datasets the ranking pipeline
consumes, runs each utterance through a pretrained bidirectional encoder,
aligns subword pieces back to whitespace-level tokens, and writes one
vector per token in the MVEC binary format under the pipeline's key
scheme (``dialogue_id:utt_index:position``).
"""

from mvec_export.align import span_tokenize, align_pieces
from mvec_export.export import ExportJob, ExportSummary, export_embeddings, verify_mvec
from mvec_export.mvecio import MvecFormatError, read_mvec, write_mvec

__all__ = [
    "ExportJob",
    "ExportSummary",
    "MvecFormatError",
    "align_pieces",
    "export_embeddings",
    "read_mvec",
    "span_tokenize",
    "verify_mvec",
    "write_mvec",
]
