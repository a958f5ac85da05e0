"""Python surface of the reaction diagram parsing toolkit."""

from _rxndp import (
    BackendError,
    ConfigError,
    CorpusError,
    ParseError,
    RenderError,
    build_prompt,
    classify_layouts,
    content_hash,
    detect_blobs,
    edit_ratio,
    evaluate,
    generate_corpus,
    iou,
    levenshtein,
    normalize_text,
    oracle_reply,
    parse_model_output,
    prompt_hash,
    render_visual_prompt,
    resolve_bivp,
    text_match,
)

__all__ = [
    "BackendError",
    "ConfigError",
    "CorpusError",
    "ParseError",
    "RenderError",
    "build_prompt",
    "classify_layouts",
    "content_hash",
    "detect_blobs",
    "edit_ratio",
    "evaluate",
    "generate_corpus",
    "iou",
    "levenshtein",
    "normalize_text",
    "oracle_reply",
    "parse_model_output",
    "prompt_hash",
    "render_visual_prompt",
    "resolve_bivp",
    "text_match",
]
