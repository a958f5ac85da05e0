#!/usr/bin/env python3
"""Generate a C++ source embedding every prompt template under assets/prompts."""
import sys
from pathlib import Path

DELIM = "RXNDP_ASSET"


def main() -> int:
    if len(sys.argv) != 3:
        print("usage: gen_prompt_assets.py ASSET_DIR OUT_CPP", file=sys.stderr)
        return 1
    asset_dir = Path(sys.argv[1])
    out_path = Path(sys.argv[2])

    files = sorted(asset_dir.glob("*.txt"))
    if not files:
        print(f"no prompt templates found in {asset_dir}", file=sys.stderr)
        return 1

    chunks = [
        "// Generated from assets/prompts; do not edit by hand.",
        '#include "rxndp/prompts.hpp"',
        "",
        "namespace rxndp::detail {",
        "",
    ]
    table = []
    for i, path in enumerate(files):
        text = path.read_text(encoding="utf-8")
        if f"){DELIM}\"" in text:
            print(f"{path}: raw string delimiter collision", file=sys.stderr)
            return 1
        chunks.append(
            f'static const char* const kAsset{i} = R"{DELIM}({text}){DELIM}";'
        )
        table.append(f'    {{"{path.stem}", kAsset{i}}},')
    chunks += [
        "",
        "const EmbeddedPrompt kEmbeddedPrompts[] = {",
        *table,
        "};",
        "const std::size_t kEmbeddedPromptCount = "
        "sizeof(kEmbeddedPrompts) / sizeof(kEmbeddedPrompts[0]);",
        "",
        "}  // namespace rxndp::detail",
        "",
    ]
    out_path.parent.mkdir(parents=True, exist_ok=True)
    out_path.write_text("\n".join(chunks), encoding="utf-8")
    return 0


if __name__ == "__main__":
    sys.exit(main())
