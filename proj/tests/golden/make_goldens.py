#!/usr/bin/env python3
"""Regenerates the rendered-prompt golden files from the template assets.

Substitutes the fixed test bindings into each template exactly the way the
library's renderer does: single-brace {identifier} tokens only, everything
else byte-for-byte untouched.
"""
import pathlib
import re

HERE = pathlib.Path(__file__).resolve().parent
ASSETS = HERE.parent.parent / "assets" / "prompts"

BINDINGS = {
    "reasoning": {
        "language": "Italian",
        "question": "Q",
        "options": "A: x\nB: y",
    },
    "concept_extraction": {
        "language": "Italian",
        "reasoning_trace": "The trace.",
    },
    "answer_generation": {
        "question": "Q",
        "options": "A: x\nB: y",
        "concept_chain": "Severe frostbite → [local] Congelamento grave → Dry gangrene",
        "context": "No reference context provided.",
        "language": "Italian",
    },
    "judge_system": {},
    "judge_eval": {
        "question": "Q",
        "gold": "G",
        "pred": "P",
    },
    "translation": {
        "source": "Italian",
        "target": "English",
        "text": "Ciao",
    },
}

TOKEN = re.compile(r"\{([A-Za-z_][A-Za-z0-9_]*)\}")


def render(body: str, bindings: dict) -> str:
    out = []
    pos = 0
    for match in TOKEN.finditer(body):
        # Skip tokens whose opening brace is the second of a doubled pair.
        if match.start() > 0 and body[match.start() - 1] == "{":
            continue
        name = match.group(1)
        if name not in bindings:
            raise SystemExit(f"unbound placeholder {{{name}}}")
        out.append(body[pos:match.start()])
        out.append(bindings[name])
        pos = match.end()
    out.append(body[pos:])
    return "".join(out)


def main() -> None:
    for name, bindings in BINDINGS.items():
        body = (ASSETS / f"{name}.txt").read_text(encoding="utf-8")
        rendered = render(body, bindings)
        (HERE / f"rendered_{name}.txt").write_text(rendered, encoding="utf-8")
        print(f"wrote rendered_{name}.txt ({len(rendered)} bytes)")


if __name__ == "__main__":
    main()
