"""Smoke test for the compiled extension.

Build it first with `cargo build -p glyphmorph-py`, then run
`python3 python/smoke_test.py [path/to/libglyphmorph.so]`.
"""

import importlib.machinery
import importlib.util
import os
import sys
import tempfile

ROOT = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))
FONT = os.path.join(ROOT, "crates", "core", "tests", "data", "fonts", "DejaVuSans.ttf")


def load_extension(path):
    loader = importlib.machinery.ExtensionFileLoader("glyphmorph", path)
    spec = importlib.util.spec_from_file_location("glyphmorph", path, loader=loader)
    module = importlib.util.module_from_spec(spec)
    loader.exec_module(module)
    return module


def main():
    default = os.path.join(ROOT, "target", "debug", "libglyphmorph.so")
    path = sys.argv[1] if len(sys.argv) > 1 else default
    if not os.path.exists(path):
        sys.exit(f"extension not found at {path}; run `cargo build -p glyphmorph-py`")
    g = load_extension(path)

    prompts = g.expand_concept("freedom")
    print("objects:", ", ".join(prompts["objects"]))
    print("font prompt:", prompts["font_prompt"])

    word = g.Word.load(FONT, "BIRD")
    print(word, "regions:", len(g.enumerate_regions(len(word))))

    with tempfile.TemporaryDirectory() as tmp:
        target = os.path.join(tmp, "target.png")
        g.Word.load(FONT, "BOOD").write_png(target, 64)
        scorer = g.Scorer.mock(target, size=64)
        prompt = prompts["morph_prompts"][0]
        before = scorer.clip_score(word, prompt, 64)
        morphed, trace = g.morph(word, "2..2", prompt, scorer, iterations=40, size=64, augmentation=False)
        after = scorer.clip_score(morphed, prompt, 64)
        assert len(trace) == 40
        assert morphed.points() != word.points()
        assert trace[-1]["total"] < trace[0]["total"]
        print(f"loss {trace[0]['total']:.5f} -> {trace[-1]['total']:.5f}, clip {before:.4f} -> {after:.4f}")

        svg = morphed.to_svg()
        assert g.Word.from_svg(svg).point_count == morphed.point_count
        png = os.path.join(tmp, "BIRD.png")
        morphed.write_png(png, 128)
        assert os.path.getsize(png) > 0

    try:
        g.morph(word, "4..9", "a bird", scorer, iterations=1, size=32)
    except g.GlyphMorphError as e:
        print("rejected bad region:", e)
    else:
        raise AssertionError("bad region accepted")

    print("smoke test passed")


if __name__ == "__main__":
    main()
