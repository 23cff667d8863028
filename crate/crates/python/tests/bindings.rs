use std::ffi::CStr;
use std::path::PathBuf;

use pyo3::prelude::*;
use pyo3::types::PyDict;

fn font() -> String {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../core/tests/data/fonts/DejaVuSans.ttf")
        .display()
        .to_string()
}

/// Run `code` with the extension importable as `glyphmorph` and `FONT` bound.
fn run_python(code: &CStr) {
    Python::attach(|py| {
        let modules = py.import("sys").unwrap().getattr("modules").unwrap();
        if !modules.contains("glyphmorph").unwrap() {
            let module = pyo3::wrap_pymodule!(glyphmorph::glyphmorph)(py);
            modules.set_item("glyphmorph", module).unwrap();
        }
        let globals = PyDict::new(py);
        globals.set_item("FONT", font()).unwrap();
        if let Err(e) = py.run(code, Some(&globals), None) {
            e.print(py);
            panic!("python code failed: {e}");
        }
    });
}

#[test]
fn module_exports() {
    run_python(
        c"
import glyphmorph as g
for name in ['Word', 'Scorer', 'GlyphMorphError', 'morph', 'enumerate_regions', 'score_regions', 'expand_concept']:
    assert hasattr(g, name), name
assert issubclass(g.GlyphMorphError, Exception)
",
    );
}

#[test]
fn words_load_render_and_round_trip() {
    run_python(
        c"
import glyphmorph as g
w = g.Word.load(FONT, 'BIRD')
assert len(w) == 4
pts = w.points()
assert len(pts) == w.point_count > 0
rows = w.render(32)
assert len(rows) == 32 and all(len(r) == 32 for r in rows)
ink = sum(map(sum, rows))
assert ink > 0
assert all(0.0 <= v <= 1.0 for r in rows for v in r)

back = g.Word.from_svg(w.to_svg())
assert len(back) == 4
assert max(abs(a[0] - b[0]) + abs(a[1] - b[1]) for a, b in zip(pts, back.points())) < 1e-6

shifted = [(x + 1.0, y) for x, y in pts]
w.set_points(shifted)
assert w.points() == shifted
assert 'Word(letters=4' in repr(w)
",
    );
}

#[test]
fn bad_inputs_raise() {
    run_python(
        c"
import glyphmorph as g
def raises(exc, f, *a):
    try:
        f(*a)
    except exc:
        return
    raise AssertionError(f'{f} did not raise {exc}')

raises(ValueError, g.Word.load, FONT, 'AB', 'vertical')
raises(g.GlyphMorphError, g.Word.load, '/nonexistent/font.ttf', 'AB')
raises(g.GlyphMorphError, g.Word.load, FONT, '')
raises(g.GlyphMorphError, g.Word.from_svg, '<svg')
w = g.Word.load(FONT, 'AB')
raises(ValueError, w.set_points, [(0.0, 0.0)])
raises(ValueError, w.set_points, [(float('nan'), 0.0)] * w.point_count)
raises(ValueError, w.render, 0)
raises(ValueError, g.Scorer.http, 'http://127.0.0.1:1', -1.0)
",
    );
}

#[test]
fn regions_enumerate_triangularly() {
    run_python(
        c"
import glyphmorph as g
r = g.enumerate_regions(4)
assert len(r) == 10
assert r[0] == '1..1' and r[-1] == '4..4'
assert len(g.enumerate_regions(4, max_len=2)) == 7
try:
    g.enumerate_regions(0)
except g.GlyphMorphError:
    pass
else:
    raise AssertionError('empty word accepted')
",
    );
}

#[test]
fn concept_expansion_is_offline() {
    run_python(
        c"
import glyphmorph as g
e = g.expand_concept('bird')
assert e['concept'] == 'bird'
assert len(e['objects']) == 3 and len(e['font_attributes']) == 3
assert len(e['morph_prompts']) == 3
for obj, prompt in zip(e['objects'], e['morph_prompts']):
    assert prompt.startswith(f'a {obj}. ')
attrs = e['font_attributes']
assert e['font_prompt'] == f'This is a {attrs[0]}, {attrs[1]}, {attrs[2]} font'
try:
    g.expand_concept('  ')
except g.GlyphMorphError:
    pass
else:
    raise AssertionError('blank concept accepted')
",
    );
}

#[test]
fn morph_is_seeded_and_traced() {
    run_python(
        c"
import glyphmorph as g
w = g.Word.load(FONT, 'BIRD')
s = g.Scorer.mock()
a, trace = g.morph(w, '2..2', 'a bird', s, iterations=6, seed=3, size=48)
b, _ = g.morph(w, '2..2', 'a bird', s, iterations=6, seed=3, size=48)
assert a.points() == b.points()
assert len(trace) == 6
assert [t['iteration'] for t in trace] == list(range(6))
assert set(trace[0]) == {'iteration', 'sds', 'ocr', 'acap', 'total', 'grad_norm', 'lr'}
assert a.points() != w.points()
assert w.points() == g.Word.load(FONT, 'BIRD').points()

try:
    g.morph(w, '3..7', 'a bird', s, iterations=2, size=32)
except g.GlyphMorphError:
    pass
else:
    raise AssertionError('out-of-range region accepted')
try:
    g.morph(w, 'first', 'a bird', s, iterations=2, size=32)
except ValueError:
    pass
else:
    raise AssertionError('bad label accepted')
",
    );
}

#[test]
fn region_scores_come_back_sorted() {
    run_python(
        c"
import glyphmorph as g
w = g.Word.load(FONT, 'BI')
rows = g.score_regions(w, 'a bird', g.Scorer.mock(), iterations=3, size=48)
assert sorted(r['region'] for r in rows) == ['1..1', '1..2', '2..2']
comps = [r['composite'] for r in rows]
assert comps == sorted(comps, reverse=True)
assert g.Scorer.mock().clip_score(w, 'a bird', 48) == g.Scorer.mock().clip_score(w, 'a bird', 48)
",
    );
}
