//! SVG export and a small importer for the same dialect.
//!
//! Each glyph becomes one `<path>` whose subpaths are its contours, written
//! with cubic `C` commands and `fill-rule="evenodd"`, so holes survive in
//! ordinary viewers. Coordinates use the shortest decimal form that
//! round-trips through `f64`, which makes export then import lossless.

use std::fmt::Write as _;
use std::path::Path;

use crate::geometry::{BezierSegment, Contour, GeometryError, GlyphPath, Point, Script, WordLayout, CANVAS_SIZE};

#[derive(Debug, thiserror::Error)]
pub enum SvgError {
    #[error("cannot export an empty word")]
    EmptyWord,
    #[error("SVG contains no glyph paths")]
    NoPaths,
    #[error("path data: {0}")]
    PathData(String),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

fn unescape(s: &str) -> String {
    s.replace("&quot;", "\"")
        .replace("&lt;", "<")
        .replace("&gt;", ">")
        .replace("&amp;", "&")
}

pub fn to_svg(word: &WordLayout) -> Result<String, SvgError> {
    if word.is_empty() {
        return Err(SvgError::EmptyWord);
    }
    let size = CANVAS_SIZE;
    let script = match word.script {
        Script::LeftToRight => "ltr",
        Script::RightToLeft => "rtl",
    };
    let mut out = String::new();
    writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{size}" height="{size}" viewBox="0 0 {size} {size}" data-script="{script}">"#
    )
    .unwrap();
    writeln!(out, r#"<rect x="0" y="0" width="{size}" height="{size}" fill="white"/>"#).unwrap();
    for g in &word.glyphs {
        let mut d = String::new();
        for c in &g.contours {
            let pts = c.points();
            if pts.is_empty() {
                continue;
            }
            if !d.is_empty() {
                d.push(' ');
            }
            write!(d, "M {} {}", pts[0].x, pts[0].y).unwrap();
            for s in c.segments() {
                write!(d, " C {} {} {} {} {} {}", s.p1.x, s.p1.y, s.p2.x, s.p2.y, s.p3.x, s.p3.y).unwrap();
            }
            d.push_str(" Z");
        }
        let ch = g
            .character
            .map(|c| format!(r#" data-char="{}""#, escape(&c.to_string())))
            .unwrap_or_default();
        writeln!(
            out,
            r#"<path data-letter="{}"{ch} fill="black" fill-rule="evenodd" d="{d}"/>"#,
            g.letter_index
        )
        .unwrap();
    }
    out.push_str("</svg>\n");
    Ok(out)
}

pub fn export_svg(word: &WordLayout, path: impl AsRef<Path>) -> Result<(), SvgError> {
    std::fs::write(path, to_svg(word)?)?;
    Ok(())
}

pub fn import_svg(path: impl AsRef<Path>) -> Result<WordLayout, SvgError> {
    parse_svg(&std::fs::read_to_string(path)?)
}

/// Value of `name="…"` inside one element's attribute text.
fn attribute<'a>(element: &'a str, name: &str) -> Option<&'a str> {
    let mut rest = element;
    loop {
        let i = rest.find(name)?;
        let before = rest[..i].chars().last();
        let after = &rest[i + name.len()..];
        let after_trim = after.trim_start();
        if before.is_none_or(char::is_whitespace) && after_trim.starts_with('=') {
            let value = after_trim[1..].trim_start();
            let quote = value.chars().next()?;
            if quote == '"' || quote == '\'' {
                let end = value[1..].find(quote)?;
                return Some(&value[1..1 + end]);
            }
            return None;
        }
        rest = after;
    }
}

/// Read the `<path>` elements of an SVG document back into a word.
///
/// Supports `M L H V C Q Z` and their relative forms. Paths with a
/// `data-letter` attribute keep that index; others are numbered in order.
pub fn parse_svg(text: &str) -> Result<WordLayout, SvgError> {
    let mut glyphs = Vec::new();
    let mut rest = text;
    while let Some(i) = rest.find("<path") {
        let tail = &rest[i + 5..];
        let end = tail.find('>').ok_or_else(|| SvgError::PathData("unterminated <path> element".into()))?;
        let element = &tail[..end];
        rest = &tail[end..];
        let d = unescape(attribute(element, "d").unwrap_or(""));
        let letter = match attribute(element, "data-letter") {
            Some(v) => v
                .trim()
                .parse()
                .map_err(|_| SvgError::PathData(format!("bad data-letter {v:?}")))?,
            None => glyphs.len(),
        };
        let mut glyph = GlyphPath::new(parse_path_data(&d)?, letter);
        glyph.character = attribute(element, "data-char").and_then(|c| unescape(c).chars().next());
        glyphs.push(glyph);
    }
    if glyphs.is_empty() {
        return Err(SvgError::NoPaths);
    }
    glyphs.sort_by_key(|g| g.letter_index);
    let mut word = WordLayout::new(glyphs);
    if attribute(text, "data-script") == Some("rtl") {
        word.script = Script::RightToLeft;
    }
    Ok(word)
}

enum Token {
    Command(char),
    Number(f64),
}

fn tokenize(d: &str) -> Result<Vec<Token>, SvgError> {
    let mut tokens = Vec::new();
    let bytes = d.as_bytes();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i] as char;
        if c.is_ascii_whitespace() || c == ',' {
            i += 1;
        } else if c.is_ascii_alphabetic() && c != 'e' && c != 'E' {
            tokens.push(Token::Command(c));
            i += 1;
        } else {
            let start = i;
            let mut seen_dot = false;
            let mut seen_exp = false;
            if bytes[i] == b'+' || bytes[i] == b'-' {
                i += 1;
            }
            while i < bytes.len() {
                let b = bytes[i];
                if b.is_ascii_digit() {
                    i += 1;
                } else if b == b'.' && !seen_dot && !seen_exp {
                    seen_dot = true;
                    i += 1;
                } else if (b == b'e' || b == b'E') && !seen_exp {
                    seen_exp = true;
                    i += 1;
                    if i < bytes.len() && (bytes[i] == b'+' || bytes[i] == b'-') {
                        i += 1;
                    }
                } else {
                    break;
                }
            }
            let s = &d[start..i];
            let v: f64 = s.parse().map_err(|_| SvgError::PathData(format!("bad number {s:?} at {start}")))?;
            tokens.push(Token::Number(v));
        }
    }
    Ok(tokens)
}

fn parse_path_data(d: &str) -> Result<Vec<Contour>, SvgError> {
    let tokens = tokenize(d)?;
    let mut contours = Vec::new();
    let mut segments: Vec<BezierSegment> = Vec::new();
    let mut start = Point::ZERO;
    let mut cur = Point::ZERO;
    let mut cmd = None;
    let mut k = 0;

    fn close(segments: &mut Vec<BezierSegment>, contours: &mut Vec<Contour>, cur: Point, start: Point) -> Result<(), SvgError> {
        if segments.is_empty() {
            return Ok(());
        }
        if cur != start {
            segments.push(BezierSegment::line(cur, start));
        }
        contours.push(Contour::from_segments(segments)?);
        segments.clear();
        Ok(())
    }

    let number = |k: &mut usize| -> Result<f64, SvgError> {
        match tokens.get(*k) {
            Some(Token::Number(v)) => {
                *k += 1;
                Ok(*v)
            }
            _ => Err(SvgError::PathData(format!("expected a number at token {k}"))),
        }
    };

    while k < tokens.len() {
        let c = match tokens[k] {
            Token::Command(c) => {
                k += 1;
                c
            }
            Token::Number(_) => match cmd {
                // repeated coordinates after a moveto are linetos
                Some('M') => 'L',
                Some('m') => 'l',
                Some(c) => c,
                None => return Err(SvgError::PathData("path data must start with a command".into())),
            },
        };
        cmd = Some(c);
        let rel = c.is_ascii_lowercase();
        let base = if rel { cur } else { Point::ZERO };
        let pt = |k: &mut usize| -> Result<Point, SvgError> {
            let x = number(k)?;
            let y = number(k)?;
            Ok(Point::new(base.x + x, base.y + y))
        };
        match c.to_ascii_uppercase() {
            'M' => {
                close(&mut segments, &mut contours, cur, start)?;
                cur = pt(&mut k)?;
                start = cur;
            }
            'L' => {
                let p = pt(&mut k)?;
                segments.push(BezierSegment::line(cur, p));
                cur = p;
            }
            'H' => {
                let x = number(&mut k)? + if rel { cur.x } else { 0.0 };
                let p = Point::new(x, cur.y);
                segments.push(BezierSegment::line(cur, p));
                cur = p;
            }
            'V' => {
                let y = number(&mut k)? + if rel { cur.y } else { 0.0 };
                let p = Point::new(cur.x, y);
                segments.push(BezierSegment::line(cur, p));
                cur = p;
            }
            'C' => {
                let (p1, p2, p3) = (pt(&mut k)?, pt(&mut k)?, pt(&mut k)?);
                segments.push(BezierSegment::new(cur, p1, p2, p3));
                cur = p3;
            }
            'Q' => {
                let (q, p) = (pt(&mut k)?, pt(&mut k)?);
                segments.push(BezierSegment::from_quadratic(cur, q, p));
                cur = p;
            }
            'Z' => {
                close(&mut segments, &mut contours, cur, start)?;
                cur = start;
            }
            other => return Err(SvgError::PathData(format!("unsupported command {other:?}"))),
        }
    }
    close(&mut segments, &mut contours, cur, start)?;
    Ok(contours)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polygon_commands_are_closed() {
        let contours = parse_path_data("M 0 0 h 10 v 10 L 0 10 z").unwrap();
        assert_eq!(contours.len(), 1);
        assert_eq!(contours[0].segment_count(), 4);
    }

    #[test]
    fn exponent_numbers_parse() {
        let contours = parse_path_data("M1e2,0L-5.5e-1 3.0 0 1Z").unwrap();
        assert_eq!(contours[0].points()[0], Point::new(100.0, 0.0));
    }

    #[test]
    fn empty_word_is_rejected() {
        assert!(matches!(to_svg(&WordLayout::new(vec![])), Err(SvgError::EmptyWord)));
    }

    #[test]
    fn attribute_lookup_ignores_prefix_matches() {
        let el = r#" data-d="x" d="M 0 0""#;
        assert_eq!(attribute(el, "d"), Some("M 0 0"));
    }
}
