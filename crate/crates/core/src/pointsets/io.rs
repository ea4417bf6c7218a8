//! Plain-text point-set format.
//!
//! ```text
//! dim r R
//! window lo_1 hi_1 ... lo_d hi_d
//! x_1 ... x_d
//! ...
//! ```
//! Blank lines and `#` comments are ignored. The directive comment
//! `# periodic` marks the window as a torus fundamental domain; readers that
//! do not know it simply skip it.

use std::fmt::Write as _;
use std::path::Path;

use super::{DeloneSet, Window};
use crate::error::{Error, Result};

pub fn to_text(set: &DeloneSet) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "{} {} {}", set.dim, set.r, set.big_r);
    out.push_str("window");
    for (l, h) in set.window.lo.iter().zip(&set.window.hi) {
        let _ = write!(out, " {l} {h}");
    }
    out.push('\n');
    if set.periodic {
        out.push_str("# periodic\n");
    }
    for p in &set.points {
        let line: Vec<String> = p.iter().map(|x| x.to_string()).collect();
        out.push_str(&line.join(" "));
        out.push('\n');
    }
    out
}

fn parse_f64(tok: &str, line: usize) -> Result<f64> {
    tok.parse::<f64>()
        .map_err(|e| Error::Parse { line, message: format!("`{tok}`: {e}") })
}

pub fn from_text(text: &str) -> Result<DeloneSet> {
    let mut header: Option<(usize, f64, f64)> = None;
    let mut window: Option<Window> = None;
    let mut periodic = false;
    let mut points = Vec::new();
    for (n, raw) in text.lines().enumerate() {
        let line_no = n + 1;
        let trimmed = raw.trim();
        if let Some(comment) = trimmed.strip_prefix('#') {
            if comment.trim() == "periodic" {
                periodic = true;
            }
            continue;
        }
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let toks: Vec<&str> = content.split_whitespace().collect();
        if header.is_none() {
            if toks.len() != 3 {
                return Err(Error::Parse { line: line_no, message: "expected `dim r R`".into() });
            }
            let dim = toks[0]
                .parse::<usize>()
                .map_err(|e| Error::Parse { line: line_no, message: format!("dim: {e}") })?;
            if dim == 0 {
                return Err(Error::Parse { line: line_no, message: "dim must be at least 1".into() });
            }
            header = Some((dim, parse_f64(toks[1], line_no)?, parse_f64(toks[2], line_no)?));
            continue;
        }
        let (dim, _, _) = header.unwrap();
        if window.is_none() {
            if toks.first() != Some(&"window") || toks.len() != 1 + 2 * dim {
                return Err(Error::Parse { line: line_no, message: format!("expected `window` and {} bounds", 2 * dim) });
            }
            let vals = toks[1..].iter().map(|t| parse_f64(t, line_no)).collect::<Result<Vec<_>>>()?;
            let lo = vals.iter().step_by(2).copied().collect();
            let hi = vals.iter().skip(1).step_by(2).copied().collect();
            window = Some(Window::new(lo, hi).map_err(|e| Error::Parse { line: line_no, message: e.to_string() })?);
            continue;
        }
        if toks.len() != dim {
            return Err(Error::Parse { line: line_no, message: format!("expected {dim} coordinates") });
        }
        points.push(toks.iter().map(|t| parse_f64(t, line_no)).collect::<Result<Vec<_>>>()?);
    }
    let (_, r, big_r) = header.ok_or(Error::Parse { line: 0, message: "missing header".into() })?;
    let window = window.ok_or(Error::Parse { line: 0, message: "missing window line".into() })?;
    let set = DeloneSet::new(points, r, big_r, window).map_err(|e| Error::Parse { line: 1, message: e.to_string() })?;
    Ok(set.with_periodic(periodic))
}

pub fn read(path: &Path) -> Result<DeloneSet> {
    from_text(&std::fs::read_to_string(path)?)
}

pub fn write(path: &Path, set: &DeloneSet) -> Result<()> {
    std::fs::write(path, to_text(set))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_comments_and_blank_lines() {
        let text = "# a square\n2 0.5 0.75\nwindow 0 1 0 1\n\n0 0 # origin\n1 0\n0 1\n1 1\n";
        let set = from_text(text).unwrap();
        assert_eq!(set.len(), 4);
        assert_eq!(set.window.hi, vec![1.0, 1.0]);
        assert!(!set.periodic);
    }

    #[test]
    fn rejects_wrong_arity() {
        let text = "2 0.5 0.75\nwindow 0 1 0 1\n0 0 0\n";
        assert!(matches!(from_text(text), Err(Error::Parse { line: 3, .. })));
    }

    #[test]
    fn exact_round_trip() {
        let set = DeloneSet::new(
            vec![vec![0.1, 1.0 / 3.0], vec![2.5e-7, 9.75]],
            0.05,
            7.0,
            Window::new(vec![0.0, 0.0], vec![10.0, 10.0]).unwrap(),
        )
        .unwrap()
        .with_periodic(true);
        assert_eq!(from_text(&to_text(&set)).unwrap(), set);
    }
}
