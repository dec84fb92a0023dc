//! Line-oriented text format for spaces and classes.
//!
//! ```text
//! space 3
//! 1/2
//! 1/4
//! 1/4
//! class 2 3
//! 1/1 0/1 0/1
//! 1/2 1/2 0/1
//! ```
//!
//! Blank lines and lines starting with `#` are ignored. Values are written
//! as `p/q`; the reader also accepts integers and decimals.

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::exact::{format_rational, parse_rational, Rational};
use crate::space::{FiniteSpace, FunctionTable};

pub fn write_space(space: &FiniteSpace) -> String {
    let mut out = format!("space {}\n", space.point_count());
    for w in space.weights() {
        out.push_str(&format_rational(w));
        out.push('\n');
    }
    out
}

pub fn write_class(class: &FunctionTable) -> String {
    let mut out = format!("class {} {}\n", class.class_size(), class.point_count());
    for row in class.rows() {
        let line: Vec<String> = row.iter().map(format_rational).collect();
        let _ = writeln!(out, "{}", line.join(" "));
    }
    out
}

#[derive(Debug, Default, Clone)]
pub struct Document {
    pub space: Option<FiniteSpace>,
    pub class: Option<FunctionTable>,
}

pub fn parse_document(text: &str) -> Result<Document> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'))
        .peekable();
    let mut doc = Document::default();
    let fail = |line: usize, msg: String| Error::Format { line, msg };
    while let Some((line, header)) = lines.next() {
        let words: Vec<&str> = header.split_whitespace().collect();
        let count = |i: usize| -> Result<usize> {
            words
                .get(i)
                .and_then(|w| w.parse().ok())
                .ok_or_else(|| fail(line, format!("bad header {header:?}")))
        };
        let values = |text: &str, at: usize| -> Result<Vec<Rational>> {
            text.split_whitespace()
                .map(|t| parse_rational(t).map_err(|e| fail(at, e.to_string())))
                .collect()
        };
        match words.first().copied() {
            Some("space") if words.len() == 2 && doc.space.is_none() => {
                let n = count(1)?;
                let mut weights = Vec::with_capacity(n);
                while weights.len() < n {
                    let (at, text) = lines
                        .next()
                        .ok_or_else(|| fail(line, format!("expected {n} weights")))?;
                    weights.extend(values(text, at)?);
                }
                if weights.len() != n {
                    return Err(fail(line, format!("expected {n} weights, got {}", weights.len())));
                }
                doc.space = Some(FiniteSpace::new(weights).map_err(|e| fail(line, e.to_string()))?);
            }
            Some("class") if words.len() == 3 && doc.class.is_none() => {
                let (r, n) = (count(1)?, count(2)?);
                let mut rows = Vec::with_capacity(r);
                for _ in 0..r {
                    let (at, text) = lines
                        .next()
                        .ok_or_else(|| fail(line, format!("expected {r} rows")))?;
                    let row = values(text, at)?;
                    if row.len() != n {
                        return Err(fail(at, format!("expected {n} values, got {}", row.len())));
                    }
                    rows.push(row);
                }
                doc.class = Some(FunctionTable::new(rows).map_err(|e| fail(line, e.to_string()))?);
            }
            _ => return Err(fail(line, format!("unexpected line {header:?}"))),
        }
    }
    if let (Some(s), Some(c)) = (&doc.space, &doc.class) {
        c.check_space(s).map_err(|e| fail(0, e.to_string()))?;
    }
    Ok(doc)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::rat;
    use proptest::prelude::*;

    #[test]
    fn reads_mixed_notation() {
        let doc = parse_document("# demo\nspace 2\n0.25 3/4\n\nclass 1 2\n1 0.5\n").unwrap();
        assert_eq!(doc.space.unwrap().weights(), &[rat(1, 4), rat(3, 4)]);
        assert_eq!(doc.class.unwrap().row(0), &[rat(1, 1), rat(1, 2)]);
    }

    #[test]
    fn reports_line_numbers() {
        let err = parse_document("space 2\n1/2\nclass 1 2\n").unwrap_err();
        assert!(matches!(err, Error::Format { .. }), "{err}");
        let err = parse_document("space 1\n1\nclass 1 1\n2\n").unwrap_err();
        assert!(err.to_string().contains("line 3"), "{err}");
        assert!(parse_document("spaces 1\n").is_err());
    }

    proptest! {
        #[test]
        fn round_trip(rows in prop::collection::vec(prop::collection::vec((0i64..=7, 1i64..=7), 3), 1..4),
                      w in prop::collection::vec(1i64..9, 3)) {
            let table = FunctionTable::new(rows.into_iter().map(|r| r.into_iter().map(|(a, b)| rat(a.min(b), b)).collect()).collect()).unwrap();
            let total: i64 = w.iter().sum();
            let space = FiniteSpace::new(w.into_iter().map(|x| rat(x, total)).collect()).unwrap();
            let text = format!("{}{}", write_space(&space), write_class(&table));
            let doc = parse_document(&text).unwrap();
            prop_assert_eq!(doc.space.unwrap(), space);
            prop_assert_eq!(doc.class.unwrap(), table);
        }
    }
}
