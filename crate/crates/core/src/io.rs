//! Plain-text formats.
//!
//! Operators:
//!
//! ```text
//! # comment
//! d 3
//! 1 1 1 1 1.00000000000000000e0 0.00000000000000000e0
//! ```
//!
//! one line `i j k l re im` per stored entry (1-based). Dense files simply
//! list all `d⁴` entries. Latin squares are a `d <int>` header followed by `d`
//! rows; a pair file holds two squares separated by a blank line. Permutation
//! tuples are four lines of space-separated images.

use std::fmt::Write as _;

use num_traits::Zero;

use crate::error::ParseError;
use crate::invariants::PermTuple;
use crate::latin::{LatinSquare, OlsPair};
use crate::operator::{BipartiteOperator, SparseEntry, SparseOperator, C64};

struct Token<'a> {
    text: &'a str,
    column: usize,
}

fn tokens(line: &str) -> Vec<Token<'_>> {
    let content = match line.find('#') {
        Some(pos) => &line[..pos],
        None => line,
    };
    let mut out = Vec::new();
    let mut start = None;
    for (pos, ch) in content.char_indices() {
        if ch.is_whitespace() {
            if let Some(s) = start.take() {
                out.push(Token { text: &content[s..pos], column: s + 1 });
            }
        } else if start.is_none() {
            start = Some(pos);
        }
    }
    if let Some(s) = start {
        out.push(Token { text: &content[s..], column: s + 1 });
    }
    out
}

fn parse_header(line_no: usize, toks: &[Token<'_>]) -> Result<usize, ParseError> {
    match toks {
        [key, value] if key.text == "d" => value
            .text
            .parse::<usize>()
            .ok()
            .filter(|d| *d >= 1)
            .ok_or_else(|| ParseError::new(line_no, value.column, format!("invalid dimension `{}`", value.text))),
        [first, ..] => Err(ParseError::new(line_no, first.column, "expected header `d <int>`")),
        [] => Err(ParseError::new(line_no, 1, "expected header `d <int>`")),
    }
}

fn parse_index(line_no: usize, tok: &Token<'_>, d: usize) -> Result<usize, ParseError> {
    let v: usize = tok
        .text
        .parse()
        .map_err(|_| ParseError::new(line_no, tok.column, format!("expected an index, found `{}`", tok.text)))?;
    if v == 0 || v > d {
        return Err(ParseError::new(line_no, tok.column, format!("index {v} outside 1..={d}")));
    }
    Ok(v)
}

fn parse_float(line_no: usize, tok: &Token<'_>) -> Result<f64, ParseError> {
    tok.text
        .parse::<f64>()
        .ok()
        .filter(|x| x.is_finite())
        .ok_or_else(|| ParseError::new(line_no, tok.column, format!("expected a finite number, found `{}`", tok.text)))
}

/// Parses the sparse (or dense) operator format.
pub fn parse_sparse(text: &str) -> Result<SparseOperator, ParseError> {
    let mut d = None;
    let mut entries = Vec::new();
    let mut last_line = 0;
    for (idx, line) in text.lines().enumerate() {
        let line_no = idx + 1;
        last_line = line_no;
        let toks = tokens(line);
        if toks.is_empty() {
            continue;
        }
        let dim = match d {
            None => {
                d = Some(parse_header(line_no, &toks)?);
                continue;
            }
            Some(dim) => dim,
        };
        if toks.len() != 6 {
            let col = toks.get(6).map_or(toks.last().map_or(1, |t| t.column), |t| t.column);
            return Err(ParseError::new(
                line_no,
                col,
                format!("expected `i j k l re im`, found {} fields", toks.len()),
            ));
        }
        let i = parse_index(line_no, &toks[0], dim)?;
        let j = parse_index(line_no, &toks[1], dim)?;
        let k = parse_index(line_no, &toks[2], dim)?;
        let l = parse_index(line_no, &toks[3], dim)?;
        let re = parse_float(line_no, &toks[4])?;
        let im = parse_float(line_no, &toks[5])?;
        entries.push((line_no, SparseEntry { i, j, k, l, value: C64::new(re, im) }));
    }
    let d = d.ok_or_else(|| ParseError::new(last_line.max(1), 1, "missing header `d <int>`"))?;
    let mut seen = std::collections::HashMap::new();
    for (line_no, e) in &entries {
        if let Some(first) = seen.insert(e.key(), *line_no) {
            return Err(ParseError::new(
                *line_no,
                1,
                format!("entry ({},{}),({},{}) already given on line {first}", e.i, e.j, e.k, e.l),
            ));
        }
    }
    let entries = entries.into_iter().map(|(_, e)| e).collect();
    Ok(SparseOperator::new(d, entries).expect("indices validated while parsing"))
}

pub fn parse_operator(text: &str) -> Result<BipartiteOperator, ParseError> {
    parse_sparse(text).map(|s| s.to_dense())
}

/// Writes the nonzero entries with 18 significant digits.
pub fn write_operator(op: &BipartiteOperator) -> String {
    write_sparse(&op.to_sparse())
}

pub fn write_sparse(op: &SparseOperator) -> String {
    let mut out = String::new();
    writeln!(out, "d {}", op.dim()).unwrap();
    for e in op.entries() {
        writeln!(out, "{} {} {} {} {:.17e} {:.17e}", e.i, e.j, e.k, e.l, e.value.re, e.value.im).unwrap();
    }
    out
}

fn parse_square_block(lines: &[(usize, Vec<Token<'_>>)]) -> Result<LatinSquare, ParseError> {
    let (header_line, header) = &lines[0];
    let d = parse_header(*header_line, header)?;
    let rows = &lines[1..];
    if rows.len() != d {
        let line = rows.last().map_or(*header_line, |r| r.0);
        return Err(ParseError::new(line, 1, format!("expected {d} rows, found {}", rows.len())));
    }
    let mut cells = Vec::with_capacity(d * d);
    for (line_no, toks) in rows {
        if toks.len() != d {
            return Err(ParseError::new(*line_no, 1, format!("expected {d} symbols, found {}", toks.len())));
        }
        for t in toks {
            cells.push(parse_index(*line_no, t, d)?);
        }
    }
    Ok(LatinSquare::new(d, cells).expect("symbols validated while parsing"))
}

/// Groups non-comment lines into blocks separated by blank lines.
fn blocks(text: &str) -> Vec<Vec<(usize, Vec<Token<'_>>)>> {
    let mut out = Vec::new();
    let mut current = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        let comment_only = line.trim_start().starts_with('#');
        let toks = tokens(line);
        if toks.is_empty() {
            if !comment_only && !current.is_empty() {
                out.push(std::mem::take(&mut current));
            }
            continue;
        }
        current.push((idx + 1, toks));
    }
    if !current.is_empty() {
        out.push(current);
    }
    out
}

pub fn parse_latin_square(text: &str) -> Result<LatinSquare, ParseError> {
    let b = blocks(text);
    match b.as_slice() {
        [one] => parse_square_block(one),
        [] => Err(ParseError::new(1, 1, "empty input")),
        [_, second, ..] => Err(ParseError::new(second[0].0, 1, "expected a single square")),
    }
}

/// Parses two squares separated by a blank line. Orthogonality is not checked here.
pub fn parse_latin_pair(text: &str) -> Result<(LatinSquare, LatinSquare), ParseError> {
    let b = blocks(text);
    match b.as_slice() {
        [k, l] => Ok((parse_square_block(k)?, parse_square_block(l)?)),
        _ => Err(ParseError::new(1, 1, format!("expected two squares separated by a blank line, found {}", b.len()))),
    }
}

pub fn write_latin_square(sq: &LatinSquare) -> String {
    let mut out = String::new();
    writeln!(out, "d {}", sq.order()).unwrap();
    for r in 1..=sq.order() {
        let row: Vec<String> = (1..=sq.order()).map(|c| sq.get(r, c).to_string()).collect();
        writeln!(out, "{}", row.join(" ")).unwrap();
    }
    out
}

pub fn write_latin_pair(pair: &OlsPair) -> String {
    format!("{}\n{}", write_latin_square(pair.k()), write_latin_square(pair.l()))
}

pub fn parse_perm_tuple(text: &str) -> Result<PermTuple, ParseError> {
    let mut rows: Vec<(usize, Vec<usize>)> = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        let toks = tokens(line);
        if toks.is_empty() {
            continue;
        }
        let mut row = Vec::with_capacity(toks.len());
        for t in &toks {
            let v = t
                .text
                .parse::<usize>()
                .map_err(|_| ParseError::new(idx + 1, t.column, format!("expected an image, found `{}`", t.text)))?;
            row.push(v);
        }
        rows.push((idx + 1, row));
    }
    if rows.len() != 4 {
        return Err(ParseError::new(
            rows.last().map_or(1, |r| r.0),
            1,
            format!("expected 4 permutations, found {}", rows.len()),
        ));
    }
    let line = rows[0].0;
    let mut it = rows.into_iter().map(|r| r.1);
    let (s, t, r, l) = (it.next().unwrap(), it.next().unwrap(), it.next().unwrap(), it.next().unwrap());
    PermTuple::new(s, t, r, l).map_err(|e| ParseError::new(line, 1, e.to_string()))
}

pub fn write_perm_tuple(p: &PermTuple) -> String {
    let line = |v: &[usize]| v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(" ");
    format!("{}\n{}\n{}\n{}\n", line(p.sigma()), line(p.tau()), line(p.rho()), line(p.lambda()))
}

/// Serializes a state as `i α j β re im` lines of its nonzero amplitudes.
pub fn write_state(psi: &crate::state::StateVector) -> String {
    let d = psi.dim();
    let mut out = String::new();
    writeln!(out, "d {d}").unwrap();
    for (flat, z) in psi.amplitudes().iter().enumerate() {
        if z.is_zero() {
            continue;
        }
        let e = flat % d + 1;
        let c = (flat / d) % d + 1;
        let b = (flat / (d * d)) % d + 1;
        let a = flat / (d * d * d) + 1;
        writeln!(out, "{a} {b} {c} {e} {:.17e} {:.17e}", z.re, z.im).unwrap();
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn operator_round_trip_is_exact() {
        let mut op = BipartiteOperator::zeros(2);
        op.set(1, 2, 2, 1, C64::new(0.1, -1.0 / 3.0));
        op.set(2, 2, 1, 1, C64::new(std::f64::consts::PI, 0.0));
        let text = write_operator(&op);
        assert_eq!(parse_operator(&text).unwrap(), op);
    }

    #[test]
    fn comments_and_dense_rows_are_accepted() {
        let text = "# SWAP\nd 2\n1 1 1 1 1 0\n1 1 1 2 0 0 # explicit zero\n1 2 2 1 1 0\n2 1 1 2 1 0\n2 2 2 2 1 0\n";
        assert_eq!(parse_operator(text).unwrap(), BipartiteOperator::swap(2));
    }

    #[test]
    fn diagnostics_name_line_and_column() {
        let err = parse_operator("d 2\n1 1 1 1 1 0\n1 3 1 1 1 0\n").unwrap_err();
        assert_eq!((err.line, err.column), (3, 3));
        let err = parse_operator("d 2\n1 1 1 1 x 0\n").unwrap_err();
        assert_eq!((err.line, err.column), (2, 9));
        let err = parse_operator("1 1 1 1 1 0\n").unwrap_err();
        assert_eq!(err.line, 1);
        let err = parse_operator("d 2\n1 1 1 1 1 0\n1 1 1 1 1 0\n").unwrap_err();
        assert_eq!(err.line, 3);
        assert!(parse_operator("d 2\n1 1 1 1 1\n").is_err());
    }

    #[test]
    fn latin_pair_format() {
        let text = "d 3\n1 2 3\n2 3 1\n3 1 2\n\n# second\nd 3\n1 2 3\n3 1 2\n2 3 1\n";
        let (k, l) = parse_latin_pair(text).unwrap();
        assert_eq!(k.get(2, 1), 2);
        assert_eq!(l.get(2, 1), 3);
        let pair = OlsPair::new(k, l).unwrap();
        let again = parse_latin_pair(&write_latin_pair(&pair)).unwrap();
        assert_eq!(&again.0, pair.k());
        assert!(parse_latin_square("d 2\n1 2\n").is_err());
        assert!(parse_latin_square("d 2\n1 2\n2 3\n").is_err());
    }

    #[test]
    fn perm_tuple_format() {
        let p = PermTuple::canonical_n4();
        assert_eq!(parse_perm_tuple(&write_perm_tuple(&p)).unwrap(), p);
        assert!(parse_perm_tuple("1 2\n2 1\n1 1\n2 1\n").is_err());
    }
}
