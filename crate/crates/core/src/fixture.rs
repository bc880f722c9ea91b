//! Plain-text dump of channel realizations for external tools and regression
//! fixtures. Values are written with round-trip precision, so parsing a dump
//! reproduces the realization bit for bit.
//!
//! ```text
//! fdcf-channels 1
//! dims <B> <K_dl> <K_ul> <M> <N>
//! ap <x> <y>            one line per AP
//! ue <x> <y>            one line per UE
//! H <b> <k>             then M rows of N entries `re,im`
//! F <k> <u>             then N rows
//! S <b> <c>             then M rows
//! ```

use std::fmt::Write as _;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::numerics::CMat;
use crate::topology::{ChannelRealization, Point};

const MAGIC: &str = "fdcf-channels 1";

fn write_matrix(out: &mut String, tag: char, i: usize, j: usize, m: &CMat) {
    let _ = writeln!(out, "{tag} {i} {j}");
    for r in 0..m.nrows() {
        let row: Vec<String> = (0..m.ncols()).map(|c| format!("{},{}", m[(r, c)].re, m[(r, c)].im)).collect();
        let _ = writeln!(out, "{}", row.join(" "));
    }
}

pub fn dump(chan: &ChannelRealization) -> String {
    let b = chan.num_aps();
    let (k_dl, k_ul) = (chan.k_dl(), chan.k_ul());
    let (m, n) = chan.h.first().and_then(|r| r.first()).map_or((0, 0), |h| h.shape());
    let mut out = format!("{MAGIC}\ndims {b} {k_dl} {k_ul} {m} {n}\n");
    for p in &chan.ap_pos {
        let _ = writeln!(out, "ap {} {}", p[0], p[1]);
    }
    for p in &chan.ue_pos {
        let _ = writeln!(out, "ue {} {}", p[0], p[1]);
    }
    for (bi, row) in chan.h.iter().enumerate() {
        for (k, x) in row.iter().enumerate() {
            write_matrix(&mut out, 'H', bi, k, x);
        }
    }
    for (k, row) in chan.f.iter().enumerate() {
        for (u, x) in row.iter().enumerate() {
            write_matrix(&mut out, 'F', k, u, x);
        }
    }
    for (bi, row) in chan.s.iter().enumerate() {
        for (c, x) in row.iter().enumerate() {
            write_matrix(&mut out, 'S', bi, c, x);
        }
    }
    out
}

struct Lines<'a> {
    inner: std::iter::Enumerate<std::str::Lines<'a>>,
}

impl<'a> Lines<'a> {
    fn next(&mut self, what: &str) -> Result<(usize, &'a str)> {
        self.inner
            .find(|(_, l)| !l.trim().is_empty())
            .map(|(i, l)| (i + 1, l.trim()))
            .ok_or_else(|| Error::Fixture(format!("unexpected end of input, expected {what}")))
    }
}

fn parse_num<T: std::str::FromStr>(s: &str, line: usize) -> Result<T> {
    s.parse().map_err(|_| Error::Fixture(format!("line {line}: bad number `{s}`")))
}

fn fields<'a>(line: &'a str, tag: &str, count: usize, ln: usize) -> Result<Vec<&'a str>> {
    let parts: Vec<&str> = line.split_whitespace().collect();
    if parts.first() != Some(&tag) || parts.len() != count + 1 {
        return Err(Error::Fixture(format!("line {ln}: expected `{tag}` with {count} fields, got `{line}`")));
    }
    Ok(parts[1..].to_vec())
}

fn point(lines: &mut Lines<'_>, tag: &str) -> Result<Point> {
    let (ln, line) = lines.next(tag)?;
    let f = fields(line, tag, 2, ln)?;
    Ok([parse_num(f[0], ln)?, parse_num(f[1], ln)?])
}

fn matrix(lines: &mut Lines<'_>, tag: &str, i: usize, j: usize, rows: usize, cols: usize) -> Result<CMat> {
    let (ln, line) = lines.next(tag)?;
    let f = fields(line, tag, 2, ln)?;
    if parse_num::<usize>(f[0], ln)? != i || parse_num::<usize>(f[1], ln)? != j {
        return Err(Error::Fixture(format!("line {ln}: expected `{tag} {i} {j}`, got `{line}`")));
    }
    let mut m = CMat::zeros(rows, cols);
    for r in 0..rows {
        let (ln, line) = lines.next("matrix row")?;
        let entries: Vec<&str> = line.split_whitespace().collect();
        if entries.len() != cols {
            return Err(Error::Fixture(format!("line {ln}: expected {cols} entries, got {}", entries.len())));
        }
        for (c, e) in entries.iter().enumerate() {
            let (re, im) = e
                .split_once(',')
                .ok_or_else(|| Error::Fixture(format!("line {ln}: entry `{e}` is not `re,im`")))?;
            m[(r, c)] = Complex64::new(parse_num(re, ln)?, parse_num(im, ln)?);
        }
    }
    Ok(m)
}

pub fn parse(text: &str) -> Result<ChannelRealization> {
    let mut lines = Lines { inner: text.lines().enumerate() };
    let (ln, magic) = lines.next("header")?;
    if magic != MAGIC {
        return Err(Error::Fixture(format!("line {ln}: expected `{MAGIC}`")));
    }
    let (ln, line) = lines.next("dims")?;
    let d = fields(line, "dims", 5, ln)?
        .iter()
        .map(|s| parse_num::<usize>(s, ln))
        .collect::<Result<Vec<_>>>()?;
    let (b, k_dl, k_ul, m, n) = (d[0], d[1], d[2], d[3], d[4]);
    let k = k_dl + k_ul;
    let ap_pos = (0..b).map(|_| point(&mut lines, "ap")).collect::<Result<_>>()?;
    let ue_pos = (0..k).map(|_| point(&mut lines, "ue")).collect::<Result<_>>()?;
    let h = (0..b)
        .map(|bi| (0..k).map(|ki| matrix(&mut lines, "H", bi, ki, m, n)).collect())
        .collect::<Result<_>>()?;
    let f = (0..k_dl)
        .map(|ki| (0..k_ul).map(|u| matrix(&mut lines, "F", ki, u, n, n)).collect())
        .collect::<Result<_>>()?;
    let s = (0..b)
        .map(|bi| (0..b).map(|c| matrix(&mut lines, "S", bi, c, m, m)).collect())
        .collect::<Result<_>>()?;
    if let Some((ln, extra)) = lines.inner.find(|(_, l)| !l.trim().is_empty()) {
        return Err(Error::Fixture(format!("line {}: trailing content `{}`", ln + 1, extra.trim())));
    }
    Ok(ChannelRealization { h, f, s, ap_pos, ue_pos })
}
