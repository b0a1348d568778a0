//! Plain-text serialization of spectral fields.
//!
//! ```text
//! d N
//! k1 k2 [k3] re1 im1 re2 im2 [re3 im3]
//! ```
//! One line per representable mode (`|k_i| <= N/2 - 1`), in lexicographic
//! order of `k`. Coefficients are printed with 17 significant digits so the
//! round trip is exact.

use std::fmt::Write as _;

use num_complex::Complex64;

use super::field::SpectralField;
use super::grid::TorusGrid;
use crate::{Error, Result};

pub fn to_text(u: &SpectralField) -> String {
    let grid = u.grid();
    let d = grid.dim();
    let half = (grid.resolution() / 2) as i64;
    let mut out = String::new();
    writeln!(out, "{} {}", d, grid.resolution()).unwrap();
    let side = (2 * half - 1) as usize;
    for lin in 0..side.pow(d as u32) {
        let mut k = [0i64; 3];
        let mut rest = lin;
        for axis in (0..d).rev() {
            k[axis] = (rest % side) as i64 - (half - 1);
            rest /= side;
        }
        let idx = grid.index_of(&k[..d]).expect("representable");
        let c = u.coeff(idx);
        let mut line = String::new();
        for ki in &k[..d] {
            write!(line, "{ki} ").unwrap();
        }
        for (i, z) in c[..d].iter().enumerate() {
            if i > 0 {
                line.push(' ');
            }
            write!(line, "{:.16e} {:.16e}", z.re, z.im).unwrap();
        }
        out.push_str(&line);
        out.push('\n');
    }
    out
}

/// Parses the text format. Modes not listed are zero. The result must be
/// Hermitian and mean-zero.
pub fn from_text(text: &str) -> Result<SpectralField> {
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    let (hline, header) = lines.next().ok_or(Error::Parse {
        line: 1,
        message: "empty input".into(),
    })?;
    let parse_err = |line: usize, message: String| Error::Parse {
        line: line + 1,
        message,
    };
    let head: Vec<&str> = header.split_whitespace().collect();
    if head.len() != 2 {
        return Err(parse_err(hline, "header must be `d N`".into()));
    }
    let d: usize = head[0]
        .parse()
        .map_err(|e| parse_err(hline, format!("bad dimension: {e}")))?;
    let n: usize = head[1]
        .parse()
        .map_err(|e| parse_err(hline, format!("bad resolution: {e}")))?;
    let grid = TorusGrid::new(d, n).map_err(|e| parse_err(hline, e.to_string()))?;
    let mut comps = vec![vec![Complex64::new(0.0, 0.0); grid.len()]; d];
    let mut seen = vec![false; grid.len()];
    for (lno, line) in lines {
        let toks: Vec<&str> = line.split_whitespace().collect();
        if toks.len() != 3 * d {
            return Err(parse_err(lno, format!("expected {} fields, found {}", 3 * d, toks.len())));
        }
        let mut k = [0i64; 3];
        for i in 0..d {
            k[i] = toks[i]
                .parse()
                .map_err(|e| parse_err(lno, format!("bad wavenumber `{}`: {e}", toks[i])))?;
        }
        let idx = grid
            .index_of(&k[..d])
            .filter(|&i| grid.is_representable(i))
            .ok_or_else(|| parse_err(lno, format!("mode {:?} outside the lattice", &k[..d])))?;
        if std::mem::replace(&mut seen[idx], true) {
            return Err(parse_err(lno, format!("duplicate mode {:?}", &k[..d])));
        }
        for c in 0..d {
            let re: f64 = parse_float(toks[d + 2 * c]).map_err(|m| parse_err(lno, m))?;
            let im: f64 = parse_float(toks[d + 2 * c + 1]).map_err(|m| parse_err(lno, m))?;
            comps[c][idx] = Complex64::new(re, im);
        }
    }
    if comps.iter().any(|c| c[0] != Complex64::new(0.0, 0.0)) {
        return Err(Error::Parse {
            line: 0,
            message: "the zero mode must vanish".into(),
        });
    }
    let raw = SpectralField::from_components(&grid, comps.clone())?;
    // from_components symmetrizes; compare against the raw input
    let unsym = raw_field(&grid, comps);
    if unsym.hermitian_defect() > 1e-12 {
        return Err(Error::Parse {
            line: 0,
            message: "coefficients are not Hermitian-symmetric".into(),
        });
    }
    Ok(raw)
}

fn raw_field(grid: &TorusGrid, comps: Vec<Vec<Complex64>>) -> SpectralField {
    let mut f = SpectralField::zeros(grid);
    for (c, comp) in comps.into_iter().enumerate() {
        f.component_mut(c).copy_from_slice(&comp);
    }
    f
}

fn parse_float(tok: &str) -> std::result::Result<f64, String> {
    let v: f64 = tok.parse().map_err(|e| format!("bad number `{tok}`: {e}"))?;
    if v.is_finite() {
        Ok(v)
    } else {
        Err(format!("non-finite coefficient `{tok}`"))
    }
}
