//! Line-oriented geometry (`Z x y z` in bohr) and basis files.
//!
//! Basis files hold per-element blocks:
//!
//! ```text
//! # comment
//! [H]
//! s 3
//!   3.42525091  0.15432897
//!   0.62391373  0.53532814
//!   0.16885540  0.44463454
//! ```
//!
//! Block headers take an element symbol or an atomic number; each shell line
//! gives the type (`s` or `p`) and the number of `exponent coefficient` lines.

use std::collections::BTreeMap;

use super::basis::{Nucleus, Shell, ShellKind};
use crate::error::{Error, Result};

const SYMBOLS: [&str; 18] = [
    "H", "He", "Li", "Be", "B", "C", "N", "O", "F", "Ne", "Na", "Mg", "Al", "Si", "P", "S", "Cl",
    "Ar",
];

/// Atomic number for a symbol or a numeric label.
pub fn atomic_number(label: &str) -> Option<u32> {
    if let Ok(z) = label.parse::<u32>() {
        return (z > 0).then_some(z);
    }
    SYMBOLS
        .iter()
        .position(|s| s.eq_ignore_ascii_case(label))
        .map(|i| i as u32 + 1)
}

fn parse_err<T>(line: usize, message: impl Into<String>) -> Result<T> {
    Err(Error::Parse {
        line,
        message: message.into(),
    })
}

fn content(raw: &str) -> &str {
    raw.split('#').next().unwrap_or("").trim()
}

fn number(tok: &str, line: usize) -> Result<f64> {
    match tok.parse::<f64>() {
        Ok(v) if v.is_finite() => Ok(v),
        _ => parse_err(line, format!("expected a number, found {tok:?}")),
    }
}

/// Nuclei from `Z x y z` lines; `Z` may be a symbol.
pub fn parse_geometry(text: &str) -> Result<Vec<Nucleus>> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let s = content(raw);
        if s.is_empty() {
            continue;
        }
        let toks: Vec<&str> = s.split_whitespace().collect();
        if toks.len() != 4 {
            return parse_err(
                line,
                format!("expected `Z x y z`, found {} fields", toks.len()),
            );
        }
        let z = match atomic_number(toks[0]) {
            Some(z) => z as f64,
            None => match number(toks[0], line) {
                Ok(z) if z > 0.0 => z,
                _ => return parse_err(line, format!("unknown element or charge {:?}", toks[0])),
            },
        };
        let center = [
            number(toks[1], line)?,
            number(toks[2], line)?,
            number(toks[3], line)?,
        ];
        out.push(Nucleus { z, center });
    }
    if out.is_empty() {
        return parse_err(0, "geometry contains no nuclei");
    }
    Ok(out)
}

/// Element blocks keyed by atomic number.
pub fn parse_basis(text: &str) -> Result<BTreeMap<u32, Vec<Shell>>> {
    let mut out: BTreeMap<u32, Vec<Shell>> = BTreeMap::new();
    let mut current: Option<u32> = None;
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, content(l)))
        .filter(|(_, l)| !l.is_empty());
    while let Some((line, s)) = lines.next() {
        if let Some(label) = s.strip_prefix('[').and_then(|r| r.strip_suffix(']')) {
            let z = atomic_number(label.trim()).ok_or(Error::Parse {
                line,
                message: format!("unknown element {label:?}"),
            })?;
            if out.contains_key(&z) {
                return parse_err(line, format!("element {label} defined twice"));
            }
            out.insert(z, Vec::new());
            current = Some(z);
            continue;
        }
        let Some(z) = current else {
            return parse_err(line, "shell outside an element block");
        };
        let toks: Vec<&str> = s.split_whitespace().collect();
        let kind = match toks.first().map(|t| t.to_ascii_lowercase()) {
            Some(t) if t == "s" => ShellKind::S,
            Some(t) if t == "p" => ShellKind::P,
            _ => return parse_err(line, format!("expected shell type s or p, found {s:?}")),
        };
        let count = match toks.get(1).map(|t| t.parse::<usize>()) {
            Some(Ok(c)) if c > 0 && toks.len() == 2 => c,
            _ => return parse_err(line, "shell line must be `s|p <primitive count>`"),
        };
        let mut exponents = Vec::with_capacity(count);
        let mut coefficients = Vec::with_capacity(count);
        for _ in 0..count {
            let Some((pl, ps)) = lines.next() else {
                return parse_err(line, "basis file ends inside a shell");
            };
            let t: Vec<&str> = ps.split_whitespace().collect();
            if t.len() != 2 {
                return parse_err(pl, "expected `exponent coefficient`");
            }
            let a = number(t[0], pl)?;
            if !(a > 0.0) {
                return parse_err(pl, "exponent must be positive");
            }
            exponents.push(a);
            coefficients.push(number(t[1], pl)?);
        }
        out.get_mut(&z).expect("block exists").push(Shell {
            kind,
            exponents,
            coefficients,
        });
    }
    if out.is_empty() {
        return parse_err(0, "basis file defines no elements");
    }
    Ok(out)
}

/// Shells for each nucleus; every element present must have a basis block.
pub fn place_basis(
    nuclei: &[Nucleus],
    basis: &BTreeMap<u32, Vec<Shell>>,
) -> Result<Vec<([f64; 3], Vec<Shell>)>> {
    nuclei
        .iter()
        .map(|a| {
            let z = a.z.round() as u32;
            basis
                .get(&z)
                .map(|s| (a.center, s.clone()))
                .ok_or_else(|| Error::InvalidArgument(format!("no basis functions for Z = {z}")))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn geometry() {
        let g = parse_geometry("# H2\nH 0 0 -0.7\n1 0 0 0.7 # second\n\n").unwrap();
        assert_eq!(g.len(), 2);
        assert_eq!(g[1].center, [0.0, 0.0, 0.7]);
        assert!(matches!(
            parse_geometry("H 0 0"),
            Err(Error::Parse { line: 1, .. })
        ));
        assert!(parse_geometry("Xx 0 0 0").is_err());
        assert!(parse_geometry("# nothing").is_err());
    }

    #[test]
    fn basis() {
        let b = parse_basis("[H]\ns 2\n1.0 0.5\n0.2 0.5\n[8]\np 1\n1.1 1.0\n").unwrap();
        assert_eq!(b[&1][0].exponents, vec![1.0, 0.2]);
        assert_eq!(b[&8][0].kind, ShellKind::P);
        assert!(matches!(
            parse_basis("[H]\ns 2\n1.0 0.5\n"),
            Err(Error::Parse { .. })
        ));
        assert!(parse_basis("s 1\n1 1").is_err());
        assert!(parse_basis("[H]\nd 1\n1 1").is_err());
    }
}
