//! Plain-text symbol format.
//!
//! ```text
//! # comment
//! modes 2
//! # k l indices re im
//! 0 0 - -1.0 0.0
//! 1 1 0,0 1.0 0.0
//! 2 0 0,1 0.25 0.0
//! ```
//!
//! Each term line contributes `(re + i im) * conj(psi_i1) .. conj(psi_ik) psi_j1 .. psi_jl`
//! where the index list holds the `k` creation indices followed by the `l`
//! annihilation indices (`-` when empty). Repeated monomials add up. The writer
//! emits one line per monomial with sorted indices.

use std::path::Path;

use super::poly::monomial_of_tuple;
use super::PolySymbol;
use crate::error::{Error, Result};
use crate::C64;

pub fn format_symbol(p: &PolySymbol) -> String {
    let mut out = String::new();
    out.push_str(&format!("modes {}\n", p.modes()));
    for (m, c) in p.terms() {
        let (k, l) = m.bidegree();
        let mut idx = Vec::new();
        for (i, &a) in m.creation.iter().enumerate() {
            idx.extend(std::iter::repeat_n(i.to_string(), a as usize));
        }
        for (j, &b) in m.annihilation.iter().enumerate() {
            idx.extend(std::iter::repeat_n(j.to_string(), b as usize));
        }
        let idx = if idx.is_empty() { "-".to_string() } else { idx.join(",") };
        out.push_str(&format!("{k} {l} {idx} {:e} {:e}\n", c.re, c.im));
    }
    out
}

pub fn parse_symbol(text: &str) -> Result<PolySymbol> {
    let mut modes: Option<usize> = None;
    let mut p: Option<PolySymbol> = None;
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let err = |message: String| Error::SymbolParse {
            line: lineno + 1,
            message,
        };
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields[0] == "modes" {
            if modes.is_some() {
                return Err(err("duplicate modes line".into()));
            }
            let m: usize = fields
                .get(1)
                .and_then(|s| s.parse().ok())
                .filter(|&m| m > 0)
                .ok_or_else(|| err("expected `modes <positive integer>`".into()))?;
            modes = Some(m);
            p = Some(PolySymbol::zero(m));
            continue;
        }
        let m = modes.ok_or_else(|| err("term before `modes` line".into()))?;
        if fields.len() != 5 {
            return Err(err(format!("expected 5 fields, found {}", fields.len())));
        }
        let k: usize = fields[0].parse().map_err(|_| err("bad k".into()))?;
        let l: usize = fields[1].parse().map_err(|_| err("bad l".into()))?;
        let idx: Vec<usize> = if fields[2] == "-" {
            Vec::new()
        } else {
            fields[2]
                .split(',')
                .map(|s| s.parse::<usize>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|_| err("bad index list".into()))?
        };
        if idx.len() != k + l {
            return Err(err(format!("index list has {} entries, expected {}", idx.len(), k + l)));
        }
        if let Some(bad) = idx.iter().find(|&&i| i >= m) {
            return Err(err(format!("mode index {bad} out of range")));
        }
        let re: f64 = fields[3].parse().map_err(|_| err("bad real part".into()))?;
        let im: f64 = fields[4].parse().map_err(|_| err("bad imaginary part".into()))?;
        if !(re.is_finite() && im.is_finite()) {
            return Err(err("non-finite coefficient".into()));
        }
        let mono = monomial_of_tuple(m, &idx[..k], &idx[k..]);
        p.as_mut().unwrap().add_term(mono, C64::new(re, im));
    }
    p.ok_or(Error::SymbolParse {
        line: 0,
        message: "missing `modes` line".into(),
    })
}

pub fn read_symbol_file(path: &Path) -> Result<PolySymbol> {
    parse_symbol(&std::fs::read_to_string(path)?)
}

pub fn write_symbol_file(path: &Path, p: &PolySymbol) -> Result<()> {
    std::fs::write(path, format_symbol(p))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::symbols::random_symbol;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn parses_documented_example() {
        let text = "# comment\nmodes 2\n0 0 - -1.0 0.0\n1 1 0,0 1.0 0.0\n2 0 0,1 0.25 0.0\n2 0 1,0 0.25 0\n";
        let p = parse_symbol(text).unwrap();
        let z = [C64::new(0.3, 0.1), C64::new(-0.2, 0.5)];
        let expected = -1.0 + z[0].norm_sqr() + 0.5 * z[0].conj() * z[1].conj();
        assert!((p.eval(&z) - expected).norm() < 1e-15);
    }

    #[test]
    fn rejects_malformed_lines() {
        assert!(parse_symbol("1 1 0,0 1 0\n").is_err());
        assert!(parse_symbol("modes 1\n1 1 0 1 0\n").is_err());
        assert!(parse_symbol("modes 1\n1 0 3 1 0\n").is_err());
        assert!(parse_symbol("modes 1\n1 0 0 x 0\n").is_err());
        assert!(parse_symbol("").is_err());
    }

    proptest! {
        #[test]
        fn format_parse_round_trip(seed in any::<u64>(), modes in 1usize..3, degree in 0u32..5) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let p = random_symbol(&mut rng, modes, degree);
            let back = parse_symbol(&format_symbol(&p)).unwrap();
            prop_assert_eq!(back, p);
        }
    }
}
