//! Experiment configuration.
//!
//! Keys (TOML):
//!
//! | key | meaning |
//! |---|---|
//! | `preset` | `free`, `harmonic`, `kerr` or `phi4`; supplies defaults for every other key |
//! | `symbol_file` | Wick symbol in the plain-text symbol format, instead of a preset |
//! | `construction` | `theorem1`, `theorem2`, `resolvent` or `trotter_exact` |
//! | `coupling` | coupling override for `kerr` / `phi4` |
//! | `modes`, `cutoff` | mode count `M` and occupation cutoff `D` |
//! | `frequencies`, `scale_weights` | per-mode `omega_k` and `lambda_k` (default all 1) |
//! | `rho` | scale exponent (default 0) |
//! | `t`, `n_list` | total time and strictly increasing slice counts (at least 4) |
//! | `psi_in`, `psi_out` | boundary amplitudes as `[re, im]` pairs per mode |
//! | `radial_order`, `angular_order` | phase-space quadrature orders per mode |
//! | `out_dir` | output directory |
//! | `seed` | seed for randomized checks |
//! | `[thresholds]` | `min_order`, `max_final_error`, `max_final_relative_error`, `require_decreasing` |
//!
//! Later sources win: preset defaults, then the file, then `--preset`, then
//! `key=value` overrides (values parsed as TOML, dotted keys for tables).

use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use toml::{Table, Value};

use super::ExperimentError;
use crate::fock::{tail_bound, ModeSpace};
use crate::presets::{preset_construction, preset_symbol, PRESET_NAMES};
use crate::propagator::{Construction, TAIL_TOLERANCE};
use crate::quadrature::MAX_RULE_NODES;
use crate::symbols::{read_symbol_file, PolySymbol};
use crate::C64;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Thresholds {
    pub min_order: Option<f64>,
    pub max_final_error: Option<f64>,
    pub max_final_relative_error: Option<f64>,
    pub require_decreasing: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub preset: Option<String>,
    pub symbol_file: Option<PathBuf>,
    pub construction: String,
    pub coupling: Option<f64>,
    pub modes: usize,
    pub cutoff: u32,
    pub frequencies: Option<Vec<f64>>,
    pub scale_weights: Option<Vec<f64>>,
    #[serde(default)]
    pub rho: f64,
    pub t: f64,
    pub n_list: Vec<usize>,
    pub psi_in: Vec<[f64; 2]>,
    pub psi_out: Vec<[f64; 2]>,
    pub radial_order: usize,
    pub angular_order: usize,
    pub out_dir: Option<PathBuf>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub thresholds: Thresholds,
}

/// Default key set of a preset.
pub fn preset_table(name: &str) -> Option<Table> {
    let construction = preset_construction(name)?;
    let thresholds = match name {
        "free" => Thresholds {
            max_final_error: Some(1e-6),
            ..Thresholds::default()
        },
        "phi4" => Thresholds {
            min_order: Some(0.8),
            max_final_relative_error: Some(1e-3),
            require_decreasing: Some(true),
            ..Thresholds::default()
        },
        _ => Thresholds {
            min_order: Some(0.8),
            require_decreasing: Some(true),
            ..Thresholds::default()
        },
    };
    let cfg = ExperimentConfig {
        preset: Some(name.to_string()),
        symbol_file: None,
        construction: construction.to_string(),
        coupling: None,
        modes: 1,
        cutoff: 24,
        frequencies: None,
        scale_weights: None,
        rho: 0.0,
        t: 0.5,
        n_list: vec![8, 16, 32, 64, 128],
        psi_in: vec![[0.6, 0.0]],
        psi_out: vec![[0.4, 0.0]],
        radial_order: 100,
        angular_order: 64,
        out_dir: None,
        seed: 0,
        thresholds,
    };
    Table::try_from(&cfg).ok()
}

fn merge(base: &mut Table, top: Table) {
    for (k, v) in top {
        match (base.get_mut(&k), v) {
            (Some(Value::Table(b)), Value::Table(t)) => merge(b, t),
            (_, v) => {
                base.insert(k, v);
            }
        }
    }
}

fn parse_override(item: &str) -> Result<(Vec<String>, Value), ExperimentError> {
    let (key, raw) = item
        .split_once('=')
        .ok_or_else(|| ExperimentError::Config(format!("override `{item}` is not key=value")))?;
    let key = key.trim();
    if key.is_empty() {
        return Err(ExperimentError::Config(format!("override `{item}` has an empty key")));
    }
    let raw = raw.trim();
    let value = match format!("v = {raw}").parse::<Table>() {
        Ok(mut t) => t.remove("v").expect("key present"),
        Err(_) => Value::String(raw.to_string()),
    };
    Ok((key.split('.').map(str::to_string).collect(), value))
}

fn set_path(table: &mut Table, path: &[String], value: Value) -> Result<(), ExperimentError> {
    let (last, parents) = path.split_last().expect("non-empty path");
    let mut cur = table;
    for p in parents {
        let entry = cur.entry(p.clone()).or_insert_with(|| Value::Table(Table::new()));
        cur = entry
            .as_table_mut()
            .ok_or_else(|| ExperimentError::Config(format!("`{p}` is not a table")))?;
    }
    cur.insert(last.clone(), value);
    Ok(())
}

/// Builds the effective configuration. Relative `symbol_file` paths resolve
/// against the config file's directory.
pub fn load_config(
    path: Option<&Path>,
    preset: Option<&str>,
    overrides: &[String],
    out_dir: Option<&Path>,
) -> Result<ExperimentConfig, ExperimentError> {
    let file_table = match path {
        Some(p) => {
            let text = std::fs::read_to_string(p)
                .map_err(|e| ExperimentError::Config(format!("cannot read {}: {e}", p.display())))?;
            text.parse::<Table>()
                .map_err(|e| ExperimentError::Config(format!("{}: {e}", p.display())))?
        }
        None => Table::new(),
    };
    let mut parsed_overrides = Vec::new();
    for o in overrides {
        parsed_overrides.push(parse_override(o)?);
    }
    let preset_name = preset
        .map(str::to_string)
        .or_else(|| {
            parsed_overrides
                .iter()
                .find(|(k, _)| k.len() == 1 && k[0] == "preset")
                .and_then(|(_, v)| v.as_str().map(str::to_string))
        })
        .or_else(|| file_table.get("preset").and_then(Value::as_str).map(str::to_string));

    let mut table = match &preset_name {
        Some(name) => preset_table(name).ok_or_else(|| {
            ExperimentError::Config(format!(
                "unknown preset `{name}` (known: {})",
                PRESET_NAMES.join(", ")
            ))
        })?,
        None => Table::new(),
    };
    merge(&mut table, file_table);
    if let Some(name) = preset {
        table.insert("preset".into(), Value::String(name.into()));
    }
    for (k, v) in parsed_overrides {
        set_path(&mut table, &k, v)?;
    }
    if let Some(out) = out_dir {
        table.insert("out_dir".into(), Value::String(out.display().to_string()));
    }

    let mut cfg: ExperimentConfig = table
        .try_into()
        .map_err(|e: toml::de::Error| ExperimentError::Config(e.to_string()))?;
    if let (Some(file), Some(p)) = (cfg.symbol_file.as_mut(), path) {
        if file.is_relative() {
            if let Some(dir) = p.parent() {
                *file = dir.join(&*file);
            }
        }
    }
    Ok(cfg)
}

/// A validated configuration with its derived objects.
#[derive(Debug, Clone)]
pub struct Prepared {
    pub space: Arc<ModeSpace>,
    pub symbol: PolySymbol,
    pub construction: Construction,
    pub psi_in: Vec<C64>,
    pub psi_out: Vec<C64>,
    pub label: String,
}

fn amplitudes(v: &[[f64; 2]]) -> Vec<C64> {
    v.iter().map(|[re, im]| C64::new(*re, *im)).collect()
}

impl ExperimentConfig {
    /// Checks every key and builds the space and symbol. With `strict_tail`,
    /// boundary amplitudes must also meet the tail tolerance on the space.
    pub fn prepare(&self, strict_tail: bool) -> Result<Prepared, ExperimentError> {
        let err = |m: String| Err(ExperimentError::Config(m));
        let construction = match Construction::parse(&self.construction) {
            Some(c) => c,
            None => return err(format!("unknown construction `{}`", self.construction)),
        };
        if self.n_list.len() < 4 {
            return err("n_list needs at least 4 entries".into());
        }
        if self.n_list[0] == 0 || self.n_list.windows(2).any(|w| w[1] <= w[0]) {
            return err("n_list must be positive and strictly increasing".into());
        }
        if !self.t.is_finite() {
            return err("t must be finite".into());
        }
        if !(self.rho >= 0.0) {
            return err("rho must be nonnegative".into());
        }
        if self.radial_order == 0 || self.angular_order == 0 {
            return err("quadrature orders must be positive".into());
        }
        let per_mode = self.radial_order.saturating_mul(self.angular_order);
        if per_mode
            .checked_pow(self.modes as u32)
            .is_none_or(|n| n.saturating_mul(4) > MAX_RULE_NODES)
        {
            return err("quadrature rule (and its refinement) would be too large".into());
        }
        let frequencies = self.frequencies.clone().unwrap_or_else(|| vec![1.0; self.modes]);
        let weights = self.scale_weights.clone().unwrap_or_else(|| vec![1.0; self.modes]);
        let space = ModeSpace::with_parameters(self.modes, self.cutoff, frequencies, weights.clone())
            .map_err(|e| ExperimentError::Config(e.to_string()))?;
        for (name, v) in [("psi_in", &self.psi_in), ("psi_out", &self.psi_out)] {
            if v.len() != self.modes {
                return err(format!("{name} has {} entries for {} modes", v.len(), self.modes));
            }
            if v.iter().flatten().any(|x| !x.is_finite()) {
                return err(format!("{name} is not finite"));
            }
        }
        let psi_in = amplitudes(&self.psi_in);
        let psi_out = amplitudes(&self.psi_out);
        if strict_tail {
            for (name, v) in [("psi_in", &psi_in), ("psi_out", &psi_out)] {
                let tb = tail_bound(&space, v);
                if !(tb < TAIL_TOLERANCE) {
                    return err(format!(
                        "{name} tail bound {tb:e} is not below {TAIL_TOLERANCE:e}; raise cutoff or shrink amplitudes"
                    ));
                }
            }
        }
        let (symbol, label) = match (&self.preset, &self.symbol_file) {
            (Some(_), Some(_)) => return err("give either preset or symbol_file, not both".into()),
            (None, None) => return err("one of preset or symbol_file is required".into()),
            (Some(name), None) => {
                let p = preset_symbol(name, self.modes, self.coupling, &weights, self.rho)
                    .ok_or_else(|| ExperimentError::Config(format!("unknown preset `{name}`")))?;
                (p, format!("preset {name}"))
            }
            (None, Some(path)) => {
                if !path.is_file() {
                    return err(format!("symbol file {} does not exist", path.display()));
                }
                let p = read_symbol_file(path).map_err(|e| ExperimentError::Config(e.to_string()))?;
                if p.modes() != self.modes {
                    return err(format!("symbol has {} modes, config has {}", p.modes(), self.modes));
                }
                (p, format!("symbol file {}", path.display()))
            }
        };
        if !symbol.is_real(1e-14 * symbol.max_coeff().max(1.0)) {
            return err("the Wick symbol must be real".into());
        }
        Ok(Prepared {
            space: Arc::new(space),
            symbol,
            construction,
            psi_in,
            psi_out,
            label,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn preset_defaults_round_trip() {
        for name in PRESET_NAMES {
            let cfg = load_config(None, Some(name), &[], None).unwrap();
            let p = cfg.prepare(true).unwrap();
            assert_eq!(p.space.cutoff(), 24);
            assert_eq!(cfg.n_list, vec![8, 16, 32, 64, 128]);
        }
    }

    #[test]
    fn overrides_and_file_merge() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.toml");
        std::fs::write(&path, "preset = \"kerr\"\nt = 0.25\n[thresholds]\nmin_order = 0.5\n").unwrap();
        let cfg = load_config(
            Some(&path),
            None,
            &["cutoff=30".into(), "thresholds.max_final_error=1e-3".into(), "construction=resolvent".into()],
            Some(Path::new("out")),
        )
        .unwrap();
        assert_eq!(cfg.t, 0.25);
        assert_eq!(cfg.cutoff, 30);
        assert_eq!(cfg.construction, "resolvent");
        assert_eq!(cfg.thresholds.min_order, Some(0.5));
        assert_eq!(cfg.thresholds.max_final_error, Some(1e-3));
        assert_eq!(cfg.thresholds.require_decreasing, Some(true));
        assert_eq!(cfg.out_dir.as_deref(), Some(Path::new("out")));
    }

    #[test]
    fn invalid_configs_are_config_errors() {
        let bad = |o: &[&str]| {
            let o: Vec<String> = o.iter().map(|s| s.to_string()).collect();
            match load_config(None, Some("kerr"), &o, None) {
                Err(e) => e,
                Ok(c) => c.prepare(true).unwrap_err(),
            }
        };
        for case in [
            &["n_list=[8, 4, 16, 32]"][..],
            &["n_list=[8, 16]"],
            &["cutoff=4", "psi_in=[[0.8, 0.0]]"],
            &["construction=\"magic\""],
            &["unknown_key=1"],
            &["psi_in=[[0.1, 0.0], [0.1, 0.0]]"],
            &["symbol_file=\"/nonexistent/s.txt\""],
            &["preset=\"nope\""],
            &["frequencies=[-1.0]"],
        ] {
            assert_eq!(bad(case).exit_code(), 1, "{case:?}");
        }
        // The tail condition only binds when asked for.
        let loose = load_config(None, Some("kerr"), &["cutoff=4".into(), "psi_in=[[0.8, 0.0]]".into()], None).unwrap();
        assert!(loose.prepare(false).is_ok());
    }

    #[test]
    fn symbol_file_config() {
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(dir.path().join("s.txt"), "modes 1\n1 1 0,0 1.0 0.0\n").unwrap();
        let path = dir.path().join("c.toml");
        std::fs::write(
            &path,
            "symbol_file = \"s.txt\"\nconstruction = \"theorem1\"\nmodes = 1\ncutoff = 24\nt = 0.5\n\
             n_list = [4, 8, 16, 32]\npsi_in = [[0.6, 0.0]]\npsi_out = [[0.4, 0.0]]\n\
             radial_order = 40\nangular_order = 32\n",
        )
        .unwrap();
        let cfg = load_config(Some(&path), None, &[], None).unwrap();
        let p = cfg.prepare(true).unwrap();
        assert_eq!(p.symbol, PolySymbol::number(1));
    }
}
