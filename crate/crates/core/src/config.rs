//! Flat `key = value` configuration files.
//!
//! ```text
//! # aluminium beam
//! L          = 1.0
//! eps        = 1e-3
//! E_mod      = 70e9
//! rho        = 2700
//! kappa      = 1e8
//! n_elements = 20
//! bc         = pinned-pinned
//! forcing    = sine
//! ```
//!
//! Physical values are SI. Either `kappa` or `zeta` must be present.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use crate::beam::{BeamConfig, BoundaryCondition, ForcingSpec, TimeSignal};
use crate::error::{Error, Result};

const KEYS: &[&str] = &[
    "L",
    "eps",
    "E_mod",
    "rho",
    "kappa",
    "zeta",
    "alpha",
    "beta",
    "n_elements",
    "bc",
    "forcing",
    "forcing_frequency",
];

const REQUIRED: &[&str] = &["L", "eps", "E_mod", "rho", "n_elements"];

pub fn load(path: &Path) -> Result<BeamConfig> {
    parse(&std::fs::read_to_string(path)?)
}

pub fn parse(text: &str) -> Result<BeamConfig> {
    let mut raw: BTreeMap<&str, (usize, &str)> = BTreeMap::new();
    for (i, line) in text.lines().enumerate() {
        let line_no = i + 1;
        let body = line.split('#').next().unwrap_or("").trim();
        if body.is_empty() {
            continue;
        }
        let (k, v) = body.split_once('=').ok_or_else(|| Error::ConfigSyntax {
            line: line_no,
            message: format!("expected `key = value`, found `{body}`"),
        })?;
        let (k, v) = (k.trim(), v.trim());
        let key = KEYS.iter().copied().find(|known| *known == k).ok_or_else(|| Error::ConfigSyntax {
            line: line_no,
            message: format!("unknown key `{k}`"),
        })?;
        if v.is_empty() {
            return Err(Error::ConfigSyntax { line: line_no, message: format!("empty value for `{k}`") });
        }
        if raw.insert(key, (line_no, v)).is_some() {
            return Err(Error::ConfigSyntax { line: line_no, message: format!("duplicate key `{k}`") });
        }
    }
    for key in REQUIRED {
        if !raw.contains_key(key) {
            return Err(Error::MissingKey((*key).into()));
        }
    }
    if !raw.contains_key("kappa") && !raw.contains_key("zeta") {
        return Err(Error::MissingKey("kappa".into()));
    }

    let num = |key: &str| -> Result<Option<f64>> {
        raw.get(key)
            .map(|(line, v)| {
                v.parse::<f64>().map_err(|_| Error::ConfigSyntax {
                    line: *line,
                    message: format!("`{key}` expects a number, found `{v}`"),
                })
            })
            .transpose()
    };
    let defaults = BeamConfig::default();
    let n_elements = {
        let (line, v) = raw["n_elements"];
        v.parse::<usize>().map_err(|_| Error::ConfigSyntax {
            line,
            message: format!("`n_elements` expects a positive integer, found `{v}`"),
        })?
    };
    let bc = match raw.get("bc") {
        Some((line, v)) => v.parse::<BoundaryCondition>().map_err(|e| Error::ConfigSyntax {
            line: *line,
            message: e.to_string(),
        })?,
        None => defaults.bc,
    };
    let signal = match raw.get("forcing") {
        Some((_, "sine")) | None => TimeSignal::Sine,
        Some((_, "off")) => TimeSignal::Off,
        Some((line, v)) => {
            return Err(Error::ConfigSyntax {
                line: *line,
                message: format!("`forcing` expects `sine` or `off`, found `{v}`"),
            })
        }
    };
    let config = BeamConfig {
        length: num("L")?.expect("required"),
        eps: num("eps")?.expect("required"),
        youngs_modulus: num("E_mod")?.expect("required"),
        density: num("rho")?.expect("required"),
        kappa: num("kappa")?.unwrap_or(0.0),
        zeta: num("zeta")?,
        alpha: num("alpha")?.unwrap_or(defaults.alpha),
        beta: num("beta")?.unwrap_or(defaults.beta),
        n_elements,
        bc,
        forcing: ForcingSpec { signal, frequency: num("forcing_frequency")?, ..ForcingSpec::default() },
    };
    config.validate()?;
    Ok(config)
}

/// Canonical text form; `parse(&to_text(c))` reproduces `c`.
pub fn to_text(config: &BeamConfig) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "L = {:e}", config.length);
    let _ = writeln!(out, "eps = {:e}", config.eps);
    let _ = writeln!(out, "E_mod = {:e}", config.youngs_modulus);
    let _ = writeln!(out, "rho = {:e}", config.density);
    let _ = writeln!(out, "kappa = {:e}", config.kappa);
    if let Some(z) = config.zeta {
        let _ = writeln!(out, "zeta = {z:e}");
    }
    let _ = writeln!(out, "alpha = {:e}", config.alpha);
    let _ = writeln!(out, "beta = {:e}", config.beta);
    let _ = writeln!(out, "n_elements = {}", config.n_elements);
    let _ = writeln!(out, "bc = {}", config.bc);
    let signal = match config.forcing.signal {
        TimeSignal::Sine => "sine",
        TimeSignal::Off => "off",
    };
    let _ = writeln!(out, "forcing = {signal}");
    if let Some(f) = config.forcing.frequency {
        let _ = writeln!(out, "forcing_frequency = {f:e}");
    }
    out
}
