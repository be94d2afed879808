//! Scenario files: `key = value` lines, `#` comments, ratios in units of κ.

use std::collections::BTreeMap;
use std::path::Path;

use omx_core::params::{build_grid, SystemParams, TemperatureMode, TimeGrid, DEFAULT_RESOLUTION};

use crate::error::{CliError, Result};

/// Mechanical bath, given either as an occupation or as T/ω_m.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Bath {
    Occupation(f64),
    TemperatureOverOmega(f64),
}

/// One scenario in the dimensionless ratios of the figure captions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Scenario {
    pub g_over_kappa: f64,
    pub omega_m_over_kappa: f64,
    /// Quality factor ω_m/γ_m.
    pub q: f64,
    pub delta0_over_omega_m: f64,
    pub e_over_kappa: f64,
    pub bath: Bath,
    pub t_end_kappa: f64,
    pub resolution: f64,
}

const KEYS: [&str; 9] = [
    "g_over_kappa",
    "omega_m_over_kappa",
    "Q",
    "delta0_over_omega_m",
    "E_over_kappa",
    "n_th",
    "T_over_omega_m",
    "t_end_kappa",
    "resolution",
];

impl Scenario {
    /// Caption-style constructor with T = 0 and the default resolution.
    pub fn new(g: f64, omega: f64, q: f64, delta0: f64, e: f64, t_end: f64) -> Self {
        Scenario {
            g_over_kappa: g,
            omega_m_over_kappa: omega,
            q,
            delta0_over_omega_m: delta0,
            e_over_kappa: e,
            bath: Bath::Occupation(0.0),
            t_end_kappa: t_end,
            resolution: DEFAULT_RESOLUTION,
        }
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut map: BTreeMap<&str, f64> = BTreeMap::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let at = |m: String| CliError::config(format!("line {}: {m}", lineno + 1));
            let (k, v) = line.split_once('=').ok_or_else(|| at(format!("expected `key = value`, got `{line}`")))?;
            let (k, v) = (k.trim(), v.trim());
            let key = KEYS.iter().find(|&&x| x == k).ok_or_else(|| at(format!("unknown key `{k}`")))?;
            let x: f64 = v.parse().map_err(|_| at(format!("`{v}` is not a number")))?;
            if x.is_nan() {
                return Err(at(format!("{k} is NaN")));
            }
            if map.insert(key, x).is_some() {
                return Err(at(format!("duplicate key `{k}`")));
            }
        }
        if map.is_empty() {
            return Err(CliError::config("scenario is empty"));
        }
        let req = |k: &str| map.get(k).copied().ok_or_else(|| CliError::config(format!("missing key `{k}`")));
        let bath = match (map.get("n_th"), map.get("T_over_omega_m")) {
            (Some(_), Some(_)) => return Err(CliError::config("give either n_th or T_over_omega_m, not both")),
            (Some(&n), None) => Bath::Occupation(n),
            (None, Some(&t)) => Bath::TemperatureOverOmega(t),
            (None, None) => Bath::Occupation(0.0),
        };
        let s = Scenario {
            g_over_kappa: req("g_over_kappa")?,
            omega_m_over_kappa: req("omega_m_over_kappa")?,
            q: req("Q")?,
            delta0_over_omega_m: map.get("delta0_over_omega_m").copied().unwrap_or(0.0),
            e_over_kappa: req("E_over_kappa")?,
            bath,
            t_end_kappa: req("t_end_kappa")?,
            resolution: map.get("resolution").copied().unwrap_or(DEFAULT_RESOLUTION),
        };
        s.params()?;
        if !(s.t_end_kappa > 0.0 && s.t_end_kappa.is_finite()) {
            return Err(CliError::config(format!("t_end_kappa must be > 0, got {}", s.t_end_kappa)));
        }
        if !(s.resolution > 0.0 && s.resolution.is_finite()) {
            return Err(CliError::config(format!("resolution must be > 0, got {}", s.resolution)));
        }
        Ok(s)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::config(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    /// Every field as `(key, value)`; values print in shortest round-trip form.
    pub fn pairs(&self) -> Vec<(&'static str, String)> {
        let mut v = vec![
            ("g_over_kappa", self.g_over_kappa.to_string()),
            ("omega_m_over_kappa", self.omega_m_over_kappa.to_string()),
            ("Q", self.q.to_string()),
            ("delta0_over_omega_m", self.delta0_over_omega_m.to_string()),
            ("E_over_kappa", self.e_over_kappa.to_string()),
        ];
        v.push(match self.bath {
            Bath::Occupation(n) => ("n_th", n.to_string()),
            Bath::TemperatureOverOmega(t) => ("T_over_omega_m", t.to_string()),
        });
        v.push(("t_end_kappa", self.t_end_kappa.to_string()));
        v.push(("resolution", self.resolution.to_string()));
        v
    }

    pub fn to_text(&self) -> String {
        self.pairs().into_iter().map(|(k, v)| format!("{k} = {v}\n")).collect()
    }

    pub fn params(&self) -> Result<SystemParams> {
        let mode = match self.bath {
            Bath::Occupation(n) => TemperatureMode::Occupation(n),
            Bath::TemperatureOverOmega(t) => TemperatureMode::Temperature(t),
        };
        Ok(SystemParams::from_ratios(
            self.g_over_kappa,
            self.omega_m_over_kappa,
            self.q,
            self.delta0_over_omega_m,
            self.e_over_kappa,
            mode,
        )?)
    }

    pub fn grid(&self) -> Result<TimeGrid> {
        Ok(build_grid(1.0, self.t_end_kappa, self.resolution)?)
    }
}
