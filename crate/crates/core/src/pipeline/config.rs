//! Experiment configuration: a versioned TOML file mapped onto one struct.
//!
//! Unknown keys are rejected rather than ignored so a typo cannot silently
//! fall back to a default. The canonical serialization (not the file bytes)
//! is hashed, which makes the hash insensitive to comments and key order but
//! sensitive to every effective value.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ExperimentKind {
    /// Fixed N: rewired graph vs base circulant, same couplings, r vs p.
    Fig2,
    /// N sweep at p = 0: mean and spread of the r ratio per size.
    Fig3,
    /// Single-particle sweep over p: pooled r ratio of the mode energies.
    Fig4,
    /// p = 0 r-ratio samples per N, binned on a shared interval.
    Histogram,
    /// Cartesian (N, p) grid of many-body r statistics.
    Custom,
}

impl ExperimentKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ExperimentKind::Fig2 => "fig2",
            ExperimentKind::Fig3 => "fig3",
            ExperimentKind::Fig4 => "fig4",
            ExperimentKind::Histogram => "histogram",
            ExperimentKind::Custom => "custom",
        }
    }
}

impl std::str::FromStr for ExperimentKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "fig2" => Ok(ExperimentKind::Fig2),
            "fig3" => Ok(ExperimentKind::Fig3),
            "fig4" => Ok(ExperimentKind::Fig4),
            "histogram" => Ok(ExperimentKind::Histogram),
            "custom" => Ok(ExperimentKind::Custom),
            other => Err(Error::validation(format!(
                "unknown experiment kind `{other}` (expected fig2|fig3|fig4|histogram|custom)"
            ))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Dense,
    Filter,
}

impl Method {
    pub fn as_str(self) -> &'static str {
        match self {
            Method::Dense => "dense",
            Method::Filter => "filter",
        }
    }
}

fn default_impurity() -> bool {
    true
}

fn default_bins() -> usize {
    14
}

/// One experiment, fully specified. Seeds for every task are derived from
/// `base_seed`, so the struct alone reproduces the run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub schema_version: u32,
    pub kind: ExperimentKind,
    /// Majorana counts (one entry unless the kind sweeps N).
    pub n_list: Vec<usize>,
    pub k: usize,
    /// Rewiring probabilities (one entry unless the kind sweeps p).
    pub p_list: Vec<f64>,
    /// Coupling realizations per point.
    pub realizations: usize,
    /// Graph draws per point (kinds that rewire per record).
    pub graph_count: usize,
    pub base_seed: u64,
    pub method: Method,
    /// Central spectral fraction fed to the r statistics (and the filter
    /// window when `method = "filter"`).
    pub window_fraction: f64,
    /// Quartic impurity toggle for the many-body kinds.
    #[serde(default = "default_impurity")]
    pub impurity: bool,
    /// Bin count for the histogram kind's shared [0.35, 0.70] binning.
    #[serde(default = "default_bins")]
    pub bins: usize,
    /// Output directory; a command-line `--out` takes precedence.
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig =
            toml::from_str(text).map_err(|e| Error::parse(format!("config: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::parse(format!("cannot read config {}: {e}", path.display())))?;
        Self::from_toml_str(&text)
    }

    pub fn validate(&self) -> Result<()> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(Error::validation(format!(
                "config schema_version {} unsupported (this build reads {SCHEMA_VERSION})",
                self.schema_version
            )));
        }
        if self.n_list.is_empty() {
            return Err(Error::validation("n_list must not be empty"));
        }
        if self.p_list.is_empty() {
            return Err(Error::validation("p_list must not be empty"));
        }
        for &p in &self.p_list {
            if !p.is_finite() || !(0.0..=1.0).contains(&p) {
                return Err(Error::validation(format!(
                    "rewiring probability {p} must lie in [0, 1]"
                )));
            }
        }
        if self.k == 0 {
            return Err(Error::validation("k must be at least 1"));
        }
        for &n in &self.n_list {
            if n <= 2 * self.k {
                return Err(Error::validation(format!(
                    "N = {n} must exceed 2k = {} for the circulant base",
                    2 * self.k
                )));
            }
        }
        if self.realizations == 0 {
            return Err(Error::validation("realizations must be at least 1"));
        }
        if self.graph_count == 0 {
            return Err(Error::validation("graph_count must be at least 1"));
        }
        if !(self.window_fraction > 0.0 && self.window_fraction <= 1.0) {
            return Err(Error::validation(format!(
                "window_fraction {} must lie in (0, 1]",
                self.window_fraction
            )));
        }
        if self.bins == 0 {
            return Err(Error::validation("bins must be at least 1"));
        }
        match self.kind {
            ExperimentKind::Fig2 | ExperimentKind::Fig4 => {
                if self.n_list.len() != 1 {
                    return Err(Error::validation(format!(
                        "{} uses a single N (n_list has {})",
                        self.kind.as_str(),
                        self.n_list.len()
                    )));
                }
            }
            ExperimentKind::Fig3 | ExperimentKind::Histogram => {
                if self.p_list != [0.0] {
                    return Err(Error::validation(format!(
                        "{} is defined on the unrewired circulant; set p_list = [0.0]",
                        self.kind.as_str()
                    )));
                }
            }
            ExperimentKind::Custom => {}
        }
        Ok(())
    }

    /// Canonical serialization: what gets hashed and what `config_used.toml`
    /// records.
    pub fn canonical_toml(&self) -> String {
        toml::to_string(self).expect("config serialization cannot fail")
    }

    /// FNV-1a hash of the canonical serialization, as fixed-width hex.
    pub fn hash(&self) -> String {
        format!("{:016x}", fnv1a64(self.canonical_toml().as_bytes()))
    }
}

/// FNV-1a, 64-bit. Stability matters more than speed here: the value is
/// recorded in run manifests, so it must never change between builds.
pub fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn small_fig3() -> ExperimentConfig {
        ExperimentConfig {
            schema_version: 1,
            kind: ExperimentKind::Fig3,
            n_list: vec![8, 10],
            k: 2,
            p_list: vec![0.0],
            realizations: 3,
            graph_count: 1,
            base_seed: 7,
            method: Method::Dense,
            window_fraction: 0.5,
            impurity: true,
            bins: 14,
            output_dir: None,
        }
    }

    #[test]
    fn toml_round_trip_preserves_the_config() {
        let cfg = small_fig3();
        let text = cfg.canonical_toml();
        let back = ExperimentConfig::from_toml_str(&text).unwrap();
        assert_eq!(cfg, back);
    }

    #[test]
    fn unknown_keys_and_wrong_schema_are_rejected() {
        let mut text = small_fig3().canonical_toml();
        text.push_str("\nmystery_knob = 3\n");
        assert!(ExperimentConfig::from_toml_str(&text).is_err());

        let bad = small_fig3().canonical_toml().replace(
            "schema_version = 1",
            "schema_version = 2",
        );
        let err = ExperimentConfig::from_toml_str(&bad).unwrap_err();
        assert!(matches!(err, Error::Validation(_)));
    }

    #[test]
    fn defaults_fill_optional_fields() {
        let text = r#"
schema_version = 1
kind = "custom"
n_list = [8]
k = 2
p_list = [0.5]
realizations = 2
graph_count = 1
base_seed = 0
method = "dense"
window_fraction = 0.5
"#;
        let cfg = ExperimentConfig::from_toml_str(text).unwrap();
        assert!(cfg.impurity);
        assert_eq!(cfg.bins, 14);
        assert_eq!(cfg.output_dir, None);
    }

    #[test]
    fn hash_tracks_values_not_formatting() {
        let a = small_fig3();
        let mut b = a.clone();
        assert_eq!(a.hash(), b.hash());
        b.base_seed = 8;
        assert_ne!(a.hash(), b.hash());

        // comment and whitespace noise hash identically
        let noisy = format!("# a comment\n\n{}", a.canonical_toml());
        let parsed = ExperimentConfig::from_toml_str(&noisy).unwrap();
        assert_eq!(parsed.hash(), a.hash());
    }

    #[test]
    fn kind_constraints_are_enforced() {
        let mut cfg = small_fig3();
        cfg.p_list = vec![0.5];
        assert!(cfg.validate().is_err()); // fig3 needs p = 0

        let mut cfg = small_fig3();
        cfg.kind = ExperimentKind::Fig2;
        cfg.p_list = vec![0.1, 0.9];
        assert!(cfg.validate().is_err()); // fig2 needs one N
        cfg.n_list = vec![8];
        assert!(cfg.validate().is_ok());
    }

    #[test]
    fn fnv_matches_published_vectors() {
        // reference values of FNV-1a/64
        assert_eq!(fnv1a64(b""), 0xcbf29ce484222325);
        assert_eq!(fnv1a64(b"a"), 0xaf63dc4c8601ec8c);
        assert_eq!(fnv1a64(b"foobar"), 0x85944171f73967e8);
    }
}
