//! Remote-source configuration.
//!
//! A TOML file; every key is optional. Example with the defaults:
//!
//! ```toml
//! endpoint = "https://www.lmfdb.org/api/mf_newforms/"
//! url_template = "{endpoint}?level={N}&weight={k}&char_conrey={c}&_format=json"
//! cache_dir = ".hecke-equidist-cache"
//! offline = false
//! retries = 3
//! retry_backoff_ms = 250
//! max_in_flight = 4
//! timeout_secs = 30
//! assume_complete = false
//! embedding = "conrey"
//!
//! [tolerances]
//! cdf_tol = 1e-10
//! im_tol = 1e-8
//! edge_tol = 1e-8
//!
//! [mapping]
//! records = "/data"
//! value = "/traces/{p_minus_1}"
//! value_kind = "ap"
//! form_id = "/label"
//! field_degree = "/dim"
//! ```
//!
//! Pointers are RFC 6901 JSON pointers. `records` locates the array of
//! newforms in a response; the others are evaluated against each element
//! after substituting `{p}`, `{p_index}` (0 for 2, 1 for 3, ...) and
//! `{p_minus_1}`. `character`, when set, reads the character from the element
//! (`character_kind` is `conrey_label`, `conrey_index` or `object`); otherwise
//! the requested character is used.
//!
//! Environment overrides: `HECKE_EQUIDIST_CONFIG` (file path),
//! `HECKE_EQUIDIST_ENDPOINT`, `HECKE_EQUIDIST_CACHE_DIR`,
//! `HECKE_EQUIDIST_OFFLINE` (`1`/`true`/`0`/`false`).

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::chebyshev::DEFAULT_CDF_TOL;
use crate::error::{Error, Result};
use crate::spectra::NormalizeTol;

pub const ENV_CONFIG: &str = "HECKE_EQUIDIST_CONFIG";
pub const ENV_ENDPOINT: &str = "HECKE_EQUIDIST_ENDPOINT";
pub const ENV_CACHE_DIR: &str = "HECKE_EQUIDIST_CACHE_DIR";
pub const ENV_OFFLINE: &str = "HECKE_EQUIDIST_OFFLINE";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub endpoint: String,
    pub url_template: String,
    pub cache_dir: PathBuf,
    pub offline: bool,
    pub retries: u32,
    pub retry_backoff_ms: u64,
    pub max_in_flight: usize,
    pub timeout_secs: u64,
    pub assume_complete: bool,
    pub embedding: String,
    pub tolerances: Tolerances,
    pub mapping: Mapping,
}

impl Default for Config {
    fn default() -> Self {
        Config {
            endpoint: "https://www.lmfdb.org/api/mf_newforms/".into(),
            url_template: "{endpoint}?level={N}&weight={k}&char_conrey={c}&_format=json".into(),
            cache_dir: PathBuf::from(".hecke-equidist-cache"),
            offline: false,
            retries: 3,
            retry_backoff_ms: 250,
            max_in_flight: 4,
            timeout_secs: 30,
            assume_complete: false,
            embedding: "conrey".into(),
            tolerances: Tolerances::default(),
            mapping: Mapping::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    pub cdf_tol: f64,
    pub im_tol: f64,
    pub edge_tol: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        let n = NormalizeTol::default();
        Tolerances {
            cdf_tol: DEFAULT_CDF_TOL,
            im_tol: n.im_tol,
            edge_tol: n.edge_tol,
        }
    }
}

impl Tolerances {
    pub fn normalize(&self) -> NormalizeTol {
        NormalizeTol {
            im_tol: self.im_tol,
            edge_tol: self.edge_tol,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CharacterKind {
    ConreyLabel,
    ConreyIndex,
    Object,
}

/// What the `value` pointer yields.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ValueKind {
    /// Raw `a_p`, a number or `[re, im]`.
    Ap,
    /// `a_p / p^((k-1)/2)`, a number or `[re, im]`.
    ApAnalytic,
    /// Already normalized real eigenvalue.
    Lambda,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Mapping {
    pub records: String,
    pub value: String,
    pub value_kind: ValueKind,
    pub form_id: Option<String>,
    pub field_degree: Option<String>,
    pub character: Option<String>,
    pub character_kind: CharacterKind,
}

impl Default for Mapping {
    fn default() -> Self {
        Mapping {
            records: "/data".into(),
            value: "/traces/{p_minus_1}".into(),
            value_kind: ValueKind::Ap,
            form_id: Some("/label".into()),
            field_degree: Some("/dim".into()),
            character: None,
            character_kind: CharacterKind::ConreyLabel,
        }
    }
}

impl Config {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Config = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    /// Loads `path`, else the file named by `HECKE_EQUIDIST_CONFIG`, else the
    /// defaults, then applies the environment overrides.
    pub fn load(path: Option<&Path>) -> Result<Self> {
        Self::load_with(path, |k| std::env::var(k).ok())
    }

    pub fn load_with(path: Option<&Path>, env: impl Fn(&str) -> Option<String>) -> Result<Self> {
        let mut cfg = match path
            .map(PathBuf::from)
            .or_else(|| env(ENV_CONFIG).map(PathBuf::from))
        {
            Some(p) => Self::from_file(&p)?,
            None => Config::default(),
        };
        cfg.apply_overrides(env)?;
        Ok(cfg)
    }

    pub fn apply_overrides(&mut self, env: impl Fn(&str) -> Option<String>) -> Result<()> {
        if let Some(v) = env(ENV_ENDPOINT) {
            self.endpoint = v;
        }
        if let Some(v) = env(ENV_CACHE_DIR) {
            self.cache_dir = PathBuf::from(v);
        }
        if let Some(v) = env(ENV_OFFLINE) {
            self.offline = match v.trim().to_ascii_lowercase().as_str() {
                "1" | "true" | "yes" => true,
                "0" | "false" | "no" | "" => false,
                other => {
                    return Err(Error::Config(format!(
                        "{ENV_OFFLINE}: expected a boolean, got {other:?}"
                    )))
                }
            };
        }
        self.validate()
    }

    pub fn validate(&self) -> Result<()> {
        if self.max_in_flight == 0 {
            return Err(Error::Config("max_in_flight must be at least 1".into()));
        }
        let t = &self.tolerances;
        if !(t.cdf_tol > 0.0 && t.im_tol > 0.0 && t.edge_tol >= 0.0) {
            return Err(Error::Config("tolerances must be positive".into()));
        }
        if !self.mapping.records.is_empty() && !self.mapping.records.starts_with('/') {
            return Err(Error::Config(format!(
                "mapping.records is not a JSON pointer: {:?}",
                self.mapping.records
            )));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashMap;

    #[test]
    fn defaults_round_trip_through_toml() {
        let cfg = Config::default();
        let text = toml::to_string(&cfg).unwrap();
        assert_eq!(Config::from_toml(&text).unwrap(), cfg);
        assert_eq!(Config::from_toml("").unwrap(), cfg);
    }

    #[test]
    fn parses_partial_file() {
        let cfg = Config::from_toml(
            "endpoint = \"http://localhost/api\"\nmax_in_flight = 2\n[tolerances]\nim_tol = 1e-6\n[mapping]\nvalue_kind = \"lambda\"\n",
        )
        .unwrap();
        assert_eq!(cfg.endpoint, "http://localhost/api");
        assert_eq!(cfg.max_in_flight, 2);
        assert_eq!(cfg.tolerances.im_tol, 1e-6);
        assert_eq!(cfg.tolerances.edge_tol, 1e-8);
        assert_eq!(cfg.mapping.value_kind, ValueKind::Lambda);
    }

    #[test]
    fn rejects_bad_files() {
        assert!(matches!(
            Config::from_toml("bogus = 1"),
            Err(Error::Config(_))
        ));
        assert!(matches!(
            Config::from_toml("max_in_flight = 0"),
            Err(Error::Config(_))
        ));
        assert!(matches!(
            Config::from_toml("[tolerances]\nim_tol = -1.0"),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn env_overrides() {
        let dir = tempfile::tempdir().unwrap();
        let file = dir.path().join("c.toml");
        std::fs::write(&file, "endpoint = \"http://file\"\nretries = 7\n").unwrap();
        let env: HashMap<&str, String> = [
            (ENV_CONFIG, file.display().to_string()),
            (ENV_CACHE_DIR, "/tmp/x".to_string()),
            (ENV_OFFLINE, "1".to_string()),
        ]
        .into();
        let cfg = Config::load_with(None, |k| env.get(k).cloned()).unwrap();
        assert_eq!(cfg.endpoint, "http://file");
        assert_eq!(cfg.retries, 7);
        assert_eq!(cfg.cache_dir, PathBuf::from("/tmp/x"));
        assert!(cfg.offline);

        let env: HashMap<&str, String> = [(ENV_ENDPOINT, "http://env".to_string())].into();
        let cfg = Config::load_with(Some(&file), |k| env.get(k).cloned()).unwrap();
        assert_eq!(cfg.endpoint, "http://env");
        let bad: HashMap<&str, String> = [(ENV_OFFLINE, "maybe".to_string())].into();
        assert!(Config::load_with(None, |k| bad.get(k).cloned()).is_err());
    }
}
