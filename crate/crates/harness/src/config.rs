//! Flat `key = value` experiment files.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConfigError {
    #[error("line {line}: {reason}")]
    Syntax { line: usize, reason: String },
    #[error("`{key}`: {reason}")]
    Field { key: String, reason: String },
    #[error("cannot read config {path}: {reason}")]
    Read { path: PathBuf, reason: String },
}

impl ConfigError {
    pub fn field(key: &str, reason: impl Into<String>) -> Self {
        Self::Field {
            key: key.to_string(),
            reason: reason.into(),
        }
    }
}

type Result<T> = std::result::Result<T, ConfigError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Kind {
    FieldValidate,
    FbMoments,
    NegativeMoment,
    Onsager,
    MinDistIntegral,
    MalliavinSmallball,
    SobolevSmallball,
    Density,
    DecompositionScan,
}

impl Kind {
    pub const ALL: [Kind; 9] = [
        Kind::FieldValidate,
        Kind::FbMoments,
        Kind::NegativeMoment,
        Kind::Onsager,
        Kind::MinDistIntegral,
        Kind::MalliavinSmallball,
        Kind::SobolevSmallball,
        Kind::Density,
        Kind::DecompositionScan,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            Kind::FieldValidate => "field-validate",
            Kind::FbMoments => "fb-moments",
            Kind::NegativeMoment => "negative-moment",
            Kind::Onsager => "onsager",
            Kind::MinDistIntegral => "min-dist-integral",
            Kind::MalliavinSmallball => "malliavin-smallball",
            Kind::SobolevSmallball => "sobolev-smallball",
            Kind::Density => "density",
            Kind::DecompositionScan => "decomposition-scan",
        }
    }

    /// Keys accepted on top of the common ones.
    fn extra_keys(&self) -> &'static [&'static str] {
        match self {
            Kind::FieldValidate => &["field", "separations", "layers-per-unit"],
            Kind::FbMoments | Kind::NegativeMoment => &[],
            Kind::Onsager => &["n-max", "layers-per-unit", "smooth-variance", "smooth-length", "smooth-modes"],
            Kind::MinDistIntegral => &["n-points"],
            Kind::MalliavinSmallball => &["eps-lo", "eps-hi", "eps-per-decade", "invariant-realizations"],
            Kind::SobolevSmallball => &["s", "eps-lo", "eps-hi", "eps-per-decade"],
            Kind::Density => &["bins", "range", "resolution-doubling"],
            Kind::DecompositionScan => &["gtilde", "symbol-alphas", "v", "w", "smoothstep-degree"],
        }
    }
}

impl fmt::Display for Kind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Kind {
    type Err = ConfigError;
    fn from_str(s: &str) -> Result<Self> {
        Kind::ALL.into_iter().find(|k| k.as_str() == s).ok_or_else(|| {
            let names: Vec<&str> = Kind::ALL.iter().map(|k| k.as_str()).collect();
            ConfigError::field("kind", format!("unknown kind `{s}`; expected one of {}", names.join(", ")))
        })
    }
}

const COMMON_KEYS: [&str; 12] = [
    "experiment-id",
    "kind",
    "dimension",
    "beta",
    "alpha",
    "delta",
    "n-modes",
    "grid-points",
    "mc-samples",
    "master-seed",
    "chains",
    "output-dir",
];

pub const DEFAULT_CHAINS: usize = 8;

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub experiment_id: String,
    pub kind: Kind,
    pub dimension: usize,
    /// single β or a ladder
    pub beta: Vec<f64>,
    /// single α or a list
    pub alpha: Vec<f64>,
    pub delta: Option<f64>,
    pub n_modes: Option<usize>,
    pub grid_points: Option<usize>,
    pub mc_samples: Option<usize>,
    pub master_seed: u64,
    pub chains: usize,
    pub output_dir: PathBuf,
    /// kind-specific keys, already checked against the allowed set
    pub extra: BTreeMap<String, String>,
    /// every key/value pair in file order, for the manifest
    pub entries: Vec<(String, String)>,
}

fn parse_value<T: FromStr>(key: &str, v: &str) -> Result<T>
where
    T::Err: fmt::Display,
{
    v.parse::<T>()
        .map_err(|e| ConfigError::field(key, format!("cannot parse `{v}`: {e}")))
}

pub fn parse_list<T: FromStr>(key: &str, v: &str) -> Result<Vec<T>>
where
    T::Err: fmt::Display,
{
    let items: Vec<&str> = v.split(',').map(str::trim).filter(|s| !s.is_empty()).collect();
    if items.is_empty() {
        return Err(ConfigError::field(key, "empty list"));
    }
    items.into_iter().map(|s| parse_value(key, s)).collect()
}

impl ExperimentConfig {
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| ConfigError::Read {
            path: path.to_path_buf(),
            reason: e.to_string(),
        })?;
        text.parse()
    }

    pub fn from_pairs<'a>(pairs: impl IntoIterator<Item = (&'a str, &'a str)>) -> Result<Self> {
        let text: String = pairs.into_iter().map(|(k, v)| format!("{k} = {v}\n")).collect();
        text.parse()
    }

    fn from_entries(entries: Vec<(String, String)>) -> Result<Self> {
        let map: BTreeMap<&str, &str> = entries.iter().map(|(k, v)| (k.as_str(), v.as_str())).collect();
        let required = |k: &str| map.get(k).copied().ok_or_else(|| ConfigError::field(k, "missing required key"));
        let kind: Kind = required("kind")?.parse()?;
        for k in map.keys() {
            if !COMMON_KEYS.contains(k) && !kind.extra_keys().contains(k) {
                return Err(ConfigError::field(k, format!("unknown key for kind {kind}")));
            }
        }
        let experiment_id = required("experiment-id")?.to_string();
        if experiment_id.is_empty() || !experiment_id.chars().all(|c| c.is_ascii_alphanumeric() || "-_.".contains(c)) {
            return Err(ConfigError::field("experiment-id", "use letters, digits, '-', '_' or '.'"));
        }
        let opt = |k: &str| map.get(k).copied();
        let dimension = opt("dimension").map(|v| parse_value("dimension", v)).transpose()?.unwrap_or(1);
        if !(dimension == 1 || dimension == 2) {
            return Err(ConfigError::field("dimension", format!("must be 1 or 2, got {dimension}")));
        }
        let chains = opt("chains").map(|v| parse_value("chains", v)).transpose()?.unwrap_or(DEFAULT_CHAINS);
        if chains == 0 {
            return Err(ConfigError::field("chains", "must be at least 1"));
        }
        let positive = |k: &str, v: Option<usize>| -> Result<Option<usize>> {
            match v {
                Some(0) => Err(ConfigError::field(k, "must be positive")),
                v => Ok(v),
            }
        };
        let cfg = Self {
            experiment_id,
            kind,
            dimension,
            beta: opt("beta").map(|v| parse_list("beta", v)).transpose()?.unwrap_or_default(),
            alpha: opt("alpha").map(|v| parse_list("alpha", v)).transpose()?.unwrap_or_default(),
            delta: opt("delta").map(|v| parse_value("delta", v)).transpose()?,
            n_modes: positive("n-modes", opt("n-modes").map(|v| parse_value("n-modes", v)).transpose()?)?,
            grid_points: positive("grid-points", opt("grid-points").map(|v| parse_value("grid-points", v)).transpose()?)?,
            mc_samples: positive("mc-samples", opt("mc-samples").map(|v| parse_value("mc-samples", v)).transpose()?)?,
            master_seed: parse_value("master-seed", required("master-seed")?)?,
            chains,
            output_dir: PathBuf::from(required("output-dir")?),
            extra: map
                .iter()
                .filter(|(k, _)| !COMMON_KEYS.contains(k))
                .map(|(k, v)| (k.to_string(), v.to_string()))
                .collect(),
            entries,
        };
        for (k, list) in [("beta", &cfg.beta), ("alpha", &cfg.alpha)] {
            if list.iter().any(|x| !x.is_finite()) {
                return Err(ConfigError::field(k, "values must be finite"));
            }
        }
        Ok(cfg)
    }

    pub fn single_beta(&self) -> Result<f64> {
        match self.beta.as_slice() {
            [b] => Ok(*b),
            [] => Err(ConfigError::field("beta", "missing required key")),
            _ => Err(ConfigError::field("beta", "this kind takes a single β")),
        }
    }

    pub fn require<T: Copy>(&self, key: &str, v: Option<T>) -> Result<T> {
        v.ok_or_else(|| ConfigError::field(key, "missing required key"))
    }

    pub fn extra_or<T: FromStr>(&self, key: &str, default: T) -> Result<T>
    where
        T::Err: fmt::Display,
    {
        self.extra.get(key).map(|v| parse_value(key, v)).transpose().map(|v| v.unwrap_or(default))
    }

    pub fn extra_list_or<T: FromStr>(&self, key: &str, default: Vec<T>) -> Result<Vec<T>>
    where
        T::Err: fmt::Display,
    {
        self.extra.get(key).map(|v| parse_list(key, v)).transpose().map(|v| v.unwrap_or(default))
    }

    /// Directory that holds this experiment's artifacts.
    pub fn artifact_dir(&self) -> PathBuf {
        self.output_dir.join(&self.experiment_id)
    }

    /// Same configuration with one key replaced or added.
    pub fn with(&self, key: &str, value: &str) -> Result<Self> {
        let mut entries = self.entries.clone();
        match entries.iter_mut().find(|(k, _)| k == key) {
            Some(e) => e.1 = value.to_string(),
            None => entries.push((key.to_string(), value.to_string())),
        }
        Self::from_entries(entries)
    }

    /// The file text that reproduces this configuration.
    pub fn to_text(&self) -> String {
        self.entries.iter().map(|(k, v)| format!("{k} = {v}\n")).collect()
    }
}

impl FromStr for ExperimentConfig {
    type Err = ConfigError;

    fn from_str(text: &str) -> Result<Self> {
        let mut entries: Vec<(String, String)> = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| ConfigError::Syntax {
                line: i + 1,
                reason: format!("expected `key = value`, got `{line}`"),
            })?;
            let (k, v) = (k.trim(), v.trim());
            if k.is_empty() || v.is_empty() {
                return Err(ConfigError::Syntax {
                    line: i + 1,
                    reason: "empty key or value".into(),
                });
            }
            if entries.iter().any(|(e, _)| e == k) {
                return Err(ConfigError::Syntax {
                    line: i + 1,
                    reason: format!("duplicate key `{k}`"),
                });
            }
            entries.push((k.to_string(), v.to_string()));
        }
        Self::from_entries(entries)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const BASE: &str = "experiment-id = fb\nkind = fb-moments\nbeta = 0.7\nn-modes = 64\nmc-samples = 100\nmaster-seed = 1\noutput-dir = /tmp/x\n";

    #[test]
    fn parses_base_config() {
        let c: ExperimentConfig = BASE.parse().unwrap();
        assert_eq!(c.kind, Kind::FbMoments);
        assert_eq!(c.beta, vec![0.7]);
        assert_eq!(c.chains, DEFAULT_CHAINS);
        assert_eq!(c.dimension, 1);
        assert_eq!(c.artifact_dir(), PathBuf::from("/tmp/x/fb"));
    }

    #[test]
    fn lists_comments_and_roundtrip() {
        let text = format!("{BASE}# ladder\nchains = 3 # trailing\n").replace("beta = 0.7", "beta = 0.8, 0.9,0.95");
        let c: ExperimentConfig = text.parse().unwrap();
        assert_eq!(c.beta, vec![0.8, 0.9, 0.95]);
        assert_eq!(c.chains, 3);
        let again: ExperimentConfig = c.to_text().parse().unwrap();
        assert_eq!(again, c);
    }

    #[test]
    fn field_level_errors() {
        let bad = |from: &str, to: &str| BASE.replace(from, to).parse::<ExperimentConfig>().unwrap_err();
        assert!(matches!(bad("kind = fb-moments", "kind = nope"), ConfigError::Field { key, .. } if key == "kind"));
        assert!(matches!(bad("master-seed = 1", "master-seed = -1"), ConfigError::Field { key, .. } if key == "master-seed"));
        assert!(matches!(bad("n-modes = 64", "n-modes = 0"), ConfigError::Field { key, .. } if key == "n-modes"));
        assert!(matches!(bad("n-modes = 64", "bins = 4"), ConfigError::Field { key, .. } if key == "bins"));
        assert!(matches!(bad("n-modes = 64", "n-modes 64"), ConfigError::Syntax { line: 4, .. }));
        assert!(matches!(bad("beta = 0.7", "beta = 0.7\nbeta = 0.8"), ConfigError::Syntax { .. }));
        assert!(matches!(bad("output-dir = /tmp/x\n", ""), ConfigError::Field { key, .. } if key == "output-dir"));
    }

    #[test]
    fn with_replaces_keys() {
        let c: ExperimentConfig = BASE.parse().unwrap();
        let d = c.with("chains", "64").unwrap();
        assert_eq!(d.chains, 64);
        assert_eq!(d.master_seed, c.master_seed);
        assert!(c.with("bogus", "1").is_err());
    }
}
