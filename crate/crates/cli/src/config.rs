//! Run configuration: JSON file values overlaid with command-line flags.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;

use epp_core::{Aggregation, InputSp, NetId, Netlist, SerConfig, SpMethod};
use serde::Deserialize;

pub const DEFAULT_VECTORS: u64 = 10_000;
pub const DEFAULT_SEED: u64 = 1;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum SpMethodArg {
    #[default]
    Independent,
    Montecarlo,
    Exact,
}

impl From<SpMethodArg> for SpMethod {
    fn from(m: SpMethodArg) -> Self {
        match m {
            SpMethodArg::Independent => SpMethod::Independent,
            SpMethodArg::Montecarlo => SpMethod::MonteCarlo,
            SpMethodArg::Exact => SpMethod::Exact,
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum AggregationArg {
    #[default]
    Any,
    Max,
}

impl From<AggregationArg> for Aggregation {
    fn from(a: AggregationArg) -> Self {
        match a {
            AggregationArg::Any => Aggregation::Any,
            AggregationArg::Max => Aggregation::Max,
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

/// Contents of a `--config` file. Per-net maps are keyed by net name.
#[derive(Clone, Debug, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    #[serde(default)]
    pub input_sp: BTreeMap<String, f64>,
    pub default_input_sp: Option<f64>,
    pub default_state_sp: Option<f64>,
    #[serde(default)]
    pub r_seu: BTreeMap<String, f64>,
    #[serde(default)]
    pub p_latched: BTreeMap<String, f64>,
    pub default_r_seu: Option<f64>,
    pub default_p_latched: Option<f64>,
    pub sp_method: Option<SpMethodArg>,
    pub aggregation: Option<AggregationArg>,
    pub vectors: Option<u64>,
    pub seed: Option<u64>,
    pub sites: Option<Vec<String>>,
    pub format: Option<Format>,
    pub jobs: Option<usize>,
}

impl ConfigFile {
    pub fn load(path: &Path) -> Result<ConfigFile, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ConfigError(format!("cannot read config {}: {e}", path.display())))?;
        Self::from_json(&text).map_err(|e| ConfigError(format!("{}: {}", path.display(), e.0)))
    }

    pub fn from_json(text: &str) -> Result<ConfigFile, ConfigError> {
        serde_json::from_str(text).map_err(|e| ConfigError(format!("invalid config: {e}")))
    }
}

/// Flag values; `None` leaves the file value (or the default) in place.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Overrides {
    pub sp_method: Option<SpMethodArg>,
    pub aggregation: Option<AggregationArg>,
    pub vectors: Option<u64>,
    pub seed: Option<u64>,
    pub sites: Option<Vec<String>>,
    pub format: Option<Format>,
    pub jobs: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ConfigError(pub String);

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for ConfigError {}

/// Fully resolved settings for one run against one netlist.
#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub sp_method: SpMethod,
    pub input_sp: InputSp,
    pub ser: SerConfig,
    /// `None` when neither the file nor a flag set it.
    pub vectors: Option<u64>,
    pub seed: u64,
    /// `None` means every net.
    pub sites: Option<Vec<NetId>>,
    pub format: Format,
    pub jobs: Option<usize>,
}

impl RunConfig {
    pub fn resolve(file: &ConfigFile, flags: &Overrides, netlist: &Netlist) -> Result<RunConfig, ConfigError> {
        let lookup = |name: &str, what: &str| {
            netlist
                .find(name)
                .ok_or_else(|| ConfigError(format!("{what}: no net named `{name}` in {}", netlist.name())))
        };
        let mut input_sp = InputSp::default();
        input_sp.set_default_input(Some(file.default_input_sp.unwrap_or(0.5)));
        input_sp.set_default_state(Some(file.default_state_sp.unwrap_or(0.5)));
        for (name, &p) in &file.input_sp {
            input_sp.set(lookup(name, "input_sp")?, p);
        }
        input_sp.resolve(netlist).map_err(|e| ConfigError(format!("input_sp: {}", named(netlist, &e.to_string()))))?;

        let mut ser = SerConfig {
            default_r_seu: file.default_r_seu.unwrap_or(1.0),
            default_p_latched: file.default_p_latched.unwrap_or(1.0),
            aggregation: flags.aggregation.or(file.aggregation).unwrap_or_default().into(),
            ..SerConfig::default()
        };
        for (name, &r) in &file.r_seu {
            ser.r_seu.insert(lookup(name, "r_seu")?, r);
        }
        for (name, &p) in &file.p_latched {
            ser.p_latched.insert(lookup(name, "p_latched")?, p);
        }
        ser.validate(netlist).map_err(|e| ConfigError(named(netlist, &e.to_string())))?;

        let vectors = flags.vectors.or(file.vectors);
        if vectors == Some(0) {
            return Err(ConfigError("vectors must be at least 1".into()));
        }
        let jobs = flags.jobs.or(file.jobs);
        if jobs == Some(0) {
            return Err(ConfigError("jobs must be at least 1".into()));
        }
        let sites = match flags.sites.as_ref().or(file.sites.as_ref()) {
            None => None,
            Some(list) if list.len() == 1 && list[0] == "all" => None,
            Some(list) => {
                let mut ids = Vec::with_capacity(list.len());
                for name in list {
                    let id = lookup(name, "sites")?;
                    if !ids.contains(&id) {
                        ids.push(id);
                    }
                }
                Some(ids)
            }
        };
        Ok(RunConfig {
            sp_method: flags.sp_method.or(file.sp_method).unwrap_or_default().into(),
            input_sp,
            ser,
            vectors,
            seed: flags.seed.or(file.seed).unwrap_or(DEFAULT_SEED),
            sites,
            format: flags.format.or(file.format).unwrap_or_default(),
            jobs,
        })
    }

    /// Selected sites, in net id order when no explicit list was given.
    pub fn site_list(&self, netlist: &Netlist) -> Vec<NetId> {
        match &self.sites {
            Some(s) => s.clone(),
            None => netlist.nets().collect(),
        }
    }
}

/// Replaces `n<id>` tokens in core error messages with net names.
pub fn named(netlist: &Netlist, message: &str) -> String {
    let mut out = String::with_capacity(message.len());
    for (i, word) in message.split(' ').enumerate() {
        if i > 0 {
            out.push(' ');
        }
        let replaced = word
            .strip_prefix('n')
            .and_then(|d| d.parse::<usize>().ok())
            .filter(|&d| d < netlist.net_count())
            .map(|d| format!("`{}`", netlist.net_name(NetId::new(d))));
        out.push_str(replaced.as_deref().unwrap_or(word));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bench::parse_bench;

    fn and2() -> Netlist {
        parse_bench("INPUT(A)\nINPUT(B)\nOUTPUT(Y)\nY = AND(A, B)", "and2").unwrap()
    }

    #[test]
    fn defaults() {
        let n = and2();
        let cfg = RunConfig::resolve(&ConfigFile::default(), &Overrides::default(), &n).unwrap();
        assert_eq!(cfg.sp_method, SpMethod::Independent);
        assert_eq!(cfg.input_sp.resolve(&n).unwrap(), [0.5, 0.5]);
        assert_eq!(cfg.ser, SerConfig::default());
        assert_eq!((cfg.vectors, cfg.seed, cfg.sites.clone()), (None, DEFAULT_SEED, None));
        assert_eq!(cfg.format, Format::Csv);
    }

    #[test]
    fn file_then_flags() {
        let n = and2();
        let file = ConfigFile::from_json(
            r#"{"input_sp": {"A": 0.9}, "default_input_sp": 0.2, "r_seu": {"Y": 3.0},
                "sp_method": "exact", "vectors": 50, "seed": 7, "sites": ["B", "A"], "aggregation": "max"}"#,
        )
        .unwrap();
        let flags = Overrides { seed: Some(9), sp_method: Some(SpMethodArg::Montecarlo), ..Overrides::default() };
        let cfg = RunConfig::resolve(&file, &flags, &n).unwrap();
        assert_eq!(cfg.input_sp.resolve(&n).unwrap(), [0.9, 0.2]);
        assert_eq!(cfg.ser.r_seu_of(n.find("Y").unwrap()), 3.0);
        assert_eq!(cfg.ser.aggregation, Aggregation::Max);
        assert_eq!(cfg.sp_method, SpMethod::MonteCarlo);
        assert_eq!((cfg.vectors, cfg.seed), (Some(50), 9));
        assert_eq!(cfg.site_list(&n), [n.find("B").unwrap(), n.find("A").unwrap()]);
    }

    #[test]
    fn rejects_bad_values() {
        let n = and2();
        assert!(ConfigFile::from_json(r#"{"sp_method": "bdd"}"#).is_err());
        assert!(ConfigFile::from_json(r#"{"unknown_key": 1}"#).is_err());
        let resolve = |json: &str| RunConfig::resolve(&ConfigFile::from_json(json).unwrap(), &Overrides::default(), &n);
        let e = resolve(r#"{"input_sp": {"Y": 0.5}}"#).unwrap_err();
        assert_eq!(e.0, "input_sp: `Y` is not a primary input or flip-flop output");
        assert!(resolve(r#"{"input_sp": {"A": 1.5}}"#).is_err());
        assert!(resolve(r#"{"input_sp": {"Q": 0.5}}"#).unwrap_err().0.contains("`Q`"));
        assert!(resolve(r#"{"default_r_seu": -1}"#).is_err());
        assert!(resolve(r#"{"p_latched": {"A": 2}}"#).is_err());
        assert!(resolve(r#"{"vectors": 0}"#).is_err());
        assert!(resolve(r#"{"sites": ["nope"]}"#).is_err());
        assert_eq!(resolve(r#"{"sites": ["all"]}"#).unwrap().sites, None);
    }
}
