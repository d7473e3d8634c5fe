//! Run configuration: a TOML file of flat keys, overridden by flags.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub kernel: Option<String>,
    pub k_alpha: Option<f64>,
    /// `s,alpha` CSV for a tabulated kernel.
    pub table: Option<PathBuf>,
    pub table_support: Option<f64>,
    pub epsilon: Vec<f64>,
    pub domain: Option<[f64; 2]>,
    pub n: Option<usize>,
    pub tau: Option<f64>,
    pub constant_policy: Option<String>,
    pub boundary_tol: Option<f64>,
    pub strict: bool,
    pub tolerance: Option<f64>,
    pub input: Option<PathBuf>,
    pub function: Option<String>,
    pub output: Option<PathBuf>,
    pub sidecar: Option<PathBuf>,
    pub experiment: Option<String>,
    pub require: Vec<String>,
    pub window: Option<f64>,
    pub annihilation: Option<i64>,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::Usage(format!("bad config: {e}")))
    }

    /// Fields set in `other` replace those in `self`.
    pub fn merge(mut self, other: RunConfig) -> Self {
        macro_rules! take {
            ($($f:ident),*) => {$(
                if other.$f.is_some() {
                    self.$f = other.$f;
                }
            )*};
        }
        take!(
            kernel, k_alpha, table, table_support, domain, n, tau, constant_policy, boundary_tol, tolerance,
            input, function, output, sidecar, experiment, window, annihilation
        );
        if !other.epsilon.is_empty() {
            self.epsilon = other.epsilon;
        }
        if !other.require.is_empty() {
            self.require = other.require;
        }
        self.strict |= other.strict;
        self
    }
}

pub fn parse_domain(s: &str) -> Result<[f64; 2], String> {
    let parts: Vec<&str> = s.split(',').collect();
    if parts.len() != 2 {
        return Err(format!("domain must be `a,b`, got `{s}`"));
    }
    let a: f64 = parts[0].trim().parse().map_err(|_| format!("bad number `{}`", parts[0]))?;
    let b: f64 = parts[1].trim().parse().map_err(|_| format!("bad number `{}`", parts[1]))?;
    if !(a < b) {
        return Err(format!("domain needs a < b, got `{s}`"));
    }
    Ok([a, b])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flags_override_file() {
        let file = RunConfig::parse("kernel = \"sine\"\nepsilon = [0.5, 0.25]\nn = 128\ndomain = [-2.0, 2.0]\n").unwrap();
        let flags = RunConfig {
            kernel: Some("exponential".into()),
            ..Default::default()
        };
        let m = file.merge(flags);
        assert_eq!(m.kernel.as_deref(), Some("exponential"));
        assert_eq!(m.epsilon, vec![0.5, 0.25]);
        assert_eq!(m.n, Some(128));
        assert_eq!(m.domain, Some([-2.0, 2.0]));
    }

    #[test]
    fn unknown_keys_rejected() {
        assert!(RunConfig::parse("kernal = \"sine\"").is_err());
    }

    #[test]
    fn domain_parsing() {
        assert_eq!(parse_domain("-1, 2.5").unwrap(), [-1.0, 2.5]);
        assert!(parse_domain("2,1").is_err());
        assert!(parse_domain("1").is_err());
    }
}
