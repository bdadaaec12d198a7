use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::DEFAULT_EPSILON;
use crate::robustness::ContaminationKind;

/// Top-level experiment file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub seed: u64,
    pub replicates: usize,
    #[serde(default = "default_epsilon")]
    pub epsilon: f64,
    pub experiment: ExperimentSpec,
}

fn default_epsilon() -> f64 {
    DEFAULT_EPSILON
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ExperimentSpec {
    EigengapSweep {
        p: usize,
        r: usize,
        n: usize,
        k: usize,
        eigengaps: Vec<f64>,
        methods: Vec<Method>,
    },
    BadnodeFraction {
        p: usize,
        r: usize,
        n: usize,
        k: usize,
        eigengap: f64,
        contamination: ContaminationKind,
        severity: f64,
        fractions: Vec<f64>,
        #[serde(default)]
        shared_direction: bool,
        methods: Vec<Method>,
    },
    BadnodeSeverity {
        p: usize,
        r: usize,
        n: usize,
        k: usize,
        eigengap: f64,
        contamination: ContaminationKind,
        fraction: f64,
        severities: Vec<f64>,
        #[serde(default)]
        shared_direction: bool,
        methods: Vec<Method>,
    },
    OracleCovariance {
        p: usize,
        r: usize,
        ratios: Vec<f64>,
        rhos: Vec<f64>,
        alphas: Vec<f64>,
        mc_samples: usize,
        k: usize,
    },
    RegimeStudy {
        p: usize,
        r: usize,
        #[serde(default = "one")]
        alpha: f64,
        /// First coordinate of the injected bias vector `a`.
        bias: f64,
        regimes: Vec<Regime>,
    },
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Regime {
    pub name: String,
    pub k: usize,
    pub b: usize,
    /// Overrides the top-level replicate count.
    #[serde(default)]
    pub replicates: Option<usize>,
}

impl ExperimentSpec {
    pub fn name(&self) -> &'static str {
        match self {
            ExperimentSpec::EigengapSweep { .. } => "eigengap-sweep",
            ExperimentSpec::BadnodeFraction { .. } => "badnode-fraction",
            ExperimentSpec::BadnodeSeverity { .. } => "badnode-severity",
            ExperimentSpec::OracleCovariance { .. } => "oracle-covariance",
            ExperimentSpec::RegimeStudy { .. } => "regime-study",
        }
    }
}

fn nonempty<T>(field: &str, v: &[T]) -> Result<()> {
    if v.is_empty() {
        return Err(Error::Config(format!("experiment.{field}: must not be empty")));
    }
    Ok(())
}

fn shape(p: usize, r: usize, n: usize, k: usize) -> Result<()> {
    if r == 0 || r >= p {
        return Err(Error::Config(format!("experiment.r: need 1 <= r < p (p={p}, r={r})")));
    }
    if k == 0 || n / k < r + 1 {
        return Err(Error::Config(format!("experiment.k: n={n} cannot feed K={k} nodes of at least r+1 rows")));
    }
    Ok(())
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.replicates == 0 {
            return Err(Error::Config("replicates: must be at least 1".into()));
        }
        if !(self.epsilon > 0.0 && self.epsilon < 1.0) {
            return Err(Error::Config("epsilon: must lie in (0,1)".into()));
        }
        match &self.experiment {
            ExperimentSpec::EigengapSweep { p, r, n, k, eigengaps, methods } => {
                shape(*p, *r, *n, *k)?;
                nonempty("eigengaps", eigengaps)?;
                nonempty("methods", methods)?;
                if eigengaps.iter().any(|g| !(*g > 0.0)) {
                    return Err(Error::Config("experiment.eigengaps: values must be positive".into()));
                }
            }
            ExperimentSpec::BadnodeFraction { p, r, n, k, fractions, methods, eigengap, .. } => {
                shape(*p, *r, *n, *k)?;
                nonempty("fractions", fractions)?;
                nonempty("methods", methods)?;
                if !(*eigengap > 0.0) {
                    return Err(Error::Config("experiment.eigengap: must be positive".into()));
                }
            }
            ExperimentSpec::BadnodeSeverity { p, r, n, k, severities, methods, eigengap, .. } => {
                shape(*p, *r, *n, *k)?;
                nonempty("severities", severities)?;
                nonempty("methods", methods)?;
                if !(*eigengap > 0.0) {
                    return Err(Error::Config("experiment.eigengap: must be positive".into()));
                }
            }
            ExperimentSpec::OracleCovariance { p, r, ratios, rhos, alphas, mc_samples, k } => {
                if *r == 0 || r >= p {
                    return Err(Error::Config("experiment.r: need 1 <= r < p".into()));
                }
                nonempty("ratios", ratios)?;
                nonempty("rhos", rhos)?;
                nonempty("alphas", alphas)?;
                if *mc_samples == 0 || *k == 0 {
                    return Err(Error::Config("experiment.mc_samples and experiment.k must be positive".into()));
                }
                if ratios.iter().any(|x| !(*x > 0.0)) || rhos.iter().any(|x| !(x.abs() < 1.0)) {
                    return Err(Error::Config("experiment.ratios must be positive and |rho| < 1".into()));
                }
            }
            ExperimentSpec::RegimeStudy { p, r, regimes, .. } => {
                if *r == 0 || r >= p {
                    return Err(Error::Config("experiment.r: need 1 <= r < p".into()));
                }
                nonempty("regimes", regimes)?;
                if regimes.iter().any(|g| g.k == 0 || g.b == 0 || g.replicates == Some(0)) {
                    return Err(Error::Config("experiment.regimes: k, b and replicates must be positive".into()));
                }
            }
        }
        Ok(())
    }
}

/// Estimator compared in a sweep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum Method {
    FullPca,
    RandomSubset,
    ProjectorAverage,
    MomFixed(f64),
    MomRpca,
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Method::FullPca => f.write_str("full-pca"),
            Method::RandomSubset => f.write_str("random-subset"),
            Method::ProjectorAverage => f.write_str("projector-average"),
            Method::MomFixed(a) => write!(f, "mom-fixed:{a}"),
            Method::MomRpca => f.write_str("mom-rpca"),
        }
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "full-pca" => Method::FullPca,
            "random-subset" => Method::RandomSubset,
            "projector-average" => Method::ProjectorAverage,
            "mom-rpca" => Method::MomRpca,
            other => {
                let alpha = other
                    .strip_prefix("mom-fixed:")
                    .and_then(|a| a.parse::<f64>().ok())
                    .filter(|a| *a > 0.0 && *a < 2.0)
                    .ok_or_else(|| Error::Config(format!("unknown method {other:?}")))?;
                Method::MomFixed(alpha)
            }
        })
    }
}

impl TryFrom<String> for Method {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<Method> for String {
    fn from(m: Method) -> String {
        m.to_string()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn method_names_roundtrip() {
        for m in [Method::FullPca, Method::RandomSubset, Method::ProjectorAverage, Method::MomFixed(1.75), Method::MomRpca] {
            assert_eq!(m.to_string().parse::<Method>().unwrap(), m);
        }
        assert!("mom-fixed:2.5".parse::<Method>().is_err());
    }

    #[test]
    fn schema_errors_name_fields() {
        let text = r#"
seed = 1
replicates = 2
[experiment]
kind = "eigengap-sweep"
p = 5
r = 1
n = 100
k = 4
eigengaps = []
methods = ["full-pca"]
"#;
        let e = ExperimentConfig::from_toml(text).unwrap_err().to_string();
        assert!(e.contains("experiment.eigengaps"), "{e}");
        let e = ExperimentConfig::from_toml(&text.replace("kind = \"eigengap-sweep\"", "kind = \"nope\""))
            .unwrap_err()
            .to_string();
        assert!(e.contains("nope") || e.contains("kind"), "{e}");
    }
}
