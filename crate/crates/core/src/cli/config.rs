//! Experiment configuration: JSON schema and validation.

use std::fs;
use std::path::{Path, PathBuf};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::disk::{geometric_depths, CircleGrid};
use crate::error::{Error, Result};
use crate::inner::InnerFunction;

/// Suites the runner knows about, in execution order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Suite {
    Gram,
    TtoVerify,
    TtoZero,
    TtoDefect,
    NiBuild,
    NiVerify,
    ProbeAdc,
    ProbeDichotomy,
    PaperExample,
}

impl Suite {
    pub fn name(&self) -> &'static str {
        match self {
            Suite::Gram => "gram",
            Suite::TtoVerify => "tto-verify",
            Suite::TtoZero => "tto-zero",
            Suite::TtoDefect => "tto-defect",
            Suite::NiBuild => "ni-build",
            Suite::NiVerify => "ni-verify",
            Suite::ProbeAdc => "probe-adc",
            Suite::ProbeDichotomy => "probe-dichotomy",
            Suite::PaperExample => "paper-example",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PairKindName {
    Trivial,
    PaperExample,
    Vanishing,
    Samples,
}

/// Raw pair section; which fields apply depends on `kind`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PairConfig {
    pub kind: PairKindName,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n1: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n2: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub zeta: Option<[f64; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub a: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub b: Option<PathBuf>,
    /// Multiplies `|a|² + |b|²` by this factor (scales both by its square root).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub perturb: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProbeConfig {
    #[serde(default = "default_zeta")]
    pub zeta: [f64; 2],
    #[serde(default = "default_apertures")]
    pub apertures: Vec<f64>,
    #[serde(default = "default_depth_q")]
    pub depth_q: f64,
    #[serde(default = "default_depth_count")]
    pub depth_count: usize,
    #[serde(default = "default_rays")]
    pub rays: usize,
}

fn default_zeta() -> [f64; 2] {
    [1.0, 0.0]
}
fn default_apertures() -> Vec<f64> {
    vec![2.0, 4.0]
}
fn default_depth_q() -> f64 {
    0.5
}
fn default_depth_count() -> usize {
    12
}
fn default_rays() -> usize {
    3
}

impl Default for ProbeConfig {
    fn default() -> Self {
        Self {
            zeta: default_zeta(),
            apertures: default_apertures(),
            depth_q: default_depth_q(),
            depth_count: default_depth_count(),
            rays: default_rays(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub inner: InnerFunction,
    pub pair: PairConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<usize>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub probe: ProbeConfig,
    pub suites: Vec<Suite>,
}

/// Validated pair choice.
#[derive(Debug, Clone, PartialEq)]
pub enum PairSpec {
    Trivial,
    PaperExample { n1: usize, n2: usize },
    Vanishing { zeta: Complex64 },
    Samples { a: PathBuf, b: PathBuf },
}

/// Configuration after validation, with paths resolved.
#[derive(Debug, Clone)]
pub struct ResolvedConfig {
    pub raw: ExperimentConfig,
    pub pair: PairSpec,
    pub perturb: Option<f64>,
    /// Grid requested by the config or the command line, if any.
    pub grid: Option<CircleGrid>,
    pub zeta: Complex64,
    pub depths: Vec<f64>,
}

fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}

impl ExperimentConfig {
    pub fn from_path(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)?;
        Ok(serde_json::from_str(&text)?)
    }

    /// Checks the schema-level constraints; relative sample paths are taken
    /// relative to `base`.
    pub fn resolve(mut self, base: &Path, grid_override: Option<usize>, seed_override: Option<u64>) -> Result<ResolvedConfig> {
        if let Some(seed) = seed_override {
            self.seed = seed;
        }
        if let Some(n) = grid_override {
            self.grid = Some(n);
        }
        if self.suites.is_empty() {
            return Err(invalid("no suites selected"));
        }
        self.suites.sort();
        self.suites.dedup();

        let grid = self.grid.map(CircleGrid::new).transpose()?;
        if let Some(g) = grid {
            if self.inner.is_finite_blaschke() {
                let policy = CircleGrid::for_max_modulus(self.inner.max_zero_modulus())?;
                if g.size() < policy.size() {
                    return Err(invalid(format!(
                        "grid {} is below the policy grid {} for these zeros",
                        g.size(),
                        policy.size()
                    )));
                }
            }
        }

        let p = &self.pair;
        let unexpected = |field: &str, present: bool| {
            if present {
                Err(invalid(format!("pair field `{field}` does not apply to this kind")))
            } else {
                Ok(())
            }
        };
        let pair = match p.kind {
            PairKindName::Trivial => {
                unexpected("n1/n2", p.n1.is_some() || p.n2.is_some())?;
                unexpected("zeta", p.zeta.is_some())?;
                unexpected("a/b", p.a.is_some() || p.b.is_some())?;
                PairSpec::Trivial
            }
            PairKindName::PaperExample => {
                unexpected("zeta", p.zeta.is_some())?;
                unexpected("a/b", p.a.is_some() || p.b.is_some())?;
                let (n1, n2) = match (p.n1, p.n2) {
                    (Some(n1), Some(n2)) => (n1, n2),
                    _ => return Err(invalid("paper_example needs n1 and n2")),
                };
                if n1 == 0 || n2 != 2 * n1 {
                    return Err(Error::SubsetViolation { n1, n2 });
                }
                PairSpec::PaperExample { n1, n2 }
            }
            PairKindName::Vanishing => {
                unexpected("n1/n2", p.n1.is_some() || p.n2.is_some())?;
                unexpected("a/b", p.a.is_some() || p.b.is_some())?;
                let z = p.zeta.ok_or_else(|| invalid("vanishing needs zeta"))?;
                let zeta = Complex64::new(z[0], z[1]);
                if (zeta.norm() - 1.0).abs() > 1e-12 {
                    return Err(invalid("vanishing zeta must be unimodular"));
                }
                PairSpec::Vanishing { zeta }
            }
            PairKindName::Samples => {
                unexpected("n1/n2", p.n1.is_some() || p.n2.is_some())?;
                unexpected("zeta", p.zeta.is_some())?;
                let (a, b) = match (&p.a, &p.b) {
                    (Some(a), Some(b)) => (base.join(a), base.join(b)),
                    _ => return Err(invalid("samples needs paths a and b")),
                };
                PairSpec::Samples { a, b }
            }
        };
        if let Some(s) = p.perturb {
            if !(s.is_finite() && s > 0.0) {
                return Err(invalid("perturb must be positive"));
            }
        }
        if self.suites.contains(&Suite::PaperExample) && !matches!(pair, PairSpec::PaperExample { .. }) {
            return Err(invalid("suite paper-example needs pair kind paper_example"));
        }

        let pr = &self.probe;
        let zeta = Complex64::new(pr.zeta[0], pr.zeta[1]);
        if (zeta.norm() - 1.0).abs() > 1e-12 {
            return Err(invalid("probe zeta must be unimodular"));
        }
        if pr.apertures.is_empty() || pr.apertures.iter().any(|&a| !(a > 1.0)) {
            return Err(invalid("apertures must be non-empty and each > 1"));
        }
        if pr.rays == 0 {
            return Err(invalid("rays must be at least 1"));
        }
        if pr.depth_count < 3 {
            return Err(invalid("depth_count must be at least 3"));
        }
        let depths = geometric_depths(pr.depth_q, pr.depth_count)?;
        if 1.0 - depths[depths.len() - 1] < crate::disk::MIN_GAP {
            return Err(invalid("depth schedule comes closer to the circle than 1e-13"));
        }

        Ok(ResolvedConfig {
            perturb: p.perturb,
            pair,
            grid,
            zeta,
            depths,
            raw: self,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str) -> Result<ResolvedConfig> {
        let cfg: ExperimentConfig = serde_json::from_str(text)?;
        cfg.resolve(Path::new("."), None, None)
    }

    #[test]
    fn minimal_config() {
        let r = parse(r#"{"inner": {"zeros": [[0,0],[0,0]]}, "pair": {"kind": "trivial"}, "suites": ["tto-verify"]}"#).unwrap();
        assert_eq!(r.pair, PairSpec::Trivial);
        assert_eq!(r.raw.seed, 0);
        assert_eq!(r.depths.len(), 12);
    }

    #[test]
    fn rejects_bad_configs() {
        let bad = [
            r#"{"inner": {"zeros": []}, "pair": {"kind": "trivial"}, "suites": []}"#,
            r#"{"inner": {}, "pair": {"kind": "paper_example", "n1": 2, "n2": 3}, "suites": ["gram"]}"#,
            r#"{"inner": {}, "pair": {"kind": "trivial"}, "suites": ["paper-example"]}"#,
            r#"{"inner": {}, "pair": {"kind": "trivial"}, "suites": ["nope"]}"#,
            r#"{"inner": {}, "pair": {"kind": "trivial", "zeta": [1,0]}, "suites": ["gram"]}"#,
            r#"{"inner": {}, "pair": {"kind": "trivial"}, "suites": ["gram"], "extra": 1}"#,
            r#"{"inner": {}, "pair": {"kind": "trivial"}, "grid": 100, "suites": ["gram"]}"#,
            r#"{"inner": {"zeros": [[0.99, 0]]}, "pair": {"kind": "trivial"}, "grid": 64, "suites": ["gram"]}"#,
            r#"{"inner": {}, "pair": {"kind": "trivial", "perturb": -1}, "suites": ["gram"]}"#,
            r#"{"inner": {}, "pair": {"kind": "trivial"}, "probe": {"apertures": [0.5]}, "suites": ["gram"]}"#,
            r#"{"inner": {"zeros": [[1.5, 0]]}, "pair": {"kind": "trivial"}, "suites": ["gram"]}"#,
        ];
        for text in bad {
            assert!(parse(text).is_err(), "accepted {text}");
        }
    }
}
