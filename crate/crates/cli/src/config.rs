//! `key = value` run configuration with `#` comments.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use homolab::experiments::MeshRule;
use homolab::FieldKind;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum ConfigError {
    #[error("cannot read {path}: {msg}")]
    Io { path: String, msg: String },
    #[error("line {line}: {msg}")]
    Line { line: usize, msg: String },
    #[error("missing required key `{0}`")]
    Missing(&'static str),
    #[error("{0}")]
    Invalid(String),
}

/// Which operators the `eig` command solves.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EigOperator {
    Homogenized,
    Oscillating,
    Both,
}

/// How the domain mesh is chosen.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MeshRuleKey {
    Fixed,
    EpsOver16,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub coeff_kind: FieldKind,
    pub coeff_mu: f64,
    pub coeff_r: f64,
    /// Declared ellipticity constant, checked against the sampled one.
    pub coeff_kappa: Option<f64>,
    pub mesh_n: usize,
    pub mesh_rule: MeshRuleKey,
    pub cell_n: usize,
    pub eig_count: usize,
    pub eig_tol: f64,
    pub eig_max_iter: usize,
    pub eig_seed: u64,
    pub eig_operator: EigOperator,
    pub eps_list: Vec<f64>,
    pub k_max: usize,
    pub output_dir: PathBuf,
    pub seed: u64,
    pub jobs: usize,
    pub scan_eps2_lambda_min: f64,
    pub scan_eps2_lambda_max: f64,
    pub layer_c: f64,
    pub certify_samples: usize,
    pub tol: f64,
}

const KEYS: &[&str] = &[
    "coeff.kind",
    "coeff.mu",
    "coeff.r",
    "coeff.kappa",
    "mesh.n",
    "mesh.rule",
    "cell.n",
    "eig.count",
    "eig.tol",
    "eig.max_iter",
    "eig.seed",
    "eig.operator",
    "eps_list",
    "k_max",
    "output_dir",
    "seed",
    "jobs",
    "scan.eps2_lambda_min",
    "scan.eps2_lambda_max",
    "layer.c",
    "certify.samples",
    "solve.tol",
];

pub const DEFAULT_SEED: u64 = 20_240_611;

/// A real literal or a ratio `p/q`.
pub fn parse_real(s: &str) -> Result<f64, String> {
    let s = s.trim();
    let v = match s.split_once('/') {
        Some((p, q)) => {
            let p: f64 = p.trim().parse().map_err(|_| format!("`{s}` is not a number or ratio"))?;
            let q: f64 = q.trim().parse().map_err(|_| format!("`{s}` is not a number or ratio"))?;
            if q == 0.0 {
                return Err(format!("`{s}` divides by zero"));
            }
            p / q
        }
        None => s.parse().map_err(|_| format!("`{s}` is not a number"))?,
    };
    if v.is_finite() {
        Ok(v)
    } else {
        Err(format!("`{s}` is not finite"))
    }
}

impl RunConfig {
    pub fn from_file(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ConfigError::Io { path: path.display().to_string(), msg: e.to_string() })?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut raw: BTreeMap<&str, (usize, &str)> = BTreeMap::new();
        for (idx, line) in text.lines().enumerate() {
            let lineno = idx + 1;
            let body = line.split('#').next().unwrap_or("").trim();
            if body.is_empty() {
                continue;
            }
            let Some((k, v)) = body.split_once('=') else {
                return Err(ConfigError::Line { line: lineno, msg: format!("expected `key = value`, got `{body}`") });
            };
            let (k, v) = (k.trim(), v.trim());
            if !KEYS.contains(&k) {
                return Err(ConfigError::Line { line: lineno, msg: format!("unknown key `{k}`") });
            }
            if v.is_empty() {
                return Err(ConfigError::Line { line: lineno, msg: format!("key `{k}` has no value") });
            }
            if raw.insert(k, (lineno, v)).is_some() {
                return Err(ConfigError::Line { line: lineno, msg: format!("key `{k}` given twice") });
            }
        }

        fn get<T>(
            raw: &BTreeMap<&str, (usize, &str)>,
            key: &str,
            default: T,
            parse: impl Fn(&str) -> Result<T, String>,
        ) -> Result<T, ConfigError> {
            match raw.get(key) {
                None => Ok(default),
                Some(&(line, v)) => parse(v).map_err(|m| ConfigError::Line { line, msg: format!("{key}: {m}") }),
            }
        }
        let real = |s: &str| parse_real(s);
        let positive = |s: &str| parse_real(s).and_then(|v| if v > 0.0 { Ok(v) } else { Err(format!("`{s}` must be positive")) });
        let count = |s: &str| s.parse::<usize>().map_err(|_| format!("`{s}` is not a non-negative integer"));
        let u64_ = |s: &str| s.parse::<u64>().map_err(|_| format!("`{s}` is not an unsigned integer"));

        let coeff_kind = match raw.get("coeff.kind") {
            None => return Err(ConfigError::Missing("coeff.kind")),
            Some(&(line, v)) => v.parse::<FieldKind>().map_err(|e| ConfigError::Line { line, msg: format!("coeff.kind: {e}") })?,
        };
        if coeff_kind == FieldKind::Custom {
            let line = raw["coeff.kind"].0;
            return Err(ConfigError::Line { line, msg: "coeff.kind: custom fields cannot be built from a config file".into() });
        }
        let seed = get(&raw, "seed", DEFAULT_SEED, u64_)?;
        let mesh_rule = get(&raw, "mesh.rule", MeshRuleKey::EpsOver16, |s| match s {
            "fixed" => Ok(MeshRuleKey::Fixed),
            "eps_over_16" => Ok(MeshRuleKey::EpsOver16),
            _ => Err(format!("`{s}` is not one of fixed, eps_over_16")),
        })?;
        let eig_operator = get(&raw, "eig.operator", EigOperator::Both, |s| match s {
            "homogenized" => Ok(EigOperator::Homogenized),
            "oscillating" => Ok(EigOperator::Oscillating),
            "both" => Ok(EigOperator::Both),
            _ => Err(format!("`{s}` is not one of homogenized, oscillating, both")),
        })?;
        let eps_list = get(&raw, "eps_list", vec![1.0 / 8.0, 1.0 / 16.0, 1.0 / 32.0, 1.0 / 64.0], |s| {
            let v: Vec<f64> = s.split(',').map(positive).collect::<Result<_, _>>()?;
            if v.windows(2).any(|w| w[1] >= w[0]) {
                return Err("values must be strictly decreasing".into());
            }
            Ok(v)
        })?;

        let cfg = RunConfig {
            coeff_kind,
            coeff_mu: get(&raw, "coeff.mu", 1.0, positive)?,
            coeff_r: get(&raw, "coeff.r", 0.5, real)?,
            coeff_kappa: get(&raw, "coeff.kappa", None, |s| positive(s).map(Some))?,
            mesh_n: get(&raw, "mesh.n", 128, count)?,
            mesh_rule,
            cell_n: get(&raw, "cell.n", 256, count)?,
            eig_count: get(&raw, "eig.count", 20, count)?,
            eig_tol: get(&raw, "eig.tol", 1e-9, positive)?,
            eig_max_iter: get(&raw, "eig.max_iter", 200, count)?,
            eig_seed: get(&raw, "eig.seed", seed, u64_)?,
            eig_operator,
            eps_list,
            k_max: get(&raw, "k_max", 20, count)?,
            output_dir: get(&raw, "output_dir", PathBuf::from("out"), |s| Ok(PathBuf::from(s)))?,
            seed,
            jobs: get(&raw, "jobs", 1, count)?,
            scan_eps2_lambda_min: get(&raw, "scan.eps2_lambda_min", 0.1, real)?,
            scan_eps2_lambda_max: get(&raw, "scan.eps2_lambda_max", 4.0, positive)?,
            layer_c: get(&raw, "layer.c", 1.0, positive)?,
            certify_samples: get(&raw, "certify.samples", 64, count)?,
            tol: get(&raw, "solve.tol", 1e-9, positive)?,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    fn validate(&self) -> Result<(), ConfigError> {
        let bad = |m: String| Err(ConfigError::Invalid(m));
        if self.mesh_n < 4 || self.mesh_n % 4 != 0 {
            return bad(format!("mesh.n = {} must be a positive multiple of 4", self.mesh_n));
        }
        if self.cell_n < 2 {
            return bad(format!("cell.n = {} must be at least 2", self.cell_n));
        }
        if self.eig_count == 0 || self.k_max == 0 {
            return bad("eig.count and k_max must be positive".into());
        }
        if self.jobs == 0 {
            return bad("jobs must be positive".into());
        }
        if self.scan_eps2_lambda_min < 0.0 || self.scan_eps2_lambda_min >= self.scan_eps2_lambda_max {
            return bad("scan.eps2_lambda_min must be non-negative and below scan.eps2_lambda_max".into());
        }
        if self.certify_samples < 2 {
            return bad("certify.samples must be at least 2".into());
        }
        Ok(())
    }

    pub fn mesh_rule(&self) -> MeshRule {
        match self.mesh_rule {
            MeshRuleKey::Fixed => MeshRule::Fixed(self.mesh_n),
            MeshRuleKey::EpsOver16 => MeshRule::EpsOver(16),
        }
    }

    /// Every key with its effective value, one `key = value` line each.
    pub fn resolved(&self) -> String {
        let mut s = String::new();
        let list: Vec<String> = self.eps_list.iter().map(|e| format!("{e:.16e}")).collect();
        let _ = writeln!(s, "coeff.kind = {}", self.coeff_kind);
        let _ = writeln!(s, "coeff.mu = {:.16e}", self.coeff_mu);
        let _ = writeln!(s, "coeff.r = {:.16e}", self.coeff_r);
        match self.coeff_kappa {
            Some(k) => {
                let _ = writeln!(s, "coeff.kappa = {k:.16e}");
            }
            None => {
                let _ = writeln!(s, "# coeff.kappa not declared");
            }
        }
        let _ = writeln!(s, "mesh.n = {}", self.mesh_n);
        let _ = writeln!(
            s,
            "mesh.rule = {}",
            match self.mesh_rule {
                MeshRuleKey::Fixed => "fixed",
                MeshRuleKey::EpsOver16 => "eps_over_16",
            }
        );
        let _ = writeln!(s, "cell.n = {}", self.cell_n);
        let _ = writeln!(s, "eig.count = {}", self.eig_count);
        let _ = writeln!(s, "eig.tol = {:e}", self.eig_tol);
        let _ = writeln!(s, "eig.max_iter = {}", self.eig_max_iter);
        let _ = writeln!(s, "eig.seed = {}", self.eig_seed);
        let _ = writeln!(
            s,
            "eig.operator = {}",
            match self.eig_operator {
                EigOperator::Homogenized => "homogenized",
                EigOperator::Oscillating => "oscillating",
                EigOperator::Both => "both",
            }
        );
        let _ = writeln!(s, "eps_list = {}", list.join(","));
        let _ = writeln!(s, "k_max = {}", self.k_max);
        let _ = writeln!(s, "output_dir = {}", self.output_dir.display());
        let _ = writeln!(s, "seed = {}", self.seed);
        let _ = writeln!(s, "jobs = {}", self.jobs);
        let _ = writeln!(s, "scan.eps2_lambda_min = {:.16e}", self.scan_eps2_lambda_min);
        let _ = writeln!(s, "scan.eps2_lambda_max = {:.16e}", self.scan_eps2_lambda_max);
        let _ = writeln!(s, "layer.c = {:.16e}", self.layer_c);
        let _ = writeln!(s, "certify.samples = {}", self.certify_samples);
        let _ = writeln!(s, "solve.tol = {:e}", self.tol);
        s
    }
}
