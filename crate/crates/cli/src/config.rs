//! Run parameters: command-line flags over an optional `key=value` file over
//! per-command defaults.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::Args;

use crate::CliError;

/// Keys accepted in a config file. Flag `--foo-bar` corresponds to key `foo_bar`.
pub const KEYS: &[&str] = &[
    "t_f",
    "theta0",
    "thetaf",
    "h_over_h0",
    "mode",
    "omega0",
    "omegaf",
    "omega0_tf",
    "kappa",
    "n",
    "seed",
    "steps",
    "dt",
    "s_max",
    "points",
    "half_width",
    "field",
    "ansatz",
    "objective",
    "tol",
    "out_dir",
];

/// Flags shared by every run-type subcommand. Unset flags fall back to the
/// config file, then to the subcommand default.
#[derive(Debug, Clone, Default, Args)]
pub struct Params {
    /// Plain-text `key=value` file; `#` starts a comment.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Protocol duration.
    #[arg(long)]
    pub t_f: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub theta0: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub thetaf: Option<f64>,
    /// Constant field in units of the threshold `3|Δθ|/(2 t_f)`.
    #[arg(long)]
    pub h_over_h0: Option<f64>,
    /// Two-level design: `field` (constant h) or `y-axis`.
    #[arg(long)]
    pub mode: Option<String>,
    #[arg(long)]
    pub omega0: Option<f64>,
    #[arg(long)]
    pub omegaf: Option<f64>,
    /// Sets `t_f = omega0_tf / omega0` when given.
    #[arg(long)]
    pub omega0_tf: Option<f64>,
    #[arg(long)]
    pub kappa: Option<f64>,
    /// Matrix size or chain length.
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Time-grid steps (at least 100).
    #[arg(long)]
    pub steps: Option<usize>,
    /// Flow step (Wegner) or finite-difference step (counterdiabatic).
    #[arg(long)]
    pub dt: Option<f64>,
    /// Wegner horizon; default `20 / (min level spacing)²`.
    #[arg(long)]
    pub s_max: Option<f64>,
    /// Coordinate grid points (KdV).
    #[arg(long)]
    pub points: Option<usize>,
    /// Coordinate grid spans `[-half_width, half_width)`.
    #[arg(long)]
    pub half_width: Option<f64>,
    /// Field strength `h` of the rotating two-level Hamiltonian.
    #[arg(long)]
    pub field: Option<f64>,
    /// Pauli letters of the variational ansatz, e.g. `xyz` or `y`.
    #[arg(long)]
    pub ansatz: Option<String>,
    /// Variational objective: `inner` or `commutator`.
    #[arg(long)]
    pub objective: Option<String>,
    /// Pass/fail tolerance of the command's main check.
    #[arg(long)]
    pub tol: Option<f64>,
    /// Directory for CSV output; nothing is written without it.
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
}

/// Fully resolved parameters. Units: `ħ = m = 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub t_f: f64,
    pub theta0: f64,
    pub thetaf: f64,
    pub h_over_h0: f64,
    pub mode: String,
    pub omega0: f64,
    pub omegaf: f64,
    pub omega0_tf: Option<f64>,
    pub kappa: f64,
    pub n: usize,
    pub seed: u64,
    pub steps: usize,
    pub dt: f64,
    pub s_max: Option<f64>,
    pub points: usize,
    pub half_width: f64,
    pub field: f64,
    pub ansatz: String,
    pub objective: String,
    pub tol: f64,
    pub out_dir: Option<PathBuf>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            t_f: 1.0,
            theta0: 0.0,
            thetaf: std::f64::consts::FRAC_PI_2,
            h_over_h0: 2.0,
            mode: "field".into(),
            omega0: 1.0,
            omegaf: 0.1,
            omega0_tf: None,
            kappa: 1.0,
            n: 8,
            seed: 1,
            steps: 2000,
            dt: 1e-3,
            s_max: None,
            points: 2048,
            half_width: 20.0,
            field: 1.0,
            ansatz: "xyz".into(),
            objective: "inner".into(),
            tol: 1e-8,
            out_dir: None,
        }
    }
}

/// Parses `key=value` lines. Blank lines and `#` comments are skipped; unknown
/// or repeated keys are usage errors.
pub fn parse_config(text: &str) -> Result<BTreeMap<String, String>, CliError> {
    let mut out = BTreeMap::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((k, v)) = line.split_once('=') else {
            return Err(CliError::Usage(format!("config line {}: expected key=value", lineno + 1)));
        };
        let key = k.trim().replace('-', "_");
        if !KEYS.contains(&key.as_str()) {
            return Err(CliError::Usage(format!("config line {}: unknown key `{key}`", lineno + 1)));
        }
        if out.insert(key.clone(), v.trim().to_string()).is_some() {
            return Err(CliError::Usage(format!("config line {}: duplicate key `{key}`", lineno + 1)));
        }
    }
    Ok(out)
}

fn load(path: &Path) -> Result<BTreeMap<String, String>, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
    parse_config(&text)
}

fn parse_value<T: FromStr>(key: &str, raw: &str) -> Result<T, CliError> {
    raw.parse()
        .map_err(|_| CliError::Usage(format!("config key `{key}`: cannot parse `{raw}`")))
}

impl RunConfig {
    /// Flags win over the file, the file over `defaults`.
    pub fn resolve(params: &Params, defaults: RunConfig) -> Result<Self, CliError> {
        let file = match &params.config {
            Some(p) => load(p)?,
            None => BTreeMap::new(),
        };
        macro_rules! pick {
            ($f:ident) => {
                match (&params.$f, file.get(stringify!($f))) {
                    (Some(v), _) => v.clone(),
                    (None, Some(raw)) => parse_value(stringify!($f), raw)?,
                    (None, None) => defaults.$f.clone(),
                }
            };
        }
        macro_rules! pick_opt {
            ($f:ident) => {
                match (&params.$f, file.get(stringify!($f))) {
                    (Some(v), _) => Some(v.clone()),
                    (None, Some(raw)) => Some(parse_value(stringify!($f), raw)?),
                    (None, None) => defaults.$f.clone(),
                }
            };
        }
        let mut cfg = RunConfig {
            t_f: pick!(t_f),
            theta0: pick!(theta0),
            thetaf: pick!(thetaf),
            h_over_h0: pick!(h_over_h0),
            mode: pick!(mode),
            omega0: pick!(omega0),
            omegaf: pick!(omegaf),
            omega0_tf: pick_opt!(omega0_tf),
            kappa: pick!(kappa),
            n: pick!(n),
            seed: pick!(seed),
            steps: pick!(steps),
            dt: pick!(dt),
            s_max: pick_opt!(s_max),
            points: pick!(points),
            half_width: pick!(half_width),
            field: pick!(field),
            ansatz: pick!(ansatz),
            objective: pick!(objective),
            tol: pick!(tol),
            out_dir: pick_opt!(out_dir),
        };
        if let Some(w) = cfg.omega0_tf {
            if w > 0.0 && cfg.omega0 > 0.0 {
                cfg.t_f = w / cfg.omega0;
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let positive = [
            ("t_f", self.t_f),
            ("omega0", self.omega0),
            ("omegaf", self.omegaf),
            ("kappa", self.kappa),
            ("dt", self.dt),
            ("half_width", self.half_width),
            ("field", self.field),
            ("tol", self.tol),
            ("h_over_h0", self.h_over_h0),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(CliError::Usage(format!("{name} must be positive, got {v}")));
            }
        }
        for (name, v) in [("theta0", self.theta0), ("thetaf", self.thetaf)] {
            if !v.is_finite() {
                return Err(CliError::Usage(format!("{name} must be finite")));
            }
        }
        if let Some(w) = self.omega0_tf {
            if !(w.is_finite() && w > 0.0) {
                return Err(CliError::Usage(format!("omega0_tf must be positive, got {w}")));
            }
        }
        if let Some(s) = self.s_max {
            if !(s.is_finite() && s > 0.0) {
                return Err(CliError::Usage(format!("s_max must be positive, got {s}")));
            }
        }
        if self.steps < 100 {
            return Err(CliError::Usage(format!("steps must be at least 100, got {}", self.steps)));
        }
        if self.n < 2 {
            return Err(CliError::Usage(format!("n must be at least 2, got {}", self.n)));
        }
        if self.points < 16 {
            return Err(CliError::Usage(format!("points must be at least 16, got {}", self.points)));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn file_values_fill_unset_flags() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.cfg");
        std::fs::write(&path, "# comment\nsteps = 400\nt_f=2.5\nmode = y-axis\n").unwrap();
        let params = Params {
            config: Some(path),
            steps: Some(800),
            ..Default::default()
        };
        let cfg = RunConfig::resolve(&params, RunConfig::default()).unwrap();
        assert_eq!(cfg.steps, 800);
        assert_eq!(cfg.t_f, 2.5);
        assert_eq!(cfg.mode, "y-axis");
    }

    #[test]
    fn bad_files_are_usage_errors() {
        assert!(matches!(parse_config("nope = 1"), Err(CliError::Usage(_))));
        assert!(matches!(parse_config("steps"), Err(CliError::Usage(_))));
        assert!(matches!(parse_config("steps=1\nsteps=2"), Err(CliError::Usage(_))));
        assert_eq!(parse_config("half-width = 3 # note").unwrap()["half_width"], "3");
    }

    #[test]
    fn omega0_tf_sets_duration() {
        let params = Params {
            omega0: Some(2.0),
            omega0_tf: Some(0.5),
            ..Default::default()
        };
        let cfg = RunConfig::resolve(&params, RunConfig::default()).unwrap();
        assert_eq!(cfg.t_f, 0.25);
    }

    #[test]
    fn too_few_steps_rejected() {
        let params = Params {
            steps: Some(10),
            ..Default::default()
        };
        assert!(RunConfig::resolve(&params, RunConfig::default()).is_err());
    }
}
