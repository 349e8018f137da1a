//! `sweep`: independent runs over one parameter, executed on scoped threads.
//! Each run writes to its own `run_NNN` directory; results keep input order.

use std::thread;

use serde_json::{json, Value};

use super::{design, flow};
use crate::{CliError, Outcome, RunConfig, SweepArgs, SweepKind};

fn defaults(kind: SweepKind) -> RunConfig {
    match kind {
        SweepKind::TwoLevel => design::two_level_defaults(),
        SweepKind::Oscillator => design::oscillator_defaults(),
        SweepKind::Wegner => flow::wegner_defaults(),
        SweepKind::Toda => flow::toda_defaults(),
    }
}

fn seed(v: f64) -> Result<u64, CliError> {
    if v >= 0.0 && v.fract() == 0.0 && v <= u64::MAX as f64 {
        Ok(v as u64)
    } else {
        Err(CliError::Usage(format!("seed must be a nonnegative integer, got {v}")))
    }
}

fn configure(base: &RunConfig, kind: SweepKind, index: usize, value: f64) -> Result<RunConfig, CliError> {
    let mut cfg = base.clone();
    match kind {
        SweepKind::TwoLevel => cfg.h_over_h0 = value,
        SweepKind::Oscillator => {
            cfg.omega0_tf = Some(value);
            cfg.t_f = value / cfg.omega0;
        }
        SweepKind::Wegner | SweepKind::Toda => cfg.seed = seed(value)?,
    }
    cfg.out_dir = base.out_dir.as_ref().map(|d| d.join(format!("run_{index:03}")));
    cfg.validate()?;
    Ok(cfg)
}

fn execute(kind: SweepKind, cfg: &RunConfig) -> Result<Outcome, CliError> {
    match kind {
        SweepKind::TwoLevel => design::two_level(cfg),
        SweepKind::Oscillator => design::oscillator(cfg),
        SweepKind::Wegner => flow::wegner(cfg),
        SweepKind::Toda => flow::toda(cfg),
    }
}

/// Passes only when every run passes; a run that errors counts as a failure
/// and is reported in place rather than aborting the sweep.
pub fn run(args: &SweepArgs) -> Result<Outcome, CliError> {
    if args.values.is_empty() {
        return Err(CliError::Usage("sweep needs at least one value".into()));
    }
    let base = RunConfig::resolve(&args.params, defaults(args.kind))?;
    let configs = args
        .values
        .iter()
        .enumerate()
        .map(|(i, &v)| configure(&base, args.kind, i, v))
        .collect::<Result<Vec<_>, _>>()?;
    let results: Vec<Result<Outcome, CliError>> = thread::scope(|s| {
        let handles: Vec<_> = configs.iter().map(|c| s.spawn(move || execute(args.kind, c))).collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("sweep run panicked"))
            .collect()
    });
    let mut passed = true;
    let runs: Vec<Value> = args
        .values
        .iter()
        .zip(results)
        .enumerate()
        .map(|(i, (v, r))| match r {
            Ok(o) => {
                passed &= o.passed;
                json!({ "index": i, "value": v, "passed": o.passed, "summary": o.summary })
            }
            Err(e) => {
                passed = false;
                json!({ "index": i, "value": v, "passed": false, "error": e.to_string() })
            }
        })
        .collect();
    Ok(Outcome {
        passed,
        summary: json!({
            "command": "sweep",
            "kind": format!("{:?}", args.kind),
            "runs": runs,
            "passed": passed,
        }),
    })
}
