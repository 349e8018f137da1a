//! `design two-level` and `design oscillator`.

use serde_json::{json, Value};
use sta_core::oscillator::{omega_from_b, polynomial_b};
use sta_core::two_level::{
    field_from_invariant, polynomial_theta, threshold_field, verify_protocol, y_axis_protocol, BlochSchedule,
    FieldProtocol,
};
use sta_core::Grid;

use super::report_json;
use crate::output::Table;
use crate::{CliError, Outcome, RunConfig};

/// At most this many rows in a trajectory CSV.
pub const TRAJECTORY_ROWS: usize = 2000;
/// `ω0 t_f` panels of the oscillator figure.
pub const PANEL_OMEGA0_TF: [f64; 3] = [2.0, 1.0, 0.5];
/// `ωf/ω0` ratios drawn in every panel; all keep `ω² > 0` at `ω0 t_f = 2`.
pub const PANEL_RATIOS: [f64; 3] = [0.5, 2.0, 10.0];
/// Relative tolerance on `ω²(0) = ω0²` and `ω²(t_f) = ωf²`.
pub const ENDPOINT_TOL: f64 = 1e-9;

pub fn two_level_defaults() -> RunConfig {
    RunConfig {
        steps: 20_000,
        ..RunConfig::default()
    }
}

pub fn oscillator_defaults() -> RunConfig {
    RunConfig {
        steps: 2000,
        ..RunConfig::default()
    }
}

fn trajectory(proto: &FieldProtocol<f64>, sched: &BlochSchedule<f64>, max_rows: usize) -> Table {
    let grid = proto.grid();
    let stride = (grid.steps() / max_rows).max(1);
    let mut t = Table::new(["t", "theta", "e_x", "e_y", "e_z", "n_x", "n_y", "n_z", "h"]);
    let mut k = 0;
    while k < grid.len() {
        let n = proto.n()[k];
        let e = sched.axis(k);
        t.push(vec![grid.node(k), sched.theta()[k], e[0], e[1], e[2], n[0], n[1], n[2], proto.h()[k]]);
        if k + 1 == grid.len() {
            break;
        }
        k = (k + stride).min(grid.len() - 1);
    }
    t
}

fn pauli_tables(proto: &FieldProtocol<f64>, sched: &BlochSchedule<f64>) -> (Table, Table) {
    let grid = proto.grid();
    let mut h = Table::new(["t", "x", "y", "z"]);
    let mut i = Table::new(["t", "x", "y", "z"]);
    for k in 0..grid.len() {
        let (n, f) = (proto.n()[k], proto.h()[k] / 2.0);
        h.push(vec![grid.node(k), f * n[0], f * n[1], f * n[2]]);
        let e = sched.axis(k);
        i.push(vec![grid.node(k), e[0], e[1], e[2]]);
    }
    (h, i)
}

fn build(cfg: &RunConfig, grid: &Grid, h: f64) -> Result<(FieldProtocol<f64>, BlochSchedule<f64>), CliError> {
    let sched = polynomial_theta(cfg.theta0, cfg.thetaf, grid);
    let proto = match cfg.mode.as_str() {
        "field" => field_from_invariant(&sched, |_| h)?,
        "y-axis" => y_axis_protocol(&sched)?,
        other => return Err(CliError::Usage(format!("mode must be `field` or `y-axis`, got `{other}`"))),
    };
    Ok((proto, sched))
}

/// Designs, verifies and emits a two-level protocol. Passes when the tracking
/// fidelity stays above `1 − tol` and the boundary conditions hold.
pub fn two_level(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let grid = Grid::new(0.0, cfg.t_f, cfg.steps)?;
    let h0 = threshold_field(cfg.thetaf - cfg.theta0, cfg.t_f);
    let h = cfg.h_over_h0 * h0;
    let (proto, sched) = build(cfg, &grid, h)?;
    let report = verify_protocol(&proto, &sched)?;
    let (peak_node, peak_h) = proto.peak_field();
    let mut files = Vec::new();
    if let Some(dir) = &cfg.out_dir {
        files.push(trajectory(&proto, &sched, TRAJECTORY_ROWS).write(dir, "two_level.csv")?);
        let (hp, ip) = pauli_tables(&proto, &sched);
        files.push(hp.write(dir, "hamiltonian.csv")?);
        files.push(ip.write(dir, "invariant.csv")?);
        for (name, ratio, mode) in [
            ("fig1a_h0.csv", 1.0, "field"),
            ("fig1a_2h0.csv", 2.0, "field"),
            ("fig1b_y_axis.csv", 1.0, "y-axis"),
        ] {
            let c = RunConfig {
                mode: mode.into(),
                ..cfg.clone()
            };
            let (p, s) = build(&c, &grid, ratio * h0)?;
            files.push(trajectory(&p, &s, TRAJECTORY_ROWS).write(dir, name)?);
        }
    }
    let passed = report.fidelity_min >= 1.0 - cfg.tol && report.boundary_ok;
    Ok(Outcome {
        passed,
        summary: json!({
            "command": "design two-level",
            "mode": cfg.mode,
            "h0": h0,
            "h": if cfg.mode == "field" { json!(h) } else { Value::Null },
            "peak": { "node": peak_node, "t": grid.node(peak_node), "h": peak_h },
            "report": report_json(&report),
            "passed": passed,
            "files": files,
        }),
    })
}

struct Panel {
    table: Table,
    endpoint_error: f64,
    min_omega_sq: f64,
    negative: bool,
    omegaf: f64,
}

fn panel(omega0: f64, omegaf: f64, t_f: f64, steps: usize) -> Result<Panel, CliError> {
    let grid = Grid::new(0.0, t_f, steps)?;
    let sol = polynomial_b(omega0, omegaf, &grid)?;
    let proto = omega_from_b(&sol)?;
    let mut table = Table::new(["t", "b", "bdot", "omega_sq"]);
    for k in 0..grid.len() {
        table.push(vec![grid.node(k), sol.b()[k], sol.bdot()[k], proto.omega_sq[k]]);
    }
    Ok(Panel {
        table,
        endpoint_error: proto.endpoint_error(),
        min_omega_sq: proto.min_omega_sq,
        negative: proto.negative,
        omegaf: proto.omegaf,
    })
}

/// Builds `b(t)` and `ω²(t)` for the configured ramp and for every figure
/// panel. Passes when all endpoint frequencies are met to [`ENDPOINT_TOL`].
pub fn oscillator(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let main = panel(cfg.omega0, cfg.omegaf, cfg.t_f, cfg.steps)?;
    let mut files = Vec::new();
    let mut passed = main.endpoint_error <= ENDPOINT_TOL;
    let mut panels = Vec::new();
    if let Some(dir) = &cfg.out_dir {
        files.push(main.table.write(dir, "oscillator.csv")?);
    }
    for w in PANEL_OMEGA0_TF {
        for r in PANEL_RATIOS {
            let p = panel(cfg.omega0, r * cfg.omega0, w / cfg.omega0, cfg.steps)?;
            passed &= p.endpoint_error <= ENDPOINT_TOL;
            if let Some(dir) = &cfg.out_dir {
                files.push(p.table.write(dir, &format!("fig2_w0tf_{w}_ratio_{r}.csv"))?);
            }
            panels.push(json!({
                "omega0_tf": w,
                "ratio": r,
                "endpoint_error": p.endpoint_error,
                "min_omega_sq": p.min_omega_sq,
                "negative": p.negative,
            }));
        }
    }
    Ok(Outcome {
        passed,
        summary: json!({
            "command": "design oscillator",
            "omega0": cfg.omega0,
            "omegaf": main.omegaf,
            "t_f": cfg.t_f,
            "omega0_tf": cfg.omega0 * cfg.t_f,
            "endpoint_error": main.endpoint_error,
            "min_omega_sq": main.min_omega_sq,
            "negative": main.negative,
            "panels": panels,
            "passed": passed,
            "files": files,
        }),
    })
}
