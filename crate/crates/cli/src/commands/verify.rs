//! `verify`: propagation check of a two-level pair given as Pauli coefficients.

use serde_json::json;
use sta_core::invariant::verify_pair_with_precision;
use sta_core::{Basis, Grid, Pair, Schedule};

use super::report_json;
use crate::output::{read_table, Table, REL_PRECISION};
use crate::{CliError, Outcome, VerifyArgs};

/// Relative spacing error tolerated in the time column.
pub const GRID_TOL: f64 = 1e-9;

fn columns(table: &Table, what: &str) -> Result<(), CliError> {
    let want = ["t", "x", "y", "z"];
    if table.header != want {
        return Err(CliError::Usage(format!(
            "{what}: expected columns t,x,y,z, got {}",
            table.header.join(",")
        )));
    }
    if table.rows.len() < 3 {
        return Err(CliError::Usage(format!("{what}: need at least 3 rows")));
    }
    Ok(())
}

fn uniform_grid(t: &[f64]) -> Result<Grid, CliError> {
    let (t0, tf) = (t[0], t[t.len() - 1]);
    let steps = t.len() - 1;
    let grid = Grid::new(t0, tf, steps).map_err(|e| CliError::Usage(format!("time column: {e}")))?;
    let scale = t0.abs().max(tf.abs()).max(grid.dt());
    for (k, &v) in t.iter().enumerate() {
        if (v - grid.node(k)).abs() > GRID_TOL * scale {
            return Err(CliError::Usage(format!("time column is not uniform at row {}", k + 1)));
        }
    }
    Ok(grid)
}

/// Samples are taken to carry twelve significant digits, which loosens the
/// endpoint-rate test by the resulting finite-difference noise.
///
/// Passes when the coefficient residual and eigenvalue drift are within `tol`,
/// the tracking fidelity reaches `1 − tol` and the boundary conditions hold.
pub fn run(args: &VerifyArgs) -> Result<Outcome, CliError> {
    let h = read_table(&args.hamiltonian)?;
    let i = read_table(&args.invariant)?;
    columns(&h, "hamiltonian")?;
    columns(&i, "invariant")?;
    let th: Vec<f64> = h.rows.iter().map(|r| r[0]).collect();
    let ti: Vec<f64> = i.rows.iter().map(|r| r[0]).collect();
    if th != ti {
        return Err(CliError::Usage("hamiltonian and invariant have different time columns".into()));
    }
    if !(args.tol.is_finite() && args.tol > 0.0) {
        return Err(CliError::Usage(format!("tol must be positive, got {}", args.tol)));
    }
    let grid = uniform_grid(&th)?;
    let coeffs = |t: &Table| t.rows.iter().map(|r| r[1..].to_vec()).collect::<Vec<_>>();
    let hs = Schedule::new(grid, coeffs(&h), None)?;
    let is = Schedule::new(grid, coeffs(&i), None)?;
    let pair = Pair::new(Basis::pauli(), hs, is)?;
    let report = verify_pair_with_precision(&pair, args.level, REL_PRECISION)?;
    let passed = report.residual_max <= args.tol
        && report.eigenvalue_drift_max <= args.tol
        && report.fidelity_min >= 1.0 - args.tol
        && report.boundary_ok;
    Ok(Outcome {
        passed,
        summary: json!({
            "command": "verify",
            "level": args.level,
            "tol": args.tol,
            "report": report_json(&report),
            "passed": passed,
        }),
    })
}
