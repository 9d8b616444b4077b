//! Offline controller replay.
//!
//! Takes a CSV trace of raw advantages (`iteration,value`, one advantage per
//! row, consecutive rows with the same iteration forming one batch) and runs
//! the modulation controller over it exactly as training would: one
//! controller update per batch, then the whole batch gated as a single
//! minibatch with the freshly frozen alpha. The result is a CSV time series
//! of the controller's internals, handy for plotting gate behavior without
//! rerunning training.

use crate::error::{Error, Result};
use crate::modulation::{
    modulate_minibatch, update_controller, ControllerState, ModulationConfig,
};
use serde::Serialize;
use std::path::Path;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReplayRow {
    pub iteration: u64,
    pub alpha_ema: f64,
    pub sat_current: f64,
    pub sat_ema: f64,
    pub mean_abs_a_mod: f64,
}

/// Parse a trace file into (iteration, advantages-batch) groups, preserving
/// file order. Malformed rows report their 1-based file line.
fn read_trace(path: &Path) -> Result<Vec<(u64, Vec<f64>)>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| Error::Trace {
            line: 0,
            message: format!("cannot open {}: {e}", path.display()),
        })?;
    {
        let headers = reader.headers().map_err(|e| Error::Trace {
            line: 1,
            message: e.to_string(),
        })?;
        if headers.len() != 2 || &headers[0] != "iteration" || &headers[1] != "value" {
            return Err(Error::Trace {
                line: 1,
                message: format!(
                    "expected header 'iteration,value', found '{}'",
                    headers.iter().collect::<Vec<_>>().join(",")
                ),
            });
        }
    }
    let mut groups: Vec<(u64, Vec<f64>)> = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| {
            let line = e
                .position()
                .map(|p| p.line() as usize)
                .unwrap_or(0);
            Error::Trace {
                line,
                message: e.to_string(),
            }
        })?;
        let line = record
            .position()
            .map(|p| p.line() as usize)
            .unwrap_or(0);
        if record.len() != 2 {
            return Err(Error::Trace {
                line,
                message: format!("expected 2 columns, found {}", record.len()),
            });
        }
        let iteration: u64 = record[0].parse().map_err(|_| Error::Trace {
            line,
            message: format!("bad iteration '{}'", &record[0]),
        })?;
        let value: f64 = record[1].parse().map_err(|_| Error::Trace {
            line,
            message: format!("bad value '{}'", &record[1]),
        })?;
        if !value.is_finite() {
            return Err(Error::Trace {
                line,
                message: "non-finite value".into(),
            });
        }
        match groups.last_mut() {
            Some((id, batch)) if *id == iteration => batch.push(value),
            _ => groups.push((iteration, vec![value])),
        }
    }
    Ok(groups)
}

/// Replay a trace through the controller and write the output CSV.
pub fn replay_controller(
    trace_path: &Path,
    cfg: &ModulationConfig,
    out_path: &Path,
) -> Result<Vec<ReplayRow>> {
    cfg.validate()?;
    let groups = read_trace(trace_path)?;
    let mut state = ControllerState::new(cfg);
    let mut rows = Vec::with_capacity(groups.len());
    for (iteration, batch) in &groups {
        let update = update_controller(&mut state, batch, cfg)?;
        let gated = modulate_minibatch(batch, state.frozen_alpha, cfg);
        let mean_abs = gated.iter().map(|x| x.abs()).sum::<f64>() / gated.len() as f64;
        rows.push(ReplayRow {
            iteration: *iteration,
            alpha_ema: state.alpha_ema,
            sat_current: update.sat_current,
            sat_ema: state.sat_ema,
            mean_abs_a_mod: mean_abs,
        });
    }
    let mut writer = csv::Writer::from_path(out_path).map_err(|e| Error::Trace {
        line: 0,
        message: format!("cannot write {}: {e}", out_path.display()),
    })?;
    for row in &rows {
        writer.serialize(row).map_err(|e| Error::Trace {
            line: 0,
            message: e.to_string(),
        })?;
    }
    writer.flush()?;
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn write_trace(dir: &Path, text: &str) -> std::path::PathBuf {
        let path = dir.join("trace.csv");
        let mut f = std::fs::File::create(&path).unwrap();
        f.write_all(text.as_bytes()).unwrap();
        path
    }

    #[test]
    fn all_zero_groups_leave_the_state_at_init() {
        let dir = tempfile::tempdir().unwrap();
        let trace = write_trace(
            dir.path(),
            "iteration,value\n1,0.0\n1,0.0\n2,0.0\n2,0.0\n3,0.0\n3,0.0\n",
        );
        let cfg = ModulationConfig::default();
        let rows =
            replay_controller(&trace, &cfg, &dir.path().join("out.csv")).unwrap();
        assert_eq!(rows.len(), 3);
        for row in &rows {
            assert_eq!(row.alpha_ema, cfg.alpha_init);
            assert_eq!(row.sat_ema, cfg.sat_init);
            assert_eq!(row.sat_current, 0.0);
            assert_eq!(row.mean_abs_a_mod, 0.0);
        }
    }

    #[test]
    fn malformed_row_reports_its_line() {
        let dir = tempfile::tempdir().unwrap();
        let trace = write_trace(dir.path(), "iteration,value\n1,0.5\n1,not-a-number\n");
        let err = replay_controller(
            &trace,
            &ModulationConfig::default(),
            &dir.path().join("out.csv"),
        )
        .unwrap_err();
        match err {
            Error::Trace { line, .. } => assert_eq!(line, 3),
            other => panic!("unexpected error {other}"),
        }
    }

    #[test]
    fn wrong_header_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let trace = write_trace(dir.path(), "step,adv\n1,0.5\n");
        let err = replay_controller(
            &trace,
            &ModulationConfig::default(),
            &dir.path().join("out.csv"),
        )
        .unwrap_err();
        assert_eq!(err.exit_code(), 2);
    }

    #[test]
    fn output_csv_has_the_documented_columns() {
        let dir = tempfile::tempdir().unwrap();
        let trace = write_trace(dir.path(), "iteration,value\n1,1.0\n1,-1.0\n2,2.0\n2,-2.0\n");
        let out = dir.path().join("out.csv");
        replay_controller(&trace, &ModulationConfig::default(), &out).unwrap();
        let text = std::fs::read_to_string(&out).unwrap();
        let first = text.lines().next().unwrap();
        assert_eq!(first, "iteration,alpha_ema,sat_current,sat_ema,mean_abs_a_mod");
        assert_eq!(text.lines().count(), 3);
    }
}
