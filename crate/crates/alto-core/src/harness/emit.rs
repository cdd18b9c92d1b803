//! CSV and JSON emitters with matching parsers. Floats are written with 17
//! significant digits, which round-trips every finite `f64` exactly, so
//! emitting and re-parsing a report reproduces it bit for bit, and two runs
//! of the same configuration and seed emit byte-identical artifacts.

use crate::diagnostics::SharpnessEstimate;
use crate::error::{Error, Result};

use super::run::{EpochLoss, RunRecord, RunReport, SharpnessRecord};

const RECORD_HEADER: &str =
    "run_id,step,loss,grad_norm,step_norm,eff_grad_norm,lambda_max,drift,windowed_drift";
const EPOCH_HEADER: &str = "epoch,train_loss,val_loss";
const SHARPNESS_HEADER: &str = "step,lambda_max,iterations_used,residual,converged";

pub(crate) fn fmt_value(x: f64) -> String {
    format!("{x:.16e}")
}

fn parse_f64(field: &str, line: usize, column: &str) -> Result<f64> {
    field.trim().parse::<f64>().map_err(|_| {
        Error::parse(format!(
            "line {line}: column {column} is not a number (got {field:?})"
        ))
    })
}

fn parse_u64(field: &str, line: usize, column: &str) -> Result<u64> {
    field.trim().parse::<u64>().map_err(|_| {
        Error::parse(format!(
            "line {line}: column {column} is not an integer (got {field:?})"
        ))
    })
}

fn sanitize_id(run_id: &str) -> String {
    run_id.replace([',', '\n', '\r'], ";")
}

/// Writes the per-step trace rows under the given run identifier; parameter
/// snapshot columns `theta_0..theta_{d-1}` appear when the records carry
/// them. Optional fields (`lambda_max`, `windowed_drift`) are left empty on
/// rows that do not have them.
pub fn trace_to_csv(run_id: &str, records: &[RunRecord]) -> String {
    let run_id = sanitize_id(run_id);
    let theta_dim = records
        .first()
        .and_then(|r| r.theta.as_ref())
        .map_or(0, Vec::len);
    let mut out = String::from(RECORD_HEADER);
    for i in 0..theta_dim {
        out.push_str(&format!(",theta_{i}"));
    }
    out.push('\n');
    for record in records {
        out.push_str(&format!(
            "{run_id},{},{},{},{},{},{},{},{}",
            record.step,
            fmt_value(record.loss),
            fmt_value(record.grad_norm),
            fmt_value(record.step_norm),
            fmt_value(record.effective_grad_norm),
            record.lambda_max.map(fmt_value).unwrap_or_default(),
            fmt_value(record.drift),
            record.windowed_drift.map(fmt_value).unwrap_or_default(),
        ));
        if let Some(theta) = &record.theta {
            for value in theta {
                out.push(',');
                out.push_str(&fmt_value(*value));
            }
        }
        out.push('\n');
    }
    out
}

/// Parses the output of [`trace_to_csv`] exactly. Returns each row together
/// with its run identifier; a file holding a single run yields one distinct
/// identifier.
pub fn trace_from_csv(text: &str) -> Result<Vec<(String, RunRecord)>> {
    let mut lines = text.lines().enumerate();
    let (_, header) = lines
        .next()
        .ok_or_else(|| Error::parse("empty trace CSV"))?;
    let theta_dim = match header.strip_prefix(RECORD_HEADER) {
        Some(rest) => {
            let mut dim = 0;
            if !rest.is_empty() {
                for (i, column) in rest.trim_start_matches(',').split(',').enumerate() {
                    if column != format!("theta_{i}") {
                        return Err(Error::parse(format!(
                            "unexpected trace column {column:?}"
                        )));
                    }
                    dim += 1;
                }
            }
            dim
        }
        None => {
            return Err(Error::parse(format!(
                "unexpected trace header {header:?}"
            )))
        }
    };
    let mut records = Vec::new();
    for (index, line) in lines {
        if line.is_empty() {
            continue;
        }
        let lineno = index + 1;
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 9 + theta_dim {
            return Err(Error::parse(format!(
                "line {lineno}: expected {} fields, got {}",
                9 + theta_dim,
                fields.len()
            )));
        }
        let optional = |field: &str, column: &str| -> Result<Option<f64>> {
            if field.is_empty() {
                Ok(None)
            } else {
                parse_f64(field, lineno, column).map(Some)
            }
        };
        let theta = if theta_dim > 0 {
            let mut values = Vec::with_capacity(theta_dim);
            for (i, field) in fields[9..].iter().enumerate() {
                values.push(parse_f64(field, lineno, &format!("theta_{i}"))?);
            }
            Some(values)
        } else {
            None
        };
        records.push((
            fields[0].to_string(),
            RunRecord {
                step: parse_u64(fields[1], lineno, "step")?,
                loss: parse_f64(fields[2], lineno, "loss")?,
                grad_norm: parse_f64(fields[3], lineno, "grad_norm")?,
                step_norm: parse_f64(fields[4], lineno, "step_norm")?,
                effective_grad_norm: parse_f64(fields[5], lineno, "eff_grad_norm")?,
                lambda_max: optional(fields[6], "lambda_max")?,
                drift: parse_f64(fields[7], lineno, "drift")?,
                windowed_drift: optional(fields[8], "windowed_drift")?,
                theta,
            },
        ));
    }
    Ok(records)
}

/// Writes epoch-level train/validation losses.
pub fn epochs_to_csv(epochs: &[EpochLoss]) -> String {
    let mut out = String::from(EPOCH_HEADER);
    out.push('\n');
    for epoch in epochs {
        out.push_str(&format!(
            "{},{},{}\n",
            epoch.epoch,
            fmt_value(epoch.train_loss),
            fmt_value(epoch.val_loss)
        ));
    }
    out
}

/// Parses the output of [`epochs_to_csv`] exactly.
pub fn epochs_from_csv(text: &str) -> Result<Vec<EpochLoss>> {
    let mut lines = text.lines().enumerate();
    let (_, header) = lines
        .next()
        .ok_or_else(|| Error::parse("empty epoch CSV"))?;
    if header != EPOCH_HEADER {
        return Err(Error::parse(format!("unexpected epoch header {header:?}")));
    }
    let mut epochs = Vec::new();
    for (index, line) in lines {
        if line.is_empty() {
            continue;
        }
        let lineno = index + 1;
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 3 {
            return Err(Error::parse(format!(
                "line {lineno}: expected 3 fields, got {}",
                fields.len()
            )));
        }
        epochs.push(EpochLoss {
            epoch: parse_u64(fields[0], lineno, "epoch")?,
            train_loss: parse_f64(fields[1], lineno, "train_loss")?,
            val_loss: parse_f64(fields[2], lineno, "val_loss")?,
        });
    }
    Ok(epochs)
}

/// Writes sharpness estimates taken along the trajectory.
pub fn sharpness_to_csv(records: &[SharpnessRecord]) -> String {
    let mut out = String::from(SHARPNESS_HEADER);
    out.push('\n');
    for record in records {
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            record.step,
            fmt_value(record.estimate.lambda_max),
            record.estimate.iterations_used,
            fmt_value(record.estimate.residual),
            record.estimate.converged,
        ));
    }
    out
}

/// Parses the output of [`sharpness_to_csv`] exactly.
pub fn sharpness_from_csv(text: &str) -> Result<Vec<SharpnessRecord>> {
    let mut lines = text.lines().enumerate();
    let (_, header) = lines
        .next()
        .ok_or_else(|| Error::parse("empty sharpness CSV"))?;
    if header != SHARPNESS_HEADER {
        return Err(Error::parse(format!(
            "unexpected sharpness header {header:?}"
        )));
    }
    let mut records = Vec::new();
    for (index, line) in lines {
        if line.is_empty() {
            continue;
        }
        let lineno = index + 1;
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 5 {
            return Err(Error::parse(format!(
                "line {lineno}: expected 5 fields, got {}",
                fields.len()
            )));
        }
        let converged = match fields[4].trim() {
            "true" => true,
            "false" => false,
            other => {
                return Err(Error::parse(format!(
                    "line {lineno}: converged must be true/false (got {other:?})"
                )))
            }
        };
        records.push(SharpnessRecord {
            step: parse_u64(fields[0], lineno, "step")?,
            estimate: SharpnessEstimate {
                lambda_max: parse_f64(fields[1], lineno, "lambda_max")?,
                iterations_used: parse_u64(fields[2], lineno, "iterations_used")? as usize,
                residual: parse_f64(fields[3], lineno, "residual")?,
                converged,
            },
        });
    }
    Ok(records)
}

#[derive(serde::Serialize, serde::Deserialize)]
struct TraceLine {
    run_id: String,
    #[serde(flatten)]
    record: RunRecord,
}

/// Writes the trace as JSON Lines: one object per row, each carrying the
/// run identifier. Like the CSV form, parsing reproduces the records
/// bit for bit.
pub fn trace_to_jsonl(run_id: &str, records: &[RunRecord]) -> Result<String> {
    let mut out = String::new();
    for record in records {
        let line = TraceLine {
            run_id: run_id.to_string(),
            record: record.clone(),
        };
        out.push_str(
            &serde_json::to_string(&line)
                .map_err(|e| Error::parse(format!("trace row serialization: {e}")))?,
        );
        out.push('\n');
    }
    Ok(out)
}

/// Parses the output of [`trace_to_jsonl`] exactly.
pub fn trace_from_jsonl(text: &str) -> Result<Vec<(String, RunRecord)>> {
    let mut records = Vec::new();
    for (index, line) in text.lines().enumerate() {
        if line.is_empty() {
            continue;
        }
        let parsed: TraceLine = serde_json::from_str(line)
            .map_err(|e| Error::parse(format!("trace line {}: {e}", index + 1)))?;
        records.push((parsed.run_id, parsed.record));
    }
    Ok(records)
}

/// Serializes the full report as pretty JSON.
pub fn report_to_json(report: &RunReport) -> Result<String> {
    let mut text = serde_json::to_string_pretty(report)
        .map_err(|e| Error::parse(format!("report serialization: {e}")))?;
    text.push('\n');
    Ok(text)
}

/// Parses the output of [`report_to_json`] back into an identical report.
pub fn report_from_json(text: &str) -> Result<RunReport> {
    serde_json::from_str(text).map_err(|e| Error::parse(format!("report: {e}")))
}
