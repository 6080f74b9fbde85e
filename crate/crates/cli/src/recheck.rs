//! Re-validation of a saved JSON report from its row data.

use std::path::Path;

use fjq_core::orbit_calculus::{dim_ftilde, SemismallReport, SemismallRow};
use fjq_core::{FramingComposition, OrbitMatrix};
use num_bigint::BigUint;
use serde_json::{json, Value};

use crate::commands::{shape_from_value, to_value, Report};
use crate::CliError;

fn bad(message: impl Into<String>) -> CliError {
    CliError::Input {
        message: message.into(),
        position: None,
    }
}

fn big(v: &Value) -> Option<BigUint> {
    v.as_str()?.parse().ok()
}

fn framing_from_value(v: &Value) -> Option<FramingComposition> {
    FramingComposition::new(serde_json::from_value(v.clone()).ok()?).ok()
}

/// Recomputes the stored verdict of `path`. Returns a report whose results
/// list every disagreement.
pub fn recheck(path: &Path) -> Result<Report, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Io(format!("cannot read {}: {e}", path.display())))?;
    let doc: Value = serde_json::from_str(&text).map_err(|e| bad(format!("not a JSON report: {e}")))?;
    let command = doc["command"].as_str().ok_or_else(|| bad("report has no command"))?.to_string();
    let stored = doc["verdict"]["passed"].as_bool().ok_or_else(|| bad("report has no verdict"))?;
    let results = &doc["results"];
    let mut mismatches: Vec<String> = Vec::new();

    let recomputed = match command.as_str() {
        "semismall" => recheck_semismall(results, &mut mismatches)?,
        "theta" => recheck_theta(results, &mut mismatches)?,
        "decompose" => {
            let rows = results["rows"].as_array().ok_or_else(|| bad("missing rows"))?;
            let sum: BigUint = rows
                .iter()
                .map(|r| big(&r["multiplicity"]).map(|m| &m * &m).ok_or_else(|| bad("bad multiplicity")))
                .sum::<Result<BigUint, _>>()?;
            let order = big(&results["group_order"]).ok_or_else(|| bad("missing group_order"))?;
            sum == order
        }
        "count-sheaves" => {
            let terms = results["terms"].as_array().ok_or_else(|| bad("missing terms"))?;
            let sum: BigUint = terms
                .iter()
                .map(|t| big(&t["product"]).ok_or_else(|| bad("bad term")))
                .sum::<Result<BigUint, _>>()?;
            let count = big(&results["count"]).ok_or_else(|| bad("missing count"))?;
            let labels = big(&results["label_enumeration"]).ok_or_else(|| bad("missing label_enumeration"))?;
            sum == count && labels == count
        }
        "fq-verify" => recheck_point_counts(results, &mut mismatches)?,
        "fock-check" => {
            let mut ok = true;
            let mut reports: Vec<&Value> = results["h"].as_array().map(|a| a.iter().collect()).unwrap_or_default();
            reports.push(&results["hprime"]);
            reports.push(&results["scaled_primitive"]);
            for rep in reports {
                let violations = rep["violations"].as_array().ok_or_else(|| bad("missing violations"))?;
                ok &= violations.is_empty();
            }
            ok & results["hall_pairing"]["disagreements"].as_array().is_some_and(Vec::is_empty)
        }
        "orbit-demo" => {
            let reports = results["reports"].as_array().ok_or_else(|| bad("missing reports"))?;
            reports.iter().all(|r| {
                let labels: std::collections::BTreeSet<u64> =
                    r["orbit_of"].as_array().into_iter().flatten().filter_map(Value::as_u64).collect();
                r["points"].as_u64() == Some(labels.len() as u64)
            })
        }
        "acceptance" => results["criteria"]
            .as_array()
            .ok_or_else(|| bad("missing criteria"))?
            .iter()
            .all(|c| c["passed"].as_bool() == Some(true)),
        "dims" => {
            let get = |k: &str| results[k].as_u64().ok_or_else(|| bad(format!("missing {k}")));
            get("dim_ftilde")? == get("f1")? + 2 * get("f2")? && get("f2")? == get("dim_flag")?
        }
        "schur-dims" => {
            let dims = results["schur_dims"].as_array().ok_or_else(|| bad("missing schur_dims"))?;
            let product = dims
                .iter()
                .map(|d| big(d).ok_or_else(|| bad("bad dimension")))
                .product::<Result<BigUint, _>>()?;
            Some(product) == big(&results["product"])
        }
        other => return Err(bad(format!("cannot recheck reports of command '{other}'"))),
    };
    if recomputed != stored {
        mismatches.push(format!("stored verdict {stored}, recomputed {recomputed}"));
    }
    let consistent = mismatches.is_empty();
    let mut report = Report {
        parameters: json!({"report": path.display().to_string()}),
        results: json!({
            "command": command,
            "stored_passed": stored,
            "recomputed_passed": recomputed,
            "mismatches": mismatches,
        }),
        verdict: json!({"consistent": consistent}),
        passed: consistent && recomputed,
        tsv: None,
        summary: None,
    };
    if !consistent {
        report.summary = Some("report verdict does not match its rows\n".into());
    }
    Ok(report)
}

fn rebuild_rows(
    results: &Value,
    framing: Option<&FramingComposition>,
    mismatches: &mut Vec<String>,
) -> Result<Vec<SemismallRow>, CliError> {
    let shape = shape_from_value(&results["shape"]).ok_or_else(|| bad("bad shape"))?;
    let rows = results["rows"].as_array().ok_or_else(|| bad("missing rows"))?;
    let mut out = Vec::with_capacity(rows.len());
    for (k, row) in rows.iter().enumerate() {
        let cells: Vec<Vec<usize>> = serde_json::from_value(row["matrix"].clone()).map_err(|_| bad("bad matrix"))?;
        let m = OrbitMatrix::from_rows(shape.clone(), &cells).map_err(|e| bad(format!("row {k}: {e}")))?;
        let y = match framing {
            Some(f) => m.y_fiber(f).map_err(|e| bad(e.to_string()))?,
            None => 0,
        };
        let rebuilt = SemismallRow {
            dim_orbit: m.dim_orbit(),
            z_fiber: m.z_fiber(),
            y_fiber: y,
            dim_ym: m.dim_orbit() + m.z_fiber() + y,
            is_block_diagonal: m.is_block_diagonal(),
            matrix: m,
        };
        let fresh = to_value(&rebuilt);
        let keys: &[&str] = if framing.is_some() {
            &["dim_orbit", "z_fiber", "y_fiber", "dim_ym", "is_block_diagonal"]
        } else {
            &["dim_orbit", "z_fiber", "is_block_diagonal"]
        };
        for &key in keys {
            if row[key] != fresh[key] {
                mismatches.push(format!("row {k}: {key} stored {} recomputed {}", row[key], fresh[key]));
            }
        }
        out.push(rebuilt);
    }
    Ok(out)
}

fn recheck_semismall(results: &Value, mismatches: &mut Vec<String>) -> Result<bool, CliError> {
    let shape = shape_from_value(&results["shape"]).ok_or_else(|| bad("bad shape"))?;
    let framing = framing_from_value(&results["framing"]).ok_or_else(|| bad("bad framing"))?;
    let rows = rebuild_rows(results, Some(&framing), mismatches)?;
    let dim = dim_ftilde(&shape, &framing).map_err(|e| bad(e.to_string()))?;
    if results["dim_ftilde"].as_u64() != Some(dim as u64) {
        mismatches.push(format!("dim_ftilde stored {} recomputed {dim}", results["dim_ftilde"]));
    }
    let verdict = SemismallReport::verdict_from_rows(&shape, dim, &rows);
    if results["verdict"] != to_value(&verdict) {
        mismatches.push("stored verdict details differ from the recomputed ones".into());
    }
    Ok(verdict.all())
}

fn recheck_theta(results: &Value, mismatches: &mut Vec<String>) -> Result<bool, CliError> {
    let has_y = results["rows"].as_array().and_then(|r| r.first()).is_some_and(|r| r.get("y_fiber").is_some());
    if has_y {
        // The framing is not stored with theta rows; check internal sums.
        let rows = results["rows"].as_array().ok_or_else(|| bad("missing rows"))?;
        for (k, row) in rows.iter().enumerate() {
            let sum = ["dim_orbit", "z_fiber", "y_fiber"].iter().filter_map(|key| row[*key].as_u64()).sum::<u64>();
            if row["dim_ym"].as_u64() != Some(sum) {
                mismatches.push(format!("row {k}: dim_ym is not the sum of its parts"));
            }
        }
    }
    let rows = rebuild_rows(results, None, mismatches)?;
    if results["count"].as_u64() != Some(rows.len() as u64) {
        mismatches.push("count differs from the number of rows".into());
    }
    Ok(true)
}

fn recheck_point_counts(results: &Value, mismatches: &mut Vec<String>) -> Result<bool, CliError> {
    let reports = results["reports"].as_array().ok_or_else(|| bad("missing reports"))?;
    let mut ok = true;
    for entry in reports {
        let p = entry["p"].as_u64().ok_or_else(|| bad("missing p"))?;
        for key in ["stable_pairs", "y_points", "lambda_points"] {
            let rep = &entry[key];
            if rep.is_null() {
                continue;
            }
            for e in rep["entries"].as_array().into_iter().flatten() {
                let matches = big(&e["observed"]).is_some() && big(&e["observed"]) == big(&e["predicted"]);
                if e["matches"].as_bool() != Some(matches) {
                    mismatches.push(format!("p={p} {key}: entry {} flag disagrees", e["quantity"]));
                }
                ok &= matches;
            }
            for b in rep["buckets"].as_array().into_iter().flatten() {
                let points = big(&b["orbit_points"]).ok_or_else(|| bad("bad bucket"))?;
                let exponent = b["fiber_exponent"].as_u64().ok_or_else(|| bad("bad bucket"))?;
                let predicted = points * BigUint::from(p).pow(exponent as u32);
                let matches = Some(&predicted) == big(&b["observed"]).as_ref();
                if b["matches"].as_bool() != Some(matches) || big(&b["predicted"]) != Some(predicted) {
                    mismatches.push(format!("p={p} {key}: bucket {} disagrees", b["matrix"]));
                }
                ok &= matches && b["uniform_fibers"].as_bool() == Some(true);
            }
        }
    }
    Ok(ok)
}
