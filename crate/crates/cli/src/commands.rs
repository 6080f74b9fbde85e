use fjq_core::decomposition::{count_sheaves, decompose_l1, schur_dim, sheaf_index, z_htop_dim};
use fjq_core::fock::{
    graded_dim_tensor, hall_pair_matrices, hall_pair_powersum, verify_h_relations, verify_hprime_relations,
    verify_scaled_primitive,
};
use fjq_core::fq_oracle::{count_stable_pairs, lambda_point_count, orbit_family_demo, y_point_count, Budget};
use fjq_core::orbit_calculus::{
    dim_flag, dim_ftilde, enumerate_theta, estimate_bound, fiber_dims, pi_component_count, pi_dim,
    pi_stratum_fiber_dim, semismall_report,
};
use fjq_core::partitions::{enumerate_partitions, weak_compositions};
use fjq_core::{acceptance, MultiComposition, OrbitMatrix, SymFunc};
use num_bigint::BigInt;
use num_rational::BigRational;
use serde::Serialize;
use serde_json::{json, Value};

use crate::parse::{parse_framing, parse_list, parse_multicomposition, parse_rationals};
use crate::{Cli, CliError, Command};

/// A subcommand's payload before it is wrapped in the envelope.
#[derive(Debug)]
pub struct Report {
    pub parameters: Value,
    pub results: Value,
    /// Verdict details; `passed` is filled in from [`Report::passed`].
    pub verdict: Value,
    pub passed: bool,
    pub tsv: Option<String>,
    /// Human-readable lines for standard error.
    pub summary: Option<String>,
}

impl Report {
    fn new(parameters: Value, results: Value, passed: bool) -> Self {
        Report {
            parameters,
            results,
            verdict: json!({}),
            passed,
            tsv: None,
            summary: None,
        }
    }
}

pub(crate) fn to_value<T: Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("reports serialize")
}

pub(crate) fn matrix_cell(m: &OrbitMatrix) -> String {
    m.rows()
        .iter()
        .map(|r| r.iter().map(usize::to_string).collect::<Vec<_>>().join(","))
        .collect::<Vec<_>>()
        .join(";")
}

fn tsv(header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> String {
    let mut out = header.join("\t");
    out.push('\n');
    for row in rows {
        out.push_str(&row.join("\t"));
        out.push('\n');
    }
    out
}

fn primes(s: &str) -> Result<Vec<u32>, CliError> {
    parse_list(s)?
        .into_iter()
        .map(|p| {
            u32::try_from(p).map_err(|_| CliError::Input {
                message: format!("prime {p} is too large"),
                position: None,
            })
        })
        .collect()
}

pub fn run(cmd: &Command, cli: &Cli) -> Result<Report, CliError> {
    let budget = Budget::new(cli.budget);
    match cmd {
        Command::Dims { nu, d } => {
            let shape = parse_multicomposition(nu)?;
            let framing = parse_framing(d)?;
            let (f1, f2) = fiber_dims(&shape, &framing)?;
            let total = dim_ftilde(&shape, &framing)?;
            let flag = dim_flag(&shape);
            let results = json!({
                "dim_flag": flag,
                "f1": f1,
                "f2": f2,
                "dim_ftilde": total,
                "estimate_bound": estimate_bound(&shape, &framing)?,
            });
            let mut r = Report::new(json!({"nu": shape.to_string(), "d": framing.to_string()}), results, total == f1 + f2 + flag);
            r.verdict = json!({"dim_ftilde_is_f1_plus_f2_plus_dim_flag": r.passed});
            Ok(r)
        }
        Command::Theta { nu, d, bound } => {
            let shape = parse_multicomposition(nu)?;
            let framing = d.as_deref().map(parse_framing).transpose()?;
            let theta = enumerate_theta(&shape, *bound)?;
            let mut rows = Vec::with_capacity(theta.len());
            let mut table = Vec::with_capacity(theta.len());
            for m in &theta {
                let mut row = json!({
                    "matrix": to_value(m),
                    "dim_orbit": m.dim_orbit(),
                    "z_fiber": m.z_fiber(),
                    "is_block_diagonal": m.is_block_diagonal(),
                });
                let mut cells = vec![matrix_cell(m), m.dim_orbit().to_string(), m.z_fiber().to_string()];
                if let Some(f) = &framing {
                    let y = m.y_fiber(f)?;
                    row["y_fiber"] = json!(y);
                    row["dim_ym"] = json!(m.dim_orbit() + m.z_fiber() + y);
                    cells.push(y.to_string());
                    cells.push((m.dim_orbit() + m.z_fiber() + y).to_string());
                }
                cells.push(m.is_block_diagonal().to_string());
                rows.push(row);
                table.push(cells);
            }
            let header: &[&str] = if framing.is_some() {
                &["matrix", "dim_orbit", "z_fiber", "y_fiber", "dim_ym", "is_block_diagonal"]
            } else {
                &["matrix", "dim_orbit", "z_fiber", "is_block_diagonal"]
            };
            let mut r = Report::new(
                json!({"nu": shape.to_string(), "d": framing.as_ref().map(|f| f.to_string()), "bound": bound}),
                json!({"shape": to_value(&shape), "count": theta.len(), "rows": rows}),
                true,
            );
            r.tsv = Some(tsv(header, table));
            Ok(r)
        }
        Command::Semismall { nu, d, bound } => {
            let shape = parse_multicomposition(nu)?;
            let framing = parse_framing(d)?;
            let report = semismall_report(&shape, &framing, *bound)?;
            let table = report.rows.iter().map(|row| {
                vec![
                    matrix_cell(&row.matrix),
                    row.dim_orbit.to_string(),
                    row.z_fiber.to_string(),
                    row.y_fiber.to_string(),
                    row.dim_ym.to_string(),
                    row.is_block_diagonal.to_string(),
                ]
            });
            let tsv_text = tsv(&["matrix", "dim_orbit", "z_fiber", "y_fiber", "dim_ym", "is_block_diagonal"], table);
            let passed = report.verdict.all();
            let mut r = Report::new(
                json!({"nu": shape.to_string(), "d": framing.to_string(), "bound": bound}),
                to_value(&report),
                passed,
            );
            r.verdict = to_value(&report.verdict);
            r.tsv = Some(tsv_text);
            Ok(r)
        }
        Command::Decompose { nu } => {
            let sizes = parse_list(nu)?;
            let table = decompose_l1(&sizes);
            let tsv_text = tsv(
                &["label", "multiplicity"],
                table.rows.iter().map(|row| vec![row.label.to_string(), row.multiplicity.to_string()]),
            );
            let passed = table.checksum_holds();
            let mut r = Report::new(json!({"nu": sizes}), to_value(&table), passed);
            r.verdict = json!({"sum_of_squares_is_group_order": passed});
            r.tsv = Some(tsv_text);
            Ok(r)
        }
        Command::CountSheaves { nu, m } => {
            if *m == 0 {
                return Err(CliError::Input { message: "m must be at least 1".into(), position: None });
            }
            let count = count_sheaves(*nu, *m);
            let terms: Vec<Value> = weak_compositions(*nu, *m)
                .into_iter()
                .map(|sizes| {
                    let product = sizes
                        .iter()
                        .fold(num_bigint::BigUint::from(1u32), |acc, &k| acc * fjq_core::partitions::p_count(k));
                    json!({"sizes": sizes, "product": product.to_string()})
                })
                .collect();
            let index = sheaf_index(*nu, *m);
            let tensor = graded_dim_tensor(*nu, *m);
            let passed = num_bigint::BigUint::from(index.len()) == count && tensor == count;
            let mut r = Report::new(
                json!({"nu": nu, "m": m}),
                json!({
                    "count": count.to_string(),
                    "terms": terms,
                    "label_enumeration": index.len().to_string(),
                    "graded_dim_tensor": tensor.to_string(),
                }),
                passed,
            );
            r.verdict = json!({"enumeration_agrees": passed});
            Ok(r)
        }
        Command::SchurDims { n, nu } => {
            if *n == 0 {
                return Err(CliError::Input { message: "N must be at least 1".into(), position: None });
            }
            let sizes = parse_list(nu)?;
            let dims: Vec<String> = sizes.iter().map(|&k| schur_dim(*n, k).to_string()).collect();
            Ok(Report::new(
                json!({"n": n, "nu": sizes}),
                json!({"schur_dims": dims, "product": z_htop_dim(*n, &sizes).to_string()}),
                true,
            ))
        }
        Command::FockCheck { d, h_degree, hprime_degree, hall_degree } => {
            let charges = parse_rationals(d)?;
            if *h_degree == 0 || *hprime_degree == 0 {
                return Err(CliError::Input { message: "degree bounds must be at least 1".into(), position: None });
            }
            let mut passed = true;
            let mut h_reports = Vec::new();
            for c in &charges {
                let rep = verify_h_relations(c, *h_degree)?;
                passed &= rep.passed();
                h_reports.push(to_value(&rep));
            }
            let hprime = verify_hprime_relations(*hprime_degree)?;
            let primitive = verify_scaled_primitive(*hprime_degree)?;
            passed &= hprime.passed() && primitive.passed();
            let mut pairs = 0u64;
            let mut disagreements = Vec::new();
            for n in 0..=*hall_degree {
                let keys = enumerate_partitions(n);
                for a in &keys {
                    for b in &keys {
                        pairs += 1;
                        let matrices = BigRational::from_integer(BigInt::from(hall_pair_matrices(a, b)));
                        let powersum = hall_pair_powersum(&SymFunc::monomial(a.clone()), &SymFunc::monomial(b.clone()));
                        if matrices != powersum {
                            disagreements.push(json!([to_value(a), to_value(b)]));
                        }
                    }
                }
            }
            passed &= disagreements.is_empty();
            let mut r = Report::new(
                json!({
                    "d": charges.iter().map(fjq_core::format_rational).collect::<Vec<_>>(),
                    "h_degree": h_degree,
                    "hprime_degree": hprime_degree,
                    "hall_degree": hall_degree,
                }),
                json!({
                    "h": h_reports,
                    "hprime": to_value(&hprime),
                    "scaled_primitive": to_value(&primitive),
                    "hall_pairing": {"pairs": pairs, "disagreements": disagreements},
                }),
                passed,
            );
            r.verdict = json!({"convention": hprime.convention});
            Ok(r)
        }
        Command::FqVerify { nu, d, p, lambda } => {
            let shape = parse_multicomposition(nu)?;
            let framing = parse_framing(d)?;
            let primes = primes(p)?;
            let mut passed = true;
            let mut reports = Vec::new();
            for &q in &primes {
                let stable = count_stable_pairs(&shape, &framing, q, &budget)?;
                let y = y_point_count(&shape, &framing, q, &budget)?;
                passed &= stable.all_match() && y.all_match();
                let mut entry = json!({"p": q, "stable_pairs": to_value(&stable), "y_points": to_value(&y)});
                if *lambda {
                    let l = lambda_point_count(shape.total(), q, &budget)?;
                    passed &= l.all_match();
                    entry["lambda_points"] = to_value(&l);
                }
                reports.push(entry);
            }
            let strata = weak_compositions(shape.total(), framing.m())
                .into_iter()
                .map(|parts| {
                    let fiber = pi_stratum_fiber_dim(&parts, &framing)?;
                    Ok(json!({"type": parts, "fiber_dim": fiber}))
                })
                .collect::<Result<Vec<_>, fjq_core::Error>>()?;
            let pi = json!({
                "dim": pi_dim(shape.total(), framing.total()),
                "component_count": pi_component_count(shape.total(), framing.m()).to_string(),
                "strata": strata,
            });
            Ok(Report::new(
                json!({"nu": shape.to_string(), "d": framing.to_string(), "p": primes, "lambda": lambda}),
                json!({"reports": reports, "pi": pi}),
                passed,
            ))
        }
        Command::OrbitDemo { p } => {
            let primes = primes(p)?;
            let mut passed = true;
            let mut reports = Vec::new();
            for &q in &primes {
                let r = orbit_family_demo(q, &budget)?;
                passed &= r.all_distinct();
                reports.push(to_value(&r));
            }
            let mut r = Report::new(json!({"p": primes}), json!({"reports": reports}), passed);
            r.verdict = json!({"orbits_equal_points": passed});
            Ok(r)
        }
        Command::Acceptance { only } => {
            let outcomes = match only {
                Some(id) => vec![acceptance::run(*id).ok_or_else(|| CliError::Input {
                    message: format!("no acceptance criterion {id}"),
                    position: None,
                })?],
                None => acceptance::run_all(),
            };
            let passed = outcomes.iter().all(|o| o.passed);
            let summary: String = outcomes
                .iter()
                .map(|o| format!("{} criterion {}: {} ({})\n", if o.passed { "PASS" } else { "FAIL" }, o.id, o.title, o.detail))
                .collect();
            let mut r = Report::new(json!({"only": only}), json!({"criteria": to_value(&outcomes)}), passed);
            r.verdict = json!({
                "failed": outcomes.iter().filter(|o| !o.passed).map(|o| o.id).collect::<Vec<_>>(),
            });
            r.summary = Some(summary);
            Ok(r)
        }
    }
}

/// Shape reconstructed from its serialized block list.
pub(crate) fn shape_from_value(v: &Value) -> Option<MultiComposition> {
    let blocks: Vec<Vec<usize>> = serde_json::from_value(v.clone()).ok()?;
    MultiComposition::new(blocks).ok()
}
