use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Result;
use cdt_core::coverage::min_increment_check;
use cdt_core::oracle::{
    approx_ratio_sweep, optimal_cost_unmemoized, optimal_tree, random_tiny, standard_functions,
    submodularity_audit_with, AuditReport, CoverageFn, SweepRow, TinySpec,
};
use clap::Args;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::io::write_atomic;
use crate::EXIT_PROPERTY;

#[derive(Debug, Args)]
pub struct AuditArgs {
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Number of random tiny instances.
    #[arg(long, default_value_t = 100)]
    pub count: usize,
    /// λ values for the ratio sweep (repeatable).
    #[arg(long = "lambda", default_values_t = [0.0, 1.0])]
    pub lambdas: Vec<f64>,
    /// Directory for sweep.csv and audit.json.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Self-test: audit a sign-flipped f_or, which must be caught.
    #[arg(long)]
    pub corrupt: bool,
}

#[derive(Debug, Serialize)]
struct InstanceFailure {
    instance_seed: u64,
    kind: &'static str,
    detail: serde_json::Value,
}

#[derive(Debug, Serialize)]
struct AuditSummary {
    seed: u64,
    count: usize,
    corrupted: bool,
    audit_checks: usize,
    sweep_rows: usize,
    max_ratio: f64,
    failures: Vec<InstanceFailure>,
}

fn functions(corrupt: bool) -> Vec<(&'static str, CoverageFn)> {
    let mut fs = standard_functions();
    if corrupt {
        for f in fs.iter_mut().filter(|f| f.0 == "f_or") {
            f.1 = |c, w, n| -c.f_or(w, n);
        }
    }
    fs
}

pub fn run(args: AuditArgs) -> Result<ExitCode> {
    let spec = TinySpec::default();
    let fns = functions(args.corrupt);
    let per_instance: Vec<(usize, Vec<InstanceFailure>)> = (0..args.count as u64)
        .into_par_iter()
        .map(|k| {
            let instance_seed = args.seed.wrapping_add(k);
            let tiny = random_tiny(&mut ChaCha8Rng::seed_from_u64(instance_seed), &spec);
            let mut failures = Vec::new();
            let report: AuditReport = submodularity_audit_with(&tiny, &fns);
            if !report.passed {
                failures.push(InstanceFailure {
                    instance_seed,
                    kind: "submodularity",
                    detail: serde_json::to_value(&report.counterexample).unwrap_or_default(),
                });
            }
            let inc = min_increment_check(tiny.instance());
            if !inc.holds {
                failures.push(InstanceFailure {
                    instance_seed,
                    kind: "min_increment",
                    detail: serde_json::json!({ "observed": inc.observed, "bound": inc.bound }),
                });
            }
            let memo = optimal_tree(&tiny).expected_cost;
            let plain = optimal_cost_unmemoized(&tiny);
            if memo != plain {
                failures.push(InstanceFailure {
                    instance_seed,
                    kind: "optimum_mismatch",
                    detail: serde_json::json!({ "memoized": memo, "unmemoized": plain }),
                });
            }
            (report.checks, failures)
        })
        .collect();
    let checks = per_instance.iter().map(|p| p.0).sum();
    let mut failures: Vec<InstanceFailure> = per_instance.into_iter().flat_map(|p| p.1).collect();

    let sweep = approx_ratio_sweep(args.seed, args.count, &args.lambdas, &spec)?;
    for row in sweep.iter().filter(|r| !r.within_bound()) {
        failures.push(InstanceFailure {
            instance_seed: row.instance_seed,
            kind: "ratio_bound",
            detail: serde_json::to_value(row)?,
        });
    }
    let max_ratio = sweep.iter().map(|r| r.ratio).fold(1.0, f64::max);
    let summary = AuditSummary {
        seed: args.seed,
        count: args.count,
        corrupted: args.corrupt,
        audit_checks: checks,
        sweep_rows: sweep.len(),
        max_ratio,
        failures,
    };

    if let Some(dir) = &args.out {
        write_atomic(&dir.join("sweep.csv"), &sweep_csv(&sweep)?)?;
        write_atomic(
            &dir.join("audit.json"),
            serde_json::to_string_pretty(&summary)?.as_bytes(),
        )?;
    }
    println!(
        "{} instances, {} audit checks, {} sweep rows, max ratio {:.4}",
        args.count, checks, summary.sweep_rows, max_ratio
    );
    if summary.failures.is_empty() {
        println!("audit: PASS");
        Ok(ExitCode::SUCCESS)
    } else {
        println!("audit: FAIL ({} failures)", summary.failures.len());
        // first counterexample in full
        eprintln!("{}", serde_json::to_string_pretty(&summary.failures[0])?);
        Ok(ExitCode::from(EXIT_PROPERTY))
    }
}

fn sweep_csv(rows: &[SweepRow]) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    if rows.is_empty() {
        w.write_record([
            "instance_seed",
            "n",
            "m",
            "lambda",
            "greedy_cost",
            "optimal_cost",
            "ratio",
            "bound",
        ])?;
    }
    for r in rows {
        w.serialize(r)?;
    }
    Ok(w.into_inner().map_err(|e| e.into_error())?)
}
