//! Subcommand implementations. Each returns whether its verdict passed.

use std::fs::File;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};
use tfe_core::codec::{average_data_rate, synthesize_from_tuple, CoderController};
use tfe_core::entropy::{
    estimate_rwtfe, estimate_wtfe, fekete_diagnostics, necessity_bruteforce, refinement_covers,
    subadditivity_violations, BruteForceVerdict, EntropyEstimate, FeketeDiagnostics, InvarianceTuple,
    RefinementDiagnostics,
};
use tfe_core::reach::{verify_constraint_c, verify_constraint_rc, ConstraintReport};
use tfe_core::simloop::{check_robust_weak_invariance, check_weak_invariance, run_closed_loop, InvarianceVerdict};

use crate::config::ExperimentConfig;
use crate::report;

pub const KIND_ESTIMATE: &str = "estimate";
pub const KIND_WITNESS: &str = "witness";
pub const KIND_CC: &str = "coder_controller";
pub const KIND_SYNTHESIS: &str = "synthesis";
pub const KIND_TRACE: &str = "trace";
pub const KIND_VERDICT: &str = "verdict";
pub const KIND_DIAGNOSE: &str = "diagnose";
pub const KIND_BRUTEFORCE: &str = "bruteforce";

/// What a command produced.
#[derive(Debug, Clone)]
pub struct Outcome {
    pub pass: bool,
    pub summary: String,
    pub files: Vec<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimateReport {
    pub plant: String,
    pub robust_radius: f64,
    pub delta_k: f64,
    pub estimate: EntropyEstimate,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthesisReport {
    pub period: usize,
    pub alphabets: Vec<usize>,
    pub rate: f64,
    pub symbols: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifyReport {
    pub weak: InvarianceVerdict,
    pub robust: Option<InvarianceVerdict>,
    pub invariance_times: Vec<usize>,
    pub rate: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiagnoseReport {
    pub refinement: RefinementDiagnostics,
    pub fekete: FeketeDiagnostics,
    pub subadditivity_violations: Vec<(usize, usize)>,
}

fn csv_writer(path: &Path) -> Result<csv::Writer<File>> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir)?;
    }
    csv::Writer::from_path(path).with_context(|| format!("creating {}", path.display()))
}

fn check_constraint(cfg: &ExperimentConfig, tuple: &InvarianceTuple) -> Result<ConstraintReport> {
    let plant = cfg.plant()?;
    Ok(if tuple.is_robust() {
        verify_constraint_rc(&plant, tuple)?
    } else {
        verify_constraint_c(&plant, tuple)?
    })
}

pub fn estimate(cfg: &ExperimentConfig) -> Result<Outcome> {
    let plant = cfg.plant()?;
    let budget = cfg.budget(&plant);
    let est = if cfg.radius > 0.0 {
        estimate_rwtfe(&plant, &budget)?
    } else {
        estimate_wtfe(&plant, &budget)?
    };
    let out = cfg.output_dir();
    let est_path = out.join("estimate.json");
    let witness_path = out.join("witness.json");
    let table_path = out.join("rate_table.csv");
    report::write(&witness_path, KIND_WITNESS, &est.witness)?;
    let mut w = csv_writer(&table_path)?;
    w.write_record(["s", "v", "tau", "n", "h", "exact", "note"])?;
    for row in &est.table {
        let v: Vec<String> = row.v.0.iter().map(usize::to_string).collect();
        w.write_record([
            row.s.to_string(),
            v.join(" "),
            row.tau.to_string(),
            row.n.map_or(String::new(), |n| n.to_string()),
            row.h.map_or(String::new(), |h| format!("{h:.17}")),
            row.exact_subcover.to_string(),
            row.note.clone().unwrap_or_default(),
        ])?;
    }
    w.flush()?;
    let summary = format!(
        "h_upper = {:.12} bits/sample (N = {}, s = {}, tau = {}, radius = {})",
        est.h_upper, est.n, est.witness.s, est.witness.tau, cfg.radius
    );
    report::write(
        &est_path,
        KIND_ESTIMATE,
        &EstimateReport {
            plant: plant.name.clone(),
            robust_radius: cfg.radius,
            delta_k: cfg.delta_k,
            estimate: est,
        },
    )?;
    Ok(Outcome {
        pass: true,
        summary,
        files: vec![est_path, witness_path, table_path],
    })
}

pub fn synthesize(cfg: &ExperimentConfig, witness: &Path) -> Result<Outcome> {
    let plant = cfg.plant()?;
    let tuple: InvarianceTuple = report::read(witness, KIND_WITNESS)?;
    let check = check_constraint(cfg, &tuple)?;
    if !check.ok {
        let detail = check
            .failing
            .and_then(|i| check.certificates.get(i))
            .and_then(|c| c.iter().find(|c| !c.contained_in_int_k))
            .map(|c| serde_json::to_string(c).unwrap_or_default())
            .unwrap_or_else(|| "witness is not a cover of its target".into());
        bail!("stale witness refused (element {:?}): {detail}", check.failing);
    }
    let cc = synthesize_from_tuple(&plant, &tuple)?;
    let rate = average_data_rate(&cc)?;
    let out = cfg.output_dir();
    let cc_path = out.join("cc.json");
    let syn_path = out.join("synthesis.json");
    report::write(&cc_path, KIND_CC, &cc)?;
    report::write(
        &syn_path,
        KIND_SYNTHESIS,
        &SynthesisReport {
            period: cc.period,
            alphabets: cc.alphabets.clone(),
            rate,
            symbols: cc.symbols(),
        },
    )?;
    Ok(Outcome {
        pass: true,
        summary: format!("alphabets {:?}, rate {rate:.12} bits/sample", cc.alphabets),
        files: vec![cc_path, syn_path],
    })
}

pub fn simulate(cfg: &ExperimentConfig, cc_path: &Path, x0: &[f64], horizon: Option<usize>) -> Result<Outcome> {
    let plant = cfg.plant()?;
    let cc: CoderController = report::read(cc_path, KIND_CC)?;
    cc.validate(&plant)?;
    if x0.len() != plant.state_dim {
        bail!("x0 needs {} coordinates, got {}", plant.state_dim, x0.len());
    }
    let horizon = horizon.unwrap_or(3 * cc.period);
    let trace = run_closed_loop(&plant, &cc, x0, horizon);
    let out = cfg.output_dir();
    let csv_path = out.join("trace.csv");
    let json_path = out.join("trace.json");
    std::fs::create_dir_all(&out)?;
    trace.write_csv(File::create(&csv_path)?)?;
    report::write(&json_path, KIND_TRACE, &trace)?;
    let summary = match &trace.fault {
        Some(f) => format!("fault at step {}: {}", f.step, f.reason),
        None => format!(
            "{} steps, {} bits sent, final state {:?}",
            horizon,
            trace.total_bits(),
            trace.states.last().unwrap()
        ),
    };
    Ok(Outcome {
        pass: trace.fault.is_none(),
        summary,
        files: vec![csv_path, json_path],
    })
}

pub fn verify(cfg: &ExperimentConfig, cc_path: &Path, q: Option<usize>) -> Result<Outcome> {
    let plant = cfg.plant()?;
    let mut cc: CoderController = report::read(cc_path, KIND_CC)?;
    cc.validate(&plant)?;
    let q = q.unwrap_or(cc.cycle());
    let grid = cfg.sweep_grid(&plant);
    cc.invariance_times.clear();
    let weak = check_weak_invariance(&plant, &mut cc, q, &grid);
    let robust = if cfg.radius > 0.0 {
        Some(check_robust_weak_invariance(&plant, &mut cc, q, &grid, cfg.radius)?)
    } else {
        None
    };
    let pass = weak.pass && robust.as_ref().is_none_or(|r| r.pass);
    let rate = average_data_rate(&cc).ok();
    let out = cfg.output_dir();
    let path = out.join("verdict.json");
    let summary = format!(
        "q = {q}: weak {} ({} points, {} counterexamples){}{}",
        if weak.pass { "pass" } else { "FAIL" },
        weak.checked,
        weak.counterexamples.len(),
        robust
            .as_ref()
            .map_or(String::new(), |r| format!(", robust r = {}: {}", r.radius, if r.pass { "pass" } else { "FAIL" })),
        rate.map_or(String::new(), |r| format!(", rate {r:.12}")),
    );
    report::write(
        &path,
        KIND_VERDICT,
        &VerifyReport {
            weak,
            robust,
            invariance_times: cc.invariance_times.iter().copied().collect(),
            rate,
        },
    )?;
    Ok(Outcome {
        pass,
        summary,
        files: vec![path],
    })
}

pub fn diagnose(cfg: &ExperimentConfig, witness: &Path) -> Result<Outcome> {
    let plant = cfg.plant()?;
    let tuple: InvarianceTuple = report::read(witness, KIND_WITNESS)?;
    let refinement = refinement_covers(&plant, &tuple, cfg.diagnose.j_max, &cfg.refinement_resolution(&plant))?;
    let fekete = fekete_diagnostics(&refinement);
    let violations = subadditivity_violations(&refinement);
    let out = cfg.output_dir();
    let json_path = out.join("diagnose.json");
    let csv_path = out.join("fekete.csv");
    let mut w = csv_writer(&csv_path)?;
    w.write_record(["j", "n_beta", "exact", "rate", "running_inf"])?;
    for j in 0..refinement.n_beta.len() {
        w.write_record([
            (j + 1).to_string(),
            refinement.n_beta[j].to_string(),
            refinement.exact[j].to_string(),
            format!("{:.17}", fekete.per_j_rates[j]),
            format!("{:.17}", fekete.running_inf[j]),
        ])?;
    }
    w.flush()?;
    let pass = violations.is_empty() && fekete.bounded_by_first;
    let summary = format!(
        "N(beta_j) = {:?}, subadditivity violations {:?}, rates bounded by j = 1: {}",
        refinement.n_beta, violations, fekete.bounded_by_first
    );
    report::write(
        &json_path,
        KIND_DIAGNOSE,
        &DiagnoseReport {
            refinement,
            fekete,
            subadditivity_violations: violations,
        },
    )?;
    Ok(Outcome {
        pass,
        summary,
        files: vec![json_path, csv_path],
    })
}

pub fn bruteforce(cfg: &ExperimentConfig) -> Result<Outcome> {
    let plant = cfg.plant()?;
    let b = &cfg.bruteforce;
    let limits = cfg.brute_limits();
    let mut verdicts: Vec<BruteForceVerdict> = Vec::new();
    for m in 1..=b.m_max {
        let v = necessity_bruteforce(&plant, b.tau, m, b.breakpoint_step, &limits)?;
        let done = v.feasible;
        verdicts.push(v);
        if done {
            break;
        }
    }
    let feasible_at = verdicts.iter().find(|v| v.feasible).map(|v| v.m);
    let path = cfg.output_dir().join("bruteforce.json");
    report::write(&path, KIND_BRUTEFORCE, &verdicts)?;
    let summary = match feasible_at {
        Some(m) => format!("tau = {}: infeasible for m < {m}, feasible at m = {m}", b.tau),
        None => format!("tau = {}: infeasible for every m <= {}", b.tau, b.m_max),
    };
    Ok(Outcome {
        pass: feasible_at.is_some(),
        summary,
        files: vec![path],
    })
}
