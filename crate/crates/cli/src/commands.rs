//! The experiment commands.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rayon::prelude::*;
use spinboson::config::Method;
use spinboson::heom::{propagate, steady_state, Hierarchy};
use spinboson::observables::{
    blp_witness, entropy_production, trace_distance, MethodTag, NessReport, TrajectoryRecord,
};
use spinboson::qops::{pauli, unitary_evolution, Axis};
use spinboson::rcm::run_rcm;
use spinboson::{build_system_hamiltonian, ModelConfig};

use crate::error::{CliError, CliResult, EXIT_OK};
use crate::output::{fmt_f64, write_numeric_csv, write_text_csv};
use crate::record::RunRecord;

/// Sweep parameter.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepAxis {
    /// Temperature of bath 2.
    T2,
    /// Common tunneling amplitude `Δ₁ = Δ₂`.
    Delta,
    /// Hierarchy depth.
    L,
    /// Fock levels per reaction coordinate.
    M,
}

impl FromStr for SweepAxis {
    type Err = CliError;
    fn from_str(s: &str) -> CliResult<Self> {
        match s.to_ascii_lowercase().as_str() {
            "t2" => Ok(Self::T2),
            "delta" => Ok(Self::Delta),
            "l" => Ok(Self::L),
            "m" => Ok(Self::M),
            _ => Err(CliError::config(format!("unknown sweep axis `{s}`; expected T2, delta, L or M"))),
        }
    }
}

impl fmt::Display for SweepAxis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::T2 => "T2",
            Self::Delta => "delta",
            Self::L => "L",
            Self::M => "M",
        })
    }
}

/// What each sweep point computes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepTarget {
    Dynamics,
    Steadystate,
}

impl FromStr for SweepTarget {
    type Err = CliError;
    fn from_str(s: &str) -> CliResult<Self> {
        match s.to_ascii_lowercase().as_str() {
            "dynamics" => Ok(Self::Dynamics),
            "steadystate" => Ok(Self::Steadystate),
            _ => Err(CliError::config(format!("unknown sweep target `{s}`; expected dynamics or steadystate"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Command {
    Dynamics,
    Compare,
    /// Trace distance between the evolutions of two named initial states.
    Blp { pair: (String, String) },
    Entropy,
    Steadystate,
    Sweep { axis: SweepAxis, values: Vec<f64>, target: SweepTarget },
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Dynamics => "dynamics",
            Command::Compare => "compare",
            Command::Blp { .. } => "blp",
            Command::Entropy => "entropy",
            Command::Steadystate => "steadystate",
            Command::Sweep { .. } => "sweep",
        }
    }
}

struct Run<'a> {
    cfg: &'a ModelConfig,
    out: &'a Path,
    record: &'a mut RunRecord,
}

impl Run<'_> {
    fn output(&mut self, name: &str) -> PathBuf {
        self.record.outputs.push(name.to_string());
        self.out.join(name)
    }
}

/// Runs `command`, then writes `<command>_record.json` into `out` whether or
/// not the command succeeded. Returns the record and the exit status.
pub fn execute(command: &Command, cfg: &ModelConfig, out: &Path, args: Vec<String>) -> (RunRecord, i32) {
    let mut record = RunRecord::new(command.name(), args, Some(cfg));
    let result = std::fs::create_dir_all(out).map_err(CliError::from).and_then(|_| {
        let mut run = Run { cfg, out, record: &mut record };
        match command {
            Command::Dynamics => dynamics(&mut run),
            Command::Compare => compare(&mut run),
            Command::Blp { pair } => blp(&mut run, pair),
            Command::Entropy => entropy(&mut run),
            Command::Steadystate => steadystate(&mut run),
            Command::Sweep { axis, values, target } => sweep(&mut run, *axis, values, *target),
        }
    });
    let code = finish(&mut record, result);
    let path = out.join(format!("{}_record.json", command.name()));
    if let Err(e) = record.write(&path) {
        log::error!("could not write the run record: {e}");
    }
    (record, code)
}

/// Marks a record as finished and returns the exit status.
pub fn finish(record: &mut RunRecord, result: CliResult<()>) -> i32 {
    match result {
        Ok(()) => {
            record.status = "ok".into();
            record.exit_code = EXIT_OK;
        }
        Err(e) => {
            log::error!("{e}");
            record.status = "failed".into();
            record.error = Some(e.message);
            record.exit_code = e.code;
        }
    }
    record.exit_code
}

fn methods(cfg: &ModelConfig) -> Vec<MethodTag> {
    match cfg.method {
        Method::Heom => vec![MethodTag::Heom],
        Method::Rcm => vec![MethodTag::Rcm],
        Method::Both => vec![MethodTag::Heom, MethodTag::Rcm],
    }
}

fn trajectory(cfg: &ModelConfig, method: MethodTag, record: &mut RunRecord) -> CliResult<TrajectoryRecord> {
    let grid = cfg.numerics.time_grid();
    let traj = match method {
        MethodTag::Heom => {
            let h = record.timed("build_heom", || Hierarchy::build(cfg))?;
            record.hierarchy_size = Some(h.len());
            let ham = build_system_hamiltonian(cfg);
            let rho0 = cfg.initial.density_matrix()?;
            record.timed("propagate_heom", || propagate(&h, &ham, &rho0, &grid))?
        }
        MethodTag::Rcm => {
            record.supersystem_dim = Some(4 * cfg.numerics.m * cfg.numerics.m);
            record.timed("propagate_rcm", || run_rcm(cfg, &grid))?
        }
        MethodTag::Exact => return Err(CliError::config("closed-system evolution is emitted alongside, not run alone")),
    };
    for w in &traj.meta.warnings {
        record.warnings.push(format!("{method}: {w}"));
    }
    Ok(traj)
}

/// Columns of a dynamics file: observables of the trajectory, the
/// closed-system reference, and entropy production when available.
pub fn dynamics_table(traj: &TrajectoryRecord) -> CliResult<(Vec<String>, Vec<Vec<f64>>)> {
    let cfg = &traj.meta.config;
    let mut header: Vec<String> = ["t", "sz1", "sz2", "coherence", "entropy", "sz1_closed", "sz2_closed"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    let closed = unitary_evolution(&build_system_hamiltonian(cfg), &cfg.initial.density_matrix()?, &traj.times)?;
    let (z1, z2) = (pauli(Axis::Z, 1, 2)?, pauli(Axis::Z, 2, 2)?);
    let mut cols = vec![
        traj.times.clone(),
        traj.sigma_z(1),
        traj.sigma_z(2),
        traj.coherence(),
        traj.entropy(),
        closed.iter().map(|r| r.expectation(&z1).re).collect(),
        closed.iter().map(|r| r.expectation(&z2).re).collect(),
    ];
    if let (Some(qsb), true) = (&traj.qsb, cfg.equal_temperatures()) {
        header.extend(["sigma", "qsb1", "qsb2"].iter().map(|s| s.to_string()));
        cols.push(entropy_production(traj, cfg.bath1.beta())?);
        cols.push(qsb.iter().map(|q| q[0].re).collect());
        cols.push(qsb.iter().map(|q| q[1].re).collect());
    }
    let rows = (0..traj.len()).map(|i| cols.iter().map(|c| c[i]).collect()).collect();
    Ok((header, rows))
}

fn dynamics(run: &mut Run<'_>) -> CliResult<()> {
    for method in methods(run.cfg) {
        let traj = trajectory(run.cfg, method, run.record)?;
        let (header, rows) = dynamics_table(&traj)?;
        let path = run.output(&format!("dynamics_{method}.csv"));
        write_numeric_csv(&path, &header, &rows)?;
        let peak = traj.coherence().into_iter().fold(0.0, f64::max);
        run.record.summary.insert(format!("{method}.peak_coherence"), peak);
    }
    Ok(())
}

fn compare(run: &mut Run<'_>) -> CliResult<()> {
    let heom = trajectory(run.cfg, MethodTag::Heom, run.record)?;
    let rcm = trajectory(run.cfg, MethodTag::Rcm, run.record)?;
    for traj in [&heom, &rcm] {
        let (header, rows) = dynamics_table(traj)?;
        let path = run.output(&format!("dynamics_{}.csv", traj.meta.method));
        write_numeric_csv(&path, &header, &rows)?;
    }
    let (h1, r1, h2, r2) = (heom.sigma_z(1), rcm.sigma_z(1), heom.sigma_z(2), rcm.sigma_z(2));
    let header: Vec<String> = ["t", "sz1_heom", "sz1_rcm", "sz1_diff", "sz2_heom", "sz2_rcm", "sz2_diff"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    let rows: Vec<Vec<f64>> = (0..heom.len())
        .map(|i| vec![heom.times[i], h1[i], r1[i], (h1[i] - r1[i]).abs(), h2[i], r2[i], (h2[i] - r2[i]).abs()])
        .collect();
    let path = run.output("compare.csv");
    write_numeric_csv(&path, &header, &rows)?;
    let d1 = rows.iter().map(|r| r[3]).fold(0.0, f64::max);
    let d2 = rows.iter().map(|r| r[6]).fold(0.0, f64::max);
    run.record.summary.insert("max_abs_diff_sz1".into(), d1);
    run.record.summary.insert("max_abs_diff_sz2".into(), d2);
    println!("max |<sz1>_heom - <sz1>_rcm| = {d1:.6e}");
    println!("max |<sz2>_heom - <sz2>_rcm| = {d2:.6e}");
    Ok(())
}

fn blp(run: &mut Run<'_>, pair: &(String, String)) -> CliResult<()> {
    let method = if run.cfg.method == Method::Rcm { MethodTag::Rcm } else { MethodTag::Heom };
    let mut trajs = Vec::new();
    for name in [&pair.0, &pair.1] {
        let mut cfg = run.cfg.clone();
        cfg.set("run.initial", name)?;
        trajs.push(trajectory(&cfg, method, run.record)?);
    }
    let series = trajs[0]
        .states
        .iter()
        .zip(&trajs[1].states)
        .map(|(a, b)| trace_distance(a, b))
        .collect::<spinboson::Result<Vec<f64>>>()?;
    let w = blp_witness(&series)?;
    let rows: Vec<Vec<f64>> = trajs[0].times.iter().zip(&series).map(|(t, d)| vec![*t, *d]).collect();
    let path = run.output("blp.csv");
    write_numeric_csv(&path, &["t".into(), "trace_distance".into()], &rows)?;
    run.record.summary.insert("blp_measure".into(), w.measure);
    run.record.summary.insert("revivals".into(), w.revivals as f64);
    println!("BLP measure = {:.6e}, revivals = {}", w.measure, w.revivals);
    Ok(())
}

fn entropy(run: &mut Run<'_>) -> CliResult<()> {
    if !run.cfg.equal_temperatures() {
        return Err(CliError::config(
            "entropy production needs equal bath temperatures (set bath2.temperature = bath1.temperature)",
        ));
    }
    if run.cfg.numerics.l == 0 {
        return Err(CliError::config("entropy production needs numerics.L ≥ 1"));
    }
    let traj = trajectory(run.cfg, MethodTag::Heom, run.record)?;
    let sigma = entropy_production(&traj, run.cfg.bath1.beta())?;
    let qsb = traj.qsb.as_ref().expect("L ≥ 1 records interaction energies");
    let s = traj.entropy();
    let rows: Vec<Vec<f64>> = (0..traj.len())
        .map(|i| vec![traj.times[i], s[i], sigma[i], qsb[i][0].re, qsb[i][1].re])
        .collect();
    let header: Vec<String> = ["t", "entropy", "sigma", "qsb1", "qsb2"].iter().map(|s| s.to_string()).collect();
    let path = run.output("entropy.csv");
    write_numeric_csv(&path, &header, &rows)?;
    let min = sigma.iter().copied().fold(f64::INFINITY, f64::min);
    run.record.summary.insert("min_sigma".into(), min);
    Ok(())
}

fn ness(cfg: &ModelConfig, record: &mut RunRecord) -> CliResult<NessReport> {
    if cfg.method == Method::Rcm {
        return Err(CliError::config("steady states are computed with HEOM only; set run.method = heom"));
    }
    let h = record.timed("build_heom", || Hierarchy::build(cfg))?;
    record.hierarchy_size = Some(h.len());
    let ss = record.timed("steady_state", || steady_state(&h, &build_system_hamiltonian(cfg)))?;
    Ok(NessReport::from_steady_state(&h, &ss.state, ss.residual, ss.converged)?)
}

fn ness_rows(report: &NessReport) -> Vec<(String, f64)> {
    let mut rows = Vec::new();
    for i in 0..4 {
        for j in 0..4 {
            let z = report.rho_ness.get(i, j);
            rows.push((format!("rho_re_{i}{j}"), z.re));
            rows.push((format!("rho_im_{i}{j}"), z.im));
        }
    }
    rows.extend([
        ("coherence".to_string(), report.coherence),
        ("j21".to_string(), report.j21),
        ("j12".to_string(), report.j12),
        ("bath_current_1".to_string(), report.bath_currents[0]),
        ("bath_current_2".to_string(), report.bath_currents[1]),
        ("node_current_1".to_string(), report.node_currents[0]),
        ("node_current_2".to_string(), report.node_currents[1]),
        ("relation_discrepancy".to_string(), report.relation_discrepancy),
        ("relation_scale".to_string(), report.relation_scale),
        ("residual".to_string(), report.residual),
        ("converged".to_string(), if report.converged { 1.0 } else { 0.0 }),
    ]);
    rows
}

fn steadystate(run: &mut Run<'_>) -> CliResult<()> {
    let report = ness(run.cfg, run.record)?;
    let path = run.output("ness.json");
    std::fs::write(&path, serde_json::to_string_pretty(&report)? + "\n")?;
    let rows: Vec<Vec<String>> = ness_rows(&report).into_iter().map(|(k, v)| vec![k, fmt_f64(v)]).collect();
    let path = run.output("ness.csv");
    write_text_csv(&path, &["quantity", "value"], &rows)?;
    for (k, v) in [("coherence", report.coherence), ("j21", report.j21), ("j12", report.j12), ("residual", report.residual)] {
        run.record.summary.insert(k.into(), v);
    }
    println!(
        "C_l1 = {:.6e}, J21 = {:.6e}, j12 = {:.6e}, residual = {:.3e}",
        report.coherence, report.j21, report.j12, report.residual
    );
    if !report.converged {
        return Err(CliError::numeric(format!(
            "steady-state solve did not converge: residual {:e}",
            report.residual
        )));
    }
    Ok(())
}

/// Configuration of one sweep point.
pub fn sweep_point(cfg: &ModelConfig, axis: SweepAxis, value: f64) -> CliResult<ModelConfig> {
    let mut c = cfg.clone();
    let int = |v: f64| -> CliResult<String> {
        if v >= 0.0 && v.fract() == 0.0 {
            Ok(format!("{}", v as usize))
        } else {
            Err(CliError::config(format!("sweep axis {axis} takes nonnegative integers, got {v}")))
        }
    };
    match axis {
        SweepAxis::T2 => c.set("bath2.temperature", &value.to_string())?,
        SweepAxis::Delta => {
            c.set("system.delta1", &value.to_string())?;
            c.set("system.delta2", &value.to_string())?;
        }
        SweepAxis::L => c.set("numerics.L", &int(value)?)?,
        SweepAxis::M => c.set("numerics.M", &int(value)?)?,
    }
    c.validate()?;
    Ok(c)
}

struct PointResult {
    observables: Vec<(String, f64)>,
    table: Option<(Vec<String>, Vec<Vec<f64>>)>,
    warnings: Vec<String>,
}

fn run_point(cfg: &ModelConfig, axis: SweepAxis, value: f64, target: SweepTarget) -> CliResult<PointResult> {
    let c = sweep_point(cfg, axis, value)?;
    let mut scratch = RunRecord::new("sweep-point", Vec::new(), Some(&c));
    match target {
        SweepTarget::Dynamics => {
            let method = match axis {
                SweepAxis::M => MethodTag::Rcm,
                SweepAxis::L => MethodTag::Heom,
                _ if c.method == Method::Rcm => MethodTag::Rcm,
                _ => MethodTag::Heom,
            };
            let traj = trajectory(&c, method, &mut scratch)?;
            let (header, rows) = dynamics_table(&traj)?;
            let last = rows.last().cloned().unwrap_or_default();
            let col = |name: &str| header.iter().position(|h| h == name).expect("column present");
            let peak = rows.iter().map(|r| r[col("coherence")]).fold(0.0, f64::max);
            let observables = vec![
                ("peak_coherence".to_string(), peak),
                ("final_sz1".to_string(), last[col("sz1")]),
                ("final_sz2".to_string(), last[col("sz2")]),
                ("final_coherence".to_string(), last[col("coherence")]),
                ("final_entropy".to_string(), last[col("entropy")]),
            ];
            Ok(PointResult { observables, table: Some((header, rows)), warnings: scratch.warnings })
        }
        SweepTarget::Steadystate => {
            let report = ness(&c, &mut scratch)?;
            let observables = ness_rows(&report).into_iter().filter(|(k, _)| !k.starts_with("rho_")).collect();
            let mut warnings = scratch.warnings;
            if !report.converged {
                warnings.push(format!("steady state at {axis} = {value} did not converge"));
            }
            Ok(PointResult { observables, table: None, warnings })
        }
    }
}

/// Largest difference over all shared columns and times of two dynamics
/// tables on the same grid.
pub fn table_difference(a: &(Vec<String>, Vec<Vec<f64>>), b: &(Vec<String>, Vec<Vec<f64>>)) -> f64 {
    let mut worst: f64 = 0.0;
    for (ia, name) in a.0.iter().enumerate().skip(1) {
        let Some(ib) = b.0.iter().position(|n| n == name) else { continue };
        for (ra, rb) in a.1.iter().zip(&b.1) {
            worst = worst.max((ra[ia] - rb[ib]).abs());
        }
    }
    worst
}

fn sweep(run: &mut Run<'_>, axis: SweepAxis, values: &[f64], target: SweepTarget) -> CliResult<()> {
    if values.is_empty() {
        return Err(CliError::config("sweep needs at least one value"));
    }
    if target == SweepTarget::Steadystate && axis == SweepAxis::M {
        return Err(CliError::config("steady states use HEOM; sweep L instead of M"));
    }
    let mut values = values.to_vec();
    values.sort_by(f64::total_cmp);
    values.dedup();
    let cfg = run.cfg;
    let results: Vec<CliResult<PointResult>> = run
        .record
        .timed("sweep", || values.par_iter().map(|&v| run_point(cfg, axis, v, target)).collect());
    let mut rows = Vec::new();
    let mut first_error = None;
    let mut prev: Option<&(Vec<String>, Vec<Vec<f64>>)> = None;
    for (v, r) in values.iter().zip(&results) {
        let value = fmt_f64(*v);
        match r {
            Ok(p) => {
                for (k, x) in &p.observables {
                    rows.push(vec![axis.to_string(), value.clone(), k.clone(), fmt_f64(*x), "ok".to_string()]);
                }
                if let Some(t) = &p.table {
                    let diff = prev.map(|q| table_difference(t, q)).unwrap_or(f64::NAN);
                    rows.push(vec![
                        axis.to_string(),
                        value.clone(),
                        "successive_difference".to_string(),
                        fmt_f64(diff),
                        "ok".to_string(),
                    ]);
                    prev = Some(t);
                }
                for w in &p.warnings {
                    run.record.warnings.push(format!("{axis} = {v}: {w}"));
                }
            }
            Err(e) => {
                rows.push(vec![axis.to_string(), value, "error".to_string(), fmt_f64(f64::NAN), e.message.clone()]);
                prev = None;
                first_error.get_or_insert_with(|| e.clone());
            }
        }
    }
    let path = run.output("sweep.csv");
    write_text_csv(&path, &["axis", "value", "observable", "result", "status"], &rows)?;
    match first_error {
        Some(e) => Err(e),
        None => Ok(()),
    }
}
