//! Subcommand implementations. Each run owns one output directory and
//! writes a manifest naming every produced file with its content hash.

use crate::config::ExperimentConfig;
use crate::manifest::Manifest;
use anyhow::{bail, Context, Result};
use pilotwave::{
    check_equivariance, continuity_residual, estimate_h, io, l1_distance, suite,
    DensityFunctional, Verdict,
};
use serde::Serialize;
use std::path::Path;

/// Overall run outcome; maps to the process exit code.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RunOutcome {
    Pass,
    VerdictFailed,
}

pub struct RunContext<'a> {
    pub config: ExperimentConfig,
    pub config_dir: &'a Path,
    pub seed: u64,
    pub threads: usize,
}

impl RunContext<'_> {
    fn manifest(&self, command: &str) -> Result<Manifest> {
        Manifest::new(
            command,
            &self.config.output,
            self.seed,
            self.threads,
            serde_json::to_value(&self.config)?,
        )
    }
}

pub fn propagate(ctx: &RunContext) -> Result<RunOutcome> {
    let record = ctx.config.build_record(ctx.config_dir)?;
    let mut manifest = ctx.manifest("propagate")?;
    let norms: Vec<(f64, f64)> = (0..record.frame_count())
        .map(|i| (record.frame_time(i), record.frame(i).psi().l2_norm_sq()))
        .collect();
    io::write_norms_csv(&manifest.artifact("norms.csv"), &norms)?;
    io::write_wavefunction(
        &manifest.artifact("final.wf"),
        record.frame(record.frame_count() - 1).psi(),
    )?;
    let density = record
        .frame(record.frame_count() - 1)
        .psi()
        .density_of()
        .normalize()?;
    io::write_density_csv(&manifest.artifact("final_density.csv"), &density)?;
    let path = manifest.write()?;
    println!(
        "propagated {} frames; norms and final state under {}",
        record.frame_count(),
        path.parent().unwrap().display()
    );
    Ok(RunOutcome::Pass)
}

pub fn trajectories(ctx: &RunContext) -> Result<RunOutcome> {
    let record = ctx.config.build_record(ctx.config_dir)?;
    let cfg = ctx.config.flow_config();
    let p0 = DensityFunctional::Equilibrium.eval_density(record.frame(0).psi())?;
    let starts = p0.sample(ctx.config.trajectory_count, ctx.seed)?;
    let mut manifest = ctx.manifest("trajectories")?;
    let mut flagged = 0usize;
    for (i, &q0) in starts.points().iter().enumerate() {
        let traj = pilotwave::advance_trajectory(q0, &record, 0.0, record.t_final(), &cfg)?;
        if traj.node_degenerate() {
            flagged += 1;
        }
        io::write_trajectory_csv(
            &manifest.artifact(&format!("trajectory_{i:03}.csv")),
            record.grid().dim(),
            &traj,
        )?;
    }
    let path = manifest.write()?;
    println!(
        "{} trajectories written under {} ({} node-degenerate)",
        starts.len(),
        path.parent().unwrap().display(),
        flagged
    );
    Ok(RunOutcome::Pass)
}

fn parsed_functionals(config: &ExperimentConfig) -> Result<Vec<DensityFunctional>> {
    config
        .functionals
        .iter()
        .map(|s| {
            s.parse::<DensityFunctional>()
                .map_err(|e| anyhow::anyhow!("bad functional `{s}`: {e}"))
        })
        .collect()
}

pub fn equivariance(ctx: &RunContext) -> Result<RunOutcome> {
    let record = ctx.config.build_record(ctx.config_dir)?;
    let cfg = ctx.config.flow_config();
    let thresholds = ctx.config.thresholds();
    let mut manifest = ctx.manifest("equivariance")?;
    let mut all_pass = true;
    for f in parsed_functionals(&ctx.config)? {
        let report = check_equivariance(
            &f,
            &record,
            ctx.config.ensemble.count,
            ctx.seed,
            &ctx.config.checkpoints,
            &cfg,
            thresholds,
        )?;
        let slug = f.to_string().replace([':', '=', '(', ')', ','], "_");
        io::write_report_json(&manifest.artifact(&format!("report_{slug}.json")), &report)?;
        io::write_report_series_csv(&manifest.artifact(&format!("series_{slug}.csv")), &report)?;
        println!(
            "{f}: verdict {:?} (max KS {:.4}, max L1 {:.4}, residual {:.3e}, excluded {:.2e})",
            report.verdict,
            report.max_ks(),
            report.max_l1(),
            report.residual_norm,
            report.excluded_fraction
        );
        all_pass &= report.verdict == Verdict::Pass;
    }
    manifest.write()?;
    Ok(if all_pass {
        RunOutcome::Pass
    } else {
        RunOutcome::VerdictFailed
    })
}

#[derive(Serialize)]
struct ResidualRow {
    functional: String,
    residual: f64,
    h_extreme: f64,
}

pub fn residual(ctx: &RunContext) -> Result<RunOutcome> {
    let record = ctx.config.build_record(ctx.config_dir)?;
    let mut manifest = ctx.manifest("residual")?;
    let mut rows = Vec::new();
    for f in parsed_functionals(&ctx.config)? {
        let r = continuity_residual(&f, &record)?;
        let h_extreme = estimate_h(&f, &record)?
            .into_iter()
            .map(|(_, h)| h)
            .fold(0.0f64, |a, b| if b.abs() > a.abs() { b } else { a });
        println!("{f}: continuity residual {r:.6e}, h extreme {h_extreme:.3e}");
        rows.push(ResidualRow {
            functional: f.to_string(),
            residual: r,
            h_extreme,
        });
    }
    std::fs::write(
        manifest.artifact("residuals.json"),
        serde_json::to_string_pretty(&rows)?,
    )?;
    manifest.write()?;
    Ok(RunOutcome::Pass)
}

#[derive(Serialize)]
struct ErgodicSummary {
    t_short: f64,
    t_long: f64,
    l1_short: f64,
    l1_long: f64,
    decay_factor: f64,
}

pub fn ergodic(ctx: &RunContext) -> Result<RunOutcome> {
    let grid = ctx.config.grid()?;
    let potential = ctx.config.potential_spec(ctx.config_dir, &grid)?;
    let state = ctx
        .config
        .superposition(grid, &potential)?
        .context("ergodic runs need a superposition initial state")?;
    let e = &ctx.config.ergodic;
    let phase_avg = pilotwave::phase_average(&state).normalize()?;
    let short = pilotwave::ergodic_time_average(&state, e.t_short, e.samples_short)?.normalize()?;
    let long = pilotwave::ergodic_time_average(&state, e.t_long, e.samples_long)?.normalize()?;
    let summary = ErgodicSummary {
        t_short: e.t_short,
        t_long: e.t_long,
        l1_short: l1_distance(&short, &phase_avg)?,
        l1_long: l1_distance(&long, &phase_avg)?,
        decay_factor: l1_distance(&short, &phase_avg)? / l1_distance(&long, &phase_avg)?,
    };
    let mut manifest = ctx.manifest("ergodic")?;
    io::write_density_csv(&manifest.artifact("time_average.csv"), &long)?;
    io::write_density_csv(&manifest.artifact("phase_average.csv"), &phase_avg)?;
    std::fs::write(
        manifest.artifact("ergodic.json"),
        serde_json::to_string_pretty(&summary)?,
    )?;
    manifest.write()?;
    println!(
        "time-average L1: {:.4} at T={}, {:.4} at T={} (decay x{:.2})",
        summary.l1_short, summary.t_short, summary.l1_long, summary.t_long, summary.decay_factor
    );
    Ok(RunOutcome::Pass)
}

#[derive(Serialize)]
struct GapRow {
    functional: String,
    max_ks: f64,
    ks_factor: f64,
    residual: f64,
    residual_factor: f64,
    equivariance: String,
}

pub fn falsify(ctx: &RunContext) -> Result<RunOutcome> {
    let record = ctx.config.build_record(ctx.config_dir)?;
    let cfg = ctx.config.flow_config();
    let thresholds = ctx.config.thresholds();
    let mut manifest = ctx.manifest("falsify")?;

    let baseline = check_equivariance(
        &DensityFunctional::Equilibrium,
        &record,
        ctx.config.ensemble.count,
        ctx.seed,
        &ctx.config.checkpoints,
        &cfg,
        thresholds,
    )?;
    let mut rows = vec![GapRow {
        functional: "equilibrium".into(),
        max_ks: baseline.max_ks(),
        ks_factor: 1.0,
        residual: baseline.residual_norm,
        residual_factor: 1.0,
        equivariance: format!("{:?}", baseline.verdict),
    }];
    let mut ok = baseline.verdict == Verdict::Pass;
    for f in suite::standard_candidates() {
        let rep = check_equivariance(
            &f,
            &record,
            suite::FALSIFY_ENSEMBLE_SIZE.min(ctx.config.ensemble.count),
            ctx.seed,
            &ctx.config.checkpoints,
            &cfg,
            thresholds,
        )?;
        let ks_factor = rep.max_ks() / baseline.max_ks();
        let residual_factor = rep.residual_norm / baseline.residual_norm;
        let falsified = ks_factor >= suite::FALSIFY_KS_FACTOR
            && residual_factor >= suite::FALSIFY_RESIDUAL_FACTOR;
        ok &= falsified;
        rows.push(GapRow {
            functional: f.to_string(),
            max_ks: rep.max_ks(),
            ks_factor,
            residual: rep.residual_norm,
            residual_factor,
            equivariance: if falsified {
                "FAIL-equivariance".into()
            } else {
                format!("{:?}", rep.verdict)
            },
        });
    }

    println!(
        "{:<18} {:>10} {:>8} {:>12} {:>8}  verdict",
        "functional", "max KS", "xKS", "residual", "xres"
    );
    for row in &rows {
        println!(
            "{:<18} {:>10.4} {:>8.1} {:>12.4e} {:>8.1}  {}",
            row.functional, row.max_ks, row.ks_factor, row.residual, row.residual_factor,
            row.equivariance
        );
    }
    std::fs::write(
        manifest.artifact("falsification.json"),
        serde_json::to_string_pretty(&rows)?,
    )?;
    manifest.write()?;
    Ok(if ok {
        RunOutcome::Pass
    } else {
        RunOutcome::VerdictFailed
    })
}

/// Run the built-in acceptance suite; ignores the experiment sections of
/// the config beyond the output directory.
pub fn run_suite(out_dir: &Path, seed: u64, threads: usize) -> Result<RunOutcome> {
    let mut manifest = Manifest::new(
        "suite",
        out_dir,
        seed,
        threads,
        serde_json::json!({ "suite": "built-in acceptance experiments" }),
    )?;
    let report = suite::run_full(|outcome| {
        println!(
            "{} {} — {}",
            outcome.id,
            if outcome.passed { "PASS" } else { "FAIL" },
            outcome.detail
        );
    })?;
    std::fs::write(
        manifest.artifact("suite_report.json"),
        serde_json::to_string_pretty(&report)?,
    )?;
    manifest.write()?;
    if report.all_passed() {
        Ok(RunOutcome::Pass)
    } else {
        Ok(RunOutcome::VerdictFailed)
    }
}

pub fn ensure_dim_for_ks(config: &ExperimentConfig) -> Result<()> {
    if config.grid.dim == 2 && config.functionals.iter().any(|f| f.starts_with("cdf:")) {
        bail!("cdf transport functionals are 1D only");
    }
    Ok(())
}
