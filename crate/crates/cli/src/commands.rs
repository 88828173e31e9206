use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use breatherlab::breathers::{self, BreatherSpec};
use breatherlab::checkpoint::Checkpoint;
use breatherlab::config::{ExperimentConfig, ExperimentKind};
use breatherlab::diagnostics::{compute_record, write_csv, DiagnosticsRecord};
use breatherlab::experiments::{self, InvariantOptions};
use breatherlab::plot::{self, PlotKind};
use breatherlab::{solver, Grid1D, Result};

use crate::{BreatherArg, GlobalArgs, PlotArg};

const DEFAULT_OUT: &str = "breatherlab-out";

/// Config from `--config` or the defaults for `kind`, with flag overrides applied.
fn load(g: &GlobalArgs, kind: ExperimentKind) -> Result<ExperimentConfig> {
    let mut cfg = match &g.config {
        Some(path) => ExperimentConfig::load(path)?,
        None => ExperimentConfig::default_for(kind),
    };
    if let Some(seed) = g.seed {
        cfg.seed = seed;
    }
    cfg.solver.linear |= g.linear;
    cfg.solver.project_mean |= g.project_mean;
    cfg.validate()?;
    Ok(cfg)
}

fn out_dir(g: &GlobalArgs, cfg: Option<&ExperimentConfig>) -> Result<PathBuf> {
    let dir =
        g.out.clone().or_else(|| cfg.and_then(|c| c.output_dir.clone())).unwrap_or_else(|| PathBuf::from(DEFAULT_OUT));
    fs::create_dir_all(&dir)?;
    Ok(dir)
}

pub fn simulate(g: &GlobalArgs) -> Result<u8> {
    let cfg = load(g, ExperimentKind::Simulate)?;
    let out = out_dir(g, Some(&cfg))?;
    let grid = cfg.build_grid()?;
    let w0 = cfg.build_initial(&grid)?;
    let exact = cfg.diagnostics.exact.as_ref().map(breathers::offset).transpose()?;
    let s = cfg.solver.s;

    let (trajectory, failure) = match solver::run_from(&w0, cfg.t_start, &cfg.solver) {
        Ok(t) => (t, None),
        Err(f) => (f.trajectory, Some(f.error)),
    };
    // whatever was computed before a failure is still written out
    let records = trajectory
        .snapshots
        .iter()
        .map(|snap| compute_record(&snap.field, snap.t, s, exact.as_ref()))
        .collect::<Result<Vec<DiagnosticsRecord>>>()?;
    write_csv(&out.join("diagnostics.csv"), &records)?;
    if cfg.diagnostics.field_stride > 0 {
        let file = fs::File::create(out.join("field.csv"))?;
        plot::write_field_csv(std::io::BufWriter::new(file), &trajectory.snapshots, cfg.diagnostics.field_stride)?;
    }
    let every = cfg.diagnostics.checkpoint_every;
    for (i, snap) in trajectory.snapshots.iter().enumerate() {
        if every > 0 && i % every == 0 {
            checkpoint(&cfg, &snap.field, snap.t).save(&out.join(format!("checkpoint_{i:05}.bin")))?;
        }
    }
    if let Some(last) = trajectory.snapshots.last() {
        checkpoint(&cfg, &last.field, last.t).save(&out.join("checkpoint_final.bin"))?;
    }

    if let Some(last) = records.last() {
        eprintln!(
            "t = {:.6}: ||w||_H^s = {:.6e}, mass = {:.9e}, energy = {:.9e}{}",
            last.t,
            last.hs_norm,
            last.mass_w,
            last.energy_w,
            records
                .iter()
                .filter_map(|r| r.err_vs_exact)
                .reduce(f64::max)
                .map_or(String::new(), |e| format!(", max err_vs_exact = {e:.3e}"))
        );
    }
    eprintln!("wrote {} snapshots to {}", records.len(), out.display());
    match failure {
        Some(e) => Err(e),
        None => Ok(0),
    }
}

fn checkpoint(cfg: &ExperimentConfig, field: &breatherlab::PerturbationField, t: f64) -> Checkpoint {
    Checkpoint { t, s: cfg.solver.s, scheme: cfg.solver.scheme, field: field.clone() }
}

pub fn growth_scan(g: &GlobalArgs, k: Option<Vec<f64>>, amplitude: Option<f64>) -> Result<u8> {
    let mut cfg = load(g, ExperimentKind::GrowthScan)?;
    if let Some(k) = k {
        cfg.growth_scan.ks = k;
    }
    if let Some(a) = amplitude {
        cfg.growth_scan.amplitude = a;
    }
    cfg.validate()?;
    let out = out_dir(g, Some(&cfg))?;
    let rows = experiments::growth_scan(&cfg.build_grid()?, &cfg.growth_scan, &cfg.solver, g.workers)?;
    experiments::write_growth_csv(&out.join("growth.csv"), &rows)?;
    println!("{:>8} {:>12} {:>14} {:>14} {:>10}", "k", "regime", "fitted", "theory", "abs_error");
    for r in &rows {
        println!("{:>8} {:>12} {:>14.9} {:>14.9} {:>10.2e}", r.k, r.regime, r.fitted, r.theory, r.abs_error);
    }
    Ok(0)
}

pub fn peregrine_instability(g: &GlobalArgs, horizons: Option<Vec<f64>>) -> Result<u8> {
    let mut cfg = load(g, ExperimentKind::PeregrineInstability)?;
    if let Some(h) = horizons {
        cfg.peregrine.horizons = h;
    }
    cfg.validate()?;
    let out = out_dir(g, Some(&cfg))?;
    let rows = experiments::peregrine_instability(&cfg.build_grid()?, &cfg.peregrine, &cfg.solver, g.workers)?;
    experiments::write_peregrine_csv(&out.join("peregrine.csv"), &rows)?;
    println!(
        "{:>7} {:>8} {:>12} {:>12} {:>12} {:>12} {:>12}",
        "T", "start", "|Q(-T)|_L2", "theory", "|w(0)|_L2", "dist_Q(0)", "dist_Stokes"
    );
    for r in &rows {
        println!(
            "{:>7} {:>8} {:>12.6} {:>12.6} {:>12.6} {:>12.3e} {:>12.6}",
            r.horizon,
            r.start_time,
            r.initial_l2_whole_line,
            r.initial_l2_theory,
            r.arrival_l2,
            r.distance_to_profile,
            r.distance_to_stokes
        );
    }
    Ok(0)
}

pub fn km_instability(g: &GlobalArgs, a: Option<f64>, scale: Option<f64>) -> Result<u8> {
    let mut cfg = load(g, ExperimentKind::KmInstability)?;
    if let Some(a) = a {
        cfg.km.a = a;
    }
    if let Some(scale) = scale {
        cfg.km.scale = scale;
    }
    cfg.validate()?;
    let out = out_dir(g, Some(&cfg))?;
    let report = experiments::km_instability(&cfg.build_grid()?, &cfg.km, &cfg.solver)?;
    fs::write(out.join("km.csv"), report.to_string())?;
    let ratio = report.final_ratio.map_or("undefined".into(), |r| format!("{r:.6}"));
    println!("separation ratio (final / initial) = {ratio}");
    println!("control return error (L2) = {:.3e}", report.control_return_error);
    Ok(0)
}

pub fn check_invariants(g: &GlobalArgs, inject_fault: bool) -> Result<u8> {
    let options = InvariantOptions {
        seed: g.seed.unwrap_or(0),
        inject_unguarded_kernels: inject_fault,
        ..InvariantOptions::default()
    };
    let report = experiments::check_invariants(&options)?;
    print!("{report}");
    if let Some(dir) = &g.out {
        fs::create_dir_all(dir)?;
        fs::write(dir.join("invariants.txt"), report.to_string())?;
    }
    Ok(if report.passed() { 0 } else { 1 })
}

pub fn breather_eval(
    g: &GlobalArgs,
    which: BreatherArg,
    a: f64,
    t: f64,
    length: Option<f64>,
    points: usize,
) -> Result<u8> {
    let spec = match which {
        BreatherArg::Stokes => BreatherSpec::stokes(),
        BreatherArg::Peregrine => BreatherSpec::peregrine(),
        BreatherArg::KuznetsovMa => BreatherSpec::kuznetsov_ma(a)?,
        BreatherArg::Akhmediev => BreatherSpec::akhmediev(a)?,
    };
    let length = length.or(spec.space_period()).unwrap_or(40.0);
    breathers::check_commensurate(&spec, length)?;
    let grid = Grid1D::new(length, points)?;
    match &g.out {
        Some(dir) => {
            fs::create_dir_all(dir)?;
            let path = dir.join("breather.csv");
            experiments::write_breather_table(std::io::BufWriter::new(fs::File::create(&path)?), &spec, &grid, t)?;
            eprintln!("wrote {}", path.display());
        }
        None => {
            let stdout = std::io::stdout();
            let mut lock = stdout.lock();
            experiments::write_breather_table(&mut lock, &spec, &grid, t)?;
            lock.flush()?;
        }
    }
    let peak = grid.xs().into_iter().map(|x| spec.value_at(t, x).norm()).fold(0.0, f64::max);
    eprintln!("{spec}: max |u| = {peak:.12} at t = {t}, residual = {:.3e}", breathers::residual(&spec, &grid, t)?);
    Ok(0)
}

pub fn plot(g: &GlobalArgs, csv: &Path, kind: PlotArg, output: Option<PathBuf>) -> Result<u8> {
    let (kind, name) = match kind {
        PlotArg::Heatmap => (PlotKind::Heatmap, "heatmap"),
        PlotArg::Norms => (PlotKind::Norms, "norms"),
        PlotArg::Growth => (PlotKind::Growth, "growth"),
    };
    let output = match output {
        Some(p) => p,
        None => g.out.clone().unwrap_or_else(|| PathBuf::from(".")).join(format!("{name}.png")),
    };
    if let Some(parent) = output.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent)?;
    }
    let summary = plot::plot_file(csv, kind, &output)?;
    println!(
        "{}: {}x{}, max {:.9} at ({:.6}, {:.6})",
        output.display(),
        summary.width,
        summary.height,
        summary.max_value,
        summary.argmax.0,
        summary.argmax.1
    );
    Ok(0)
}
