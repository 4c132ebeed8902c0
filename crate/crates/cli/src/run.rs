//! Implementations of the subcommands. Each file-writing command resolves
//! its parameters, does the work, and writes a run manifest last.

use std::fmt::Write as _;
use std::path::Path;
use std::time::Instant;

use lqcd_core::dslash::{self, OpKind, WilsonOp};
use lqcd_core::fields::{CompressedGaugeField, GaugeField, SpinorField};
use lqcd_core::geometry::{LatticeDims, SiteIndex};
use lqcd_core::io::{self, FieldKind};
use lqcd_core::perf::{self, Profile, Scenario, ScenarioReport};
use lqcd_core::solver::{self, SolveReport, SolverConfig};
use lqcd_core::algebra::Precision;

use crate::manifest::{compare_outputs, Params, RunManifest};
use crate::{
    Algorithm, BenchArgs, Failure, GenArgs, PerfArgs, PrecisionArg, RerunArgs, ScenarioArg,
    SolveArgs, SourceSpec, StartKind,
};

pub const GAUGE_FILE: &str = "gauge.lqf";
pub const SOLUTION_FILE: &str = "psi.lqf";
pub const REPORT_FILE: &str = "report.csv";

fn ensure_out_dir(out: &Path) -> Result<(), Failure> {
    std::fs::create_dir_all(out)
        .map_err(|e| Failure::Data(format!("creating {}: {e}", out.display())))
}

fn write_text(path: &Path, text: &str) -> Result<(), Failure> {
    std::fs::write(path, text).map_err(|e| Failure::Data(format!("writing {}: {e}", path.display())))
}

pub fn gen(args: &GenArgs) -> Result<(), Failure> {
    let geom = args.dims.lattice()?;
    ensure_out_dir(&args.out)?;
    let gauge_path = args.out.join(GAUGE_FILE);

    match args.precision {
        PrecisionArg::Double => gen_typed::<f64>(args, geom, &gauge_path)?,
        PrecisionArg::Single => gen_typed::<f32>(args, geom, &gauge_path)?,
    }

    let mut manifest = RunManifest::new(
        "gen",
        Params {
            dims: Some(geom.extents()),
            seed: Some(args.seed),
            start: Some(args.start.to_string()),
            precision: Some(args.precision.to_string()),
            compressed: Some(args.compressed),
            ..Params::default()
        },
    );
    manifest.add_output("gauge", GAUGE_FILE);
    manifest.write(&args.out)?;

    println!(
        "wrote {} ({} start, {} sites, {}{})",
        gauge_path.display(),
        args.start,
        geom.volume(),
        args.precision,
        if args.compressed { ", compressed" } else { "" }
    );
    Ok(())
}

fn gen_typed<R: lqcd_core::algebra::Real>(
    args: &GenArgs,
    geom: LatticeDims,
    gauge_path: &Path,
) -> Result<(), Failure> {
    let field = match args.start {
        StartKind::Hot => GaugeField::<R>::hot_start(geom, args.seed),
        StartKind::Cold => GaugeField::<R>::cold_start(geom),
    };
    if args.compressed {
        let packed = CompressedGaugeField::from_gauge(&field)?;
        io::save_gauge_compressed(&packed, gauge_path)?;
    } else {
        io::save_gauge(&field, gauge_path)?;
    }
    Ok(())
}

/// Loads any gauge file as a 64-bit field, whatever its stored precision
/// and compression.
pub fn load_gauge_any(path: &Path) -> Result<GaugeField<f64>, Failure> {
    let header = io::read_header(path)?;
    if header.kind != FieldKind::Gauge {
        return Err(Failure::Data(format!(
            "{} holds a {} field, expected gauge",
            path.display(),
            header.kind
        )));
    }
    let field = match (header.precision, header.compressed) {
        (Precision::Double, false) => io::load_gauge::<f64>(path)?,
        (Precision::Double, true) => io::load_gauge_compressed::<f64>(path)?.expand()?,
        (Precision::Single, false) => io::load_gauge::<f32>(path)?.convert::<f64>(),
        (Precision::Single, true) => {
            io::load_gauge_compressed::<f32>(path)?.expand()?.convert::<f64>()
        }
    };
    Ok(field)
}

/// Right-hand sides the solver accepts: unit point source, Gaussian noise,
/// a manufactured problem with known solution, or a spinor file.
fn build_source(
    spec: &SourceSpec,
    gauge: &GaugeField<f64>,
    config: &SolverConfig,
    seed: u64,
) -> Result<(SpinorField<f64>, Option<SpinorField<f64>>), Failure> {
    let geom = gauge.geometry();
    match spec {
        SourceSpec::Point => {
            let b = SpinorField::point_source(geom, SiteIndex(0), 0, 0)?;
            Ok((b, None))
        }
        SourceSpec::Random => Ok((SpinorField::gaussian(geom, seed), None)),
        SourceSpec::Manufactured => {
            let x0 = SpinorField::gaussian(geom, seed);
            let op = WilsonOp::with_sign(gauge, config.m_q, config.sign);
            let b = op.apply(OpKind::Normal, &x0)?;
            Ok((b, Some(x0)))
        }
        SourceSpec::File(path) => {
            let b = match io::read_header(path)?.precision {
                Precision::Double => io::load_spinor::<f64>(path)?,
                Precision::Single => io::load_spinor::<f32>(path)?.convert::<f64>(),
            };
            if b.geometry() != geom {
                return Err(Failure::Data(format!(
                    "source lattice {} does not match gauge lattice {}",
                    b.geometry().label(),
                    geom.label()
                )));
            }
            Ok((b, None))
        }
    }
}

/// One row per outer step: cumulative apply counts and the measured
/// residual, absolute and relative. Row 0 is the initial state.
fn report_csv(report: &SolveReport, b_norm: f64) -> String {
    let mut out = String::from("l,inner_iterations,dd_high_applies,dd_low_applies,s_high,s_high_rel\n");
    let mut dd_low = 0usize;
    for (l, s) in report.s_high_log.iter().enumerate() {
        let steps = if l == 0 {
            0
        } else {
            report.block_steps.get(l - 1).copied().unwrap_or(0)
        };
        dd_low += steps;
        let _ = writeln!(out, "{},{},{},{},{},{}", l, steps, l + 1, dd_low, s, s / b_norm);
    }
    out
}

pub fn solve(args: &SolveArgs) -> Result<(), Failure> {
    let gauge = load_gauge_any(&args.gauge)?;
    let geom = gauge.geometry();
    let config = SolverConfig {
        m_q: args.mass,
        r_min: args.rmin,
        inner_k: args.inner_k,
        max_outer: args.max_outer,
        max_iterations: args.max_iter,
        compressed_inner: args.compressed,
        ..SolverConfig::default()
    };
    let (b, x0) = build_source(&args.source, &gauge, &config, args.seed)?;
    let b_norm = b.norm();

    let (x, report) = match args.algorithm {
        Algorithm::Cg => solver::cg_reference(&gauge, &b, &config)?,
        Algorithm::Rgcg => solver::residual_guided_cg(&gauge, &b, &config)?,
    };

    ensure_out_dir(&args.out)?;
    match args.precision {
        PrecisionArg::Double => io::save_spinor(&x, args.out.join(SOLUTION_FILE))?,
        PrecisionArg::Single => {
            io::save_spinor(&x.convert::<f32>(), args.out.join(SOLUTION_FILE))?
        }
    }
    write_text(&args.out.join(REPORT_FILE), &report_csv(&report, b_norm))?;

    let mut manifest = RunManifest::new(
        "solve",
        Params {
            dims: Some(geom.extents()),
            seed: Some(args.seed),
            precision: Some(args.precision.to_string()),
            compressed: Some(args.compressed),
            mass: Some(args.mass),
            r_min: Some(args.rmin),
            inner_k: Some(args.inner_k),
            max_outer: Some(args.max_outer),
            max_iter: Some(args.max_iter),
            algorithm: Some(args.algorithm.to_string()),
            source: Some(args.source.to_string()),
            ..Params::default()
        },
    );
    manifest.add_input("gauge", &args.gauge)?;
    if let SourceSpec::File(path) = &args.source {
        manifest.add_input("source", Path::new(path))?;
    }
    manifest.add_output("solution", SOLUTION_FILE);
    manifest.add_output("report", REPORT_FILE);
    manifest.write(&args.out)?;

    println!(
        "{}: {} outer, {} inner, {} high / {} low D'D applies, true residual {:.3e}",
        if report.converged { "converged" } else { "NOT converged" },
        report.outer_iterations,
        report.inner_iterations,
        report.dd_high_applies,
        report.dd_low_applies,
        report.final_true_residual,
    );
    if let Some(x0) = x0 {
        let mut diff = x.clone();
        diff.axpy_re(-1.0, &x0)?;
        println!("manufactured solution error {:.3e}", diff.norm() / x0.norm());
    }

    if report.converged {
        Ok(())
    } else {
        Err(Failure::NotConverged(format!(
            "residual {:.3e} above target {:.3e} after {} outer steps",
            report.final_true_residual, args.rmin, report.outer_iterations
        )))
    }
}

fn load_profile(path: &Option<std::path::PathBuf>) -> Result<Profile, Failure> {
    match path {
        Some(p) => Profile::load(p)
            .map_err(|e| Failure::Data(format!("loading profile {}: {e}", p.display()))),
        None => Ok(Profile::default_u250()),
    }
}

fn scenario_text(profile: &Profile, report: &ScenarioReport) -> String {
    let mut out = format!("profile = {}\n", profile.name);
    for (key, value) in report.rows() {
        let _ = writeln!(out, "{key} = {value}");
    }
    out
}

pub fn perf(args: &PerfArgs) -> Result<(), Failure> {
    let profile = load_profile(&args.profile)?;
    let geom = args.dims.lattice()?;
    ensure_out_dir(&args.out)?;

    write_text(&args.out.join("fig2.csv"), &perf::fig2_csv(&profile)?)?;
    write_text(&args.out.join("fig3.csv"), &perf::fig3_csv(&profile)?)?;
    write_text(&args.out.join("fig4.csv"), &perf::fig4_csv(&profile)?)?;
    write_text(&args.out.join("fig5.csv"), &perf::fig5_csv(&profile)?)?;
    write_text(&args.out.join("anchors.csv"), &perf::anchors_csv(&profile)?)?;

    let mut report_text = String::new();
    let scenarios: &[Scenario] = match args.scenario {
        ScenarioArg::Embedded => &[Scenario::Embedded],
        ScenarioArg::Streaming => &[Scenario::Streaming],
        ScenarioArg::Both => &[Scenario::Embedded, Scenario::Streaming],
    };
    for &scenario in scenarios {
        let report = perf::scenario_report(&profile, geom, scenario, args.volume_factor)?;
        report_text.push_str(&scenario_text(&profile, &report));
        report_text.push('\n');
    }
    write_text(&args.out.join("report.txt"), &report_text)?;
    print!("{report_text}");

    let flagged: Vec<String> = perf::anchor_audit(&profile)?
        .into_iter()
        .filter(|row| row.flagged)
        .map(|row| format!("  {} reference {} model {}", row.name, row.reference, row.model))
        .collect();
    if !flagged.is_empty() {
        println!("flagged known discrepancies:");
        for line in flagged {
            println!("{line}");
        }
    }

    let mut manifest = RunManifest::new(
        "perf",
        Params {
            dims: Some(geom.extents()),
            scenario: Some(args.scenario.to_string()),
            volume_factor: Some(args.volume_factor),
            ..Params::default()
        },
    );
    if let Some(path) = &args.profile {
        manifest.add_input("profile", path)?;
    }
    for name in ["fig2", "fig3", "fig4", "fig5", "anchors"] {
        manifest.add_output(name, &format!("{name}.csv"));
    }
    manifest.add_output("report", "report.txt");
    manifest.write(&args.out)?;
    Ok(())
}

pub fn bench(args: &BenchArgs) -> Result<(), Failure> {
    if args.reps == 0 {
        return Err(Failure::Usage("--reps must be at least 1".into()));
    }
    let gauge = load_gauge_any(&args.gauge)?;
    let geom = gauge.geometry();
    let op = WilsonOp::new(&gauge, args.mass);
    let mut x = SpinorField::<f64>::gaussian(geom, args.seed);

    let flops_per_rep = dslash::flop_count(OpKind::Normal, geom.volume(), false).total();
    let start = Instant::now();
    for _ in 0..args.reps {
        x = op.apply(OpKind::Normal, &x)?;
    }
    let elapsed = start.elapsed().as_secs_f64();
    // The counter is structural; the numerator is never estimated.
    let flops = flops_per_rep * args.reps as u64;
    let stencils = 2 * geom.volume() as u64 * args.reps as u64;

    println!("gauge = {}", args.gauge.display());
    println!("lattice = {}", geom.label());
    println!("reps = {}", args.reps);
    println!("flops = {flops}");
    println!("elapsed_s = {elapsed}");
    println!("gflops = {}", flops as f64 / elapsed / 1e9);
    println!("stencils_per_s = {}", stencils as f64 / elapsed);
    // Consuming the iterate keeps the timed loop observable.
    println!("result_norm = {:.6e}", x.norm());
    Ok(())
}

pub fn rerun(args: &RerunArgs) -> Result<(), Failure> {
    let manifest = RunManifest::load(&args.manifest)?;
    let original_dir = args
        .manifest
        .parent()
        .filter(|p| !p.as_os_str().is_empty())
        .unwrap_or(Path::new("."))
        .to_path_buf();
    let original_dir = original_dir
        .canonicalize()
        .map_err(|e| Failure::Data(format!("resolving {}: {e}", original_dir.display())))?;
    ensure_out_dir(&args.out)?;
    let fresh_dir = args
        .out
        .canonicalize()
        .map_err(|e| Failure::Data(format!("resolving {}: {e}", args.out.display())))?;
    if fresh_dir == original_dir {
        return Err(Failure::Usage(
            "rerun output directory must differ from the original run's".into(),
        ));
    }

    replay(&manifest, &fresh_dir)?;

    let mismatched = compare_outputs(&manifest, &original_dir, &fresh_dir)?;
    if mismatched.is_empty() {
        println!(
            "reproduced {} outputs bitwise in {}",
            manifest.outputs.len(),
            fresh_dir.display()
        );
        Ok(())
    } else {
        Err(Failure::NotReproduced(format!(
            "outputs differ from the original run: {}",
            mismatched.join(", ")
        )))
    }
}

/// Replays a recorded run into `out`. Parameter errors here mean the
/// manifest was edited or came from an incompatible version.
fn replay(manifest: &RunManifest, out: &Path) -> Result<(), Failure> {
    let p = &manifest.params;
    let missing = |name: &str| Failure::Data(format!("manifest lacks params.{name}"));
    let dims = crate::DimsArg(p.dims.ok_or_else(|| missing("dims"))?);
    match manifest.subcommand.as_str() {
        "gen" => gen(&GenArgs {
            dims,
            seed: p.seed.ok_or_else(|| missing("seed"))?,
            start: p.start.as_deref().ok_or_else(|| missing("start"))?.parse()?,
            precision: p.precision.as_deref().ok_or_else(|| missing("precision"))?.parse()?,
            compressed: p.compressed.ok_or_else(|| missing("compressed"))?,
            out: out.to_path_buf(),
        }),
        "solve" => solve(&SolveArgs {
            gauge: manifest.input("gauge")?,
            source: p.source.as_deref().ok_or_else(|| missing("source"))?.parse()?,
            seed: p.seed.ok_or_else(|| missing("seed"))?,
            mass: p.mass.ok_or_else(|| missing("mass"))?,
            rmin: p.r_min.ok_or_else(|| missing("r_min"))?,
            inner_k: p.inner_k.ok_or_else(|| missing("inner_k"))?,
            max_outer: p.max_outer.ok_or_else(|| missing("max_outer"))?,
            max_iter: p.max_iter.ok_or_else(|| missing("max_iter"))?,
            algorithm: p.algorithm.as_deref().ok_or_else(|| missing("algorithm"))?.parse()?,
            precision: p.precision.as_deref().ok_or_else(|| missing("precision"))?.parse()?,
            compressed: p.compressed.ok_or_else(|| missing("compressed"))?,
            out: out.to_path_buf(),
        }),
        "perf" => perf(&PerfArgs {
            profile: manifest.inputs.get("profile").map(Into::into),
            dims,
            scenario: p.scenario.as_deref().ok_or_else(|| missing("scenario"))?.parse()?,
            volume_factor: p.volume_factor.ok_or_else(|| missing("volume_factor"))?,
            out: out.to_path_buf(),
        }),
        other => Err(Failure::Data(format!(
            "manifest subcommand `{other}` is not replayable (expected gen, solve or perf)"
        ))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn report_rows_accumulate_counts() {
        let report = SolveReport {
            converged: true,
            outer_iterations: 2,
            inner_iterations: 7,
            s_high_log: vec![8.0, 2.0, 0.5],
            rho_log: vec![],
            block_steps: vec![4, 3],
            dd_high_applies: 3,
            dd_low_applies: 7,
            restarts: 0,
            final_true_residual: 0.5 / 8.0,
        };
        let csv = report_csv(&report, 8.0);
        let lines: Vec<&str> = csv.trim_end().lines().collect();
        assert_eq!(lines.len(), 4);
        assert_eq!(lines[1], "0,0,1,0,8,1");
        assert_eq!(lines[2], "1,4,2,4,2,0.25");
        assert_eq!(lines[3], "2,3,3,7,0.5,0.0625");
    }
}
