//! `shiftdrift`: validation, complexity, cocycle, measure, and drift
//! reports over spec files. All output is deterministic; exit codes are
//! 0 pass, 1 assertion failure, 2 input error, 3 resource cap.

use std::fs;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};

use shiftdrift_cli::report::{dec, emit, rat, Format, Report, Section, Table};
use shiftdrift_cli::spec::{export_entries, parse_spec, zero_entropy_entries, RunSpec, SpecFile};
use shiftdrift_core::{
    act, builtin, builtin_names, cocycle_bound, completeness_gap, check_family_soundness,
    drift_cocycle, locality_radius, drift_pipeline, verify_automorphism, Automorphism,
    CalibratedPair, Error, PipelineConfig, PipelineReport, Result,
};

#[derive(Parser)]
#[command(
    name = "shiftdrift",
    version,
    about = "Exact drift analysis for automorphism groups of low-complexity shifts"
)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Check every run: guards, automorphism verification, family soundness.
    Validate {
        /// Spec document to load.
        #[arg(long)]
        spec: PathBuf,
        /// Restrict to one run (default: all runs).
        #[arg(long)]
        run: Option<String>,
    },
    /// Word counts and entropy estimates for a named space.
    Complexity {
        /// Spec document to load.
        #[arg(long)]
        spec: PathBuf,
        /// Space name from the spec document.
        #[arg(long)]
        space: String,
        /// Largest word length to count.
        #[arg(long = "n-max", default_value_t = 10)]
        n_max: usize,
        /// Report format: aligned text or CSV tables.
        #[arg(long, value_enum, default_value_t = Format::Text)]
        format: Format,
        /// Write the report into this directory instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Drift cocycle values over a run's pairs, with the cocycle relation
    /// verified for every ordered composition.
    Cocycle {
        /// Spec document to load.
        #[arg(long)]
        spec: PathBuf,
        /// Restrict to one run (default: all runs).
        #[arg(long)]
        run: Option<String>,
        /// Radius for representative pairs when the run lists none.
        #[arg(long = "n-max")]
        n_max: Option<usize>,
        /// Report format: aligned text or CSV tables.
        #[arg(long, value_enum, default_value_t = Format::Text)]
        format: Format,
        /// Write the report into this directory instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Stage measures: window statistics and invariance defects.
    Measure {
        /// Spec document to load.
        #[arg(long)]
        spec: PathBuf,
        /// Restrict to one run (default: all runs).
        #[arg(long)]
        run: Option<String>,
        /// Override the run's stage count.
        #[arg(long)]
        stages: Option<usize>,
        /// Override the run's largest window radius.
        #[arg(long = "n-max")]
        n_max: Option<usize>,
        /// Override the run's empirical entropy threshold.
        #[arg(long = "entropy-threshold")]
        entropy_threshold: Option<f64>,
        /// Report format: aligned text or CSV tables.
        #[arg(long, value_enum, default_value_t = Format::Text)]
        format: Format,
        /// Write the report into this directory instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// The staged drift pipeline with certificates.
    Drift {
        /// Spec document to load.
        #[arg(long)]
        spec: PathBuf,
        /// Restrict to one run (default: all runs).
        #[arg(long)]
        run: Option<String>,
        /// Override the run's stage count.
        #[arg(long)]
        stages: Option<usize>,
        /// Override the run's largest window radius.
        #[arg(long = "n-max")]
        n_max: Option<usize>,
        /// Override the run's empirical entropy threshold.
        #[arg(long = "entropy-threshold")]
        entropy_threshold: Option<f64>,
        /// Report format: aligned text or CSV tables.
        #[arg(long, value_enum, default_value_t = Format::Text)]
        format: Format,
        /// Write the report into this directory instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Built-in worked examples.
    Gallery {
        #[command(subcommand)]
        command: GalleryCmd,
    },
}

#[derive(Subcommand)]
enum GalleryCmd {
    /// Names and descriptions of the built-in examples.
    List,
    /// Render built-ins as a spec document: all zero-entropy entries, or
    /// one entry by name (the full shift, a refusal control, only by name).
    Export {
        /// Entry name; omit for all zero-entropy entries.
        name: Option<String>,
        /// Write the document into this directory instead of stdout.
        /// Write the report into this directory instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn main() {
    let cli = Cli::parse();
    if let Err(e) = dispatch(cli) {
        eprintln!("error: {e}");
        std::process::exit(exit_code(&e));
    }
}

fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Input(_) | Error::Parse(_) => 2,
        Error::ResourceCap(_) => 3,
        _ => 1,
    }
}

fn dispatch(cli: Cli) -> Result<()> {
    match cli.command {
        Cmd::Validate { spec, run } => {
            let file = load_spec(&spec)?;
            let report = cmd_validate(&file, run.as_deref())?;
            print!("{}", report.render_text());
            Ok(())
        }
        Cmd::Complexity { spec, space, n_max, format, out } => {
            let file = load_spec(&spec)?;
            let report = cmd_complexity(&file, &space, n_max)?;
            emit(&report, "complexity", format, out.as_deref())
        }
        Cmd::Cocycle { spec, run, n_max, format, out } => {
            let file = load_spec(&spec)?;
            let report = cmd_cocycle(&file, run.as_deref(), n_max)?;
            emit(&report, "cocycle", format, out.as_deref())
        }
        Cmd::Measure { spec, run, stages, n_max, entropy_threshold, format, out } => {
            let file = load_spec(&spec)?;
            let report = cmd_measure(&file, run.as_deref(), stages, n_max, entropy_threshold)?;
            emit(&report, "measure", format, out.as_deref())
        }
        Cmd::Drift { spec, run, stages, n_max, entropy_threshold, format, out } => {
            let file = load_spec(&spec)?;
            let report = cmd_drift(&file, run.as_deref(), stages, n_max, entropy_threshold)?;
            emit(&report, "drift", format, out.as_deref())
        }
        Cmd::Gallery { command } => match command {
            GalleryCmd::List => {
                for name in builtin_names() {
                    let entry = builtin(name)?;
                    println!("{}: {}", entry.name, entry.description);
                }
                Ok(())
            }
            GalleryCmd::Export { name, out } => {
                let (stem, entries) = match &name {
                    Some(n) => (n.clone(), vec![builtin(n)?]),
                    None => ("gallery".to_string(), zero_entropy_entries()?),
                };
                let text = export_entries(&entries)?;
                match out {
                    None => {
                        print!("{text}");
                        Ok(())
                    }
                    Some(dir) => {
                        fs::create_dir_all(&dir)
                            .map_err(|e| Error::input(format!("{}: {e}", dir.display())))?;
                        let path = dir.join(format!("{stem}.spec"));
                        fs::write(&path, text)
                            .map_err(|e| Error::input(format!("{}: {e}", path.display())))?;
                        println!("wrote {}", path.display());
                        Ok(())
                    }
                }
            }
        },
    }
}

fn load_spec(path: &Path) -> Result<SpecFile> {
    let text = fs::read_to_string(path)
        .map_err(|e| Error::input(format!("{}: {e}", path.display())))?;
    parse_spec(&text)
}

/// Smallest window radius at which every listed automorphism, every ordered
/// composition, and every cylinder test acts locally. Mirrors the pipeline's
/// own stage floor.
fn radius_floor(run: &RunSpec) -> Result<usize> {
    let sigma = Automorphism::shift_power(run.family.space().alphabet().clone(), 1);
    let mut floor = locality_radius(&sigma) as usize;
    for a in &run.autos {
        floor = floor.max(locality_radius(a) as usize);
        for b in &run.autos {
            floor = floor.max(locality_radius(&a.compose(b)?) as usize);
        }
        for cyl in &run.cylinders {
            floor = floor.max(cyl.radius() + locality_radius(a) as usize);
        }
    }
    Ok(floor)
}

fn cmd_validate(file: &SpecFile, filter: Option<&str>) -> Result<Report> {
    let mut report = Report::default();
    for run in file.select_runs(filter)? {
        let mut section = Section::new(format!("validate {}", run.name));
        let space = run.family.space();
        let cfg = &run.config;

        space.check_infinite(cfg.infinite_check_len)?;
        section.note(format!(
            "space {}: language is infinite (no plateau through length {})",
            space.name(),
            cfg.infinite_check_len
        ));
        let cert = space.certify_zero_entropy(cfg.entropy_threshold, cfg.entropy_check_len)?;
        section.note(format!("zero entropy: {cert}"));

        for auto in &run.autos {
            verify_automorphism(space, auto, cfg.verify_len)?;
            section.note(format!(
                "automorphism {}: verified (outputs to length {})",
                auto.label(),
                cfg.verify_len
            ));
        }

        let floor = radius_floor(run)?;
        check_family_soundness(&run.family, floor)?;
        section.note(format!("family {}: sound at radius {floor}", run.family.name()));
        if let Some(r) = cfg.completeness_radius {
            let gap = completeness_gap(&run.family, r)?;
            if gap.is_empty() {
                section.note(format!(
                    "family {}: covers all radius-{r} calibrated word pairs",
                    run.family.name()
                ));
            } else {
                section.note(format!(
                    "warning: family {} leaves {} radius-{r} shadow word pairs uncovered; \
                     drift values are relative to the declared family",
                    run.family.name(),
                    gap.len()
                ));
            }
        }
        section.note(format!("run {}: ok", run.name));
        report.sections.push(section);
    }
    Ok(report)
}

fn cmd_complexity(file: &SpecFile, space_name: &str, n_max: usize) -> Result<Report> {
    let space = file.space(space_name)?;
    let cr = space.complexity_report(n_max)?;
    let mut section = Section::new(format!("complexity {space_name}"));
    section.note(format!(
        "space {}: alphabet of {} symbols",
        space.name(),
        space.alphabet().len()
    ));
    let mut table = Table::new("complexity", &["n", "P(n)", "entropy_estimate"]);
    for (n, count) in &cr.counts {
        table.rows.push(vec![
            n.to_string(),
            count.to_string(),
            format!("{:.6}", cr.entropy[n]),
        ]);
    }
    section.tables.push(table);
    Ok(Report { sections: vec![section] })
}

fn cmd_cocycle(file: &SpecFile, filter: Option<&str>, n_max: Option<usize>) -> Result<Report> {
    let mut report = Report::default();
    for run in file.select_runs(filter)? {
        let mut section = Section::new(format!("cocycle {}", run.name));
        let pairs: Vec<CalibratedPair> = if run.pairs.is_empty() {
            let floor = radius_floor(run)?;
            let radius = n_max.unwrap_or(floor).max(floor);
            section.note(format!("representative pairs of {} at radius {radius}", run.family.name()));
            run.family.empirical_measure(radius)?.support().cloned().collect()
        } else {
            section.note(format!("{} pairs listed in the run", run.pairs.len()));
            run.pairs.clone()
        };

        let mut table = Table::new("values", &["automorphism", "pair", "c", "B"]);
        for auto in &run.autos {
            let bound = cocycle_bound(auto);
            for p in &pairs {
                let c = drift_cocycle(auto, p)?;
                table.rows.push(vec![
                    auto.label().to_string(),
                    p.to_string(),
                    c.to_string(),
                    bound.to_string(),
                ]);
            }
        }
        section.tables.push(table);

        for a in &run.autos {
            for b in &run.autos {
                let ab = a.compose(b)?;
                for p in &pairs {
                    let lhs = drift_cocycle(&ab, p)?;
                    let rhs = drift_cocycle(a, &act(b, p)?)? + drift_cocycle(b, p)?;
                    if lhs != rhs {
                        return Err(Error::invariant(format!(
                            "cocycle relation fails for {} after {} on {p}: {lhs} != {rhs}",
                            a.label(),
                            b.label()
                        )));
                    }
                }
                section.note(format!(
                    "cocycle relation {} after {}: ok ({} pairs)",
                    a.label(),
                    b.label(),
                    pairs.len()
                ));
            }
        }
        report.sections.push(section);
    }
    Ok(report)
}

fn run_pipeline(
    run: &RunSpec,
    stages: Option<usize>,
    n_max: Option<usize>,
    entropy_threshold: Option<f64>,
) -> Result<(PipelineConfig, PipelineReport)> {
    let mut config = run.config.clone();
    if let Some(s) = stages {
        config.stages = s;
    }
    if let Some(n) = n_max {
        config.n_max = n;
    }
    if let Some(t) = entropy_threshold {
        config.entropy_threshold = t;
    }
    let report = drift_pipeline(&run.family, &run.autos, &run.cylinders, &config)?;
    Ok((config, report))
}

fn pipeline_notes(section: &mut Section, rep: &PipelineReport) {
    section.note(format!("space {}, family {}", rep.space_name, rep.family_name));
    section.note(format!("zero entropy: {}", rep.zero_entropy));
    for w in &rep.warnings {
        section.note(format!("warning: {w}"));
    }
    let radii: Vec<String> = rep.stage_radii.iter().map(|r| r.to_string()).collect();
    section.note(format!("stage radii: {}", radii.join(", ")));
}

fn cmd_measure(
    file: &SpecFile,
    filter: Option<&str>,
    stages: Option<usize>,
    n_max: Option<usize>,
    entropy_threshold: Option<f64>,
) -> Result<Report> {
    let mut report = Report::default();
    for run in file.select_runs(filter)? {
        let (_, rep) = run_pipeline(run, stages, n_max, entropy_threshold)?;
        let mut section = Section::new(format!("measure {}", run.name));
        pipeline_notes(&mut section, &rep);

        let mut windows = Table::new("windows", &["m", "n_m", "W_size", "r_m", "u_m"]);
        for (i, stage) in rep.stages.iter().enumerate() {
            windows.rows.push(vec![
                (i + 1).to_string(),
                stage.radius.to_string(),
                stage.support_size.to_string(),
                rat(stage.certificate.extension_ratio),
                rat(stage.certificate.unique_fraction),
            ]);
        }
        section.tables.push(windows);

        let mut defects = Table::new(
            "invariance",
            &["m", "n_m", "automorphism", "cylinder", "defect", "defect_dec"],
        );
        for (i, stage) in rep.stages.iter().enumerate() {
            for (auto, cyl, d) in &stage.invariance_defects {
                defects.rows.push(vec![
                    (i + 1).to_string(),
                    stage.radius.to_string(),
                    auto.clone(),
                    cyl.clone(),
                    rat(*d),
                    dec(*d),
                ]);
            }
        }
        section.tables.push(defects);
        report.sections.push(section);
    }
    Ok(report)
}

fn cmd_drift(
    file: &SpecFile,
    filter: Option<&str>,
    stages: Option<usize>,
    n_max: Option<usize>,
    entropy_threshold: Option<f64>,
) -> Result<Report> {
    let mut report = Report::default();
    for run in file.select_runs(filter)? {
        let (_, rep) = run_pipeline(run, stages, n_max, entropy_threshold)?;
        let mut section = Section::new(format!("drift {}", run.name));
        pipeline_notes(&mut section, &rep);
        section.note("Phi(sigma) = 1 held exactly at every stage".to_string());
        for (i, stage) in rep.stages.iter().enumerate() {
            section.note(format!(
                "stage {} (n = {}): {} support pairs, invariance budget {} ({})",
                i + 1,
                stage.radius,
                stage.support_size,
                rat(stage.certificate.bound),
                dec(stage.certificate.bound),
            ));
        }

        let bounds: Vec<i64> = run.autos.iter().map(cocycle_bound).collect();
        let mut table = Table::new(
            "stages",
            &["automorphism", "m", "n_m", "Phi_estimate", "B", "r_m", "u_m"],
        );
        for (i, stage) in rep.stages.iter().enumerate() {
            for (est, bound) in stage.drifts.iter().zip(&bounds) {
                let b = num_rational::Ratio::from_integer(*bound);
                let magnitude = if est.value < num_rational::Ratio::from_integer(0) {
                    -est.value
                } else {
                    est.value
                };
                if magnitude > b {
                    return Err(Error::invariant(format!(
                        "drift of {} exceeds its cocycle bound at stage {}",
                        est.auto_label,
                        i + 1
                    )));
                }
                table.rows.push(vec![
                    est.auto_label.clone(),
                    (i + 1).to_string(),
                    stage.radius.to_string(),
                    rat(est.value),
                    bound.to_string(),
                    rat(stage.certificate.extension_ratio),
                    rat(stage.certificate.unique_fraction),
                ]);
            }
        }
        section.tables.push(table);

        let mut defects =
            Table::new("additivity", &["m", "n_m", "left", "right", "defect", "defect_dec"]);
        for (i, stage) in rep.stages.iter().enumerate() {
            for (la, lb, d) in &stage.additivity_defects {
                defects.rows.push(vec![
                    (i + 1).to_string(),
                    stage.radius.to_string(),
                    la.clone(),
                    lb.clone(),
                    rat(*d),
                    dec(*d),
                ]);
            }
        }
        section.tables.push(defects);
        report.sections.push(section);
    }
    Ok(report)
}
