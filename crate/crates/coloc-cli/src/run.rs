use std::fs;
use std::path::Path;
use std::process::ExitCode;

use anyhow::Context;
use rayon::prelude::*;

use coloc::harness::{
    self, corloc, render_overlay, write_boxes_csv, write_report, write_trace, CaseOutcome,
    DatasetCase, ReportFormat,
};
use coloc::imagery::load_gray_map;
use coloc::solver::{colocalize_image, IterationTrace};
use coloc::synth::DatasetManifest;
use coloc::BoundingBox;

use crate::RunArgs;

struct CaseRun {
    case: DatasetCase,
    result: Result<(BoundingBox, IterationTrace), coloc::Error>,
}

fn solve_case(
    case: &DatasetCase,
    cfg: &coloc::SolverConfig,
) -> Result<(BoundingBox, IterationTrace), coloc::Error> {
    let saliency = load_gray_map(&case.saliency_path)?;
    let cosaliency = load_gray_map(&case.cosaliency_path)?;
    let image = load_gray_map(&case.image_path)?;
    colocalize_image(&saliency, &cosaliency, &image, cfg)
}

pub fn execute(args: &RunArgs) -> anyhow::Result<ExitCode> {
    let cfg = args.solver.to_config();
    cfg.validate().context("invalid solver configuration")?;
    let format: ReportFormat = args.format.parse()?;

    let groups = harness::load_dataset(&args.root)
        .with_context(|| format!("loading dataset at {}", args.root.display()))?;
    let manifest = DatasetManifest::load(&args.root)?;
    let cases: Vec<DatasetCase> = groups.into_iter().flat_map(|group| group.cases).collect();
    if cases.is_empty() {
        anyhow::bail!("dataset at {} holds no cases", args.root.display());
    }

    let solve_all = || -> Vec<CaseRun> {
        cases
            .into_par_iter()
            .map(|case| {
                let result = solve_case(&case, &cfg);
                CaseRun { case, result }
            })
            .collect()
    };
    let runs: Vec<CaseRun> = if args.jobs == 0 {
        solve_all()
    } else {
        rayon::ThreadPoolBuilder::new()
            .num_threads(args.jobs)
            .build()
            .context("building worker pool")?
            .install(solve_all)
    };

    fs::create_dir_all(&args.out)?;
    write_artifacts(&runs, args, format, manifest.as_ref())?;

    let failures: Vec<&CaseRun> = runs.iter().filter(|r| r.result.is_err()).collect();
    for failure in &failures {
        eprintln!(
            "case {}/{} failed: {}",
            failure.case.class_label,
            failure.case.id,
            failure.result.as_ref().unwrap_err()
        );
    }
    if failures.is_empty() {
        Ok(ExitCode::SUCCESS)
    } else {
        eprintln!("{} of {} cases failed", failures.len(), runs.len());
        Ok(ExitCode::FAILURE)
    }
}

fn write_artifacts(
    runs: &[CaseRun],
    args: &RunArgs,
    format: ReportFormat,
    manifest: Option<&DatasetManifest>,
) -> anyhow::Result<()> {
    let out = &args.out;

    // per-class prediction files
    let mut classes: Vec<&str> = runs.iter().map(|r| r.case.class_label.as_str()).collect();
    classes.sort_unstable();
    classes.dedup();
    let predictions_dir = out.join("predictions");
    fs::create_dir_all(&predictions_dir)?;
    for class in &classes {
        let entries: Vec<(String, BoundingBox)> = runs
            .iter()
            .filter(|r| r.case.class_label == *class)
            .filter_map(|r| {
                r.result
                    .as_ref()
                    .ok()
                    .map(|(bx, _)| (r.case.id.clone(), *bx))
            })
            .collect();
        write_boxes_csv(predictions_dir.join(format!("{class}.csv")), &entries)?;
    }

    // traces
    for run in runs {
        if let Ok((_, trace)) = &run.result {
            let dir = out.join("traces").join(&run.case.class_label);
            fs::create_dir_all(&dir)?;
            write_trace(dir.join(format!("{}.txt", run.case.id)), trace)?;
        }
    }

    // overlays for labeled cases
    if args.render {
        for run in runs {
            let Ok((prediction, _)) = &run.result else {
                continue;
            };
            if run.case.ground_truth.is_empty() {
                continue;
            }
            let merged = harness::merge_ground_truth(&run.case.ground_truth)?;
            let dir = out.join("overlays").join(&run.case.class_label);
            fs::create_dir_all(&dir)?;
            render_overlay(
                &run.case.image_path,
                &merged,
                prediction,
                dir.join(format!("{}.png", run.case.id)),
            )?;
        }
    }

    // evaluation report when any ground truth exists
    let outcomes: Vec<CaseOutcome> = runs
        .iter()
        .filter_map(|run| {
            run.result.as_ref().ok().map(|(bx, trace)| CaseOutcome {
                case_id: run.case.id.clone(),
                class_label: run.case.class_label.clone(),
                ground_truth: run.case.ground_truth.clone(),
                predicted: *bx,
                iterations: Some(trace.len()),
                termination: Some(trace.termination),
            })
        })
        .collect();
    let any_truth = outcomes.iter().any(|o| !o.ground_truth.is_empty());
    if any_truth {
        let mut report = corloc(&outcomes, args.iou_threshold)?;
        report.map_provenance = manifest.map(|m| m.provenance.clone());
        let report_path = match format {
            ReportFormat::Json => out.join("report.json"),
            ReportFormat::Csv => out.join("report.csv"),
        };
        write_report(&report, &report_path, format)?;
        print_summary(&report, &report_path);
    } else {
        println!("no ground truth found; skipping CorLoc report");
    }
    Ok(())
}

fn print_summary(report: &coloc::harness::EvalReport, path: &Path) {
    println!("class            corloc   hits/img");
    for class in &report.per_class {
        println!(
            "{:<16} {:>6.2}   {}/{}",
            class.class, class.corloc, class.hits, class.evaluated
        );
    }
    println!(
        "mean corloc {:.2} | image corloc {:.2} | skipped {} | report: {}",
        report.mean_corloc,
        report.image_corloc,
        report.skipped,
        path.display()
    );
}
