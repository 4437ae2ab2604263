use std::collections::HashMap;
use std::fs;
use std::process::ExitCode;

use anyhow::Context;

use coloc::harness::{self, corloc, parse_boxes_csv, write_report, CaseOutcome, ReportFormat};
use coloc::synth::DatasetManifest;

use crate::EvalArgs;

pub fn execute(args: &EvalArgs) -> anyhow::Result<ExitCode> {
    let format: ReportFormat = args.format.parse()?;
    let groups = harness::load_dataset(&args.root)
        .with_context(|| format!("loading dataset at {}", args.root.display()))?;
    let manifest = DatasetManifest::load(&args.root)?;

    let mut outcomes = Vec::new();
    let mut missing = 0usize;
    let mut total_predictions = 0usize;
    for group in &groups {
        let csv = args.predictions.join(format!("{}.csv", group.label));
        let predicted: HashMap<String, coloc::BoundingBox> = if csv.exists() {
            // repeated stems keep the last entry
            parse_boxes_csv(&csv)?.into_iter().collect()
        } else {
            HashMap::new()
        };
        total_predictions += predicted.len();
        for case in &group.cases {
            match predicted.get(&case.id) {
                Some(&bx) => outcomes.push(CaseOutcome {
                    case_id: case.id.clone(),
                    class_label: case.class_label.clone(),
                    ground_truth: case.ground_truth.clone(),
                    predicted: bx,
                    iterations: None,
                    termination: None,
                }),
                None => missing += 1,
            }
        }
    }
    if total_predictions == 0 {
        return Err(coloc::Error::EmptyResults.into());
    }
    if missing > 0 {
        eprintln!("{missing} cases have no stored prediction and were dropped");
    }

    let mut report = corloc(&outcomes, args.iou_threshold)?;
    report.map_provenance = manifest.map(|m| m.provenance);

    fs::create_dir_all(&args.out)?;
    let report_path = match format {
        ReportFormat::Json => args.out.join("report.json"),
        ReportFormat::Csv => args.out.join("report.csv"),
    };
    write_report(&report, &report_path, format)?;

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
        report_path.display()
    );
    Ok(ExitCode::SUCCESS)
}
