use std::fs;
use std::process::ExitCode;

use anyhow::Context;

use coloc::harness::write_boxes_csv;
use coloc::imagery::save_gray_map;
use coloc::synth::{distractor_scheduled, synth_case, DatasetManifest, ManifestCase, Rng64};

use crate::SynthArgs;

pub fn execute(args: &SynthArgs) -> anyhow::Result<ExitCode> {
    if args.size < 32 {
        anyhow::bail!("--size must be at least 32");
    }
    if args.per_class == 0 || args.classes == 0 {
        anyhow::bail!("--classes and --per-class must be at least 1");
    }

    let mut rng = Rng64::new(args.seed);
    let mut manifest_cases = Vec::new();
    for class_idx in 0..args.classes {
        let label = format!("class_{class_idx:02}");
        let class_dir = args.out.join(&label);
        for sub in ["images", "saliency", "cosaliency"] {
            fs::create_dir_all(class_dir.join(sub))
                .with_context(|| format!("creating {}", class_dir.join(sub).display()))?;
        }

        let mut truth_entries = Vec::new();
        for image_idx in 0..args.per_class {
            let stem = format!("img_{image_idx:03}");
            let with_distractor = distractor_scheduled(image_idx as usize);
            let case = synth_case(&mut rng, args.size, with_distractor)?;

            save_gray_map(
                &case.image,
                class_dir.join("images").join(format!("{stem}.png")),
            )?;
            save_gray_map(
                &case.saliency,
                class_dir.join("saliency").join(format!("{stem}.pgm")),
            )?;
            save_gray_map(
                &case.cosaliency,
                class_dir.join("cosaliency").join(format!("{stem}.pgm")),
            )?;
            truth_entries.push((stem.clone(), case.truth));
            manifest_cases.push(ManifestCase {
                class: label.clone(),
                stem,
                // scheduled but unplaceable distractors are recorded as absent
                distractor: case.distractor.is_some(),
            });
        }
        write_boxes_csv(class_dir.join("boxes.csv"), &truth_entries)?;
    }

    DatasetManifest {
        provenance: "synthetic".to_string(),
        seed: Some(args.seed),
        size: Some(args.size),
        cases: manifest_cases,
    }
    .save(&args.out)?;

    println!(
        "wrote {} classes x {} images at {}x{} under {}",
        args.classes,
        args.per_class,
        args.size,
        args.size,
        args.out.display()
    );
    Ok(ExitCode::SUCCESS)
}
