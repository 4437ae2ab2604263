use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;

use coloc::baseline::{fuse_cosaliency, spectral_residual_saliency, HistogramSignature};
use coloc::imagery::{load_gray_map, save_gray_map};
use coloc::synth::{DatasetManifest, ManifestCase};

use crate::BaselineArgs;

pub fn execute(args: &BaselineArgs) -> anyhow::Result<ExitCode> {
    let root = &args.root;
    let mut class_dirs: Vec<PathBuf> = fs::read_dir(root)
        .with_context(|| format!("reading {}", root.display()))?
        .filter_map(|entry| entry.ok().map(|e| e.path()))
        .filter(|p| p.is_dir() && p.join("images").is_dir())
        .collect();
    class_dirs.sort();
    if class_dirs.is_empty() {
        anyhow::bail!("no class directories with images/ under {}", root.display());
    }

    let mut manifest_cases = Vec::new();
    let mut fusion_failures = Vec::new();
    for class_dir in &class_dirs {
        let label = class_dir
            .file_name()
            .and_then(|n| n.to_str())
            .unwrap_or_default();
        let stems = image_stems(&class_dir.join("images"))?;
        if stems.is_empty() {
            continue;
        }

        let saliency_dir = class_dir.join("saliency");
        let cosaliency_dir = class_dir.join("cosaliency");
        fs::create_dir_all(&saliency_dir)?;
        fs::create_dir_all(&cosaliency_dir)?;

        let mut images = Vec::new();
        for (stem, path) in &stems {
            let image =
                load_gray_map(path).with_context(|| format!("loading {}", path.display()))?;
            let saliency = spectral_residual_saliency(&image);
            save_gray_map(&saliency, saliency_dir.join(format!("{stem}.png")))?;
            images.push((stem.clone(), image, saliency));
        }

        let signatures: Vec<HistogramSignature> = images
            .iter()
            .map(|(_, image, _)| HistogramSignature::from_gray(image))
            .collect();
        let maps: Vec<coloc::GrayMap> = images
            .iter()
            .map(|(_, _, saliency)| saliency.clone())
            .collect();
        match fuse_cosaliency(&maps, &signatures) {
            Ok(fused) => {
                for ((stem, _, _), map) in images.iter().zip(&fused) {
                    save_gray_map(map, cosaliency_dir.join(format!("{stem}.png")))?;
                }
            }
            Err(e) => {
                eprintln!("class {label}: co-saliency fusion failed: {e}");
                fusion_failures.push(label.to_string());
            }
        }

        for (stem, _, _) in &images {
            manifest_cases.push(ManifestCase {
                class: label.to_string(),
                stem: stem.clone(),
                distractor: false,
            });
        }
    }

    DatasetManifest {
        provenance: "baseline".to_string(),
        seed: None,
        size: None,
        cases: manifest_cases,
    }
    .save(root)?;

    if fusion_failures.is_empty() {
        Ok(ExitCode::SUCCESS)
    } else {
        eprintln!(
            "co-saliency missing for classes: {}",
            fusion_failures.join(", ")
        );
        Ok(ExitCode::FAILURE)
    }
}

fn image_stems(dir: &Path) -> anyhow::Result<Vec<(String, PathBuf)>> {
    let mut stems: Vec<(String, PathBuf)> = fs::read_dir(dir)?
        .filter_map(|entry| entry.ok().map(|e| e.path()))
        .filter(|p| {
            p.extension()
                .and_then(|e| e.to_str())
                .is_some_and(|e| matches!(e, "png" | "pgm"))
        })
        .filter_map(|p| {
            p.file_stem()
                .and_then(|s| s.to_str())
                .map(|s| (s.to_string(), p.clone()))
        })
        .collect();
    stems.sort();
    Ok(stems)
}
