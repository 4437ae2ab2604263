//! Dataset ingestion, CorLoc evaluation, reports and overlays.
//!
//! Expected dataset layout:
//!
//! ```text
//! root/<class>/images/<stem>.(png|pgm)
//! root/<class>/saliency/<stem>.(png|pgm)
//! root/<class>/cosaliency/<stem>.(png|pgm)
//! root/<class>/boxes.csv        stem,t,b,l,r  ('#' starts a comment;
//!                               repeated stems mean multiple instances)
//! ```
//!
//! CorLoc counts an image as correctly localized when the predicted box
//! reaches IoU >= threshold against the single tight box enclosing all of
//! its ground-truth instances.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{iou, union_box, BoundingBox};
use crate::solver::{IterationTrace, Termination};

const MAP_EXTENSIONS: [&str; 2] = ["png", "pgm"];

/// One image of a dataset with its map paths and ground truth.
#[derive(Debug, Clone)]
pub struct DatasetCase {
    pub id: String,
    pub class_label: String,
    pub image_path: PathBuf,
    pub saliency_path: PathBuf,
    pub cosaliency_path: PathBuf,
    /// Instance boxes; empty when the image is unlabeled.
    pub ground_truth: Vec<BoundingBox>,
    pub width: u32,
    pub height: u32,
}

/// Cases of one class, in lexicographic stem order.
#[derive(Debug, Clone)]
pub struct ClassGroup {
    pub label: String,
    pub cases: Vec<DatasetCase>,
}

/// Loads a dataset root, validating per-case dimension consistency and
/// ground-truth boxes at load time.
///
/// Classes come from the subdirectory names, cases from the image stems
/// (lexicographic). Ground-truth lines for stems without an image are
/// ignored.
pub fn load_dataset(root: impl AsRef<Path>) -> Result<Vec<ClassGroup>> {
    let root = root.as_ref();
    if !root.is_dir() {
        return Err(Error::FileNotFound(root.to_path_buf()));
    }

    let mut class_dirs: Vec<PathBuf> = fs::read_dir(root)?
        .filter_map(|entry| entry.ok().map(|e| e.path()))
        .filter(|p| p.is_dir())
        .collect();
    class_dirs.sort();

    let mut groups = Vec::new();
    for class_dir in class_dirs {
        let label = class_dir
            .file_name()
            .and_then(|n| n.to_str())
            .unwrap_or_default()
            .to_string();
        let images_dir = class_dir.join("images");
        if !images_dir.is_dir() {
            continue;
        }

        let boxes_path = class_dir.join("boxes.csv");
        let mut truth: BTreeMap<String, Vec<BoundingBox>> = BTreeMap::new();
        if boxes_path.exists() {
            for (stem, bx) in parse_boxes_csv(&boxes_path)? {
                truth.entry(stem).or_default().push(bx);
            }
        }

        let mut stems: Vec<String> = fs::read_dir(&images_dir)?
            .filter_map(|entry| entry.ok().map(|e| e.path()))
            .filter(|p| {
                p.extension()
                    .and_then(|e| e.to_str())
                    .is_some_and(|e| MAP_EXTENSIONS.contains(&e))
            })
            .filter_map(|p| p.file_stem().and_then(|s| s.to_str()).map(str::to_string))
            .collect();
        stems.sort();
        stems.dedup();

        let mut cases = Vec::new();
        for stem in stems {
            let image_path = find_raster(&images_dir, &stem).ok_or_else(|| Error::MissingMap {
                kind: "image",
                stem: stem.clone(),
            })?;
            let saliency_path =
                find_raster(&class_dir.join("saliency"), &stem).ok_or_else(|| {
                    Error::MissingMap {
                        kind: "saliency",
                        stem: stem.clone(),
                    }
                })?;
            let cosaliency_path =
                find_raster(&class_dir.join("cosaliency"), &stem).ok_or_else(|| {
                    Error::MissingMap {
                        kind: "cosaliency",
                        stem: stem.clone(),
                    }
                })?;

            let (width, height) = raster_dimensions(&image_path)?;
            for path in [&saliency_path, &cosaliency_path] {
                let (w, h) = raster_dimensions(path)?;
                if (w, h) != (width, height) {
                    return Err(Error::DimensionMismatch(w, h, width, height));
                }
            }

            let ground_truth = truth.remove(&stem).unwrap_or_default();
            for bx in &ground_truth {
                bx.validate_within(width, height)?;
            }

            cases.push(DatasetCase {
                id: stem,
                class_label: label.clone(),
                image_path,
                saliency_path,
                cosaliency_path,
                ground_truth,
                width,
                height,
            });
        }
        groups.push(ClassGroup { label, cases });
    }
    Ok(groups)
}

fn find_raster(dir: &Path, stem: &str) -> Option<PathBuf> {
    MAP_EXTENSIONS
        .iter()
        .map(|ext| dir.join(format!("{stem}.{ext}")))
        .find(|p| p.exists())
}

fn raster_dimensions(path: &Path) -> Result<(u32, u32)> {
    image::image_dimensions(path).map_err(|e| Error::UnsupportedFormat {
        path: path.to_path_buf(),
        reason: e.to_string(),
    })
}

/// Parses a `stem,t,b,l,r` boxes file; `#` starts a comment.
pub fn parse_boxes_csv(path: impl AsRef<Path>) -> Result<Vec<(String, BoundingBox)>> {
    let path = path.as_ref();
    let body = fs::read_to_string(path).map_err(|e| match e.kind() {
        std::io::ErrorKind::NotFound => Error::FileNotFound(path.to_path_buf()),
        _ => Error::Io(e),
    })?;
    let malformed = |line: usize, reason: String| Error::MalformedBoxesFile {
        path: path.to_path_buf(),
        line,
        reason,
    };

    let mut out = Vec::new();
    for (idx, raw) in body.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields.len() != 5 {
            return Err(malformed(
                line_no,
                format!("expected 5 fields, got {}", fields.len()),
            ));
        }
        let mut coords = [0u32; 4];
        for (slot, field) in coords.iter_mut().zip(&fields[1..]) {
            *slot = field
                .parse()
                .map_err(|e| malformed(line_no, format!("bad coordinate '{field}': {e}")))?;
        }
        let bx = BoundingBox::new(coords[0], coords[1], coords[2], coords[3])
            .map_err(|e| malformed(line_no, e.to_string()))?;
        out.push((fields[0].to_string(), bx));
    }
    Ok(out)
}

/// Writes boxes in the dataset's `stem,t,b,l,r` format.
pub fn write_boxes_csv(path: impl AsRef<Path>, entries: &[(String, BoundingBox)]) -> Result<()> {
    let path = path.as_ref();
    let wrap = |source| Error::WriteFailure {
        path: path.to_path_buf(),
        source,
    };
    let mut file = fs::File::create(path).map_err(wrap)?;
    writeln!(file, "# stem,t,b,l,r").map_err(wrap)?;
    for (stem, bx) in entries {
        let [t, b, l, r] = bx.components();
        writeln!(file, "{stem},{t},{b},{l},{r}").map_err(wrap)?;
    }
    Ok(())
}

/// Single tight box enclosing all ground-truth instances.
pub fn merge_ground_truth(boxes: &[BoundingBox]) -> Result<BoundingBox> {
    if boxes.is_empty() {
        return Err(Error::NoGroundTruth);
    }
    union_box(boxes)
}

/// Evaluation input: one prediction joined with its case metadata.
#[derive(Debug, Clone)]
pub struct CaseOutcome {
    pub case_id: String,
    pub class_label: String,
    pub ground_truth: Vec<BoundingBox>,
    pub predicted: BoundingBox,
    /// Iterations used, when the prediction came from a solver run.
    pub iterations: Option<usize>,
    pub termination: Option<Termination>,
}

/// Per-class CorLoc percentage.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassCorloc {
    pub class: String,
    pub corloc: f64,
    pub hits: usize,
    pub evaluated: usize,
}

/// Per-image evaluation record.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImageRecord {
    pub case_id: String,
    pub class: String,
    pub predicted: BoundingBox,
    pub ground_truth: BoundingBox,
    pub iou: f64,
    pub hit: bool,
    pub iterations: Option<usize>,
    pub termination: Option<Termination>,
}

/// Full evaluation report.
///
/// `mean_corloc` is the unweighted mean over classes (matching the usual
/// per-class table convention); `image_corloc` is the per-image
/// micro-average, reported separately to avoid ambiguity.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub iou_threshold: f64,
    pub mean_corloc: f64,
    pub image_corloc: f64,
    pub per_class: Vec<ClassCorloc>,
    /// Cases excluded for lacking ground truth.
    pub skipped: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub map_provenance: Option<String>,
    pub per_image: Vec<ImageRecord>,
}

/// Computes CorLoc from predictions.
///
/// Cases without ground truth are skipped (and tallied); classes are
/// sorted, so the report is independent of input order. The comparison is
/// `iou >= threshold`.
pub fn corloc(outcomes: &[CaseOutcome], iou_threshold: f64) -> Result<EvalReport> {
    if outcomes.is_empty() {
        return Err(Error::EmptyResults);
    }
    if !(0.0..1.0).contains(&iou_threshold) || iou_threshold == 0.0 {
        return Err(Error::InvalidParameter(format!(
            "iou threshold must lie in (0, 1), got {iou_threshold}"
        )));
    }

    let mut skipped = 0usize;
    let mut per_image = Vec::new();
    for outcome in outcomes {
        if outcome.ground_truth.is_empty() {
            skipped += 1;
            continue;
        }
        let merged = merge_ground_truth(&outcome.ground_truth)?;
        let overlap = iou(&outcome.predicted, &merged);
        per_image.push(ImageRecord {
            case_id: outcome.case_id.clone(),
            class: outcome.class_label.clone(),
            predicted: outcome.predicted,
            ground_truth: merged,
            iou: overlap,
            hit: overlap >= iou_threshold,
            iterations: outcome.iterations,
            termination: outcome.termination,
        });
    }
    if per_image.is_empty() {
        return Err(Error::NoGroundTruth);
    }
    per_image.sort_by(|a, b| (&a.class, &a.case_id).cmp(&(&b.class, &b.case_id)));

    let mut tally: BTreeMap<&str, (usize, usize)> = BTreeMap::new();
    for record in &per_image {
        let entry = tally.entry(record.class.as_str()).or_default();
        entry.1 += 1;
        if record.hit {
            entry.0 += 1;
        }
    }
    let per_class: Vec<ClassCorloc> = tally
        .into_iter()
        .map(|(class, (hits, evaluated))| ClassCorloc {
            class: class.to_string(),
            corloc: 100.0 * hits as f64 / evaluated as f64,
            hits,
            evaluated,
        })
        .collect();

    let mean_corloc = per_class.iter().map(|c| c.corloc).sum::<f64>() / per_class.len() as f64;
    let total_hits: usize = per_class.iter().map(|c| c.hits).sum();
    let total: usize = per_class.iter().map(|c| c.evaluated).sum();
    let image_corloc = 100.0 * total_hits as f64 / total as f64;

    Ok(EvalReport {
        iou_threshold,
        mean_corloc,
        image_corloc,
        per_class,
        skipped,
        map_provenance: None,
        per_image,
    })
}

/// On-disk report format.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Json,
    Csv,
}

impl std::str::FromStr for ReportFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "json" => Ok(Self::Json),
            "csv" => Ok(Self::Csv),
            other => Err(Error::InvalidParameter(format!(
                "unknown report format '{other}'"
            ))),
        }
    }
}

/// Writes the report: JSON keeps the full nested structure (and parses
/// back to an equal report); CSV emits one row per image with numbers at
/// 4 decimal places.
pub fn write_report(
    report: &EvalReport,
    path: impl AsRef<Path>,
    format: ReportFormat,
) -> Result<()> {
    let path = path.as_ref();
    let wrap = |source| Error::WriteFailure {
        path: path.to_path_buf(),
        source,
    };
    match format {
        ReportFormat::Json => {
            let body = serde_json::to_string_pretty(report)
                .map_err(|e| Error::InvalidParameter(e.to_string()))?;
            fs::write(path, body).map_err(wrap)
        }
        ReportFormat::Csv => {
            let mut file = fs::File::create(path).map_err(wrap)?;
            writeln!(
                file,
                "case_id,class,t,b,l,r,gt_t,gt_b,gt_l,gt_r,iou,hit,iters,termination"
            )
            .map_err(wrap)?;
            for rec in &report.per_image {
                let [t, b, l, r] = rec.predicted.components();
                let [gt, gb, gl, gr] = rec.ground_truth.components();
                let iters = rec.iterations.map_or(String::new(), |i| i.to_string());
                let termination = rec.termination.map_or(String::new(), |t| t.to_string());
                writeln!(
                    file,
                    "{},{},{t},{b},{l},{r},{gt},{gb},{gl},{gr},{:.4},{},{iters},{termination}",
                    rec.case_id,
                    rec.class,
                    rec.iou,
                    u8::from(rec.hit),
                )
                .map_err(wrap)?;
            }
            Ok(())
        }
    }
}

/// Reads back a JSON report.
pub fn read_report(path: impl AsRef<Path>) -> Result<EvalReport> {
    let body = fs::read_to_string(path.as_ref())?;
    serde_json::from_str(&body).map_err(|e| Error::InvalidParameter(e.to_string()))
}

/// Writes the per-iteration trace in a line-oriented debug format:
/// `iter t b l r step_sq termination`, with the termination reason only on
/// the final line.
pub fn write_trace(path: impl AsRef<Path>, trace: &IterationTrace) -> Result<()> {
    let path = path.as_ref();
    let wrap = |source| Error::WriteFailure {
        path: path.to_path_buf(),
        source,
    };
    let mut file = fs::File::create(path).map_err(wrap)?;
    writeln!(file, "# iter t b l r step_sq termination").map_err(wrap)?;
    for (i, rec) in trace.records.iter().enumerate() {
        let [t, b, l, r] = rec.solution.components();
        let reason = if i + 1 == trace.records.len() {
            trace.termination.to_string()
        } else {
            "-".to_string()
        };
        writeln!(
            file,
            "{} {t} {b} {l} {r} {:.4} {reason}",
            rec.iter, rec.step_sq_norm
        )
        .map_err(wrap)?;
    }
    Ok(())
}

/// Draws the ground-truth box in red and the predicted box in green (drawn
/// last) onto a PNG copy of the image, with a 2-pixel stroke.
pub fn render_overlay(
    image_path: impl AsRef<Path>,
    gt: &BoundingBox,
    pred: &BoundingBox,
    out_path: impl AsRef<Path>,
) -> Result<()> {
    let image_path = image_path.as_ref();
    let out_path = out_path.as_ref();
    let dynimg = image::open(image_path).map_err(|e| Error::UnsupportedFormat {
        path: image_path.to_path_buf(),
        reason: e.to_string(),
    })?;
    let mut rgb = dynimg.to_rgb8();
    let (width, height) = (rgb.width(), rgb.height());
    gt.validate_within(width, height)?;
    pred.validate_within(width, height)?;

    draw_box_outline(&mut rgb, gt, [255, 0, 0]);
    draw_box_outline(&mut rgb, pred, [0, 200, 0]);

    rgb.save(out_path).map_err(|e| Error::WriteFailure {
        path: out_path.to_path_buf(),
        source: std::io::Error::other(e.to_string()),
    })
}

fn draw_box_outline(img: &mut image::RgbImage, bx: &BoundingBox, color: [u8; 3]) {
    // two nested 1-pixel outlines give a 2-pixel stroke growing inward,
    // so border-touching boxes never write out of bounds
    for inset in 0..2u32 {
        let t = bx.t() + inset;
        let b = bx.b().saturating_sub(inset);
        let l = bx.l() + inset;
        let r = bx.r().saturating_sub(inset);
        if b <= t || r <= l {
            break;
        }
        for col in l..=r {
            img.put_pixel(col, t, image::Rgb(color));
            img.put_pixel(col, b, image::Rgb(color));
        }
        for row in t..=b {
            img.put_pixel(l, row, image::Rgb(color));
            img.put_pixel(r, row, image::Rgb(color));
        }
    }
}
