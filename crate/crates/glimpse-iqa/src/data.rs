//! Dataset ingestion and the synthetic distortion corpus.
//!
//! Two sources feed the pipeline: a TID2008-style directory (a MOS listing
//! of `score filename` lines plus the distorted images it names) and a
//! fully procedural corpus of textured reference images with four
//! distortion kinds at four severity levels. Splits partition by reference
//! image so no reference's distortions straddle two splits.

use crate::error::Error;
use crate::imgproc::{to_grayscale, GrayImage};
use crate::rng;
use crate::Result;
use rand::Rng;
use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

/// Synthetic distortion families. The class index is the discriminant.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum DistortionKind {
    AdditiveGaussian = 0,
    HighFrequencyNoise = 1,
    LocalBlockwise = 2,
    GaussianBlur = 3,
}

pub const SYNTHETIC_KINDS: [DistortionKind; 4] = [
    DistortionKind::AdditiveGaussian,
    DistortionKind::HighFrequencyNoise,
    DistortionKind::LocalBlockwise,
    DistortionKind::GaussianBlur,
];

impl DistortionKind {
    pub fn name(&self) -> &'static str {
        match self {
            DistortionKind::AdditiveGaussian => "additive_gaussian",
            DistortionKind::HighFrequencyNoise => "high_frequency_noise",
            DistortionKind::LocalBlockwise => "local_blockwise",
            DistortionKind::GaussianBlur => "gaussian_blur",
        }
    }

    pub fn class_index(&self) -> usize {
        *self as usize
    }
}

/// Recipe for one synthetic distortion application.
#[derive(Clone, Copy, Debug)]
pub struct DistortionSpec {
    pub kind: DistortionKind,
    /// 0 is the no-op convention; severities run 1..=4.
    pub level: u8,
    pub seed: u64,
}

/// Where a sample's pixels come from.
#[derive(Clone, Debug)]
pub enum ImageSource {
    Memory(GrayImage),
    File(PathBuf),
}

/// One dataset item.
#[derive(Clone, Debug)]
pub struct Sample {
    pub source: ImageSource,
    pub mos: f64,
    pub class: usize,
    pub level: u8,
    pub reference_id: u32,
}

/// A loaded dataset: samples plus the class-name and reference tables.
#[derive(Clone, Debug)]
pub struct DatasetIndex {
    pub samples: Vec<Sample>,
    pub class_names: Vec<String>,
    pub reference_ids: Vec<u32>,
}

impl DatasetIndex {
    pub fn num_classes(&self) -> usize {
        self.class_names.len()
    }

    fn validate(&self) -> Result<()> {
        if self.samples.is_empty() {
            return Err(Error::Dataset("dataset holds no samples".into()));
        }
        for s in &self.samples {
            if !s.mos.is_finite() {
                return Err(Error::Dataset(format!("non-finite MOS for reference {}", s.reference_id)));
            }
            if s.class >= self.class_names.len() {
                return Err(Error::Dataset(format!(
                    "class index {} out of range ({} classes)",
                    s.class,
                    self.class_names.len()
                )));
            }
            if !self.reference_ids.contains(&s.reference_id) {
                return Err(Error::Dataset(format!(
                    "sample references unknown reference id {}",
                    s.reference_id
                )));
            }
        }
        Ok(())
    }

    /// CSV export: `path,mos,type,level,reference_id` per sample.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("path,mos,type,level,reference_id\n");
        for s in &self.samples {
            let path = match &s.source {
                ImageSource::File(p) => p.display().to_string(),
                ImageSource::Memory(_) => String::from("(memory)"),
            };
            out.push_str(&format!(
                "{path},{},{},{},{}\n",
                s.mos, s.class, s.level, s.reference_id
            ));
        }
        out
    }
}

/// A sample ready for the model: pixels materialized and contrast
/// normalized.
#[derive(Clone, Debug)]
pub struct PreparedSample {
    pub image: GrayImage,
    pub mos: f64,
    pub class: usize,
    pub level: u8,
    pub reference_id: u32,
}

/// Materializes and contrast-normalizes the chosen samples.
pub fn prepare(
    index: &DatasetIndex,
    chosen: &[usize],
    lcn_window: usize,
    lcn_eps: f64,
    threads: usize,
) -> Result<Vec<PreparedSample>> {
    let results = crate::parallel::map_indexed(chosen, threads, |_, &i| {
        let s = &index.samples[i];
        materialize(s).map(|img| PreparedSample {
            image: crate::imgproc::local_contrast_normalize(&img, lcn_window, lcn_eps),
            mos: s.mos,
            class: s.class,
            level: s.level,
            reference_id: s.reference_id,
        })
    });
    results.into_iter().collect()
}

/// Loads a sample's pixels, decoding and grayscale-converting file-backed
/// images.
pub fn materialize(sample: &Sample) -> Result<GrayImage> {
    match &sample.source {
        ImageSource::Memory(img) => Ok(img.clone()),
        ImageSource::File(path) => load_image(path),
    }
}

/// Reads an 8-bit grayscale or RGB PNG/BMP into [0,1] grayscale.
pub fn load_image(path: &Path) -> Result<GrayImage> {
    let img = image::open(path).map_err(|e| Error::Image(path.to_path_buf(), e.to_string()))?;
    let rgb = img.to_rgb8();
    let (w, h) = (rgb.width() as usize, rgb.height() as usize);
    if w == 0 || h == 0 {
        return Err(Error::Image(path.to_path_buf(), "empty image".into()));
    }
    Ok(to_grayscale(rgb.as_raw(), h, w))
}

/// Writes a [0,1] grayscale image as an 8-bit PNG.
pub fn save_image_png(img: &GrayImage, path: &Path) -> Result<()> {
    let (h, w) = (img.height(), img.width());
    let bytes: Vec<u8> =
        img.data().iter().map(|v| (v.clamp(0.0, 1.0) * 255.0).round() as u8).collect();
    let buf: image::GrayImage = image::ImageBuffer::from_raw(w as u32, h as u32, bytes)
        .expect("buffer size matches dimensions");
    buf.save(path).map_err(|e| Error::Image(path.to_path_buf(), e.to_string()))
}

// ── synthetic corpus ─────────────────────────────────────────────────────

/// Procedurally textured reference image: a seeded mixture of gratings,
/// gradients, checkerboards, and smoothed noise.
pub fn synthetic_reference(reference_id: u32, size: usize, seed: u64) -> GrayImage {
    let mut r = rng::stream(seed, &[0x5ef5, reference_id as u64]);
    let n = size;
    let mut data = vec![0.0; n * n];

    // base gradient
    let (gx, gy) = (r.gen::<f64>() * 2.0 - 1.0, r.gen::<f64>() * 2.0 - 1.0);
    for i in 0..n {
        for j in 0..n {
            data[i * n + j] = 0.5 + 0.15 * (gx * j as f64 + gy * i as f64) / n as f64;
        }
    }
    // two sinusoidal gratings at random frequency and orientation
    for _ in 0..2 {
        let freq = 2.0 + r.gen::<f64>() * 14.0;
        let angle = r.gen::<f64>() * std::f64::consts::PI;
        let (ca, sa) = (angle.cos(), angle.sin());
        let amp = 0.08 + r.gen::<f64>() * 0.12;
        let phase = r.gen::<f64>() * std::f64::consts::TAU;
        for i in 0..n {
            for j in 0..n {
                let u = (ca * j as f64 + sa * i as f64) / n as f64;
                data[i * n + j] += amp * (std::f64::consts::TAU * freq * u + phase).sin();
            }
        }
    }
    // checkerboard patch structure
    let cell = 4 + (r.gen::<u32>() % 13) as usize;
    let amp = 0.05 + r.gen::<f64>() * 0.10;
    for i in 0..n {
        for j in 0..n {
            if ((i / cell) + (j / cell)) % 2 == 0 {
                data[i * n + j] += amp;
            } else {
                data[i * n + j] -= amp;
            }
        }
    }
    // smoothed noise for broadband texture
    let mut noise = vec![0.0; n * n];
    for v in &mut noise {
        *v = r.gen::<f64>() - 0.5;
    }
    let blurred = box_blur(&noise, n, n, 2);
    for (d, b) in data.iter_mut().zip(&blurred) {
        *d += 0.35 * b;
    }
    // normalize into [0.05, 0.95]
    let lo = data.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = data.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let span = (hi - lo).max(1e-9);
    for v in &mut data {
        *v = 0.05 + 0.9 * (*v - lo) / span;
    }
    GrayImage::new(n, n, data)
}

fn box_blur(data: &[f64], h: usize, w: usize, radius: usize) -> Vec<f64> {
    let r = radius as isize;
    let norm = (2 * radius + 1) as f64;
    let mut tmp = vec![0.0; h * w];
    for i in 0..h as isize {
        for j in 0..w as isize {
            let mut acc = 0.0;
            for d in -r..=r {
                let c = (j + d).clamp(0, w as isize - 1);
                acc += data[i as usize * w + c as usize];
            }
            tmp[i as usize * w + j as usize] = acc / norm;
        }
    }
    let mut out = vec![0.0; h * w];
    for i in 0..h as isize {
        for j in 0..w as isize {
            let mut acc = 0.0;
            for d in -r..=r {
                let rr = (i + d).clamp(0, h as isize - 1);
                acc += tmp[rr as usize * w + j as usize];
            }
            out[i as usize * w + j as usize] = acc / norm;
        }
    }
    out
}

fn gaussian_blur(img: &GrayImage, sigma: f64) -> GrayImage {
    let radius = (3.0 * sigma).ceil() as isize;
    let mut kernel = Vec::with_capacity((2 * radius + 1) as usize);
    for d in -radius..=radius {
        kernel.push((-0.5 * (d as f64 / sigma).powi(2)).exp());
    }
    let sum: f64 = kernel.iter().sum();
    for k in &mut kernel {
        *k /= sum;
    }
    let (h, w) = (img.height() as isize, img.width() as isize);
    let mut tmp = GrayImage::zeros(img.height(), img.width());
    for i in 0..h {
        for j in 0..w {
            let mut acc = 0.0;
            for (ki, d) in (-radius..=radius).enumerate() {
                acc += kernel[ki] * img.get_clamped(i, j + d);
            }
            tmp.set(i as usize, j as usize, acc);
        }
    }
    let mut out = GrayImage::zeros(img.height(), img.width());
    for i in 0..h {
        for j in 0..w {
            let mut acc = 0.0;
            for (ki, d) in (-radius..=radius).enumerate() {
                acc += kernel[ki] * tmp.get_clamped(i + d, j);
            }
            out.set(i as usize, j as usize, acc);
        }
    }
    out
}

/// Base side length of a corrupted block relative to the image side.
pub const BLOCK_FRACTION: f64 = 0.12;

/// Block side for one severity level: the count grows with the level and
/// so does the block size, so the corrupted area ramps steeply enough to
/// stay legible after contrast normalization (which is a local high-pass
/// and erases any smooth cast the blocks might carry).
pub fn blockwise_block_side(image_side: usize, level: u8) -> usize {
    let base = image_side as f64 * BLOCK_FRACTION;
    ((base * (1.0 + 0.35 * (level as f64 - 1.0))) as usize).max(8)
}

/// Centers of the corrupted blocks for a blockwise-distorted sample,
/// reproduced from the recipe that generated it. Returns (row, col) pairs.
pub fn blockwise_centers(reference: &GrayImage, spec: &DistortionSpec) -> Vec<(f64, f64)> {
    assert_eq!(spec.kind, DistortionKind::LocalBlockwise);
    let mut r = rng::stream(spec.seed, &[0xb10c, spec.level as u64]);
    let n = reference.height().min(reference.width());
    let block = blockwise_block_side(n, spec.level);
    place_blocks(&mut r, reference.height(), reference.width(), block, spec.level as usize)
        .into_iter()
        .map(|(top, left)| (top as f64 + block as f64 / 2.0, left as f64 + block as f64 / 2.0))
        .collect()
}

/// Non-overlapping block placement; rejection-samples seeded positions.
fn place_blocks(
    r: &mut rand_chacha::ChaCha8Rng,
    h: usize,
    w: usize,
    block: usize,
    count: usize,
) -> Vec<(usize, usize)> {
    let mut placed: Vec<(usize, usize)> = Vec::with_capacity(count);
    let mut guard = 0;
    while placed.len() < count && guard < 10_000 {
        guard += 1;
        let top = (r.gen::<u64>() as usize) % (h - block);
        let left = (r.gen::<u64>() as usize) % (w - block);
        let overlaps = placed.iter().any(|&(t, l)| {
            (top as isize - t as isize).abs() < block as isize
                && (left as isize - l as isize).abs() < block as isize
        });
        if !overlaps {
            placed.push((top, left));
        }
    }
    assert_eq!(placed.len(), count, "could not place {count} non-overlapping blocks");
    placed
}

/// MOS offsets that keep the four kinds' score ladders distinct.
const KIND_MOS_OFFSET: [f64; 4] = [0.0, 0.15, 0.3, 0.45];

/// Synthetic MOS: 9 - 2 (level - 1) - kind offset, strictly decreasing in
/// level; level 0 is the pristine reference at MOS 9.
pub fn synthetic_mos(kind: DistortionKind, level: u8) -> f64 {
    if level == 0 {
        return 9.0;
    }
    9.0 - 2.0 * (level as f64 - 1.0) - KIND_MOS_OFFSET[kind.class_index()]
}

/// Applies one synthetic distortion. Deterministic given the recipe; level 0
/// returns the reference untouched.
pub fn synth_distort(reference: &GrayImage, spec: &DistortionSpec) -> (GrayImage, f64, usize) {
    let mos = synthetic_mos(spec.kind, spec.level);
    let class = spec.kind.class_index();
    if spec.level == 0 {
        return (reference.clone(), mos, class);
    }
    assert!(spec.level <= 4, "levels run 1..=4");
    let n = reference.height().min(reference.width());
    let min_side = 16;
    assert!(n >= min_side, "reference too small for distortion synthesis");
    let level = spec.level as f64;
    let mut img = reference.clone();
    let mut r = rng::stream(spec.seed, &[0xd157, spec.kind.class_index() as u64, spec.level as u64]);
    match spec.kind {
        DistortionKind::AdditiveGaussian => {
            // geometric severity ladder: every level is 1.9x the last
            let sigma = 0.05 * 1.9_f64.powf(level - 1.0);
            let mut iter = img.data_mut().iter_mut();
            while let Some(a) = iter.next() {
                let (za, zb) = rng::normal_pair(&mut r);
                *a = (*a + sigma * za).clamp(0.0, 1.0);
                if let Some(b) = iter.next() {
                    *b = (*b + sigma * zb).clamp(0.0, 1.0);
                }
            }
        }
        DistortionKind::HighFrequencyNoise => {
            // smooth random envelope modulated to the Nyquist frequency:
            // harsh pixel-level flicker that largely cancels under block
            // averaging, unlike white additive noise
            let (h, w) = (img.height(), img.width());
            let mut envelope = vec![0.0; h * w];
            let mut iter = envelope.iter_mut();
            while let Some(a) = iter.next() {
                let (za, zb) = rng::normal_pair(&mut r);
                *a = za;
                if let Some(b) = iter.next() {
                    *b = zb;
                }
            }
            let envelope = box_blur(&envelope, h, w, 2);
            let amp = 0.16 * 1.7_f64.powf(level - 1.0);
            for i in 0..h {
                for j in 0..w {
                    let sign = if (i + j) % 2 == 0 { 1.0 } else { -1.0 };
                    let v = img.get(i, j) + amp * sign * envelope[i * w + j];
                    img.set(i, j, v.clamp(0.0, 1.0));
                }
            }
        }
        DistortionKind::LocalBlockwise => {
            // `level` high-contrast noise blocks; everything else untouched
            let mut rb = rng::stream(spec.seed, &[0xb10c, spec.level as u64]);
            let block = blockwise_block_side(n, spec.level);
            assert!(n >= 4 * block, "reference too small for blockwise distortion");
            let spots =
                place_blocks(&mut rb, img.height(), img.width(), block, spec.level as usize);
            // both the corrupted area and the block intensity grow with
            // the level
            let contrast = 0.14 + 0.08 * (level - 1.0);
            for (top, left) in spots {
                // checker cells wider than the normalization window, so
                // the block structure passes through the local high-pass
                // and its footprint stays visible after the coarse-channel
                // downsampling
                let cell = 9;
                let flip = rb.gen::<bool>();
                for i in 0..block {
                    for j in 0..block {
                        let on = ((i / cell + j / cell) % 2 == 0) ^ flip;
                        let base = if on { 0.5 + contrast } else { 0.5 - contrast };
                        let v = base + 0.10 * (rb.gen::<f64>() - 0.5);
                        img.set(top + i, left + j, v.clamp(0.0, 1.0));
                    }
                }
            }
        }
        DistortionKind::GaussianBlur => {
            img = gaussian_blur(&img, 0.45 * 1.8_f64.powf(level - 1.0));
        }
    }
    (img, mos, class)
}

/// Builds the full synthetic corpus: every reference x kind x level.
pub fn synthetic_dataset(references: u32, size: usize, seed: u64) -> DatasetIndex {
    let mut samples = Vec::new();
    for ref_id in 0..references {
        let reference = synthetic_reference(ref_id, size, seed);
        for kind in SYNTHETIC_KINDS {
            for level in 1..=4u8 {
                let spec = DistortionSpec {
                    kind,
                    level,
                    seed: rng::splitmix64(seed ^ (ref_id as u64) << 3 ^ kind.class_index() as u64),
                };
                let (img, mos, class) = synth_distort(&reference, &spec);
                samples.push(Sample {
                    source: ImageSource::Memory(img),
                    mos,
                    class,
                    level,
                    reference_id: ref_id,
                });
            }
        }
    }
    DatasetIndex {
        samples,
        class_names: SYNTHETIC_KINDS.iter().map(|k| k.name().to_string()).collect(),
        reference_ids: (0..references).collect(),
    }
}

// ── TID2008-style loading ────────────────────────────────────────────────

/// Distortion types excluded because local contrast normalization is not
/// applicable to them (mean shift, contrast change), 1-based.
const TID_EXCLUDED_TYPES: [u32; 2] = [16, 17];
/// The non-natural reference image, excluded.
const TID_EXCLUDED_REFERENCE: u32 = 25;
const TID_KEPT_TYPES: usize = 15;

/// Parses a TID2008 filename, `iRR_TT_L.bmp` -> (reference, type, level).
fn parse_tid_name(name: &str) -> Option<(u32, u32, u32)> {
    let stem = name.rsplit_once('.')?.0;
    let mut parts = stem.split('_');
    let refpart = parts.next()?;
    let tpart = parts.next()?;
    let lpart = parts.next()?;
    if parts.next().is_some() {
        return None;
    }
    let refpart = refpart.strip_prefix(['i', 'I'])?;
    Some((refpart.parse().ok()?, tpart.parse().ok()?, lpart.parse().ok()?))
}

/// Loads a TID2008-style tree: `root` must hold a MOS listing
/// (`mos_with_names.txt`) of `score filename` lines; image paths resolve
/// against `root` and `root/distorted_images`. Mean-shift and
/// contrast-change types and the non-natural 25th reference are filtered
/// out; the 15 kept types map to classes 0..=14 in type order.
pub fn load_tid2008(root: &Path) -> Result<DatasetIndex> {
    let mos_path = ["mos_with_names.txt", "mos.txt"]
        .iter()
        .map(|n| root.join(n))
        .find(|p| p.exists())
        .ok_or_else(|| {
            Error::Dataset(format!(
                "no MOS listing (mos_with_names.txt) under {}",
                root.display()
            ))
        })?;
    let text = std::fs::read_to_string(&mos_path)?;
    let mut samples = Vec::new();
    let mut references = BTreeMap::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let (score_str, name) = line.split_once(char::is_whitespace).ok_or_else(|| {
            Error::Dataset(format!("{}:{}: expected 'score filename'", mos_path.display(), lineno + 1))
        })?;
        let mos: f64 = score_str.trim().parse().map_err(|_| {
            Error::Dataset(format!(
                "{}:{}: unparseable score {score_str:?}",
                mos_path.display(),
                lineno + 1
            ))
        })?;
        let name = name.trim();
        let (reference, dtype, level) = parse_tid_name(name).ok_or_else(|| {
            Error::Dataset(format!(
                "{}:{}: filename {name:?} does not follow iRR_TT_L",
                mos_path.display(),
                lineno + 1
            ))
        })?;
        if TID_EXCLUDED_TYPES.contains(&dtype) || reference == TID_EXCLUDED_REFERENCE {
            continue;
        }
        if dtype == 0 || dtype as usize > TID_KEPT_TYPES {
            return Err(Error::Dataset(format!(
                "{}:{}: distortion type {dtype} out of range",
                mos_path.display(),
                lineno + 1
            )));
        }
        let direct = root.join(name);
        let nested = root.join("distorted_images").join(name);
        let path = if direct.exists() { direct } else { nested };
        references.entry(reference).or_insert(0u32);
        samples.push(Sample {
            source: ImageSource::File(path),
            mos,
            class: dtype as usize - 1,
            level: level as u8,
            reference_id: reference,
        });
    }
    // deterministic order regardless of listing order
    samples.sort_by(|a, b| {
        (a.reference_id, a.class, a.level)
            .cmp(&(b.reference_id, b.class, b.level))
            .then_with(|| a.mos.partial_cmp(&b.mos).unwrap())
    });
    let index = DatasetIndex {
        samples,
        class_names: (1..=TID_KEPT_TYPES).map(|t| format!("type{t:02}")).collect(),
        reference_ids: references.into_keys().collect(),
    };
    index.validate()?;
    Ok(index)
}

// ── splits ───────────────────────────────────────────────────────────────

/// Sample indices of the train/validation/test portions.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Split {
    pub train: Vec<usize>,
    pub val: Vec<usize>,
    pub test: Vec<usize>,
}

/// Partitions by reference image: floor(train_frac N) references to train,
/// floor(val_frac N) to validation, the remainder to test.
pub fn split_by_reference(
    index: &DatasetIndex,
    train_frac: f64,
    val_frac: f64,
    seed: u64,
) -> Result<Split> {
    assert!(train_frac > 0.0 && val_frac > 0.0 && train_frac + val_frac < 1.0);
    let mut refs = index.reference_ids.clone();
    if refs.len() < 3 {
        return Err(Error::Dataset(format!(
            "{} reference images cannot fill three splits",
            refs.len()
        )));
    }
    // seeded Fisher-Yates
    let mut r = rng::stream(seed, &[0x5b117]);
    for i in (1..refs.len()).rev() {
        let j = (r.gen::<u64>() as usize) % (i + 1);
        refs.swap(i, j);
    }
    let n_train = (train_frac * refs.len() as f64).floor() as usize;
    let n_val = (val_frac * refs.len() as f64).floor() as usize;
    let train_refs = &refs[..n_train];
    let val_refs = &refs[n_train..n_train + n_val];

    let mut split = Split { train: Vec::new(), val: Vec::new(), test: Vec::new() };
    for (i, s) in index.samples.iter().enumerate() {
        if train_refs.contains(&s.reference_id) {
            split.train.push(i);
        } else if val_refs.contains(&s.reference_id) {
            split.val.push(i);
        } else {
            split.test.push(i);
        }
    }
    Ok(split)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mad(a: &GrayImage, b: &GrayImage) -> f64 {
        a.data().iter().zip(b.data()).map(|(x, y)| (x - y).abs()).sum::<f64>()
            / a.data().len() as f64
    }

    #[test]
    fn level_zero_is_identity() {
        let reference = synthetic_reference(0, 64, 5);
        for kind in SYNTHETIC_KINDS {
            let spec = DistortionSpec { kind, level: 0, seed: 9 };
            let (img, mos, class) = synth_distort(&reference, &spec);
            assert_eq!(img.data(), reference.data());
            assert_eq!(mos, 9.0);
            assert_eq!(class, kind.class_index());
        }
    }

    #[test]
    fn severity_strictly_monotone_in_level() {
        let reference = synthetic_reference(1, 96, 6);
        for kind in SYNTHETIC_KINDS {
            let mut last = 0.0;
            for level in 1..=4u8 {
                let spec = DistortionSpec { kind, level, seed: 11 };
                let (img, _, _) = synth_distort(&reference, &spec);
                let dev = mad(&reference, &img);
                assert!(
                    dev > last,
                    "{} level {level}: deviation {dev} not above {last}",
                    kind.name()
                );
                last = dev;
            }
        }
    }

    #[test]
    fn synthetic_mos_strictly_decreasing_in_level() {
        for kind in SYNTHETIC_KINDS {
            for level in 1..4u8 {
                assert!(synthetic_mos(kind, level) > synthetic_mos(kind, level + 1));
            }
        }
    }

    #[test]
    fn blockwise_leaves_rest_untouched() {
        let reference = synthetic_reference(2, 96, 7);
        let spec = DistortionSpec { kind: DistortionKind::LocalBlockwise, level: 3, seed: 13 };
        let (img, _, _) = synth_distort(&reference, &spec);
        let centers = blockwise_centers(&reference, &spec);
        assert_eq!(centers.len(), 3);
        let block = blockwise_block_side(96, 3) as f64;
        let mut changed = 0;
        for i in 0..96 {
            for j in 0..96 {
                let inside = centers.iter().any(|&(cr, cc)| {
                    (i as f64 + 0.5 - cr).abs() <= block / 2.0
                        && (j as f64 + 0.5 - cc).abs() <= block / 2.0
                });
                if img.get(i, j) != reference.get(i, j) {
                    changed += 1;
                    assert!(inside, "pixel ({i},{j}) changed outside every block");
                }
            }
        }
        assert!(changed > 0);
    }

    #[test]
    fn distortion_is_deterministic_given_seed() {
        let reference = synthetic_reference(3, 64, 8);
        for kind in SYNTHETIC_KINDS {
            let spec = DistortionSpec { kind, level: 2, seed: 21 };
            let (a, _, _) = synth_distort(&reference, &spec);
            let (b, _, _) = synth_distort(&reference, &spec);
            assert_eq!(a.data(), b.data());
        }
    }

    #[test]
    fn synthetic_dataset_has_full_grid() {
        let ds = synthetic_dataset(3, 64, 17);
        assert_eq!(ds.samples.len(), 3 * 4 * 4);
        assert_eq!(ds.num_classes(), 4);
        ds.validate().unwrap();
    }

    #[test]
    fn split_counts_follow_floor_rounding() {
        // 24 references -> 14 / 4 / 6
        let ds = synthetic_dataset(24, 64, 3);
        let split = split_by_reference(&ds, 0.6, 0.2, 1).unwrap();
        let refs_of = |idx: &[usize]| {
            let mut r: Vec<u32> = idx.iter().map(|&i| ds.samples[i].reference_id).collect();
            r.sort();
            r.dedup();
            r
        };
        assert_eq!(refs_of(&split.train).len(), 14);
        assert_eq!(refs_of(&split.val).len(), 4);
        assert_eq!(refs_of(&split.test).len(), 6);

        // 5 references -> 3 / 1 / 1
        let ds5 = synthetic_dataset(5, 64, 4);
        let s5 = split_by_reference(&ds5, 0.6, 0.2, 2).unwrap();
        assert_eq!(refs_of(&s5.train).len(), 3);
        assert_eq!(refs_of(&s5.val).len(), 1);
        assert_eq!(refs_of(&s5.test).len(), 1);
    }

    #[test]
    fn splits_partition_the_index() {
        let ds = synthetic_dataset(7, 64, 5);
        let split = split_by_reference(&ds, 0.6, 0.2, 9).unwrap();
        let mut all: Vec<usize> =
            split.train.iter().chain(&split.val).chain(&split.test).cloned().collect();
        all.sort();
        assert_eq!(all, (0..ds.samples.len()).collect::<Vec<_>>());
    }

    #[test]
    fn no_reference_straddles_two_splits() {
        let ds = synthetic_dataset(11, 64, 6);
        let split = split_by_reference(&ds, 0.6, 0.2, 31).unwrap();
        let refs = |idx: &[usize]| {
            idx.iter().map(|&i| ds.samples[i].reference_id).collect::<std::collections::HashSet
<_>>()
        };
        let (tr, va, te) = (refs(&split.train), refs(&split.val), refs(&split.test));
        assert!(tr.is_disjoint(&va) && tr.is_disjoint(&te) && va.is_disjoint(&te));
    }

    #[test]
    fn too_few_references_error() {
        let ds = synthetic_dataset(2, 64, 7);
        assert!(split_by_reference(&ds, 0.6, 0.2, 1).is_err());
    }

    // ── TID-style loader ───────────────────────────────────────────────

    fn write_fixture(dir: &Path, lines: &[&str]) {
        std::fs::create_dir_all(dir).unwrap();
        std::fs::write(dir.join("mos_with_names.txt"), lines.join("\n")).unwrap();
    }

    fn tmp_dir(name: &str) -> PathBuf {
        let mut p = std::env::temp_dir();
        p.push(format!("glimpse-iqa-data-test-{}-{name}", std::process::id()));
        std::fs::remove_dir_all(&p).ok();
        p
    }

    #[test]
    fn hand_fixture_loads_with_matching_scores() {
        let dir = tmp_dir("fixture3");
        write_fixture(&dir, &["5.5 i01_01_1.bmp", "4.25 i01_02_3.bmp", "3.0 i02_05_4.bmp"]);
        let ds = load_tid2008(&dir).unwrap();
        assert_eq!(ds.samples.len(), 3);
        assert_eq!(ds.num_classes(), 15);
        let scores: Vec<f64> = ds.samples.iter().map(|s| s.mos).collect();
        assert_eq!(scores, vec![5.5, 4.25, 3.0]);
        assert_eq!(ds.samples[1].class, 1);
        assert_eq!(ds.samples[2].reference_id, 2);
        std::fs::remove_dir_all(&dir).ok();
    }

    #[test]
    fn full_tid_shaped_tree_yields_1440_samples() {
        // the complete corpus shape: 25 references x 17 types x 4 levels;
        // filtering must leave 24 x 15 x 4 = 1440 samples in 15 classes
        let dir = tmp_dir("full-tid");
        std::fs::create_dir_all(&dir).unwrap();
        let mut listing = String::new();
        for reference in 1..=25u32 {
            for dtype in 1..=17u32 {
                for level in 1..=4u32 {
                    listing.push_str(&format!(
                        "{} i{reference:02}_{dtype:02}_{level}.bmp\n",
                        7.0 - level as f64 + dtype as f64 / 100.0
                    ));
                }
            }
        }
        std::fs::write(dir.join("mos_with_names.txt"), listing).unwrap();
        let ds = load_tid2008(&dir).unwrap();
        assert_eq!(ds.samples.len(), 1440);
        assert_eq!(ds.num_classes(), 15);
        assert_eq!(ds.reference_ids.len(), 24);
        std::fs::remove_dir_all(&dir).ok();
    }

    #[test]
    fn excluded_types_and_reference_filtered() {
        let dir = tmp_dir("excluded");
        write_fixture(
            &dir,
            &[
                "5.0 i01_01_1.bmp",
                "5.0 i01_16_1.bmp", // mean shift: excluded
                "5.0 i01_17_1.bmp", // contrast change: excluded
                "5.0 i25_01_1.bmp", // non-natural reference: excluded
                "5.0 i02_15_2.bmp",
            ],
        );
        let ds = load_tid2008(&dir).unwrap();
        assert_eq!(ds.samples.len(), 2);
        assert!(ds.samples.iter().all(|s| s.reference_id != 25));
        std::fs::remove_dir_all(&dir).ok();
    }

    #[test]
    fn empty_directory_is_explicit_error() {
        let dir = tmp_dir("empty");
        std::fs::create_dir_all(&dir).unwrap();
        let err = load_tid2008(&dir).unwrap_err();
        assert!(err.to_string().contains("MOS"), "{err}");
        std::fs::remove_dir_all(&dir).ok();
    }

    #[test]
    fn unparseable_line_reports_line_number() {
        let dir = tmp_dir("badline");
        write_fixture(&dir, &["5.0 i01_01_1.bmp", "not-a-score i01_02_1.bmp"]);
        let err = load_tid2008(&dir).unwrap_err();
        assert!(err.to_string().contains(":2:"), "{err}");
        std::fs::remove_dir_all(&dir).ok();
    }

    #[test]
    fn load_order_is_stable() {
        let dir = tmp_dir("stable");
        // listing deliberately out of order
        write_fixture(&dir, &["3.0 i02_05_4.bmp", "5.5 i01_01_1.bmp", "4.2 i01_03_2.bmp"]);
        let a = load_tid2008(&dir).unwrap();
        let b = load_tid2008(&dir).unwrap();
        let key = |ds: &DatasetIndex| {
            ds.samples.iter().map(|s| (s.reference_id, s.class, s.level)).collect::<Vec<_>>()
        };
        assert_eq!(key(&a), key(&b));
        let mut sorted = key(&a);
        sorted.sort();
        assert_eq!(sorted, key(&a), "index must come out sorted");
        std::fs::remove_dir_all(&dir).ok();
    }

    #[test]
    fn csv_export_has_header_and_rows() {
        let ds = synthetic_dataset(1, 64, 8);
        let csv = ds.to_csv();
        let mut lines = csv.lines();
        assert_eq!(lines.next(), Some("path,mos,type,level,reference_id"));
        assert_eq!(lines.count(), 16);
    }
}
