//! Synthetic "camera models" and block-splice forgeries with exact ground
//! truth, plus a benchmark that runs every detection statistic over them.
//!
//! A source model leaves its trace in the high-frequency residual: sensor
//! noise level and an optional 3×3 in-camera blur. Image content (a gradient
//! plus cell-wise modulated texture) varies per image and per region so that
//! similarity also fluctuates within a single-source image.

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{build_graph, laplacian, LaplacianKind};
use crate::localize::BinaryMask;
use crate::metrics::{
    mean_average_precision, mean_similarity, min_similarity, roc_auc, RocCurve, ScoredSample,
};
use crate::modularity::fast_greedy;
use crate::patching::{sample_patches, ImageBuffer};
use crate::similarity::{compute_matrix, ResidualProvider, SimilarityMatrix};
use crate::spectral::{eigh, DetectionMethod};

/// Scene content shared by all models.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TextureParams {
    /// Mean gray level.
    pub level: f64,
    /// Gradient slopes are drawn from `±max_slope` gray levels per pixel.
    pub max_slope: f64,
    /// Base standard deviation of the white-noise texture.
    pub amplitude: f64,
    /// Upper bound of the per-image texture modulation depth.
    pub busyness: f64,
    /// Side of the square cells sharing one texture energy.
    pub cell: usize,
}

impl Default for TextureParams {
    fn default() -> Self {
        Self {
            level: 128.0,
            max_slope: 0.2,
            amplitude: 4.0,
            busyness: 1.0,
            cell: 32,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SourceModel {
    pub id: String,
    #[serde(default)]
    pub base_texture: TextureParams,
    pub noise_sigma: f64,
    /// Row-major 3×3 weights applied after noise.
    #[serde(default)]
    pub blur_kernel: Option<[f64; 9]>,
    #[serde(default = "one")]
    pub quantization_step: u32,
}

fn one() -> u32 {
    1
}

impl SourceModel {
    /// Sharp model: sensor noise only.
    pub fn benchmark_a() -> Self {
        Self {
            id: "a".into(),
            base_texture: TextureParams::default(),
            noise_sigma: 2.0,
            blur_kernel: None,
            quantization_step: 1,
        }
    }

    /// Soft model: same noise, followed by a mild binomial blur.
    pub fn benchmark_b() -> Self {
        let binomial = [1.0, 2.0, 1.0, 2.0, 4.0, 2.0, 1.0, 2.0, 1.0];
        let mut kernel = binomial.map(|w| 0.2 * w / 16.0);
        kernel[4] += 0.8;
        Self {
            id: "b".into(),
            blur_kernel: Some(kernel),
            ..Self::benchmark_a()
        }
    }

    pub fn preset(name: &str) -> Result<Self> {
        match name {
            "a" => Ok(Self::benchmark_a()),
            "b" => Ok(Self::benchmark_b()),
            _ => Err(Error::invalid(format!("unknown source model {name:?}"))),
        }
    }

    fn validate(&self) -> Result<()> {
        let t = &self.base_texture;
        if !(self.noise_sigma >= 0.0)
            || !(t.amplitude >= 0.0)
            || !(0.0..=1.0).contains(&t.busyness)
            || t.cell == 0
            || self.quantization_step == 0
        {
            return Err(Error::invalid(format!(
                "invalid source model {:?}",
                self.id
            )));
        }
        Ok(())
    }
}

/// Stable 64-bit hash of a model id, used as the RNG stream.
fn id_stream(id: &str) -> u64 {
    id.bytes().fold(0xcbf2_9ce4_8422_2325, |h, b| {
        (h ^ b as u64).wrapping_mul(0x0100_0000_01b3)
    })
}

/// Deterministic procedural image for `(model, seed)`.
///
/// The seed alone fixes the scene (gradient, texture layout and texture
/// noise); the model id selects an independent sensor-noise stream. Two
/// models rendered with one seed therefore show the same scene through
/// different camera traces.
pub fn render(model: &SourceModel, width: usize, height: usize, seed: u64) -> ImageBuffer {
    let mut scene = ChaCha8Rng::seed_from_u64(seed);
    let mut sensor = ChaCha8Rng::seed_from_u64(seed);
    sensor.set_stream(id_stream(&model.id));
    let tex = &model.base_texture;
    let uniform = |rng: &mut ChaCha8Rng, half_width: f64| {
        if half_width > 0.0 {
            rng.gen_range(-half_width..half_width)
        } else {
            0.0
        }
    };
    let (gx, gy) = (
        uniform(&mut scene, tex.max_slope),
        uniform(&mut scene, tex.max_slope),
    );
    let depth = tex.busyness * (0.5 + 0.5 * uniform(&mut scene, 1.0));
    let cells_x = width.div_ceil(tex.cell);
    let cells_y = height.div_ceil(tex.cell);
    let cell_std: Vec<f64> = (0..cells_x * cells_y)
        .map(|_| tex.amplitude * (1.0 + depth * uniform(&mut scene, 1.0)).sqrt())
        .collect();

    let (cx, cy) = (width as f64 / 2.0, height as f64 / 2.0);
    let mut img = vec![0.0; width * height];
    for y in 0..height {
        for x in 0..width {
            let base = tex.level + gx * (x as f64 - cx) + gy * (y as f64 - cy);
            let std = cell_std[(y / tex.cell) * cells_x + x / tex.cell];
            let texture: f64 = scene.sample(StandardNormal);
            let noise: f64 = sensor.sample(StandardNormal);
            img[y * width + x] = base + std * texture + model.noise_sigma * noise;
        }
    }
    if let Some(k) = &model.blur_kernel {
        img = convolve3(&img, width, height, k);
    }
    let q = model.quantization_step as f64;
    let data = img
        .iter()
        .map(|&v| ((v / q).round() * q).clamp(0.0, 255.0) as u8)
        .collect();
    ImageBuffer::new(width, height, data).expect("dimensions match")
}

/// 3×3 convolution with mirrored borders (edge pixel repeated).
fn convolve3(src: &[f64], width: usize, height: usize, k: &[f64; 9]) -> Vec<f64> {
    let clamp = |v: isize, len: usize| v.clamp(0, len as isize - 1) as usize;
    let mut out = vec![0.0; src.len()];
    for y in 0..height {
        for x in 0..width {
            let mut acc = 0.0;
            for dy in 0..3 {
                let yy = clamp(y as isize + dy as isize - 1, height);
                for dx in 0..3 {
                    let xx = clamp(x as isize + dx as isize - 1, width);
                    acc += k[dy * 3 + dx] * src[yy * width + xx];
                }
            }
            out[y * width + x] = acc;
        }
    }
    out
}

#[derive(Clone, Debug, PartialEq)]
pub struct ForgeryCase {
    pub forged_image: ImageBuffer,
    pub gt_mask: BinaryMask,
    pub block_size: usize,
    /// Top-left corner of the pasted block in the host.
    pub paste_location: (usize, usize),
}

/// Pastes a `block`×`block` square from a random donor location to a random
/// host location.
pub fn make_forgery(
    host: &ImageBuffer,
    donor: &ImageBuffer,
    block: usize,
    seed: u64,
) -> Result<ForgeryCase> {
    if block == 0 {
        return Err(Error::invalid("forgery block size must be positive"));
    }
    let fits = |img: &ImageBuffer| block <= img.width() && block <= img.height();
    if !fits(host) || !fits(donor) {
        return Err(Error::invalid(format!(
            "block {block} does not fit host {}x{} / donor {}x{}",
            host.width(),
            host.height(),
            donor.width(),
            donor.height()
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (sx, sy) = (
        rng.gen_range(0..=donor.width() - block),
        rng.gen_range(0..=donor.height() - block),
    );
    let (px, py) = (
        rng.gen_range(0..=host.width() - block),
        rng.gen_range(0..=host.height() - block),
    );
    let mut forged = host.clone();
    let w = host.width();
    for dy in 0..block {
        for dx in 0..block {
            forged.data_mut()[(py + dy) * w + px + dx] = donor.get(sx + dx, sy + dy);
        }
    }
    let gt_mask = BinaryMask::from_fn(w, host.height(), |x, y| {
        (px..px + block).contains(&x) && (py..py + block).contains(&y)
    });
    Ok(ForgeryCase {
        forged_image: forged,
        gt_mask,
        block_size: block,
        paste_location: (px, py),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BenchConfig {
    pub image_size: usize,
    pub patch_size: usize,
    pub overlap: f64,
    pub unaltered: usize,
    pub forged: usize,
    pub block_sizes: Vec<usize>,
    pub gamma: f64,
    /// Edge threshold used for the graph-based statistics.
    pub edge_threshold: f64,
    pub pfa: f64,
    pub seed: u64,
    /// Image `i` is rendered by `models[i % len]`; a forgery's donor uses the
    /// next model in the list.
    pub models: Vec<SourceModel>,
    pub methods: Vec<String>,
}

impl Default for BenchConfig {
    fn default() -> Self {
        Self {
            image_size: 512,
            patch_size: 128,
            overlap: 0.5,
            unaltered: 100,
            forged: 100,
            block_sizes: vec![64, 128, 256],
            gamma: 1.0,
            edge_threshold: 0.0,
            pfa: 0.01,
            seed: 1,
            models: vec![SourceModel::benchmark_a(), SourceModel::benchmark_b()],
            methods: DetectionMethod::ALL
                .iter()
                .map(|m| m.name().to_string())
                .collect(),
        }
    }
}

impl BenchConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::format(format!("benchmark config: {e}")))
    }

    fn methods(&self) -> Result<Vec<DetectionMethod>> {
        self.methods
            .iter()
            .map(|m| DetectionMethod::parse(m))
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MethodResult {
    pub method: DetectionMethod,
    pub auc: f64,
    pub pd_at_pfa: f64,
    pub map: f64,
    #[serde(skip)]
    pub roc: RocCurve,
    #[serde(skip)]
    pub forged_statistics: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SizeResult {
    pub block_size: usize,
    /// Forgery area over analysis patch area.
    pub relative_area: f64,
    pub methods: Vec<MethodResult>,
}

impl SizeResult {
    pub fn method(&self, m: DetectionMethod) -> Option<&MethodResult> {
        self.methods.iter().find(|r| r.method == m)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BenchReport {
    pub image_size: usize,
    pub patch_size: usize,
    pub overlap: f64,
    pub unaltered: usize,
    pub forged: usize,
    pub pfa: f64,
    pub models: Vec<String>,
    pub sizes: Vec<SizeResult>,
    #[serde(skip)]
    pub unaltered_statistics: Vec<Vec<f64>>,
}

impl BenchReport {
    pub fn size(&self, block: usize) -> Option<&SizeResult> {
        self.sizes.iter().find(|s| s.block_size == block)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("serializable report")
    }
}

/// All requested detection statistics of one similarity matrix.
pub fn detection_statistics(
    s: &SimilarityMatrix,
    edge_threshold: f64,
    methods: &[DetectionMethod],
) -> Result<Vec<f64>> {
    let graph = || build_graph(s, edge_threshold);
    methods
        .iter()
        .map(|m| match m {
            DetectionMethod::SpectralGap => {
                Ok(eigh(&laplacian(&graph()?, LaplacianKind::Unnormalized))?.lambda2())
            }
            DetectionMethod::Modularity => Ok(fast_greedy(&graph()?)?.q_opt),
            DetectionMethod::MeanSim => mean_similarity(s),
            DetectionMethod::MinSim => min_similarity(s),
        })
        .collect()
}

/// splitmix64 finalizer: decorrelates per-image seeds derived from one base.
fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

fn derive_seed(base: u64, role: u64, index: usize) -> u64 {
    mix(mix(base ^ mix(role)) ^ index as u64)
}

const ROLE_UNALTERED: u64 = 1;
const ROLE_HOST: u64 = 2;
const ROLE_SPLICE: u64 = 3;

pub fn run_synth_benchmark(cfg: &BenchConfig) -> Result<BenchReport> {
    if cfg.models.len() < 2 {
        return Err(Error::invalid("benchmark needs at least 2 source models"));
    }
    if cfg.forged == 0 || cfg.unaltered == 0 {
        return Err(Error::invalid(
            "benchmark needs both forged and unaltered images (AUC is undefined otherwise)",
        ));
    }
    for m in &cfg.models {
        m.validate()?;
    }
    let methods = cfg.methods()?;
    if methods.is_empty() {
        return Err(Error::invalid("no detection methods configured"));
    }
    let provider = ResidualProvider::new(cfg.gamma)?;
    let size = cfg.image_size;
    let model = |i: usize| &cfg.models[i % cfg.models.len()];
    let analyze = |img: &ImageBuffer| -> Result<Vec<f64>> {
        let patches = sample_patches(img, cfg.patch_size, cfg.overlap)?;
        let s = compute_matrix(&patches, img, &provider)?;
        detection_statistics(&s, cfg.edge_threshold, &methods)
    };

    let unaltered = (0..cfg.unaltered)
        .into_par_iter()
        .map(|i| {
            analyze(&render(
                model(i),
                size,
                size,
                derive_seed(cfg.seed, ROLE_UNALTERED, i),
            ))
        })
        .collect::<Result<Vec<_>>>()?;

    let mut sizes = Vec::with_capacity(cfg.block_sizes.len());
    for &block in &cfg.block_sizes {
        let forged = (0..cfg.forged)
            .into_par_iter()
            .map(|i| {
                let host_seed = derive_seed(cfg.seed, ROLE_HOST, i);
                let host = render(model(i), size, size, host_seed);
                // the donor shows the host's scene through the next camera model
                let donor = render(model(i + 1), size, size, host_seed);
                let case =
                    make_forgery(&host, &donor, block, derive_seed(cfg.seed, ROLE_SPLICE, i))?;
                analyze(&case.forged_image)
            })
            .collect::<Result<Vec<_>>>()?;
        let mut results = Vec::with_capacity(methods.len());
        for (mi, &method) in methods.iter().enumerate() {
            let larger = method.larger_is_forged();
            let samples: Vec<ScoredSample> = forged
                .iter()
                .map(|st| ScoredSample::new(st[mi], true, larger))
                .chain(
                    unaltered
                        .iter()
                        .map(|st| ScoredSample::new(st[mi], false, larger)),
                )
                .collect();
            let roc = roc_auc(&samples)?;
            results.push(MethodResult {
                method,
                auc: roc.auc,
                pd_at_pfa: roc.pd_at(cfg.pfa),
                map: mean_average_precision(&samples)?,
                roc,
                forged_statistics: forged.iter().map(|st| st[mi]).collect(),
            });
        }
        sizes.push(SizeResult {
            block_size: block,
            relative_area: (block * block) as f64 / (cfg.patch_size * cfg.patch_size) as f64,
            methods: results,
        });
    }
    Ok(BenchReport {
        image_size: size,
        patch_size: cfg.patch_size,
        overlap: cfg.overlap,
        unaltered: cfg.unaltered,
        forged: cfg.forged,
        pfa: cfg.pfa,
        models: cfg.models.iter().map(|m| m.id.clone()).collect(),
        sizes,
        unaltered_statistics: unaltered,
    })
}
