//! `fsg` command-line front end.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::error::{Error, Result};
use crate::graph::{build_graph, laplacian, LaplacianKind, SimilarityGraph};
use crate::localize::{
    build_pixel_maps, default_sigma, gaussian_smooth, map_to_image, select_alpha, threshold_map,
    BinaryMask,
};
use crate::metrics::{
    best_over_assignments, mean_similarity, min_similarity, LocalizationMetric, Report,
    RuntimeBreakdown,
};
use crate::modularity::{detect_modularity, fast_greedy};
use crate::patching::{sample_patches, ImageBuffer, PatchSet};
use crate::pgm::{load_pgm, save_pgm};
use crate::similarity::{compute_matrix, load_matrix, ResidualProvider, SimilarityMatrix};
use crate::spectral::{
    detect_spectral_gap, eigh, partition_kmeans, partition_sign, DetectionMethod, DetectionResult,
    Partition,
};
use crate::synth::{run_synth_benchmark, BenchConfig};

#[derive(Parser, Debug)]
#[command(
    name = "fsg",
    version,
    about = "Forensic similarity graphs: detect and localize image tampering"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Image-level forgery decision.
    Detect(DetectArgs),
    /// Pixel-level forgery mask.
    Localize(LocalizeArgs),
    /// Synthetic splice benchmark.
    Bench(BenchArgs),
    /// Similarity matrix import/export.
    #[command(subcommand)]
    Matrix(MatrixCommand),
    /// Graph export.
    #[command(subcommand)]
    Graph(GraphCommand),
}

#[derive(Args, Debug, Clone)]
struct PatchArgs {
    /// Patch side in pixels.
    #[arg(long, default_value_t = 128)]
    patch_size: usize,
    /// Fractional patch overlap in [0, 1) [default: 0.5 for detect, 0.75 for localize].
    #[arg(long)]
    overlap: Option<f64>,
    /// Sharpness of the built-in residual similarity (heuristic default).
    #[arg(long, default_value_t = 1.0)]
    gamma: f64,
}

#[derive(Args, Debug)]
struct DetectArgs {
    /// Input image (binary PGM).
    #[arg(long, conflicts_with = "matrix", required_unless_present = "matrix")]
    image: Option<PathBuf>,
    /// Precomputed similarity matrix (FSM text) instead of an image.
    #[arg(long)]
    matrix: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = DetectMethodArg::SpectralGap)]
    method: DetectMethodArg,
    /// Decision threshold [default: 100 spectral-gap, 0.025 modularity,
    /// 0.5 mean-sim/min-sim (heuristic)].
    #[arg(long)]
    tau: Option<f64>,
    /// Edge threshold t in [0, 1).
    #[arg(long, default_value_t = 0.0)]
    t: f64,
    #[command(flatten)]
    patches: PatchArgs,
    /// Write the JSON report here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
enum DetectMethodArg {
    SpectralGap,
    Modularity,
    MeanSim,
    MinSim,
}

impl From<DetectMethodArg> for DetectionMethod {
    fn from(m: DetectMethodArg) -> Self {
        match m {
            DetectMethodArg::SpectralGap => DetectionMethod::SpectralGap,
            DetectMethodArg::Modularity => DetectionMethod::Modularity,
            DetectMethodArg::MeanSim => DetectionMethod::MeanSim,
            DetectMethodArg::MinSim => DetectionMethod::MinSim,
        }
    }
}

fn default_tau(m: DetectionMethod) -> f64 {
    match m {
        DetectionMethod::SpectralGap => 100.0,
        DetectionMethod::Modularity => 0.025,
        DetectionMethod::MeanSim | DetectionMethod::MinSim => 0.5,
    }
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
enum LocalizeMethod {
    Spectral,
    NormedSpectral,
    ModularityLoc,
}

impl LocalizeMethod {
    fn name(self) -> &'static str {
        match self {
            LocalizeMethod::Spectral => "spectral",
            LocalizeMethod::NormedSpectral => "normed-spectral",
            LocalizeMethod::ModularityLoc => "modularity-loc",
        }
    }
}

#[derive(Args, Debug)]
struct LocalizeArgs {
    /// Input image (binary PGM).
    #[arg(long)]
    image: PathBuf,
    /// Precomputed similarity matrix for the image's patch grid.
    #[arg(long)]
    matrix: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = LocalizeMethod::Spectral)]
    method: LocalizeMethod,
    /// Edge threshold t [default: 0 spectral, 0.7 modularity-loc].
    #[arg(long)]
    t: Option<f64>,
    /// Number of communities.
    #[arg(long, default_value_t = 2)]
    k: usize,
    /// Community rendered as forged: `auto` (smaller of two), a label, or `all`.
    #[arg(long, default_value = "auto")]
    alpha: String,
    /// Gaussian smoothing window in pixels (even values grow by one).
    #[arg(long, default_value_t = 32)]
    window: usize,
    /// Gaussian sigma [default: window / 6 (heuristic)].
    #[arg(long)]
    sigma: Option<f64>,
    /// Mask threshold on the smoothed map (heuristic default).
    #[arg(long, default_value_t = 0.5)]
    mask_threshold: f64,
    /// Seed for k-means initialization when k > 2.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Ground-truth mask (PGM, nonzero = forged) to score against.
    #[arg(long)]
    truth: Option<PathBuf>,
    #[command(flatten)]
    patches: PatchArgs,
    /// Directory for masks, maps, partition and report.
    #[arg(long)]
    out_dir: PathBuf,
}

#[derive(Args, Debug)]
struct BenchArgs {
    /// Benchmark configuration (TOML); defaults apply to missing keys.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Override the base seed.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out_dir: PathBuf,
}

#[derive(Subcommand, Debug)]
enum MatrixCommand {
    /// Compute an image's similarity matrix and write it as FSM text.
    Export {
        #[arg(long)]
        image: PathBuf,
        #[command(flatten)]
        patches: PatchArgs,
        #[arg(long)]
        out: PathBuf,
        /// Also write the patch grid as TSV.
        #[arg(long)]
        patches_out: Option<PathBuf>,
    },
    /// Validate an FSM file and summarize it.
    Import {
        #[arg(long)]
        matrix: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Subcommand, Debug)]
enum GraphCommand {
    /// Write the thresholded graph as an edge list, optionally with its spectrum.
    Export {
        #[arg(long, conflicts_with = "matrix", required_unless_present = "matrix")]
        image: Option<PathBuf>,
        #[arg(long)]
        matrix: Option<PathBuf>,
        #[arg(long, default_value_t = 0.0)]
        t: f64,
        #[command(flatten)]
        patches: PatchArgs,
        /// Edge list TSV `i<TAB>j<TAB>w`.
        #[arg(long)]
        out: PathBuf,
        /// Laplacian eigenvalues, one per line.
        #[arg(long)]
        spectrum: Option<PathBuf>,
        /// Use the normalized Laplacian for the spectrum.
        #[arg(long)]
        normalized: bool,
    },
}

/// Process exit code for an error.
pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::InvalidArgument(_) => 2,
        Error::Io { .. } => 3,
        Error::Format(_) => 4,
        Error::Numerical(_) => 5,
        _ => 1,
    }
}

pub fn main() -> i32 {
    let cli = Cli::parse();
    if let Err(e) = configure_threads() {
        eprintln!("fsg: {e}");
        return exit_code(&e);
    }
    match run(cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("fsg: {e}");
            exit_code(&e)
        }
    }
}

fn configure_threads() -> Result<()> {
    let Ok(raw) = std::env::var("FSG_THREADS") else {
        return Ok(());
    };
    let threads: usize = raw.trim().parse().ok().filter(|&n| n > 0).ok_or_else(|| {
        Error::invalid(format!(
            "FSG_THREADS must be a positive integer, got {raw:?}"
        ))
    })?;
    // a second call in the same process is harmless
    let _ = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global();
    Ok(())
}

fn run(cmd: Command) -> Result<()> {
    match cmd {
        Command::Detect(a) => cmd_detect(a),
        Command::Localize(a) => cmd_localize(a),
        Command::Bench(a) => cmd_bench(a),
        Command::Matrix(m) => cmd_matrix(m),
        Command::Graph(g) => cmd_graph(g),
    }
}

fn ms(since: Instant) -> f64 {
    since.elapsed().as_secs_f64() * 1e3
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn emit(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(p) => write_text(p, text),
        None => {
            println!("{text}");
            Ok(())
        }
    }
}

fn image_patches(img: &ImageBuffer, p: &PatchArgs, default_overlap: f64) -> Result<PatchSet> {
    sample_patches(img, p.patch_size, p.overlap.unwrap_or(default_overlap))
}

fn image_matrix(img: &ImageBuffer, patches: &PatchSet, p: &PatchArgs) -> Result<SimilarityMatrix> {
    compute_matrix(patches, img, &ResidualProvider::new(p.gamma)?)
}

/// Similarity matrix from `--matrix` or computed from `--image`.
fn load_or_compute(
    image: Option<&Path>,
    matrix: Option<&Path>,
    p: &PatchArgs,
    default_overlap: f64,
) -> Result<SimilarityMatrix> {
    match (image, matrix) {
        (_, Some(m)) => load_matrix(m),
        (Some(i), None) => {
            let img = load_pgm(i)?;
            let patches = image_patches(&img, p, default_overlap)?;
            image_matrix(&img, &patches, p)
        }
        (None, None) => Err(Error::invalid("either --image or --matrix is required")),
    }
}

fn cmd_detect(a: DetectArgs) -> Result<()> {
    let method: DetectionMethod = a.method.into();
    let tau = a.tau.unwrap_or_else(|| default_tau(method));
    let start = Instant::now();
    let s = load_or_compute(a.image.as_deref(), a.matrix.as_deref(), &a.patches, 0.5)?;
    let features = ms(start);

    let mut graph_ms = 0.0;
    let community_start;
    let result = match method {
        DetectionMethod::MeanSim | DetectionMethod::MinSim => {
            community_start = Instant::now();
            let stat = if method == DetectionMethod::MeanSim {
                mean_similarity(&s)?
            } else {
                min_similarity(&s)?
            };
            DetectionResult::new(method, stat, tau)
        }
        DetectionMethod::SpectralGap | DetectionMethod::Modularity => {
            let g_start = Instant::now();
            let g = build_graph(&s, a.t)?;
            if method == DetectionMethod::SpectralGap {
                let l = laplacian(&g, LaplacianKind::Unnormalized);
                graph_ms = ms(g_start);
                community_start = Instant::now();
                detect_spectral_gap(&eigh(&l)?, tau)?
            } else {
                graph_ms = ms(g_start);
                community_start = Instant::now();
                detect_modularity(&fast_greedy(&g)?, tau)
            }
        }
    };
    let community = ms(community_start);
    let report = Report {
        method: Some(method.name().to_string()),
        statistic: Some(result.statistic),
        decision: Some(result.decision),
        runtime_ms: Some(RuntimeBreakdown {
            features,
            graph: graph_ms,
            community,
            total: ms(start),
        }),
        ..Default::default()
    }
    .with("tau", tau)
    .with("edge_threshold", a.t)
    .with("n_patches", s.n());
    emit(a.out.as_deref(), &report.to_json())
}

enum AlphaChoice {
    Auto,
    All,
    Label(usize),
}

fn parse_alpha(raw: &str) -> Result<AlphaChoice> {
    match raw {
        "auto" => Ok(AlphaChoice::Auto),
        "all" => Ok(AlphaChoice::All),
        _ => raw.parse().map(AlphaChoice::Label).map_err(|_| {
            Error::invalid(format!(
                "--alpha must be auto, all, or a label, got {raw:?}"
            ))
        }),
    }
}

/// Partition plus, for the modularity method, the merge trace.
fn localize_partition(
    method: LocalizeMethod,
    g: &SimilarityGraph,
    k: usize,
    seed: u64,
) -> Result<(Partition, Option<String>)> {
    match method {
        LocalizeMethod::ModularityLoc => {
            let res = fast_greedy(g)?;
            Ok((res.cut(k)?, Some(res.trace_tsv())))
        }
        LocalizeMethod::Spectral | LocalizeMethod::NormedSpectral => {
            let kind = if method == LocalizeMethod::Spectral {
                LaplacianKind::Unnormalized
            } else {
                LaplacianKind::Normalized
            };
            let spec = eigh(&laplacian(g, kind))?;
            let part = if k == 2 {
                partition_sign(&spec)?
            } else {
                partition_kmeans(&spec, k, seed)?
            };
            Ok((part, None))
        }
    }
}

fn cmd_localize(a: LocalizeArgs) -> Result<()> {
    if a.k < 2 {
        return Err(Error::invalid(format!(
            "--k must be at least 2, got {}",
            a.k
        )));
    }
    if !(0.0..=1.0).contains(&a.mask_threshold) {
        return Err(Error::invalid("--mask-threshold must be in [0, 1]"));
    }
    let alpha_choice = parse_alpha(&a.alpha)?;
    let t = a.t.unwrap_or(match a.method {
        LocalizeMethod::ModularityLoc => 0.7,
        _ => 0.0,
    });
    let sigma = a.sigma.unwrap_or_else(|| default_sigma(a.window));
    let truth = a
        .truth
        .as_deref()
        .map(load_pgm)
        .transpose()?
        .map(|t| BinaryMask::from_image(&t));

    let start = Instant::now();
    let img = load_pgm(&a.image)?;
    let patches = image_patches(&img, &a.patches, 0.75)?;
    if let Some(t) = &truth {
        if (t.width(), t.height()) != (img.width(), img.height()) {
            return Err(Error::invalid(
                "ground-truth mask size differs from the image",
            ));
        }
    }
    let s = match &a.matrix {
        Some(m) => {
            let s = load_matrix(m)?;
            if s.n() != patches.len() {
                return Err(Error::format(format!(
                    "matrix has {} patches, image grid has {}",
                    s.n(),
                    patches.len()
                )));
            }
            s
        }
        None => image_matrix(&img, &patches, &a.patches)?,
    };
    let features = ms(start);
    let g_start = Instant::now();
    let g = build_graph(&s, t)?;
    if a.k > g.n() {
        return Err(Error::invalid(format!(
            "--k {} exceeds {} patches",
            a.k,
            g.n()
        )));
    }
    let graph_ms = ms(g_start);
    let c_start = Instant::now();
    let (part, trace) = localize_partition(a.method, &g, a.k, a.seed)?;
    let community = ms(c_start);

    let alphas: Vec<usize> = match alpha_choice {
        AlphaChoice::Auto => vec![select_alpha(&part).map_err(|_| {
            Error::invalid(format!(
                "--alpha auto needs k = 2; pass a label or `all` for k = {}",
                a.k
            ))
        })?],
        AlphaChoice::All => (1..=part.k()).collect(),
        AlphaChoice::Label(l) => vec![l],
    };
    fs::create_dir_all(&a.out_dir).map_err(|e| Error::io(&a.out_dir, e))?;
    write_text(&a.out_dir.join("partition.tsv"), &part.to_tsv())?;
    if let Some(trace) = trace {
        write_text(&a.out_dir.join("merge_trace.tsv"), &trace)?;
    }

    let suffix = |alpha: usize| {
        if alphas.len() == 1 {
            String::new()
        } else {
            format!("_alpha{alpha}")
        }
    };
    let mut masks = Vec::new();
    for &alpha in &alphas {
        let maps = build_pixel_maps(&patches, &part, alpha)?;
        let smoothed =
            gaussian_smooth(maps.p_norm(), maps.width(), maps.height(), a.window, sigma)?;
        let mask = threshold_map(&smoothed, maps.width(), maps.height(), a.mask_threshold);
        let tag = suffix(alpha);
        save_pgm(
            a.out_dir.join(format!("pnorm{tag}.pgm")),
            &maps.p_norm_image(),
        )?;
        save_pgm(
            a.out_dir.join(format!("smoothed{tag}.pgm")),
            &map_to_image(&smoothed, maps.width(), maps.height())?,
        )?;
        save_pgm(a.out_dir.join(format!("mask{tag}.pgm")), &mask.to_image())?;
        let mut entry = serde_json::json!({
            "alpha": alpha,
            "mask_pixels": mask.count_ones(),
        });
        if let Some(t) = &truth {
            entry["mcc"] = best_over_assignments(&mask, t, LocalizationMetric::Mcc)?.into();
            entry["f1"] = best_over_assignments(&mask, t, LocalizationMetric::F1)?.into();
            entry["iou"] = mask.iou(t).into();
        }
        masks.push(entry);
    }

    let report = Report {
        method: Some(a.method.name().to_string()),
        statistic: Some(part.score()),
        runtime_ms: Some(RuntimeBreakdown {
            features,
            graph: graph_ms,
            community,
            total: ms(start),
        }),
        ..Default::default()
    }
    .with("n_patches", patches.len())
    .with("edge_threshold", t)
    .with("k", part.k())
    .with("community_sizes", part.sizes())
    .with("window", a.window)
    .with("sigma", sigma)
    .with("mask_threshold", a.mask_threshold)
    .with("masks", masks);
    write_text(&a.out_dir.join("report.json"), &report.to_json())
}

fn cmd_bench(a: BenchArgs) -> Result<()> {
    let mut cfg = match &a.config {
        Some(p) => BenchConfig::from_toml(&fs::read_to_string(p).map_err(|e| Error::io(p, e))?)?,
        None => BenchConfig::default(),
    };
    if let Some(seed) = a.seed {
        cfg.seed = seed;
    }
    let start = Instant::now();
    let report = run_synth_benchmark(&cfg)?;
    let elapsed = ms(start);
    fs::create_dir_all(&a.out_dir).map_err(|e| Error::io(&a.out_dir, e))?;
    let mut relative = String::from("method,block_size,relative_area,auc\n");
    for size in &report.sizes {
        for m in &size.methods {
            let name = m.method.name();
            write_text(
                &a.out_dir
                    .join(format!("roc_{name}_{}.csv", size.block_size)),
                &m.roc.to_csv(),
            )?;
            relative.push_str(&format!(
                "{name},{},{},{}\n",
                size.block_size, size.relative_area, m.auc
            ));
        }
    }
    write_text(&a.out_dir.join("relative_size.csv"), &relative)?;
    write_text(&a.out_dir.join("report.json"), &report.to_json())?;
    let summary = Report::default()
        .with("report", a.out_dir.join("report.json"))
        .with("runtime_ms", serde_json::json!({ "total": elapsed }));
    emit(None, &summary.to_json())
}

fn cmd_matrix(cmd: MatrixCommand) -> Result<()> {
    match cmd {
        MatrixCommand::Export {
            image,
            patches,
            out,
            patches_out,
        } => {
            let img = load_pgm(&image)?;
            let set = image_patches(&img, &patches, 0.5)?;
            let s = image_matrix(&img, &set, &patches)?;
            s.save(&out)?;
            if let Some(p) = patches_out {
                write_text(&p, &set.to_tsv())?;
            }
            Ok(())
        }
        MatrixCommand::Import { matrix, out } => {
            let s = load_matrix(&matrix)?;
            let report = Report::default()
                .with("n", s.n())
                .with("mean_similarity", mean_similarity(&s)?)
                .with("min_similarity", min_similarity(&s)?);
            emit(out.as_deref(), &report.to_json())
        }
    }
}

fn cmd_graph(cmd: GraphCommand) -> Result<()> {
    let GraphCommand::Export {
        image,
        matrix,
        t,
        patches,
        out,
        spectrum,
        normalized,
    } = cmd;
    let s = load_or_compute(image.as_deref(), matrix.as_deref(), &patches, 0.5)?;
    let g = build_graph(&s, t)?;
    write_text(&out, &g.edge_list_tsv())?;
    if let Some(p) = spectrum {
        let kind = if normalized {
            LaplacianKind::Normalized
        } else {
            LaplacianKind::Unnormalized
        };
        write_text(&p, &eigh(&laplacian(&g, kind))?.to_text())?;
    }
    Ok(())
}
