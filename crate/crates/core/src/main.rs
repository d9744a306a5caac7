use std::collections::BTreeSet;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Deserialize;

use foggen::camera::{depth_to_distance, CameraRig};
use foggen::dataset::{self, build_dataset, build_ssl_manifest, discover_inputs, sky_criterion, DatasetConfig, Sidecar};
use foggen::depth::denoise_and_complete;
use foggen::eval::{BinnedConfusion, ConfusionMatrix, EvalReport, DEFAULT_BIN_EDGES};
use foggen::fog::{estimate_atmospheric_light, mor_from_beta, simulate_fog, FOG_BETA_MIN};
use foggen::io;
use foggen::labels::{class_name, instances_to_bboxes};
use foggen::params::PipelineParams;
use foggen::raster::{Image, ScalarField};
use foggen::seed::DEFAULT_SEED;

/// Bad arguments exit with 2, processing failures with 1.
enum CliError {
    Usage(String),
    Failed(String),
}

impl From<foggen::Error> for CliError {
    fn from(e: foggen::Error) -> Self {
        CliError::Failed(e.to_string())
    }
}

type CliResult<T = ()> = Result<T, CliError>;

fn fail<T>(msg: impl Into<String>) -> CliResult<T> {
    Err(CliError::Failed(msg.into()))
}

fn usage<T>(msg: impl Into<String>) -> CliResult<T> {
    Err(CliError::Usage(msg.into()))
}

const DEFAULT_BETAS: [f64; 5] = [0.005, 0.01, 0.02, 0.03, 0.06];

#[derive(Parser)]
#[command(name = "foggen", version, about = "Synthesize fog on clear-weather stereo images")]
struct Cli {
    /// Worker threads (default: all cores).
    #[arg(long, global = true, env = "FOGGEN_THREADS")]
    threads: Option<usize>,

    /// TOML file with `seed`, `threads` and a `[pipeline]` table; flags win.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Random seed [default: 42].
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Only print warnings and errors.
    #[arg(long, short, global = true)]
    quiet: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Render one foggy image from a stereo pair.
    Simulate(SimulateArgs),
    /// Render a directory tree of stereo pairs at several fog densities.
    Dataset(DatasetArgs),
    /// Denoise and complete the depth of one stereo pair.
    Depth(DepthArgs),
    /// Score predicted label maps against ground truth.
    Eval(EvalArgs),
    /// Extract bounding boxes from an instance map.
    Bboxes(BboxArgs),
    /// Write a mixed human/transferred-label training stream.
    Manifest(ManifestArgs),
    /// Check whether the atmospheric light of each image falls on sky.
    FilterSky(FilterSkyArgs),
}

/// Pipeline constants. Unset flags fall back to the config file, then to
/// the listed defaults.
#[derive(Args, Clone, Default)]
struct ParamArgs {
    /// Photo-consistency bound on the RGB distance of stereo matches [default: 12/255]
    #[arg(long)]
    epsilon: Option<f64>,
    /// Target number of superpixels K̂ [default: 2048]
    #[arg(long)]
    k_hat: Option<usize>,
    /// SLIC compactness m [default: 10]
    #[arg(long)]
    m: Option<f64>,
    /// Minimum valid pixels P of a reliable superpixel [default: 20]
    #[arg(long)]
    min_valid: Option<usize>,
    /// Minimum valid fraction λ of a reliable superpixel [default: 0.6]
    #[arg(long)]
    valid_fraction: Option<f64>,
    /// RANSAC iteration cap [default: 2000]
    #[arg(long)]
    ransac_max_iters: Option<usize>,
    /// RANSAC confidence p [default: 0.99]
    #[arg(long)]
    ransac_p: Option<f64>,
    /// RANSAC inlier threshold θ as a fraction of median depth [default: 0.01]
    #[arg(long)]
    theta_factor: Option<f64>,
    /// Plane deviation θ̂ in meters beyond which depth is replaced [default: 50]
    #[arg(long)]
    theta_hat: Option<f64>,
    /// Minimum completed depth in meters [default: 0.1]
    #[arg(long)]
    depth_floor: Option<f64>,
    /// Guided filter radius r [default: 20]
    #[arg(long)]
    gf_radius: Option<usize>,
    /// Guided filter regularization μ [default: 1e-3]
    #[arg(long)]
    gf_mu: Option<f64>,
}

impl ParamArgs {
    fn apply(&self, p: &mut PipelineParams) {
        macro_rules! set {
            ($($f:ident),*) => { $(if let Some(v) = self.$f { p.$f = v; })* };
        }
        set!(
            epsilon,
            k_hat,
            m,
            min_valid,
            valid_fraction,
            ransac_max_iters,
            ransac_p,
            theta_factor,
            theta_hat,
            depth_floor,
            gf_radius,
            gf_mu
        );
    }
}

#[derive(Args)]
struct StereoInputs {
    /// Clear left image (PNG).
    #[arg(long)]
    left: PathBuf,
    /// Right image (PNG).
    #[arg(long)]
    right: PathBuf,
    /// 16-bit disparity PNG; 0 = missing, else (p - 1) / 256 pixels.
    #[arg(long)]
    disparity: PathBuf,
    /// Camera JSON.
    #[arg(long)]
    camera: PathBuf,
}

#[derive(Args)]
struct SimulateArgs {
    #[command(flatten)]
    inputs: StereoInputs,
    /// Attenuation coefficient β in 1/m.
    #[arg(long)]
    beta: f64,
    /// Foggy output PNG; the sidecar JSON goes next to it.
    #[arg(long)]
    out: PathBuf,
    /// Also write the transmission map (16-bit, t * 65535).
    #[arg(long)]
    save_transmission: Option<PathBuf>,
    /// Also write the completed depth (16-bit, meters * 256).
    #[arg(long)]
    save_depth: Option<PathBuf>,
    /// Also write the scene distance (16-bit, meters * 256).
    #[arg(long)]
    save_distance: Option<PathBuf>,
    #[command(flatten)]
    params: ParamArgs,
}

#[derive(Args)]
struct DatasetArgs {
    /// Input root holding leftImg, rightImg, disparity, camera and gtFine.
    #[arg(long)]
    input: PathBuf,
    /// Output root.
    #[arg(long)]
    output: PathBuf,
    /// Attenuation coefficients [default: 0.005,0.01,0.02,0.03,0.06]
    #[arg(long, value_delimiter = ',')]
    beta: Vec<f64>,
    /// File listing the keys of images with an overcast sky.
    #[arg(long)]
    overcast_allowlist: Option<PathBuf>,
    #[command(flatten)]
    params: ParamArgs,
}

#[derive(Args)]
struct DepthArgs {
    #[command(flatten)]
    inputs: StereoInputs,
    /// Completed depth output (16-bit, meters * 256).
    #[arg(long)]
    out: PathBuf,
    /// Also write the scene distance (16-bit, meters * 256).
    #[arg(long)]
    save_distance: Option<PathBuf>,
    /// Also write the superpixel labels (16-bit).
    #[arg(long)]
    save_superpixels: Option<PathBuf>,
    #[command(flatten)]
    params: ParamArgs,
}

#[derive(Args)]
struct EvalArgs {
    /// Predicted label PNG, or a directory of them.
    #[arg(long)]
    pred: PathBuf,
    /// Ground-truth label PNG, or a directory mirroring --pred.
    #[arg(long)]
    gt: PathBuf,
    /// Scene distance PNGs (meters * 256) for distance-binned scores.
    #[arg(long)]
    distance: Option<PathBuf>,
    /// Distance bin edges in meters; `inf` closes the last bin [default: 0,20,50,80,120,160,230,400,inf]
    #[arg(long, value_delimiter = ',')]
    bins: Vec<f64>,
    /// Write the JSON report here instead of standard output.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct BboxArgs {
    /// 16-bit instance PNG (class * 1000 + k).
    #[arg(long)]
    instances: PathBuf,
    /// Write JSON here instead of standard output.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ManifestArgs {
    /// Human-labeled pairs: one `image label` per line.
    #[arg(long)]
    labeled: PathBuf,
    /// Transferred-label pairs, same format.
    #[arg(long)]
    pseudo: PathBuf,
    /// Transferred entries per labeled entry
    #[arg(long, default_value_t = 5.0)]
    w: f64,
    /// Output NDJSON; standard output if absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct FilterSkyArgs {
    /// Input root in the dataset layout.
    #[arg(long)]
    input: PathBuf,
    /// File listing the keys of images with an overcast sky.
    #[arg(long)]
    overcast_allowlist: Option<PathBuf>,
}

#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct ConfigFile {
    seed: Option<u64>,
    threads: Option<usize>,
    pipeline: Option<PipelineParams>,
}

struct Settings {
    seed: u64,
    threads: Option<usize>,
    base_params: PipelineParams,
}

impl Settings {
    fn params(&self, overrides: &ParamArgs) -> CliResult<PipelineParams> {
        let mut p = self.base_params.clone();
        overrides.apply(&mut p);
        match p.validate() {
            Ok(()) => Ok(p),
            Err(e) => usage(e.to_string()),
        }
    }
}

fn load_settings(cli: &Cli) -> CliResult<Settings> {
    let file = match &cli.config {
        Some(path) => {
            let text = fs::read_to_string(path).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
            toml::from_str::<ConfigFile>(&text).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?
        }
        None => ConfigFile::default(),
    };
    Ok(Settings {
        seed: cli.seed.or(file.seed).unwrap_or(DEFAULT_SEED),
        threads: cli.threads.or(file.threads),
        base_params: file.pipeline.unwrap_or_default(),
    })
}

fn warn_if_not_fog(beta: f64) {
    if beta < FOG_BETA_MIN {
        log::warn!("beta {beta} is below fog bound 2.996e-3: visibility exceeds 1 km");
    }
}

fn require_files(paths: &[&Path]) -> CliResult {
    for p in paths {
        if !p.is_file() {
            return fail(format!("{}: no such file", p.display()));
        }
    }
    Ok(())
}

fn emit(out: Option<&Path>, text: &str) -> CliResult {
    match out {
        Some(path) => Ok(io::write_atomic(path, text.as_bytes())?),
        None => std::io::stdout()
            .write_all(text.as_bytes())
            .map_err(|e| CliError::Failed(format!("stdout: {e}"))),
    }
}

fn to_json<T: serde::Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("serializable");
    s.push('\n');
    s
}

struct Stereo {
    left: Image,
    right: Image,
    disparity: ScalarField,
    rig: CameraRig,
}

fn load_stereo(inputs: &StereoInputs) -> CliResult<Stereo> {
    require_files(&[&inputs.left, &inputs.right, &inputs.disparity, &inputs.camera])?;
    Ok(Stereo {
        left: io::read_rgb_png(&inputs.left)?,
        right: io::read_rgb_png(&inputs.right)?,
        disparity: io::read_disparity_png(&inputs.disparity)?,
        rig: io::read_camera_json(&inputs.camera)?,
    })
}

fn cmd_simulate(args: &SimulateArgs, settings: &Settings) -> CliResult {
    let params = settings.params(&args.params)?;
    warn_if_not_fog(args.beta);
    let st = load_stereo(&args.inputs)?;
    log::info!("simulating beta {} on {}", args.beta, args.inputs.left.display());
    let sim = simulate_fog(&st.left, &st.right, &st.disparity, &st.rig, args.beta, &params, settings.seed)?;
    io::write_rgb_png(&args.out, &sim.foggy)?;
    let sidecar = Sidecar {
        beta: args.beta,
        mor_m: mor_from_beta(args.beta).ok(),
        atmospheric_light: sim.light,
        seed: settings.seed,
        params_sha256: params.sha256(),
    };
    io::write_json(&args.out.with_extension("json"), &sidecar)?;
    if let Some(p) = &args.save_transmission {
        io::write_transmission_png(p, &sim.transmission)?;
    }
    if let Some(p) = &args.save_depth {
        io::write_metric_png(p, &sim.depth)?;
    }
    if let Some(p) = &args.save_distance {
        io::write_metric_png(p, &sim.distance)?;
    }
    Ok(())
}

fn cmd_dataset(args: &DatasetArgs, settings: &Settings) -> CliResult {
    let params = settings.params(&args.params)?;
    let betas = if args.beta.is_empty() { DEFAULT_BETAS.to_vec() } else { args.beta.clone() };
    betas.iter().for_each(|&b| warn_if_not_fog(b));
    if !args.input.is_dir() {
        return fail(format!("{}: not a directory", args.input.display()));
    }
    let allowlist = args
        .overcast_allowlist
        .as_deref()
        .map(dataset::read_allowlist)
        .transpose()
        ?;
    let cfg = DatasetConfig {
        input_root: args.input.clone(),
        output_root: args.output.clone(),
        betas,
        params,
        seed: settings.seed,
        threads: settings.threads,
        overcast_allowlist: allowlist,
    };
    let report = build_dataset(&cfg)?;
    log::info!(
        "{} images, {} foggy images written, {} rejects, {} errors",
        report.images,
        report.written,
        report.rejects.len(),
        report.errors.len()
    );
    if !report.errors.is_empty() {
        return fail(format!("{} images failed; see errors.txt", report.errors.len()));
    }
    Ok(())
}

fn cmd_depth(args: &DepthArgs, settings: &Settings) -> CliResult {
    let params = settings.params(&args.params)?;
    let st = load_stereo(&args.inputs)?;
    let out = denoise_and_complete(&st.left, &st.right, &st.disparity, &st.rig, &params, settings.seed)?;
    io::write_metric_png(&args.out, &out.depth)?;
    if let Some(p) = &args.save_distance {
        io::write_metric_png(p, &depth_to_distance(&out.depth, &st.rig)?)?;
    }
    if let Some(p) = &args.save_superpixels {
        let labels = out
            .segmentation
            .labels()
            .iter()
            .map(|&l| u16::try_from(l).or_else(|_| fail(format!("superpixel id {l} does not fit 16 bits"))))
            .collect::<CliResult<Vec<u16>>>()?;
        io::write_gray16_png(p, st.left.width(), st.left.height(), labels)?;
    }
    let reliable = out.segmentation.records.iter().filter(|r| r.reliable).count();
    log::info!(
        "{} superpixels, {} reliable, {} matched",
        out.segmentation.count(),
        reliable,
        out.assignment.pairs.len()
    );
    Ok(())
}

/// Pairs of files to compare: a single pair, or every PNG below the ground
/// truth directory with its counterpart in the other directories.
fn eval_pairs(args: &EvalArgs) -> CliResult<Vec<(PathBuf, PathBuf, Option<PathBuf>)>> {
    if args.gt.is_file() {
        require_files(&[&args.pred])?;
        if let Some(d) = &args.distance {
            require_files(&[d])?;
        }
        return Ok(vec![(args.pred.clone(), args.gt.clone(), args.distance.clone())]);
    }
    if !args.gt.is_dir() {
        return fail(format!("{}: no such file or directory", args.gt.display()));
    }
    let mut pairs = Vec::new();
    for entry in walkdir::WalkDir::new(&args.gt).sort_by_file_name() {
        let entry = entry.map_err(|e| CliError::Failed(e.to_string()))?;
        if !entry.file_type().is_file() || entry.path().extension().is_none_or(|x| x != "png") {
            continue;
        }
        let rel = entry.path().strip_prefix(&args.gt).expect("walk stays below root");
        let pred = args.pred.join(rel);
        require_files(&[&pred])?;
        let dist = args.distance.as_ref().map(|d| d.join(rel));
        if let Some(d) = &dist {
            require_files(&[d])?;
        }
        pairs.push((pred, entry.path().to_path_buf(), dist));
    }
    if pairs.is_empty() {
        return fail(format!("{}: no label PNGs found", args.gt.display()));
    }
    Ok(pairs)
}

fn cmd_eval(args: &EvalArgs) -> CliResult {
    let pairs = eval_pairs(args)?;
    let edges = if args.bins.is_empty() { DEFAULT_BIN_EDGES.to_vec() } else { args.bins.clone() };
    let mut cm = ConfusionMatrix::new();
    let mut binned = match &args.distance {
        Some(_) => match BinnedConfusion::new(&edges) {
            Ok(b) => Some(b),
            Err(e) => return usage(e.to_string()),
        },
        None => None,
    };
    for (pred, gt, dist) in &pairs {
        let p = io::read_label_png(pred)?;
        let g = io::read_label_png(gt)?;
        cm.accumulate(&p, &g)
            .map_err(|err| CliError::Failed(format!("{}: {err}", gt.display())))?;
        if let (Some(b), Some(d)) = (binned.as_mut(), dist) {
            let d = io::read_metric_png(d)?;
            b.accumulate(&p, &g, &d)
                .map_err(|err| CliError::Failed(format!("{}: {err}", gt.display())))?;
        }
    }
    let report = EvalReport::new(&cm, binned.as_ref())?;
    log::info!("evaluated {} image pairs", pairs.len());
    emit(args.out.as_deref(), &to_json(&report))
}

fn cmd_bboxes(args: &BboxArgs) -> CliResult {
    require_files(&[&args.instances])?;
    let inst = io::read_instance_png(&args.instances)?;
    emit(args.out.as_deref(), &to_json(&instances_to_bboxes(&inst)))
}

fn read_pairs(path: &Path) -> CliResult<Vec<(String, String)>> {
    let text = fs::read_to_string(path).map_err(|e| CliError::Failed(format!("{}: {e}", path.display())))?;
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty() && !l.trim_start().starts_with('#'))
        .map(|(n, l)| {
            let mut parts = l.split_whitespace();
            match (parts.next(), parts.next(), parts.next()) {
                (Some(a), Some(b), None) => Ok((a.to_string(), b.to_string())),
                _ => fail(format!("{}:{}: expected `image label`", path.display(), n + 1)),
            }
        })
        .collect()
}

fn cmd_manifest(args: &ManifestArgs, settings: &Settings) -> CliResult {
    let labeled = read_pairs(&args.labeled)?;
    let pseudo = read_pairs(&args.pseudo)?;
    let m = build_ssl_manifest(&labeled, &pseudo, args.w, settings.seed)?;
    log::info!(
        "{} entries, lambda = {}",
        m.header.entries,
        m.header.lambda
    );
    emit(args.out.as_deref(), &m.to_ndjson())
}

fn cmd_filter_sky(args: &FilterSkyArgs) -> CliResult {
    let allow: Option<BTreeSet<String>> = args
        .overcast_allowlist
        .as_deref()
        .map(dataset::read_allowlist)
        .transpose()
        ?;
    let mut out = String::new();
    for job in discover_inputs(&args.input)? {
        let Some(labels_path) = &job.labels else {
            log::warn!("{}: no labels, skipped", job.key);
            continue;
        };
        let clear = io::read_rgb_png(&job.left)?;
        let labels = io::read_label_png(labels_path)?;
        let light = estimate_atmospheric_light(&clear)?;
        let [u, v] = light.pixel;
        let verdict = if !sky_criterion(&light, &labels)? {
            format!("reject\tatmospheric light pixel ({u}, {v}) is labeled {}", class_name(labels.get(u, v)))
        } else if allow.as_ref().is_some_and(|a| !a.contains(&job.key)) {
            "reject\tnot in the overcast allowlist".to_string()
        } else {
            "keep".to_string()
        };
        out.push_str(&format!("{}\t{verdict}\n", job.key));
    }
    emit(None, &out)
}

fn run(cli: &Cli) -> CliResult {
    let settings = load_settings(cli)?;
    if let Some(n) = settings.threads {
        if n == 0 {
            return usage("--threads must be at least 1");
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Failed(e.to_string()))?;
    }
    match &cli.command {
        Command::Simulate(a) => cmd_simulate(a, &settings),
        Command::Dataset(a) => cmd_dataset(a, &settings),
        Command::Depth(a) => cmd_depth(a, &settings),
        Command::Eval(a) => cmd_eval(a),
        Command::Bboxes(a) => cmd_bboxes(a),
        Command::Manifest(a) => cmd_manifest(a, &settings),
        Command::FilterSky(a) => cmd_filter_sky(a),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = if cli.quiet { "warn" } else { "info" };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level))
        .format_timestamp(None)
        .init();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Usage(msg)) => {
            log::error!("{msg}");
            ExitCode::from(2)
        }
        Err(CliError::Failed(msg)) => {
            log::error!("{msg}");
            ExitCode::from(1)
        }
    }
}
