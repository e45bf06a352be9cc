//! `emrestore` command-line front end.

use std::ffi::OsString;
use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::codec;
use crate::container::{read_model_file, write_model_file, Model, ModelFile};
use crate::distill::{train_students, DistillConfig, Student, StudentSpec};
use crate::error::{Error, Result};
use crate::io::{read_image, write_image};
use crate::metrics::{moving_average, read_curve, tail_stats, write_curve, write_summary};
use crate::models::{AutoencoderParams, AutoencoderPlan, Border};
use crate::preprocess::{denormalize, normalize};
use crate::published::{all_kernels, get_kernel, kernel_by_name, Modality};
use crate::synthetic::PoissonGaussian;
use crate::tensor::Image;
use crate::training::{train_autoencoder, Schedule, TrainConfig};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_IO: i32 = 3;
pub const EXIT_FORMAT: i32 = 4;
pub const EXIT_NUMERIC: i32 = 5;

#[derive(Parser, Debug)]
#[command(name = "emrestore", version, about = "Electron micrograph restoration and latent compression")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Restore an image with a kernel, MLP or autoencoder.
    Denoise(DenoiseArgs),
    /// Train an autoencoder on a directory of images.
    TrainAutoencoder(TrainArgs),
    /// Fit kernel and MLP students to a frozen teacher model.
    Distill(DistillArgs),
    /// Encode an image into a latent container.
    Compress(CompressArgs),
    /// Decode a latent container back into an image.
    Decompress(DecompressArgs),
    /// List or export the published kernels.
    Kernels(KernelArgs),
    /// Smooth learning curves and summarize their tails.
    Curves(CurveArgs),
}

#[derive(Args, Debug)]
struct Dims {
    /// Width of headerless raw f32 input.
    #[arg(long)]
    width: Option<usize>,
    /// Height of headerless raw f32 input.
    #[arg(long)]
    height: Option<usize>,
}

impl Dims {
    fn get(&self) -> Result<Option<(usize, usize)>> {
        match (self.width, self.height) {
            (Some(w), Some(h)) => Ok(Some((w, h))),
            (None, None) => Ok(None),
            _ => Err(Error::Validation("--width and --height go together".into())),
        }
    }
}

#[derive(Args, Debug)]
struct DenoiseArgs {
    /// Published kernel name (e.g. tem-k3) or an .emnn model file.
    #[arg(long)]
    model: String,
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value = "reflect")]
    border: Border,
    #[command(flatten)]
    dims: Dims,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum NoiseArg {
    None,
    PoissonGaussian,
}

impl NoiseArg {
    fn model(self) -> Option<PoissonGaussian> {
        match self {
            NoiseArg::None => None,
            NoiseArg::PoissonGaussian => Some(PoissonGaussian::default()),
        }
    }
}

#[derive(Args, Debug)]
struct TrainArgs {
    /// Directory of training images.
    #[arg(long = "in")]
    input: PathBuf,
    /// Output model file.
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 60000)]
    iters: usize,
    #[arg(long, default_value_t = 32)]
    batch: usize,
    #[arg(long, default_value_t = 16)]
    latent_depth: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value = "tem")]
    modality: Modality,
    #[arg(long, value_enum, default_value = "none")]
    noise: NoiseArg,
    /// Encoder channel widths before the latent layer.
    #[arg(long, value_delimiter = ',', default_value = "32,64,128")]
    channels: Vec<usize>,
    #[arg(long, default_value_t = 160)]
    crop_size: usize,
    #[arg(long, default_value_t = 0.999)]
    bn_decay: f64,
    /// Write the per-iteration training MSE here.
    #[arg(long)]
    curve: Option<PathBuf>,
    #[command(flatten)]
    dims: Dims,
}

#[derive(Args, Debug)]
struct DistillArgs {
    /// Teacher: published kernel name or .emnn file.
    #[arg(long)]
    teacher: String,
    /// Students such as kernel-3,mlp1-5,mlp2-7.
    #[arg(long, value_delimiter = ',', required = true)]
    students: Vec<StudentSpec>,
    /// Directory of training images.
    #[arg(long = "in")]
    input: PathBuf,
    /// Output directory for student models and curves.
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 10000)]
    iters: usize,
    #[arg(long, default_value_t = 1)]
    batch: usize,
    /// Crop side (default: largest student size + 5).
    #[arg(long)]
    crop: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[command(flatten)]
    dims: Dims,
}

#[derive(Args, Debug)]
struct CompressArgs {
    /// Autoencoder .emnn file.
    #[arg(long)]
    model: PathBuf,
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// Modality recorded in the container (default: the model's).
    #[arg(long)]
    modality: Option<Modality>,
    #[command(flatten)]
    dims: Dims,
}

#[derive(Args, Debug)]
struct DecompressArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct KernelArgs {
    #[arg(long)]
    modality: Option<Modality>,
    #[arg(long)]
    size: Option<usize>,
    /// Write the selected kernel as an .emnn file instead of listing.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct CurveArgs {
    /// Curve files (`iteration,mse`).
    #[arg(long = "in", required = true)]
    input: Vec<PathBuf>,
    #[arg(long, default_value_t = 2500)]
    window: usize,
    /// Number of trailing smoothed values to summarize.
    #[arg(long, default_value_t = 10000)]
    tail: usize,
    /// Summary CSV (default: stdout).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also write each smoothed curve into this directory.
    #[arg(long)]
    smoothed: Option<PathBuf>,
}

/// Parses `args` (program name first), runs the subcommand and returns the
/// process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match dispatch(cli.command) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("emrestore: error: {e}");
            exit_code(&e)
        }
    }
}

/// Exit code for an error.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Io { .. } => EXIT_IO,
        Error::Format(_) => EXIT_FORMAT,
        Error::Degenerate(_) => EXIT_NUMERIC,
        _ => EXIT_USAGE,
    }
}

fn dispatch(cmd: Command) -> Result<()> {
    match cmd {
        Command::Denoise(a) => denoise(a),
        Command::TrainAutoencoder(a) => train(a),
        Command::Distill(a) => distill(a),
        Command::Compress(a) => compress(a),
        Command::Decompress(a) => decompress(a),
        Command::Kernels(a) => kernels(a),
        Command::Curves(a) => curves(a),
    }
}

/// A published kernel name, or otherwise a model file path.
fn load_model_spec(spec: &str) -> Result<ModelFile> {
    let path = Path::new(spec);
    if path.exists() || path.extension().is_some_and(|e| e == "emnn") {
        return read_model_file(path);
    }
    Ok(ModelFile::from_published(&kernel_by_name(spec)?))
}

fn restore(model: &ModelFile, img: &Image, border: Border) -> Result<Image> {
    match &model.model {
        Model::Kernel(k) => {
            let (n, stats) = normalize(img)?;
            denormalize(&k.apply(&n, border)?, stats)
        }
        Model::Mlp(m) => {
            let (n, stats) = normalize(img)?;
            denormalize(&m.denoise(&n, border)?, stats)
        }
        Model::Autoencoder(p) => codec::decompress(p, &codec::compress(p, model.modality, img)?),
    }
}

fn denoise(a: DenoiseArgs) -> Result<()> {
    let model = load_model_spec(&a.model)?;
    let img = read_image(&a.input, a.dims.get()?)?;
    write_image(&a.out, &restore(&model, &img, a.border)?)
}

/// Every regular file in `dir`, sorted by name.
fn read_dataset(dir: &Path, dims: Option<(usize, usize)>) -> Result<Vec<Image>> {
    let entries = std::fs::read_dir(dir).map_err(|e| Error::io(dir, e))?;
    let mut paths = Vec::new();
    for entry in entries {
        let p = entry.map_err(|e| Error::io(dir, e))?.path();
        let is_sidecar = p.extension().is_some_and(|e| e == "range");
        if p.is_file() && !is_sidecar {
            paths.push(p);
        }
    }
    paths.sort();
    if paths.is_empty() {
        return Err(Error::Config(format!("no images in {}", dir.display())));
    }
    paths.iter().map(|p| read_image(p, dims)).collect()
}

fn save_curve(path: &Path, curve: &[f64]) -> Result<()> {
    let f = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(f);
    write_curve(&mut w, curve)
        .and_then(|_| w.flush())
        .map_err(|e| Error::io(path, e))
}

fn train(a: TrainArgs) -> Result<()> {
    let channels: [usize; 3] = a
        .channels
        .as_slice()
        .try_into()
        .map_err(|_| Error::Validation("--channels needs exactly three widths".into()))?;
    let plan = AutoencoderPlan {
        crop_size: a.crop_size,
        channels,
        latent_depth: a.latent_depth,
    };
    let config = TrainConfig {
        batch_size: a.batch,
        max_iter: a.iters,
        bn_decay: a.bn_decay,
        seed: a.seed,
        noise: a.noise.model(),
    };
    let data = read_dataset(&a.input, a.dims.get()?)?;
    let trained = train_autoencoder(&config, &Schedule::autoencoder(a.iters)?, plan, &data)?;
    write_model_file(
        &a.out,
        &ModelFile {
            modality: a.modality,
            model: Model::Autoencoder(trained.params),
        },
    )?;
    if let Some(path) = &a.curve {
        save_curve(path, &trained.curve)?;
    }
    Ok(())
}

fn distill(a: DistillArgs) -> Result<()> {
    let teacher = load_model_spec(&a.teacher)?;
    let data = read_dataset(&a.input, a.dims.get()?)?;
    let config = DistillConfig {
        students: a.students,
        crop_size: a.crop,
        max_iter: a.iters,
        eta0: 0.01,
        batch_size: a.batch,
        seed: a.seed,
    };
    let trained = match &teacher.model {
        Model::Kernel(k) => train_students(&config, k, &data)?,
        Model::Mlp(m) => {
            let t = |c: &Image| m.denoise(c, Border::Reflect);
            train_students(&config, &t, &data)?
        }
        Model::Autoencoder(p) => train_students(&config, p, &data)?,
    };
    std::fs::create_dir_all(&a.out).map_err(|e| Error::io(&a.out, e))?;
    for s in trained {
        let label = s.spec.label();
        let model = match s.model {
            Student::Kernel(k) => Model::Kernel(k),
            Student::Mlp(m) => Model::Mlp(m),
        };
        let file = ModelFile {
            modality: teacher.modality,
            model,
        };
        write_model_file(&a.out.join(format!("{label}.emnn")), &file)?;
        save_curve(&a.out.join(format!("{label}.csv")), &s.curve)?;
    }
    Ok(())
}

fn autoencoder_of(file: ModelFile) -> Result<(Modality, AutoencoderParams)> {
    match file.model {
        Model::Autoencoder(p) => Ok((file.modality, p)),
        other => Err(Error::Validation(format!(
            "expected an autoencoder model, got a {}",
            other.kind_name()
        ))),
    }
}

fn compress(a: CompressArgs) -> Result<()> {
    let (modality, params) = autoencoder_of(read_model_file(&a.model)?)?;
    let img = read_image(&a.input, a.dims.get()?)?;
    let c = codec::compress(&params, a.modality.unwrap_or(modality), &img)?;
    let bytes = codec::serialize(&c)?;
    std::fs::write(&a.out, bytes).map_err(|e| Error::io(&a.out, e))
}

fn decompress(a: DecompressArgs) -> Result<()> {
    let (_, params) = autoencoder_of(read_model_file(&a.model)?)?;
    let bytes = std::fs::read(&a.input).map_err(|e| Error::io(&a.input, e))?;
    let img = codec::decompress(&params, &codec::deserialize(&bytes)?)?;
    write_image(&a.out, &img)
}

fn kernels(a: KernelArgs) -> Result<()> {
    if let Some(out) = &a.out {
        let (Some(m), Some(size)) = (a.modality, a.size) else {
            return Err(Error::Validation("exporting needs --modality and --size".into()));
        };
        return write_model_file(out, &ModelFile::from_published(&get_kernel(m, size)?));
    }
    let mut stdout = std::io::stdout().lock();
    for k in all_kernels() {
        if a.modality.is_some_and(|m| m != k.modality) || a.size.is_some_and(|s| s != k.size) {
            continue;
        }
        let sum: f64 = k.weights.iter().sum();
        let center = k.at(k.size / 2, k.size / 2);
        writeln!(stdout, "{}\tsum {sum:.3}\tcenter {center}", k.short_name())
            .map_err(|e| Error::io("<stdout>", e))?;
    }
    Ok(())
}

fn curves(a: CurveArgs) -> Result<()> {
    let mut rows = Vec::with_capacity(a.input.len());
    for path in &a.input {
        let f = File::open(path).map_err(|e| Error::io(path, e))?;
        let raw = read_curve(BufReader::new(f))?;
        let smooth = moving_average(&raw, a.window)?;
        let name = path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_default();
        if let Some(dir) = &a.smoothed {
            std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
            save_curve(&dir.join(format!("{name}.csv")), &smooth)?;
        }
        rows.push((name, tail_stats(&smooth, a.tail.min(smooth.len()))?));
    }
    match &a.out {
        Some(path) => {
            let f = File::create(path).map_err(|e| Error::io(path, e))?;
            let mut w = BufWriter::new(f);
            write_summary(&mut w, &rows)
                .and_then(|_| w.flush())
                .map_err(|e| Error::io(path, e))
        }
        None => write_summary(std::io::stdout().lock(), &rows).map_err(|e| Error::io("<stdout>", e)),
    }
}
