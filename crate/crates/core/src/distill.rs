//! Teacher–student fitting of kernels and MLPs to a frozen restoration
//! model.
//!
//! Every iteration draws one normalized `d × d` crop (shared by the whole
//! student set), asks the teacher for its restoration and takes one ADAM
//! step per student on the masked MSE, which ignores pixels closer than
//! `(w − 1) / 2` to the crop edge.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::models::{AutoencoderParams, Border, Gradients, KernelModel, MlpModel, Parameters};
use crate::preprocess::normalize_or_zeros;
use crate::tensor::{crop, crop_rect, reflect_window, Image};
use crate::training::adam::AdamState;
use crate::training::backward::{kernel_masked_gradients, mlp_masked_gradients};
use crate::training::schedule::Schedule;

/// Something that restores a crop to a same-sized crop.
pub trait Teacher {
    fn restore(&self, crop: &Image) -> Result<Image>;
}

impl<F> Teacher for F
where
    F: Fn(&Image) -> Result<Image>,
{
    fn restore(&self, crop: &Image) -> Result<Image> {
        self(crop)
    }
}

impl Teacher for KernelModel {
    fn restore(&self, crop: &Image) -> Result<Image> {
        self.apply(crop, Border::Reflect)
    }
}

impl Teacher for AutoencoderParams {
    /// Mirror-pads the crop to the autoencoder's input size, reconstructs it
    /// in inference mode and cuts out the central region.
    fn restore(&self, crop: &Image) -> Result<Image> {
        let s = self.crop_size();
        let (h, w) = (crop.height(), crop.width());
        if h > s || w > s {
            return Err(Error::Size(format!(
                "crop {h}x{w} exceeds the teacher input size {s}"
            )));
        }
        let top = (s - h) / 2;
        let left = (s - w) / 2;
        let padded = reflect_window(crop, -(top as isize), -(left as isize), s, s);
        let out = self.reconstruct_infer(&padded)?;
        crop_rect(&out, top, left, h, w)
    }
}

/// Mean squared difference over pixels at least `(w − 1) / 2` from every edge.
pub fn masked_mse(student_out: &Image, teacher_out: &Image, w: usize) -> Result<f64> {
    if student_out.height() != teacher_out.height() || student_out.width() != teacher_out.width() {
        return Err(Error::Size("student and teacher outputs differ in shape".into()));
    }
    let m = w.saturating_sub(1) / 2;
    let (h, wd) = (student_out.height(), student_out.width());
    if h <= 2 * m || wd <= 2 * m {
        return Err(Error::Size(format!(
            "{h}x{wd} crop leaves no pixels after a margin of {m}"
        )));
    }
    let mut sum = 0.0;
    for r in m..h - m {
        for c in m..wd - m {
            let d = student_out.get(r, c) - teacher_out.get(r, c);
            sum += d * d;
        }
    }
    Ok(sum / ((h - 2 * m) * (wd - 2 * m)) as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StudentSpec {
    Kernel { size: usize },
    Mlp { size: usize, hidden_layers: usize },
}

impl StudentSpec {
    pub fn size(&self) -> usize {
        match *self {
            StudentSpec::Kernel { size } | StudentSpec::Mlp { size, .. } => size,
        }
    }

    /// Short label such as `kernel-3` or `mlp1-5`.
    pub fn label(&self) -> String {
        match *self {
            StudentSpec::Kernel { size } => format!("kernel-{size}"),
            StudentSpec::Mlp { size, hidden_layers } => format!("mlp{hidden_layers}-{size}"),
        }
    }
}

impl std::str::FromStr for StudentSpec {
    type Err = Error;

    /// Parses labels produced by [`StudentSpec::label`].
    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::Validation(format!("bad student spec {s:?} (expected kernel-W or mlpH-W)"));
        let (kind, size) = s.split_once('-').ok_or_else(bad)?;
        let size: usize = size.parse().map_err(|_| bad())?;
        match kind {
            "kernel" => Ok(StudentSpec::Kernel { size }),
            "mlp1" => Ok(StudentSpec::Mlp { size, hidden_layers: 1 }),
            "mlp2" => Ok(StudentSpec::Mlp { size, hidden_layers: 2 }),
            _ => Err(bad()),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Student {
    Kernel(KernelModel),
    Mlp(MlpModel),
}

impl Student {
    pub fn init<R: Rng + ?Sized>(spec: StudentSpec, rng: &mut R) -> Result<Self> {
        match spec {
            StudentSpec::Kernel { size } => Ok(Student::Kernel(KernelModel::xavier(size, rng)?)),
            StudentSpec::Mlp { size, hidden_layers } => {
                Ok(Student::Mlp(MlpModel::xavier(size, hidden_layers, rng)?))
            }
        }
    }

    pub fn size(&self) -> usize {
        match self {
            Student::Kernel(k) => k.size(),
            Student::Mlp(m) => m.size(),
        }
    }

    pub fn apply(&self, img: &Image, border: Border) -> Result<Image> {
        match self {
            Student::Kernel(k) => k.apply(img, border),
            Student::Mlp(m) => m.denoise(img, border),
        }
    }

    fn gradients(&self, input: &Image, target: &Image) -> Result<(f64, Gradients)> {
        match self {
            Student::Kernel(k) => kernel_masked_gradients(k, input, target),
            Student::Mlp(m) => mlp_masked_gradients(m, input, target),
        }
    }

    fn params_mut(&mut self) -> Vec<&mut [f64]> {
        match self {
            Student::Kernel(k) => k.params_mut(),
            Student::Mlp(m) => m.params_mut(),
        }
    }

    fn adam(&self) -> AdamState {
        match self {
            Student::Kernel(k) => AdamState::for_model(k),
            Student::Mlp(m) => AdamState::for_model(m),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DistillConfig {
    /// Students trained together on the same crop sequence.
    pub students: Vec<StudentSpec>,
    /// Crop side `d`; `None` means `w_max + 5`.
    pub crop_size: Option<usize>,
    pub max_iter: usize,
    pub eta0: f64,
    /// Crops per iteration.
    pub batch_size: usize,
    pub seed: u64,
}

impl DistillConfig {
    pub fn new(students: Vec<StudentSpec>) -> Self {
        Self {
            students,
            crop_size: None,
            max_iter: 10000,
            eta0: 0.01,
            batch_size: 1,
            seed: 0,
        }
    }

    pub fn w_max(&self) -> usize {
        self.students.iter().map(StudentSpec::size).max().unwrap_or(0)
    }

    /// The crop side `d` actually used.
    pub fn resolved_crop_size(&self) -> usize {
        self.crop_size.unwrap_or(self.w_max() + 5)
    }

    pub fn schedule(&self) -> Result<Schedule> {
        Schedule::new(self.eta0, self.max_iter, 1)
    }

    pub fn validate(&self) -> Result<()> {
        if self.students.is_empty() {
            return Err(Error::Config("no students to train".into()));
        }
        if self.max_iter == 0 || self.batch_size == 0 {
            return Err(Error::Config("max_iter and batch_size must be positive".into()));
        }
        let d = self.resolved_crop_size();
        for s in &self.students {
            crate::models::kernel::validate_size(s.size())
                .map_err(|e| Error::Config(format!("{}: {e}", s.label())))?;
            if s.size() + 5 > d {
                return Err(Error::Config(format!(
                    "student {} needs crops of at least {} but d = {d}",
                    s.label(),
                    s.size() + 5
                )));
            }
        }
        Ok(())
    }
}

/// Where a training crop came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CropCoord {
    pub image: usize,
    pub top: usize,
    pub left: usize,
}

#[derive(Debug, Clone)]
pub struct TrainingPair {
    pub top: usize,
    pub left: usize,
    /// Normalized crop.
    pub crop: Image,
    /// Teacher restoration of `crop`.
    pub target: Image,
}

/// Draws a uniformly placed `d × d` crop, normalizes it and asks the
/// teacher for its restoration.
pub fn sample_training_pair<T, R>(teacher: &T, img: &Image, d: usize, rng: &mut R) -> Result<TrainingPair>
where
    T: Teacher + ?Sized,
    R: Rng + ?Sized,
{
    if img.height() < d || img.width() < d {
        return Err(Error::Size(format!(
            "image {}x{} is smaller than the {d}x{d} crop",
            img.height(),
            img.width()
        )));
    }
    let top = rng.random_range(0..=img.height() - d);
    let left = rng.random_range(0..=img.width() - d);
    let (c, _) = normalize_or_zeros(&crop(img, top, left, d)?);
    let target = teacher.restore(&c)?;
    if target.height() != d || target.width() != d {
        return Err(Error::Size(format!(
            "teacher returned {}x{} for a {d}x{d} crop",
            target.height(),
            target.width()
        )));
    }
    Ok(TrainingPair {
        top,
        left,
        crop: c,
        target,
    })
}

#[derive(Debug, Clone)]
pub struct TrainedStudent {
    pub spec: StudentSpec,
    pub model: Student,
    /// Masked MSE at each iteration, before that iteration's update.
    pub curve: Vec<f64>,
    /// Crops this student was shown, in order.
    pub crops_seen: Vec<CropCoord>,
}

/// Trains every student in `config` against the frozen `teacher`.
pub fn train_students<T>(config: &DistillConfig, teacher: &T, dataset: &[Image]) -> Result<Vec<TrainedStudent>>
where
    T: Teacher + ?Sized,
{
    config.validate()?;
    if dataset.is_empty() {
        return Err(Error::Config("dataset is empty".into()));
    }
    let d = config.resolved_crop_size();
    if let Some((i, img)) = dataset
        .iter()
        .enumerate()
        .find(|(_, img)| img.height() < d || img.width() < d)
    {
        return Err(Error::Size(format!(
            "image {i} is {}x{}, smaller than the {d}x{d} crop",
            img.height(),
            img.width()
        )));
    }
    let schedule = config.schedule()?;
    // Stream 0 initializes students, stream 1 draws crops, so the crop
    // order depends only on the seed.
    let mut init_rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut crop_rng = ChaCha8Rng::seed_from_u64(config.seed);
    crop_rng.set_stream(1);

    let mut students: Vec<TrainedStudent> = config
        .students
        .iter()
        .map(|&spec| {
            Ok(TrainedStudent {
                spec,
                model: Student::init(spec, &mut init_rng)?,
                curve: Vec::with_capacity(config.max_iter),
                crops_seen: Vec::with_capacity(config.max_iter * config.batch_size),
            })
        })
        .collect::<Result<_>>()?;
    let mut optimizers: Vec<AdamState> = students.iter().map(|s| s.model.adam()).collect();

    for iter in 0..config.max_iter {
        let lr = schedule.learning_rate(iter)?;
        let mut pairs = Vec::with_capacity(config.batch_size);
        for _ in 0..config.batch_size {
            let image = crop_rng.random_range(0..dataset.len());
            let pair = sample_training_pair(teacher, &dataset[image], d, &mut crop_rng)?;
            pairs.push((CropCoord { image, top: pair.top, left: pair.left }, pair));
        }
        for (student, adam) in students.iter_mut().zip(&mut optimizers) {
            let mut total: Option<Gradients> = None;
            let mut loss = 0.0;
            for (coord, pair) in &pairs {
                let (l, g) = student.model.gradients(&pair.crop, &pair.target)?;
                loss += l;
                match &mut total {
                    Some(t) => t.add_scaled(&g, 1.0),
                    None => total = Some(g),
                }
                student.crops_seen.push(*coord);
            }
            let mut grads = total.expect("batch_size > 0");
            let n = pairs.len() as f64;
            grads.scale(1.0 / n);
            adam.step(&mut student.model.params_mut(), &grads.0, lr)?;
            student.curve.push(loss / n);
        }
    }
    Ok(students)
}
