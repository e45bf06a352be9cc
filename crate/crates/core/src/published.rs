//! Published 3×3, 5×5, 7×7 and 11×11 denoising kernels and the inventory of
//! trained model configurations.
//!
//! Matrices are stored exactly as printed (three decimals, no
//! renormalization). The printed TEM+STEM 11×11 matrix has the value `1` at
//! row 1, column 10 (zero-based) where every symmetry of the matrix requires
//! `-0.003`; the corrected value is shipped and the raw one is kept in
//! [`TEM_STEM_K11_RAW_ENTRY`].

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

/// Imaging mode a model was trained for.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Modality {
    Tem,
    Stem,
    TemStem,
}

impl Modality {
    pub const ALL: [Modality; 3] = [Modality::Tem, Modality::Stem, Modality::TemStem];

    /// Wire code used by the binary containers.
    pub fn code(self) -> u8 {
        match self {
            Modality::Tem => 0,
            Modality::Stem => 1,
            Modality::TemStem => 2,
        }
    }

    pub fn from_code(code: u8) -> Option<Self> {
        match code {
            0 => Some(Modality::Tem),
            1 => Some(Modality::Stem),
            2 => Some(Modality::TemStem),
            _ => None,
        }
    }

    /// Lower-case short name used by the CLI (`tem`, `stem`, `temstem`).
    pub fn short_name(self) -> &'static str {
        match self {
            Modality::Tem => "tem",
            Modality::Stem => "stem",
            Modality::TemStem => "temstem",
        }
    }
}

impl fmt::Display for Modality {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Modality::Tem => "TEM",
            Modality::Stem => "STEM",
            Modality::TemStem => "TEM+STEM",
        })
    }
}

impl FromStr for Modality {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "tem" => Ok(Modality::Tem),
            "stem" => Ok(Modality::Stem),
            "temstem" | "tem+stem" | "tem_stem" => Ok(Modality::TemStem),
            other => Err(Error::Validation(format!(
                "unknown modality {other:?} (expected tem, stem or temstem)"
            ))),
        }
    }
}

/// A shipped fixed denoising kernel.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PublishedKernel {
    pub modality: Modality,
    pub size: usize,
    /// Row-major `size × size` weights.
    pub weights: &'static [f64],
}

impl PublishedKernel {
    #[inline]
    pub fn at(&self, row: usize, col: usize) -> f64 {
        self.weights[row * self.size + col]
    }

    /// Invariance under horizontal flip, vertical flip and transpose.
    pub fn is_fourfold_symmetric(&self) -> bool {
        let n = self.size;
        (0..n).all(|i| {
            (0..n).all(|j| {
                let v = self.at(i, j);
                v == self.at(j, i) && v == self.at(n - 1 - i, j) && v == self.at(i, n - 1 - j)
            })
        })
    }

    /// CLI short name, e.g. `tem-k3`.
    pub fn short_name(&self) -> String {
        format!("{}-k{}", self.modality.short_name(), self.size)
    }
}

/// Sizes for which numeric kernels are shipped.
pub const SHIPPED_SIZES: [usize; 4] = [3, 5, 7, 11];

/// Value printed for the TEM+STEM 11×11 entry at (1, 10) before correction.
pub const TEM_STEM_K11_RAW_ENTRY: f64 = 1.0;

/// Looks up a shipped kernel.
pub fn get_kernel(modality: Modality, size: usize) -> Result<PublishedKernel> {
    let weights: &'static [f64] = match (modality, size) {
        (Modality::Tem, 3) => &TEM_K3,
        (Modality::Tem, 5) => &TEM_K5,
        (Modality::Tem, 7) => &TEM_K7,
        (Modality::Tem, 11) => &TEM_K11,
        (Modality::Stem, 3) => &STEM_K3,
        (Modality::Stem, 5) => &STEM_K5,
        (Modality::Stem, 7) => &STEM_K7,
        (Modality::Stem, 11) => &STEM_K11,
        (Modality::TemStem, 3) => &TEM_STEM_K3,
        (Modality::TemStem, 5) => &TEM_STEM_K5,
        (Modality::TemStem, 7) => &TEM_STEM_K7,
        (Modality::TemStem, 11) => &TEM_STEM_K11,
        _ => {
            let available: Vec<String> = Modality::ALL
                .iter()
                .flat_map(|m| SHIPPED_SIZES.iter().map(move |s| format!("{}-k{s}", m.short_name())))
                .collect();
            return Err(Error::NotFound(format!(
                "no published {modality} kernel of size {size}; available: {}",
                available.join(", ")
            )));
        }
    };
    Ok(PublishedKernel {
        modality,
        size,
        weights,
    })
}

/// Resolves a short name such as `stem-k5`.
pub fn kernel_by_name(name: &str) -> Result<PublishedKernel> {
    let (m, k) = name
        .split_once("-k")
        .ok_or_else(|| Error::NotFound(format!("{name:?} is not a kernel name like tem-k3")))?;
    let modality: Modality = m
        .parse()
        .map_err(|_| Error::NotFound(format!("unknown modality in kernel name {name:?}")))?;
    let size: usize = k
        .parse()
        .map_err(|_| Error::NotFound(format!("unknown size in kernel name {name:?}")))?;
    get_kernel(modality, size)
}

/// All 12 shipped kernels, ordered by modality then size.
pub fn all_kernels() -> Vec<PublishedKernel> {
    Modality::ALL
        .iter()
        .flat_map(|&m| SHIPPED_SIZES.iter().map(move |&s| (m, s)))
        .map(|(m, s)| get_kernel(m, s).expect("shipped kernel"))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ModelKind {
    Autoencoder,
    Kernel,
    Mlp,
}

/// One trained configuration.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct InventoryEntry {
    pub kind: ModelKind,
    pub modality: Modality,
    /// Latent depth for autoencoders, input size `w` otherwise.
    pub size_or_depth: usize,
    /// Zero for autoencoders and kernels.
    pub hidden_layers: usize,
}

const AUTOENCODER_DEPTHS: [(Modality, &[usize]); 3] = [
    (Modality::Tem, &[1, 4, 16, 64]),
    (Modality::Stem, &[4, 16, 64]),
    (Modality::TemStem, &[1, 2, 4, 8, 16, 32, 64]),
];

const KERNEL_SIZES: [usize; 5] = [3, 5, 7, 11, 15];

const MLP_SIZES: [(Modality, usize, &[usize]); 5] = [
    (Modality::Tem, 1, &[3, 5, 7]),
    (Modality::Tem, 2, &[5, 7]),
    (Modality::Stem, 1, &[3, 5, 7]),
    (Modality::TemStem, 1, &[3, 5, 7, 11]),
    (Modality::TemStem, 2, &[3, 7]),
];

/// Every trained configuration: 14 autoencoders, 15 kernels and 14 MLPs.
pub fn inventory() -> Vec<InventoryEntry> {
    let mut out = Vec::with_capacity(43);
    for (modality, depths) in AUTOENCODER_DEPTHS {
        out.extend(depths.iter().map(|&d| InventoryEntry {
            kind: ModelKind::Autoencoder,
            modality,
            size_or_depth: d,
            hidden_layers: 0,
        }));
    }
    for modality in Modality::ALL {
        out.extend(KERNEL_SIZES.iter().map(|&w| InventoryEntry {
            kind: ModelKind::Kernel,
            modality,
            size_or_depth: w,
            hidden_layers: 0,
        }));
    }
    for (modality, hidden_layers, sizes) in MLP_SIZES {
        out.extend(sizes.iter().map(|&w| InventoryEntry {
            kind: ModelKind::Mlp,
            modality,
            size_or_depth: w,
            hidden_layers,
        }));
    }
    out
}

#[rustfmt::skip]
const TEM_K3: [f64; 9] = [
    0.064, 0.135, 0.064,
    0.135, 0.218, 0.135,
    0.064, 0.135, 0.064,
];

#[rustfmt::skip]
const TEM_K5: [f64; 25] = [
    -0.084, -0.001, 0.030, -0.001, -0.084,
    -0.001, 0.107, 0.157, 0.107, -0.001,
    0.030, 0.157, 0.220, 0.157, 0.030,
    -0.001, 0.107, 0.157, 0.107, -0.001,
    -0.084, -0.001, 0.030, -0.001, -0.084,
];

#[rustfmt::skip]
const TEM_K7: [f64; 49] = [
    -0.039, -0.038, -0.025, -0.018, -0.025, -0.038, -0.039,
    -0.038, -0.009, 0.035, 0.058, 0.035, -0.009, -0.038,
    -0.025, 0.035, 0.114, 0.153, 0.114, 0.035, -0.025,
    -0.018, 0.058, 0.153, 0.204, 0.153, 0.058, -0.018,
    -0.025, 0.035, 0.114, 0.153, 0.114, 0.035, -0.025,
    -0.038, -0.009, 0.035, 0.058, 0.035, -0.009, -0.038,
    -0.039, -0.038, -0.025, -0.018, -0.025, -0.038, -0.039,
];

#[rustfmt::skip]
const TEM_K11: [f64; 121] = [
    -0.017, 0.000, 0.001, -0.005, -0.006, -0.006, -0.006, -0.005, 0.001, 0.000, -0.017,
    0.000, 0.009, -0.001, -0.013, -0.015, -0.014, -0.015, -0.013, -0.001, 0.009, 0.000,
    0.001, -0.001, -0.015, -0.022, -0.010, -0.001, -0.010, -0.022, -0.015, -0.001, 0.001,
    -0.005, -0.013, -0.022, -0.007, 0.035, 0.059, 0.035, -0.007, -0.022, -0.013, -0.005,
    -0.006, -0.015, -0.010, 0.035, 0.111, 0.152, 0.111, 0.035, -0.010, -0.015, -0.006,
    -0.006, -0.014, -0.001, 0.059, 0.152, 0.202, 0.152, 0.059, -0.001, -0.014, -0.006,
    -0.006, -0.015, -0.010, 0.035, 0.111, 0.152, 0.111, 0.035, -0.010, -0.015, -0.006,
    -0.005, -0.013, -0.022, -0.007, 0.035, 0.059, 0.035, -0.007, -0.022, -0.013, -0.005,
    0.001, -0.001, -0.015, -0.022, -0.010, -0.001, -0.010, -0.022, -0.015, -0.001, 0.001,
    0.000, 0.009, -0.001, -0.013, -0.015, -0.014, -0.015, -0.013, -0.001, 0.009, 0.000,
    -0.017, 0.000, 0.001, -0.005, -0.006, -0.006, -0.006, -0.005, 0.001, 0.000, -0.017,
];

#[rustfmt::skip]
const STEM_K3: [f64; 9] = [
    0.108, 0.111, 0.108,
    0.111, 0.109, 0.111,
    0.108, 0.111, 0.108,
];

#[rustfmt::skip]
const STEM_K5: [f64; 25] = [
    0.004, 0.026, 0.040, 0.026, 0.004,
    0.026, 0.057, 0.089, 0.057, 0.026,
    0.040, 0.089, 0.089, 0.089, 0.040,
    0.026, 0.057, 0.089, 0.057, 0.026,
    0.004, 0.026, 0.040, 0.026, 0.004,
];

#[rustfmt::skip]
const STEM_K7: [f64; 49] = [
    -0.016, -0.004, 0.007, 0.012, 0.007, -0.004, -0.016,
    -0.004, 0.007, 0.026, 0.035, 0.026, 0.007, -0.004,
    0.007, 0.026, 0.057, 0.071, 0.057, 0.026, 0.007,
    0.012, 0.035, 0.071, 0.089, 0.071, 0.035, 0.012,
    0.007, 0.026, 0.057, 0.071, 0.057, 0.026, 0.007,
    -0.004, 0.007, 0.026, 0.035, 0.026, 0.007, -0.004,
    -0.016, -0.004, 0.007, 0.012, 0.007, -0.004, -0.016,
];

#[rustfmt::skip]
const STEM_K11: [f64; 121] = [
    0.012, 0.003, -0.001, -0.002, 0.000, 0.002, 0.000, -0.002, -0.001, 0.003, 0.012,
    0.003, -0.006, -0.009, -0.007, -0.001, 0.005, -0.001, -0.007, -0.009, -0.006, 0.003,
    -0.001, -0.009, -0.010, -0.001, 0.007, 0.013, 0.007, -0.001, -0.010, -0.009, -0.001,
    -0.002, -0.007, -0.001, 0.012, 0.029, 0.038, 0.029, 0.012, -0.001, -0.007, -0.002,
    0.000, -0.001, 0.007, 0.029, 0.055, 0.070, 0.055, 0.029, 0.007, -0.001, 0.000,
    0.002, 0.005, 0.013, 0.038, 0.070, 0.089, 0.070, 0.038, 0.013, 0.005, 0.002,
    0.000, -0.001, 0.007, 0.029, 0.055, 0.070, 0.055, 0.029, 0.007, -0.001, 0.000,
    -0.002, -0.007, -0.001, 0.012, 0.029, 0.038, 0.029, 0.012, -0.001, -0.007, -0.002,
    -0.001, -0.009, -0.010, -0.001, 0.007, 0.013, 0.007, -0.001, -0.010, -0.009, -0.001,
    0.003, -0.006, -0.009, -0.007, -0.001, 0.005, -0.001, -0.007, -0.009, -0.006, 0.003,
    0.012, 0.003, -0.001, -0.002, 0.000, 0.002, 0.000, -0.002, -0.001, 0.003, 0.012,
];

#[rustfmt::skip]
const TEM_STEM_K3: [f64; 9] = [
    0.093, 0.124, 0.093,
    0.124, 0.149, 0.124,
    0.093, 0.124, 0.093,
];

#[rustfmt::skip]
const TEM_STEM_K5: [f64; 25] = [
    -0.061, 0.016, 0.042, 0.016, -0.061,
    0.016, 0.091, 0.116, 0.091, 0.016,
    0.042, 0.116, 0.142, 0.116, 0.042,
    0.016, 0.091, 0.116, 0.091, 0.016,
    -0.061, 0.016, 0.042, 0.016, -0.061,
];

#[rustfmt::skip]
const TEM_STEM_K7: [f64; 49] = [
    -0.077, -0.037, -0.008, 0.001, -0.008, -0.037, -0.077,
    -0.037, 0.016, 0.052, 0.063, 0.052, 0.016, -0.037,
    -0.008, 0.052, 0.095, 0.110, 0.095, 0.052, -0.008,
    0.001, 0.063, 0.110, 0.127, 0.110, 0.063, 0.001,
    -0.008, 0.052, 0.095, 0.110, 0.095, 0.052, -0.008,
    -0.037, 0.016, 0.052, 0.063, 0.052, 0.016, -0.037,
    -0.077, -0.037, -0.008, 0.001, -0.008, -0.037, -0.077,
];

#[rustfmt::skip]
const TEM_STEM_K11: [f64; 121] = [
    0.005, -0.003, -0.015, -0.022, -0.019, 0.017, -0.019, -0.022, -0.015, -0.003, 0.005,
    -0.003, -0.008, -0.013, -0.013, -0.004, 0.001, -0.004, -0.013, -0.013, -0.008, -0.003,
    -0.015, -0.013, -0.011, -0.001, 0.017, 0.025, 0.017, -0.001, -0.011, -0.013, -0.015,
    -0.022, -0.013, -0.001, 0.021, 0.050, 0.062, 0.050, 0.021, -0.001, -0.013, -0.022,
    -0.019, -0.004, 0.017, 0.050, 0.088, 0.105, 0.088, 0.050, 0.017, -0.004, -0.019,
    0.017, 0.001, 0.025, 0.062, 0.105, 0.123, 0.105, 0.062, 0.025, 0.001, 0.017,
    -0.019, -0.004, 0.017, 0.050, 0.088, 0.105, 0.088, 0.050, 0.017, -0.004, -0.019,
    -0.022, -0.013, -0.001, 0.021, 0.050, 0.062, 0.050, 0.021, -0.001, -0.013, -0.022,
    -0.015, -0.013, -0.011, -0.001, 0.017, 0.025, 0.017, -0.001, -0.011, -0.013, -0.015,
    -0.003, -0.008, -0.013, -0.013, -0.004, 0.001, -0.004, -0.013, -0.013, -0.008, -0.003,
    0.005, -0.003, -0.015, -0.022, -0.019, 0.017, -0.019, -0.022, -0.015, -0.003, 0.005,
];

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tem_and_stem_3x3() {
        let k = get_kernel(Modality::Tem, 3).unwrap();
        assert_eq!((k.at(1, 1), k.at(0, 0), k.at(0, 1)), (0.218, 0.064, 0.135));
        let k = get_kernel(Modality::Stem, 3).unwrap();
        assert_eq!((k.at(1, 1), k.at(0, 0), k.at(0, 1)), (0.109, 0.108, 0.111));
    }

    #[test]
    fn sums_of_3x3() {
        let sum = |m| get_kernel(m, 3).unwrap().weights.iter().sum::<f64>();
        assert!((sum(Modality::Tem) - 1.014).abs() < 1e-9);
        assert!((sum(Modality::Stem) - 0.985).abs() < 1e-9);
    }

    #[test]
    fn fifteen_is_missing() {
        let err = get_kernel(Modality::Tem, 15).unwrap_err();
        match err {
            Error::NotFound(msg) => assert!(msg.contains("tem-k3") && msg.contains("temstem-k11")),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn all_shipped_are_symmetric() {
        let all = all_kernels();
        assert_eq!(all.len(), 12);
        for k in all {
            assert_eq!(k.weights.len(), k.size * k.size);
            assert!(k.is_fourfold_symmetric(), "{}", k.short_name());
            assert_eq!(get_kernel(k.modality, k.size).unwrap(), k);
        }
        let k = get_kernel(Modality::TemStem, 11).unwrap();
        assert_eq!(k.at(1, 10), -0.003);
        assert_ne!(k.at(1, 10), TEM_STEM_K11_RAW_ENTRY);
    }

    #[test]
    fn names_round_trip() {
        let k = kernel_by_name("stem-k5").unwrap();
        assert_eq!(k.at(2, 2), 0.089);
        assert!(kernel_by_name("stem-k4").is_err());
        assert!(kernel_by_name("xyz").is_err());
        assert_eq!("TEM+STEM".parse::<Modality>().unwrap(), Modality::TemStem);
    }

    #[test]
    fn inventory_counts() {
        let inv = inventory();
        let count = |kind| inv.iter().filter(|e| e.kind == kind).count();
        assert_eq!(count(ModelKind::Autoencoder), 14);
        assert_eq!(count(ModelKind::Kernel), 15);
        assert_eq!(count(ModelKind::Mlp), 14);
        assert!(!inv.iter().any(|e| e.kind == ModelKind::Mlp
            && e.modality == Modality::Stem
            && e.hidden_layers == 2));
        let depths: Vec<usize> = inv
            .iter()
            .filter(|e| e.kind == ModelKind::Autoencoder && e.modality == Modality::TemStem)
            .map(|e| e.size_or_depth)
            .collect();
        assert_eq!(depths, vec![1, 2, 4, 8, 16, 32, 64]);
    }
}
