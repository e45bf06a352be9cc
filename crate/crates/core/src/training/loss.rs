use crate::error::{Error, Result};
use crate::tensor::Image;

/// Mean squared error with a square-root branch for large errors:
/// `loss = mse` when `mse < 1`, otherwise `sqrt(mse)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HuberMse {
    pub loss: f64,
    pub mse: f64,
}

/// Maps an MSE onto the huberized loss.
#[inline]
pub fn huberize(mse: f64) -> f64 {
    if mse < 1.0 {
        mse
    } else {
        mse.sqrt()
    }
}

/// `d loss / d mse`.
#[inline]
pub fn huberize_derivative(mse: f64) -> f64 {
    if mse < 1.0 {
        1.0
    } else {
        0.5 / mse.sqrt()
    }
}

pub fn mse(output: &Image, target: &Image) -> Result<f64> {
    if output.height() != target.height() || output.width() != target.width() {
        return Err(Error::Size(format!(
            "output {}x{} and target {}x{} differ",
            output.height(),
            output.width(),
            target.height(),
            target.width()
        )));
    }
    let sum: f64 = output
        .data()
        .iter()
        .zip(target.data())
        .map(|(a, b)| (a - b) * (a - b))
        .sum();
    Ok(sum / output.len() as f64)
}

pub fn huber_mse_loss(output: &Image, target: &Image) -> Result<HuberMse> {
    let mse = mse(output, target)?;
    Ok(HuberMse {
        loss: huberize(mse),
        mse,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn branches() {
        assert_eq!(huberize(0.25), 0.25);
        assert_eq!(huberize(4.0), 2.0);
        assert_eq!(huberize(1.0), 1.0);
        assert!((huberize(1.0 - 1e-12) - 1.0).abs() < 1e-11);
    }

    #[test]
    fn image_loss() {
        let a = Image::new(1, 2, vec![0.0, 0.0]).unwrap();
        let b = Image::new(1, 2, vec![0.5, -0.5]).unwrap();
        assert_eq!(huber_mse_loss(&a, &b).unwrap(), HuberMse { loss: 0.25, mse: 0.25 });
        let c = Image::new(1, 2, vec![2.0, -2.0]).unwrap();
        assert_eq!(huber_mse_loss(&a, &c).unwrap(), HuberMse { loss: 2.0, mse: 4.0 });
        assert_eq!(huber_mse_loss(&b, &b).unwrap(), HuberMse { loss: 0.0, mse: 0.0 });
        assert!(huber_mse_loss(&a, &Image::zeros(2, 1)).is_err());
    }
}
