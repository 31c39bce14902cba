//! Regular down- and upsampling on the pixel grid.
//!
//! Downsampling keeps every `factor`-th sample starting at offset 0;
//! upsampling places samples back on the same lattice and fills the rest
//! with zeros. The two maps are adjoint to each other, which is what the
//! transform backward passes rely on.

use crate::error::{NtcError, Result};
use crate::tensor::Tensor;

/// Keep samples at positions (factor·m, factor·n).
pub fn downsample(input: &Tensor, factor: usize) -> Result<Tensor> {
    if factor == 0 {
        return Err(NtcError::Parameter("downsample factor must be >= 1".into()));
    }
    if !input.height().is_multiple_of(factor) || !input.width().is_multiple_of(factor) {
        return Err(NtcError::Parameter(format!(
            "dims {}x{} not divisible by downsampling factor {}",
            input.height(),
            input.width(),
            factor
        )));
    }
    let (c, h, w) = input.shape();
    Ok(Tensor::from_fn(c, h / factor, w / factor, |i, m, n| {
        input.get(i, factor * m, factor * n)
    }))
}

/// Insert samples at positions (factor·m, factor·n), zeros elsewhere.
pub fn upsample(input: &Tensor, factor: usize) -> Result<Tensor> {
    if factor == 0 {
        return Err(NtcError::Parameter("upsample factor must be >= 1".into()));
    }
    let (c, h, w) = input.shape();
    let mut out = Tensor::zeros(c, h * factor, w * factor);
    for i in 0..c {
        for m in 0..h {
            for n in 0..w {
                out.set(i, factor * m, factor * n, input.get(i, m, n));
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn factor_one_is_identity() {
        let t = Tensor::from_fn(2, 3, 3, |c, y, x| (c * 9 + y * 3 + x) as f64);
        assert_eq!(downsample(&t, 1).unwrap(), t);
        assert_eq!(upsample(&t, 1).unwrap(), t);
    }

    #[test]
    fn downsample_keeps_lattice_samples() {
        // 4x4 values 0..15 row-major, factor 2 -> [[0,2],[8,10]]
        let t = Tensor::from_vec(1, 4, 4, (0..16).map(|v| v as f64).collect()).unwrap();
        let d = downsample(&t, 2).unwrap();
        assert_eq!(d.data(), &[0.0, 2.0, 8.0, 10.0]);
    }

    #[test]
    fn upsample_inserts_zeros() {
        let t = Tensor::from_vec(1, 1, 1, vec![5.0]).unwrap();
        let u = upsample(&t, 2).unwrap();
        assert_eq!(u.data(), &[5.0, 0.0, 0.0, 0.0]);
    }

    #[test]
    fn down_of_up_is_identity() {
        for factor in [1usize, 2, 4] {
            let t = Tensor::from_fn(2, 3, 2, |c, y, x| (1 + c * 6 + y * 2 + x) as f64 * 0.25);
            let roundtrip = downsample(&upsample(&t, factor).unwrap(), factor).unwrap();
            assert_eq!(roundtrip, t);
        }
    }

    #[test]
    fn rejects_non_divisible_dims() {
        let t = Tensor::zeros(1, 5, 4);
        assert!(downsample(&t, 2).is_err());
    }
}
