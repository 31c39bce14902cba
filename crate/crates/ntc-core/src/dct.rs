//! Orthonormal 2-D type-II discrete cosine transform for small blocks.
//!
//! Filters are trained in the DCT domain; because the transform is
//! orthonormal, the inverse is the transpose and gradients map back through
//! the forward transform. Blocks here are at most 9x9, so plain
//! matrix application is all that is needed.

/// Cached DCT basis for a fixed block size.
#[derive(Debug, Clone)]
pub struct Dct2 {
    height: usize,
    width: usize,
    basis_h: Vec<f64>,
    basis_w: Vec<f64>,
}

/// Orthonormal DCT-II matrix, row k: s_k * cos(pi*(2n+1)*k / (2N)).
fn dct_matrix(n: usize) -> Vec<f64> {
    let mut m = vec![0.0; n * n];
    for k in 0..n {
        let scale = if k == 0 {
            (1.0 / n as f64).sqrt()
        } else {
            (2.0 / n as f64).sqrt()
        };
        for t in 0..n {
            m[k * n + t] =
                scale * (std::f64::consts::PI * (2 * t + 1) as f64 * k as f64 / (2 * n) as f64).cos();
        }
    }
    m
}

impl Dct2 {
    pub fn new(height: usize, width: usize) -> Dct2 {
        Dct2 {
            height,
            width,
            basis_h: dct_matrix(height),
            basis_w: dct_matrix(width),
        }
    }

    pub fn block_len(&self) -> usize {
        self.height * self.width
    }

    /// Spatial block -> DCT coefficients (C = D_h X D_w^T).
    pub fn forward(&self, spatial: &[f64]) -> Vec<f64> {
        self.apply(spatial, false)
    }

    /// DCT coefficients -> spatial block (X = D_h^T C D_w).
    pub fn inverse(&self, coeffs: &[f64]) -> Vec<f64> {
        self.apply(coeffs, true)
    }

    fn apply(&self, block: &[f64], transpose: bool) -> Vec<f64> {
        assert_eq!(block.len(), self.block_len());
        let (h, w) = (self.height, self.width);
        // rows: tmp = B_h (.) block
        let mut tmp = vec![0.0; h * w];
        for k in 0..h {
            for x in 0..w {
                let mut acc = 0.0;
                for t in 0..h {
                    let b = if transpose {
                        self.basis_h[t * h + k]
                    } else {
                        self.basis_h[k * h + t]
                    };
                    acc += b * block[t * w + x];
                }
                tmp[k * w + x] = acc;
            }
        }
        // columns: out = tmp (.) B_w^T
        let mut out = vec![0.0; h * w];
        for y in 0..h {
            for k in 0..w {
                let mut acc = 0.0;
                for t in 0..w {
                    let b = if transpose {
                        self.basis_w[t * w + k]
                    } else {
                        self.basis_w[k * w + t]
                    };
                    acc += b * tmp[y * w + t];
                }
                out[y * w + k] = acc;
            }
        }
        out
    }
}
