//! Generalized divisive normalization and its approximate inverse.
//!
//! GDN divides each channel by a learned combination of all channels'
//! squared responses at the same spatial location:
//!
//!   u_i = w_i / (beta_i + sum_j gamma_ij w_j^2)^(1/2)
//!
//! IGDN is the one-iteration fixed-point inverse with its own parameters:
//!
//!   w_i = u_i * (beta_i + sum_j gamma_ij u_j^2)^(1/2)
//!
//! gamma is symmetric; it is stored as the packed upper triangle so the
//! symmetry holds structurally. Gradients w.r.t. an off-diagonal packed
//! entry accumulate both (i,j) and (j,i) contributions of the full-matrix
//! derivative.

use crate::error::{NtcError, Result};
use crate::tensor::Tensor;

/// Per-layer normalization parameters: beta (length C) and symmetric gamma
/// (C x C, packed upper triangle).
#[derive(Debug, Clone, PartialEq)]
pub struct GdnParams {
    channels: usize,
    beta: Vec<f64>,
    gamma_packed: Vec<f64>,
}

#[inline]
fn tri_index(channels: usize, i: usize, j: usize) -> usize {
    let (a, b) = if i <= j { (i, j) } else { (j, i) };
    a * channels - a * (a + 1) / 2 + b
}

impl GdnParams {
    /// Packed triangle length for `channels` channels.
    pub fn packed_len(channels: usize) -> usize {
        channels * (channels + 1) / 2
    }

    /// Build from beta and a full gamma matrix (row-major, must be symmetric
    /// and nonnegative).
    pub fn from_full(beta: Vec<f64>, gamma: &[f64]) -> Result<GdnParams> {
        let channels = beta.len();
        if gamma.len() != channels * channels {
            return Err(NtcError::Parameter(format!(
                "gamma length {} does not match {} channels",
                gamma.len(),
                channels
            )));
        }
        for i in 0..channels {
            for j in 0..channels {
                if (gamma[i * channels + j] - gamma[j * channels + i]).abs() > 0.0 {
                    return Err(NtcError::Parameter(format!(
                        "gamma is not symmetric at ({i},{j})"
                    )));
                }
            }
        }
        let mut packed = vec![0.0; Self::packed_len(channels)];
        for i in 0..channels {
            for j in i..channels {
                packed[tri_index(channels, i, j)] = gamma[i * channels + j];
            }
        }
        GdnParams::from_packed(beta, packed)
    }

    /// Build from beta and the packed upper triangle of gamma.
    pub fn from_packed(beta: Vec<f64>, gamma_packed: Vec<f64>) -> Result<GdnParams> {
        let channels = beta.len();
        if gamma_packed.len() != Self::packed_len(channels) {
            return Err(NtcError::Parameter(format!(
                "packed gamma length {} does not match {} channels",
                gamma_packed.len(),
                channels
            )));
        }
        if beta.iter().any(|&b| b.is_nan() || b < 0.0) {
            return Err(NtcError::Parameter("beta entries must be >= 0".into()));
        }
        if gamma_packed.iter().any(|&g| g.is_nan() || g < 0.0) {
            return Err(NtcError::Parameter("gamma entries must be >= 0".into()));
        }
        Ok(GdnParams {
            channels,
            beta,
            gamma_packed,
        })
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn beta(&self) -> &[f64] {
        &self.beta
    }

    pub fn gamma_packed(&self) -> &[f64] {
        &self.gamma_packed
    }

    #[inline]
    pub fn gamma(&self, i: usize, j: usize) -> f64 {
        self.gamma_packed[tri_index(self.channels, i, j)]
    }
}

/// Gradients w.r.t. GDN/IGDN parameters, gamma in packed-triangle layout.
#[derive(Debug, Clone)]
pub struct GdnGrads {
    pub beta: Vec<f64>,
    pub gamma_packed: Vec<f64>,
}

fn check_channels(t: &Tensor, p: &GdnParams) -> Result<()> {
    if t.channels() != p.channels() {
        return Err(NtcError::Parameter(format!(
            "tensor has {} channels but params have {}",
            t.channels(),
            p.channels()
        )));
    }
    Ok(())
}

/// Denominators d_i = beta_i + sum_j gamma_ij v_j^2 at one spatial location.
/// `sq` holds the squared channel values.
#[inline]
fn denominators(p: &GdnParams, sq: &[f64], d: &mut [f64]) -> Result<()> {
    let c = p.channels;
    for i in 0..c {
        let mut acc = p.beta[i];
        for j in 0..c {
            acc += p.gamma(i, j) * sq[j];
        }
        if acc <= 0.0 {
            return Err(NtcError::Numeric(format!(
                "non-positive normalization denominator {acc} in channel {i}"
            )));
        }
        d[i] = acc;
    }
    Ok(())
}

/// Gather channel values at spatial index `s` into `buf`.
#[inline]
fn gather(t: &Tensor, s: usize, buf: &mut [f64]) {
    let plane = t.height() * t.width();
    let data = t.data();
    for (c, v) in buf.iter_mut().enumerate() {
        *v = data[c * plane + s];
    }
}

pub fn gdn_forward(w: &Tensor, p: &GdnParams) -> Result<Tensor> {
    check_channels(w, p)?;
    let c = p.channels;
    let plane = w.height() * w.width();
    let mut out = Tensor::zeros(c, w.height(), w.width());
    let mut wv = vec![0.0; c];
    let mut sq = vec![0.0; c];
    let mut d = vec![0.0; c];
    for s in 0..plane {
        gather(w, s, &mut wv);
        for j in 0..c {
            sq[j] = wv[j] * wv[j];
        }
        denominators(p, &sq, &mut d)?;
        for i in 0..c {
            out.data_mut()[i * plane + s] = wv[i] / d[i].sqrt();
        }
    }
    Ok(out)
}

pub fn gdn_backward(
    w: &Tensor,
    p: &GdnParams,
    grad_out: &Tensor,
) -> Result<(Tensor, GdnGrads)> {
    check_channels(w, p)?;
    if grad_out.shape() != w.shape() {
        return Err(NtcError::Parameter(format!(
            "grad_out shape {:?} does not match input {:?}",
            grad_out.shape(),
            w.shape()
        )));
    }
    let c = p.channels;
    let plane = w.height() * w.width();
    let mut grad_w = Tensor::zeros(c, w.height(), w.width());
    let mut grad_beta = vec![0.0; c];
    let mut grad_gamma = vec![0.0; GdnParams::packed_len(c)];
    let mut wv = vec![0.0; c];
    let mut sq = vec![0.0; c];
    let mut d = vec![0.0; c];
    let mut g = vec![0.0; c];
    let mut e = vec![0.0; c];
    for s in 0..plane {
        gather(w, s, &mut wv);
        gather(grad_out, s, &mut g);
        for j in 0..c {
            sq[j] = wv[j] * wv[j];
        }
        denominators(p, &sq, &mut d)?;
        // e_i = g_i w_i d_i^{-3/2}
        for i in 0..c {
            e[i] = g[i] * wv[i] / (d[i] * d[i].sqrt());
        }
        for k in 0..c {
            let mut coupled = 0.0;
            for i in 0..c {
                coupled += e[i] * p.gamma(i, k);
            }
            grad_w.data_mut()[k * plane + s] = g[k] / d[k].sqrt() - wv[k] * coupled;
        }
        for i in 0..c {
            grad_beta[i] -= 0.5 * e[i];
            // diagonal, then both off-diagonal contributions onto the packed entry
            grad_gamma[tri_index(c, i, i)] -= 0.5 * e[i] * sq[i];
            for j in (i + 1)..c {
                grad_gamma[tri_index(c, i, j)] -= 0.5 * (e[i] * sq[j] + e[j] * sq[i]);
            }
        }
    }
    Ok((
        grad_w,
        GdnGrads {
            beta: grad_beta,
            gamma_packed: grad_gamma,
        },
    ))
}

pub fn igdn_forward(u: &Tensor, p: &GdnParams) -> Result<Tensor> {
    check_channels(u, p)?;
    let c = p.channels;
    let plane = u.height() * u.width();
    let mut out = Tensor::zeros(c, u.height(), u.width());
    let mut uv = vec![0.0; c];
    let mut sq = vec![0.0; c];
    let mut d = vec![0.0; c];
    for s in 0..plane {
        gather(u, s, &mut uv);
        for j in 0..c {
            sq[j] = uv[j] * uv[j];
        }
        denominators(p, &sq, &mut d)?;
        for i in 0..c {
            out.data_mut()[i * plane + s] = uv[i] * d[i].sqrt();
        }
    }
    Ok(out)
}

pub fn igdn_backward(
    u: &Tensor,
    p: &GdnParams,
    grad_out: &Tensor,
) -> Result<(Tensor, GdnGrads)> {
    check_channels(u, p)?;
    if grad_out.shape() != u.shape() {
        return Err(NtcError::Parameter(format!(
            "grad_out shape {:?} does not match input {:?}",
            grad_out.shape(),
            u.shape()
        )));
    }
    let c = p.channels;
    let plane = u.height() * u.width();
    let mut grad_u = Tensor::zeros(c, u.height(), u.width());
    let mut grad_beta = vec![0.0; c];
    let mut grad_gamma = vec![0.0; GdnParams::packed_len(c)];
    let mut uv = vec![0.0; c];
    let mut sq = vec![0.0; c];
    let mut d = vec![0.0; c];
    let mut g = vec![0.0; c];
    let mut f = vec![0.0; c];
    for s in 0..plane {
        gather(u, s, &mut uv);
        gather(grad_out, s, &mut g);
        for j in 0..c {
            sq[j] = uv[j] * uv[j];
        }
        denominators(p, &sq, &mut d)?;
        // f_i = g_i u_i d_i^{-1/2}
        for i in 0..c {
            f[i] = g[i] * uv[i] / d[i].sqrt();
        }
        for k in 0..c {
            let mut coupled = 0.0;
            for i in 0..c {
                coupled += f[i] * p.gamma(i, k);
            }
            grad_u.data_mut()[k * plane + s] = g[k] * d[k].sqrt() + uv[k] * coupled;
        }
        for i in 0..c {
            grad_beta[i] += 0.5 * f[i];
            grad_gamma[tri_index(c, i, i)] += 0.5 * f[i] * sq[i];
            for j in (i + 1)..c {
                grad_gamma[tri_index(c, i, j)] += 0.5 * (f[i] * sq[j] + f[j] * sq[i]);
            }
        }
    }
    Ok((
        grad_u,
        GdnGrads {
            beta: grad_beta,
            gamma_packed: grad_gamma,
        },
    ))
}
