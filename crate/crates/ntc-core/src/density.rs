//! Non-parametric entropy models: one piecewise-linear density per code
//! channel, fitted like a one-dimensional histogram, plus the
//! integer-support PMF obtained by sampling the density at the integers.
//!
//! The grid uses 10 sampling points per unit interval. The origin is kept
//! as an integer count of tenths so that integers always land exactly on
//! grid points; this is what makes the interpolation identity between the
//! continuous density and the discrete PMF hold by construction.

use crate::error::{NtcError, Result};

/// Floor applied to density and PMF evaluations so rates and coder
/// probabilities stay finite.
pub const DENSITY_EPS: f64 = 1e-9;

/// Grid resolution: sampling points per unit interval.
pub const GRID_PER_UNIT: i64 = 10;

const LN2: f64 = std::f64::consts::LN_2;

/// Objective used by [`MarginalDensity::fit_step`]. The default follows the
/// training recipe literally (gradient of the negative expected likelihood,
/// not log-likelihood); the log-likelihood variant is available as a
/// documented alternative.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum FitObjective {
    #[default]
    Likelihood,
    LogLikelihood,
}

/// Piecewise-linear model of one channel's relaxed marginal density.
#[derive(Debug, Clone, PartialEq)]
pub struct MarginalDensity {
    /// Grid origin in tenths: grid point k sits at (left_tenths + k) / 10.
    left_tenths: i64,
    /// Density values at the grid points, >= 0.
    samples: Vec<f64>,
    channel_index: usize,
}

/// Result of evaluating the log2-likelihood at a point.
#[derive(Debug, Clone, Copy)]
pub struct LikelihoodEval {
    /// log2 of the (floored) density value.
    pub log2_p: f64,
    /// Derivative of log2 p with respect to the evaluation point.
    pub d_dt: f64,
    /// Sparse gradient w.r.t. the two bracketing samples:
    /// (first sample index, d/d s_k, d/d s_{k+1}); None outside the grid or
    /// on a floored segment.
    pub d_dsamples: Option<(usize, f64, f64)>,
}

impl MarginalDensity {
    /// Uniform density over [left, right] (snapped outward to the grid).
    pub fn uniform(left: f64, right: f64, channel_index: usize) -> Result<MarginalDensity> {
        if right <= left || right.is_nan() || left.is_nan() {
            return Err(NtcError::Parameter(format!(
                "invalid density range [{left}, {right}]"
            )));
        }
        let left_tenths = (left * GRID_PER_UNIT as f64).floor() as i64;
        let right_tenths = (right * GRID_PER_UNIT as f64).ceil() as i64;
        let n = (right_tenths - left_tenths + 1) as usize;
        let mut d = MarginalDensity {
            left_tenths,
            samples: vec![1.0; n],
            channel_index,
        };
        d.renormalize();
        Ok(d)
    }

    pub fn channel_index(&self) -> usize {
        self.channel_index
    }

    pub fn left(&self) -> f64 {
        self.left_tenths as f64 / GRID_PER_UNIT as f64
    }

    pub fn right(&self) -> f64 {
        (self.left_tenths + self.samples.len() as i64 - 1) as f64 / GRID_PER_UNIT as f64
    }

    /// Grid spacing (exactly one tenth).
    pub fn spacing(&self) -> f64 {
        1.0 / GRID_PER_UNIT as f64
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub(crate) fn left_tenths(&self) -> i64 {
        self.left_tenths
    }

    /// Rebuild from serialized fields.
    pub fn from_parts(left_tenths: i64, samples: Vec<f64>, channel_index: usize) -> Result<MarginalDensity> {
        if samples.len() < 2 {
            return Err(NtcError::Parameter("density needs at least two samples".into()));
        }
        if samples.iter().any(|&s| s.is_nan() || s < 0.0 || !s.is_finite()) {
            return Err(NtcError::Parameter("density samples must be finite and >= 0".into()));
        }
        Ok(MarginalDensity {
            left_tenths,
            samples,
            channel_index,
        })
    }

    /// Fractional grid position of `t`, or None outside [left, right].
    #[inline]
    fn grid_pos(&self, t: f64) -> Option<f64> {
        let pos = t * GRID_PER_UNIT as f64 - self.left_tenths as f64;
        if pos < 0.0 || pos > (self.samples.len() - 1) as f64 || !pos.is_finite() {
            None
        } else {
            Some(pos)
        }
    }

    /// Linear interpolation between grid samples; the tail floor applies
    /// outside the grid and wherever the interpolated value dips below it.
    pub fn eval(&self, t: f64) -> f64 {
        match self.grid_pos(t) {
            None => DENSITY_EPS,
            Some(pos) => {
                let mut k = pos.floor() as usize;
                let mut frac = pos - k as f64;
                if k >= self.samples.len() - 1 {
                    k = self.samples.len() - 2;
                    frac = 1.0;
                }
                let v = self.samples[k] * (1.0 - frac) + self.samples[k + 1] * frac;
                v.max(DENSITY_EPS)
            }
        }
    }

    /// log2-likelihood with its derivative in `t` and the sparse gradient
    /// w.r.t. the bracketing samples.
    pub fn log2_likelihood_and_grads(&self, t: f64) -> LikelihoodEval {
        match self.grid_pos(t) {
            None => LikelihoodEval {
                log2_p: DENSITY_EPS.log2(),
                d_dt: 0.0,
                d_dsamples: None,
            },
            Some(pos) => {
                let mut k = pos.floor() as usize;
                let mut frac = pos - k as f64;
                if k >= self.samples.len() - 1 {
                    k = self.samples.len() - 2;
                    frac = 1.0;
                }
                let (a, b) = (self.samples[k], self.samples[k + 1]);
                let v = a * (1.0 - frac) + b * frac;
                if v <= DENSITY_EPS {
                    return LikelihoodEval {
                        log2_p: DENSITY_EPS.log2(),
                        d_dt: 0.0,
                        d_dsamples: None,
                    };
                }
                let inv = 1.0 / (v * LN2);
                LikelihoodEval {
                    log2_p: v.log2(),
                    d_dt: (b - a) * GRID_PER_UNIT as f64 * inv,
                    d_dsamples: Some((k, (1.0 - frac) * inv, frac * inv)),
                }
            }
        }
    }

    /// Trapezoidal integral over [left, right].
    pub fn integral(&self) -> f64 {
        let sum: f64 = self.samples.iter().sum();
        let ends = 0.5 * (self.samples[0] + self.samples[self.samples.len() - 1]);
        (sum - ends) * self.spacing()
    }

    /// Clamp samples to >= 0 and rescale so the trapezoidal integral is 1.
    pub fn renormalize(&mut self) {
        for s in &mut self.samples {
            if s.is_nan() || *s < 0.0 {
                *s = 0.0;
            }
        }
        let integral = self.integral();
        if integral <= 0.0 {
            let n = self.samples.len();
            let uniform = 1.0 / ((n - 1) as f64 * self.spacing());
            for s in &mut self.samples {
                *s = uniform;
            }
            return;
        }
        let inv = 1.0 / integral;
        for s in &mut self.samples {
            *s *= inv;
        }
    }

    /// One plain SGD step on the fitting objective over a batch of observed
    /// values, followed by the nonnegativity clamp and renormalization.
    /// Values outside the grid contribute nothing to the gradient.
    pub fn fit_step(&mut self, batch: &[f64], step_size: f64, objective: FitObjective) {
        if !batch.is_empty() {
            let scale = step_size / batch.len() as f64;
            for &t in batch {
                if let Some(pos) = self.grid_pos(t) {
                    let mut k = pos.floor() as usize;
                    let mut frac = pos - k as f64;
                    if k >= self.samples.len() - 1 {
                        k = self.samples.len() - 2;
                        frac = 1.0;
                    }
                    match objective {
                        FitObjective::Likelihood => {
                            self.samples[k] += scale * (1.0 - frac);
                            self.samples[k + 1] += scale * frac;
                        }
                        FitObjective::LogLikelihood => {
                            let v = (self.samples[k] * (1.0 - frac) + self.samples[k + 1] * frac)
                                .max(DENSITY_EPS);
                            let inv = 1.0 / (v * LN2);
                            self.samples[k] += scale * (1.0 - frac) * inv;
                            self.samples[k + 1] += scale * frac * inv;
                        }
                    }
                }
            }
        }
        self.renormalize();
    }

    /// Move the grid to cover [min - 1, max + 1] (rounded outward to grid
    /// points) and resample the current density onto it by linear
    /// interpolation, then renormalize.
    pub fn adapt_range(&mut self, observed_min: f64, observed_max: f64) -> Result<()> {
        if !observed_min.is_finite() || !observed_max.is_finite() || observed_min > observed_max {
            return Err(NtcError::Parameter(format!(
                "invalid observed range [{observed_min}, {observed_max}]"
            )));
        }
        let new_left = ((observed_min - 1.0) * GRID_PER_UNIT as f64).floor() as i64;
        let new_right = ((observed_max + 1.0) * GRID_PER_UNIT as f64).ceil() as i64;
        let n = (new_right - new_left + 1) as usize;
        let mut samples = vec![0.0; n];
        for (k, s) in samples.iter_mut().enumerate() {
            let t = (new_left + k as i64) as f64 / GRID_PER_UNIT as f64;
            *s = self.eval(t);
        }
        self.left_tenths = new_left;
        self.samples = samples;
        self.renormalize();
        Ok(())
    }

    /// Sample the density at the integers inside its range, giving the PMF
    /// the entropy coder works with.
    pub fn discretize(&self) -> Result<DiscretePmf> {
        let right_tenths = self.left_tenths + self.samples.len() as i64 - 1;
        let q_min = div_ceil(self.left_tenths, GRID_PER_UNIT);
        let q_max = div_floor(right_tenths, GRID_PER_UNIT);
        if q_min > q_max {
            return Err(NtcError::Config(
                "density range contains no integer; cannot build a PMF".into(),
            ));
        }
        let probs: Vec<f64> = (q_min..=q_max)
            .map(|n| {
                let idx = (n * GRID_PER_UNIT - self.left_tenths) as usize;
                self.samples[idx].max(DENSITY_EPS)
            })
            .collect();
        DiscretePmf::new(q_min as i32, probs)
    }

    /// Differential entropy of the piecewise-linear density in bits,
    /// integrated in closed form per segment (samples floored at eps).
    pub fn differential_entropy_bits(&self) -> f64 {
        let h = self.spacing();
        let mut nats = 0.0;
        for pair in self.samples.windows(2) {
            let a = pair[0].max(DENSITY_EPS);
            let b = pair[1].max(DENSITY_EPS);
            nats += if (b - a).abs() < 1e-15 {
                h * a * a.ln()
            } else {
                let f = |u: f64| 0.5 * u * u * u.ln() - 0.25 * u * u;
                h / (b - a) * (f(b) - f(a))
            };
        }
        -nats / LN2
    }
}

fn div_ceil(a: i64, b: i64) -> i64 {
    let d = a.div_euclid(b);
    if a.rem_euclid(b) != 0 {
        d + 1
    } else {
        d
    }
}

fn div_floor(a: i64, b: i64) -> i64 {
    a.div_euclid(b)
}

/// Probability mass function over the integer support [q_min, q_max].
#[derive(Debug, Clone, PartialEq)]
pub struct DiscretePmf {
    q_min: i32,
    q_max: i32,
    probs: Vec<f64>,
    mode: i32,
}

impl DiscretePmf {
    /// Normalize `probs` (indexed from q_min) to sum 1; the mode is the
    /// argmax, ties resolved toward the smaller integer.
    pub fn new(q_min: i32, probs: Vec<f64>) -> Result<DiscretePmf> {
        if probs.is_empty() {
            return Err(NtcError::Parameter("PMF needs at least one symbol".into()));
        }
        if probs.iter().any(|&p| p.is_nan() || p < 0.0 || !p.is_finite()) {
            return Err(NtcError::Parameter("PMF entries must be finite and >= 0".into()));
        }
        let mut probs = probs;
        let total: f64 = probs.iter().sum();
        if total <= 0.0 {
            return Err(NtcError::Parameter("PMF has zero total mass".into()));
        }
        for p in &mut probs {
            *p /= total;
        }
        // Raise floored entries to eps and take the excess out of the
        // largest entry so the sum stays 1.
        let mut raised = 0.0;
        for p in &mut probs {
            if *p < DENSITY_EPS {
                raised += DENSITY_EPS - *p;
                *p = DENSITY_EPS;
            }
        }
        if raised > 0.0 {
            let (max_idx, _) = probs
                .iter()
                .enumerate()
                .max_by(|a, b| a.1.partial_cmp(b.1).unwrap())
                .unwrap();
            probs[max_idx] -= raised;
        }
        let mut mode_idx = 0;
        for (k, &p) in probs.iter().enumerate() {
            if p > probs[mode_idx] {
                mode_idx = k;
            }
        }
        let q_max = q_min + probs.len() as i32 - 1;
        Ok(DiscretePmf {
            q_min,
            q_max,
            probs,
            mode: q_min + mode_idx as i32,
        })
    }

    /// Like [`DiscretePmf::new`] but with an explicitly chosen mode (must lie
    /// in the support). Used when seeding coder contexts from external
    /// probability tables.
    pub fn with_mode(q_min: i32, probs: Vec<f64>, mode: i32) -> Result<DiscretePmf> {
        let mut pmf = DiscretePmf::new(q_min, probs)?;
        if mode < pmf.q_min || mode > pmf.q_max {
            return Err(NtcError::Parameter(format!(
                "mode {mode} outside support [{}, {}]",
                pmf.q_min, pmf.q_max
            )));
        }
        pmf.mode = mode;
        Ok(pmf)
    }

    /// Rebuild an already-normalized PMF exactly as stored (no
    /// renormalization, so serialization roundtrips are bit-exact).
    pub fn from_stored(q_min: i32, probs: Vec<f64>, mode: i32) -> Result<DiscretePmf> {
        if probs.is_empty() {
            return Err(NtcError::Parameter("PMF needs at least one symbol".into()));
        }
        if probs.iter().any(|&p| p.is_nan() || p <= 0.0 || !p.is_finite()) {
            return Err(NtcError::Parameter("stored PMF entries must be positive".into()));
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > 1e-6 {
            return Err(NtcError::Parameter(format!(
                "stored PMF sums to {total}, expected 1"
            )));
        }
        let q_max = q_min + probs.len() as i32 - 1;
        if mode < q_min || mode > q_max {
            return Err(NtcError::Parameter(format!(
                "mode {mode} outside support [{q_min}, {q_max}]"
            )));
        }
        Ok(DiscretePmf {
            q_min,
            q_max,
            probs,
            mode,
        })
    }

    pub fn q_min(&self) -> i32 {
        self.q_min
    }

    pub fn q_max(&self) -> i32 {
        self.q_max
    }

    pub fn mode(&self) -> i32 {
        self.mode
    }

    pub fn support_len(&self) -> usize {
        self.probs.len()
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    /// Mass at integer n; the tail floor outside the support keeps
    /// codelength accounting finite.
    pub fn prob(&self, n: i32) -> f64 {
        if n < self.q_min || n > self.q_max {
            DENSITY_EPS
        } else {
            self.probs[(n - self.q_min) as usize]
        }
    }

    /// Shannon entropy in bits.
    pub fn entropy_bits(&self) -> f64 {
        -self
            .probs
            .iter()
            .filter(|&&p| p > 0.0)
            .map(|&p| p * p.log2())
            .sum::<f64>()
    }
}
