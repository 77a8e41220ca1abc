//! Truncated number-basis check of the perturbative three-mode state
//! `(1 + i g q1 q2 q3)|000>` and its nullifier `N = p1 + lambda q2 q3`.
//!
//! Quadratures follow the moment engine: `q = (a + a†)/√2`,
//! `p = (a - a†)/(i√2)`, vacuum variance 1/2.

use num_complex::Complex64;

use crate::criteria::{ground_threshold, squeezed_threshold, ThresholdPolicy};
use crate::error::{Error, Result};
use crate::search::{linspace, scan_minimize};

pub const MIN_CUTOFF: usize = 4;

/// Agreement required between a cutoff and the cutoff raised by two.
pub const CUTOFF_TOL: f64 = 1e-12;

const MODES: usize = 3;

/// Dense amplitudes over the product number basis of three modes, each
/// truncated to `cutoff` levels. Mode 0 is the most significant index.
#[derive(Debug, Clone, PartialEq)]
pub struct FockVector {
    cutoff: usize,
    amps: Vec<Complex64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Quadrature {
    Q,
    P,
}

impl FockVector {
    pub fn vacuum(cutoff: usize) -> Self {
        let mut amps = vec![Complex64::new(0.0, 0.0); cutoff.pow(MODES as u32)];
        amps[0] = Complex64::new(1.0, 0.0);
        Self { cutoff, amps }
    }

    pub fn cutoff(&self) -> usize {
        self.cutoff
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }

    pub fn inner(&self, other: &FockVector) -> Complex64 {
        self.amps.iter().zip(&other.amps).map(|(a, b)| a.conj() * b).sum()
    }

    fn stride(&self, mode: usize) -> usize {
        self.cutoff.pow((MODES - 1 - mode) as u32)
    }

    fn level(&self, index: usize, mode: usize) -> usize {
        (index / self.stride(mode)) % self.cutoff
    }

    fn apply(&self, mode: usize, quad: Quadrature) -> FockVector {
        let s = self.stride(mode);
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let mut out = vec![Complex64::new(0.0, 0.0); self.amps.len()];
        for (i, &a) in self.amps.iter().enumerate() {
            if a == Complex64::new(0.0, 0.0) {
                continue;
            }
            let n = self.level(i, mode);
            // a|n> = √n |n-1>,  a†|n> = √(n+1) |n+1>
            let (down, up) = match quad {
                Quadrature::Q => (Complex64::new(h, 0.0), Complex64::new(h, 0.0)),
                Quadrature::P => (Complex64::new(0.0, -h), Complex64::new(0.0, h)),
            };
            if n > 0 {
                out[i - s] += down * (n as f64).sqrt() * a;
            }
            if n + 1 < self.cutoff {
                out[i + s] += up * ((n + 1) as f64).sqrt() * a;
            }
        }
        FockVector { cutoff: self.cutoff, amps: out }
    }

    pub fn q(&self, mode: usize) -> FockVector {
        self.apply(mode, Quadrature::Q)
    }

    pub fn p(&self, mode: usize) -> FockVector {
        self.apply(mode, Quadrature::P)
    }

    fn axpy(mut self, c: Complex64, other: &FockVector) -> FockVector {
        for (a, b) in self.amps.iter_mut().zip(&other.amps) {
            *a += c * b;
        }
        self
    }

    fn scaled(mut self, c: f64) -> FockVector {
        for a in &mut self.amps {
            *a *= c;
        }
        self
    }
}

fn check_cutoff(cutoff: usize) -> Result<()> {
    if cutoff < MIN_CUTOFF {
        return Err(Error::CutoffTooSmall {
            cutoff,
            reason: format!("at least {MIN_CUTOFF} levels per mode are needed"),
        });
    }
    Ok(())
}

/// Normalized `(1 + i gamma q1 q2 q3)|000>`.
pub fn perturbative_state(gamma: f64, cutoff: usize) -> Result<FockVector> {
    check_cutoff(cutoff)?;
    let vac = FockVector::vacuum(cutoff);
    let qqq = vac.q(0).q(1).q(2);
    let psi = vac.axpy(Complex64::new(0.0, gamma), &qqq);
    let norm = psi.norm_sqr().sqrt();
    Ok(psi.scaled(1.0 / norm))
}

fn apply_nullifier(psi: &FockVector, lambda: f64) -> FockVector {
    psi.p(0).axpy(Complex64::new(lambda, 0.0), &psi.q(1).q(2))
}

/// Raw nullifier moments `<N>` and `<N N>` of the perturbative state, with
/// their imaginary parts kept for hermiticity checks.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NullifierMoments {
    pub mean: Complex64,
    pub second: Complex64,
    pub norm_sqr: f64,
}

impl NullifierMoments {
    pub fn variance(&self) -> f64 {
        self.second.re - self.mean.re * self.mean.re
    }
}

pub fn perturbative_moments(gamma: f64, lambda: f64, cutoff: usize) -> Result<NullifierMoments> {
    let psi = perturbative_state(gamma, cutoff)?;
    let n_psi = apply_nullifier(&psi, lambda);
    let nn_psi = apply_nullifier(&n_psi, lambda);
    Ok(NullifierMoments {
        mean: psi.inner(&n_psi),
        second: psi.inner(&nn_psi),
        norm_sqr: psi.norm_sqr(),
    })
}

/// `<N^2> - <N>^2` for `N = p1 + lambda q2 q3`, checked against `cutoff + 2`.
pub fn perturbative_nullifier_variance(gamma: f64, lambda: f64, cutoff: usize) -> Result<f64> {
    let m = perturbative_moments(gamma, lambda, cutoff)?;
    let wider = perturbative_moments(gamma, lambda, cutoff + 2)?;
    let scale = 1.0 + m.variance().abs();
    if (m.variance() - wider.variance()).abs() > CUTOFF_TOL * scale
        || (m.norm_sqr - wider.norm_sqr).abs() > CUTOFF_TOL
    {
        return Err(Error::CutoffTooSmall {
            cutoff,
            reason: format!(
                "variance changes from {} to {} at cutoff {}",
                m.variance(),
                wider.variance(),
                cutoff + 2
            ),
        });
    }
    Ok(m.variance())
}

fn three_mode_threshold(policy: ThresholdPolicy, lambda: f64) -> Result<f64> {
    match policy {
        ThresholdPolicy::Ground => Ok(ground_threshold(3, lambda)),
        ThresholdPolicy::LocalSqueezed => Ok(squeezed_threshold(3, lambda)?.value),
    }
}

/// `min over lambda` of `Var(N) - threshold(3, lambda)`, with the minimizing lambda.
pub fn perturbative_min_gap(gamma: f64, policy: ThresholdPolicy) -> Result<(f64, f64)> {
    let half = if gamma == 0.0 { 10.0 } else { (4.0 / gamma.abs()).max(10.0) };
    let m = scan_minimize(
        |l| Ok(perturbative_nullifier_variance(gamma, l, MIN_CUTOFF)? - three_mode_threshold(policy, l)?),
        -half,
        half,
        1e-10,
    )?;
    Ok((m.x, m.value))
}

/// Upper end of the `gamma` grid searched for the loss of nonclassicality.
pub const GAMMA_SCAN_MAX: f64 = 10.0;

/// Largest `|gamma|` for which some lambda puts the nullifier variance below
/// the threshold, by bisection to 1e-10 after a grid scan on `(0, 10]`.
pub fn perturbative_gamma_range(policy: ThresholdPolicy) -> Result<f64> {
    let passes = |g: f64| -> Result<bool> { Ok(perturbative_min_gap(g, policy)?.1 < 0.0) };
    let grid = linspace(0.05, GAMMA_SCAN_MAX, 100);
    let mut bracket = None;
    for w in grid.windows(2).rev() {
        if passes(w[0])? {
            bracket = Some((w[0], w[1]));
            break;
        }
    }
    let (mut lo, mut hi) = bracket.ok_or_else(|| Error::Degenerate("no nonclassical gamma on the scan grid".into()))?;
    if passes(hi)? {
        return Err(Error::Degenerate(format!("nonclassical up to the scan limit {GAMMA_SCAN_MAX}")));
    }
    while hi - lo > 1e-10 {
        let mid = 0.5 * (lo + hi);
        if passes(mid)? {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}
