//! Synthetic test data: spectrally sparse signals, sparse corruptions and
//! additive Gaussian noise at an exact realized SNR.
//!
//! Every generator draws from a `ChaCha8Rng` seeded with the caller's seed, so
//! instances are reproducible across runs and platforms.

use std::f64::consts::PI;

use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::scalar::{norm2, Complex, Real};
use crate::signal::ComplexSignal;
use crate::sparse::SparseEstimate;

/// Upper bound on frequency redraws before separation is declared infeasible.
pub const MAX_SEPARATION_ATTEMPTS: usize = 100_000;

/// One damped complex sinusoid `a · e^{(2πi f − d) t}`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SpectralComponent {
    pub amplitude: Complex<f64>,
    pub frequency: f64,
    pub damping: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SpectralModel {
    pub components: Vec<SpectralComponent>,
    pub n: usize,
}

impl SpectralModel {
    /// Samples `x[t] = Σ_j a_j e^{(2πi f_j − d_j) t}` for `t = 0..n`.
    pub fn synthesize<T: Real>(&self) -> ComplexSignal<T> {
        let samples = (0..self.n)
            .map(|t| {
                let t = t as f64;
                let v = self.components.iter().fold(Complex::new(0.0, 0.0), |acc, c| {
                    let mag = (-c.damping * t).exp();
                    let th = 2.0 * PI * c.frequency * t;
                    acc + c.amplitude * Complex::new(mag * th.cos(), mag * th.sin())
                });
                Complex::new(T::lit(v.re), T::lit(v.im))
            })
            .collect();
        ComplexSignal::from_vec_unchecked(samples)
    }

    /// Smallest wrap-around distance between two frequencies (1 if `r < 2`).
    pub fn min_separation(&self) -> f64 {
        let f: Vec<f64> = self.components.iter().map(|c| c.frequency).collect();
        let mut best: f64 = 1.0;
        for i in 0..f.len() {
            for j in i + 1..f.len() {
                best = best.min(wrap_distance(f[i], f[j]));
            }
        }
        best
    }
}

/// `min(|f − g|, 1 − |f − g|)` on the unit frequency circle.
pub fn wrap_distance(f: f64, g: f64) -> f64 {
    let d = (f - g).abs();
    d.min(1.0 - d)
}

/// Draws an `r`-component model of length `n` and its samples.
///
/// Amplitudes have modulus `1 + 10^{0.5 c}` with `c ~ U[0,1]` and uniform
/// phase; frequencies are uniform on `[0,1)`, redrawn until every pair is at
/// least `separation` apart when requested. Damping is `U[0, 8/n]` when
/// `damped`, otherwise 0.
pub fn gen_signal<T: Real>(
    n: usize,
    r: usize,
    separation: Option<f64>,
    damped: bool,
    seed: u64,
) -> Result<(ComplexSignal<T>, SpectralModel), T> {
    if n == 0 || r == 0 {
        return Err(Error::InvalidSize(format!("need n >= 1 and r >= 1, got n={n}, r={r}")));
    }
    if let Some(sep) = separation {
        if !(sep >= 0.0) || r as f64 * sep >= 1.0 {
            return Err(Error::Infeasible(format!(
                "cannot place {r} frequencies with separation {sep}"
            )));
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut freqs: Vec<f64> = Vec::with_capacity(r);
    let mut attempts = 0usize;
    while freqs.len() < r {
        let f: f64 = rng.random();
        attempts += 1;
        let ok = separation.is_none_or(|sep| freqs.iter().all(|&g| wrap_distance(f, g) >= sep));
        if ok {
            freqs.push(f);
        } else if attempts >= MAX_SEPARATION_ATTEMPTS {
            return Err(Error::Infeasible(format!(
                "frequency separation not met after {attempts} draws"
            )));
        }
    }
    let components = freqs
        .into_iter()
        .map(|frequency| {
            let c: f64 = rng.random();
            let magnitude = 1.0 + 10f64.powf(0.5 * c);
            let phase = 2.0 * PI * rng.random::<f64>();
            let damping = if damped {
                8.0 / n as f64 * rng.random::<f64>()
            } else {
                0.0
            };
            SpectralComponent {
                amplitude: Complex::from_polar(magnitude, phase),
                frequency,
                damping,
            }
        })
        .collect();
    let model = SpectralModel { components, n };
    Ok((model.synthesize(), model))
}

/// Number, magnitude scale and seed of sparse corruptions.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CorruptionSpec {
    pub count: usize,
    pub scale: f64,
    pub seed: u64,
}

impl CorruptionSpec {
    /// `count = round(alpha · n)`.
    pub fn from_rate(alpha: f64, n: usize, scale: f64, seed: u64) -> Self {
        Self {
            count: (alpha * n as f64).round() as usize,
            scale,
            seed,
        }
    }
}

/// Draws `count` distinct uniform locations; real and imaginary parts are
/// uniform on `[−c·mean|Re x|, c·mean|Re x|]` and `[−c·mean|Im x|, c·mean|Im x|]`.
pub fn gen_corruptions<T: Real>(
    x: &ComplexSignal<T>,
    spec: &CorruptionSpec,
) -> Result<SparseEstimate<T>, T> {
    let n = x.len();
    if spec.count > n {
        return Err(Error::InvalidInput(format!(
            "{} corruptions requested for length {n}",
            spec.count
        )));
    }
    if !(spec.scale > 0.0) {
        return Err(Error::InvalidInput(format!("corruption scale must be > 0, got {}", spec.scale)));
    }
    let mean_re = x.iter().map(|c| c.re.as_f64().abs()).sum::<f64>() / n as f64;
    let mean_im = x.iter().map(|c| c.im.as_f64().abs()).sum::<f64>() / n as f64;
    let (box_re, box_im) = (spec.scale * mean_re, spec.scale * mean_im);

    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut support = index::sample(&mut rng, n, spec.count).into_vec();
    support.sort_unstable();
    let values = support
        .iter()
        .map(|_| {
            let re = box_re * (2.0 * rng.random::<f64>() - 1.0);
            let im = box_im * (2.0 * rng.random::<f64>() - 1.0);
            Complex::new(T::lit(re), T::lit(im))
        })
        .collect();
    SparseEstimate::new(n, support, values)
}

/// Target SNR in dB (`f64::INFINITY` for no noise) and seed.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NoiseSpec {
    pub snr_db: f64,
    pub seed: u64,
}

/// Circular complex Gaussian noise rescaled so that
/// `10 log10(‖x‖²/‖η‖²) = snr_db` holds for the realized draw.
pub fn add_noise<T: Real>(
    x: &ComplexSignal<T>,
    spec: &NoiseSpec,
) -> Result<(ComplexSignal<T>, f64), T> {
    let xnorm = x.norm2().as_f64();
    if xnorm == 0.0 {
        return Err(Error::InvalidInput("cannot set an SNR relative to a zero signal".into()));
    }
    if spec.snr_db == f64::INFINITY {
        return Ok((ComplexSignal::zeros(x.len()), f64::INFINITY));
    }
    if spec.snr_db.is_nan() {
        return Err(Error::InvalidInput("snr_db is NaN".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let g: Vec<Complex<f64>> = (0..x.len())
        .map(|_| {
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = rng.sample(StandardNormal);
            Complex::new(re, im)
        })
        .collect();
    let gnorm = norm2(&g);
    let target = xnorm / 10f64.powf(spec.snr_db / 20.0);
    let factor = target / gnorm;
    let eta = ComplexSignal::from_vec_unchecked(
        g.iter()
            .map(|c| Complex::new(T::lit(c.re * factor), T::lit(c.im * factor)))
            .collect(),
    );
    let realized = output_snr(x, &(x + &eta)).as_f64();
    Ok((eta, realized))
}

/// `10 log10(‖x‖² / ‖x − x̂‖²)`; `+∞` when the two agree exactly.
pub fn output_snr<T: Real>(x_true: &ComplexSignal<T>, x_hat: &ComplexSignal<T>) -> T {
    let err = (x_true - x_hat).norm2();
    if err == T::zero() {
        return T::one() / T::zero();
    }
    T::lit(20.0) * (x_true.norm2() / err).log10()
}

/// Deterministic seed for a trial, independent of scheduling order.
pub fn derive_seed(base: u64, path: &[u64]) -> u64 {
    path.iter().fold(splitmix(base), |acc, &p| splitmix(acc ^ splitmix(p)))
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn model(components: Vec<(f64, f64, f64)>, n: usize) -> SpectralModel {
        SpectralModel {
            components: components
                .into_iter()
                .map(|(a, f, d)| SpectralComponent {
                    amplitude: Complex::new(a, 0.0),
                    frequency: f,
                    damping: d,
                })
                .collect(),
            n,
        }
    }

    #[test]
    fn dc_and_nyquist() {
        let x: ComplexSignal<f64> = model(vec![(1.0, 0.0, 0.0)], 6).synthesize();
        assert!(x.iter().all(|c| (c - Complex::new(1.0, 0.0)).norm() < 1e-15));
        let x: ComplexSignal<f64> = model(vec![(1.0, 0.5, 0.0)], 4).synthesize();
        for (t, c) in x.iter().enumerate() {
            let want = if t % 2 == 0 { 1.0 } else { -1.0 };
            assert!((c - Complex::new(want, 0.0)).norm() < 1e-12);
        }
    }

    #[test]
    fn amplitude_and_damping_ranges() {
        for seed in 0..20 {
            let (_, m) = gen_signal::<f64>(64, 6, None, true, seed).unwrap();
            for c in &m.components {
                let mag = c.amplitude.norm();
                assert!((2.0..=1.0 + 10f64.sqrt() + 1e-12).contains(&mag));
                assert!((0.0..1.0).contains(&c.frequency));
                assert!((0.0..=8.0 / 64.0).contains(&c.damping));
            }
            let (_, m) = gen_signal::<f64>(64, 6, None, false, seed).unwrap();
            assert!(m.components.iter().all(|c| c.damping == 0.0));
        }
    }

    #[test]
    fn separation_contract() {
        for seed in 0..50 {
            let sep = 1.5 / 125.0;
            let (_, m) = gen_signal::<f64>(125, 10, Some(sep), false, seed).unwrap();
            assert!(m.min_separation() >= sep);
        }
        assert!(matches!(
            gen_signal::<f64>(125, 10, Some(0.1), false, 0),
            Err(Error::Infeasible(_))
        ));
    }

    #[test]
    fn corruptions_boxes_and_counts() {
        let (x, _) = gen_signal::<f64>(125, 3, None, false, 7).unwrap();
        let none = gen_corruptions(&x, &CorruptionSpec { count: 0, scale: 1.0, seed: 1 }).unwrap();
        assert!(none.is_empty());
        let mean_re = x.iter().map(|c| c.re.abs()).sum::<f64>() / 125.0;
        let mean_im = x.iter().map(|c| c.im.abs()).sum::<f64>() / 125.0;
        let all = gen_corruptions(&x, &CorruptionSpec { count: 125, scale: 3.0, seed: 2 }).unwrap();
        assert_eq!(all.nnz(), 125);
        for (_, v) in all.iter() {
            assert!(v.re.abs() <= 3.0 * mean_re && v.im.abs() <= 3.0 * mean_im);
        }
        assert!(gen_corruptions(&x, &CorruptionSpec { count: 126, scale: 1.0, seed: 3 }).is_err());
    }

    #[test]
    fn corruption_sup_norm_bound() {
        let (x, _) = gen_signal::<f64>(125, 5, None, false, 11).unwrap();
        let mean_re = x.iter().map(|c| c.re.abs()).sum::<f64>() / 125.0;
        let mean_im = x.iter().map(|c| c.im.abs()).sum::<f64>() / 125.0;
        let bound = (mean_re + mean_im) * 2f64.sqrt();
        for seed in 0..1000 {
            let s = gen_corruptions(&x, &CorruptionSpec { count: 12, scale: 1.0, seed }).unwrap();
            assert_eq!(s.nnz(), 12);
            assert!(s.max_abs() <= bound);
        }
    }

    #[test]
    fn noise_levels() {
        let (x, _) = gen_signal::<f64>(100, 2, None, false, 3).unwrap();
        let (eta, snr) = add_noise(&x, &NoiseSpec { snr_db: f64::INFINITY, seed: 0 }).unwrap();
        assert_eq!(eta.norm2(), 0.0);
        assert_eq!(snr, f64::INFINITY);
        let (eta, snr) = add_noise(&x, &NoiseSpec { snr_db: 0.0, seed: 0 }).unwrap();
        assert!((eta.norm2() / x.norm2() - 1.0).abs() < 1e-12);
        assert!(snr.abs() < 1e-10);
        let (eta, _) = add_noise(&x, &NoiseSpec { snr_db: 20.0, seed: 5 }).unwrap();
        assert!((eta.norm2() / x.norm2() - 0.1).abs() < 1e-12);
        assert!(add_noise(&ComplexSignal::<f64>::zeros(4), &NoiseSpec { snr_db: 1.0, seed: 0 }).is_err());
    }

    #[test]
    fn output_snr_examples() {
        let (x, _) = gen_signal::<f64>(50, 2, None, false, 9).unwrap();
        assert_eq!(output_snr(&x, &x), f64::INFINITY);
        assert!(output_snr(&x, &ComplexSignal::zeros(50)).abs() < 1e-12);
        let mut e = vec![Complex::new(0.0, 0.0); 50];
        e[3] = Complex::new(1e-3 * x.norm2(), 0.0);
        let xh = &x + &ComplexSignal::new(e).unwrap();
        assert!((output_snr(&x, &xh) - 60.0).abs() < 1e-9);
    }

    #[test]
    fn reproducible() {
        let a = gen_signal::<f64>(77, 4, Some(0.02), true, 42).unwrap();
        let b = gen_signal::<f64>(77, 4, Some(0.02), true, 42).unwrap();
        assert_eq!(a, b);
        assert_ne!(derive_seed(1, &[0, 1]), derive_seed(1, &[1, 0]));
        assert_eq!(derive_seed(9, &[3, 4]), derive_seed(9, &[3, 4]));
    }
}
