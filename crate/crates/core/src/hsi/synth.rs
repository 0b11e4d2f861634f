//! Synthetic hyperspectral cubes under the linear mixing model.
//!
//! Each pixel spectrum is `Σ_p a_p(y, x) s_p + noise`. Abundances come
//! from a stick-breaking split of the unit mass along the row axis:
//! endmember p takes the fraction `h_p(y)` of what is left, where `h_p` is
//! a smooth sigmoid ramp. The abundances are nonnegative, sum to one at
//! every pixel, and each map is constant along columns, so a noiseless
//! cube is an exact rank-≤P polyadic tensor.
//!
//! Rank-1 maps that partition unity satisfy `rank(U) + rank(V) <= P + 1`
//! for the row and column profile matrices. Splitting the mass along both
//! axes lands on the `(2, 2)`-type end of that bound, where ALS converges
//! sublinearly; the single-axis split keeps the row profiles independent.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::tensor::{DenseTensor, Matrix};

/// Wavelength range (micrometers) covered by synthetic bands.
pub const WAVELENGTH_RANGE_UM: (f64, f64) = (0.4, 2.5);

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticCubeSpec {
    pub width: usize,
    pub height: usize,
    pub bands: usize,
    pub num_endmembers: usize,
    /// Standard deviation of the additive Gaussian noise.
    pub noise_sigma: f64,
    pub seed: u64,
    /// Width of the abundance ramps as a fraction of the image side.
    pub abundance_smoothness: f64,
}

impl Default for SyntheticCubeSpec {
    fn default() -> Self {
        Self {
            width: 16,
            height: 16,
            bands: 32,
            num_endmembers: 3,
            noise_sigma: 0.0,
            seed: 0,
            abundance_smoothness: 0.15,
        }
    }
}

impl SyntheticCubeSpec {
    pub fn validate(&self) -> Result<()> {
        if self.width == 0 || self.height == 0 || self.bands == 0 {
            return Err(Error::Config("cube extents must be >= 1".into()));
        }
        if self.num_endmembers == 0 {
            return Err(Error::Config("at least one endmember is required".into()));
        }
        if !(self.noise_sigma >= 0.0 && self.noise_sigma.is_finite()) {
            return Err(Error::Config(format!(
                "noise sigma must be finite and >= 0, got {}",
                self.noise_sigma
            )));
        }
        if !(self.abundance_smoothness > 0.0 && self.abundance_smoothness.is_finite()) {
            return Err(Error::Config("abundance smoothness must be > 0".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct SyntheticCube {
    /// `height x width x bands`, noise included.
    pub cube: DenseTensor,
    /// Noiseless cube.
    pub clean: DenseTensor,
    /// Endmember spectra as columns, `bands x P`.
    pub endmembers: Matrix,
    /// `height x width x P`.
    pub abundances: DenseTensor,
    pub wavelengths_um: Vec<f64>,
}

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// Smooth ramp over `n` samples of [0, 1].
fn ramp<R: Rng>(rng: &mut R, n: usize, smoothness: f64) -> Vec<f64> {
    let center = rng.random_range(0.25..0.75);
    let width = smoothness * rng.random_range(0.7..1.3);
    let direction = if rng.random_bool(0.5) { 1.0 } else { -1.0 };
    (0..n)
        .map(|i| {
            let u = if n > 1 { i as f64 / (n - 1) as f64 } else { 0.5 };
            sigmoid(direction * (u - center) / width)
        })
        .collect()
}

/// Baseline plus a few Gaussian absorption/reflection bumps; strictly positive.
fn spectrum<R: Rng>(rng: &mut R, wavelengths: &[f64]) -> Vec<f64> {
    let (lo, hi) = WAVELENGTH_RANGE_UM;
    let baseline = rng.random_range(0.05..0.2);
    let bumps: Vec<(f64, f64, f64)> = (0..3)
        .map(|_| {
            (
                rng.random_range(0.2..1.0),
                rng.random_range(lo..hi),
                rng.random_range(0.1..0.4),
            )
        })
        .collect();
    wavelengths
        .iter()
        .map(|&w| {
            baseline
                + bumps
                    .iter()
                    .map(|&(amp, mu, sd)| amp * (-(w - mu).powi(2) / (2.0 * sd * sd)).exp())
                    .sum::<f64>()
        })
        .collect()
}

pub fn synth_cube(spec: &SyntheticCubeSpec) -> Result<SyntheticCube> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let (h, w, nb, p) = (spec.height, spec.width, spec.bands, spec.num_endmembers);

    let (lo, hi) = WAVELENGTH_RANGE_UM;
    let wavelengths_um: Vec<f64> = (0..nb)
        .map(|i| {
            if nb > 1 {
                lo + (hi - lo) * i as f64 / (nb - 1) as f64
            } else {
                0.5 * (lo + hi)
            }
        })
        .collect();
    let mut endmembers = Matrix::zeros(nb, p);
    for j in 0..p {
        let s = spectrum(&mut rng, &wavelengths_um);
        endmembers.column_mut(j).copy_from_slice(&s);
    }

    let mut rest = vec![1.0; h];
    let mut profiles = Vec::with_capacity(p);
    for j in 0..p {
        if j + 1 == p {
            profiles.push(rest.clone());
            break;
        }
        let take = ramp(&mut rng, h, spec.abundance_smoothness);
        profiles.push(rest.iter().zip(&take).map(|(r, t)| r * t).collect::<Vec<f64>>());
        rest.iter_mut().zip(&take).for_each(|(r, t)| *r *= 1.0 - t);
    }

    let abundances = DenseTensor::from_fn(&[h, w, p], |ix| profiles[ix[2]][ix[0]]);
    let clean = DenseTensor::from_fn(&[h, w, nb], |ix| {
        (0..p)
            .map(|j| abundances.get(&[ix[0], ix[1], j]).expect("in range") * endmembers[(ix[2], j)])
            .sum()
    });
    let mut cube = clean.clone();
    if spec.noise_sigma > 0.0 {
        for v in cube.data_mut() {
            let z: f64 = rng.sample(StandardNormal);
            *v += spec.noise_sigma * z;
        }
    }
    Ok(SyntheticCube {
        cube,
        clean,
        endmembers,
        abundances,
        wavelengths_um,
    })
}
