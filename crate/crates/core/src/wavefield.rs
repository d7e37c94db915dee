//! Scalar 1-D complex wave fields on uniform grids.
//!
//! Free-space propagation uses the exact angular-spectrum transfer
//! function: each spatial-frequency component f with f^2 < 1/lambda^2 is
//! advanced by exp(i*2*pi*z*(sqrt(1/lambda^2 - f^2) - 1/lambda)); the
//! on-axis carrier exp(i*2*pi*z/lambda) is factored out so only relative
//! phase is tracked, and evanescent components (f^2 >= 1/lambda^2) are
//! zeroed. For band-limited fields this conserves power to rounding
//! error and composes exactly over distances.

use num_complex::Complex64;
use rustfft::FftPlanner;

use crate::{Error, Result};

/// A complex field sampled on a uniform grid of power-of-two length.
///
/// Sample `i` sits at `center_offset + (i - len/2) * grid_spacing`, so the
/// grid always contains the point `center_offset` exactly and negating a
/// position maps sample `i` to sample `(len - i) % len`.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexField {
    samples: Vec<Complex64>,
    grid_spacing: f64,
    center_offset: f64,
    wavelength: f64,
}

impl ComplexField {
    /// Builds a field, validating grid shape, wavelength, and sample
    /// finiteness.
    pub fn new(
        samples: Vec<Complex64>,
        grid_spacing: f64,
        center_offset: f64,
        wavelength: f64,
    ) -> Result<Self> {
        let n = samples.len();
        if n < 2 || !n.is_power_of_two() {
            return Err(Error::InvalidField(format!(
                "sample count must be a power of two >= 2, got {n}"
            )));
        }
        if !(grid_spacing.is_finite() && grid_spacing > 0.0) {
            return Err(Error::InvalidField(format!(
                "grid spacing must be finite and positive, got {grid_spacing}"
            )));
        }
        if !center_offset.is_finite() {
            return Err(Error::InvalidField("center offset must be finite".into()));
        }
        if !(wavelength.is_finite() && wavelength > 0.0) {
            return Err(Error::InvalidField(format!(
                "wavelength must be finite and positive, got {wavelength}"
            )));
        }
        let field = ComplexField {
            samples,
            grid_spacing,
            center_offset,
            wavelength,
        };
        field.ensure_finite()?;
        Ok(field)
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn samples(&self) -> &[Complex64] {
        &self.samples
    }

    pub fn grid_spacing(&self) -> f64 {
        self.grid_spacing
    }

    pub fn center_offset(&self) -> f64 {
        self.center_offset
    }

    pub fn wavelength(&self) -> f64 {
        self.wavelength
    }

    /// Position of sample `i` in meters.
    pub fn position(&self, i: usize) -> f64 {
        let half = (self.len() / 2) as f64;
        self.center_offset + (i as f64 - half) * self.grid_spacing
    }

    /// Full window width `len * grid_spacing` in meters.
    pub fn window_extent(&self) -> f64 {
        self.len() as f64 * self.grid_spacing
    }

    /// L2 inner product `sum conj(self) * other * dx`; unit-power fields
    /// give overlaps with modulus at most 1.
    pub fn inner_product(&self, other: &ComplexField) -> Result<Complex64> {
        self.check_same_grid(other.len(), other.grid_spacing, other.center_offset)?;
        let acc: Complex64 = self
            .samples
            .iter()
            .zip(&other.samples)
            .map(|(a, b)| a.conj() * b)
            .sum();
        Ok(acc * self.grid_spacing)
    }

    /// Rebuilds the field with new samples on the same grid.
    pub(crate) fn with_samples(&self, samples: Vec<Complex64>) -> ComplexField {
        debug_assert_eq!(samples.len(), self.len());
        ComplexField {
            samples,
            grid_spacing: self.grid_spacing,
            center_offset: self.center_offset,
            wavelength: self.wavelength,
        }
    }

    pub(crate) fn samples_mut(&mut self) -> &mut [Complex64] {
        &mut self.samples
    }

    fn ensure_finite(&self) -> Result<()> {
        if self
            .samples
            .iter()
            .any(|c| !c.re.is_finite() || !c.im.is_finite())
        {
            return Err(Error::InvalidField(
                "samples must be finite (no NaN/Inf)".into(),
            ));
        }
        Ok(())
    }

    fn check_same_grid(&self, len: usize, spacing: f64, offset: f64) -> Result<()> {
        if self.len() != len || self.grid_spacing != spacing || self.center_offset != offset {
            return Err(Error::GridMismatch(format!(
                "expected len {} spacing {} offset {}, got len {} spacing {} offset {}",
                self.len(),
                self.grid_spacing,
                self.center_offset,
                len,
                spacing,
                offset
            )));
        }
        Ok(())
    }
}

/// Kinds of transmission masks.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MaskKind {
    /// Transmission exactly 0 or 1 per sample (perfect absorbers).
    AbsorptiveBinary,
    /// Unit-modulus transmission (pure phase screen).
    Phase,
}

/// A per-sample transmission function tied to a specific grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Mask {
    transmission: Vec<Complex64>,
    kind: MaskKind,
    grid_spacing: f64,
    center_offset: f64,
}

impl Mask {
    /// Binary absorbing mask: `true` transmits, `false` absorbs.
    pub fn absorptive_binary(open: &[bool], grid_spacing: f64, center_offset: f64) -> Result<Mask> {
        if open.is_empty() {
            return Err(Error::InvalidField("mask must be non-empty".into()));
        }
        let transmission = open
            .iter()
            .map(|&o| Complex64::new(if o { 1.0 } else { 0.0 }, 0.0))
            .collect();
        Ok(Mask {
            transmission,
            kind: MaskKind::AbsorptiveBinary,
            grid_spacing,
            center_offset,
        })
    }

    /// Pure phase screen from per-sample phases in radians.
    pub fn phase(phases: &[f64], grid_spacing: f64, center_offset: f64) -> Result<Mask> {
        if phases.is_empty() {
            return Err(Error::InvalidField("mask must be non-empty".into()));
        }
        if phases.iter().any(|p| !p.is_finite()) {
            return Err(Error::InvalidField("mask phases must be finite".into()));
        }
        let transmission = phases
            .iter()
            .map(|&p| Complex64::from_polar(1.0, p))
            .collect();
        Ok(Mask {
            transmission,
            kind: MaskKind::Phase,
            grid_spacing,
            center_offset,
        })
    }

    pub fn kind(&self) -> MaskKind {
        self.kind
    }

    pub fn len(&self) -> usize {
        self.transmission.len()
    }

    pub fn is_empty(&self) -> bool {
        self.transmission.is_empty()
    }

    pub fn transmission(&self) -> &[Complex64] {
        &self.transmission
    }
}

/// Advances a band-limited field through `distance` meters of free space.
///
/// `distance` must be finite and non-negative; zero distance returns the
/// field unchanged. The output grid equals the input grid. Power is
/// conserved as long as the field carries no evanescent content.
pub fn propagate(field: &ComplexField, distance: f64) -> Result<ComplexField> {
    field.ensure_finite()?;
    if !(field.wavelength.is_finite() && field.wavelength > 0.0) {
        return Err(Error::InvalidField("wavelength must be positive".into()));
    }
    if !distance.is_finite() || distance < 0.0 {
        return Err(Error::InvalidField(format!(
            "propagation distance must be finite and >= 0, got {distance}"
        )));
    }
    if distance == 0.0 {
        return Ok(field.clone());
    }

    let n = field.len();
    let mut spectrum = field.samples.clone();
    fft_in_place(&mut spectrum, FftDirection::Forward);

    let inv_lambda = 1.0 / field.wavelength;
    let il2 = inv_lambda * inv_lambda;
    let df = 1.0 / (n as f64 * field.grid_spacing);
    let half = n / 2;
    for (k, c) in spectrum.iter_mut().enumerate() {
        // DFT bin k holds spatial frequency (k, or k - n beyond Nyquist) * df.
        let signed = if k < half {
            k as f64
        } else {
            k as f64 - n as f64
        };
        let f2 = (signed * df) * (signed * df);
        if f2 >= il2 {
            *c = Complex64::new(0.0, 0.0);
        } else {
            // sqrt(1/l^2 - f^2) - 1/l computed in its cancellation-free form.
            let phase = -std::f64::consts::TAU * distance * f2 / ((il2 - f2).sqrt() + inv_lambda);
            *c *= Complex64::from_polar(1.0, phase);
        }
    }

    fft_in_place(&mut spectrum, FftDirection::Inverse);
    let scale = 1.0 / n as f64;
    for c in &mut spectrum {
        *c *= scale;
    }
    Ok(field.with_samples(spectrum))
}

/// Absorbs spatial-frequency content above `max_frequency` (cycles per
/// meter), rolling off smoothly with a cosine-squared ramp over the top
/// fifth of the passband. Returns the filtered field and the power
/// removed.
///
/// This is the spectral twin of an absorbing aperture: hard-edged
/// structures radiate arbitrarily steep angles, and on a periodic grid
/// any component whose transverse walk-off during a hop exceeds the
/// window re-enters from the far side instead of leaving. Capping the
/// angular acceptance below that point keeps long hops honest. A cutoff
/// at or beyond the grid's Nyquist frequency returns the field
/// unchanged.
pub fn angular_filter(field: &ComplexField, max_frequency: f64) -> Result<(ComplexField, f64)> {
    field.ensure_finite()?;
    if !(max_frequency.is_finite() && max_frequency > 0.0) {
        return Err(Error::InvalidField(format!(
            "angular cutoff must be finite and positive, got {max_frequency}"
        )));
    }
    let nyquist = 0.5 / field.grid_spacing;
    if max_frequency >= nyquist {
        return Ok((field.clone(), 0.0));
    }

    let before = total_power(field);
    let n = field.len();
    let mut spectrum = field.samples.clone();
    fft_in_place(&mut spectrum, FftDirection::Forward);

    let df = 1.0 / (n as f64 * field.grid_spacing);
    let ramp_start = 0.8 * max_frequency;
    let ramp_width = max_frequency - ramp_start;
    let half = n / 2;
    for (k, c) in spectrum.iter_mut().enumerate() {
        let signed = if k < half {
            k as f64
        } else {
            k as f64 - n as f64
        };
        let f = (signed * df).abs();
        if f >= max_frequency {
            *c = Complex64::new(0.0, 0.0);
        } else if f > ramp_start {
            let t = (0.5 * std::f64::consts::PI * (f - ramp_start) / ramp_width).cos();
            *c *= t * t;
        }
    }

    fft_in_place(&mut spectrum, FftDirection::Inverse);
    let scale = 1.0 / n as f64;
    for c in &mut spectrum {
        *c *= scale;
    }
    let out = field.with_samples(spectrum);
    let absorbed = before - total_power(&out);
    Ok((out, absorbed))
}

/// Multiplies a field by a mask defined on the same grid.
pub fn apply_mask(field: &ComplexField, mask: &Mask) -> Result<ComplexField> {
    field.check_same_grid(mask.len(), mask.grid_spacing, mask.center_offset)?;
    let samples = field
        .samples
        .iter()
        .zip(&mask.transmission)
        .map(|(s, t)| s * t)
        .collect();
    Ok(field.with_samples(samples))
}

/// Applies an ideal thin lens: the quadratic phase
/// `exp(-i*pi*x^2 / (wavelength * focal_length))`.
pub fn thin_lens(field: &ComplexField, focal_length: f64) -> Result<ComplexField> {
    if !focal_length.is_finite() || focal_length == 0.0 {
        return Err(Error::InvalidField(format!(
            "focal length must be finite and nonzero, got {focal_length}"
        )));
    }
    let coeff = -std::f64::consts::PI / (field.wavelength * focal_length);
    let samples = field
        .samples
        .iter()
        .enumerate()
        .map(|(i, s)| {
            let x = field.position(i);
            s * Complex64::from_polar(1.0, coeff * x * x)
        })
        .collect();
    Ok(field.with_samples(samples))
}

/// A non-negative intensity profile on the same grid convention as
/// [`ComplexField`].
#[derive(Debug, Clone, PartialEq)]
pub struct IntensityProfile {
    values: Vec<f64>,
    grid_spacing: f64,
    center_offset: f64,
}

impl IntensityProfile {
    pub fn new(values: Vec<f64>, grid_spacing: f64, center_offset: f64) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::InvalidField("profile must be non-empty".into()));
        }
        if values.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::InvalidField(
                "profile values must be finite and non-negative".into(),
            ));
        }
        if !(grid_spacing.is_finite() && grid_spacing > 0.0) {
            return Err(Error::InvalidField("grid spacing must be positive".into()));
        }
        Ok(IntensityProfile {
            values,
            grid_spacing,
            center_offset,
        })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn grid_spacing(&self) -> f64 {
        self.grid_spacing
    }

    pub fn center_offset(&self) -> f64 {
        self.center_offset
    }

    pub fn position(&self, i: usize) -> f64 {
        let half = (self.len() / 2) as f64;
        self.center_offset + (i as f64 - half) * self.grid_spacing
    }

    /// Trapezoid-free Riemann integral `sum v * dx`; equals the power of
    /// the field the profile was taken from.
    pub fn integral(&self) -> f64 {
        self.values.iter().sum::<f64>() * self.grid_spacing
    }
}

/// Per-sample intensity `|u|^2` of a field.
pub fn intensity(field: &ComplexField) -> IntensityProfile {
    IntensityProfile {
        values: field.samples.iter().map(|c| c.norm_sqr()).collect(),
        grid_spacing: field.grid_spacing,
        center_offset: field.center_offset,
    }
}

/// Total power `sum |u|^2 * dx`.
pub fn total_power(field: &ComplexField) -> f64 {
    field.samples.iter().map(|c| c.norm_sqr()).sum::<f64>() * field.grid_spacing
}

/// Finds local intensity minima inside the closed position window
/// `[window.0, window.1]` that are deeper than `depth_threshold` times
/// both neighboring local maxima, refined to sub-sample accuracy by a
/// three-point parabola. Returns positions sorted ascending.
///
/// Smooth single-lobe or constant profiles yield no qualifying minima and
/// an empty list.
pub fn find_minima(
    profile: &IntensityProfile,
    window: (f64, f64),
    depth_threshold: f64,
) -> Result<Vec<f64>> {
    if !(window.0.is_finite() && window.1.is_finite() && window.0 < window.1) {
        return Err(Error::InvalidField(format!(
            "window must be a finite non-empty interval, got ({}, {})",
            window.0, window.1
        )));
    }
    if !(depth_threshold.is_finite() && depth_threshold > 0.0) {
        return Err(Error::InvalidField(
            "depth threshold must be finite and positive".into(),
        ));
    }

    let v = &profile.values;
    let n = v.len();
    // Strict local maxima over the whole profile serve as depth references
    // for minima inside the window.
    let maxima: Vec<usize> = (1..n.saturating_sub(1))
        .filter(|&i| v[i] > v[i - 1] && v[i] > v[i + 1])
        .collect();

    let mut out = Vec::new();
    for i in 1..n.saturating_sub(1) {
        let x = profile.position(i);
        if x < window.0 || x > window.1 {
            continue;
        }
        if !(v[i] < v[i - 1] && v[i] < v[i + 1]) {
            continue;
        }
        // Nearest bracketing maxima; minima without both are edge artifacts.
        let right = match maxima.iter().find(|&&m| m > i) {
            Some(&m) => v[m],
            None => continue,
        };
        let left = match maxima.iter().rev().find(|&&m| m < i) {
            Some(&m) => v[m],
            None => continue,
        };
        if !(v[i] < depth_threshold * left.min(right)) {
            continue;
        }
        // Parabola through (i-1, i, i+1); denominator is positive for a
        // strict minimum.
        let denom = v[i - 1] - 2.0 * v[i] + v[i + 1];
        let shift = if denom > 0.0 {
            0.5 * (v[i - 1] - v[i + 1]) / denom
        } else {
            0.0
        };
        out.push(x + shift * profile.grid_spacing);
    }
    out.sort_by(|a, b| a.partial_cmp(b).expect("minima positions are finite"));
    Ok(out)
}

enum FftDirection {
    Forward,
    Inverse,
}

fn fft_in_place(buffer: &mut [Complex64], direction: FftDirection) {
    let mut planner = FftPlanner::new();
    let fft = match direction {
        FftDirection::Forward => planner.plan_fft_forward(buffer.len()),
        FftDirection::Inverse => planner.plan_fft_inverse(buffer.len()),
    };
    fft.process(buffer);
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    const LAMBDA: f64 = 650e-9;

    fn gaussian_field(n: usize, dx: f64, waist: f64) -> ComplexField {
        let half = (n / 2) as f64;
        let samples = (0..n)
            .map(|i| {
                let x = (i as f64 - half) * dx;
                Complex64::new((-x * x / (waist * waist)).exp(), 0.0)
            })
            .collect();
        ComplexField::new(samples, dx, 0.0, LAMBDA).unwrap()
    }

    #[test]
    fn constructor_rejects_bad_grids() {
        let ok = vec![Complex64::new(1.0, 0.0); 8];
        assert!(ComplexField::new(ok.clone(), 1e-6, 0.0, LAMBDA).is_ok());
        assert!(matches!(
            ComplexField::new(vec![Complex64::new(1.0, 0.0); 6], 1e-6, 0.0, LAMBDA),
            Err(Error::InvalidField(_))
        ));
        assert!(ComplexField::new(vec![Complex64::new(1.0, 0.0)], 1e-6, 0.0, LAMBDA).is_err());
        assert!(ComplexField::new(ok.clone(), 0.0, 0.0, LAMBDA).is_err());
        assert!(ComplexField::new(ok.clone(), 1e-6, f64::NAN, LAMBDA).is_err());
        assert!(ComplexField::new(ok.clone(), 1e-6, 0.0, -1.0).is_err());
        let mut bad = ok;
        bad[3] = Complex64::new(f64::NAN, 0.0);
        assert!(ComplexField::new(bad, 1e-6, 0.0, LAMBDA).is_err());
    }

    #[test]
    fn zero_distance_is_identity() {
        let f = gaussian_field(1 << 10, 4e-6, 0.3e-3);
        let g = propagate(&f, 0.0).unwrap();
        assert_eq!(f.samples(), g.samples());
    }

    #[test]
    fn negative_or_nonfinite_distance_rejected() {
        let f = gaussian_field(1 << 8, 4e-6, 0.3e-3);
        assert!(propagate(&f, -0.1).is_err());
        assert!(propagate(&f, f64::NAN).is_err());
        assert!(propagate(&f, f64::INFINITY).is_err());
    }

    #[test]
    fn propagation_conserves_power() {
        let f = gaussian_field(1 << 12, 4e-6, 0.3e-3);
        let p0 = total_power(&f);
        for z in [1e-3, 0.1, 1.0, 10.0] {
            let g = propagate(&f, z).unwrap();
            assert_relative_eq!(total_power(&g), p0, max_relative = 1e-9);
        }
    }

    #[test]
    fn propagation_composes() {
        let f = gaussian_field(1 << 11, 4e-6, 0.25e-3);
        let one = propagate(&f, 0.7).unwrap();
        let two = propagate(&propagate(&f, 0.3).unwrap(), 0.4).unwrap();
        let num = one
            .samples()
            .iter()
            .zip(two.samples())
            .map(|(a, b)| (a - b).norm_sqr())
            .sum::<f64>();
        let den = one.samples().iter().map(|c| c.norm_sqr()).sum::<f64>();
        assert!((num / den).sqrt() < 1e-9);
    }

    #[test]
    fn propagation_is_linear() {
        let f = gaussian_field(1 << 10, 4e-6, 0.2e-3);
        let g = {
            let half = (f.len() / 2) as f64;
            let samples = (0..f.len())
                .map(|i| {
                    let x = (i as f64 - half) * f.grid_spacing();
                    Complex64::from_polar((-x * x / 9e-8).exp(), 2.0e4 * x)
                })
                .collect();
            ComplexField::new(samples, f.grid_spacing(), 0.0, LAMBDA).unwrap()
        };
        let a = Complex64::new(0.6, -0.3);
        let b = Complex64::new(-0.2, 0.9);
        let combo_samples: Vec<Complex64> = f
            .samples()
            .iter()
            .zip(g.samples())
            .map(|(u, v)| a * u + b * v)
            .collect();
        let combo = ComplexField::new(combo_samples, f.grid_spacing(), 0.0, LAMBDA).unwrap();
        let lhs = propagate(&combo, 0.42).unwrap();
        let fu = propagate(&f, 0.42).unwrap();
        let gu = propagate(&g, 0.42).unwrap();
        let num = lhs
            .samples()
            .iter()
            .zip(fu.samples().iter().zip(gu.samples()))
            .map(|(l, (u, v))| (l - (a * u + b * v)).norm_sqr())
            .sum::<f64>();
        let den = lhs.samples().iter().map(|c| c.norm_sqr()).sum::<f64>();
        assert!((num / den).sqrt() < 1e-10);
    }

    #[test]
    fn masks_validate_and_apply() {
        let f = gaussian_field(1 << 8, 4e-6, 0.3e-3);
        let all_open =
            Mask::absorptive_binary(&vec![true; f.len()], f.grid_spacing(), 0.0).unwrap();
        let same = apply_mask(&f, &all_open).unwrap();
        assert_eq!(f.samples(), same.samples());

        let mut half = vec![true; f.len()];
        for slot in half.iter_mut().skip(f.len() / 2) {
            *slot = false;
        }
        let half_mask = Mask::absorptive_binary(&half, f.grid_spacing(), 0.0).unwrap();
        let cut = apply_mask(&f, &half_mask).unwrap();
        assert!(total_power(&cut) < total_power(&f));

        let wrong_grid = Mask::absorptive_binary(&vec![true; f.len()], 5e-6, 0.0).unwrap();
        assert!(matches!(
            apply_mask(&f, &wrong_grid),
            Err(Error::GridMismatch(_))
        ));
        let wrong_len = Mask::absorptive_binary(&vec![true; 16], f.grid_spacing(), 0.0).unwrap();
        assert!(apply_mask(&f, &wrong_len).is_err());
    }

    #[test]
    fn phase_mask_preserves_power_exactly_per_sample() {
        let f = gaussian_field(1 << 8, 4e-6, 0.3e-3);
        let phases: Vec<f64> = (0..f.len()).map(|i| (i as f64) * 0.01).collect();
        let m = Mask::phase(&phases, f.grid_spacing(), 0.0).unwrap();
        let g = apply_mask(&f, &m).unwrap();
        for (a, b) in f.samples().iter().zip(g.samples()) {
            assert_relative_eq!(a.norm(), b.norm(), max_relative = 1e-12);
        }
    }

    #[test]
    fn thin_lens_only_changes_phase() {
        let f = gaussian_field(1 << 9, 4e-6, 0.3e-3);
        let g = thin_lens(&f, 0.5).unwrap();
        for (a, b) in f.samples().iter().zip(g.samples()) {
            assert_relative_eq!(a.norm(), b.norm(), max_relative = 1e-12);
        }
        assert!(thin_lens(&f, 0.0).is_err());
        assert!(thin_lens(&f, f64::NAN).is_err());
    }

    #[test]
    fn intensity_integral_matches_power() {
        let f = gaussian_field(1 << 10, 4e-6, 0.3e-3);
        let prof = intensity(&f);
        assert_relative_eq!(prof.integral(), total_power(&f), max_relative = 1e-12);
        assert_eq!(prof.len(), f.len());
        assert_eq!(prof.position(f.len() / 2), 0.0);
    }

    #[test]
    fn inner_product_detects_grid_mismatch_and_norm() {
        let f = gaussian_field(1 << 8, 4e-6, 0.3e-3);
        let p = total_power(&f);
        let self_overlap = f.inner_product(&f).unwrap();
        assert_relative_eq!(self_overlap.re, p, max_relative = 1e-12);
        let g = gaussian_field(1 << 8, 5e-6, 0.3e-3);
        assert!(f.inner_product(&g).is_err());
    }

    #[test]
    fn find_minima_locates_cosine_zeros() {
        let n = 1 << 12;
        let dx = 1e-5;
        let period = 97.0 * dx;
        let half = (n / 2) as f64;
        let values: Vec<f64> = (0..n)
            .map(|i| {
                let x = (i as f64 - half) * dx;
                let c = (std::f64::consts::PI * x / period).cos();
                c * c
            })
            .collect();
        let prof = IntensityProfile::new(values, dx, 0.0).unwrap();
        let minima = find_minima(&prof, (-2.2 * period, 2.2 * period), 0.1).unwrap();
        assert_eq!(minima.len(), 4);
        for (m, expect) in minima.iter().zip([-1.5, -0.5, 0.5, 1.5]) {
            assert_relative_eq!(*m, expect * period, epsilon = dx * 0.05);
        }
    }

    #[test]
    fn find_minima_rejects_flat_and_single_lobe() {
        let flat = IntensityProfile::new(vec![1.0; 256], 1e-5, 0.0).unwrap();
        assert!(find_minima(&flat, (-1e-3, 1e-3), 0.1).unwrap().is_empty());

        let n = 256;
        let half = (n / 2) as f64;
        let lobe: Vec<f64> = (0..n)
            .map(|i| {
                let x = (i as f64 - half) / half;
                (-x * x * 4.0).exp()
            })
            .collect();
        let prof = IntensityProfile::new(lobe, 1e-5, 0.0).unwrap();
        assert!(find_minima(&prof, (-1e-3, 1e-3), 0.1).unwrap().is_empty());
    }

    #[test]
    fn find_minima_validates_arguments() {
        let prof = IntensityProfile::new(vec![1.0; 16], 1e-5, 0.0).unwrap();
        assert!(find_minima(&prof, (1e-3, -1e-3), 0.1).is_err());
        assert!(find_minima(&prof, (-1e-3, 1e-3), 0.0).is_err());
        assert!(find_minima(&prof, (f64::NAN, 1.0), 0.1).is_err());
    }

    #[test]
    fn angular_filter_passes_a_smooth_beam_untouched() {
        // A 0.4 mm Gaussian waist has spectral width ~1/(pi w0) = 800
        // cycles/m; at a 20 kHz cutoff the ramp never sees any power.
        let f = gaussian_field(1 << 12, 4e-6, 0.4e-3);
        let (out, absorbed) = angular_filter(&f, 2.0e4).unwrap();
        assert!(absorbed.abs() < 1e-12 * total_power(&f));
        for (a, b) in f.samples().iter().zip(out.samples()) {
            assert!((a - b).norm() < 1e-10);
        }
    }

    #[test]
    fn angular_filter_strips_power_from_a_hard_edge() {
        let n = 1 << 12;
        let dx = 4e-6;
        let half_width = 60.0 * dx;
        let samples: Vec<Complex64> = (0..n)
            .map(|i| {
                let x = (i as f64 - (n / 2) as f64) * dx;
                if x.abs() <= half_width {
                    Complex64::new(1.0, 0.0)
                } else {
                    Complex64::new(0.0, 0.0)
                }
            })
            .collect();
        let f = ComplexField::new(samples, dx, 0.0, 650e-9).unwrap();
        let before = total_power(&f);

        let (once, first_loss) = angular_filter(&f, 2.0e4).unwrap();
        assert!(first_loss > 0.0, "a top hat must shed spectral tails");
        assert!(first_loss < 0.1 * before, "losses should stay perturbative");
        assert_relative_eq!(
            total_power(&once),
            before - first_loss,
            max_relative = 1e-12
        );

        // The stop band is already empty the second time around; only the
        // roll-off ramp re-attenuates, so the second pass removes less.
        let (_, second_loss) = angular_filter(&once, 2.0e4).unwrap();
        assert!(second_loss < 0.5 * first_loss);
    }

    #[test]
    fn angular_filter_is_the_identity_at_or_beyond_nyquist() {
        let f = gaussian_field(1 << 10, 4e-6, 0.2e-3);
        let nyquist = 0.5 / 4e-6;
        let (out, absorbed) = angular_filter(&f, nyquist).unwrap();
        assert_eq!(absorbed, 0.0);
        assert_eq!(f.samples(), out.samples());
    }

    #[test]
    fn angular_filter_validates_the_cutoff() {
        let f = gaussian_field(1 << 8, 4e-6, 0.2e-3);
        assert!(angular_filter(&f, 0.0).is_err());
        assert!(angular_filter(&f, -1.0).is_err());
        assert!(angular_filter(&f, f64::NAN).is_err());
    }
}
