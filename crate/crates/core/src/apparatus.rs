//! A desk-scale two-slit bench with an absorbing wire grid and a lens.
//!
//! The pipeline runs entirely in scalar 1-D wave optics on a fixed grid:
//! build the slit field, propagate to the grid plane (sigma-1), record
//! the interference profile, optionally absorb at thin wires centered on
//! the measured dark fringes, propagate to the lens, apply the thin-lens
//! phase, propagate to the image plane (sigma-2), and split the imaged
//! power into the two which-slit detector regions. Two absorbers keep
//! the periodic grid honest: a smooth guard band at the window edges,
//! and an angular acceptance cone that strips the slit and wire edges'
//! far spectral tails, whose walk-off over a hop would otherwise wrap
//! around the window. Power lost to either is reported as spill. Every
//! absorbed or detected watt is accounted for: blocked + detected +
//! spill recovers the source power.

use std::collections::BTreeSet;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::wavefield::{
    angular_filter, apply_mask, find_minima, intensity, propagate, thin_lens, total_power,
    ComplexField, IntensityProfile, Mask,
};
use crate::{Error, Result};

/// Maximum tolerated spill fraction before a run is rejected as clipped.
pub const SPILL_LIMIT: f64 = 0.05;

/// Fraction of the window absorbed at each edge by the guard band.
pub const GUARD_FRACTION: f64 = 0.10;

/// Minimum grid samples per interference fringe at the sigma-1 plane.
pub const MIN_SAMPLES_PER_FRINGE: f64 = 32.0;

/// Minimum ratio of window width to the illuminated extent at the lens.
pub const WINDOW_EXTENT_FACTOR: f64 = 8.0;

/// Number of fringes (centered on the axis) over which visibility is
/// measured.
pub const VISIBILITY_FRINGES: f64 = 5.0;

/// A dark fringe must be deeper than this fraction of its neighboring
/// maxima to anchor a wire. Generous on purpose: it rejects only
/// rounding-noise wiggles, not shallow minima of asymmetric envelopes.
const WIRE_MINIMA_DEPTH: f64 = 0.9;

/// Angular acceptance of the bench, as a fraction of the steepest ray
/// that still stays inside the window over the longest hop. A component
/// at spatial frequency `f` walks sideways by `wavelength * z * f` while
/// covering a hop of length `z`; on a periodic grid anything that walks
/// past the window edge re-enters from the other side and corrupts the
/// pattern, so the slit edges' far spectral tails are absorbed at the
/// source (and again right after the wires, which also cut sharp edges).
/// 0.35 of the window per hop leaves room for the beam itself to spread
/// on top of the walk-off.
const ANGULAR_ACCEPTANCE: f64 = 0.35;

/// Which slits are open.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SlitState {
    Both,
    UpperOnly,
    LowerOnly,
}

impl SlitState {
    pub const ALL: [SlitState; 3] = [SlitState::Both, SlitState::UpperOnly, SlitState::LowerOnly];

    pub fn name(&self) -> &'static str {
        match self {
            SlitState::Both => "both",
            SlitState::UpperOnly => "upper",
            SlitState::LowerOnly => "lower",
        }
    }
}

impl std::fmt::Display for SlitState {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for SlitState {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "both" => Ok(SlitState::Both),
            "upper" => Ok(SlitState::UpperOnly),
            "lower" => Ok(SlitState::LowerOnly),
            other => Err(Error::UnknownLabel(other.to_string())),
        }
    }
}

/// Bench geometry and sampling, in SI units.
///
/// The upper slit is centered at `+slit_separation/2`, the lower at
/// `-slit_separation/2`. The grid plane sits `z1` past the slits, the
/// lens `z2` past the grid, and the detectors at the image plane of the
/// slits. The lens always forms a real inverted image
/// (`z1 + z2 > focal_length` is enforced), so the upper slit images onto
/// the `x < detector_boundary` side.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AfsharConfig {
    /// Source wavelength (m).
    pub wavelength: f64,
    /// Width of each slit (m).
    pub slit_width: f64,
    /// Center-to-center slit separation (m).
    pub slit_separation: f64,
    /// Slits to wire-grid plane distance (m).
    pub z1: f64,
    /// Wire-grid plane to lens distance (m).
    pub z2: f64,
    /// Lens focal length (m).
    pub focal_length: f64,
    /// Number of grid wires (0 disables the grid even when requested).
    pub wire_count: usize,
    /// Width of each wire (m); must stay below the fringe spacing.
    pub wire_width: f64,
    /// Image-plane position splitting the detector regions (m).
    pub detector_boundary: f64,
    /// Grid samples (power of two).
    pub sample_count: usize,
    /// Full simulation window width (m).
    pub window_extent: f64,
}

impl Default for AfsharConfig {
    fn default() -> Self {
        AfsharConfig {
            wavelength: 650e-9,
            slit_width: 0.15e-3,
            slit_separation: 1.25e-3,
            z1: 1.0,
            z2: 0.5,
            focal_length: 0.5,
            wire_count: 6,
            wire_width: 0.05e-3,
            detector_boundary: 0.0,
            sample_count: 1 << 16,
            window_extent: 0.131072,
        }
    }
}

impl AfsharConfig {
    /// Grid spacing (m).
    pub fn grid_spacing(&self) -> f64 {
        self.window_extent / self.sample_count as f64
    }

    /// Two-slit fringe spacing at sigma-1: `wavelength * z1 / separation`.
    pub fn fringe_spacing(&self) -> f64 {
        self.wavelength * self.z1 / self.slit_separation
    }

    /// Lens-to-image distance from `1/zi = 1/f - 1/(z1+z2)`.
    pub fn image_distance(&self) -> f64 {
        let zo = self.z1 + self.z2;
        1.0 / (1.0 / self.focal_length - 1.0 / zo)
    }

    /// Transverse magnification of the slit plane (negative: inverted).
    pub fn magnification(&self) -> f64 {
        -self.image_distance() / (self.z1 + self.z2)
    }

    /// Position window covering the central [`VISIBILITY_FRINGES`].
    pub fn visibility_window(&self) -> (f64, f64) {
        let half = 0.5 * VISIBILITY_FRINGES * self.fringe_spacing();
        (-half, half)
    }

    /// Beam extent at the lens plane: slit system plus single-slit
    /// diffraction spread on both sides.
    fn illuminated_extent(&self) -> f64 {
        self.slit_separation
            + self.slit_width
            + 2.0 * self.wavelength * (self.z1 + self.z2) / self.slit_width
    }

    /// Checks every structural constraint; run before any simulation.
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("wavelength", self.wavelength),
            ("slit_width", self.slit_width),
            ("slit_separation", self.slit_separation),
            ("z1", self.z1),
            ("z2", self.z2),
            ("focal_length", self.focal_length),
            ("wire_width", self.wire_width),
            ("window_extent", self.window_extent),
        ];
        for (name, value) in positive {
            if !(value.is_finite() && value > 0.0) {
                return Err(Error::InvalidConfig(format!(
                    "{name} must be finite and positive, got {value}"
                )));
            }
        }
        if !self.detector_boundary.is_finite()
            || self.detector_boundary.abs() >= 0.5 * self.window_extent
        {
            return Err(Error::InvalidConfig(format!(
                "detector_boundary {} must lie inside the window",
                self.detector_boundary
            )));
        }
        if self.slit_separation <= self.slit_width {
            return Err(Error::InvalidConfig(format!(
                "slits overlap: separation {} <= width {}",
                self.slit_separation, self.slit_width
            )));
        }
        if self.z1 + self.z2 <= self.focal_length {
            return Err(Error::InvalidConfig(format!(
                "no real image: z1 + z2 = {} must exceed focal_length {}",
                self.z1 + self.z2,
                self.focal_length
            )));
        }
        if self.sample_count < 2 || !self.sample_count.is_power_of_two() {
            return Err(Error::InvalidConfig(format!(
                "sample_count must be a power of two >= 2, got {}",
                self.sample_count
            )));
        }
        let fringe = self.fringe_spacing();
        if self.wire_width >= fringe {
            return Err(Error::InvalidConfig(format!(
                "wire_width {} must stay below the fringe spacing {fringe}",
                self.wire_width
            )));
        }
        let per_fringe = fringe / self.grid_spacing();
        if per_fringe < MIN_SAMPLES_PER_FRINGE {
            return Err(Error::InvalidConfig(format!(
                "only {per_fringe:.1} samples per fringe; need >= {MIN_SAMPLES_PER_FRINGE}"
            )));
        }
        let needed = WINDOW_EXTENT_FACTOR * self.illuminated_extent();
        if self.window_extent < needed {
            return Err(Error::InvalidConfig(format!(
                "window_extent {} is below {WINDOW_EXTENT_FACTOR}x the illuminated extent ({needed:.4})",
                self.window_extent
            )));
        }
        // A focal length creeping up on z1 + z2 blows up the
        // magnification until the image outgrows the window; past that
        // point the periodic transform would wrap the image back into
        // frame instead of clipping it visibly, so refuse early.
        let image_span = self.magnification().abs() * (self.slit_separation + self.slit_width);
        if self.window_extent < 4.0 * image_span {
            return Err(Error::InvalidConfig(format!(
                "magnification {:.1} images the slits over {image_span:.4} m; \
                 window_extent {} must be at least 4x that",
                self.magnification(),
                self.window_extent
            )));
        }
        Ok(())
    }

    /// Sets one field from its config-file key. `at` is the 1-based line
    /// or argument position used in errors.
    pub fn set(&mut self, key: &str, value: &str, at: usize) -> Result<()> {
        let float = |value: &str| -> Result<f64> {
            value
                .parse::<f64>()
                .map_err(|_| Error::parse(at, format!("expected a number, got {value:?}")))
        };
        let count = |value: &str| -> Result<usize> {
            value.parse::<usize>().map_err(|_| {
                Error::parse(
                    at,
                    format!("expected a non-negative integer, got {value:?}"),
                )
            })
        };
        match key {
            "wavelength" => self.wavelength = float(value)?,
            "slit_width" => self.slit_width = float(value)?,
            "slit_separation" => self.slit_separation = float(value)?,
            "z1" => self.z1 = float(value)?,
            "z2" => self.z2 = float(value)?,
            "focal_length" => self.focal_length = float(value)?,
            "wire_count" => self.wire_count = count(value)?,
            "wire_width" => self.wire_width = float(value)?,
            "detector_boundary" => self.detector_boundary = float(value)?,
            "sample_count" => self.sample_count = count(value)?,
            "window_extent" => self.window_extent = float(value)?,
            other => {
                return Err(Error::parse(at, format!("unknown config key {other:?}")));
            }
        }
        Ok(())
    }

    /// Single-line `key=value` rendering of the full config, embedded in
    /// text artifacts.
    pub fn summary_line(&self) -> String {
        format!(
            "wavelength={} slit_width={} slit_separation={} z1={} z2={} focal_length={} \
             wire_count={} wire_width={} detector_boundary={} sample_count={} window_extent={}",
            self.wavelength,
            self.slit_width,
            self.slit_separation,
            self.z1,
            self.z2,
            self.focal_length,
            self.wire_count,
            self.wire_width,
            self.detector_boundary,
            self.sample_count,
            self.window_extent
        )
    }
}

/// Parses a flat `key = value` config file; `#` starts a comment, blank
/// lines are skipped, unknown and repeated keys are rejected. Missing
/// keys keep their defaults. The result is *not* validated; callers
/// apply overrides first and then call [`AfsharConfig::validate`].
pub fn parse_config(text: &str) -> Result<AfsharConfig> {
    let mut config = AfsharConfig::default();
    let mut seen: BTreeSet<String> = BTreeSet::new();
    for (idx, raw) in text.lines().enumerate() {
        let at = idx + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| Error::parse(at, format!("expected key = value, got {line:?}")))?;
        let key = key.trim();
        let value = value.trim();
        if !seen.insert(key.to_string()) {
            return Err(Error::parse(at, format!("duplicate key {key:?}")));
        }
        config.set(key, value, at)?;
    }
    Ok(config)
}

/// Applies one `key=value` override string.
pub fn apply_override(config: &mut AfsharConfig, pair: &str, at: usize) -> Result<()> {
    let (key, value) = pair
        .split_once('=')
        .ok_or_else(|| Error::parse(at, format!("expected key=value, got {pair:?}")))?;
    config.set(key.trim(), value.trim(), at)
}

/// Builds the normalized source field just past the slit plane: unit
/// total power, equal amplitude and phase across the open slit(s).
pub fn build_slit_field(config: &AfsharConfig, slits: SlitState) -> Result<ComplexField> {
    config.validate()?;
    let n = config.sample_count;
    let dx = config.grid_spacing();
    let half_width = 0.5 * config.slit_width;
    let upper_center = 0.5 * config.slit_separation;
    let lower_center = -0.5 * config.slit_separation;
    let (use_upper, use_lower) = match slits {
        SlitState::Both => (true, true),
        SlitState::UpperOnly => (true, false),
        SlitState::LowerOnly => (false, true),
    };

    let half = (n / 2) as f64;
    let mut samples = vec![Complex64::new(0.0, 0.0); n];
    let mut open_cells = 0usize;
    for (i, sample) in samples.iter_mut().enumerate() {
        let x = (i as f64 - half) * dx;
        let in_upper = use_upper && (x - upper_center).abs() <= half_width;
        let in_lower = use_lower && (x - lower_center).abs() <= half_width;
        if in_upper || in_lower {
            *sample = Complex64::new(1.0, 0.0);
            open_cells += 1;
        }
    }
    if open_cells == 0 {
        return Err(Error::InvalidConfig(
            "slit width is below one grid cell; no open samples".into(),
        ));
    }
    let scale = 1.0 / (open_cells as f64 * dx).sqrt();
    for sample in &mut samples {
        *sample *= scale;
    }
    ComplexField::new(samples, dx, 0.0, config.wavelength)
}

/// One wire interval of the grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WireSpan {
    pub center: f64,
    pub width: f64,
}

impl WireSpan {
    pub fn lo(&self) -> f64 {
        self.center - 0.5 * self.width
    }

    pub fn hi(&self) -> f64 {
        self.center + 0.5 * self.width
    }

    pub fn contains(&self, x: f64) -> bool {
        (x - self.center).abs() <= 0.5 * self.width
    }
}

/// Spatial-frequency cutoff (cycles per meter) for this bench: the
/// steepest component whose walk-off over the longest hop still fits in
/// [`ANGULAR_ACCEPTANCE`] of the window.
fn angular_cutoff(config: &AfsharConfig) -> f64 {
    let longest_hop = config.z1.max(config.z2).max(config.image_distance());
    ANGULAR_ACCEPTANCE * config.window_extent / (config.wavelength * longest_hop)
}

/// Slit field with the bench's angular acceptance applied. Returns the
/// filtered field and the power absorbed by the acceptance cone.
fn prepared_source(config: &AfsharConfig, slits: SlitState) -> Result<(ComplexField, f64)> {
    let raw = build_slit_field(config, slits)?;
    angular_filter(&raw, angular_cutoff(config))
}

/// Places the wire grid: simulates the both-slits, no-grid pattern at
/// sigma-1, finds its dark fringes, and returns `wire_count` intervals of
/// width `wire_width` centered on the minima nearest the axis, sorted by
/// position. Fails when the pattern does not offer enough minima.
pub fn place_wires(config: &AfsharConfig) -> Result<Vec<WireSpan>> {
    config.validate()?;
    if config.wire_count == 0 {
        return Ok(Vec::new());
    }
    let (source, _) = prepared_source(config, SlitState::Both)?;
    let at_grid = propagate(&source, config.z1)?;
    let (at_grid, _spill) = guard_absorb(&at_grid);
    let profile = intensity(&at_grid);

    let fringe = config.fringe_spacing();
    let reach = (0.5 * config.wire_count as f64 + 1.5) * fringe;
    let minima = find_minima(&profile, (-reach, reach), WIRE_MINIMA_DEPTH)?;
    if minima.len() < config.wire_count {
        return Err(Error::InsufficientFringes(format!(
            "found {} usable dark fringes within {:.4e} m, need {}",
            minima.len(),
            reach,
            config.wire_count
        )));
    }
    let mut nearest = minima;
    nearest.sort_by(|a, b| {
        a.abs()
            .partial_cmp(&b.abs())
            .expect("minima positions are finite")
            .then(a.partial_cmp(b).expect("minima positions are finite"))
    });
    nearest.truncate(config.wire_count);
    nearest.sort_by(|a, b| a.partial_cmp(b).expect("minima positions are finite"));
    Ok(nearest
        .into_iter()
        .map(|center| WireSpan {
            center,
            width: config.wire_width,
        })
        .collect())
}

/// Binary absorbing mask realizing the wire grid on the config grid.
pub fn wire_mask(config: &AfsharConfig, spans: &[WireSpan]) -> Result<Mask> {
    let n = config.sample_count;
    let dx = config.grid_spacing();
    let half = (n / 2) as f64;
    let open: Vec<bool> = (0..n)
        .map(|i| {
            let x = (i as f64 - half) * dx;
            !spans.iter().any(|s| s.contains(x))
        })
        .collect();
    Mask::absorptive_binary(&open, dx, 0.0)
}

/// Fraction of the window's value span a turning point must stand out by
/// before it counts as a fringe extremum. Filters rounding-level wiggles
/// without touching even heavily damped real fringes.
const EXTREMUM_PROMINENCE: f64 = 1e-3;

/// Fringe visibility over a position window: alternating local extrema
/// with prominence above [`EXTREMUM_PROMINENCE`] of the window's span are
/// paired in position order and `(hi - lo) / (hi + lo)` is averaged over
/// the pairs.
///
/// A window whose samples are all equal has no fringe structure at all
/// and errors; a window with structure but fewer than two extrema (a
/// smooth envelope) reports zero visibility. Turning points at the very
/// first window sample are ignored, so the window edge itself never
/// fakes an extremum.
pub fn fringe_visibility(profile: &IntensityProfile, window: (f64, f64)) -> Result<f64> {
    if !(window.0.is_finite() && window.1.is_finite() && window.0 < window.1) {
        return Err(Error::InvalidField(format!(
            "window must be a finite non-empty interval, got ({}, {})",
            window.0, window.1
        )));
    }
    let v = profile.values();
    let in_window: Vec<usize> = (0..v.len())
        .filter(|&i| {
            let x = profile.position(i);
            x >= window.0 && x <= window.1
        })
        .collect();
    let Some(&first) = in_window.first() else {
        return Err(Error::InsufficientFringes(
            "window contains no samples".into(),
        ));
    };

    let lo = in_window
        .iter()
        .map(|&i| v[i])
        .fold(f64::INFINITY, f64::min);
    let hi = in_window
        .iter()
        .map(|&i| v[i])
        .fold(f64::NEG_INFINITY, f64::max);
    if lo == hi {
        return Err(Error::InsufficientFringes(
            "flat profile has no extrema".into(),
        ));
    }
    let delta = EXTREMUM_PROMINENCE * (hi - lo);

    // Hysteresis walk: a candidate extremum is committed only once the
    // profile has moved `delta` back the other way, so sub-prominence
    // jitter never splits a fringe into spurious turning points.
    let mut extrema: Vec<f64> = Vec::new();
    let mut direction: i8 = 0;
    let mut hi_cand = (v[first], first);
    let mut lo_cand = (v[first], first);
    for &i in &in_window[1..] {
        let x = v[i];
        if direction >= 0 && x > hi_cand.0 {
            hi_cand = (x, i);
        }
        if direction <= 0 && x < lo_cand.0 {
            lo_cand = (x, i);
        }
        match direction {
            0 => {
                if x <= hi_cand.0 - delta {
                    if hi_cand.1 != first {
                        extrema.push(hi_cand.0);
                    }
                    direction = -1;
                    lo_cand = (x, i);
                } else if x >= lo_cand.0 + delta {
                    if lo_cand.1 != first {
                        extrema.push(lo_cand.0);
                    }
                    direction = 1;
                    hi_cand = (x, i);
                }
            }
            1 => {
                if x <= hi_cand.0 - delta {
                    extrema.push(hi_cand.0);
                    direction = -1;
                    lo_cand = (x, i);
                }
            }
            _ => {
                if x >= lo_cand.0 + delta {
                    extrema.push(lo_cand.0);
                    direction = 1;
                    hi_cand = (x, i);
                }
            }
        }
    }

    if extrema.len() < 2 {
        return Ok(0.0);
    }
    let mut sum = 0.0;
    for pair in extrema.windows(2) {
        let hi = pair[0].max(pair[1]);
        let lo = pair[0].min(pair[1]);
        sum += (hi - lo) / (hi + lo);
    }
    Ok(sum / (extrema.len() - 1) as f64)
}

/// Everything measured in one scenario run. All power figures are
/// fractions of the source power.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioResult {
    pub slits: SlitState,
    pub grid_on: bool,
    /// Intensity at the wire-grid plane, before any wires.
    pub sigma1_profile: IntensityProfile,
    /// Intensity at the image (detector) plane.
    pub image_profile: IntensityProfile,
    /// Fringe visibility of `sigma1_profile` over the central fringes.
    pub visibility: f64,
    /// Power absorbed by the wires.
    pub blocked_fraction: f64,
    /// Power landing on the upper-slit detector (image side `x <
    /// detector_boundary`; the image is inverted).
    pub flux_u_prime: f64,
    /// Power landing on the lower-slit detector.
    pub flux_l_prime: f64,
    /// Power absorbed outside the useful aperture: window guard bands
    /// across all hops plus the angular acceptance cone at the source
    /// and, with the grid on, after the wires.
    pub spill: f64,
    /// Dark-fringe positions measured in `sigma1_profile` over the
    /// visibility window (empty when the pattern has none).
    pub minima_positions: Vec<f64>,
    /// Wire intervals applied (empty when the grid is off).
    pub wire_spans: Vec<WireSpan>,
}

impl ScenarioResult {
    /// Total power reaching the detectors.
    pub fn detected_power(&self) -> f64 {
        self.flux_u_prime + self.flux_l_prime
    }

    /// `|blocked + detected + spill - 1|`; rounding-level when the
    /// accounting closes.
    pub fn conservation_residual(&self) -> f64 {
        (self.blocked_fraction + self.detected_power() + self.spill - 1.0).abs()
    }
}

/// Runs one scenario through the full bench pipeline.
///
/// Fails with [`Error::WindowTooSmall`] when more than [`SPILL_LIMIT`] of
/// the power falls into the guard bands, and propagates placement
/// failures when the grid is requested but the pattern lacks usable dark
/// fringes.
pub fn run_scenario(
    config: &AfsharConfig,
    slits: SlitState,
    grid_on: bool,
) -> Result<ScenarioResult> {
    config.validate()?;
    let raw_source = build_slit_field(config, slits)?;
    let source_power = total_power(&raw_source);
    let cutoff = angular_cutoff(config);
    let (source, acceptance_loss_source) = angular_filter(&raw_source, cutoff)?;

    let at_grid = propagate(&source, config.z1)?;
    let (at_grid, spill_1) = guard_absorb(&at_grid);
    let sigma1_profile = intensity(&at_grid);
    let visibility = fringe_visibility(&sigma1_profile, config.visibility_window())?;
    let minima_positions = find_minima(
        &sigma1_profile,
        config.visibility_window(),
        WIRE_MINIMA_DEPTH,
    )?;

    let mut acceptance_loss_grid = 0.0;
    let (past_grid, blocked, wire_spans) = if grid_on && config.wire_count > 0 {
        let spans = place_wires(config)?;
        let mask = wire_mask(config, &spans)?;
        let masked = apply_mask(&at_grid, &mask)?;
        let blocked = total_power(&at_grid) - total_power(&masked);
        // The wire edges are as sharp as the slits were; strip what the
        // bench cannot carry before the next hop.
        let (masked, loss) = angular_filter(&masked, cutoff)?;
        acceptance_loss_grid = loss;
        (masked, blocked, spans)
    } else {
        (at_grid, 0.0, Vec::new())
    };

    let at_lens = propagate(&past_grid, config.z2)?;
    let (at_lens, spill_2) = guard_absorb(&at_lens);
    let refracted = thin_lens(&at_lens, config.focal_length)?;
    let at_image = propagate(&refracted, config.image_distance())?;
    let (at_image, spill_3) = guard_absorb(&at_image);
    let image_profile = intensity(&at_image);

    // Inverted real image: the upper slit lands on x < boundary. A
    // sample exactly on the boundary splits evenly.
    let dx = image_profile.grid_spacing();
    let boundary = config.detector_boundary;
    let mut flux_u_prime = 0.0;
    let mut flux_l_prime = 0.0;
    for (i, value) in image_profile.values().iter().enumerate() {
        let x = image_profile.position(i);
        let power = value * dx;
        if x < boundary {
            flux_u_prime += power;
        } else if x > boundary {
            flux_l_prime += power;
        } else {
            flux_u_prime += 0.5 * power;
            flux_l_prime += 0.5 * power;
        }
    }

    let inv = 1.0 / source_power;
    let spill = (acceptance_loss_source + acceptance_loss_grid + spill_1 + spill_2 + spill_3) * inv;
    if spill > SPILL_LIMIT {
        return Err(Error::WindowTooSmall {
            spill,
            limit: SPILL_LIMIT,
        });
    }

    Ok(ScenarioResult {
        slits,
        grid_on,
        sigma1_profile,
        image_profile,
        visibility,
        blocked_fraction: blocked * inv,
        flux_u_prime: flux_u_prime * inv,
        flux_l_prime: flux_l_prime * inv,
        spill,
        minima_positions,
        wire_spans,
    })
}

/// Smooth absorbing guard band: amplitude rolls off as cos^2 across the
/// outer [`GUARD_FRACTION`] of the window on each side. Returns the
/// absorbed power.
fn guard_absorb(field: &ComplexField) -> (ComplexField, f64) {
    let before = total_power(field);
    let window = field.window_extent();
    let ramp_start = (0.5 - GUARD_FRACTION) * window;
    let ramp_width = GUARD_FRACTION * window;
    let half = (field.len() / 2) as f64;
    let dx = field.grid_spacing();

    let mut out = field.clone();
    for (i, sample) in out.samples_mut().iter_mut().enumerate() {
        // Distance from the window center; the offset cancels because
        // the ramp is defined relative to the window itself.
        let edge_distance = ((i as f64 - half) * dx).abs();
        if edge_distance > ramp_start {
            let s = ((edge_distance - ramp_start) / ramp_width).min(1.0);
            let t = (0.5 * std::f64::consts::PI * s).cos();
            *sample *= t * t;
        }
    }
    let after = total_power(&out);
    (out, before - after)
}

/// Photon counts per terminal category from a multinomial draw.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct PhotonTallies {
    pub n: u64,
    pub u_prime: u64,
    pub l_prime: u64,
    pub blocked: u64,
    pub spill: u64,
}

impl PhotonTallies {
    pub fn total(&self) -> u64 {
        self.u_prime + self.l_prime + self.blocked + self.spill
    }
}

/// Samples `n` photons into the four terminal categories of a scenario
/// result. Photon `i` uses an RNG stream derived only from `(seed, i)`,
/// so tallies are reproducible and independent of evaluation order;
/// tallies always sum to `n`.
pub fn sample_photons(result: &ScenarioResult, n: u64, seed: u64) -> PhotonTallies {
    let c1 = result.flux_u_prime;
    let c2 = c1 + result.flux_l_prime;
    let c3 = c2 + result.blocked_fraction;
    let mut tallies = PhotonTallies {
        n,
        u_prime: 0,
        l_prime: 0,
        blocked: 0,
        spill: 0,
    };
    for photon in 0..n {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(photon);
        let u: f64 = rng.gen();
        if u < c1 {
            tallies.u_prime += 1;
        } else if u < c2 {
            tallies.l_prime += 1;
        } else if u < c3 {
            tallies.blocked += 1;
        } else {
            tallies.spill += 1;
        }
    }
    tallies
}

#[derive(Serialize)]
struct PhotonBlock<'a> {
    seed: u64,
    #[serde(flatten)]
    tallies: &'a PhotonTallies,
}

#[derive(Serialize)]
struct Summary<'a> {
    schema: u32,
    config: &'a AfsharConfig,
    slits: &'a str,
    grid_on: bool,
    visibility: f64,
    blocked_fraction: f64,
    flux_u_prime: f64,
    flux_l_prime: f64,
    spill: f64,
    conservation_residual: f64,
    minima_positions_m: &'a [f64],
    wire_centers_m: Vec<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    photons: Option<PhotonBlock<'a>>,
}

/// Schema version stamped into every artifact.
pub const ARTIFACT_SCHEMA: u32 = 1;

/// JSON summary of one scenario: schema version, resolved config, and
/// every scalar in the result (profiles are exported separately as CSV).
pub fn summary_json(
    config: &AfsharConfig,
    result: &ScenarioResult,
    photons: Option<(&PhotonTallies, u64)>,
) -> String {
    let summary = Summary {
        schema: ARTIFACT_SCHEMA,
        config,
        slits: result.slits.name(),
        grid_on: result.grid_on,
        visibility: result.visibility,
        blocked_fraction: result.blocked_fraction,
        flux_u_prime: result.flux_u_prime,
        flux_l_prime: result.flux_l_prime,
        spill: result.spill,
        conservation_residual: result.conservation_residual(),
        minima_positions_m: &result.minima_positions,
        wire_centers_m: result.wire_spans.iter().map(|s| s.center).collect(),
        photons: photons.map(|(tallies, seed)| PhotonBlock { seed, tallies }),
    };
    let mut text = serde_json::to_string_pretty(&summary).expect("summary serializes infallibly");
    text.push('\n');
    text
}

/// CSV rendering of a profile with embedded schema and config comments.
pub fn profile_csv(config: &AfsharConfig, profile: &IntensityProfile) -> String {
    let mut out = String::with_capacity(profile.len() * 32);
    out.push_str(&format!("# schema: {ARTIFACT_SCHEMA}\n"));
    out.push_str(&format!("# config: {}\n", config.summary_line()));
    out.push_str("position_m,intensity\n");
    for (i, v) in profile.values().iter().enumerate() {
        out.push_str(&format!("{:.9e},{:.9e}\n", profile.position(i), v));
    }
    out
}
