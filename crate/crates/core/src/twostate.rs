//! Two-level systems between preparation and post-selection.
//!
//! States live in C^2. A prepared state measured in an intermediate basis
//! obeys the Born rule; conditioning additionally on a later post-selection
//! gives the two-vector conditional probability
//!
//! ```text
//! P(k | pre, post) = |<post|k><k|pre>|^2 / sum_j |<post|j><j|pre>|^2
//! ```
//!
//! for a single intermediate measurement. Labeled states follow the slit
//! dictionary: `S = x+ = (|z+> + |z->)/sqrt(2)`, `U = z+`, `L = z-`, plus
//! the polarization pair `H = (1,0)` and `R = (1,i)/sqrt(2)`.

use std::collections::BTreeMap;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Normalization and orthogonality tolerance for constructed states.
pub const STATE_TOLERANCE: f64 = 1e-12;

const FRAC_1_SQRT_2: f64 = std::f64::consts::FRAC_1_SQRT_2;

/// A normalized two-component complex state vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Ket2 {
    amplitudes: [Complex64; 2],
}

impl Ket2 {
    /// Builds a state from two amplitudes, normalizing unless the vector
    /// is already unit within [`STATE_TOLERANCE`]. Zero or non-finite
    /// vectors are rejected.
    pub fn new(a: Complex64, b: Complex64) -> Result<Ket2> {
        for c in [a, b] {
            if !c.re.is_finite() || !c.im.is_finite() {
                return Err(Error::InvalidState("amplitudes must be finite".into()));
            }
        }
        let norm_sqr = a.norm_sqr() + b.norm_sqr();
        if norm_sqr <= 0.0 {
            return Err(Error::InvalidState("zero vector has no direction".into()));
        }
        let amplitudes = if (norm_sqr - 1.0).abs() <= STATE_TOLERANCE {
            [a, b]
        } else {
            let inv = 1.0 / norm_sqr.sqrt();
            [a * inv, b * inv]
        };
        Ok(Ket2 { amplitudes })
    }

    pub fn amplitudes(&self) -> [Complex64; 2] {
        self.amplitudes
    }

    pub fn amplitude(&self, i: usize) -> Complex64 {
        self.amplitudes[i]
    }

    /// `<self|other>`.
    pub fn inner(&self, other: &Ket2) -> Complex64 {
        self.amplitudes[0].conj() * other.amplitudes[0]
            + self.amplitudes[1].conj() * other.amplitudes[1]
    }

    /// `|<self|other>|`; 1 means equal up to a global phase.
    pub fn overlap_modulus(&self, other: &Ket2) -> f64 {
        self.inner(other).norm()
    }

    /// The unique (up to phase) state orthogonal to this one.
    pub fn orthogonal(&self) -> Ket2 {
        Ket2 {
            amplitudes: [-self.amplitudes[1].conj(), self.amplitudes[0].conj()],
        }
    }
}

/// An orthonormal labeled basis of C^2 with a short grammar name.
#[derive(Debug, Clone, PartialEq)]
pub struct Basis2 {
    name: String,
    states: [Ket2; 2],
    labels: [String; 2],
}

impl Basis2 {
    /// Builds a basis from two states, checking orthonormality to
    /// [`STATE_TOLERANCE`].
    pub fn new(
        name: impl Into<String>,
        first: (impl Into<String>, Ket2),
        second: (impl Into<String>, Ket2),
    ) -> Result<Basis2> {
        let (l0, k0) = (first.0.into(), first.1);
        let (l1, k1) = (second.0.into(), second.1);
        let overlap = k0.overlap_modulus(&k1);
        if overlap > STATE_TOLERANCE {
            return Err(Error::InvalidState(format!(
                "basis states {l0:?} and {l1:?} are not orthogonal (overlap {overlap:.3e})"
            )));
        }
        Ok(Basis2 {
            name: name.into(),
            states: [k0, k1],
            labels: [l0, l1],
        })
    }

    /// Basis containing `ket` as outcome 0 and its orthogonal complement
    /// as outcome 1.
    pub fn from_state(
        name: impl Into<String>,
        label: impl Into<String>,
        ket: Ket2,
        complement_label: impl Into<String>,
    ) -> Basis2 {
        let orth = ket.orthogonal();
        Basis2 {
            name: name.into(),
            states: [ket, orth],
            labels: [label.into(), complement_label.into()],
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn state(&self, i: usize) -> &Ket2 {
        &self.states[i]
    }

    pub fn label(&self, i: usize) -> &str {
        &self.labels[i]
    }

    /// Index of the outcome carrying `label`, if any.
    pub fn outcome_index(&self, label: &str) -> Option<usize> {
        self.labels.iter().position(|l| l == label)
    }

    /// Slit-superposition observable: `S` vs the antisymmetric `A`.
    pub fn superposition() -> Basis2 {
        Basis2::new(
            "S",
            ("S", spin_map("S").expect("builtin label")),
            ("A", spin_map("A").expect("builtin label")),
        )
        .expect("builtin basis is orthonormal")
    }

    /// Which-slit observable with outcomes `U` and `L`.
    pub fn slit() -> Basis2 {
        Basis2::new(
            "O",
            ("U", spin_map("U").expect("builtin label")),
            ("L", spin_map("L").expect("builtin label")),
        )
        .expect("builtin basis is orthonormal")
    }

    /// Spin-x observable with outcomes `x+` and `x-`.
    pub fn jx() -> Basis2 {
        Basis2::new(
            "Jx",
            ("x+", spin_map("x+").expect("builtin label")),
            ("x-", spin_map("x-").expect("builtin label")),
        )
        .expect("builtin basis is orthonormal")
    }

    /// Spin-z observable with outcomes `z+` and `z-`.
    pub fn jz() -> Basis2 {
        Basis2::new(
            "Jz",
            ("z+", spin_map("z+").expect("builtin label")),
            ("z-", spin_map("z-").expect("builtin label")),
        )
        .expect("builtin basis is orthonormal")
    }

    /// Linear polarization with outcomes `H` and `V`.
    pub fn linear() -> Basis2 {
        Basis2::new(
            "HV",
            ("H", spin_map("H").expect("builtin label")),
            ("V", spin_map("V").expect("builtin label")),
        )
        .expect("builtin basis is orthonormal")
    }

    /// Circular polarization with outcomes `R` and `Lc`.
    pub fn circular() -> Basis2 {
        Basis2::new(
            "RL",
            ("R", spin_map("R").expect("builtin label")),
            ("Lc", spin_map("Lc").expect("builtin label")),
        )
        .expect("builtin basis is orthonormal")
    }

    /// Resolves a grammar basis name (`Jx`, `Jz`, `O`, `S`, `HV`, `RL`).
    pub fn by_name(name: &str) -> Result<Basis2> {
        match name {
            "Jx" => Ok(Basis2::jx()),
            "Jz" => Ok(Basis2::jz()),
            "O" => Ok(Basis2::slit()),
            "S" => Ok(Basis2::superposition()),
            "HV" => Ok(Basis2::linear()),
            "RL" => Ok(Basis2::circular()),
            other => Err(Error::UnknownLabel(other.to_string())),
        }
    }
}

/// Resolves a state label to its ket.
///
/// Accepted labels: `S`, `A`, `U`, `L`, `x+`, `x-`, `z+`, `z-`, `H`, `V`,
/// `R`, `Lc` (arrow spellings `x↑`, `x↓`, `z↑`, `z↓` are aliases).
pub fn spin_map(label: &str) -> Result<Ket2> {
    let c = |re: f64, im: f64| Complex64::new(re, im);
    let (a, b) = match label {
        "S" | "x+" | "x↑" => (c(FRAC_1_SQRT_2, 0.0), c(FRAC_1_SQRT_2, 0.0)),
        "A" | "x-" | "x↓" => (c(FRAC_1_SQRT_2, 0.0), c(-FRAC_1_SQRT_2, 0.0)),
        "U" | "z+" | "z↑" | "H" => (c(1.0, 0.0), c(0.0, 0.0)),
        "L" | "z-" | "z↓" | "V" => (c(0.0, 0.0), c(1.0, 0.0)),
        "R" => (c(FRAC_1_SQRT_2, 0.0), c(0.0, FRAC_1_SQRT_2)),
        "Lc" => (c(FRAC_1_SQRT_2, 0.0), c(0.0, -FRAC_1_SQRT_2)),
        other => return Err(Error::UnknownLabel(other.to_string())),
    };
    Ket2::new(a, b)
}

/// Born probability of `basis` outcome `outcome` on `state`.
pub fn born_probability(state: &Ket2, basis: &Basis2, outcome: usize) -> Result<f64> {
    if outcome >= 2 {
        return Err(Error::InvalidState(format!(
            "outcome index {outcome} out of range for a two-level system"
        )));
    }
    Ok(basis.state(outcome).inner(state).norm_sqr())
}

/// Conditional probability of intermediate outcome `outcome` given
/// preparation `pre` and successful post-selection on `post`, for a single
/// intermediate measurement of `basis`.
///
/// Fails when no intermediate outcome connects `pre` to `post` (zero
/// total weight), in which case the conditioning event has probability
/// zero and the ratio is undefined.
pub fn abl_probability(pre: &Ket2, post: &Ket2, basis: &Basis2, outcome: usize) -> Result<f64> {
    if outcome >= 2 {
        return Err(Error::InvalidState(format!(
            "outcome index {outcome} out of range for a two-level system"
        )));
    }
    let weight = |k: usize| (post.inner(basis.state(k)) * basis.state(k).inner(pre)).norm_sqr();
    let w = [weight(0), weight(1)];
    let denom = w[0] + w[1];
    if denom < f64::MIN_POSITIVE {
        return Err(Error::UndefinedConditional(
            "post-selection is unreachable through every intermediate outcome".into(),
        ));
    }
    Ok(w[outcome] / denom)
}

/// A prepared state, a sequence of intermediate measurements, and an
/// optional post-selection outcome.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasurementChain {
    pre: Ket2,
    steps: Vec<Basis2>,
    post: Option<(Basis2, usize)>,
}

impl MeasurementChain {
    pub fn new(pre: Ket2, steps: Vec<Basis2>, post: Option<(Basis2, usize)>) -> Result<Self> {
        if let Some((_, idx)) = &post {
            if *idx >= 2 {
                return Err(Error::InvalidState(format!(
                    "post-selection outcome index {idx} out of range"
                )));
            }
        }
        Ok(MeasurementChain { pre, steps, post })
    }

    pub fn pre(&self) -> &Ket2 {
        &self.pre
    }

    pub fn steps(&self) -> &[Basis2] {
        &self.steps
    }

    pub fn post(&self) -> Option<&(Basis2, usize)> {
        self.post.as_ref()
    }
}

/// Outcome-sequence tallies from a sampled chain. Sequences are recorded
/// for post-selected trials only; rejected trials count toward `trials`
/// but contribute no sequence.
#[derive(Debug, Clone, PartialEq)]
pub struct ChainTallies {
    trials: u64,
    accepted: u64,
    sequences: BTreeMap<Vec<u8>, u64>,
}

impl ChainTallies {
    pub fn trials(&self) -> u64 {
        self.trials
    }

    pub fn accepted(&self) -> u64 {
        self.accepted
    }

    pub fn acceptance_rate(&self) -> f64 {
        if self.trials == 0 {
            0.0
        } else {
            self.accepted as f64 / self.trials as f64
        }
    }

    /// Map from outcome-index sequences (one entry per step) to counts.
    pub fn sequences(&self) -> &BTreeMap<Vec<u8>, u64> {
        &self.sequences
    }

    /// Count of accepted trials whose `step`-th outcome was `outcome`.
    pub fn step_marginal(&self, step: usize, outcome: u8) -> u64 {
        self.sequences
            .iter()
            .filter(|(seq, _)| seq.get(step) == Some(&outcome))
            .map(|(_, n)| n)
            .sum()
    }

    /// Accepted-conditional frequency of `outcome` at `step`.
    pub fn step_frequency(&self, step: usize, outcome: u8) -> f64 {
        if self.accepted == 0 {
            0.0
        } else {
            self.step_marginal(step, outcome) as f64 / self.accepted as f64
        }
    }
}

/// Samples `trials` runs of a measurement chain.
///
/// Each trial draws every intermediate outcome by the Born rule, collapses
/// onto the outcome state, then (if a post-selection is present) accepts
/// the trial with the Born probability of the post-selected outcome.
/// Trial `i` uses an RNG stream derived only from `(seed, i)`, so tallies
/// are reproducible and independent of evaluation order.
pub fn run_chain(chain: &MeasurementChain, trials: u64, seed: u64) -> Result<ChainTallies> {
    let mut sequences: BTreeMap<Vec<u8>, u64> = BTreeMap::new();
    let mut accepted = 0u64;
    for trial in 0..trials {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(trial);
        let mut state = chain.pre.clone();
        let mut seq = Vec::with_capacity(chain.steps.len());
        for basis in &chain.steps {
            let p0 = born_probability(&state, basis, 0)?;
            let k: u8 = if rng.gen::<f64>() < p0 { 0 } else { 1 };
            state = basis.state(k as usize).clone();
            seq.push(k);
        }
        let keep = match &chain.post {
            None => true,
            Some((basis, idx)) => {
                let p = born_probability(&state, basis, *idx)?;
                rng.gen::<f64>() < p
            }
        };
        if keep {
            accepted += 1;
            *sequences.entry(seq).or_insert(0) += 1;
        }
    }
    Ok(ChainTallies {
        trials,
        accepted,
        sequences,
    })
}

/// Parses the compact chain grammar, e.g. `pre=x+ steps=Jx,Jz post=z+`.
///
/// Whitespace-separated `key=value` tokens: `pre` (required) is a state
/// label, `steps` is a comma-separated list of basis names (may be
/// empty), `post` is a state label (may be empty for no post-selection).
/// Errors report the 1-based token position.
pub fn parse_chain(text: &str) -> Result<MeasurementChain> {
    let mut pre: Option<Ket2> = None;
    let mut steps: Vec<Basis2> = Vec::new();
    let mut post: Option<(Basis2, usize)> = None;
    let mut saw_pre = false;

    for (pos, token) in text.split_whitespace().enumerate() {
        let at = pos + 1;
        let (key, value) = token
            .split_once('=')
            .ok_or_else(|| Error::parse(at, format!("expected key=value, got {token:?}")))?;
        match key {
            "pre" => {
                if saw_pre {
                    return Err(Error::parse(at, "duplicate pre".to_string()));
                }
                saw_pre = true;
                let ket = spin_map(value)
                    .map_err(|_| Error::parse(at, format!("unknown state label {value:?}")))?;
                pre = Some(ket);
            }
            "steps" => {
                if !steps.is_empty() {
                    return Err(Error::parse(at, "duplicate steps".to_string()));
                }
                for name in value.split(',').filter(|s| !s.is_empty()) {
                    let basis = Basis2::by_name(name)
                        .map_err(|_| Error::parse(at, format!("unknown basis name {name:?}")))?;
                    steps.push(basis);
                }
            }
            "post" => {
                if post.is_some() {
                    return Err(Error::parse(at, "duplicate post".to_string()));
                }
                if value.is_empty() {
                    continue;
                }
                let ket = spin_map(value)
                    .map_err(|_| Error::parse(at, format!("unknown state label {value:?}")))?;
                let reject = format!("{value}'");
                post = Some((Basis2::from_state("post", value, ket, reject), 0));
            }
            other => {
                return Err(Error::parse(at, format!("unknown key {other:?}")));
            }
        }
    }

    let pre = pre.ok_or_else(|| Error::parse(1, "missing pre=<state>".to_string()))?;
    MeasurementChain::new(pre, steps, post)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn labels_obey_the_slit_dictionary() {
        let s = spin_map("S").unwrap();
        let xp = spin_map("x+").unwrap();
        assert_eq!(s, xp);
        let u = spin_map("U").unwrap();
        let l = spin_map("L").unwrap();
        assert_eq!(u.inner(&l).norm(), 0.0);
        // S = (U + L)/sqrt(2)
        let built = Ket2::new(
            (u.amplitude(0) + l.amplitude(0)) * FRAC_1_SQRT_2,
            (u.amplitude(1) + l.amplitude(1)) * FRAC_1_SQRT_2,
        )
        .unwrap();
        assert!(s.overlap_modulus(&built) > 1.0 - 1e-12);
        let h = spin_map("H").unwrap();
        let r = spin_map("R").unwrap();
        assert_relative_eq!(r.inner(&h).norm_sqr(), 0.5, epsilon = 1e-12);
        assert!(matches!(spin_map("Q"), Err(Error::UnknownLabel(_))));
        assert_eq!(spin_map("x↑").unwrap(), spin_map("x+").unwrap());
    }

    #[test]
    fn kets_normalize_or_reject() {
        let k = Ket2::new(Complex64::new(3.0, 0.0), Complex64::new(0.0, 4.0)).unwrap();
        let norm: f64 = k.amplitudes().iter().map(|c| c.norm_sqr()).sum();
        assert_relative_eq!(norm, 1.0, epsilon = 1e-12);
        assert!(Ket2::new(Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0)).is_err());
        assert!(Ket2::new(Complex64::new(f64::NAN, 0.0), Complex64::new(1.0, 0.0)).is_err());
        let exact = spin_map("U").unwrap();
        assert_eq!(exact.amplitude(0), Complex64::new(1.0, 0.0));
    }

    #[test]
    fn orthogonal_is_orthonormal() {
        let k = Ket2::new(Complex64::new(0.6, 0.2), Complex64::new(-0.3, 0.7)).unwrap();
        let o = k.orthogonal();
        assert!(k.inner(&o).norm() < 1e-15);
        let norm: f64 = o.amplitudes().iter().map(|c| c.norm_sqr()).sum();
        assert_relative_eq!(norm, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn basis_rejects_non_orthogonal_pairs() {
        let s = spin_map("S").unwrap();
        let u = spin_map("U").unwrap();
        assert!(Basis2::new("bad", ("a", s), ("b", u)).is_err());
        assert!(Basis2::by_name("Jq").is_err());
    }

    #[test]
    fn born_probabilities_are_sound() {
        let u = spin_map("U").unwrap();
        assert_eq!(born_probability(&u, &Basis2::jz(), 0).unwrap(), 1.0);
        assert_eq!(born_probability(&u, &Basis2::jz(), 1).unwrap(), 0.0);
        let p0 = born_probability(&u, &Basis2::jx(), 0).unwrap();
        let p1 = born_probability(&u, &Basis2::jx(), 1).unwrap();
        assert_relative_eq!(p0, 0.5, epsilon = 1e-12);
        assert_relative_eq!(p0 + p1, 1.0, epsilon = 1e-12);
        assert!(born_probability(&u, &Basis2::jx(), 2).is_err());
    }

    #[test]
    fn conditioned_probabilities_sharpen_both_observables() {
        let pre = spin_map("x+").unwrap();
        let post = spin_map("z+").unwrap();
        let px = abl_probability(&pre, &post, &Basis2::jx(), 0).unwrap();
        let pz = abl_probability(&pre, &post, &Basis2::jz(), 0).unwrap();
        assert!((px - 1.0).abs() <= 1e-12);
        assert!((pz - 1.0).abs() <= 1e-12);
        assert!(abl_probability(&pre, &post, &Basis2::jx(), 1).unwrap() <= 1e-12);
        assert!(abl_probability(&pre, &post, &Basis2::jz(), 1).unwrap() <= 1e-12);
    }

    #[test]
    fn orthogonal_pre_post_through_their_own_basis_is_undefined() {
        let pre = spin_map("z+").unwrap();
        let post = spin_map("z-").unwrap();
        assert!(matches!(
            abl_probability(&pre, &post, &Basis2::jz(), 0),
            Err(Error::UndefinedConditional(_))
        ));
        // Through Jx the conditional is well defined and unbiased.
        let p = abl_probability(&pre, &post, &Basis2::jx(), 0).unwrap();
        assert_relative_eq!(p, 0.5, epsilon = 1e-12);
    }

    #[test]
    fn chains_are_deterministic_per_seed() {
        let chain = parse_chain("pre=S steps=Jz post=U").unwrap();
        let a = run_chain(&chain, 2000, 7).unwrap();
        let b = run_chain(&chain, 2000, 7).unwrap();
        assert_eq!(a, b);
        let c = run_chain(&chain, 2000, 8).unwrap();
        assert_ne!(a.sequences(), c.sequences());
    }

    #[test]
    fn unconditioned_eigenstate_chain_is_certain() {
        let chain = parse_chain("pre=x+ steps=Jx").unwrap();
        let t = run_chain(&chain, 10_000, 1).unwrap();
        assert_eq!(t.accepted(), 10_000);
        assert_eq!(t.step_marginal(0, 0), 10_000);
        assert_eq!(t.step_frequency(0, 0), 1.0);
    }

    #[test]
    fn acceptance_rate_tracks_post_selection() {
        let chain = parse_chain("pre=x+ steps= post=z+").unwrap();
        let t = run_chain(&chain, 40_000, 3).unwrap();
        // Binomial(n, 1/2): 4 sigma = 4 * sqrt(n)/2 = 400.
        let dev = (t.accepted() as f64 - 20_000.0).abs();
        assert!(dev < 400.0, "acceptance deviates {dev} > 4 sigma");
        assert_relative_eq!(t.acceptance_rate(), 0.5, epsilon = 0.01);
    }

    #[test]
    fn chain_grammar_round_trips_structure() {
        let chain = parse_chain("pre=x+ steps=Jx,Jz post=z+").unwrap();
        assert_eq!(chain.steps().len(), 2);
        assert_eq!(chain.steps()[0].name(), "Jx");
        assert_eq!(chain.steps()[1].name(), "Jz");
        assert!(chain.post().is_some());
        let bare = parse_chain("pre=z+ steps= post=").unwrap();
        assert!(bare.steps().is_empty());
        assert!(bare.post().is_none());
    }

    #[test]
    fn chain_grammar_reports_positions() {
        match parse_chain("pre=x+ stepz=Jx") {
            Err(Error::Parse { at, .. }) => assert_eq!(at, 2),
            other => panic!("expected parse error, got {other:?}"),
        }
        match parse_chain("pre=quux") {
            Err(Error::Parse { at, .. }) => assert_eq!(at, 1),
            other => panic!("expected parse error, got {other:?}"),
        }
        assert!(parse_chain("steps=Jx").is_err());
        match parse_chain("pre=x+ steps=Jx steps=Jz") {
            Err(Error::Parse { at, .. }) => assert_eq!(at, 3),
            other => panic!("expected parse error, got {other:?}"),
        }
    }
}
