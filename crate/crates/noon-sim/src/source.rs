//! Probabilistic photon sources and partial distinguishability.
//!
//! The SPDC source emits perfectly pair-number-correlated photons into the
//! upper and lower paths; the per-pulse pair-number distribution is thermal
//! by default (`w_n = (1−γ)γⁿ`), with poissonian and fixed-n alternatives.
//! Partial distinguishability between the two arms is modeled by a scalar
//! overlap ξ: every lower-path photon is rewritten onto
//! `ξ·(internal 0) + √(1−ξ²)·(internal 1)`, and detection marginalizes over
//! internal labels.

use std::sync::Arc;

use num_complex::Complex64;

use crate::elements::overlap_unitary;
use crate::error::FockError;
use crate::fock::{FockState, Occupation};
use crate::mode::{ModeId, ModeRegistry, PathLabel, Pol};

/// Per-pulse SPDC pair-number statistics.
#[derive(Copy, Clone, Debug, PartialEq)]
pub enum PairKind {
    /// `w_n = (1−γ)γⁿ` — single-mode pulsed SPDC statistics.
    Thermal,
    /// `w_n = e^{−γ}γⁿ/n!` with mean `γ`.
    Poissonian,
    /// Exactly `n` pairs per pulse.
    FixedN(u8),
}

/// Pair-number distribution with truncation.
#[derive(Copy, Clone, Debug, PartialEq)]
pub struct PairDistribution {
    pub kind: PairKind,
    /// Per-pulse single-pair probability scale γ ∈ [0, 1).
    pub gamma: f64,
    /// Largest pair number kept; weights are renormalized after truncation.
    pub n_max_pairs: u8,
}

impl PairDistribution {
    pub fn new(kind: PairKind, gamma: f64, n_max_pairs: u8) -> Result<Self, FockError> {
        match kind {
            PairKind::FixedN(n) => {
                if n > n_max_pairs {
                    return Err(FockError::InvalidParameter(format!(
                        "fixed pair number {n} exceeds truncation {n_max_pairs}"
                    )));
                }
            }
            _ => {
                if !(0.0..1.0).contains(&gamma) {
                    return Err(FockError::InvalidParameter(format!(
                        "γ must lie in [0, 1), got {gamma}"
                    )));
                }
            }
        }
        Ok(Self { kind, gamma, n_max_pairs })
    }

    pub fn thermal(gamma: f64, n_max_pairs: u8) -> Result<Self, FockError> {
        Self::new(PairKind::Thermal, gamma, n_max_pairs)
    }

    pub fn poissonian(gamma: f64, n_max_pairs: u8) -> Result<Self, FockError> {
        Self::new(PairKind::Poissonian, gamma, n_max_pairs)
    }

    pub fn fixed(n: u8) -> Self {
        Self { kind: PairKind::FixedN(n), gamma: 0.0, n_max_pairs: n }
    }

    /// Truncated, renormalized weights `w_0 ..= w_n_max_pairs`.
    pub fn weights(&self) -> Vec<f64> {
        let n = self.n_max_pairs as usize;
        let mut w = vec![0.0; n + 1];
        match self.kind {
            PairKind::Thermal => {
                for (k, wk) in w.iter_mut().enumerate() {
                    *wk = (1.0 - self.gamma) * self.gamma.powi(k as i32);
                }
            }
            PairKind::Poissonian => {
                let mut term = (-self.gamma).exp();
                for (k, wk) in w.iter_mut().enumerate() {
                    *wk = term;
                    term *= self.gamma / (k + 1) as f64;
                }
            }
            PairKind::FixedN(k) => {
                w[k as usize] = 1.0;
            }
        }
        let total: f64 = w.iter().sum();
        for wk in &mut w {
            *wk /= total;
        }
        w
    }
}

/// Scalar wave-packet overlap between the upper- and lower-path photons.
#[derive(Copy, Clone, Debug, PartialEq)]
pub struct OverlapModel {
    /// Overlap at zero delay, ξ ∈ [0, 1].
    pub xi: f64,
    /// Coherence scale of the Gaussian delay envelope.
    pub tau_c: f64,
}

impl OverlapModel {
    pub fn new(xi: f64, tau_c: f64) -> Result<Self, FockError> {
        if !(0.0..=1.0).contains(&xi) {
            return Err(FockError::InvalidParameter(format!("ξ must lie in [0, 1], got {xi}")));
        }
        if tau_c <= 0.0 {
            return Err(FockError::InvalidParameter(format!("τ_c must be positive, got {tau_c}")));
        }
        Ok(Self { xi, tau_c })
    }

    /// Perfect overlap, delay-independent.
    pub fn ideal() -> Self {
        Self { xi: 1.0, tau_c: 1.0 }
    }

    /// `ξ(τ) = ξ(0)·exp(−(τ/τ_c)²)`, monotone non-increasing in |τ|.
    pub fn xi_at(&self, delay: f64) -> f64 {
        self.xi * (-(delay / self.tau_c).powi(2)).exp()
    }
}

/// SPDC output `Σ_n √w_n |n⟩_(upper,H) |n⟩_(lower,H)` on internal label 0.
pub fn spdc_state(
    dist: &PairDistribution,
    registry: Arc<ModeRegistry>,
    n_max: u32,
) -> Result<FockState, FockError> {
    if 2 * dist.n_max_pairs as u32 > n_max {
        return Err(FockError::TruncationExceeded {
            total: 2 * dist.n_max_pairs as u32,
            n_max,
        });
    }
    let upper = registry.index_of(ModeId::base(PathLabel::Upper, Pol::H))?;
    let lower = registry.index_of(ModeId::base(PathLabel::Lower, Pol::H))?;
    let weights = dist.weights();
    let mut terms: Vec<(Occupation, Complex64)> = Vec::with_capacity(weights.len());
    for (n, &w) in weights.iter().enumerate() {
        if w <= 0.0 {
            continue;
        }
        let mut occ = vec![0u8; registry.len()];
        occ[upper] = n as u8;
        occ[lower] = n as u8;
        terms.push((occ, Complex64::new(w.sqrt(), 0.0)));
    }
    FockState::from_terms(registry, terms, n_max)
}

/// Truncated coherent state with mean photon number `mean_photons` in `mode`.
pub fn coherent_pulse(
    mean_photons: f64,
    mode: ModeId,
    registry: Arc<ModeRegistry>,
    n_max: u32,
) -> Result<FockState, FockError> {
    if mean_photons < 0.0 {
        return Err(FockError::InvalidParameter(format!(
            "mean photon number must be non-negative, got {mean_photons}"
        )));
    }
    let idx = registry.index_of(mode)?;
    let beta = mean_photons.sqrt();
    let mut terms: Vec<(Occupation, Complex64)> = Vec::new();
    let mut amp = 1.0f64; // β^m / √(m!) before normalization
    let mut norm2 = 0.0f64;
    let mut amps = Vec::new();
    for m in 0..=n_max as usize {
        amps.push(amp);
        norm2 += amp * amp;
        amp *= beta / ((m + 1) as f64).sqrt();
    }
    let scale = 1.0 / norm2.sqrt();
    for (m, &a) in amps.iter().enumerate() {
        let value = a * scale;
        if value.abs() < 1e-14 && m > 0 {
            continue;
        }
        let mut occ = vec![0u8; registry.len()];
        occ[idx] = m as u8;
        terms.push((occ, Complex64::new(value, 0.0)));
    }
    FockState::from_terms(registry, terms, n_max)
}

/// Rewrites every lower-path photon onto the delayed wave packet:
/// `ξ(τ)·(internal 0) + √(1−ξ(τ)²)·(internal 1)`.
///
/// Requires the registry to carry internal labels 0 and 1 for the lower
/// path. Norm and photon number are preserved exactly.
pub fn apply_overlap(
    state: &FockState,
    om: &OverlapModel,
    delay: f64,
) -> Result<FockState, FockError> {
    let xi = om.xi_at(delay);
    let u = overlap_unitary(PathLabel::Lower, xi, state.registry())?;
    state.apply_unitary(&u)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::elements::CircuitElement;
    use approx::assert_abs_diff_eq;

    fn source_registry(with_internal: bool) -> Arc<ModeRegistry> {
        let mut modes = Vec::new();
        let internals: &[u8] = if with_internal { &[0, 1] } else { &[0] };
        for &path in &[PathLabel::Upper, PathLabel::Lower] {
            for &k in internals {
                modes.push(ModeId::new(path, Pol::H, k));
            }
        }
        ModeRegistry::new(modes).unwrap()
    }

    #[test]
    fn thermal_weights_are_geometric() {
        let d = PairDistribution::thermal(0.05, 10).unwrap();
        let w = d.weights();
        assert_abs_diff_eq!(w.iter().sum::<f64>(), 1.0, epsilon = 1e-12);
        // w2 / w3 = 1/γ = 20
        assert_abs_diff_eq!(w[2] / w[3], 20.0, epsilon = 1e-9);
    }

    #[test]
    fn thermal_gamma_zero_is_vacuum() {
        let reg = source_registry(false);
        let d = PairDistribution::thermal(0.0, 4).unwrap();
        let s = spdc_state(&d, reg, 8).unwrap();
        assert_eq!(s.num_terms(), 1);
        assert_abs_diff_eq!(s.amplitude(&[0, 0]).re, 1.0, epsilon = 1e-15);
    }

    #[test]
    fn fixed_two_pairs_is_double_pair_input() {
        let reg = source_registry(false);
        let s = spdc_state(&PairDistribution::fixed(2), reg, 8).unwrap();
        assert_abs_diff_eq!(s.amplitude(&[2, 2]).norm(), 1.0, epsilon = 1e-15);
    }

    #[test]
    fn spdc_is_pair_number_correlated_and_normalized() {
        let reg = source_registry(false);
        let d = PairDistribution::thermal(0.2, 4).unwrap();
        let s = spdc_state(&d, reg.clone(), 8).unwrap();
        assert_abs_diff_eq!(s.norm_sqr(), 1.0, epsilon = 1e-12);
        let dist = s
            .marginal_distribution(&[
                ModeId::base(PathLabel::Upper, Pol::H),
                ModeId::base(PathLabel::Lower, Pol::H),
            ])
            .unwrap();
        for (occ, p) in dist {
            if p > 0.0 {
                assert_eq!(occ[0], occ[1]);
            }
        }
    }

    #[test]
    fn spdc_truncation_guard() {
        let reg = source_registry(false);
        let d = PairDistribution::thermal(0.2, 5).unwrap();
        assert!(matches!(
            spdc_state(&d, reg, 8),
            Err(FockError::TruncationExceeded { .. })
        ));
    }

    #[test]
    fn coherent_pulse_statistics() {
        let m = ModeId::base(PathLabel::Main, Pol::H);
        let reg = ModeRegistry::new(vec![m]).unwrap();

        let vac = coherent_pulse(0.0, m, reg.clone(), 8).unwrap();
        assert_abs_diff_eq!(vac.amplitude(&[0]).norm(), 1.0, epsilon = 1e-14);

        let s = coherent_pulse(0.1, m, reg.clone(), 12).unwrap();
        let p1 = s.amplitude(&[1]).norm_sqr();
        let p2 = s.amplitude(&[2]).norm_sqr();
        assert_abs_diff_eq!(p1 / p2, 20.0, epsilon = 1e-6);

        let mean: f64 = s
            .marginal_distribution(&[m])
            .unwrap()
            .iter()
            .map(|(occ, p)| occ[0] as f64 * p)
            .sum();
        assert_abs_diff_eq!(mean, 0.1, epsilon = 1e-10);
    }

    #[test]
    fn overlap_identity_at_xi_one() {
        let reg = source_registry(true);
        let s = spdc_state(&PairDistribution::fixed(1), reg, 8).unwrap();
        let out = apply_overlap(&s, &OverlapModel::ideal(), 0.0).unwrap();
        for (occ, amp) in s.terms() {
            assert_abs_diff_eq!((amp - out.amplitude(occ)).norm(), 0.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn overlap_preserves_norm_and_photon_number() {
        let reg = source_registry(true);
        let s = spdc_state(&PairDistribution::fixed(2), reg, 8).unwrap();
        let om = OverlapModel::new(0.7, 1.0).unwrap();
        let out = apply_overlap(&s, &om, 0.4).unwrap();
        assert_abs_diff_eq!(out.norm_sqr(), 1.0, epsilon = 1e-12);
        for (occ, _) in out.terms() {
            let total: u32 = occ.iter().map(|&c| c as u32).sum();
            assert_eq!(total, 4);
        }
    }

    #[test]
    fn hom_coincidence_follows_analytic_overlap_law() {
        // One photon per arm through a 50:50 path mixer: coincidence
        // probability (1−ξ²)/2, checked on an 11-point ξ grid.
        let reg = source_registry(true);
        for i in 0..=10 {
            let xi = i as f64 / 10.0;
            let s = spdc_state(&PairDistribution::fixed(1), reg.clone(), 8).unwrap();
            let om = OverlapModel::new(xi, 1.0).unwrap();
            let s = apply_overlap(&s, &om, 0.0).unwrap();
            // 50:50 mixer between the paths, identity on internal labels
            let mut blocks_modes = Vec::new();
            let mut mat = nalgebra::DMatrix::from_element(4, 4, Complex64::new(0.0, 0.0));
            let r = std::f64::consts::FRAC_1_SQRT_2;
            for (blk, k) in [(0usize, 0u8), (1, 1)] {
                let o = blk * 2;
                mat[(o, o)] = Complex64::new(r, 0.0);
                mat[(o, o + 1)] = Complex64::new(0.0, r);
                mat[(o + 1, o)] = Complex64::new(0.0, r);
                mat[(o + 1, o + 1)] = Complex64::new(r, 0.0);
                blocks_modes.push(ModeId::new(PathLabel::Upper, Pol::H, k));
                blocks_modes.push(ModeId::new(PathLabel::Lower, Pol::H, k));
            }
            let u = crate::fock::SingleParticleUnitary::new(blocks_modes, mat).unwrap();
            let out = s.apply_unitary(&u).unwrap();
            // coincidence: one photon in each path, any internal label
            let dist = out.marginal_distribution(out.registry().modes()).unwrap();
            let mut coincidence = 0.0;
            for (occ, p) in dist {
                let upper: u32 = occ[0] as u32 + occ[1] as u32;
                let lower: u32 = occ[2] as u32 + occ[3] as u32;
                if upper == 1 && lower == 1 {
                    coincidence += p;
                }
            }
            assert_abs_diff_eq!(coincidence, (1.0 - xi * xi) / 2.0, epsilon = 1e-10);
        }
    }

    #[test]
    fn overlap_element_is_exposed_for_presets() {
        let reg = source_registry(true);
        let el = CircuitElement::Overlap { path: PathLabel::Lower, xi: 0.9 };
        assert!(el.unitary(&reg).is_ok());
    }
}
