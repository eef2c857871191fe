//! Sparse Fock-state vectors and single-particle linear-optics evolution.
//!
//! States are sparse superpositions over occupation vectors of the modes in
//! a shared [`ModeRegistry`]. A linear-optical element is a
//! [`SingleParticleUnitary`] acting on a subset of modes; applying it
//! substitutes every creation operator `a_i†` by `Σ_j U_ji a_j†` and expands
//! multinomially, which is exact for any photon number.
//!
//! States are immutable values; all operations are pure functions and safe
//! to call concurrently.

use std::collections::BTreeMap;
use std::sync::Arc;

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::FockError;
use crate::mode::{ModeId, ModeRegistry};

/// Photon counts per registered mode, in registry order.
pub type Occupation = Vec<u8>;

/// Amplitudes with magnitude below this are dropped after every operation.
pub const PRUNE_THRESHOLD: f64 = 1e-14;

/// Maximum deviation of U†U from the identity tolerated at construction.
pub const UNITARY_TOL: f64 = 1e-12;

/// Default total-photon truncation bound: covers triple-pair (6-photon)
/// events with margin.
pub const DEFAULT_N_MAX: u32 = 8;

const FACTORIALS: [f64; 35] = {
    let mut f = [1.0; 35];
    let mut i = 1;
    while i < 35 {
        f[i] = f[i - 1] * i as f64;
        i += 1;
    }
    f
};

fn factorial(n: u8) -> f64 {
    FACTORIALS[n as usize]
}

fn occ_total(occ: &[u8]) -> u32 {
    occ.iter().map(|&n| n as u32).sum()
}

/// A unitary matrix acting on an ordered subset of registered modes.
///
/// `matrix[(j, i)]` is the coefficient of `a_modes[j]†` in the image of
/// `a_modes[i]†`.
#[derive(Debug, Clone)]
pub struct SingleParticleUnitary {
    modes: Vec<ModeId>,
    matrix: DMatrix<Complex64>,
}

impl SingleParticleUnitary {
    /// Validates that `matrix` is unitary within [`UNITARY_TOL`] and square
    /// over `modes`.
    pub fn new(modes: Vec<ModeId>, matrix: DMatrix<Complex64>) -> Result<Self, FockError> {
        if matrix.nrows() != matrix.ncols() || matrix.nrows() != modes.len() {
            return Err(FockError::DimensionMismatch {
                dim: matrix.nrows(),
                modes: modes.len(),
            });
        }
        let n = modes.len();
        for i in 0..n {
            for j in i + 1..n {
                if modes[i] == modes[j] {
                    return Err(FockError::DuplicateMode(modes[i]));
                }
            }
        }
        let gram = matrix.adjoint() * &matrix;
        let mut deviation = 0.0f64;
        for i in 0..n {
            for j in 0..n {
                let expect = if i == j { Complex64::new(1.0, 0.0) } else { Complex64::new(0.0, 0.0) };
                deviation = deviation.max((gram[(i, j)] - expect).norm());
            }
        }
        if deviation > UNITARY_TOL {
            return Err(FockError::NotUnitary { deviation });
        }
        Ok(Self { modes, matrix })
    }

    pub fn modes(&self) -> &[ModeId] {
        &self.modes
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.matrix
    }

    /// The composition "self, then `second`" as one unitary.
    ///
    /// Both operands must act on the same mode list in the same order.
    pub fn then(&self, second: &Self) -> Result<Self, FockError> {
        if self.modes != second.modes {
            return Err(FockError::RegistryMismatch);
        }
        Self::new(self.modes.clone(), &second.matrix * &self.matrix)
    }
}

/// Outcome of conditioning on an exact photon count.
///
/// `state` is `None` when the kept branch has squared norm below 1e-14
/// (a zero-probability branch, reported explicitly rather than as a fault).
#[derive(Debug, Clone)]
pub struct ConditionOutcome {
    pub state: Option<FockState>,
    pub probability: f64,
}

/// Sparse superposition over multimode photon occupation vectors.
#[derive(Debug, Clone)]
pub struct FockState {
    registry: Arc<ModeRegistry>,
    amps: BTreeMap<Occupation, Complex64>,
    n_max: u32,
}

impl FockState {
    /// The vacuum state of `registry`.
    pub fn vacuum(registry: Arc<ModeRegistry>) -> Self {
        let occ = vec![0u8; registry.len()];
        let mut amps = BTreeMap::new();
        amps.insert(occ, Complex64::new(1.0, 0.0));
        Self { registry, amps, n_max: DEFAULT_N_MAX }
    }

    /// Normalized single-term state with the given occupations (unlisted
    /// modes are empty).
    pub fn basis_state(
        registry: Arc<ModeRegistry>,
        occupation: &[(ModeId, u8)],
        n_max: u32,
    ) -> Result<Self, FockError> {
        let mut occ = vec![0u8; registry.len()];
        for &(mode, count) in occupation {
            occ[registry.index_of(mode)?] += count;
        }
        let total = occ_total(&occ);
        if total > n_max {
            return Err(FockError::TruncationExceeded { total, n_max });
        }
        let mut amps = BTreeMap::new();
        amps.insert(occ, Complex64::new(1.0, 0.0));
        Ok(Self { registry, amps, n_max })
    }

    /// Builds a state from explicit (occupation, amplitude) terms.
    pub fn from_terms(
        registry: Arc<ModeRegistry>,
        terms: impl IntoIterator<Item = (Occupation, Complex64)>,
        n_max: u32,
    ) -> Result<Self, FockError> {
        let mut amps = BTreeMap::new();
        for (occ, amp) in terms {
            if occ.len() != registry.len() {
                return Err(FockError::DimensionMismatch { dim: occ.len(), modes: registry.len() });
            }
            let total = occ_total(&occ);
            if total > n_max {
                return Err(FockError::TruncationExceeded { total, n_max });
            }
            if amp.norm() >= PRUNE_THRESHOLD {
                *amps.entry(occ).or_insert(Complex64::new(0.0, 0.0)) += amp;
            }
        }
        Ok(Self { registry, amps, n_max })
    }

    pub fn registry(&self) -> &Arc<ModeRegistry> {
        &self.registry
    }

    pub fn n_max(&self) -> u32 {
        self.n_max
    }

    pub fn num_terms(&self) -> usize {
        self.amps.len()
    }

    /// Stored (occupation, amplitude) pairs in deterministic order.
    pub fn terms(&self) -> impl Iterator<Item = (&Occupation, Complex64)> {
        self.amps.iter().map(|(o, &a)| (o, a))
    }

    /// Amplitude of one occupation vector (zero if absent).
    pub fn amplitude(&self, occ: &[u8]) -> Complex64 {
        self.amps.get(occ).copied().unwrap_or(Complex64::new(0.0, 0.0))
    }

    /// Amplitude of the basis ket given as (mode, count) pairs.
    pub fn amplitude_of(&self, occupation: &[(ModeId, u8)]) -> Result<Complex64, FockError> {
        let mut occ = vec![0u8; self.registry.len()];
        for &(mode, count) in occupation {
            occ[self.registry.index_of(mode)?] += count;
        }
        Ok(self.amplitude(&occ))
    }

    /// Coefficient of the creation-operator monomial `Π_i a_i†^{n_i}`,
    /// i.e. the Fock amplitude divided by `√(Π_i n_i!)`.
    pub fn monomial_coefficient(&self, occupation: &[(ModeId, u8)]) -> Result<Complex64, FockError> {
        let mut occ = vec![0u8; self.registry.len()];
        for &(mode, count) in occupation {
            occ[self.registry.index_of(mode)?] += count;
        }
        let scale: f64 = occ.iter().map(|&n| factorial(n)).product::<f64>().sqrt();
        Ok(self.amplitude(&occ) / scale)
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.values().map(|a| a.norm_sqr()).sum()
    }

    /// Rescales to unit norm. No-op on the zero state.
    pub fn normalized(mut self) -> Self {
        let n2 = self.norm_sqr();
        if n2 > 0.0 {
            let s = 1.0 / n2.sqrt();
            for a in self.amps.values_mut() {
                *a *= s;
            }
        }
        self
    }

    /// Inner product `⟨self|other⟩` (conjugate-linear in `self`).
    pub fn inner(&self, other: &Self) -> Result<Complex64, FockError> {
        if !Arc::ptr_eq(&self.registry, &other.registry) && self.registry != other.registry {
            return Err(FockError::RegistryMismatch);
        }
        let (small, big, conj_small) = if self.amps.len() <= other.amps.len() {
            (&self.amps, &other.amps, true)
        } else {
            (&other.amps, &self.amps, false)
        };
        let mut acc = Complex64::new(0.0, 0.0);
        for (occ, &a) in small {
            if let Some(&b) = big.get(occ) {
                acc += if conj_small { a.conj() * b } else { b.conj() * a };
            }
        }
        Ok(acc)
    }

    /// Applies a single-particle unitary by monomial substitution.
    ///
    /// Photon number is conserved, so truncation cannot be exceeded. The
    /// norm is preserved to better than 1e-10.
    pub fn apply_unitary(&self, u: &SingleParticleUnitary) -> Result<Self, FockError> {
        let idx: Vec<usize> = u
            .modes
            .iter()
            .map(|&m| self.registry.index_of(m))
            .collect::<Result<_, _>>()?;
        let k = idx.len();
        let mat = &u.matrix;

        let mut out: BTreeMap<Occupation, Complex64> = BTreeMap::new();
        // scratch for the multinomial expansion of one input term
        let mut expansion: Vec<(Vec<u8>, Complex64)> = Vec::new();
        let mut next: Vec<(Vec<u8>, Complex64)> = Vec::new();

        for (occ, &amp) in &self.amps {
            // convert to a monomial coefficient over the affected modes
            let mut mono = amp;
            for &i in &idx {
                mono /= factorial(occ[i]).sqrt();
            }

            expansion.clear();
            expansion.push((vec![0u8; k], mono));
            for (col, &i) in idx.iter().enumerate() {
                let n = occ[i];
                if n == 0 {
                    continue;
                }
                next.clear();
                for (expo, coeff) in expansion.drain(..) {
                    expand_power(mat, col, n, &expo, coeff, &mut next);
                }
                std::mem::swap(&mut expansion, &mut next);
            }

            for (expo, coeff) in expansion.drain(..) {
                let mut new_occ = occ.clone();
                for &i in &idx {
                    new_occ[i] = 0;
                }
                let mut scale = 1.0f64;
                for (slot, &e) in expo.iter().enumerate() {
                    new_occ[idx[slot]] += e;
                    scale *= factorial(new_occ[idx[slot]]);
                }
                // the above over-counts when expo splits across slots that
                // alias the same mode index; registry indices are distinct,
                // so each slot owns its mode and the product is correct
                let amp_out = coeff * scale.sqrt();
                *out.entry(new_occ).or_insert(Complex64::new(0.0, 0.0)) += amp_out;
            }
        }

        out.retain(|_, a| a.norm() >= PRUNE_THRESHOLD);
        Ok(Self { registry: self.registry.clone(), amps: out, n_max: self.n_max })
    }

    /// Keeps only terms with exactly `n` photons in `mode`, removes the mode
    /// from the result, and renormalizes. The returned probability is the
    /// squared norm of the kept part.
    pub fn condition_exact_count(&self, mode: ModeId, n: u8) -> Result<ConditionOutcome, FockError> {
        self.condition_exact_total(&[mode], n as u32)
    }

    /// Like [`Self::condition_exact_count`] but on the total photon count
    /// across a set of modes; all of them are removed from the result.
    pub fn condition_exact_total(&self, modes: &[ModeId], n: u32) -> Result<ConditionOutcome, FockError> {
        let idx: Vec<usize> = modes
            .iter()
            .map(|&m| self.registry.index_of(m))
            .collect::<Result<_, _>>()?;
        let mut kept: BTreeMap<Occupation, Complex64> = BTreeMap::new();
        for (occ, &amp) in &self.amps {
            let total: u32 = idx.iter().map(|&i| occ[i] as u32).sum();
            if total == n {
                let reduced: Occupation = occ
                    .iter()
                    .enumerate()
                    .filter(|(i, _)| !idx.contains(i))
                    .map(|(_, &c)| c)
                    .collect();
                *kept.entry(reduced).or_insert(Complex64::new(0.0, 0.0)) += amp;
            }
        }
        let probability: f64 = kept.values().map(|a| a.norm_sqr()).sum();
        let registry = self.registry.without(modes)?;
        if probability < 1e-14 {
            return Ok(ConditionOutcome { state: None, probability });
        }
        let s = 1.0 / probability.sqrt();
        let amps = kept
            .into_iter()
            .map(|(o, a)| (o, a * s))
            .filter(|(_, a)| a.norm() >= PRUNE_THRESHOLD)
            .collect();
        Ok(ConditionOutcome {
            state: Some(Self { registry, amps, n_max: self.n_max }),
            probability,
        })
    }

    /// Probability distribution over the occupations of `observed` modes,
    /// summing over all unobserved modes.
    pub fn marginal_distribution(
        &self,
        observed: &[ModeId],
    ) -> Result<BTreeMap<Occupation, f64>, FockError> {
        let idx: Vec<usize> = observed
            .iter()
            .map(|&m| self.registry.index_of(m))
            .collect::<Result<_, _>>()?;
        let mut dist: BTreeMap<Occupation, f64> = BTreeMap::new();
        for (occ, &amp) in &self.amps {
            let key: Occupation = idx.iter().map(|&i| occ[i]).collect();
            *dist.entry(key).or_insert(0.0) += amp.norm_sqr();
        }
        Ok(dist)
    }

    /// Re-keys the state onto a smaller registry containing only `modes`.
    ///
    /// Fails if any stored term occupies a mode outside `modes`.
    pub fn restrict_to(&self, modes: &[ModeId]) -> Result<Self, FockError> {
        let idx: Vec<usize> = modes
            .iter()
            .map(|&m| self.registry.index_of(m))
            .collect::<Result<_, _>>()?;
        for occ in self.amps.keys() {
            for (i, &c) in occ.iter().enumerate() {
                if c > 0 && !idx.contains(&i) {
                    return Err(FockError::SupportOutsideModes);
                }
            }
        }
        let registry = ModeRegistry::new(modes.to_vec())?;
        let amps = self
            .amps
            .iter()
            .map(|(occ, &a)| (idx.iter().map(|&i| occ[i]).collect(), a))
            .collect();
        Ok(Self { registry, amps, n_max: self.n_max })
    }

    /// Embeds the state into a larger registry (extra modes empty).
    pub fn embedded_in(&self, registry: Arc<ModeRegistry>) -> Result<Self, FockError> {
        let map: Vec<usize> = self
            .registry
            .modes()
            .iter()
            .map(|&m| registry.index_of(m))
            .collect::<Result<_, _>>()?;
        let amps = self
            .amps
            .iter()
            .map(|(occ, &a)| {
                let mut big = vec![0u8; registry.len()];
                for (small_i, &big_i) in map.iter().enumerate() {
                    big[big_i] = occ[small_i];
                }
                (big, a)
            })
            .collect();
        Ok(Self { registry, amps, n_max: self.n_max })
    }
}

/// Appends to `out` every way of distributing `(Σ_j U[j,col] a_j†)^n` on top
/// of the partial exponent vector `expo`.
fn expand_power(
    mat: &DMatrix<Complex64>,
    col: usize,
    n: u8,
    expo: &[u8],
    coeff: Complex64,
    out: &mut Vec<(Vec<u8>, Complex64)>,
) {
    let k = expo.len();
    let mut ks = vec![0u8; k];
    distribute(mat, col, n, 0, &mut ks, coeff * factorial(n), expo, out);
}

#[allow(clippy::too_many_arguments)]
fn distribute(
    mat: &DMatrix<Complex64>,
    col: usize,
    remaining: u8,
    slot: usize,
    ks: &mut [u8],
    coeff: Complex64,
    expo: &[u8],
    out: &mut Vec<(Vec<u8>, Complex64)>,
) {
    if slot == ks.len() - 1 {
        ks[slot] = remaining;
        let mut c = coeff;
        let mut ok = true;
        for (j, &kj) in ks.iter().enumerate() {
            if kj > 0 {
                let u = mat[(j, col)];
                if u.norm_sqr() == 0.0 {
                    ok = false;
                    break;
                }
                c *= u.powu(kj as u32) / factorial(kj);
            }
        }
        if ok {
            let mut e = expo.to_vec();
            for (j, &kj) in ks.iter().enumerate() {
                e[j] += kj;
            }
            out.push((e, c));
        }
        ks[slot] = 0;
        return;
    }
    for take in 0..=remaining {
        ks[slot] = take;
        distribute(mat, col, remaining - take, slot + 1, ks, coeff, expo, out);
    }
    ks[slot] = 0;
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mode::{PathLabel, Pol};
    use approx::assert_abs_diff_eq;

    fn two_modes() -> (Arc<ModeRegistry>, ModeId, ModeId) {
        let a = ModeId::base(PathLabel::Upper, Pol::H);
        let b = ModeId::base(PathLabel::Lower, Pol::H);
        (ModeRegistry::new(vec![a, b]).unwrap(), a, b)
    }

    fn mixer_50_50(a: ModeId, b: ModeId) -> SingleParticleUnitary {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let m = DMatrix::from_row_slice(
            2,
            2,
            &[
                Complex64::new(s, 0.0),
                Complex64::new(0.0, s),
                Complex64::new(0.0, s),
                Complex64::new(s, 0.0),
            ],
        );
        SingleParticleUnitary::new(vec![a, b], m).unwrap()
    }

    #[test]
    fn vacuum_is_normalized_single_term() {
        let (reg, _, _) = two_modes();
        let v = FockState::vacuum(reg);
        assert_eq!(v.num_terms(), 1);
        assert_abs_diff_eq!(v.norm_sqr(), 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(v.amplitude(&[0, 0]).re, 1.0, epsilon = 1e-15);
    }

    #[test]
    fn basis_state_respects_truncation() {
        let (reg, a, b) = two_modes();
        assert!(FockState::basis_state(reg.clone(), &[(a, 5), (b, 4)], 8).is_err());
        let s = FockState::basis_state(reg, &[(a, 2), (b, 2)], 8).unwrap();
        assert_abs_diff_eq!(s.norm_sqr(), 1.0, epsilon = 1e-15);
    }

    #[test]
    fn hom_bunching_on_balanced_mixer() {
        // |1,1> through a 50:50 mixer: only |2,0> and |0,2> survive.
        let (reg, a, b) = two_modes();
        let s = FockState::basis_state(reg, &[(a, 1), (b, 1)], 8).unwrap();
        let out = s.apply_unitary(&mixer_50_50(a, b)).unwrap();
        assert_abs_diff_eq!(out.amplitude(&[1, 1]).norm(), 0.0, epsilon = 1e-12);
        let expected = std::f64::consts::FRAC_1_SQRT_2;
        assert_abs_diff_eq!(out.amplitude(&[2, 0]).norm(), expected, epsilon = 1e-12);
        assert_abs_diff_eq!(out.amplitude(&[0, 2]).norm(), expected, epsilon = 1e-12);
        assert_abs_diff_eq!(out.norm_sqr(), 1.0, epsilon = 1e-10);
    }

    #[test]
    fn identity_leaves_state_unchanged() {
        let (reg, a, b) = two_modes();
        let s = FockState::basis_state(reg, &[(a, 2), (b, 1)], 8).unwrap();
        let id = SingleParticleUnitary::new(
            vec![a, b],
            DMatrix::identity(2, 2),
        )
        .unwrap();
        let out = s.apply_unitary(&id).unwrap();
        assert_abs_diff_eq!((out.amplitude(&[2, 1]) - Complex64::new(1.0, 0.0)).norm(), 0.0, epsilon = 1e-12);
        assert_eq!(out.num_terms(), 1);
    }

    #[test]
    fn inner_product_basics() {
        let (reg, a, b) = two_modes();
        let s = FockState::basis_state(reg.clone(), &[(a, 3)], 8).unwrap();
        let t = FockState::basis_state(reg, &[(b, 3)], 8).unwrap();
        assert_abs_diff_eq!(s.inner(&s).unwrap().re, 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(s.inner(&t).unwrap().norm(), 0.0, epsilon = 1e-15);
    }

    #[test]
    fn inner_rejects_registry_mismatch() {
        let (reg1, a, _) = two_modes();
        let c = ModeId::base(PathLabel::Main, Pol::V);
        let reg2 = ModeRegistry::new(vec![a, c]).unwrap();
        let s = FockState::vacuum(reg1);
        let t = FockState::vacuum(reg2);
        assert!(matches!(s.inner(&t), Err(FockError::RegistryMismatch)));
    }

    #[test]
    fn conditioning_on_unpopulated_mode() {
        let (reg, a, b) = two_modes();
        let s = FockState::basis_state(reg, &[(a, 2)], 8).unwrap();
        let out = s.condition_exact_count(b, 0).unwrap();
        assert_abs_diff_eq!(out.probability, 1.0, epsilon = 1e-14);
        let kept = out.state.unwrap();
        assert_eq!(kept.registry().len(), 1);
        assert_abs_diff_eq!(kept.amplitude(&[2]).norm(), 1.0, epsilon = 1e-14);
    }

    #[test]
    fn conditioning_one_photon_of_pair() {
        let (reg, a, b) = two_modes();
        let s = FockState::basis_state(reg, &[(a, 1), (b, 1)], 8).unwrap();
        let out = s.condition_exact_count(a, 1).unwrap();
        assert_abs_diff_eq!(out.probability, 1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(out.state.unwrap().amplitude(&[1]).norm(), 1.0, epsilon = 1e-14);
    }

    #[test]
    fn conditioning_zero_probability_branch_is_explicit() {
        let (reg, a, b) = two_modes();
        let s = FockState::basis_state(reg, &[(a, 1)], 8).unwrap();
        let out = s.condition_exact_count(b, 3).unwrap();
        assert!(out.state.is_none());
        assert_abs_diff_eq!(out.probability, 0.0, epsilon = 1e-16);
    }

    #[test]
    fn conditioning_completeness() {
        // Σ_n P(n) = 1 over all exact-count conditions of one mode.
        let (reg, a, b) = two_modes();
        let s = FockState::basis_state(reg, &[(a, 1), (b, 1)], 8)
            .unwrap()
            .apply_unitary(&mixer_50_50(a, b))
            .unwrap();
        let total: f64 = (0..=2)
            .map(|n| s.condition_exact_count(a, n).unwrap().probability)
            .sum();
        assert_abs_diff_eq!(total, 1.0, epsilon = 1e-10);
    }

    #[test]
    fn marginal_of_pure_term_is_certain() {
        let (reg, a, b) = two_modes();
        let s = FockState::basis_state(reg, &[(a, 2), (b, 1)], 8).unwrap();
        let dist = s.marginal_distribution(&[a, b]).unwrap();
        assert_eq!(dist.len(), 1);
        assert_abs_diff_eq!(dist[&vec![2, 1]], 1.0, epsilon = 1e-15);
    }

    #[test]
    fn marginal_sums_over_unobserved() {
        let (reg, a, _b) = two_modes();
        let s = FockState::from_terms(
            reg,
            vec![
                (vec![1, 0], Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0)),
                (vec![0, 1], Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0)),
            ],
            8,
        )
        .unwrap();
        let dist = s.marginal_distribution(&[a]).unwrap();
        assert_abs_diff_eq!(dist[&vec![0]], 0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(dist[&vec![1]], 0.5, epsilon = 1e-12);
        let total: f64 = dist.values().sum();
        assert_abs_diff_eq!(total, 1.0, epsilon = 1e-10);
    }

    #[test]
    fn unitary_construction_rejects_non_unitary() {
        let (_, a, b) = two_modes();
        let m = DMatrix::from_row_slice(
            2,
            2,
            &[
                Complex64::new(1.0, 0.0),
                Complex64::new(1.0, 0.0),
                Complex64::new(0.0, 0.0),
                Complex64::new(1.0, 0.0),
            ],
        );
        assert!(matches!(
            SingleParticleUnitary::new(vec![a, b], m),
            Err(FockError::NotUnitary { .. })
        ));
    }

    #[test]
    fn composition_matches_sequential_application() {
        let (reg, a, b) = two_modes();
        let u = mixer_50_50(a, b);
        let phase = SingleParticleUnitary::new(
            vec![a, b],
            DMatrix::from_row_slice(
                2,
                2,
                &[
                    Complex64::from_polar(1.0, 0.3),
                    Complex64::new(0.0, 0.0),
                    Complex64::new(0.0, 0.0),
                    Complex64::from_polar(1.0, -1.1),
                ],
            ),
        )
        .unwrap();
        let s = FockState::basis_state(reg, &[(a, 2), (b, 1)], 8).unwrap();
        let seq = s.apply_unitary(&u).unwrap().apply_unitary(&phase).unwrap();
        let composed = s.apply_unitary(&u.then(&phase).unwrap()).unwrap();
        for (occ, amp) in seq.terms() {
            assert_abs_diff_eq!((amp - composed.amplitude(occ)).norm(), 0.0, epsilon = 1e-10);
        }
        assert_eq!(seq.num_terms(), composed.num_terms());
    }

    #[test]
    fn restrict_and_embed_roundtrip() {
        let (reg, a, _b) = two_modes();
        let s = FockState::basis_state(reg.clone(), &[(a, 2)], 8).unwrap();
        let small = s.restrict_to(&[a]).unwrap();
        assert_eq!(small.registry().len(), 1);
        let back = small.embedded_in(reg).unwrap();
        assert_abs_diff_eq!((back.amplitude(&[2, 0]) - Complex64::new(1.0, 0.0)).norm(), 0.0, epsilon = 1e-15);
        let t = FockState::basis_state(s.registry().clone(), &[(a, 1), (_b, 1)], 8).unwrap();
        assert!(t.restrict_to(&[a]).is_err());
    }
}
