//! Detector models, heralded ensembles, cascade coincidence statistics, and
//! analytic fringe scans.
//!
//! Detectors are binary-click by default (SPCM hardware): `n` incident
//! photons click with probability `1 − (1−dark)(1−η)ⁿ`. The fiber-splitter
//! cascade after PBS3 is modeled probabilistically through per-detector
//! routing probabilities; this is exact for click statistics because the
//! couplers act on a single polarization after the analyzer and no
//! interference follows them. The Fock-mode treatment of the cascade is
//! kept as a cross-check oracle in the test suite.

use std::collections::BTreeMap;

use crate::error::FockError;
use crate::fock::{FockState, SingleParticleUnitary};
use crate::mode::{ModeId, PathLabel, Pol};
use crate::preset::CircuitPreset;
use crate::elements::{waveplate_unitary, WavePlate};

/// Non-number-resolving single-photon counter.
#[derive(Copy, Clone, Debug, PartialEq)]
pub struct DetectorModel {
    /// Detection efficiency η ∈ [0, 1].
    pub efficiency: f64,
    /// Dark-click probability per pulse ∈ [0, 1).
    pub dark_prob: f64,
    /// Treat the detector as photon-number resolving.
    pub number_resolving: bool,
}

impl DetectorModel {
    pub fn new(efficiency: f64, dark_prob: f64) -> Result<Self, FockError> {
        if !(0.0..=1.0).contains(&efficiency) {
            return Err(FockError::InvalidParameter(format!(
                "detector efficiency must lie in [0, 1], got {efficiency}"
            )));
        }
        if !(0.0..1.0).contains(&dark_prob) {
            return Err(FockError::InvalidParameter(format!(
                "dark probability must lie in [0, 1), got {dark_prob}"
            )));
        }
        Ok(Self { efficiency, dark_prob, number_resolving: false })
    }

    /// Unit-efficiency, dark-count-free detector.
    pub fn ideal() -> Self {
        Self { efficiency: 1.0, dark_prob: 0.0, number_resolving: false }
    }

    /// Click probability for `n` incident photons.
    pub fn click_prob(&self, n: u32) -> f64 {
        1.0 - (1.0 - self.dark_prob) * (1.0 - self.efficiency).powi(n as i32)
    }
}

/// Chain of two-way fiber couplers feeding `ratios.len() + 1` detectors.
///
/// Each ratio is the fraction split off to the next detector; the remainder
/// continues down the chain.
#[derive(Clone, Debug, PartialEq)]
pub struct SplitterCascade {
    ratios: Vec<f64>,
}

impl SplitterCascade {
    pub fn new(ratios: Vec<f64>) -> Result<Self, FockError> {
        if ratios.is_empty() {
            return Err(FockError::InvalidParameter("cascade needs at least one coupler".into()));
        }
        for &r in &ratios {
            if !(0.0..=1.0).contains(&r) {
                return Err(FockError::InvalidParameter(format!(
                    "splitting ratio must lie in [0, 1], got {r}"
                )));
            }
        }
        Ok(Self { ratios })
    }

    /// The experiment's pair of 43:57 couplers.
    pub fn paper_43_57() -> Self {
        Self { ratios: vec![0.43, 0.43] }
    }

    /// Per-detector routing probabilities for a single photon.
    pub fn probs(&self) -> Vec<f64> {
        let mut probs = Vec::with_capacity(self.ratios.len() + 1);
        let mut remaining = 1.0;
        for &r in &self.ratios {
            probs.push(remaining * r);
            remaining *= 1.0 - r;
        }
        probs.push(remaining);
        probs
    }
}

/// Per-detector routing probabilities for a single photon through `c`.
pub fn cascade_probs(c: &SplitterCascade) -> Vec<f64> {
    c.probs()
}

/// Normalized conditional mixture given a herald click.
#[derive(Clone, Debug)]
pub struct HeraldedEnsemble {
    /// `(weight, state)` pairs; weights sum to 1.
    pub branches: Vec<(f64, FockState)>,
    /// Per-pulse probability of the herald click.
    pub herald_probability: f64,
}

/// Conditions on a click of `det` watching `mode`.
///
/// Branch weights are `P(n)·click(n)` over the herald photon number `n`;
/// the ensemble is normalized and the pre-normalization weight sum is
/// returned as the herald probability.
pub fn herald_on_click(
    state: &FockState,
    mode: ModeId,
    det: &DetectorModel,
) -> Result<HeraldedEnsemble, FockError> {
    herald_on_click_total(state, &[mode], det)
}

/// [`herald_on_click`] over the total photon number in a set of modes.
pub fn herald_on_click_total(
    state: &FockState,
    modes: &[ModeId],
    det: &DetectorModel,
) -> Result<HeraldedEnsemble, FockError> {
    let max_n = state.n_max();
    let mut branches = Vec::new();
    let mut herald_probability = 0.0;
    for n in 0..=max_n {
        let outcome = state.condition_exact_total(modes, n)?;
        let click = if det.number_resolving {
            // resolving detector demanded to read exactly one photon
            if n == 0 {
                0.0
            } else {
                n as f64 * det.efficiency * (1.0 - det.efficiency).powi(n as i32 - 1)
            }
        } else {
            det.click_prob(n)
        };
        let weight = outcome.probability * click;
        if weight <= 0.0 {
            continue;
        }
        herald_probability += weight;
        if let Some(s) = outcome.state {
            branches.push((weight, s));
        }
    }
    if herald_probability < 1e-14 {
        return Err(FockError::ZeroProbabilityBranch);
    }
    for (w, _) in &mut branches {
        *w /= herald_probability;
    }
    Ok(HeraldedEnsemble { branches, herald_probability })
}

/// Probability that every detector in `required` clicks when the photon
/// count at the cascade input is distributed as `count_dist`.
///
/// Routing is multinomial over [`SplitterCascade::probs`]; detectors click
/// independently given the routing.
pub fn kfold_coincidence_prob(
    count_dist: &BTreeMap<u32, f64>,
    cascade: &SplitterCascade,
    dets: &[DetectorModel],
    required: &[usize],
) -> f64 {
    let probs = cascade.probs();
    assert_eq!(probs.len(), dets.len(), "one detector model per cascade output");
    count_dist
        .iter()
        .map(|(&n, &p)| p * required_click_prob(n, &probs, dets, required))
        .sum()
}

/// `P(all required click | n photons into the cascade)` by multinomial
/// enumeration of routings.
pub fn required_click_prob(
    n: u32,
    probs: &[f64],
    dets: &[DetectorModel],
    required: &[usize],
) -> f64 {
    let mut total = 0.0;
    let mut counts = vec![0u32; probs.len()];
    multinomial_sum(n, 0, &mut counts, 1.0, probs, &mut |counts, weight| {
        let mut term = weight;
        for &j in required {
            term *= dets[j].click_prob(counts[j]);
        }
        total += term;
    });
    total
}

/// Probability of the exact click pattern `pattern` (true = click).
pub fn exact_pattern_prob(
    n: u32,
    probs: &[f64],
    dets: &[DetectorModel],
    pattern: &[bool],
) -> f64 {
    let mut total = 0.0;
    let mut counts = vec![0u32; probs.len()];
    multinomial_sum(n, 0, &mut counts, 1.0, probs, &mut |counts, weight| {
        let mut term = weight;
        for (j, &clicked) in pattern.iter().enumerate() {
            let p = dets[j].click_prob(counts[j]);
            term *= if clicked { p } else { 1.0 - p };
        }
        total += term;
    });
    total
}

fn multinomial_sum(
    remaining: u32,
    slot: usize,
    counts: &mut [u32],
    weight: f64,
    probs: &[f64],
    visit: &mut impl FnMut(&[u32], f64),
) {
    if slot == counts.len() - 1 {
        counts[slot] = remaining;
        let w = weight * probs[slot].powi(remaining as i32);
        visit(counts, w);
        counts[slot] = 0;
        return;
    }
    // running multinomial coefficient: choose k of the remaining photons
    let mut choose = 1.0;
    for k in 0..=remaining {
        counts[slot] = k;
        let w = weight * choose * probs[slot].powi(k as i32);
        multinomial_sum(remaining - k, slot + 1, counts, w, probs, visit);
        choose *= (remaining - k) as f64 / (k + 1) as f64;
    }
    counts[slot] = 0;
}

/// Detector complement of the experiment: SPC1 on each heralding wire, and
/// the cascade SPCs after the PBS3 transmitted port.
#[derive(Clone, Debug)]
pub struct DetectorBank {
    /// Heralding detector (shared model across herald wires).
    pub herald: DetectorModel,
    pub cascade: SplitterCascade,
    /// One model per cascade output (SPC2, SPC3, SPC4 for the 2-coupler chain).
    pub cascade_dets: Vec<DetectorModel>,
}

impl DetectorBank {
    /// Ideal detectors behind the paper's 43:57 cascade.
    pub fn ideal_paper() -> Self {
        Self {
            herald: DetectorModel::ideal(),
            cascade: SplitterCascade::paper_43_57(),
            cascade_dets: vec![DetectorModel::ideal(); 3],
        }
    }

    fn validate(&self) -> Result<(), FockError> {
        if self.cascade.probs().len() != self.cascade_dets.len() {
            return Err(FockError::InvalidParameter(format!(
                "cascade feeds {} detectors but {} models were supplied",
                self.cascade.probs().len(),
                self.cascade_dets.len()
            )));
        }
        Ok(())
    }
}

/// Joint distribution over (per-wire herald photon counts, cascade input
/// photon count), marginalizing everything else (loss modes, internal
/// labels, the PBS3 reflected port).
pub fn joint_counts(
    state: &FockState,
    herald_paths: &[PathLabel],
    observed: (PathLabel, Pol),
) -> Result<BTreeMap<(Vec<u32>, u32), f64>, FockError> {
    let registry = state.registry();
    let herald_idx: Vec<Vec<usize>> = herald_paths
        .iter()
        .map(|&p| {
            registry
                .modes_on_path(p)
                .into_iter()
                .map(|m| registry.index_of(m))
                .collect::<Result<Vec<_>, _>>()
        })
        .collect::<Result<_, _>>()?;
    let observed_idx: Vec<usize> = registry
        .modes()
        .iter()
        .enumerate()
        .filter(|(_, m)| m.path == observed.0 && m.pol == observed.1)
        .map(|(i, _)| i)
        .collect();
    if observed_idx.is_empty() {
        return Err(FockError::InvalidParameter(format!(
            "no registered modes on the observed port ({}, {})",
            observed.0, observed.1
        )));
    }
    let mut joint = BTreeMap::new();
    for (occ, amp) in state.terms() {
        let heralds: Vec<u32> = herald_idx
            .iter()
            .map(|idx| idx.iter().map(|&i| occ[i] as u32).sum())
            .collect();
        let k: u32 = observed_idx.iter().map(|&i| occ[i] as u32).sum();
        *joint.entry((heralds, k)).or_insert(0.0) += amp.norm_sqr();
    }
    Ok(joint)
}

/// One scanned point of a fringe table.
#[derive(Clone, Debug, PartialEq)]
pub struct FringeRow {
    pub hwp3_deg: f64,
    /// Phase between the principal polarization components: 4 × HWP3 angle.
    pub phase_deg: f64,
    /// P(all heralds click ∧ SPC2 clicks) per pulse.
    pub p_twofold: f64,
    /// P(SPC2 ∧ SPC3 ∧ SPC4 click) per pulse, unconditioned on the herald.
    pub p_threefold_unheralded: f64,
    /// P(all heralds click ∧ SPC2 ∧ SPC3 ∧ SPC4 click) per pulse.
    pub p_fourfold: f64,
    pub c_twofold: Option<f64>,
    pub c_threefold_unheralded: Option<f64>,
    pub c_fourfold: Option<f64>,
}

/// Scanned per-pulse rates (and optionally sampled counts) per HWP3 angle.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct FringeTable {
    pub rows: Vec<FringeRow>,
    /// Pulses per scan point when counts were sampled.
    pub pulses_per_point: Option<u64>,
    pub seed: Option<u64>,
}

impl FringeTable {
    /// (phase in radians, column value) pairs for fitting.
    pub fn column(&self, which: FringeColumn) -> Vec<(f64, f64)> {
        self.rows
            .iter()
            .map(|r| (r.phase_deg.to_radians(), which.value(r)))
            .collect()
    }
}

/// Selects one observable column of a [`FringeTable`].
#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub enum FringeColumn {
    Twofold,
    ThreefoldUnheralded,
    Fourfold,
    CountsTwofold,
    CountsThreefoldUnheralded,
    CountsFourfold,
}

impl FringeColumn {
    pub fn value(&self, row: &FringeRow) -> f64 {
        match self {
            FringeColumn::Twofold => row.p_twofold,
            FringeColumn::ThreefoldUnheralded => row.p_threefold_unheralded,
            FringeColumn::Fourfold => row.p_fourfold,
            FringeColumn::CountsTwofold => row.c_twofold.unwrap_or(f64::NAN),
            FringeColumn::CountsThreefoldUnheralded => {
                row.c_threefold_unheralded.unwrap_or(f64::NAN)
            }
            FringeColumn::CountsFourfold => row.c_fourfold.unwrap_or(f64::NAN),
        }
    }
}

/// Applies the analyzer (QWP3 at the preset angle, HWP3 at `hwp3`) to the
/// pre-analyzer state.
pub fn analyzed_state(
    preset: &CircuitPreset,
    prefix: &FockState,
    hwp3: f64,
) -> Result<FockState, FockError> {
    let path = preset.observed.0;
    let qwp3 = waveplate_unitary(&WavePlate::quarter(preset.qwp3, path), &preset.registry)?;
    let hwp3 = waveplate_unitary(&WavePlate::half(hwp3, path), &preset.registry)?;
    prefix.apply_unitary(&qwp3)?.apply_unitary(&hwp3)
}

/// The three per-pulse coincidence probabilities for one analyzer setting.
pub fn point_probabilities(
    joint: &BTreeMap<(Vec<u32>, u32), f64>,
    bank: &DetectorBank,
) -> (f64, f64, f64) {
    let probs = bank.cascade.probs();
    let spc2 = &bank.cascade_dets[0];
    let required: Vec<usize> = (0..probs.len()).collect();
    // cache per-photon-number cascade click probabilities
    let max_k = joint.keys().map(|(_, k)| *k).max().unwrap_or(0);
    let all_required: Vec<f64> = (0..=max_k)
        .map(|k| required_click_prob(k, &probs, &bank.cascade_dets, &required))
        .collect();
    let single: Vec<f64> = (0..=max_k)
        .map(|k| 1.0 - (1.0 - spc2.dark_prob) * (1.0 - probs[0] * spc2.efficiency).powi(k as i32))
        .collect();

    let mut p_two = 0.0;
    let mut p_three = 0.0;
    let mut p_four = 0.0;
    for ((heralds, k), &p) in joint {
        let herald_click: f64 = heralds.iter().map(|&r| bank.herald.click_prob(r)).product();
        p_two += p * herald_click * single[*k as usize];
        p_three += p * all_required[*k as usize];
        p_four += p * herald_click * all_required[*k as usize];
    }
    (p_two, p_three, p_four)
}

/// Analytic fringe scan: per-pulse coincidence probabilities at each HWP3
/// angle (degrees). Count columns are left empty.
pub fn fringe_scan(
    preset: &CircuitPreset,
    bank: &DetectorBank,
    hwp3_angles_deg: &[f64],
) -> Result<FringeTable, FockError> {
    bank.validate()?;
    let prefix = preset.state_before_analyzer()?;
    let mut rows = Vec::with_capacity(hwp3_angles_deg.len());
    for &deg in hwp3_angles_deg {
        let state = analyzed_state(preset, &prefix, deg.to_radians())?;
        let joint = joint_counts(&state, &preset.herald_paths, preset.observed)?;
        let (p_two, p_three, p_four) = point_probabilities(&joint, bank);
        rows.push(FringeRow {
            hwp3_deg: deg,
            phase_deg: 4.0 * deg,
            p_twofold: p_two,
            p_threefold_unheralded: p_three,
            p_fourfold: p_four,
            c_twofold: None,
            c_threefold_unheralded: None,
            c_fourfold: None,
        });
    }
    Ok(FringeTable { rows, pulses_per_point: None, seed: None })
}

/// Per-pulse probability that the heralding detector(s) all click, which is
/// independent of the analyzer setting.
pub fn herald_singles_prob(preset: &CircuitPreset, bank: &DetectorBank) -> Result<f64, FockError> {
    let prefix = preset.state_before_analyzer()?;
    let joint = joint_counts(&prefix, &preset.herald_paths, preset.observed)?;
    Ok(joint
        .iter()
        .map(|((heralds, _), &p)| {
            p * heralds.iter().map(|&r| bank.herald.click_prob(r)).product::<f64>()
        })
        .sum())
}

/// Coincidence probability between the two merge-output ports for one
/// photon per arm, as a function of path delay: the HOM dip used to align
/// the interferometer.
pub fn hom_coincidence(om: &crate::source::OverlapModel, delay: f64) -> Result<f64, FockError> {
    use crate::mode::ModeRegistry;
    use nalgebra::DMatrix;
    use num_complex::Complex64;

    let upper = PathLabel::Upper;
    let lower = PathLabel::Lower;
    let mut modes = Vec::new();
    for &path in &[upper, lower] {
        for k in [0u8, 1] {
            modes.push(ModeId::new(path, Pol::H, k));
        }
    }
    let registry = ModeRegistry::new(modes)?;
    let state = FockState::basis_state(
        registry.clone(),
        &[
            (ModeId::new(upper, Pol::H, 0), 1),
            (ModeId::new(lower, Pol::H, 0), 1),
        ],
        4,
    )?;
    let state = crate::source::apply_overlap(&state, om, delay)?;
    // 50:50 mixer between the paths, identity over internal labels
    let r = std::f64::consts::FRAC_1_SQRT_2;
    let mut mat = DMatrix::from_element(4, 4, Complex64::new(0.0, 0.0));
    let mut mixer_modes = Vec::new();
    for k in [0u8, 1] {
        let o = mixer_modes.len();
        mat[(o, o)] = Complex64::new(r, 0.0);
        mat[(o, o + 1)] = Complex64::new(0.0, r);
        mat[(o + 1, o)] = Complex64::new(0.0, r);
        mat[(o + 1, o + 1)] = Complex64::new(r, 0.0);
        mixer_modes.push(ModeId::new(upper, Pol::H, k));
        mixer_modes.push(ModeId::new(lower, Pol::H, k));
    }
    let mixer = SingleParticleUnitary::new(mixer_modes, mat)?;
    let out = state.apply_unitary(&mixer)?;
    let mut coincidence = 0.0;
    for (occ, amp) in out.terms() {
        let u: u32 = occ[0] as u32 + occ[1] as u32;
        let l: u32 = occ[2] as u32 + occ[3] as u32;
        if u == 1 && l == 1 {
            coincidence += amp.norm_sqr();
        }
    }
    Ok(coincidence)
}

/// HWP3 angles (degrees) spanning one full phase period for frequency-1
/// fringes: `points` angles evenly covering [0°, 90°), so the phase 4β
/// covers [0°, 360°).
pub fn scan_angles(points: usize) -> Vec<f64> {
    (0..points).map(|i| 90.0 * i as f64 / points as f64).collect()
}
