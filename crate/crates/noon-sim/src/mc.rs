//! Deterministic Monte Carlo count generation over pulse trains.
//!
//! Every pulse draws from its own RNG stream keyed by
//! `(seed, angle index, pulse index)`, so the sampled counts are
//! bit-identical for any execution order and any number of worker threads.
//! Per-angle totals are integer sums, which commute exactly.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::detect::{DetectorBank, FringeRow, FringeTable};
use crate::detect::{analyzed_state, joint_counts, point_probabilities};
use crate::error::FockError;
use crate::preset::CircuitPreset;

fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9e37_79b9_7f4a_7c15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// ChaCha8 stream keyed by (seed, angle, pulse) through a SplitMix64 sponge.
fn pulse_rng(seed: u64, angle: u64, pulse: u64) -> ChaCha8Rng {
    let mut state = seed;
    let mut key = [0u8; 32];
    let mut h = splitmix64(&mut state);
    state ^= angle.wrapping_mul(0xd1b5_4a32_d192_ed03);
    h ^= splitmix64(&mut state);
    state ^= pulse.wrapping_mul(0x8cb9_2ba7_2f3d_8dd7);
    h ^= splitmix64(&mut state);
    state = h;
    for chunk in key.chunks_mut(8) {
        chunk.copy_from_slice(&splitmix64(&mut state).to_le_bytes());
    }
    ChaCha8Rng::from_seed(key)
}

/// One scan point prepared for sampling: the outcome ladder and cascade
/// routing probabilities.
struct PointSampler {
    /// Cumulative probability ladder over (herald counts, cascade photons).
    outcomes: Vec<(Vec<u32>, u32, f64)>,
    /// Cumulative routing probabilities per cascade detector.
    routing_cdf: Vec<f64>,
}

impl PointSampler {
    fn build(
        preset: &CircuitPreset,
        bank: &DetectorBank,
        prefix: &crate::fock::FockState,
        hwp3_rad: f64,
    ) -> Result<(Self, FringeRow), FockError> {
        let state = analyzed_state(preset, prefix, hwp3_rad)?;
        let joint = joint_counts(&state, &preset.herald_paths, preset.observed)?;
        let (p_two, p_three, p_four) = point_probabilities(&joint, bank);

        let mut outcomes = Vec::with_capacity(joint.len());
        let mut acc = 0.0;
        for ((heralds, k), p) in &joint {
            acc += *p;
            outcomes.push((heralds.clone(), *k, acc));
        }
        let mut routing_cdf = Vec::new();
        let mut racc = 0.0;
        for p in bank.cascade.probs() {
            racc += p;
            routing_cdf.push(racc);
        }
        let row = FringeRow {
            hwp3_deg: hwp3_rad.to_degrees(),
            phase_deg: 4.0 * hwp3_rad.to_degrees(),
            p_twofold: p_two,
            p_threefold_unheralded: p_three,
            p_fourfold: p_four,
            c_twofold: None,
            c_threefold_unheralded: None,
            c_fourfold: None,
        };
        Ok((Self { outcomes, routing_cdf }, row))
    }

    /// Samples one pulse; returns (twofold, threefold, fourfold) event flags.
    fn sample_pulse(&self, bank: &DetectorBank, rng: &mut ChaCha8Rng) -> (bool, bool, bool) {
        let u: f64 = rng.gen();
        let last = self.outcomes.len() - 1;
        let pick = self
            .outcomes
            .iter()
            .position(|(_, _, cdf)| u < *cdf)
            .unwrap_or(last);
        let (heralds, k, _) = &self.outcomes[pick];
        let k = *k;
        let mut herald_click = true;
        for &r in heralds {
            herald_click &= rng.gen::<f64>() < bank.herald.click_prob(r);
        }
        // route the cascade photons
        let mut received = vec![0u32; self.routing_cdf.len()];
        for _ in 0..k {
            let r: f64 = rng.gen();
            let det = self
                .routing_cdf
                .iter()
                .position(|&cdf| r < cdf)
                .unwrap_or(self.routing_cdf.len() - 1);
            received[det] += 1;
        }
        let clicks: Vec<bool> = received
            .iter()
            .zip(&bank.cascade_dets)
            .map(|(&n, det)| rng.gen::<f64>() < det.click_prob(n))
            .collect();
        let all_cascade = clicks.iter().all(|&c| c);
        (
            herald_click && clicks[0],
            all_cascade,
            herald_click && all_cascade,
        )
    }
}

/// Samples integer coincidence counts per analyzer angle.
///
/// Deterministic for a fixed `seed`: identical tables for any worker count.
/// Pulses are processed in parallel chunks; per-angle totals are exact
/// integer sums.
pub fn mc_sample_counts(
    preset: &CircuitPreset,
    bank: &DetectorBank,
    hwp3_angles_deg: &[f64],
    pulses_per_point: u64,
    seed: u64,
) -> Result<FringeTable, FockError> {
    if pulses_per_point == 0 {
        return Err(FockError::InvalidParameter("pulses_per_point must be ≥ 1".into()));
    }
    let prefix = preset.state_before_analyzer()?;
    let mut points = Vec::with_capacity(hwp3_angles_deg.len());
    for &deg in hwp3_angles_deg {
        points.push(PointSampler::build(preset, bank, &prefix, deg.to_radians())?);
    }

    const CHUNK: u64 = 65_536;
    let rows: Vec<FringeRow> = points
        .into_par_iter()
        .enumerate()
        .map(|(angle_idx, (sampler, mut row))| {
            let chunks: Vec<u64> = (0..pulses_per_point.div_ceil(CHUNK)).collect();
            let (two, three, four) = chunks
                .into_par_iter()
                .map(|chunk| {
                    let start = chunk * CHUNK;
                    let end = (start + CHUNK).min(pulses_per_point);
                    let mut counts = (0u64, 0u64, 0u64);
                    for pulse in start..end {
                        let mut rng = pulse_rng(seed, angle_idx as u64, pulse);
                        let (c2, c3, c4) = sampler.sample_pulse(bank, &mut rng);
                        counts.0 += c2 as u64;
                        counts.1 += c3 as u64;
                        counts.2 += c4 as u64;
                    }
                    counts
                })
                .reduce(|| (0, 0, 0), |a, b| (a.0 + b.0, a.1 + b.1, a.2 + b.2));
            row.c_twofold = Some(two as f64);
            row.c_threefold_unheralded = Some(three as f64);
            row.c_fourfold = Some(four as f64);
            row
        })
        .collect();

    Ok(FringeTable {
        rows,
        pulses_per_point: Some(pulses_per_point),
        seed: Some(seed),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::detect::scan_angles;
    use crate::preset::{preset_noon3, Noon3Params};
    use crate::source::PairDistribution;

    #[test]
    fn identical_seeds_give_identical_tables() {
        let params = Noon3Params::ideal(PairDistribution::fixed(2));
        let preset = preset_noon3(&params).unwrap();
        let bank = DetectorBank::ideal_paper();
        let angles = scan_angles(5);
        let a = mc_sample_counts(&preset, &bank, &angles, 2_000, 7).unwrap();
        let b = mc_sample_counts(&preset, &bank, &angles, 2_000, 7).unwrap();
        assert_eq!(a, b);
        let c = mc_sample_counts(&preset, &bank, &angles, 2_000, 8).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn zero_probability_columns_stay_zero() {
        // a single pair can never produce a threefold or fourfold event
        let params = Noon3Params::ideal(PairDistribution::fixed(1));
        let preset = preset_noon3(&params).unwrap();
        let bank = DetectorBank::ideal_paper();
        let table = mc_sample_counts(&preset, &bank, &[13.0], 20_000, 3).unwrap();
        assert_eq!(table.rows[0].c_threefold_unheralded, Some(0.0));
        assert_eq!(table.rows[0].c_fourfold, Some(0.0));
    }

    #[test]
    fn counts_track_analytic_probabilities() {
        let params = Noon3Params::ideal(PairDistribution::fixed(2));
        let preset = preset_noon3(&params).unwrap();
        let bank = DetectorBank::ideal_paper();
        let n = 200_000u64;
        let table = mc_sample_counts(&preset, &bank, &[7.5, 22.5], n, 42).unwrap();
        for row in &table.rows {
            for (p, c) in [
                (row.p_twofold, row.c_twofold.unwrap()),
                (row.p_threefold_unheralded, row.c_threefold_unheralded.unwrap()),
                (row.p_fourfold, row.c_fourfold.unwrap()),
            ] {
                let mean = n as f64 * p;
                let sigma = (n as f64 * p * (1.0 - p)).sqrt();
                assert!(
                    (c - mean).abs() <= 5.0 * sigma.max(1e-9),
                    "count {c} not within 5σ of {mean} (σ = {sigma})"
                );
            }
        }
    }

    #[test]
    fn worker_count_does_not_change_output() {
        let params = Noon3Params::ideal(PairDistribution::fixed(2));
        let preset = preset_noon3(&params).unwrap();
        let bank = DetectorBank::ideal_paper();
        let angles = [0.0, 30.0];
        let reference = mc_sample_counts(&preset, &bank, &angles, 10_000, 5).unwrap();
        for workers in [1usize, 4] {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(workers)
                .build()
                .unwrap();
            let table =
                pool.install(|| mc_sample_counts(&preset, &bank, &angles, 10_000, 5).unwrap());
            assert_eq!(reference, table);
        }
    }
}
