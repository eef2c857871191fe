//! Fringe fitting, visibility extraction, background subtraction, the
//! visibility→fidelity lower bound, and source figures of merit.

use nalgebra::{Matrix3, Vector3};

use crate::detect::{fringe_scan, DetectorBank, FringeColumn, FringeRow, FringeTable};
use crate::error::{FitError, FockError};
use crate::preset::{preset_noon3, Noon3Params};
use crate::source::{OverlapModel, PairKind};

/// Weighting scheme for the sinusoid fit.
#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub enum FitWeights {
    /// `w = 1/max(count, 1)` — Poisson counting errors; parameter errors
    /// come directly from the normal-equations covariance.
    Poisson,
    /// Unit weights; parameter errors are scaled by the residual variance.
    Uniform,
}

/// Result of a fixed-frequency sinusoid fit `y = C + A·cos(kx + φ₀)`.
#[derive(Clone, Debug)]
pub struct FitResult {
    pub offset: f64,
    /// Non-negative amplitude (the phase absorbs the sign).
    pub amplitude: f64,
    pub phase: f64,
    pub frequency: u32,
    /// `V = A / C`.
    pub visibility: f64,
    pub offset_err: f64,
    pub amplitude_err: f64,
    pub phase_err: f64,
    pub visibility_err: f64,
    /// Set when `V > 1 + 3σ_V`, which no physical fringe should reach.
    pub over_unity_flagged: bool,
}

/// Weighted linear least squares of `points = (phase, value)` on the basis
/// `{1, cos kx, sin kx}`.
pub fn fit_fixed_freq(
    points: &[(f64, f64)],
    frequency: u32,
    weights: FitWeights,
) -> Result<FitResult, FitError> {
    if points.len() < 4 {
        return Err(FitError::TooFewPoints(points.len()));
    }
    if frequency == 0 {
        return Err(FitError::InvalidParameter("frequency must be ≥ 1".into()));
    }
    let k = frequency as f64;

    let mut ata = Matrix3::<f64>::zeros();
    let mut aty = Vector3::<f64>::zeros();
    for &(x, y) in points {
        let w = match weights {
            FitWeights::Poisson => 1.0 / y.max(1.0),
            FitWeights::Uniform => 1.0,
        };
        let row = Vector3::new(1.0, (k * x).cos(), (k * x).sin());
        ata += w * row * row.transpose();
        aty += w * y * row;
    }
    let det = ata.determinant();
    let scale = ata.diagonal().iter().product::<f64>().abs().max(f64::MIN_POSITIVE);
    if !det.is_finite() || det.abs() < 1e-12 * scale {
        return Err(FitError::RankDeficient { det });
    }
    let cov0 = ata.try_inverse().ok_or(FitError::RankDeficient { det })?;
    let beta = cov0 * aty;
    let (c, a, b) = (beta[0], beta[1], beta[2]);

    let cov = match weights {
        FitWeights::Poisson => cov0,
        FitWeights::Uniform => {
            let ssr: f64 = points
                .iter()
                .map(|&(x, y)| {
                    let model = c + a * (k * x).cos() + b * (k * x).sin();
                    (y - model).powi(2)
                })
                .sum();
            let dof = points.len().saturating_sub(3).max(1) as f64;
            cov0 * (ssr / dof)
        }
    };

    let amplitude = a.hypot(b);
    let phase = if amplitude > 0.0 { (-b).atan2(a) } else { 0.0 };
    let visibility = if c != 0.0 { amplitude / c } else { f64::INFINITY };

    // delta-method propagation through (C, a, b) → (C, A, φ, V)
    let grad_sigma = |g: Vector3<f64>| (g.transpose() * cov * g)[(0, 0)].max(0.0).sqrt();
    let offset_err = grad_sigma(Vector3::new(1.0, 0.0, 0.0));
    let (amplitude_err, phase_err, visibility_err) = if amplitude > 1e-300 {
        let ga = Vector3::new(0.0, a / amplitude, b / amplitude);
        let gp = Vector3::new(0.0, b / (amplitude * amplitude), -a / (amplitude * amplitude));
        let gv = Vector3::new(
            -amplitude / (c * c),
            a / (amplitude * c),
            b / (amplitude * c),
        );
        (grad_sigma(ga), grad_sigma(gp), grad_sigma(gv))
    } else {
        // amplitude consistent with zero: quote the basis-coefficient scale
        let sa = grad_sigma(Vector3::new(0.0, 1.0, 0.0));
        let sb = grad_sigma(Vector3::new(0.0, 0.0, 1.0));
        let s = sa.max(sb);
        (s, std::f64::consts::PI, if c != 0.0 { s / c.abs() } else { f64::INFINITY })
    };

    let over_unity_flagged = visibility > 1.0 + 3.0 * visibility_err;
    Ok(FitResult {
        offset: c,
        amplitude,
        phase,
        frequency,
        visibility,
        offset_err,
        amplitude_err,
        phase_err,
        visibility_err,
        over_unity_flagged,
    })
}

/// Outcome of a triple-pair background subtraction.
#[derive(Clone, Debug)]
pub struct SubtractionReport {
    /// Points where clamping to zero removed signal.
    pub clamped_points: usize,
    /// Largest clamped fraction of a point's original value.
    pub max_clamp_fraction: f64,
    /// Raised when clamping removed more than 5% of any point.
    pub negative_rate_warning: bool,
}

/// Subtracts the estimated triple-pair background pointwise:
/// `fourfold′(β) = max(0, fourfold(β) − herald_singles_prob · threefold(β))`,
/// applied to the rate column and, when present, the count column.
pub fn subtract_triple_pair(
    table: &FringeTable,
    herald_singles_prob: f64,
) -> (FringeTable, SubtractionReport) {
    let mut out = table.clone();
    let mut clamped_points = 0;
    let mut max_clamp_fraction = 0.0f64;
    let mut clamp = |original: f64, corrected: f64| -> f64 {
        if corrected < 0.0 {
            clamped_points += 1;
            if original > 0.0 {
                max_clamp_fraction = max_clamp_fraction.max(-corrected / original);
            } else {
                max_clamp_fraction = 1.0f64.max(max_clamp_fraction);
            }
            0.0
        } else {
            corrected
        }
    };
    for row in &mut out.rows {
        row.p_fourfold = clamp(
            row.p_fourfold,
            row.p_fourfold - herald_singles_prob * row.p_threefold_unheralded,
        );
        if let (Some(c4), Some(c3)) = (row.c_fourfold, row.c_threefold_unheralded) {
            row.c_fourfold = Some(clamp(c4, c4 - herald_singles_prob * c3));
        }
    }
    let negative_rate_warning = max_clamp_fraction > 0.05;
    (
        out,
        SubtractionReport { clamped_points, max_clamp_fraction, negative_rate_warning },
    )
}

/// The assumptions behind [`fidelity_lower_bound`]: all heralded population
/// inside the {|N,0⟩, |0,N⟩} subspace carrying a fraction `population` of
/// the total, with a coherence of unknown phase (the fidelity is taken
/// against the phase-matched NOON target).
#[derive(Copy, Clone, Debug, PartialEq)]
pub struct NoonSubspaceModel {
    pub population: f64,
}

impl Default for NoonSubspaceModel {
    fn default() -> Self {
        Self { population: 1.0 }
    }
}

/// Fidelity lower bound from a fitted visibility.
#[derive(Clone, Debug)]
pub struct FidelityBound {
    pub value: f64,
    pub model: NoonSubspaceModel,
    /// Statement of the model used, recorded with the result.
    pub assumptions: &'static str,
}

/// `F ≥ population · (1 + V)/2` under the NOON-subspace model.
pub fn fidelity_lower_bound(
    visibility: f64,
    model: NoonSubspaceModel,
) -> Result<FidelityBound, FockError> {
    if !(0.0..=1.0).contains(&visibility) {
        return Err(FockError::InvalidParameter(format!(
            "visibility must lie in [0, 1], got {visibility}"
        )));
    }
    if !(0.0..=1.0).contains(&model.population) {
        return Err(FockError::InvalidParameter(format!(
            "subspace population must lie in [0, 1], got {}",
            model.population
        )));
    }
    Ok(FidelityBound {
        value: model.population * (1.0 + visibility) / 2.0,
        model,
        assumptions: "all heralded population in the {|N,0>, |0,N>} subspace; \
                      coherence phase unknown (fidelity vs the phase-matched NOON); \
                      V = 2|coherence| / population",
    })
}

/// Source scheme compared by the figure of merit.
#[derive(Copy, Clone, Debug, PartialEq)]
pub enum FomScheme {
    /// Double photon pair from a single SPDC source (this experiment).
    DoublePair,
    /// SPDC pair plus one weak-coherent-pulse photon with mean `alpha`.
    PairPlusCoherent { alpha: f64 },
}

/// Input to the figure-of-merit computations.
#[derive(Copy, Clone, Debug, PartialEq)]
pub struct FomInput {
    pub scheme: FomScheme,
    pub gamma: f64,
}

impl FomInput {
    fn validate(&self) -> Result<(), FockError> {
        if !(0.0 < self.gamma && self.gamma < 1.0) {
            return Err(FockError::InvalidParameter(format!(
                "γ must lie in (0, 1), got {}",
                self.gamma
            )));
        }
        if let FomScheme::PairPlusCoherent { alpha } = self.scheme {
            if alpha <= 0.0 {
                return Err(FockError::InvalidParameter(format!(
                    "α must be positive, got {alpha}"
                )));
            }
        }
        Ok(())
    }
}

/// The paper's small-γ approximations: `1/γ` for the double-pair scheme and
/// `(γ/α + α/2)⁻¹` for the hybrid scheme.
pub fn fom_ratio_approx(input: &FomInput) -> Result<f64, FockError> {
    input.validate()?;
    Ok(match input.scheme {
        FomScheme::DoublePair => 1.0 / input.gamma,
        FomScheme::PairPlusCoherent { alpha } => 1.0 / (input.gamma / alpha + alpha / 2.0),
    })
}

/// Exact figure of merit with its two probabilities.
#[derive(Clone, Debug)]
pub struct FomReport {
    /// `P(N_ex = 0) / P(N_ex > 0)`.
    pub ratio: f64,
    /// Probability of exactly the required photon complement.
    pub p_exact_complement: f64,
    /// Probability of any surplus.
    pub p_surplus: f64,
}

/// Exact `P(N_ex=0)/P(N_ex>0)` by enumerating source outcomes to
/// `n_max_pairs` with the tail summed analytically.
///
/// Surplus means: a third SPDC pair for the double-pair scheme; an extra
/// SPDC pair, or a second coherent photon alongside a pair, for the hybrid
/// scheme.
pub fn fom_ratio_exact(
    input: &FomInput,
    kind: PairKind,
    n_max_pairs: u8,
) -> Result<FomReport, FockError> {
    input.validate()?;
    let gamma = input.gamma;
    let pair_prob = |n: u8| -> f64 {
        match kind {
            PairKind::Thermal => (1.0 - gamma) * gamma.powi(n as i32),
            PairKind::Poissonian => {
                let mut p = (-gamma).exp();
                for i in 0..n {
                    p *= gamma / (i + 1) as f64;
                }
                p
            }
            PairKind::FixedN(k) => {
                if n == k {
                    1.0
                } else {
                    0.0
                }
            }
        }
    };
    // P(n > limit): enumerate to the truncation, then the analytic tail
    let tail_above = |limit: u8| -> f64 {
        match kind {
            PairKind::Thermal => gamma.powi(limit as i32 + 1),
            _ => {
                let head: f64 = (0..=limit).map(pair_prob).sum();
                let mut above: f64 = (limit + 1..=n_max_pairs).map(pair_prob).sum();
                // for the poissonian the remainder past the truncation is the
                // complement of everything enumerated
                above += (1.0 - head - above).max(0.0);
                above
            }
        }
    };

    let (p_exact, p_surplus) = match input.scheme {
        FomScheme::DoublePair => (pair_prob(2), tail_above(2)),
        FomScheme::PairPlusCoherent { alpha } => {
            let m1 = alpha * (-alpha).exp();
            let m_ge2 = 1.0 - (-alpha).exp() * (1.0 + alpha);
            let p_exact = pair_prob(1) * m1;
            let p_surplus = tail_above(1) + pair_prob(1) * m_ge2;
            (p_exact, p_surplus)
        }
    };
    Ok(FomReport { ratio: p_exact / p_surplus, p_exact_complement: p_exact, p_surplus })
}

/// HOM interferometry scan: coincidence probability between the two merge
/// outputs for one photon per arm, per time delay.
pub fn hom_scan(om: &OverlapModel, delays: &[f64]) -> Result<Vec<(f64, f64)>, FockError> {
    delays
        .iter()
        .map(|&tau| crate::detect::hom_coincidence(om, tau).map(|p| (tau, p)))
        .collect()
}

/// HWP2 calibration: analytic fourfold probability vs HWP2 angle (degrees),
/// with QWP2 at 45°, QWP3 at 0° and HWP3 at 0°.
pub fn hwp2_calibration_scan(
    params: &Noon3Params,
    bank: &DetectorBank,
    hwp2_angles_deg: &[f64],
) -> Result<Vec<(f64, f64)>, FockError> {
    let mut fixed = params.clone();
    fixed.qwp3 = 0.0;
    let mut scan = Vec::with_capacity(hwp2_angles_deg.len());
    for &deg in hwp2_angles_deg {
        fixed.hwp2 = Some(deg.to_radians());
        let preset = preset_noon3(&fixed)?;
        let table = fringe_scan(&preset, bank, &[0.0])?;
        scan.push((deg, table.rows[0].p_fourfold));
    }
    Ok(scan)
}

/// Fourfold probability at one HWP2 angle (radians) with the calibration
/// analyzer settings; used for extremum refinement.
pub fn hwp2_calibration_point(
    params: &Noon3Params,
    bank: &DetectorBank,
    hwp2_rad: f64,
) -> Result<f64, FockError> {
    let mut fixed = params.clone();
    fixed.qwp3 = 0.0;
    fixed.hwp2 = Some(hwp2_rad);
    let preset = preset_noon3(&fixed)?;
    let table = fringe_scan(&preset, bank, &[0.0])?;
    Ok(table.rows[0].p_fourfold)
}

/// Convenience: fit one column of a fringe table at frequency `k`.
pub fn fit_fringe_column(
    table: &FringeTable,
    column: FringeColumn,
    frequency: u32,
    weights: FitWeights,
) -> Result<FitResult, FitError> {
    fit_fixed_freq(&table.column(column), frequency, weights)
}

/// Discrete Fourier amplitude `|Σ_j y_j e^{-i q x_j}| · 2/N` of a column on
/// an even angle grid; used for fringe-purity checks.
pub fn fourier_amplitude(rows: &[FringeRow], column: FringeColumn, q: u32) -> f64 {
    let n = rows.len() as f64;
    let (mut re, mut im) = (0.0, 0.0);
    for row in rows {
        let x = row.phase_deg.to_radians() * q as f64;
        let y = column.value(row);
        re += y * x.cos();
        im -= y * x.sin();
    }
    2.0 * (re * re + im * im).sqrt() / n
}

/// Thermal-source herald-singles calibration: finds γ such that the
/// per-pulse SPC1 click probability equals `target` within `rel_tol`, by
/// bisection on the engine's exact probability.
pub fn calibrate_gamma_for_herald_singles(
    base: &Noon3Params,
    bank: &DetectorBank,
    target: f64,
    rel_tol: f64,
) -> Result<f64, FockError> {
    if !(0.0 < target && target < 1.0) {
        return Err(FockError::InvalidParameter(format!(
            "target herald probability must lie in (0, 1), got {target}"
        )));
    }
    let singles = |gamma: f64| -> Result<f64, FockError> {
        let mut p = base.clone();
        p.pairs = crate::source::PairDistribution::thermal(gamma, p.pairs.n_max_pairs)?;
        let preset = preset_noon3(&p)?;
        crate::detect::herald_singles_prob(&preset, bank)
    };
    let (mut lo, mut hi) = (1e-9, 0.5);
    if singles(lo)? > target || singles(hi)? < target {
        return Err(FockError::InvalidParameter(
            "target herald probability is outside the reachable range".into(),
        ));
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        let value = singles(mid)?;
        if (value - target).abs() <= rel_tol * target {
            return Ok(mid);
        }
        if value < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}
