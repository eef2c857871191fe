//! Subcommand implementations.

use std::fs;
use std::path::{Path, PathBuf};

use noon_sim::analysis::{
    fidelity_lower_bound, fit_fixed_freq, fom_ratio_approx, fom_ratio_exact, hom_scan,
    hwp2_calibration_scan, subtract_triple_pair, FitWeights, FomInput, FomScheme,
    NoonSubspaceModel,
};
use noon_sim::detect::{fringe_scan, FringeColumn, FringeTable};
use noon_sim::error::FitError;
use noon_sim::mc::mc_sample_counts;

use crate::config::{ExperimentConfig, RunManifest};
use crate::report;
use crate::{EXIT_CONFIG, EXIT_RANK_DEFICIENT, EXIT_ZERO_HERALD};

pub struct CmdError {
    pub code: u8,
    pub message: String,
}

impl CmdError {
    fn config(message: impl Into<String>) -> Self {
        Self { code: EXIT_CONFIG, message: message.into() }
    }
}

fn load_or_default(path: Option<&Path>) -> Result<ExperimentConfig, CmdError> {
    match path {
        Some(p) => ExperimentConfig::load(p).map_err(CmdError::config),
        None => Ok(ExperimentConfig::default()),
    }
}

pub fn simulate(
    config_path: Option<&Path>,
    out_dir: &Path,
    seed: Option<u64>,
    analytic_only: bool,
    pulses: Option<u64>,
) -> Result<(), CmdError> {
    let mut config = load_or_default(config_path)?;
    if let Some(seed) = seed {
        config.scan.seed = seed;
    }
    if let Some(pulses) = pulses {
        config.scan.pulses_per_point = pulses;
    }
    if analytic_only {
        config.output.analytic_only = true;
    }
    config.validate().map_err(CmdError::config)?;

    let preset = config.build_preset().map_err(CmdError::config)?;
    let bank = config.detector_bank().map_err(CmdError::config)?;
    let angles = config.scan_angles();

    let (heralded, herald_probability) = preset
        .heralded_state()
        .map_err(|e| CmdError::config(e.to_string()))?;
    if heralded.is_none() {
        return Err(CmdError {
            code: EXIT_ZERO_HERALD,
            message: format!(
                "herald has zero probability ({herald_probability:.3e}); nothing to simulate"
            ),
        });
    }

    let table = if config.output.analytic_only {
        fringe_scan(&preset, &bank, &angles).map_err(|e| CmdError::config(e.to_string()))?
    } else {
        mc_sample_counts(
            &preset,
            &bank,
            &angles,
            config.scan.pulses_per_point,
            config.scan.seed,
        )
        .map_err(|e| CmdError::config(e.to_string()))?
    };

    fs::create_dir_all(out_dir)
        .map_err(|e| CmdError::config(format!("cannot create {}: {e}", out_dir.display())))?;
    let csv_path = out_dir.join(format!("{}_fringe.csv", config.output.prefix));
    report::write_fringe_csv(&csv_path, &table).map_err(CmdError::config)?;

    let manifest = RunManifest {
        config: config.clone(),
        engine_version: env!("CARGO_PKG_VERSION").to_string(),
        seed: config.scan.seed,
        herald_probability: Some(herald_probability),
    };
    let manifest_path = out_dir.join(format!("{}_manifest.json", config.output.prefix));
    let json = serde_json::to_string_pretty(&manifest).map_err(|e| CmdError::config(e.to_string()))?;
    fs::write(&manifest_path, json)
        .map_err(|e| CmdError::config(format!("cannot write manifest: {e}")))?;

    println!("wrote {}", csv_path.display());
    println!("wrote {}", manifest_path.display());
    println!("herald_probability = {herald_probability}");
    Ok(())
}

fn parse_column(name: &str) -> Result<FringeColumn, CmdError> {
    Ok(match name {
        "p_twofold" => FringeColumn::Twofold,
        "p_threefold_unheralded" => FringeColumn::ThreefoldUnheralded,
        "p_fourfold" => FringeColumn::Fourfold,
        "c_twofold" => FringeColumn::CountsTwofold,
        "c_threefold_unheralded" => FringeColumn::CountsThreefoldUnheralded,
        "c_fourfold" => FringeColumn::CountsFourfold,
        other => {
            return Err(CmdError::config(format!(
                "unknown column '{other}' (expected one of {:?})",
                &report::FRINGE_HEADER[2..]
            )))
        }
    })
}

fn parse_weights(name: &str) -> Result<FitWeights, CmdError> {
    match name {
        "poisson" => Ok(FitWeights::Poisson),
        "uniform" => Ok(FitWeights::Uniform),
        other => Err(CmdError::config(format!(
            "unknown weighting '{other}' (expected poisson or uniform)"
        ))),
    }
}

fn column_points(table: &FringeTable, column: FringeColumn) -> Result<Vec<(f64, f64)>, CmdError> {
    let points = table.column(column);
    if points.iter().any(|(_, y)| y.is_nan()) {
        return Err(CmdError::config(
            "selected column has empty cells (analytic-only table?)",
        ));
    }
    Ok(points)
}

fn run_fit(points: &[(f64, f64)], k: u32, weights: FitWeights) -> Result<noon_sim::analysis::FitResult, CmdError> {
    fit_fixed_freq(points, k, weights).map_err(|e| match e {
        FitError::RankDeficient { .. } => CmdError { code: EXIT_RANK_DEFICIENT, message: e.to_string() },
        other => CmdError::config(other.to_string()),
    })
}

pub fn fit(csv: &Path, column: &str, frequency: u32, weights: &str) -> Result<(), CmdError> {
    let table = report::read_fringe_csv(csv).map_err(CmdError::config)?;
    let column = parse_column(column)?;
    let weights = parse_weights(weights)?;
    let points = column_points(&table, column)?;
    let fit = run_fit(&points, frequency, weights)?;
    print!("{}", report::fit_report(&fit));
    let bound = fidelity_lower_bound(fit.visibility.clamp(0.0, 1.0), NoonSubspaceModel::default())
        .map_err(|e| CmdError::config(e.to_string()))?;
    println!("fidelity_lower_bound = {}", bound.value);
    println!("fidelity_bound_model = {}", bound.assumptions);
    Ok(())
}

pub fn fom(scheme: &str, gamma: f64, alpha: Option<f64>, mode: &str) -> Result<(), CmdError> {
    let scheme = match scheme {
        "double-pair" => FomScheme::DoublePair,
        "pair-plus-coherent" => {
            let alpha = alpha.ok_or_else(|| {
                CmdError::config("pair-plus-coherent requires --alpha")
            })?;
            FomScheme::PairPlusCoherent { alpha }
        }
        other => {
            return Err(CmdError::config(format!(
                "unknown scheme '{other}' (expected double-pair or pair-plus-coherent)"
            )))
        }
    };
    let input = FomInput { scheme, gamma };
    match mode {
        "approx" => {
            let ratio = fom_ratio_approx(&input).map_err(|e| CmdError::config(e.to_string()))?;
            // leading-order probabilities behind the approximation
            let (p0, pex) = match scheme {
                FomScheme::DoublePair => (gamma * gamma, gamma * gamma * gamma),
                FomScheme::PairPlusCoherent { alpha } => {
                    (gamma * alpha, gamma * alpha * (gamma / alpha + alpha / 2.0) * alpha)
                }
            };
            println!("mode = approx");
            println!("ratio = {ratio}");
            println!("p_exact_complement = {p0}");
            println!("p_surplus = {pex}");
        }
        "exact" => {
            let report = fom_ratio_exact(&input, noon_sim::source::PairKind::Thermal, 12)
                .map_err(|e| CmdError::config(e.to_string()))?;
            println!("mode = exact (thermal pair statistics)");
            println!("ratio = {}", report.ratio);
            println!("p_exact_complement = {}", report.p_exact_complement);
            println!("p_surplus = {}", report.p_surplus);
        }
        other => {
            return Err(CmdError::config(format!(
                "unknown mode '{other}' (expected exact or approx)"
            )))
        }
    }
    Ok(())
}

pub fn background_subtract(
    csv: &Path,
    herald_singles_prob: f64,
    out: Option<&Path>,
) -> Result<(), CmdError> {
    if !(0.0..=1.0).contains(&herald_singles_prob) {
        return Err(CmdError::config(format!(
            "herald_singles_prob must lie in [0, 1], got {herald_singles_prob}"
        )));
    }
    let table = report::read_fringe_csv(csv).map_err(CmdError::config)?;
    let (corrected, sub_report) = subtract_triple_pair(&table, herald_singles_prob);
    let out_path: PathBuf = match out {
        Some(p) => p.to_path_buf(),
        None => csv.with_extension("corrected.csv"),
    };
    report::write_fringe_csv(&out_path, &corrected).map_err(CmdError::config)?;

    let have_counts = table.rows.iter().all(|r| r.c_fourfold.is_some());
    let (column, weights) = if have_counts {
        (FringeColumn::CountsFourfold, FitWeights::Poisson)
    } else {
        (FringeColumn::Fourfold, FitWeights::Uniform)
    };
    let raw = run_fit(&column_points(&table, column)?, 3, weights)?;
    let fixed = run_fit(&column_points(&corrected, column)?, 3, weights)?;

    println!("wrote {}", out_path.display());
    println!("raw_visibility = {}", raw.visibility);
    println!("corrected_visibility = {}", fixed.visibility);
    if sub_report.negative_rate_warning {
        eprintln!(
            "warning: clamping removed up to {:.1}% of a point ({} points clamped)",
            100.0 * sub_report.max_clamp_fraction,
            sub_report.clamped_points
        );
    }
    Ok(())
}

pub fn hom(config_path: Option<&Path>, out_dir: &Path) -> Result<(), CmdError> {
    let config = load_or_default(config_path)?;
    let om = config.overlap_model().map_err(CmdError::config)?;
    let delays = config.hom_delays();
    let scan = hom_scan(&om, &delays).map_err(|e| CmdError::config(e.to_string()))?;
    fs::create_dir_all(out_dir)
        .map_err(|e| CmdError::config(format!("cannot create {}: {e}", out_dir.display())))?;
    let path = out_dir.join(format!("{}_hom.csv", config.output.prefix));
    report::write_scan_csv(&path, ["delay", "p_coincidence"], &scan).map_err(CmdError::config)?;
    let dip = scan
        .iter()
        .map(|&(_, p)| p)
        .fold(f64::INFINITY, f64::min);
    let plateau = scan.first().map(|&(_, p)| p).unwrap_or(f64::NAN);
    println!("wrote {}", path.display());
    println!("dip_minimum = {dip}");
    println!("plateau = {plateau}");
    if plateau > 0.0 {
        println!("dip_visibility = {}", (plateau - dip) / plateau);
    }
    Ok(())
}

pub fn hwp2_cal(config_path: Option<&Path>, out_dir: &Path) -> Result<(), CmdError> {
    let config = load_or_default(config_path)?;
    let params = config.noon3_params().map_err(CmdError::config)?;
    let bank = config.detector_bank().map_err(CmdError::config)?;
    let angles: Vec<f64> = match &config.scan.angles_deg {
        Some(a) => a.clone(),
        None => (0..90).map(|i| i as f64).collect(),
    };
    let scan =
        hwp2_calibration_scan(&params, &bank, &angles).map_err(|e| CmdError::config(e.to_string()))?;
    fs::create_dir_all(out_dir)
        .map_err(|e| CmdError::config(format!("cannot create {}: {e}", out_dir.display())))?;
    let path = out_dir.join(format!("{}_hwp2cal.csv", config.output.prefix));
    report::write_scan_csv(&path, ["hwp2_deg", "p_fourfold"], &scan).map_err(CmdError::config)?;
    let best = scan
        .iter()
        .fold((f64::NAN, f64::NEG_INFINITY), |acc, &(deg, p)| {
            if p > acc.1 {
                (deg, p)
            } else {
                acc
            }
        });
    println!("wrote {}", path.display());
    println!("optimal_hwp2_deg = {}", best.0);
    Ok(())
}

pub fn presets() -> Result<(), CmdError> {
    println!("presets:");
    println!("  noon3    heralded three-photon NOON state (double SPDC pair, PPBS herald)");
    println!("  noon4    four-photon extension (|3,3> input, two PPBS heralds, P = 16/243)");
    println!("  hom      HOM interferometry scan (via the `hom` subcommand)");
    println!("  hwp2-cal HWP2 calibration scan (via the `hwp2-cal` subcommand)");
    println!();
    println!("default configuration (paper hardware values):");
    let config = ExperimentConfig::default();
    let json = serde_json::to_string_pretty(&config).map_err(|e| CmdError::config(e.to_string()))?;
    println!("{json}");
    Ok(())
}
