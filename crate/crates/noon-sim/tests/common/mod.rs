//! Shared test support: an independent dense-basis lift of single-particle
//! unitaries built from matrix permanents, plus random-instance generators.
#![allow(dead_code)] // each integration-test target uses a different subset
//!
//! The oracle route is deliberately different from the library's multinomial
//! substitution: the lifted matrix element between occupation vectors is
//! `per(U[out, in]) / √(Π out_i! Π in_j!)` with rows and columns repeated
//! per occupation, evaluated by explicit permutation sums.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;

use noon_sim::fock::{FockState, Occupation, SingleParticleUnitary};
use noon_sim::ModeId;

/// Permanent of a small square matrix by permutation enumeration.
pub fn permanent(m: &DMatrix<Complex64>) -> Complex64 {
    let n = m.nrows();
    assert_eq!(n, m.ncols());
    if n == 0 {
        return Complex64::new(1.0, 0.0);
    }
    let mut cols: Vec<usize> = (0..n).collect();
    let mut total = Complex64::new(0.0, 0.0);
    permute(&mut cols, 0, &mut |perm| {
        let mut term = Complex64::new(1.0, 0.0);
        for (row, &col) in perm.iter().enumerate() {
            term *= m[(row, col)];
        }
        total += term;
    });
    total
}

fn permute(items: &mut [usize], k: usize, visit: &mut impl FnMut(&[usize])) {
    if k == items.len() {
        visit(items);
        return;
    }
    for i in k..items.len() {
        items.swap(k, i);
        permute(items, k + 1, visit);
        items.swap(k, i);
    }
}

fn factorial(n: u8) -> f64 {
    (1..=n as u64).map(|k| k as f64).product::<f64>().max(1.0)
}

/// All occupation vectors of `modes` modes with exactly `total` photons.
pub fn occupations_with_total(modes: usize, total: u32) -> Vec<Occupation> {
    let mut out = Vec::new();
    let mut occ = vec![0u8; modes];
    fill(&mut occ, 0, total, &mut out);
    out
}

fn fill(occ: &mut Vec<u8>, slot: usize, remaining: u32, out: &mut Vec<Occupation>) {
    if slot == occ.len() - 1 {
        occ[slot] = remaining as u8;
        out.push(occ.clone());
        occ[slot] = 0;
        return;
    }
    for take in 0..=remaining {
        occ[slot] = take as u8;
        fill(occ, slot + 1, remaining - take, out);
        occ[slot] = 0;
    }
}

/// `⟨out| lift(U) |in⟩` via the permanent formula. `u` must act on all
/// registry modes in registry order.
pub fn lift_element(u: &DMatrix<Complex64>, out: &[u8], input: &[u8]) -> Complex64 {
    let n_out: u32 = out.iter().map(|&c| c as u32).sum();
    let n_in: u32 = input.iter().map(|&c| c as u32).sum();
    if n_out != n_in {
        return Complex64::new(0.0, 0.0);
    }
    let n = n_in as usize;
    let mut rows = Vec::with_capacity(n);
    for (i, &c) in out.iter().enumerate() {
        for _ in 0..c {
            rows.push(i);
        }
    }
    let mut cols = Vec::with_capacity(n);
    for (j, &c) in input.iter().enumerate() {
        for _ in 0..c {
            cols.push(j);
        }
    }
    let mut sub = DMatrix::from_element(n, n, Complex64::new(0.0, 0.0));
    for (r, &i) in rows.iter().enumerate() {
        for (c, &j) in cols.iter().enumerate() {
            sub[(r, c)] = u[(i, j)];
        }
    }
    let norm: f64 = out
        .iter()
        .chain(input.iter())
        .map(|&c| factorial(c))
        .product::<f64>()
        .sqrt();
    permanent(&sub) / norm
}

/// Applies `u` (over the full registry, registry order) to `state` through
/// the dense permanent-based lift.
pub fn dense_apply(state: &FockState, u: &DMatrix<Complex64>) -> Vec<(Occupation, Complex64)> {
    let modes = state.registry().len();
    let mut by_total: std::collections::BTreeMap<u32, Vec<(Occupation, Complex64)>> =
        std::collections::BTreeMap::new();
    for (occ, amp) in state.terms() {
        let total: u32 = occ.iter().map(|&c| c as u32).sum();
        by_total.entry(total).or_default().push((occ.clone(), amp));
    }
    let mut out = Vec::new();
    for (total, terms) in by_total {
        for target in occupations_with_total(modes, total) {
            let mut amp = Complex64::new(0.0, 0.0);
            for (in_occ, in_amp) in &terms {
                amp += lift_element(u, &target, in_occ) * in_amp;
            }
            if amp.norm() > 1e-16 {
                out.push((target, amp));
            }
        }
    }
    out
}

/// Random unitary on `modes` as a product of Givens rotations with phases.
pub fn random_unitary(modes: Vec<ModeId>, rng: &mut impl Rng) -> SingleParticleUnitary {
    let n = modes.len();
    let mut m = DMatrix::from_diagonal_element(n, n, Complex64::new(1.0, 0.0));
    for i in 0..n {
        let phase = Complex64::from_polar(1.0, rng.gen_range(0.0..std::f64::consts::TAU));
        for j in 0..n {
            m[(i, j)] *= phase;
        }
    }
    for _ in 0..(3 * n) {
        let a = rng.gen_range(0..n);
        let mut b = rng.gen_range(0..n);
        while b == a {
            b = rng.gen_range(0..n);
        }
        let theta: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
        let phi: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
        let (s, c) = theta.sin_cos();
        let e = Complex64::from_polar(1.0, phi);
        let mut g = DMatrix::from_diagonal_element(n, n, Complex64::new(1.0, 0.0));
        g[(a, a)] = Complex64::new(c, 0.0);
        g[(a, b)] = -e * s;
        g[(b, a)] = e.conj() * s;
        g[(b, b)] = Complex64::new(c, 0.0);
        m = g * m;
    }
    SingleParticleUnitary::new(modes, m).expect("Givens product is unitary")
}

/// Largest amplitude difference between the engine result and a dense
/// reference given as (occupation, amplitude) pairs.
pub fn max_amplitude_error(engine: &FockState, reference: &[(Occupation, Complex64)]) -> f64 {
    let mut err = 0.0f64;
    for (occ, amp) in reference {
        err = err.max((engine.amplitude(occ) - amp).norm());
    }
    for (occ, amp) in engine.terms() {
        let reference_amp = reference
            .iter()
            .find(|(o, _)| o == occ)
            .map(|(_, a)| *a)
            .unwrap_or(Complex64::new(0.0, 0.0));
        err = err.max((amp - reference_amp).norm());
    }
    err
}

/// Phase that rotates `actual` onto the positive direction of `target`.
pub fn alignment_phase(actual: Complex64, target: Complex64) -> Complex64 {
    let ratio = target / actual;
    ratio / ratio.norm()
}
