//! Cross-checks against independent routes: dense linear algebra, closed
//! forms, and the jump-process sampler.

use std::f64::consts::LN_2;

use nalgebra::DMatrix;

use pauli_core::evolution::{derivative_decay_profile, evolve_spectral, log_slope};
use pauli_core::generator::build_generator;
use pauli_core::model::{gibbs_distribution, ModelParams, TruncatedDistribution};
use pauli_core::spectral::{decompose, spectral_gap};
use pauli_core::stochastic::{gillespie_sample, total_variation, TrajectoryConfig};

fn dense_eigenvalues(p: &ModelParams) -> Vec<f64> {
    let dim = p.levels();
    let a = DMatrix::from_row_slice(dim, dim, &build_generator(p).to_dense());
    let ev = a.complex_eigenvalues();
    assert!(ev.iter().all(|z| z.im.abs() < 1e-9), "generator spectrum must be real");
    let mut re: Vec<f64> = ev.iter().map(|z| z.re).collect();
    re.sort_by(|x, y| y.partial_cmp(x).unwrap());
    re
}

#[test]
fn three_level_spectrum_in_closed_form() {
    // N = 2, beta = ln 2, rho = 1: the spectrum is -3/2 and the roots of
    // x^2 + 9/2 x + 1/2.
    let p = ModelParams::new(LN_2, 1.0, 2).unwrap();
    let disc = 18.25f64.sqrt();
    let expected = [(-4.5 + disc) / 2.0, -1.5, (-4.5 - disc) / 2.0];
    let dec = decompose(&p).unwrap();
    let dense = dense_eigenvalues(&p);
    for k in 0..3 {
        assert!((dec.eigenvalue(k) - expected[k]).abs() < 1e-14, "{k}");
        assert!((dense[k] - expected[k]).abs() < 1e-12, "{k}");
    }
    assert!((expected[0] + 0.113_999_063_670_617_21).abs() < 1e-15);
}

#[test]
fn symmetrization_preserves_the_spectrum() {
    for (beta, rho) in [(LN_2, 1.0), (1.0, 2.0), (0.3, 0.7), (2.5, 1.3)] {
        for n in [3, 8, 20, 40] {
            let p = ModelParams::new(beta, rho, n).unwrap();
            let dec = decompose(&p).unwrap();
            let dense = dense_eigenvalues(&p);
            let scale = dec.matrix_norm().max(1.0);
            for (k, d) in dense.iter().enumerate() {
                assert!((dec.eigenvalue(k) - d).abs() <= 1e-10 * scale, "beta={beta} n={n} k={k}");
            }
        }
    }
}

#[test]
fn gap_examples() {
    let gap = |beta: f64, rho: f64| spectral_gap(&decompose(&ModelParams::new(beta, rho, 200).unwrap()).unwrap()).unwrap();
    assert!((gap(LN_2, 1.0) - 0.5).abs() < 1e-10);
    let expected = 2.0 * (1.0 - (-1.0f64).exp());
    assert!((gap(1.0, 2.0) - expected).abs() < 1e-10);
    assert!((expected - 1.264_241_117_657_115).abs() < 1e-14);
}

#[test]
fn total_variation_between_two_gibbs_laws() {
    let a = gibbs_distribution(&ModelParams::new(LN_2, 1.0, 200).unwrap());
    let b = gibbs_distribution(&ModelParams::new(1.0, 1.0, 200).unwrap());
    // 200-bit direct summation.
    let expected = 0.132_120_558_828_557_68;
    assert!((total_variation(&a, &b).unwrap() - expected).abs() < 1e-15);
}

#[test]
fn derivative_profile_examples() {
    let p = ModelParams::new(LN_2, 1.0, 200).unwrap();
    let dec = decompose(&p).unwrap();
    let grid: Vec<f64> = (1..=1000).map(|i| i as f64 * 1e-3).collect();

    let g = gibbs_distribution(&p);
    let flat = derivative_decay_profile(&dec, &g, &grid).unwrap();
    assert!(flat.iter().all(|v| *v < 1e-12));

    let e0 = TruncatedDistribution::delta(201, 0).unwrap();
    let prof = derivative_decay_profile(&dec, &e0, &grid).unwrap();
    let max = prof.iter().cloned().fold(0.0, f64::max);
    assert!(max.is_finite() && max < 1.0, "{max}");

    // A single mode: t |nu_1| exp(t nu_1), peaking at e^-1 when t = 1/|nu_1| = 2.
    let mode = TruncatedDistribution::from_values(dec.vector(1).to_vec());
    let ts = [0.5, 1.0, 2.0, 4.0];
    let single = derivative_decay_profile(&dec, &mode, &ts).unwrap();
    for (t, v) in ts.iter().zip(&single) {
        let exact = t * 0.5 * (-0.5 * t).exp();
        assert!((v - exact).abs() < 1e-12, "{t}");
    }
    assert!((single[2] - (-1.0f64).exp()).abs() < 1e-12);
    assert!(derivative_decay_profile(&dec, &e0, &[0.0, 1.0]).is_err());
}

#[test]
fn sampler_agrees_level_by_level() {
    let p = ModelParams::new(LN_2, 1.0, 40).unwrap();
    let dec = decompose(&p).unwrap();
    let times = vec![0.25, 1.0, 3.0];
    for (seed, p0) in [
        (1, TruncatedDistribution::delta(41, 0).unwrap()),
        (2, TruncatedDistribution::uniform(41, 0, 4).unwrap()),
    ] {
        let config = TrajectoryConfig::with_default_cap(&p, 100_000, times.clone(), seed).unwrap();
        let mc = gillespie_sample(&p, &config, &p0).unwrap();
        let exact = evolve_spectral(&dec, &p0, &times).unwrap();
        for i in 0..times.len() {
            let state = exact.state(i);
            for (m, (emp, ex)) in mc.histograms[i].values().iter().zip(state.values()).enumerate() {
                // Binomial error of the exact law, plus one path for the
                // discreteness of the counts.
                let n = mc.n_paths as f64;
                let q = ex.clamp(0.0, 1.0);
                let se = (q * (1.0 - q) / n).sqrt();
                assert!((emp - ex).abs() <= 3.0 * se + 1.0 / n, "t={} m={m}: {emp} vs {ex}", times[i]);
            }
        }
    }
}

#[test]
fn sampler_stays_at_equilibrium() {
    let p = ModelParams::new(LN_2, 1.0, 40).unwrap();
    let g = gibbs_distribution(&p);
    let config = TrajectoryConfig::with_default_cap(&p, 100_000, vec![0.0, 1.0, 5.0], 3).unwrap();
    let mc = gillespie_sample(&p, &config, &g).unwrap();
    let band = 3.0 * (41.0f64 / 1e5).sqrt();
    for h in &mc.histograms {
        let tv = total_variation(h, &g).unwrap();
        assert!(tv <= 0.02 && tv <= band, "{tv}");
    }
}

#[test]
fn sampler_recovers_the_relaxation_rate() {
    // Distance to equilibrium from e_0 decays like exp(-gap t); the first
    // mode's coefficient dominates over the mid-time window before the
    // Monte Carlo floor is reached.
    let p = ModelParams::new(LN_2, 1.0, 40).unwrap();
    let g = gibbs_distribution(&p);
    let gap = spectral_gap(&decompose(&p).unwrap()).unwrap();
    let times: Vec<f64> = (0..=8).map(|i| 3.0 + 0.5 * i as f64).collect();
    let config = TrajectoryConfig::with_default_cap(&p, 1_000_000, times.clone(), 11).unwrap();
    let e0 = TruncatedDistribution::delta(41, 0).unwrap();
    let mc = gillespie_sample(&p, &config, &e0).unwrap();
    let tv: Vec<f64> = mc.histograms.iter().map(|h| total_variation(h, &g).unwrap()).collect();
    let slope = log_slope(&times, &tv).unwrap();
    assert!((slope + gap).abs() <= 0.1 * gap, "slope {slope}, gap {gap}");
}
