//! Dense multivariate-Normal oracle for the complete-data likelihood.
//!
//! Integrating the latent signal out of the complete-data likelihood by
//! quadrature, year by year, must reproduce the joint density of the
//! (observation, ensemble) vector implied by the model: an exchangeable
//! Normal with mean (mu_y, mu_x 1) and covariance assembled from the
//! parameter second moments, evaluated through nalgebra's Cholesky.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use signoise::data::HindcastDataset;
use signoise::model::{log_likelihood, ModelParams, SignalPath};
use signoise::rng::{domains, Philox};

/// Marginal log density of the full dataset by 1-D Simpson quadrature over
/// each year's signal (years are independent given the parameters).
fn marginal_by_quadrature(data: &HindcastDataset, p: &ModelParams) -> f64 {
    let r = data.r_members() as f64;
    // conditional precision of s_t given that year's data: the integrand is
    // a Gaussian in s, so center and scale the grid on its exact moments
    let prec = 1.0 / (p.sigma_s * p.sigma_s)
        + 1.0 / (p.sigma_eps * p.sigma_eps)
        + r * p.beta * p.beta / (p.sigma_eta * p.sigma_eta);
    let csd = prec.sqrt().recip();
    let mut total = 0.0;
    for t in 0..data.n_years() {
        let center = {
            let row: f64 = data.ens[t].iter().sum();
            ((data.obs[t] - p.mu_y) / (p.sigma_eps * p.sigma_eps)
                + p.beta * (row - r * p.mu_x) / (p.sigma_eta * p.sigma_eta))
                / prec
        };
        let (lo, hi) = (center - 15.0 * csd, center + 15.0 * csd);
        let n = 4000usize;
        let h = (hi - lo) / n as f64;
        let year_lp = |s: f64| {
            let mut lp = ln_norm(s, 0.0, p.sigma_s);
            lp += ln_norm(data.obs[t], p.mu_y + s, p.sigma_eps);
            for &x in &data.ens[t] {
                lp += ln_norm(x, p.mu_x + p.beta * s, p.sigma_eta);
            }
            lp
        };
        let shift = year_lp(center);
        let mut z = 0.0;
        for i in 0..=n {
            let s = lo + h * i as f64;
            let weight = if i == 0 || i == n {
                1.0
            } else if i % 2 == 1 {
                4.0
            } else {
                2.0
            };
            z += weight * (year_lp(s) - shift).exp();
        }
        total += shift + (z * h / 3.0).ln();
    }
    total
}

fn ln_norm(x: f64, mean: f64, sd: f64) -> f64 {
    let z = (x - mean) / sd;
    -0.5 * z * z - sd.ln() - 0.5 * (2.0 * std::f64::consts::PI).ln()
}

/// Exchangeable-Normal log density of the stacked (y_t, x_t1..x_tR) vectors.
fn mvn_log_density(data: &HindcastDataset, p: &ModelParams) -> f64 {
    let r = data.r_members();
    let d = r + 1;
    let ss2 = p.sigma_s * p.sigma_s;
    let mut cov = DMatrix::zeros(d, d);
    cov[(0, 0)] = ss2 + p.sigma_eps * p.sigma_eps;
    for i in 1..d {
        cov[(0, i)] = p.beta * ss2;
        cov[(i, 0)] = p.beta * ss2;
        for j in 1..d {
            cov[(i, j)] = p.beta * p.beta * ss2
                + if i == j { p.sigma_eta * p.sigma_eta } else { 0.0 };
        }
    }
    let chol = cov.clone().cholesky().expect("positive definite");
    let ln_det = chol.l().diagonal().iter().map(|v| 2.0 * v.ln()).sum::<f64>();
    let mut mean = DVector::zeros(d);
    mean[0] = p.mu_y;
    for i in 1..d {
        mean[i] = p.mu_x;
    }
    let mut total = 0.0;
    for t in 0..data.n_years() {
        let mut v = DVector::zeros(d);
        v[0] = data.obs[t];
        for (i, &x) in data.ens[t].iter().enumerate() {
            v[i + 1] = x;
        }
        let centered = v - &mean;
        let quad = centered.dot(&chol.solve(&centered));
        total += -0.5 * (d as f64 * (2.0 * std::f64::consts::PI).ln() + ln_det + quad);
    }
    total
}

#[test]
fn quadrature_marginal_matches_exchangeable_mvn_on_20_instances() {
    let mut g = Philox::substream(2024, domains::NEW_PERIOD, 55);
    for case in 0..20u64 {
        let p = ModelParams {
            mu_x: 40.0 * (g.random::<f64>() - 0.5),
            mu_y: 40.0 * (g.random::<f64>() - 0.5),
            beta: 3.0 * g.random::<f64>() - 1.0,
            sigma_s: 0.5 + 9.5 * g.random::<f64>(),
            sigma_eps: 0.5 + 9.5 * g.random::<f64>(),
            sigma_eta: 0.5 + 9.5 * g.random::<f64>(),
        };
        let n_years = 1 + (g.random::<u64>() % 3) as usize;
        let r = 2 + (g.random::<u64>() % 3) as usize;
        let (data, _) = p.simulate(n_years, r, &mut g);
        let quad = marginal_by_quadrature(&data, &p);
        let mvn = mvn_log_density(&data, &p);
        let rel = (quad - mvn).abs() / mvn.abs().max(1.0);
        assert!(rel < 1e-6, "case {case}: quadrature {quad} vs MVN {mvn} (rel {rel:.2e})");
    }
}

/// The complete-data likelihood itself is part of the same factorization:
/// joint = complete-data likelihood × signal prior; check one instance by
/// comparing the quadrature integrand at its center against log_likelihood.
#[test]
fn complete_data_likelihood_is_the_quadrature_integrand() {
    let p = ModelParams {
        mu_x: 23.0,
        mu_y: 21.0,
        beta: 0.7,
        sigma_s: 5.0,
        sigma_eps: 4.0,
        sigma_eta: 7.0,
    };
    let mut g = Philox::substream(8, domains::NEW_PERIOD, 3);
    let (data, _) = p.simulate(3, 4, &mut g);
    let s = SignalPath { s: vec![1.0, -0.5, 2.0] };
    let ll = log_likelihood(&data, &p, &s).unwrap();
    let mut expect = 0.0;
    for t in 0..3 {
        expect += ln_norm(data.obs[t], p.mu_y + s.s[t], p.sigma_eps);
        for &x in &data.ens[t] {
            expect += ln_norm(x, p.mu_x + p.beta * s.s[t], p.sigma_eta);
        }
    }
    assert!((ll - expect).abs() < 1e-10, "{ll} vs {expect}");
}
