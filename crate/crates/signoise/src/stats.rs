//! Small numerical toolbox: descriptive statistics, kernel density mode
//! estimation, log-space accumulation, and regularized incomplete gamma
//! functions (needed for inverse-gamma medians and chi-square tail areas).

/// Arithmetic mean; 0 for an empty slice.
pub fn mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return 0.0;
    }
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Sample standard deviation (n-1 divisor); 0 when fewer than two points.
pub fn sd(xs: &[f64]) -> f64 {
    if xs.len() < 2 {
        return 0.0;
    }
    let m = mean(xs);
    (xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (xs.len() - 1) as f64).sqrt()
}

/// Linear-interpolation quantile (type 7) of a sorted slice, p in [0,1].
pub fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    assert!(!sorted.is_empty(), "quantile of empty slice");
    let h = p.clamp(0.0, 1.0) * (sorted.len() - 1) as f64;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Copies, sorts, and evaluates several quantiles at once.
pub fn quantiles(xs: &[f64], ps: &[f64]) -> Vec<f64> {
    let mut v = xs.to_vec();
    v.sort_by(|a, b| a.partial_cmp(b).expect("NaN in quantile input"));
    ps.iter().map(|&p| quantile_sorted(&v, p)).collect()
}

/// The box-plot percentile levels used throughout the reports.
pub const BOX_LEVELS: [f64; 5] = [0.025, 0.25, 0.50, 0.75, 0.975];

/// 2.5/25/50/75/97.5 percentiles.
pub fn box_percentiles(xs: &[f64]) -> [f64; 5] {
    let q = quantiles(xs, &BOX_LEVELS);
    [q[0], q[1], q[2], q[3], q[4]]
}

/// Central 95% interval (2.5 and 97.5 percentiles).
pub fn interval95(xs: &[f64]) -> (f64, f64) {
    let q = quantiles(xs, &[0.025, 0.975]);
    (q[0], q[1])
}

/// Excess kurtosis (population moment ratio m4/m2² − 3); 0 when fewer than
/// two points or for a degenerate sample.  Positive values flag tails
/// heavier than a Normal's.
pub fn excess_kurtosis(xs: &[f64]) -> f64 {
    if xs.len() < 2 {
        return 0.0;
    }
    let m = mean(xs);
    let n = xs.len() as f64;
    let m2 = xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / n;
    if m2 <= 0.0 {
        return 0.0;
    }
    let m4 = xs.iter().map(|x| (x - m).powi(4)).sum::<f64>() / n;
    m4 / (m2 * m2) - 3.0
}

/// log(mean(exp(z_i))) without overflow.
pub fn log_mean_exp(zs: &[f64]) -> f64 {
    let m = zs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if !m.is_finite() {
        return m;
    }
    m + (zs.iter().map(|z| (z - m).exp()).sum::<f64>() / zs.len() as f64).ln()
}

/// Silverman's rule-of-thumb bandwidth: 0.9 min(sd, iqr/1.34) n^(-1/5).
pub fn silverman_bandwidth(xs: &[f64]) -> f64 {
    let s = sd(xs);
    let q = quantiles(xs, &[0.25, 0.75]);
    let iqr = (q[1] - q[0]) / 1.34;
    let spread = if iqr > 0.0 { s.min(iqr) } else { s };
    0.9 * spread * (xs.len() as f64).powf(-0.2)
}

/// Gaussian KDE evaluated on a caller-supplied grid with bandwidth `h`.
pub fn kde_on_grid(xs: &[f64], grid: &[f64], h: f64) -> Vec<f64> {
    assert!(h > 0.0 && !xs.is_empty());
    let norm = 1.0 / (xs.len() as f64 * h * (2.0 * std::f64::consts::PI).sqrt());
    grid.iter()
        .map(|&g| norm * xs.iter().map(|&x| (-0.5 * ((g - x) / h).powi(2)).exp()).sum::<f64>())
        .collect()
}

/// Gaussian kernel density on an evenly spaced grid spanning the sample range.
pub fn kde_grid(xs: &[f64], points: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(points >= 2 && !xs.is_empty());
    let lo = xs.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = xs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let h = silverman_bandwidth(xs);
    let grid: Vec<f64> = (0..points)
        .map(|i| lo + (hi - lo) * i as f64 / (points - 1) as f64)
        .collect();
    if h <= 0.0 {
        // degenerate sample: all mass at one point
        let dens = grid.iter().map(|&g| if g == lo { 1.0 } else { 0.0 }).collect();
        return (grid, dens);
    }
    let dens = kde_on_grid(xs, &grid, h);
    (grid, dens)
}

/// Mode estimate: argmax of a 512-point Gaussian KDE.
pub fn kde_mode(xs: &[f64]) -> f64 {
    let (grid, dens) = kde_grid(xs, 512);
    let mut best = 0;
    for i in 1..grid.len() {
        if dens[i] > dens[best] {
            best = i;
        }
    }
    grid[best]
}

/// log of the standard normal density at standardized residual.
pub fn ln_normal_pdf(x: f64, mean: f64, sd: f64) -> f64 {
    let z = (x - mean) / sd;
    -0.5 * z * z - sd.ln() - 0.5 * (2.0 * std::f64::consts::PI).ln()
}

/// Standard normal CDF, Phi(z) = erfc(-z / sqrt 2) / 2, evaluated through
/// the regularized incomplete gamma function (P(1/2, z^2/2) = erf(|z|/sqrt 2)).
pub fn std_normal_cdf(z: f64) -> f64 {
    if z >= 0.0 {
        0.5 * (1.0 + gamma_p(0.5, 0.5 * z * z))
    } else {
        // evaluate the tail directly; 0.5 * (1 - P) would cancel to a few
        // ulps of 0.5 and wreck the relative precision for large |z|
        0.5 * gamma_q(0.5, 0.5 * z * z)
    }
}

/// ln Gamma(x) by the Lanczos approximation (g = 7, 9 coefficients).
pub fn ln_gamma(x: f64) -> f64 {
    const COEF: [f64; 9] = [
        0.999_999_999_999_809_9,
        676.520_368_121_885_1,
        -1_259.139_216_722_402_8,
        771.323_428_777_653_1,
        -176.615_029_162_140_6,
        12.507_343_278_686_905,
        -0.138_571_095_265_720_12,
        9.984_369_578_019_572e-6,
        1.505_632_735_149_311_6e-7,
    ];
    if x < 0.5 {
        // reflection for the left half-plane
        let pi = std::f64::consts::PI;
        return (pi / (pi * x).sin()).ln() - ln_gamma(1.0 - x);
    }
    let x = x - 1.0;
    let mut a = COEF[0];
    let t = x + 7.5;
    for (i, &c) in COEF.iter().enumerate().skip(1) {
        a += c / (x + i as f64);
    }
    0.5 * (2.0 * std::f64::consts::PI).ln() + (x + 0.5) * t.ln() - t + a.ln()
}

/// Regularized lower incomplete gamma P(a, x), a > 0, x >= 0.
///
/// Series expansion for x < a+1, continued fraction otherwise
/// (both converge to ~1e-15 there).
pub fn gamma_p(a: f64, x: f64) -> f64 {
    assert!(a > 0.0 && x >= 0.0, "gamma_p domain");
    if x == 0.0 {
        return 0.0;
    }
    if x < a + 1.0 {
        lower_series(a, x)
    } else {
        (1.0 - upper_cf(a, x)).clamp(0.0, 1.0)
    }
}

/// Regularized upper incomplete gamma Q(a, x) = 1 - P(a, x).
///
/// The continued-fraction branch is returned directly so that tail values
/// keep full relative precision instead of cancelling against 1.
pub fn gamma_q(a: f64, x: f64) -> f64 {
    assert!(a > 0.0 && x >= 0.0, "gamma_q domain");
    if x == 0.0 {
        return 1.0;
    }
    if x < a + 1.0 {
        (1.0 - lower_series(a, x)).clamp(0.0, 1.0)
    } else {
        upper_cf(a, x)
    }
}

// P(a,x) = x^a e^-x / Gamma(a) * sum_k x^k / (a(a+1)...(a+k)), for x < a+1
fn lower_series(a: f64, x: f64) -> f64 {
    let ln_pre = a * x.ln() - x - ln_gamma(a);
    let mut term = 1.0 / a;
    let mut sum = term;
    let mut k = 1.0;
    while term.abs() > sum.abs() * 1e-16 && k < 10_000.0 {
        term *= x / (a + k);
        sum += term;
        k += 1.0;
    }
    (ln_pre.exp() * sum).min(1.0)
}

// Q(a,x) via Lentz's continued fraction, for x >= a + 1
fn upper_cf(a: f64, x: f64) -> f64 {
    let ln_pre = a * x.ln() - x - ln_gamma(a);
    let tiny = 1e-300;
    let mut b = x + 1.0 - a;
    let mut c = 1.0 / tiny;
    let mut d = 1.0 / b;
    let mut h = d;
    let mut i = 1.0;
    loop {
        let an = -i * (i - a);
        b += 2.0;
        d = an * d + b;
        if d.abs() < tiny {
            d = tiny;
        }
        c = b + an / c;
        if c.abs() < tiny {
            c = tiny;
        }
        d = 1.0 / d;
        let delta = d * c;
        h *= delta;
        if (delta - 1.0).abs() < 1e-16 || i > 10_000.0 {
            break;
        }
        i += 1.0;
    }
    (ln_pre.exp() * h).min(1.0)
}

/// Upper tail of the chi-square distribution with `dof` degrees of freedom.
pub fn chi_square_sf(x: f64, dof: f64) -> f64 {
    gamma_q(0.5 * dof, 0.5 * x.max(0.0))
}

/// Median of InvGamma(shape, scale) (density ∝ x^(-shape-1) exp(-scale/x)).
///
/// If X ~ InvGamma(a, b) then b/X ~ Gamma(a, 1), so the median is
/// b / q where P(a, q) = 1/2; q is found by bisection.
pub fn inv_gamma_median(shape: f64, scale: f64) -> f64 {
    assert!(shape > 0.0 && scale > 0.0);
    let (mut lo, mut hi) = (0.0f64, shape + 40.0 * shape.sqrt() + 40.0);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if gamma_p(shape, mid) < 0.5 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    scale / (0.5 * (lo + hi))
}

/// Pearson correlation of two equal-length slices.
pub fn correlation(xs: &[f64], ys: &[f64]) -> f64 {
    assert_eq!(xs.len(), ys.len());
    let mx = mean(xs);
    let my = mean(ys);
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    for (&x, &y) in xs.iter().zip(ys) {
        sxy += (x - mx) * (y - my);
        sxx += (x - mx) * (x - mx);
        syy += (y - my) * (y - my);
    }
    sxy / (sxx * syy).sqrt()
}
