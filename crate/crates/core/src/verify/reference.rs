/// Reference convergence rates for one configuration.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ReferenceRates {
    /// Chart name of the domain.
    pub domain: &'static str,
    pub k: usize,
    pub m: usize,
    pub enriched: bool,
    pub u: f64,
    pub u_star: f64,
    pub sigma: f64,
    pub div: f64,
}

const fn row(
    domain: &'static str,
    k: usize,
    m: usize,
    enriched: bool,
    [u, u_star, sigma, div]: [f64; 4],
) -> ReferenceRates {
    ReferenceRates { domain, k, m, enriched, u, u_star, sigma, div }
}

/// Rates of `(û_h, û*_h, σ̂_h, div̂ σ̂_h)` on the unit disk and the
/// three-leaf domain, plain and enriched spaces.
#[allow(clippy::approx_constant)]
pub const REFERENCE_RATES: &[ReferenceRates] = &[
    row("circle", 3, 1, false, [1.97, 1.98, 1.54, 1.51]),
    row("circle", 3, 2, false, [3.04, 3.50, 2.50, 2.50]),
    row("circle", 3, 3, false, [3.03, 4.41, 3.51, 3.14]),
    row("circle", 3, 4, false, [3.03, 4.49, 3.51, 3.14]),
    row("circle", 4, 1, false, [1.98, 1.98, 1.52, 1.51]),
    row("circle", 4, 2, false, [3.50, 3.50, 2.50, 2.49]),
    row("circle", 4, 3, false, [4.09, 4.00, 3.51, 3.53]),
    row("circle", 4, 4, false, [4.09, 5.50, 4.49, 4.17]),
    row("circle", 4, 5, false, [4.09, 5.49, 4.49, 4.18]),
    row("circle", 3, 1, true, [2.05, 2.05, 1.58, 1.51]),
    row("circle", 3, 2, true, [2.96, 3.53, 2.50, 2.52]),
    row("circle", 3, 3, true, [2.93, 4.09, 3.57, 2.94]),
    row("circle", 3, 4, true, [2.93, 4.97, 3.97, 2.93]),
    row("circle", 4, 1, true, [2.05, 2.05, 1.58, 1.51]),
    row("circle", 4, 2, true, [3.54, 3.54, 2.50, 2.49]),
    row("circle", 4, 3, true, [3.97, 4.08, 3.52, 3.55]),
    row("circle", 4, 4, true, [3.94, 5.68, 4.68, 3.89]),
    row("circle", 4, 5, true, [3.94, 5.89, 4.88, 3.88]),
    row("three_leaf", 3, 1, false, [1.98, 1.98, 1.54, 1.51]),
    row("three_leaf", 3, 2, false, [3.18, 3.52, 2.50, 2.49]),
    row("three_leaf", 3, 3, false, [3.13, 4.16, 3.53, 3.31]),
    row("three_leaf", 3, 4, false, [3.13, 4.48, 3.52, 3.32]),
    row("three_leaf", 4, 1, false, [1.96, 1.96, 1.56, 1.51]),
    row("three_leaf", 4, 2, false, [3.52, 3.52, 2.49, 2.49]),
    row("three_leaf", 4, 3, false, [4.20, 4.02, 3.50, 3.49]),
    row("three_leaf", 4, 4, false, [4.41, 5.46, 4.48, 4.23]),
    row("three_leaf", 4, 5, false, [4.41, 5.46, 4.47, 4.22]),
    row("three_leaf", 3, 1, true, [2.04, 2.05, 1.59, 1.51]),
    row("three_leaf", 3, 2, true, [3.15, 3.55, 2.49, 2.50]),
    row("three_leaf", 3, 3, true, [2.89, 4.08, 3.53, 3.09]),
    row("three_leaf", 3, 4, true, [2.89, 5.15, 4.14, 2.95]),
    row("three_leaf", 4, 1, true, [1.97, 1.97, 1.61, 1.51]),
    row("three_leaf", 4, 2, true, [3.54, 3.54, 2.49, 2.49]),
    row("three_leaf", 4, 3, true, [4.00, 4.01, 3.52, 3.47]),
    row("three_leaf", 4, 4, true, [3.90, 5.53, 4.48, 4.20]),
    row("three_leaf", 4, 5, true, [3.86, 5.99, 5.17, 4.16]),
];

pub fn reference_rates(domain: &str, k: usize, m: usize, enriched: bool) -> Option<ReferenceRates> {
    REFERENCE_RATES
        .iter()
        .find(|r| r.domain == domain && r.k == k && r.m == m && r.enriched == enriched)
        .copied()
}

/// Predicted rates `(û_h, û*_h, σ̂_h, div̂ σ̂_h, Q_h û − û_h)` for a smooth
/// solution on plain spaces.
pub fn theoretical_rates(k: usize, m: usize) -> [f64; 5] {
    let (k, m) = (k as f64, m as f64);
    [
        k.min(m + 1.0),
        (k + 1.5).min(m + 1.0),
        (k + 0.5).min(m + 0.5),
        k.min(m + 0.5),
        (k + 1.5).min(m + 1.0),
    ]
}
