//! Classic waterfilling over parallel channels.

/// Powers `q_n = max(0, μ - noise/gain_n)` with `Σ q_n = budget`.
///
/// Subcarriers with zero gain never receive power; if every gain is zero
/// the allocation is all zeros.
pub fn waterfill(gains: &[f64], noise_var: f64, budget: f64) -> Vec<f64> {
    let floors: Vec<Option<f64>> = gains
        .iter()
        .map(|&g| (g > 0.0).then(|| noise_var / g))
        .collect();
    let usable: Vec<f64> = floors.iter().flatten().copied().collect();
    if usable.is_empty() || budget <= 0.0 {
        return vec![0.0; gains.len()];
    }
    let fill = |mu: f64| usable.iter().map(|f| (mu - f).max(0.0)).sum::<f64>();

    // bracket the water level, then solve exactly on the resulting active set
    let mut lo = usable.iter().copied().fold(f64::INFINITY, f64::min);
    let mut hi = lo + budget;
    while fill(hi) < budget {
        hi += budget;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if fill(mid) < budget {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-15 * hi {
            break;
        }
    }
    let active: Vec<f64> = usable.iter().copied().filter(|&f| f < hi).collect();
    let mu = (budget + active.iter().sum::<f64>()) / active.len() as f64;
    floors
        .iter()
        .map(|f| f.map_or(0.0, |f| (mu - f).max(0.0)))
        .collect()
}
