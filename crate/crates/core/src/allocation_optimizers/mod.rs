//! Sum-rate maximization: WMMSE for RSMA and NOMA, waterfilling for OFDMA.
//!
//! The WMMSE optimizers alternate between per-subcarrier MMSE receivers,
//! MMSE weights and a concave amplitude step (solved through its Lagrangian
//! dual). Every accepted iterate raises the true sum-rate, so the objective
//! trace is monotone. Several starting points are tried and the best result
//! is kept; one of them is the waterfilling OFDMA point, so RSMA never does
//! worse than the OFDMA allocation it embeds.

mod streams;
mod surrogate;
mod waterfill;
mod wmmse;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::link_analysis::{
    check_assignment, check_sic_order, evaluate_noma, evaluate_ofdma, evaluate_rsma,
    NomaRateModel, PowerAllocation, RateReport,
};
use crate::ltv_channel::CouplingMatrix;
use crate::{Error, Result};
use streams::{Layout, StreamModel};

pub use waterfill::waterfill;

/// Solver settings shared by all optimizers.
#[derive(Debug, Clone, PartialEq)]
pub struct OptimizerOptions {
    pub max_iters: usize,
    /// Stop once the relative change of the objective drops below this.
    pub rel_tol: f64,
    pub num_starts: usize,
    /// Total transmit power `P_t` over all streams and subcarriers.
    pub power_budget: f64,
    /// Per-user minimum rates (bit/s/Hz per symbol). Empty means none.
    pub min_rates: Vec<f64>,
    pub noise_var: f64,
    /// Seed of the random starting point(s).
    pub seed: u64,
}

impl Default for OptimizerOptions {
    fn default() -> Self {
        Self {
            max_iters: 200,
            rel_tol: 1e-4,
            num_starts: 4,
            power_budget: 1.0,
            min_rates: Vec::new(),
            noise_var: 1.0,
            seed: 0,
        }
    }
}

impl OptimizerOptions {
    pub fn with_budget(power_budget: f64) -> Self {
        Self {
            power_budget,
            ..Self::default()
        }
    }

    pub fn validate(&self, users: usize) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidOptions(msg));
        if self.max_iters == 0 {
            return bad("max_iters must be at least 1".into());
        }
        if !(self.rel_tol > 0.0 && self.rel_tol.is_finite()) {
            return bad(format!("rel_tol must be positive, got {}", self.rel_tol));
        }
        if self.num_starts == 0 {
            return bad("num_starts must be at least 1".into());
        }
        if !(self.power_budget > 0.0 && self.power_budget.is_finite()) {
            return bad(format!("power_budget must be positive, got {}", self.power_budget));
        }
        if !(self.noise_var > 0.0 && self.noise_var.is_finite()) {
            return bad(format!("noise_var must be positive, got {}", self.noise_var));
        }
        if !self.min_rates.is_empty() && self.min_rates.len() != users {
            return bad(format!(
                "min_rates has {} entries for {users} users",
                self.min_rates.len()
            ));
        }
        if self.min_rates.iter().any(|r| !(*r >= 0.0 && r.is_finite())) {
            return bad("min_rates must be finite and nonnegative".into());
        }
        Ok(())
    }

    fn settings(&self) -> wmmse::Settings {
        wmmse::Settings {
            max_iters: self.max_iters,
            rel_tol: self.rel_tol,
            budget: self.power_budget,
            min_rates: self.min_rates.clone(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct OptimizerResult {
    pub alloc: PowerAllocation,
    pub report: RateReport,
    /// Sum-rate after every accepted iteration of the winning start.
    pub objective_trace: Vec<f64>,
    pub converged: bool,
    pub iterations: usize,
    /// Index of the winning starting point.
    pub start: usize,
    /// Dual stationarity residual of the last amplitude step.
    pub kkt_residual: f64,
    /// Largest `|-log2(e_mmse) - rate|` seen over the iterates, any stream.
    pub identity_gap: f64,
}

impl OptimizerResult {
    pub fn sum_rate(&self) -> f64 {
        self.report.sum_rate
    }
}

fn check_couplings(couplings: &[CouplingMatrix]) -> Result<usize> {
    let n = couplings
        .first()
        .map(CouplingMatrix::n_subcarriers)
        .ok_or_else(|| Error::InvalidOptions("at least one user is required".into()))?;
    if n == 0 {
        return Err(Error::InvalidOptions("no subcarriers".into()));
    }
    for g in couplings {
        if g.n_subcarriers() != n {
            return Err(Error::DimensionMismatch {
                what: "coupling matrix size",
                expected: n,
                got: g.n_subcarriers(),
            });
        }
    }
    Ok(n)
}

/// Maps `weights` (one per amplitude) onto amplitudes with `Σ a² = budget`.
fn scaled(weights: Vec<f64>, budget: f64) -> Vec<f64> {
    let total: f64 = weights.iter().sum();
    weights
        .into_iter()
        .map(|w| (w * budget / total).sqrt())
        .collect()
}

fn random_start(dim: usize, budget: f64, seed: u64, index: usize) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ (index as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    scaled((0..dim).map(|_| rng.random_range(0.05..1.0)).collect(), budget)
}

/// OFDMA waterfilling powers laid out as one block per user.
fn ofdma_blocks(couplings: &[CouplingMatrix], opts: &OptimizerOptions) -> Vec<Vec<f64>> {
    let n = couplings[0].n_subcarriers();
    let assignment = assign_subcarriers_ofdma(couplings, AssignmentMode::BestGain);
    let q = ofdma_powers(couplings, &assignment, opts);
    let mut blocks = vec![vec![0.0; n]; couplings.len()];
    for (i, (&k, &p)) in assignment.iter().zip(&q).enumerate() {
        blocks[k][i] = p;
    }
    blocks
}

fn run_starts(
    model: &StreamModel,
    starts: Vec<Vec<f64>>,
    opts: &OptimizerOptions,
) -> Result<(usize, wmmse::Outcome)> {
    let settings = opts.settings();
    let mut best: Option<(usize, f64, f64, wmmse::Outcome)> = None;
    let mut infeasible = None;
    for (i, start) in starts.into_iter().enumerate() {
        let out = match wmmse::run(model, start, &settings) {
            Ok(out) => out,
            Err(e @ Error::Infeasible { .. }) => {
                infeasible.get_or_insert(e);
                continue;
            }
            Err(e) => return Err(e),
        };
        let value = *out.trace.last().expect("trace holds the start");
        // ties go to the allocation with the least common-stream power
        let common: f64 = match model.layout {
            Layout::Rsma => out.amplitudes[..model.n].iter().map(|a| a * a).sum(),
            Layout::Noma { .. } => 0.0,
        };
        let better = match &best {
            None => true,
            Some((_, v, c, _)) => {
                let tie = 1e-9 * v.abs().max(1.0);
                value > v + tie || (value >= v - tie && common < *c)
            }
        };
        if better {
            best = Some((i, value, common, out));
        }
    }
    match best {
        Some((i, _, _, out)) => Ok((i, out)),
        None => Err(infeasible.expect("every start failed")),
    }
}

/// WMMSE sum-rate maximization for OFDM-RSMA.
///
/// Starts, in order: uniform power split 50/50 between the common and the
/// private streams; uniform private-only power; the waterfilling OFDMA point;
/// seeded random points for the rest.
pub fn optimize_rsma(couplings: &[CouplingMatrix], opts: &OptimizerOptions) -> Result<OptimizerResult> {
    let n = check_couplings(couplings)?;
    let users = couplings.len();
    opts.validate(users)?;
    let model = StreamModel::rsma(couplings, opts.noise_var);
    let dim = model.dim();
    let budget = opts.power_budget;

    let mut starts = Vec::with_capacity(opts.num_starts);
    for i in 0..opts.num_starts {
        starts.push(match i {
            0 => {
                let mut w = vec![0.5 / n as f64; n];
                w.extend(std::iter::repeat_n(0.5 / (users * n) as f64, users * n));
                scaled(w, budget)
            }
            1 => {
                let mut w = vec![0.0; n];
                w.extend(std::iter::repeat_n(1.0, users * n));
                scaled(w, budget)
            }
            2 => {
                let mut q = vec![0.0; n];
                q.extend(ofdma_blocks(couplings, opts).into_iter().flatten());
                q.into_iter().map(f64::sqrt).collect()
            }
            _ => random_start(dim, budget, opts.seed, i),
        });
    }
    let (start, out) = run_starts(&model, starts, opts)?;
    let mut alloc = model.to_allocation(&out.amplitudes);
    let mut report = evaluate_rsma(couplings, &alloc, opts.noise_var)?;
    let private: Vec<f64> = (0..users).map(|k| report.private_total(k)).collect();
    alloc.common_shares = wmmse::assign_shares(&private, report.common_total, &opts.min_rates);
    report.sum_rate = report.common_total + private.iter().sum::<f64>();
    Ok(OptimizerResult {
        alloc,
        report,
        objective_trace: out.trace,
        converged: out.converged,
        iterations: out.iterations,
        start,
        kkt_residual: out.kkt_residual,
        identity_gap: out.identity_gap,
    })
}

/// WMMSE sum-rate maximization for OFDM-NOMA with a fixed SIC order, using
/// the default [`NomaRateModel`].
pub fn optimize_noma(
    couplings: &[CouplingMatrix],
    opts: &OptimizerOptions,
    sic_order: &[usize],
) -> Result<OptimizerResult> {
    optimize_noma_with(couplings, opts, sic_order, NomaRateModel::default())
}

/// [`optimize_noma`] with an explicit rate model.
///
/// Starts, in order: uniform power; 2/3 of the budget on the first-decoded
/// user; the waterfilling OFDMA point; seeded random points for the rest.
pub fn optimize_noma_with(
    couplings: &[CouplingMatrix],
    opts: &OptimizerOptions,
    sic_order: &[usize],
    model_kind: NomaRateModel,
) -> Result<OptimizerResult> {
    let n = check_couplings(couplings)?;
    let users = couplings.len();
    opts.validate(users)?;
    check_sic_order(sic_order, users)?;
    let decodable = model_kind == NomaRateModel::SicDecodable;
    let model = StreamModel::noma(couplings, opts.noise_var, sic_order, decodable);
    let dim = model.dim();
    let budget = opts.power_budget;

    let mut starts = Vec::with_capacity(opts.num_starts);
    for i in 0..opts.num_starts {
        starts.push(match i {
            0 => scaled(vec![1.0; dim], budget),
            1 if users > 1 => {
                let first = sic_order[0];
                let w = (0..users)
                    .flat_map(|k| {
                        let share = if k == first { 2.0 / 3.0 } else { 1.0 / (3.0 * (users - 1) as f64) };
                        std::iter::repeat_n(share / n as f64, n)
                    })
                    .collect();
                scaled(w, budget)
            }
            2 => ofdma_blocks(couplings, opts).into_iter().flatten().map(f64::sqrt).collect(),
            _ => random_start(dim, budget, opts.seed, i),
        });
    }
    let (start, out) = run_starts(&model, starts, opts)?;
    let alloc = model.to_allocation(&out.amplitudes);
    let report = evaluate_noma(couplings, &alloc.private, opts.noise_var, sic_order, model_kind)?;
    Ok(OptimizerResult {
        alloc,
        report,
        objective_trace: out.trace,
        converged: out.converged,
        iterations: out.iterations,
        start,
        kkt_residual: out.kkt_residual,
        identity_gap: out.identity_gap,
    })
}

/// How OFDMA subcarriers are handed out.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AssignmentMode {
    /// Contiguous blocks; earlier users get one extra carrier when `N` does
    /// not divide evenly.
    EqualSplit,
    /// Each carrier to the user with the largest `|g_nn|²`, ties to the lower
    /// index.
    BestGain,
}

/// Length-`N` vector of (0-based) user indices.
pub fn assign_subcarriers_ofdma(couplings: &[CouplingMatrix], mode: AssignmentMode) -> Vec<usize> {
    let users = couplings.len();
    let n = couplings.first().map_or(0, CouplingMatrix::n_subcarriers);
    match mode {
        AssignmentMode::EqualSplit => {
            let (base, extra) = (n / users, n % users);
            (0..users)
                .flat_map(|k| std::iter::repeat_n(k, base + usize::from(k < extra)))
                .collect()
        }
        AssignmentMode::BestGain => (0..n)
            .map(|i| {
                (1..users).fold(0, |best, k| {
                    if couplings[k].power(i, i) > couplings[best].power(i, i) {
                        k
                    } else {
                        best
                    }
                })
            })
            .collect(),
    }
}

fn ofdma_powers(couplings: &[CouplingMatrix], assignment: &[usize], opts: &OptimizerOptions) -> Vec<f64> {
    let gains: Vec<f64> = assignment
        .iter()
        .enumerate()
        .map(|(i, &k)| couplings[k].power(i, i))
        .collect();
    waterfill(&gains, opts.noise_var, opts.power_budget)
}

/// Waterfilling over the assigned diagonal gains, ignoring ICI; the returned
/// rates are evaluated with ICI.
pub fn waterfill_ofdma(
    couplings: &[CouplingMatrix],
    assignment: &[usize],
    opts: &OptimizerOptions,
) -> Result<OptimizerResult> {
    let n = check_couplings(couplings)?;
    let users = couplings.len();
    opts.validate(users)?;
    check_assignment(assignment, users, n)?;
    let q = ofdma_powers(couplings, assignment, opts);
    let report = evaluate_ofdma(couplings, assignment, &q, opts.noise_var)?;
    let mut private = vec![vec![0.0; n]; users];
    for (i, (&k, &p)) in assignment.iter().zip(&q).enumerate() {
        private[k][i] = p;
    }
    Ok(OptimizerResult {
        alloc: PowerAllocation::private_only(private),
        objective_trace: vec![report.sum_rate],
        report,
        converged: true,
        iterations: 1,
        start: 0,
        kkt_residual: 0.0,
        identity_gap: 0.0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::reference_oracle::{grid_search_best, random_couplings, GridSpec, Scheme};
    use num_complex::Complex64;

    fn flat(user: usize, n: usize, gain: f64) -> CouplingMatrix {
        CouplingMatrix::diagonal(user, &vec![Complex64::new(gain.sqrt(), 0.0); n])
    }

    fn check_invariants(res: &OptimizerResult, opts: &OptimizerOptions) {
        for w in res.objective_trace.windows(2) {
            assert!(w[1] >= w[0] - 1e-8, "trace decreased: {w:?}");
        }
        let p = res.alloc.total_power();
        assert!(p <= opts.power_budget * (1.0 + 1e-9), "power {p}");
        assert!(res.alloc.is_nonnegative());
        assert!(res.identity_gap < 1e-9, "identity gap {}", res.identity_gap);
    }

    #[test]
    fn single_user_flat_is_uniform() {
        let n = 4;
        let g = vec![flat(0, n, 1.0)];
        let opts = OptimizerOptions::with_budget(n as f64);
        let res = optimize_rsma(&g, &opts).unwrap();
        check_invariants(&res, &opts);
        assert!((res.sum_rate() - n as f64).abs() < 1e-6, "{}", res.sum_rate());
        assert!(res.alloc.common.iter().all(|&c| c == 0.0));
        assert!(res.alloc.private[0].iter().all(|q| (q - 1.0).abs() < 1e-3));
        let noma = optimize_noma(&g, &opts, &[0]).unwrap();
        assert!((noma.sum_rate() - res.sum_rate()).abs() < 1e-6);
    }

    #[test]
    fn two_user_flat_goes_to_strong_user() {
        let n = 6;
        let g = vec![flat(0, n, 0.25), flat(1, n, 1.0)];
        let opts = OptimizerOptions::with_budget(100.0 * n as f64);
        let single = n as f64 * (1.0 + 100.0f64).log2();
        let rsma = optimize_rsma(&g, &opts).unwrap();
        let noma = optimize_noma(&g, &opts, &[0, 1]).unwrap();
        for res in [&rsma, &noma] {
            check_invariants(res, &opts);
            assert!((res.sum_rate() - single).abs() <= 0.01 * single, "{}", res.sum_rate());
            assert!(res.alloc.private[1].iter().sum::<f64>() > 0.9 * opts.power_budget);
        }
    }

    #[test]
    fn near_grid_optimum_on_tiny_instances() {
        for seed in 0..4 {
            let g = random_couplings(2, 2, 0.4, 100 + seed);
            let opts = OptimizerOptions { seed, ..OptimizerOptions::with_budget(10.0) };
            let grid = GridSpec::new(21, opts.power_budget).unwrap();
            let rsma = optimize_rsma(&g, &opts).unwrap();
            check_invariants(&rsma, &opts);
            let best = grid_search_best(&g, &Scheme::Rsma, &grid, 1.0).unwrap();
            assert!(rsma.sum_rate() >= 0.97 * best.sum_rate, "{} < {}", rsma.sum_rate(), best.sum_rate);

            let order = vec![0, 1];
            let noma = optimize_noma(&g, &opts, &order).unwrap();
            check_invariants(&noma, &opts);
            let scheme = Scheme::Noma { sic_order: order, model: NomaRateModel::default() };
            let best = grid_search_best(&g, &scheme, &grid, 1.0).unwrap();
            assert!(noma.sum_rate() >= 0.97 * best.sum_rate);
        }
    }

    #[test]
    fn budget_is_tight_without_qos() {
        let g = random_couplings(2, 4, 0.2, 7);
        let opts = OptimizerOptions::with_budget(40.0);
        for res in [optimize_rsma(&g, &opts).unwrap(), optimize_noma(&g, &opts, &[1, 0]).unwrap()] {
            assert!(res.alloc.total_power() >= 0.999 * opts.power_budget);
            assert!(res.kkt_residual < 1e-6 || res.converged);
        }
    }

    #[test]
    fn rsma_dominates_embedded_ofdma_point() {
        let g = random_couplings(2, 4, 0.3, 21);
        let opts = OptimizerOptions::with_budget(200.0);
        let rsma = optimize_rsma(&g, &opts).unwrap();
        let mut alloc = PowerAllocation::zeros(2, 4);
        alloc.private = ofdma_blocks(&g, &opts);
        let ofdma = evaluate_rsma(&g, &alloc, 1.0).unwrap();
        assert!(rsma.sum_rate() >= ofdma.sum_rate - 1e-9);
    }

    #[test]
    fn min_rates_are_met() {
        let g = random_couplings(2, 3, 0.2, 5);
        let opts = OptimizerOptions {
            min_rates: vec![2.0, 2.0],
            ..OptimizerOptions::with_budget(30.0)
        };
        let res = optimize_rsma(&g, &opts).unwrap();
        check_invariants(&res, &opts);
        for k in 0..2 {
            let r = res.report.private_total(k) + res.alloc.common_shares[k];
            assert!(r >= opts.min_rates[k] - 1e-6, "user {k}: {r}");
        }
        let res = optimize_noma(&g, &opts, &[0, 1]).unwrap();
        for k in 0..2 {
            assert!(res.report.private_total(k) >= opts.min_rates[k] - 1e-6);
        }
    }

    #[test]
    fn unattainable_min_rates_are_reported() {
        let g = random_couplings(2, 2, 0.2, 5);
        let opts = OptimizerOptions {
            min_rates: vec![50.0, 50.0],
            ..OptimizerOptions::with_budget(10.0)
        };
        assert!(matches!(optimize_rsma(&g, &opts), Err(Error::Infeasible { .. })));
        assert!(matches!(optimize_noma(&g, &opts, &[0, 1]), Err(Error::Infeasible { .. })));
    }

    #[test]
    fn options_are_validated() {
        let g = vec![flat(0, 2, 1.0)];
        let bad = [
            OptimizerOptions { max_iters: 0, ..Default::default() },
            OptimizerOptions { rel_tol: 0.0, ..Default::default() },
            OptimizerOptions { num_starts: 0, ..Default::default() },
            OptimizerOptions { power_budget: -1.0, ..Default::default() },
            OptimizerOptions { min_rates: vec![1.0, 1.0], ..Default::default() },
        ];
        for opts in bad {
            assert!(matches!(optimize_rsma(&g, &opts), Err(Error::InvalidOptions(_))));
        }
    }

    #[test]
    fn assignment_modes() {
        let g = vec![flat(0, 4, 1.0), flat(1, 4, 2.0)];
        assert_eq!(assign_subcarriers_ofdma(&g, AssignmentMode::EqualSplit), vec![0, 0, 1, 1]);
        assert_eq!(assign_subcarriers_ofdma(&g, AssignmentMode::BestGain), vec![1; 4]);
        let g5 = vec![flat(0, 5, 1.0), flat(1, 5, 1.0)];
        assert_eq!(assign_subcarriers_ofdma(&g5, AssignmentMode::EqualSplit), vec![0, 0, 0, 1, 1]);
        // exact tie → lower index
        assert_eq!(assign_subcarriers_ofdma(&g5, AssignmentMode::BestGain), vec![0; 5]);
    }

    #[test]
    fn ofdma_waterfilling_examples() {
        let opts = OptimizerOptions { power_budget: 2.0, ..Default::default() };
        let g = vec![CouplingMatrix::diagonal(0, &[Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)])];
        let res = waterfill_ofdma(&g, &[0, 0], &opts).unwrap();
        assert_eq!(res.alloc.private[0], vec![2.0, 0.0]);
        assert!((res.sum_rate() - 3f64.log2()).abs() < 1e-12);

        let zero = vec![flat(0, 3, 0.0)];
        let res = waterfill_ofdma(&zero, &[0, 0, 0], &opts).unwrap();
        assert_eq!(res.alloc.total_power(), 0.0);
        assert_eq!(res.sum_rate(), 0.0);

        assert!(waterfill_ofdma(&g, &[0, 3], &opts).is_err());
    }
}
