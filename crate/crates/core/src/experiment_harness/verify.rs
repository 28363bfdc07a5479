//! Self-checks behind the `verify` subcommand: structural identities, the
//! loop-based decomposition oracle, WMMSE invariants and grid-search
//! agreement on tiny instances.

use std::fmt::Write as _;
use std::time::Instant;

use num_complex::Complex64;

use crate::allocation_optimizers::{optimize_noma, optimize_rsma, OptimizerOptions, OptimizerResult};
use crate::link_analysis::{
    noma_private_sinr, rsma_common_sinr, rsma_private_sinr, NomaRateModel, PowerAllocation,
    SinrDecomposition,
};
use crate::ltv_channel::{
    build_time_channel, effective_coupling, sample_paths, ChannelScenario, CouplingMatrix,
};
use crate::ofdm_frame::{build_cp_matrices, build_dft_matrix, CMatrix, OfdmConfig};
use crate::reference_oracle::{
    grid_search_best, loop_power_decomposition, random_allocation, random_couplings, GridSpec,
    Scheme, StreamDescriptor,
};

/// The decomposition code under test. [`LinkAnalysis`] is the library's own
/// implementation; tests substitute deliberately broken ones.
pub trait DecompositionSource: Sync {
    fn common(&self, g: &[CouplingMatrix], alloc: &PowerAllocation, noise: f64, user: usize, n: usize) -> SinrDecomposition;
    fn private(&self, g: &[CouplingMatrix], alloc: &PowerAllocation, noise: f64, user: usize, n: usize) -> SinrDecomposition;
    fn noma(
        &self,
        g: &[CouplingMatrix],
        q: &[Vec<f64>],
        noise: f64,
        sic_order: &[usize],
        user: usize,
        n: usize,
    ) -> SinrDecomposition;
}

pub struct LinkAnalysis;

impl DecompositionSource for LinkAnalysis {
    fn common(&self, g: &[CouplingMatrix], alloc: &PowerAllocation, noise: f64, user: usize, n: usize) -> SinrDecomposition {
        rsma_common_sinr(g, alloc, noise, user, n)
    }

    fn private(&self, g: &[CouplingMatrix], alloc: &PowerAllocation, noise: f64, user: usize, n: usize) -> SinrDecomposition {
        rsma_private_sinr(g, alloc, noise, user, n)
    }

    fn noma(
        &self,
        g: &[CouplingMatrix],
        q: &[Vec<f64>],
        noise: f64,
        sic_order: &[usize],
        user: usize,
        n: usize,
    ) -> SinrDecomposition {
        noma_private_sinr(g, q, noise, sic_order, user, n).expect("valid SIC order")
    }
}

#[derive(Debug, Clone)]
pub struct CheckResult {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, Default)]
pub struct VerifyReport {
    pub checks: Vec<CheckResult>,
}

impl VerifyReport {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn table(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "{:<30} {:<6} detail", "check", "result");
        for c in &self.checks {
            let verdict = if c.passed { "PASS" } else { "FAIL" };
            let _ = writeln!(out, "{:<30} {:<6} {}", c.name, verdict, c.detail);
        }
        out
    }
}

fn check(name: &'static str, passed: bool, detail: String) -> CheckResult {
    CheckResult { name, passed, detail }
}

fn max_abs_diff(a: &CMatrix, b: &CMatrix) -> f64 {
    (a - b).iter().map(|v| v.norm()).fold(0.0, f64::max)
}

fn cp_identity() -> CheckResult {
    let mut worst = 0.0f64;
    for (n, c) in [(8, 2), (35, 9), (64, 16)] {
        let cp = build_cp_matrices(n, c).expect("valid sizes");
        let ba = cp.remove() * cp.add();
        worst = worst.max(max_abs_diff(&ba, &CMatrix::identity(n, n)));
    }
    check("cp_remove_add_identity", worst == 0.0, format!("max |BA - I| = {worst:e}"))
}

fn dft_unitary() -> CheckResult {
    let mut worst = 0.0f64;
    for n in [4, 35, 64] {
        let f = build_dft_matrix(n);
        worst = worst.max(max_abs_diff(&(f.matrix() * f.adjoint()), &CMatrix::identity(n, n)));
    }
    check("dft_unitary", worst <= 1e-12, format!("max |FF^H - I| = {worst:e}"))
}

fn zero_doppler_diagonal() -> CheckResult {
    let cfg = OfdmConfig::new(35, 9, 60e3).expect("valid config");
    let dft = build_dft_matrix(35);
    let cp = build_cp_matrices(35, 9).expect("valid sizes");
    let scn = ChannelScenario::doubly_selective(8, 0.5, 0.0);
    let mut worst = 0.0f64;
    for seed in 0..10 {
        let paths = sample_paths(&scn, &cfg, seed).expect("valid scenario");
        let ch = build_time_channel(&paths, &cfg).expect("delays fit the CP");
        let g = effective_coupling(&ch, &cfg, &dft, &cp, 0).expect("consistent sizes");
        worst = worst.max(g.max_off_diagonal());
    }
    check("zero_doppler_diagonal", worst <= 1e-10, format!("max off-diagonal |g| = {worst:e}"))
}

fn decomposition_gap(a: &SinrDecomposition, b: &SinrDecomposition) -> f64 {
    [a.signal - b.signal, a.ici - b.ici, a.mui - b.mui, a.noise - b.noise]
        .iter()
        .map(|d| d.abs())
        .fold(0.0, f64::max)
}

/// Largest gap between `source` and the loop oracle over `instances` random
/// instances, separately for the common, private and NOMA expressions.
pub fn decomposition_gaps(source: &dyn DecompositionSource, instances: u64) -> [f64; 3] {
    let mut worst = [0.0f64; 3];
    let (users, n, noise) = (2, 3, 0.7);
    for seed in 0..instances {
        let g = random_couplings(users, n, 0.5, 1_000 + seed);
        let alloc = random_allocation(users, n, 2.0, 2_000 + seed);
        let order = if seed % 2 == 0 { vec![0, 1] } else { vec![1, 0] };
        let noma_stream = StreamDescriptor::Noma { sic_order: order.clone() };
        for k in 0..users {
            for i in 0..n {
                let pairs = [
                    (
                        source.common(&g, &alloc, noise, k, i),
                        loop_power_decomposition(&g, &alloc, &StreamDescriptor::RsmaCommon, noise, k, i),
                    ),
                    (
                        source.private(&g, &alloc, noise, k, i),
                        loop_power_decomposition(&g, &alloc, &StreamDescriptor::RsmaPrivate, noise, k, i),
                    ),
                    (
                        source.noma(&g, &alloc.private, noise, &order, k, i),
                        loop_power_decomposition(&g, &alloc, &noma_stream, noise, k, i),
                    ),
                ];
                for (w, (fast, slow)) in worst.iter_mut().zip(&pairs) {
                    *w = w.max(decomposition_gap(fast, slow));
                }
            }
        }
    }
    worst
}

fn decomposition_oracle(source: &dyn DecompositionSource) -> CheckResult {
    let [c, p, q] = decomposition_gaps(source, 100);
    let worst = c.max(p).max(q);
    check(
        "decomposition_vs_loop_oracle",
        worst <= 1e-10,
        format!("100 instances; max gap common {c:.1e}, private {p:.1e}, noma {q:.1e}"),
    )
}

/// Problems with monotone traces, identity gaps, budget and tightness.
pub fn invariant_violations(res: &OptimizerResult, budget: f64) -> Vec<String> {
    let mut out = Vec::new();
    if let Some(w) = res.objective_trace.windows(2).find(|w| w[1] < w[0] - 1e-8) {
        out.push(format!("trace decreased {} -> {}", w[0], w[1]));
    }
    if res.identity_gap > 1e-9 {
        out.push(format!("rate/WMMSE identity gap {:e}", res.identity_gap));
    }
    let p = res.alloc.total_power();
    if p > budget * (1.0 + 1e-9) {
        out.push(format!("power {p} exceeds budget {budget}"));
    }
    if p < 0.999 * budget {
        out.push(format!("power {p} below 0.999 * budget {budget}"));
    }
    out
}

fn wmmse_invariants() -> CheckResult {
    let mut problems = Vec::new();
    let mut runs = 0;
    for seed in 0..6u64 {
        let g = random_couplings(2, 4, 0.3, 300 + seed);
        let opts = OptimizerOptions {
            seed,
            ..OptimizerOptions::with_budget(4.0 * 10f64.powf(seed as f64 / 2.0))
        };
        for res in [optimize_rsma(&g, &opts), optimize_noma(&g, &opts, &[0, 1])] {
            runs += 1;
            match res {
                Ok(r) => problems.extend(invariant_violations(&r, opts.power_budget)),
                Err(e) => problems.push(e.to_string()),
            }
        }
    }
    let detail = if problems.is_empty() {
        format!("{runs} runs: monotone, identity <= 1e-9, budget tight")
    } else {
        problems.join("; ")
    };
    check("wmmse_invariants", problems.is_empty(), detail)
}

/// The bundled tiny instance for the grid comparison: two users, two
/// subcarriers, one Doppler-like leak into the neighbouring carrier.
pub fn grid_fixture() -> Vec<CouplingMatrix> {
    let c = |re: f64, im: f64| Complex64::new(re, im);
    let g0 = CMatrix::from_row_slice(2, 2, &[c(0.9, 0.2), c(0.25, -0.1), c(-0.15, 0.2), c(0.6, -0.3)]);
    let g1 = CMatrix::from_row_slice(2, 2, &[c(0.4, 0.5), c(0.1, 0.3), c(0.3, -0.05), c(1.1, 0.1)]);
    vec![
        CouplingMatrix::new(0, g0).expect("square"),
        CouplingMatrix::new(1, g1).expect("square"),
    ]
}

fn grid_agreement() -> CheckResult {
    let g = grid_fixture();
    let opts = OptimizerOptions::with_budget(20.0);
    let grid = GridSpec::new(21, opts.power_budget).expect("valid grid");
    let order = vec![0, 1];
    let schemes = [
        ("rsma", Scheme::Rsma),
        ("noma", Scheme::Noma { sic_order: order.clone(), model: NomaRateModel::default() }),
    ];
    let mut passed = true;
    let mut detail = Vec::new();
    for (name, scheme) in schemes {
        let best = match grid_search_best(&g, &scheme, &grid, opts.noise_var) {
            Ok(b) => b.sum_rate,
            Err(e) => return check("grid_vs_wmmse", false, e.to_string()),
        };
        let got = match name {
            "rsma" => optimize_rsma(&g, &opts),
            _ => optimize_noma(&g, &opts, &order),
        };
        match got {
            Ok(r) => {
                let ratio = r.sum_rate() / best;
                passed &= ratio >= 0.97;
                detail.push(format!("{name} {:.4}/{best:.4} = {ratio:.4}", r.sum_rate()));
            }
            Err(e) => {
                passed = false;
                detail.push(format!("{name}: {e}"));
            }
        }
    }
    check("grid_vs_wmmse", passed, detail.join(", "))
}

/// Runs every check against the library's own implementation.
pub fn verify() -> VerifyReport {
    verify_with(&LinkAnalysis)
}

pub fn verify_with(source: &dyn DecompositionSource) -> VerifyReport {
    let started = Instant::now();
    let mut checks = vec![
        cp_identity(),
        dft_unitary(),
        zero_doppler_diagonal(),
        decomposition_oracle(source),
        wmmse_invariants(),
        grid_agreement(),
    ];
    checks.push(check(
        "runtime",
        true,
        format!("{:.2} s", started.elapsed().as_secs_f64()),
    ));
    VerifyReport { checks }
}
