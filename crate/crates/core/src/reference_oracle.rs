//! Brute-force references: loop-based power decompositions and exhaustive
//! grid search over tiny allocation problems.
//!
//! Nothing here shares code with the fast paths in [`crate::link_analysis`]
//! beyond the final `evaluate_*` calls used to score grid points.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::link_analysis::{
    check_sic_order, evaluate_noma, evaluate_ofdma, evaluate_rsma, NomaRateModel,
    PowerAllocation, SinrDecomposition,
};
use crate::ltv_channel::CouplingMatrix;
use crate::ofdm_frame::CMatrix;

/// Largest number of grid points [`grid_search_best`] will visit.
pub const MAX_GRID_POINTS: u128 = 10_000_000;
/// Largest number of power variables [`grid_search_best`] accepts.
pub const MAX_GRID_DIMS: usize = 6;

/// Which received stream a decomposition refers to.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum StreamDescriptor {
    /// RSMA common stream, all private streams undecoded.
    RsmaCommon,
    /// RSMA private stream after common-stream SIC.
    RsmaPrivate,
    /// NOMA message of the user decoded at its own receiver under `sic_order`.
    Noma { sic_order: Vec<usize> },
}

fn amp(q: f64) -> f64 {
    q.max(0.0).sqrt()
}

/// Term-by-term evaluation of the received power decomposition with explicit
/// loops over every `(stream, subcarrier)` contribution `|g_{nj} · p_j|²`.
pub fn loop_power_decomposition(
    couplings: &[CouplingMatrix],
    alloc: &PowerAllocation,
    stream: &StreamDescriptor,
    noise_var: f64,
    user: usize,
    n: usize,
) -> SinrDecomposition {
    let g = couplings[user].g();
    let users = alloc.private.len();
    let width = alloc.common.len();
    let mut d = SinrDecomposition {
        noise: noise_var,
        ..Default::default()
    };
    let own: &[f64] = match stream {
        StreamDescriptor::RsmaCommon => &alloc.common,
        _ => &alloc.private[user],
    };
    for j in 0..width {
        let term = (g[(n, j)] * amp(own[j])).norm_sqr();
        if j == n {
            d.signal += term;
        } else {
            d.ici += term;
        }
    }
    for u in 0..users {
        let interferes = match stream {
            StreamDescriptor::RsmaCommon => true,
            StreamDescriptor::RsmaPrivate => u != user,
            StreamDescriptor::Noma { sic_order } => {
                let pos = |x: usize| sic_order.iter().position(|&v| v == x).unwrap();
                pos(u) > pos(user)
            }
        };
        if !interferes {
            continue;
        }
        for j in 0..width {
            d.mui += (g[(n, j)] * amp(alloc.private[u][j])).norm_sqr();
        }
    }
    d
}

/// Forms `G·diag(p)` explicitly for the signal, ICI and MUI precoders and
/// returns the squared norms of row `n` of each product.
pub fn matrix_power_decomposition(
    couplings: &[CouplingMatrix],
    alloc: &PowerAllocation,
    stream: &StreamDescriptor,
    noise_var: f64,
    user: usize,
    n: usize,
) -> SinrDecomposition {
    let g = couplings[user].g();
    let width = alloc.common.len();
    let diag = |p: &dyn Fn(usize) -> f64| {
        CMatrix::from_fn(width, width, |r, c| {
            if r == c {
                num_complex::Complex64::new(p(r), 0.0)
            } else {
                num_complex::Complex64::new(0.0, 0.0)
            }
        })
    };
    let row_energy = |m: &CMatrix| m.row(n).iter().map(|v| v.norm_sqr()).sum::<f64>();
    let own: &[f64] = match stream {
        StreamDescriptor::RsmaCommon => &alloc.common,
        _ => &alloc.private[user],
    };
    let intended = g * diag(&|j| if j == n { amp(own[n]) } else { 0.0 });
    let leaking = g * diag(&|j| if j == n { 0.0 } else { amp(own[j]) });
    let interferers: Vec<usize> = match stream {
        StreamDescriptor::RsmaCommon => (0..alloc.private.len()).collect(),
        StreamDescriptor::RsmaPrivate => (0..alloc.private.len()).filter(|&u| u != user).collect(),
        StreamDescriptor::Noma { sic_order } => {
            let at = sic_order.iter().position(|&v| v == user).unwrap();
            sic_order[at + 1..].to_vec()
        }
    };
    let mui = interferers
        .iter()
        .map(|&u| row_energy(&(g * diag(&|j| amp(alloc.private[u][j])))))
        .sum();
    SinrDecomposition {
        signal: intended[(n, n)].norm_sqr(),
        ici: row_energy(&leaking),
        mui,
        noise: noise_var,
    }
}

/// Multiple-access scheme scored by [`grid_search_best`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Scheme {
    /// Common stream plus `K` private streams: `N·(K+1)` variables.
    Rsma,
    /// `K` superposed streams under a fixed SIC order: `N·K` variables.
    Noma {
        sic_order: Vec<usize>,
        model: NomaRateModel,
    },
    /// One power per subcarrier for a fixed assignment: `N` variables.
    Ofdma { assignment: Vec<usize> },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    /// Grid points per dimension, including zero and `total_power`.
    pub levels: usize,
    pub total_power: f64,
}

impl GridSpec {
    pub fn new(levels: usize, total_power: f64) -> Result<Self> {
        if levels < 2 {
            return Err(Error::InvalidOptions("grid needs at least 2 levels".into()));
        }
        if !(total_power.is_finite() && total_power > 0.0) {
            return Err(Error::InvalidOptions("grid total power must be positive".into()));
        }
        Ok(Self { levels, total_power })
    }
}

/// Number of nonnegative integer vectors of length `dims` summing to at most `budget`,
/// i.e. `C(budget + dims, dims)`.
pub fn simplex_points(dims: usize, budget: usize) -> u128 {
    (1..=dims as u128).fold(1u128, |acc, i| acc * (budget as u128 + i) / i)
}

/// Best allocation from the grid and its sum-rate.
#[derive(Debug, Clone, PartialEq)]
pub struct GridOptimum {
    pub alloc: PowerAllocation,
    pub sum_rate: f64,
}

/// Exhaustive search over `{q ≥ 0, Σq ≤ P_t}` sampled at multiples of
/// `P_t / (levels - 1)`.
pub fn grid_search_best(
    couplings: &[CouplingMatrix],
    scheme: &Scheme,
    grid: &GridSpec,
    noise_var: f64,
) -> Result<GridOptimum> {
    let users = couplings.len();
    let n = couplings.first().map_or(0, CouplingMatrix::n_subcarriers);
    let dims = match scheme {
        Scheme::Rsma => n * (users + 1),
        Scheme::Noma { sic_order, .. } => {
            check_sic_order(sic_order, users)?;
            n * users
        }
        Scheme::Ofdma { .. } => n,
    };
    if dims == 0 || dims > MAX_GRID_DIMS {
        return Err(Error::GridTooLarge(format!(
            "{dims} power variables (limit {MAX_GRID_DIMS})"
        )));
    }
    let steps = grid.levels - 1;
    let points = simplex_points(dims, steps);
    if points > MAX_GRID_POINTS {
        return Err(Error::GridTooLarge(format!(
            "{points} grid points (limit {MAX_GRID_POINTS})"
        )));
    }
    let unit = grid.total_power / steps as f64;

    let to_alloc = |counts: &[usize]| -> PowerAllocation {
        let q: Vec<f64> = counts.iter().map(|&c| c as f64 * unit).collect();
        match scheme {
            Scheme::Rsma => PowerAllocation {
                common: q[..n].to_vec(),
                private: q[n..].chunks(n).map(<[f64]>::to_vec).collect(),
                common_shares: vec![0.0; users],
            },
            Scheme::Noma { .. } => {
                PowerAllocation::private_only(q.chunks(n).map(<[f64]>::to_vec).collect())
            }
            Scheme::Ofdma { assignment } => {
                let mut private = vec![vec![0.0; n]; users];
                for (i, &k) in assignment.iter().enumerate() {
                    private[k][i] = q[i];
                }
                PowerAllocation::private_only(private)
            }
        }
    };
    let score = |counts: &[usize]| -> Result<f64> {
        let q: Vec<f64> = counts.iter().map(|&c| c as f64 * unit).collect();
        Ok(match scheme {
            Scheme::Rsma => evaluate_rsma(couplings, &to_alloc(counts), noise_var)?.sum_rate,
            Scheme::Noma { sic_order, model } => {
                evaluate_noma(couplings, &to_alloc(counts).private, noise_var, sic_order, *model)?
                    .sum_rate
            }
            Scheme::Ofdma { assignment } => {
                evaluate_ofdma(couplings, assignment, &q, noise_var)?.sum_rate
            }
        })
    };

    // partition on the first coordinate, enumerate the rest depth-first
    let best = (0..=steps)
        .into_par_iter()
        .map(|first| -> Result<(f64, Vec<usize>)> {
            let mut counts = vec![0usize; dims];
            counts[0] = first;
            let mut best = (f64::NEG_INFINITY, counts.clone());
            enumerate(&mut counts, 1, steps - first, &mut |c| {
                let v = score(c)?;
                if v > best.0 {
                    best = (v, c.to_vec());
                }
                Ok(())
            })?;
            Ok(best)
        })
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .fold((f64::NEG_INFINITY, Vec::new()), |acc, b| if b.0 > acc.0 { b } else { acc });

    Ok(GridOptimum {
        alloc: to_alloc(&best.1),
        sum_rate: best.0,
    })
}

fn enumerate(
    counts: &mut [usize],
    idx: usize,
    remaining: usize,
    visit: &mut dyn FnMut(&[usize]) -> Result<()>,
) -> Result<()> {
    if idx == counts.len() {
        return visit(counts);
    }
    for c in 0..=remaining {
        counts[idx] = c;
        enumerate(counts, idx + 1, remaining - c, visit)?;
    }
    counts[idx] = 0;
    Ok(())
}

/// Dense random coupling matrices for tiny test instances: `CN(0, 1)`
/// diagonal entries and `CN(0, leak)` off-diagonal entries.
pub fn random_couplings(users: usize, n: usize, leak: f64, seed: u64) -> Vec<CouplingMatrix> {
    use rand::SeedableRng;
    use rand_distr::{Distribution, StandardNormal};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    (0..users)
        .map(|k| {
            let g = CMatrix::from_fn(n, n, |r, c| {
                let scale = if r == c { 0.5f64 } else { leak / 2.0 };
                let re: f64 = StandardNormal.sample(&mut rng);
                let im: f64 = StandardNormal.sample(&mut rng);
                num_complex::Complex64::new(re, im) * scale.sqrt()
            });
            CouplingMatrix::new(k, g).expect("square")
        })
        .collect()
}

/// Random nonnegative allocation with every entry drawn uniformly in `[0, scale)`.
pub fn random_allocation(users: usize, n: usize, scale: f64, seed: u64) -> PowerAllocation {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let mut draw = |len: usize| (0..len).map(|_| rng.random::<f64>() * scale).collect::<Vec<_>>();
    PowerAllocation {
        common: draw(n),
        private: (0..users).map(|_| draw(n)).collect(),
        common_shares: vec![0.0; users],
    }
}
