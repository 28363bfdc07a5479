//! Per-subcarrier power decompositions, SINRs and achievable rates for
//! OFDM-RSMA, OFDM-NOMA and OFDMA.
//!
//! Symbols are unit-power and mutually independent, so every received power
//! term is a sum of `|g_{k,nj}|² · q_j` products: the precoder phases never
//! matter and allocations are carried as powers `q = p²`.
//!
//! Users are indexed `0..K` in the order of the coupling slice; subcarriers
//! `0..N`.

use crate::error::{Error, Result};
use crate::ltv_channel::CouplingMatrix;

/// Powers of the common stream and of every private stream, plus the share
/// of the common rate credited to each user.
#[derive(Debug, Clone, PartialEq)]
pub struct PowerAllocation {
    /// `q_{c,n}`, length `N`.
    pub common: Vec<f64>,
    /// `q_{k,n}`, `K` rows of length `N`.
    pub private: Vec<Vec<f64>>,
    /// `C_k` in bit/s/Hz per OFDM symbol, length `K`.
    pub common_shares: Vec<f64>,
}

impl PowerAllocation {
    pub fn zeros(users: usize, n: usize) -> Self {
        Self {
            common: vec![0.0; n],
            private: vec![vec![0.0; n]; users],
            common_shares: vec![0.0; users],
        }
    }

    /// A private-only allocation (no common stream), as used by NOMA and OFDMA.
    pub fn private_only(private: Vec<Vec<f64>>) -> Self {
        let users = private.len();
        let n = private.first().map_or(0, Vec::len);
        Self {
            common: vec![0.0; n],
            private,
            common_shares: vec![0.0; users],
        }
    }

    pub fn users(&self) -> usize {
        self.private.len()
    }

    pub fn n_subcarriers(&self) -> usize {
        self.common.len()
    }

    pub fn total_power(&self) -> f64 {
        self.common.iter().sum::<f64>() + self.private.iter().flatten().sum::<f64>()
    }

    pub fn is_nonnegative(&self) -> bool {
        self.common
            .iter()
            .chain(self.private.iter().flatten())
            .chain(&self.common_shares)
            .all(|&v| v >= 0.0)
    }

    /// Checks shape, sign and (optionally) the total power budget.
    pub fn validate(&self, users: usize, n: usize, budget: Option<f64>) -> Result<()> {
        if self.common.len() != n {
            return Err(Error::DimensionMismatch {
                what: "common power vector",
                expected: n,
                got: self.common.len(),
            });
        }
        if self.private.len() != users || self.common_shares.len() != users {
            return Err(Error::DimensionMismatch {
                what: "number of private streams",
                expected: users,
                got: self.private.len(),
            });
        }
        for row in &self.private {
            if row.len() != n {
                return Err(Error::DimensionMismatch {
                    what: "private power vector",
                    expected: n,
                    got: row.len(),
                });
            }
        }
        if !self.is_nonnegative() {
            return Err(Error::InvalidOptions("powers and shares must be nonnegative".into()));
        }
        if let Some(p_t) = budget {
            if self.total_power() > p_t + 1e-9 {
                return Err(Error::InvalidOptions(format!(
                    "allocation uses {} > budget {p_t}",
                    self.total_power()
                )));
            }
        }
        Ok(())
    }
}

/// Received power on one subcarrier split into its four contributions.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct SinrDecomposition {
    pub signal: f64,
    pub ici: f64,
    pub mui: f64,
    pub noise: f64,
}

impl SinrDecomposition {
    /// Total received power `T`.
    pub fn total(&self) -> f64 {
        self.signal + self.ici + self.mui + self.noise
    }

    /// Interference plus noise `I = T - signal`.
    pub fn interference(&self) -> f64 {
        self.ici + self.mui + self.noise
    }

    pub fn sinr(&self) -> f64 {
        self.signal / self.interference()
    }

    /// MMSE of the unit-power symbol after the optimal scalar equalizer,
    /// `1 - signal/T`, evaluated as `I/T`.
    pub fn mmse(&self) -> f64 {
        self.interference() / self.total()
    }
}

/// Rates of one evaluated allocation.
#[derive(Debug, Clone, PartialEq)]
pub struct RateReport {
    /// `R_{c,k,n}`: common-stream rate when decoded at user `k`.
    pub common_rate_per_user: Vec<Vec<f64>>,
    /// `R_{k,n}`.
    pub private_rate: Vec<Vec<f64>>,
    /// Deliverable common rate, bit/s/Hz per OFDM symbol.
    pub common_total: f64,
    pub sum_rate: f64,
}

impl RateReport {
    /// `R_k = Σ_n R_{k,n}`.
    pub fn private_total(&self, user: usize) -> f64 {
        self.private_rate[user].iter().sum()
    }

    /// `Σ_n R_{c,k,n}`.
    pub fn common_at_user(&self, user: usize) -> f64 {
        self.common_rate_per_user[user].iter().sum()
    }
}

/// `log2(1 + signal / (ici + mui + noise))`.
pub fn rate_from_sinr(d: &SinrDecomposition) -> f64 {
    (1.0 + d.sinr()).log2()
}

/// Decomposition of a stream with powers `own` received through `g` on
/// subcarrier `n`, with `interferers` undecoded at that point.
pub(crate) fn decompose<'a>(
    g: &CouplingMatrix,
    own: &[f64],
    interferers: impl IntoIterator<Item = &'a [f64]>,
    noise_var: f64,
    n: usize,
) -> SinrDecomposition {
    let row = g.power_matrix().row(n);
    let dot = |q: &[f64]| row.iter().zip(q).map(|(h, q)| h * q).sum::<f64>();
    let ici = row
        .iter()
        .zip(own)
        .enumerate()
        .filter(|(j, _)| *j != n)
        .map(|(_, (h, q))| h * q)
        .sum();
    SinrDecomposition {
        signal: row[n] * own[n],
        ici,
        mui: interferers.into_iter().map(dot).fold(0.0, |acc, p| acc + p),
        noise: noise_var,
    }
}

fn check_shapes(couplings: &[CouplingMatrix], alloc: &PowerAllocation) -> Result<()> {
    let n = couplings.first().map_or(0, CouplingMatrix::n_subcarriers);
    for g in couplings {
        if g.n_subcarriers() != n {
            return Err(Error::DimensionMismatch {
                what: "coupling matrix size",
                expected: n,
                got: g.n_subcarriers(),
            });
        }
    }
    alloc.validate(couplings.len(), n, None)
}

/// Common stream at user `user`, subcarrier `n`: every private stream
/// (including the user's own) is still present.
pub fn rsma_common_sinr(
    couplings: &[CouplingMatrix],
    alloc: &PowerAllocation,
    noise_var: f64,
    user: usize,
    n: usize,
) -> SinrDecomposition {
    decompose(
        &couplings[user],
        &alloc.common,
        alloc.private.iter().map(Vec::as_slice),
        noise_var,
        n,
    )
}

/// Private stream of `user` after the common stream is cancelled.
pub fn rsma_private_sinr(
    couplings: &[CouplingMatrix],
    alloc: &PowerAllocation,
    noise_var: f64,
    user: usize,
    n: usize,
) -> SinrDecomposition {
    decompose(
        &couplings[user],
        &alloc.private[user],
        alloc
            .private
            .iter()
            .enumerate()
            .filter(|(i, _)| *i != user)
            .map(|(_, q)| q.as_slice()),
        noise_var,
        n,
    )
}

/// Validates that `sic_order` is a permutation of `0..users`.
pub fn check_sic_order(sic_order: &[usize], users: usize) -> Result<()> {
    if sic_order.len() != users {
        return Err(Error::InvalidSicOrder(format!(
            "expected {users} entries, got {}",
            sic_order.len()
        )));
    }
    let mut seen = vec![false; users];
    for &u in sic_order {
        if u >= users || std::mem::replace(&mut seen[u], true) {
            return Err(Error::InvalidSicOrder(format!("{sic_order:?} is not a permutation")));
        }
    }
    Ok(())
}

/// Position of every user in the SIC order.
fn sic_positions(sic_order: &[usize]) -> Vec<usize> {
    let mut pos = vec![0; sic_order.len()];
    for (p, &u) in sic_order.iter().enumerate() {
        pos[u] = p;
    }
    pos
}

/// Message of `message_user` decoded at receiver `receiver` under a fixed
/// SIC order: messages decoded earlier are cancelled, later ones remain.
pub fn noma_sinr_at(
    couplings: &[CouplingMatrix],
    q_noma: &[Vec<f64>],
    noise_var: f64,
    sic_order: &[usize],
    message_user: usize,
    receiver: usize,
    n: usize,
) -> Result<SinrDecomposition> {
    check_sic_order(sic_order, q_noma.len())?;
    let pos = sic_positions(sic_order);
    Ok(decompose(
        &couplings[receiver],
        &q_noma[message_user],
        q_noma
            .iter()
            .enumerate()
            .filter(|(i, _)| pos[*i] > pos[message_user])
            .map(|(_, q)| q.as_slice()),
        noise_var,
        n,
    ))
}

/// Own message of `user` at its own receiver, interfered by the users
/// decoded after it.
pub fn noma_private_sinr(
    couplings: &[CouplingMatrix],
    q_noma: &[Vec<f64>],
    noise_var: f64,
    sic_order: &[usize],
    user: usize,
    n: usize,
) -> Result<SinrDecomposition> {
    noma_sinr_at(couplings, q_noma, noise_var, sic_order, user, user, n)
}

/// Rates of an RSMA allocation. The deliverable common rate is the smallest
/// per-user common rate, so every user can decode it.
pub fn evaluate_rsma(
    couplings: &[CouplingMatrix],
    alloc: &PowerAllocation,
    noise_var: f64,
) -> Result<RateReport> {
    check_shapes(couplings, alloc)?;
    let users = couplings.len();
    let n = alloc.n_subcarriers();
    let per_carrier = |f: &dyn Fn(usize, usize) -> SinrDecomposition| -> Vec<Vec<f64>> {
        (0..users)
            .map(|k| (0..n).map(|i| rate_from_sinr(&f(k, i))).collect())
            .collect()
    };
    let common_rate_per_user =
        per_carrier(&|k, i| rsma_common_sinr(couplings, alloc, noise_var, k, i));
    let private_rate = per_carrier(&|k, i| rsma_private_sinr(couplings, alloc, noise_var, k, i));
    let common_total = common_rate_per_user
        .iter()
        .map(|r| r.iter().sum::<f64>())
        .fold(f64::INFINITY, f64::min);
    let common_total = if users == 0 { 0.0 } else { common_total };
    let sum_rate = common_total + private_rate.iter().flatten().sum::<f64>();
    Ok(RateReport {
        common_rate_per_user,
        private_rate,
        common_total,
        sum_rate,
    })
}

/// How a NOMA user's rate is credited.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum NomaRateModel {
    /// Each message is rated at its own receiver only.
    OwnReceiver,
    /// Each message must also be decodable by every user that cancels it
    /// during SIC; its rate is the smallest aggregate over those receivers.
    #[default]
    SicDecodable,
}

/// Rates of a NOMA allocation under a fixed SIC order.
///
/// With [`NomaRateModel::SicDecodable`] the reported `private_rate` row of a
/// user is taken from its binding receiver, so `sum_rate` remains the sum of
/// all reported entries.
pub fn evaluate_noma(
    couplings: &[CouplingMatrix],
    q_noma: &[Vec<f64>],
    noise_var: f64,
    sic_order: &[usize],
    model: NomaRateModel,
) -> Result<RateReport> {
    let alloc = PowerAllocation::private_only(q_noma.to_vec());
    check_shapes(couplings, &alloc)?;
    let users = couplings.len();
    check_sic_order(sic_order, users)?;
    let pos = sic_positions(sic_order);
    let n = alloc.n_subcarriers();
    let mut private_rate = Vec::with_capacity(users);
    for k in 0..users {
        let receivers: Vec<usize> = match model {
            NomaRateModel::OwnReceiver => vec![k],
            NomaRateModel::SicDecodable => (0..users).filter(|&r| pos[r] >= pos[k]).collect(),
        };
        let mut best: Option<(f64, Vec<f64>)> = None;
        for r in receivers {
            let row: Vec<f64> = (0..n)
                .map(|i| {
                    let d = noma_sinr_at(couplings, q_noma, noise_var, sic_order, k, r, i)?;
                    Ok(rate_from_sinr(&d))
                })
                .collect::<Result<_>>()?;
            let total: f64 = row.iter().sum();
            if best.as_ref().is_none_or(|(b, _)| total < *b) {
                best = Some((total, row));
            }
        }
        private_rate.push(best.map(|(_, r)| r).unwrap_or_default());
    }
    let sum_rate = private_rate.iter().flatten().sum();
    Ok(RateReport {
        common_rate_per_user: vec![vec![0.0; n]; users],
        private_rate,
        common_total: 0.0,
        sum_rate,
    })
}

/// Decomposition of the OFDMA stream on subcarrier `n`, received by its
/// assigned user. Leakage from the user's own other subcarriers is ICI,
/// leakage from other users' subcarriers is MUI.
pub fn ofdma_sinr(
    couplings: &[CouplingMatrix],
    assignment: &[usize],
    q_ofdma: &[f64],
    noise_var: f64,
    n: usize,
) -> SinrDecomposition {
    let k = assignment[n];
    let g = &couplings[k];
    let mut d = SinrDecomposition {
        signal: g.power(n, n) * q_ofdma[n],
        noise: noise_var,
        ..Default::default()
    };
    for (j, (&owner, &q)) in assignment.iter().zip(q_ofdma).enumerate() {
        if j == n {
            continue;
        }
        if owner == k {
            d.ici += g.power(n, j) * q;
        } else {
            d.mui += g.power(n, j) * q;
        }
    }
    d
}

pub fn check_assignment(assignment: &[usize], users: usize, n: usize) -> Result<()> {
    if assignment.len() != n {
        return Err(Error::InvalidAssignment(format!(
            "expected {n} entries, got {}",
            assignment.len()
        )));
    }
    if let Some((i, &u)) = assignment.iter().enumerate().find(|(_, &u)| u >= users) {
        return Err(Error::InvalidAssignment(format!(
            "subcarrier {i} assigned to unknown user {u}"
        )));
    }
    Ok(())
}

/// Rates of an OFDMA allocation: one user per subcarrier, no SIC.
pub fn evaluate_ofdma(
    couplings: &[CouplingMatrix],
    assignment: &[usize],
    q_ofdma: &[f64],
    noise_var: f64,
) -> Result<RateReport> {
    let users = couplings.len();
    let n = q_ofdma.len();
    check_assignment(assignment, users, n)?;
    let mut private = vec![vec![0.0; n]; users];
    for (i, &k) in assignment.iter().enumerate() {
        private[k][i] = q_ofdma[i];
    }
    check_shapes(couplings, &PowerAllocation::private_only(private))?;
    let mut private_rate = vec![vec![0.0; n]; users];
    for i in 0..n {
        private_rate[assignment[i]][i] =
            rate_from_sinr(&ofdma_sinr(couplings, assignment, q_ofdma, noise_var, i));
    }
    let sum_rate = private_rate.iter().flatten().sum();
    Ok(RateReport {
        common_rate_per_user: vec![vec![0.0; n]; users],
        private_rate,
        common_total: 0.0,
        sum_rate,
    })
}
