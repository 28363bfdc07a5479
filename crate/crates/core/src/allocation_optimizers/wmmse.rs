//! WMMSE outer loop: receiver/weight update, amplitude step, monotone
//! safeguard and the feasibility pre-phase for minimum-rate constraints.

use super::streams::StreamModel;
use super::surrogate::{DualProblem, Phase};
use crate::{Error, Result};

/// Tolerated dip of the true objective before an iterate is rejected.
const ASCENT_TOL: f64 = 1e-12;

#[derive(Debug, Clone)]
pub(crate) struct Settings {
    pub max_iters: usize,
    pub rel_tol: f64,
    pub budget: f64,
    /// Empty or all-zero means no minimum-rate constraints.
    pub min_rates: Vec<f64>,
}

impl Settings {
    fn qos(&self) -> Option<&[f64]> {
        self.min_rates
            .iter()
            .any(|&r| r > 0.0)
            .then_some(self.min_rates.as_slice())
    }
}

#[derive(Debug, Clone)]
pub(crate) struct Outcome {
    pub amplitudes: Vec<f64>,
    pub trace: Vec<f64>,
    pub converged: bool,
    pub iterations: usize,
    pub kkt_residual: f64,
    pub identity_gap: f64,
}

/// Rate of every stream at amplitudes `a`.
fn stream_rates(model: &StreamModel, a: &[f64]) -> Vec<f64> {
    model.stream_rates(&model.link_rates(a))
}

fn sum_rate(model: &StreamModel, a: &[f64]) -> f64 {
    stream_rates(model, a).iter().sum()
}

/// Common-rate shares: users missing their minimum rate first, in index
/// order, the remainder to user 0.
pub(crate) fn assign_shares(private: &[f64], common: f64, min_rates: &[f64]) -> Vec<f64> {
    let mut shares = vec![0.0; private.len()];
    let mut left = common.max(0.0);
    for (k, (&r, share)) in private.iter().zip(shares.iter_mut()).enumerate() {
        let need = (min_rates.get(k).copied().unwrap_or(0.0) - r).max(0.0);
        *share = need.min(left);
        left -= *share;
    }
    if let Some(first) = shares.first_mut() {
        *first += left;
    }
    shares
}

/// Largest `t` such that every user reaches `R_min + t`, with the common rate
/// split optimally among them.
pub(crate) fn max_min_slack(private: &[f64], common: Option<f64>, min_rates: &[f64]) -> f64 {
    let gaps: Vec<f64> = private
        .iter()
        .enumerate()
        .map(|(k, r)| r - min_rates.get(k).copied().unwrap_or(0.0))
        .collect();
    let lo = gaps.iter().copied().fold(f64::INFINITY, f64::min);
    let Some(common) = common.filter(|c| *c > 0.0) else {
        return lo;
    };
    // Σ max(0, t - gap_k) = common is piecewise linear and increasing in t
    let need = |t: f64| gaps.iter().map(|g| (t - g).max(0.0)).sum::<f64>();
    let (mut lo, mut hi) = (lo, lo + common);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if need(mid) <= common {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-15 * (1.0 + hi.abs()) {
            break;
        }
    }
    lo
}

fn slack(model: &StreamModel, a: &[f64], min_rates: &[f64]) -> f64 {
    let rates = stream_rates(model, a);
    let (common, private) = split_common(model, &rates);
    max_min_slack(&private, common, min_rates)
}

/// Splits stream rates into the shared rate (if any) and per-user rates.
fn split_common(model: &StreamModel, rates: &[f64]) -> (Option<f64>, Vec<f64>) {
    let mut private = vec![0.0; model.users()];
    let mut common = None;
    for (st, &r) in model.streams.iter().zip(rates) {
        match st.owner {
            Some(k) => private[k] += r,
            None => common = Some(r),
        }
    }
    (common, private)
}

/// One WMMSE run from `start`.
pub(crate) fn run(model: &StreamModel, start: Vec<f64>, settings: &Settings) -> Result<Outcome> {
    let mut a = start;
    let mut identity_gap = model.identity_gap(&a);
    let mut iterations = 0;

    if let Some(rmin) = settings.qos() {
        if slack(model, &a, rmin) < 0.0 {
            let pre = ascend(model, a, settings, Phase::Feasibility, &mut identity_gap)?;
            iterations += pre.iterations;
            let t = slack(model, &pre.amplitudes, rmin);
            if t < 0.0 {
                return Err(Error::Infeasible { slack: t });
            }
            a = pre.amplitudes;
        }
    }
    let mut out = ascend(model, a, settings, Phase::SumRate, &mut identity_gap)?;
    out.iterations += iterations;
    Ok(out)
}

fn ascend(
    model: &StreamModel,
    start: Vec<f64>,
    settings: &Settings,
    phase: Phase,
    identity_gap: &mut f64,
) -> Result<Outcome> {
    let qos = settings.qos();
    let objective = |a: &[f64]| match phase {
        Phase::SumRate => sum_rate(model, a),
        Phase::Feasibility => slack(model, a, qos.unwrap_or_default()),
    };
    let feasible = |a: &[f64]| qos.is_none_or(|r| slack(model, a, r) >= -1e-9);

    let mut stream_links: Vec<Vec<usize>> = Vec::new();
    let mut idx = 0;
    for st in &model.streams {
        stream_links.push((idx..idx + st.links.len()).collect());
        idx += st.links.len();
    }
    let stream_owner: Vec<Option<usize>> = model.streams.iter().map(|s| s.owner).collect();

    let mut a = start;
    let mut value = objective(&a);
    let mut trace = vec![value];
    let mut warm: Option<Vec<f64>> = None;
    let mut converged = false;
    let mut kkt_residual = 0.0;
    let mut iterations = 0;

    while iterations < settings.max_iters {
        iterations += 1;
        let surrogates = model.surrogates(&a);
        let problem = DualProblem {
            surrogates: &surrogates,
            stream_links: stream_links.clone(),
            stream_owner: stream_owner.clone(),
            users: model.users(),
            budget: settings.budget,
            min_rates: qos.map(<[f64]>::to_vec),
            phase,
        };
        let sol = problem.solve(warm.as_deref());
        kkt_residual = sol.kkt_residual;
        let next = sol.amplitudes;
        let next_value = objective(&next);
        if next_value < value - ASCENT_TOL * (1.0 + value.abs())
            || (phase == Phase::SumRate && !feasible(&next))
        {
            // the amplitude step was not solved accurately enough to ascend
            converged = true;
            break;
        }
        *identity_gap = identity_gap.max(model.identity_gap(&next));
        warm = Some(sol.multipliers);
        let change = (next_value - value).abs();
        a = next;
        let prev = value;
        value = next_value;
        trace.push(value);
        if phase == Phase::Feasibility && value >= 0.0 {
            converged = true;
            break;
        }
        let scale = match phase {
            Phase::SumRate => prev.abs().max(f64::MIN_POSITIVE),
            Phase::Feasibility => 1.0 + prev.abs(),
        };
        if change <= settings.rel_tol * scale {
            converged = true;
            break;
        }
    }
    Ok(Outcome {
        amplitudes: a,
        trace,
        converged,
        iterations,
        kkt_residual,
        identity_gap: *identity_gap,
    })
}
