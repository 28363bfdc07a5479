//! Amplitude step of the WMMSE iteration.
//!
//! Maximizes the sum of per-stream surrogate rates, each stream's rate being
//! the minimum over its decoding links, under the power budget and optional
//! minimum-rate constraints. The problem is concave, and for fixed link
//! multipliers the Lagrangian separates per amplitude: `a_i = B_i⁺ / (D_i + μ)`
//! with the power multiplier `μ` found by bisection. The multipliers are then
//! found by projected gradient descent on the dual with Barzilai-Borwein
//! steps and Armijo backtracking.

use super::streams::LinkSurrogate;

/// Stationarity tolerance of the dual projected gradient.
pub(crate) const KKT_TOL: f64 = 1e-6;
const MAX_DUAL_ITERS: usize = 400;
const ARMIJO: f64 = 1e-4;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Phase {
    /// Maximize the sum of stream rates.
    SumRate,
    /// Maximize the smallest minimum-rate slack.
    Feasibility,
}

pub(crate) struct DualProblem<'s> {
    pub surrogates: &'s [LinkSurrogate],
    /// Link indices of every stream.
    pub stream_links: Vec<Vec<usize>>,
    pub stream_owner: Vec<Option<usize>>,
    pub users: usize,
    pub budget: f64,
    /// Present when minimum-rate constraints take part.
    pub min_rates: Option<Vec<f64>>,
    pub phase: Phase,
}

#[derive(Debug, Clone)]
pub(crate) struct DualSolution {
    pub amplitudes: Vec<f64>,
    pub multipliers: Vec<f64>,
    pub kkt_residual: f64,
}

struct Eval {
    value: f64,
    grad: Vec<f64>,
    amplitudes: Vec<f64>,
}

/// Linear constraint `coef · x (= | >=) rhs` over the multiplier vector.
struct Affine {
    coef: Vec<(usize, f64)>,
    rhs: f64,
    equality: bool,
}

impl Affine {
    fn project(&self, x: &mut [f64]) {
        let lhs: f64 = self.coef.iter().map(|&(i, c)| c * x[i]).sum();
        if !self.equality && lhs >= self.rhs {
            return;
        }
        let norm2: f64 = self.coef.iter().map(|&(_, c)| c * c).sum();
        let step = (lhs - self.rhs) / norm2;
        for &(i, c) in &self.coef {
            x[i] -= step * c;
        }
    }
}

impl<'s> DualProblem<'s> {
    fn num_links(&self) -> usize {
        self.surrogates.len()
    }

    fn has_shared(&self) -> bool {
        self.stream_owner.iter().any(Option::is_none)
    }

    fn nu(&self, k: usize) -> usize {
        self.num_links() + k
    }

    fn rho(&self) -> usize {
        self.num_links() + self.users
    }

    fn num_vars(&self) -> usize {
        match self.min_rates {
            None => self.num_links(),
            Some(_) => self.num_links() + self.users + usize::from(self.has_shared()),
        }
    }

    fn offset(&self) -> f64 {
        match self.phase {
            Phase::SumRate => 1.0,
            Phase::Feasibility => 0.0,
        }
    }

    fn constraints(&self) -> Vec<Affine> {
        let alpha = self.offset();
        let mut out = Vec::new();
        for (links, owner) in self.stream_links.iter().zip(&self.stream_owner) {
            let mut coef: Vec<(usize, f64)> = links.iter().map(|&l| (l, 1.0)).collect();
            match owner {
                Some(k) => coef.push((self.nu(*k), -1.0)),
                None => coef.push((self.rho(), -1.0)),
            }
            out.push(Affine { coef, rhs: alpha, equality: true });
        }
        if self.has_shared() {
            for k in 0..self.users {
                out.push(Affine {
                    coef: vec![(self.rho(), 1.0), (self.nu(k), -1.0)],
                    rhs: 0.0,
                    equality: false,
                });
            }
        }
        if self.phase == Phase::Feasibility {
            out.push(Affine {
                coef: (0..self.users).map(|k| (self.nu(k), 1.0)).collect(),
                rhs: 1.0,
                equality: true,
            });
        }
        out
    }

    /// Euclidean projection onto the dual feasible set.
    fn project(&self, y: &[f64]) -> Vec<f64> {
        if self.min_rates.is_none() {
            let mut x = y.to_vec();
            for links in &self.stream_links {
                let vals: Vec<f64> = links.iter().map(|&l| y[l]).collect();
                for (&l, v) in links.iter().zip(project_simplex(&vals, 1.0)) {
                    x[l] = v;
                }
            }
            return x;
        }
        // Dykstra's alternating projections over the orthant and the affine pieces
        let sets = self.constraints();
        let dim = y.len();
        let mut x = y.to_vec();
        let mut incr = vec![vec![0.0; dim]; sets.len() + 1];
        for _ in 0..20_000 {
            let before = x.clone();
            for (i, inc) in incr.iter_mut().enumerate() {
                let mut z: Vec<f64> = x.iter().zip(inc.iter()).map(|(a, b)| a + b).collect();
                let shifted = z.clone();
                if i == 0 {
                    z.iter_mut().for_each(|v| *v = v.max(0.0));
                } else {
                    sets[i - 1].project(&mut z);
                }
                for ((p, s), v) in inc.iter_mut().zip(&shifted).zip(&z) {
                    *p = s - v;
                }
                x = z;
            }
            let moved = x.iter().zip(&before).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            if moved <= 1e-15 * (1.0 + x.iter().fold(0.0f64, |m, v| m.max(v.abs()))) {
                break;
            }
        }
        x.iter_mut().for_each(|v| *v = v.max(0.0));
        x
    }

    fn initial(&self) -> Vec<f64> {
        let mut x = vec![0.0; self.num_vars()];
        let share = match self.phase {
            Phase::SumRate => 0.0,
            Phase::Feasibility => 1.0 / self.users.max(1) as f64,
        };
        if self.min_rates.is_some() {
            for k in 0..self.users {
                x[self.nu(k)] = share;
            }
            if self.has_shared() {
                x[self.rho()] = share;
            }
        }
        for links in &self.stream_links {
            let mass = self.offset() + if self.min_rates.is_some() { share } else { 0.0 };
            for &l in links {
                x[l] = mass / links.len() as f64;
            }
        }
        self.project(&x)
    }

    fn evaluate(&self, x: &[f64]) -> Eval {
        let dim = self.surrogates.first().map_or(0, |s| s.quad.len());
        let mut quad = vec![0.0; dim];
        let mut lin = vec![0.0; dim];
        for (sur, &lam) in self.surrogates.iter().zip(x) {
            if lam == 0.0 {
                continue;
            }
            for i in 0..dim {
                quad[i] += lam * sur.quad[i];
                lin[i] += lam * sur.lin[i];
            }
        }
        let amplitudes = solve_power(&quad, &lin, self.budget);
        let mut grad = vec![0.0; x.len()];
        let mut value = 0.0;
        for (l, sur) in self.surrogates.iter().enumerate() {
            let phi = sur.value(&amplitudes);
            grad[l] = phi;
            value += x[l] * phi;
        }
        if let Some(rmin) = &self.min_rates {
            for (k, r) in rmin.iter().enumerate() {
                grad[self.nu(k)] = -r;
                value -= x[self.nu(k)] * r;
            }
        }
        Eval { value, grad, amplitudes }
    }

    /// Minimizes the dual function starting from `warm` (if it has the right size).
    pub fn solve(&self, warm: Option<&[f64]>) -> DualSolution {
        let mut x = match warm {
            Some(w) if w.len() == self.num_vars() => self.project(w),
            _ => self.initial(),
        };
        let mut cur = self.evaluate(&x);
        let residual = |x: &[f64], grad: &[f64]| -> f64 {
            let trial: Vec<f64> = x.iter().zip(grad).map(|(a, g)| a - g).collect();
            self.project(&trial)
                .iter()
                .zip(x)
                .map(|(p, a)| (p - a).abs())
                .fold(0.0, f64::max)
        };
        let mut kkt = residual(&x, &cur.grad);
        let mut step = if kkt > 0.0 { (1.0 / kkt).clamp(1e-12, 1e12) } else { 1.0 };

        for _ in 0..MAX_DUAL_ITERS {
            if kkt < KKT_TOL {
                break;
            }
            let trial: Vec<f64> = x.iter().zip(&cur.grad).map(|(a, g)| a - step * g).collect();
            let dir: Vec<f64> = self.project(&trial).iter().zip(&x).map(|(p, a)| p - a).collect();
            let slope: f64 = dir.iter().zip(&cur.grad).map(|(d, g)| d * g).sum();
            if slope >= 0.0 {
                break;
            }
            let mut t = 1.0;
            let (next_x, next) = loop {
                let cand: Vec<f64> = x.iter().zip(&dir).map(|(a, d)| a + t * d).collect();
                let e = self.evaluate(&cand);
                if e.value <= cur.value + ARMIJO * t * slope || t < 1e-12 {
                    break (cand, e);
                }
                t *= 0.5;
            };
            let s: Vec<f64> = next_x.iter().zip(&x).map(|(a, b)| a - b).collect();
            let y: Vec<f64> = next.grad.iter().zip(&cur.grad).map(|(a, b)| a - b).collect();
            let sy: f64 = s.iter().zip(&y).map(|(a, b)| a * b).sum();
            let ss: f64 = s.iter().map(|v| v * v).sum();
            step = if sy > 0.0 { (ss / sy).clamp(1e-12, 1e12) } else { 1e12 };
            let stalled = ss == 0.0;
            x = next_x;
            cur = next;
            kkt = residual(&x, &cur.grad);
            if stalled {
                break;
            }
        }
        DualSolution {
            amplitudes: cur.amplitudes,
            multipliers: x,
            kkt_residual: kkt,
        }
    }
}

/// Minimizer of `Σ D_i a_i² - 2 B_i a_i` over `a ≥ 0`, `Σ a_i² ≤ budget`.
pub(crate) fn solve_power(quad: &[f64], lin: &[f64], budget: f64) -> Vec<f64> {
    let amps = |mu: f64| -> Vec<f64> {
        quad.iter()
            .zip(lin)
            .map(|(&d, &b)| if b > 0.0 { b / (d + mu) } else { 0.0 })
            .collect()
    };
    let power = |a: &[f64]| a.iter().map(|x| x * x).sum::<f64>();
    let b_norm: f64 = lin.iter().filter(|&&b| b > 0.0).map(|b| b * b).sum::<f64>().sqrt();
    if b_norm == 0.0 {
        return vec![0.0; lin.len()];
    }
    let unconstrained_ok = quad.iter().zip(lin).all(|(&d, &b)| b <= 0.0 || d > 0.0);
    if unconstrained_ok {
        let a = amps(0.0);
        if power(&a) <= budget {
            return a;
        }
    }
    let (mut lo, mut hi) = (0.0, b_norm / budget.sqrt());
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if power(&amps(mid)) > budget {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-15 * hi {
            break;
        }
    }
    amps(hi)
}

/// Euclidean projection of `v` onto `{x ≥ 0, Σx = total}`.
pub(crate) fn project_simplex(v: &[f64], total: f64) -> Vec<f64> {
    if v.len() == 1 {
        return vec![total];
    }
    let mut sorted = v.to_vec();
    sorted.sort_by(|a, b| b.total_cmp(a));
    let mut cumsum = 0.0;
    let mut theta = 0.0;
    for (i, &u) in sorted.iter().enumerate() {
        cumsum += u;
        let t = (cumsum - total) / (i + 1) as f64;
        if u - t > 0.0 {
            theta = t;
        }
    }
    v.iter().map(|x| (x - theta).max(0.0)).collect()
}
