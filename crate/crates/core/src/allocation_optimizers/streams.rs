//! Stream/receiver layout shared by the RSMA and NOMA optimizers.
//!
//! Every transmitted stream owns a block of `N` amplitudes in one flat
//! vector. A stream is decoded at one or more receivers ("links"); at each
//! link a fixed set of other streams is still undecoded and acts as
//! interference. A stream's rate is its smallest aggregate rate over its
//! links.

use std::f64::consts::LN_2;

use crate::link_analysis::{
    noma_sinr_at, rate_from_sinr, rsma_common_sinr, rsma_private_sinr, PowerAllocation,
};
use crate::ltv_channel::CouplingMatrix;

#[derive(Debug, Clone)]
pub(crate) struct Link {
    pub receiver: usize,
    pub interferers: Vec<usize>,
}

#[derive(Debug, Clone)]
pub(crate) struct Stream {
    /// `None` for the common stream, whose rate is shared among users.
    pub owner: Option<usize>,
    pub links: Vec<Link>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) enum Layout {
    /// Stream 0 is common, stream `1 + k` is the private stream of user `k`.
    Rsma,
    /// Stream `k` is the message of user `k`.
    Noma { sic_order: Vec<usize>, decodable: bool },
}

pub(crate) struct StreamModel<'a> {
    pub couplings: &'a [CouplingMatrix],
    pub n: usize,
    pub noise_var: f64,
    pub streams: Vec<Stream>,
    pub layout: Layout,
}

/// Equalizer/weight state of one `(link, subcarrier)` pair.
#[derive(Debug, Clone, Copy)]
pub(crate) struct ReceiverState {
    pub total: f64,
    pub interference: f64,
}

impl ReceiverState {
    pub fn mmse(&self) -> f64 {
        self.interference / self.total
    }

    /// MMSE weight `1/e`.
    pub fn weight(&self) -> f64 {
        self.total / self.interference
    }

    pub fn rate(&self) -> f64 {
        -self.mmse().log2()
    }
}

/// Per-link surrogate `Φ(a) = (c - Σ D_i a_i² + 2 Σ B_i a_i) / ln 2`, a concave
/// lower bound on the link's aggregate rate that is tight at the amplitudes it
/// was built from.
#[derive(Debug, Clone)]
pub(crate) struct LinkSurrogate {
    pub constant: f64,
    pub quad: Vec<f64>,
    pub lin: Vec<f64>,
}

impl LinkSurrogate {
    pub fn value(&self, a: &[f64]) -> f64 {
        let mut acc = self.constant;
        for ((d, b), x) in self.quad.iter().zip(&self.lin).zip(a) {
            acc += x * (2.0 * b - d * x);
        }
        acc / LN_2
    }
}

impl<'a> StreamModel<'a> {
    pub fn rsma(couplings: &'a [CouplingMatrix], noise_var: f64) -> Self {
        let users = couplings.len();
        let privates: Vec<usize> = (1..=users).collect();
        let mut streams = vec![Stream {
            owner: None,
            links: (0..users)
                .map(|k| Link {
                    receiver: k,
                    interferers: privates.clone(),
                })
                .collect(),
        }];
        for k in 0..users {
            streams.push(Stream {
                owner: Some(k),
                links: vec![Link {
                    receiver: k,
                    interferers: privates.iter().copied().filter(|&s| s != k + 1).collect(),
                }],
            });
        }
        Self::build(couplings, noise_var, streams, Layout::Rsma)
    }

    pub fn noma(
        couplings: &'a [CouplingMatrix],
        noise_var: f64,
        sic_order: &[usize],
        decodable: bool,
    ) -> Self {
        let users = couplings.len();
        let mut pos = vec![0; users];
        for (p, &u) in sic_order.iter().enumerate() {
            pos[u] = p;
        }
        let streams = (0..users)
            .map(|k| {
                let interferers: Vec<usize> = (0..users).filter(|&i| pos[i] > pos[k]).collect();
                let receivers: Vec<usize> = if decodable {
                    (0..users).filter(|&r| pos[r] >= pos[k]).collect()
                } else {
                    vec![k]
                };
                Stream {
                    owner: Some(k),
                    links: receivers
                        .into_iter()
                        .map(|receiver| Link {
                            receiver,
                            interferers: interferers.clone(),
                        })
                        .collect(),
                }
            })
            .collect();
        Self::build(
            couplings,
            noise_var,
            streams,
            Layout::Noma {
                sic_order: sic_order.to_vec(),
                decodable,
            },
        )
    }

    fn build(
        couplings: &'a [CouplingMatrix],
        noise_var: f64,
        streams: Vec<Stream>,
        layout: Layout,
    ) -> Self {
        let n = couplings.first().map_or(0, CouplingMatrix::n_subcarriers);
        Self {
            couplings,
            n,
            noise_var,
            streams,
            layout,
        }
    }

    pub fn users(&self) -> usize {
        self.couplings.len()
    }

    pub fn dim(&self) -> usize {
        self.streams.len() * self.n
    }

    /// `(stream, link)` pairs in a fixed order.
    pub fn links(&self) -> impl Iterator<Item = (usize, &Link)> {
        self.streams
            .iter()
            .enumerate()
            .flat_map(|(s, st)| st.links.iter().map(move |l| (s, l)))
    }

    fn block<'v>(&self, v: &'v [f64], s: usize) -> &'v [f64] {
        &v[s * self.n..(s + 1) * self.n]
    }

    pub fn receiver_state(&self, q: &[f64], s: usize, link: &Link, carrier: usize) -> ReceiverState {
        let row = self.couplings[link.receiver].power_matrix().row(carrier);
        let dot = |v: &[f64]| row.iter().zip(v).map(|(h, q)| h * q).sum::<f64>();
        let own = self.block(q, s);
        let signal = row[carrier] * own[carrier];
        let mut interference = self.noise_var;
        for (j, (h, p)) in row.iter().zip(own).enumerate() {
            if j != carrier {
                interference += h * p;
            }
        }
        for &u in &link.interferers {
            interference += dot(self.block(q, u));
        }
        ReceiverState {
            total: signal + interference,
            interference,
        }
    }

    /// Aggregate rate of every link, in [`StreamModel::links`] order.
    pub fn link_rates(&self, a: &[f64]) -> Vec<f64> {
        let q: Vec<f64> = a.iter().map(|x| x * x).collect();
        self.links()
            .map(|(s, l)| {
                (0..self.n)
                    .map(|c| self.receiver_state(&q, s, l, c).rate())
                    .sum()
            })
            .collect()
    }

    /// Per-stream rate: the minimum over the stream's links.
    pub fn stream_rates(&self, link_rates: &[f64]) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.streams.len());
        let mut idx = 0;
        for st in &self.streams {
            let r = link_rates[idx..idx + st.links.len()]
                .iter()
                .copied()
                .fold(f64::INFINITY, f64::min);
            out.push(if st.links.is_empty() { 0.0 } else { r });
            idx += st.links.len();
        }
        out
    }

    /// Builds the WMMSE surrogate of every link at amplitudes `a`: MMSE
    /// equalizers `u = |g_nn|·a_n/T` and weights `w = 1/e` for every
    /// subcarrier, folded into one concave quadratic per link.
    pub fn surrogates(&self, a: &[f64]) -> Vec<LinkSurrogate> {
        let q: Vec<f64> = a.iter().map(|x| x * x).collect();
        let dim = self.dim();
        let n = self.n;
        self.links()
            .map(|(s, link)| {
                let mut sur = LinkSurrogate {
                    constant: 0.0,
                    quad: vec![0.0; dim],
                    lin: vec![0.0; dim],
                };
                let powers = self.couplings[link.receiver].power_matrix();
                for c in 0..n {
                    let st = self.receiver_state(&q, s, link, c);
                    let w = st.weight();
                    let gain = powers[(c, c)].sqrt();
                    let u = gain * a[s * n + c] / st.total;
                    let wu2 = w * u * u;
                    sur.constant += 1.0 + w.ln() - w * (u * u * self.noise_var + 1.0);
                    sur.lin[s * n + c] += w * u * gain;
                    for &blk in std::iter::once(&s).chain(&link.interferers) {
                        for j in 0..n {
                            sur.quad[blk * n + j] += wu2 * powers[(c, j)];
                        }
                    }
                }
                sur
            })
            .collect()
    }

    /// Splits the flat amplitude vector into a power allocation.
    pub fn to_allocation(&self, a: &[f64]) -> PowerAllocation {
        let users = self.users();
        let q: Vec<f64> = a.iter().map(|x| x * x).collect();
        match self.layout {
            Layout::Rsma => PowerAllocation {
                common: self.block(&q, 0).to_vec(),
                private: (0..users).map(|k| self.block(&q, k + 1).to_vec()).collect(),
                common_shares: vec![0.0; users],
            },
            Layout::Noma { .. } => {
                PowerAllocation::private_only((0..users).map(|k| self.block(&q, k).to_vec()).collect())
            }
        }
    }

    #[cfg(test)]
    pub fn from_allocation(&self, alloc: &PowerAllocation) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.dim());
        if self.layout == Layout::Rsma {
            out.extend(alloc.common.iter().map(|q| q.max(0.0).sqrt()));
        }
        for row in &alloc.private {
            out.extend(row.iter().map(|q| q.max(0.0).sqrt()));
        }
        out
    }

    /// Largest gap between `-log2(e_mmse)` from the WMMSE receiver states and
    /// the rate computed independently by `link_analysis`, over every link
    /// and subcarrier.
    pub fn identity_gap(&self, a: &[f64]) -> f64 {
        let q: Vec<f64> = a.iter().map(|x| x * x).collect();
        let alloc = self.to_allocation(a);
        let mut worst = 0.0f64;
        for (s, link) in self.links() {
            for c in 0..self.n {
                let wmmse = self.receiver_state(&q, s, link, c).rate();
                let direct = match &self.layout {
                    Layout::Rsma if s == 0 => rate_from_sinr(&rsma_common_sinr(
                        self.couplings,
                        &alloc,
                        self.noise_var,
                        link.receiver,
                        c,
                    )),
                    Layout::Rsma => rate_from_sinr(&rsma_private_sinr(
                        self.couplings,
                        &alloc,
                        self.noise_var,
                        link.receiver,
                        c,
                    )),
                    Layout::Noma { sic_order, .. } => rate_from_sinr(
                        &noma_sinr_at(
                            self.couplings,
                            &alloc.private,
                            self.noise_var,
                            sic_order,
                            s,
                            link.receiver,
                            c,
                        )
                        .expect("validated SIC order"),
                    ),
                };
                worst = worst.max((wmmse - direct).abs());
            }
        }
        worst
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::reference_oracle::{random_allocation, random_couplings};

    #[test]
    fn surrogate_is_tight_and_below_rate() {
        let g = random_couplings(2, 3, 0.3, 9);
        let model = StreamModel::rsma(&g, 0.4);
        let a = model.from_allocation(&random_allocation(2, 3, 1.0, 10));
        let rates = model.link_rates(&a);
        let sur = model.surrogates(&a);
        for (r, s) in rates.iter().zip(&sur) {
            assert!((r - s.value(&a)).abs() < 1e-10, "{r} vs {}", s.value(&a));
        }
        let b = model.from_allocation(&random_allocation(2, 3, 1.5, 11));
        for (r, s) in model.link_rates(&b).iter().zip(&sur) {
            assert!(s.value(&b) <= r + 1e-12);
        }
    }

    #[test]
    fn wmmse_rates_match_link_analysis() {
        let g = random_couplings(2, 3, 0.3, 12);
        let a_alloc = random_allocation(2, 3, 1.0, 13);
        let rsma = StreamModel::rsma(&g, 0.4);
        assert!(rsma.identity_gap(&rsma.from_allocation(&a_alloc)) < 1e-12);
        let noma = StreamModel::noma(&g, 0.4, &[1, 0], true);
        assert!(noma.identity_gap(&noma.from_allocation(&a_alloc)) < 1e-12);
    }

    #[test]
    fn noma_links_follow_sic_order() {
        let g = random_couplings(3, 2, 0.3, 1);
        let model = StreamModel::noma(&g, 1.0, &[2, 0, 1], true);
        // user 2 is decoded first: by everyone, with both others as interference
        assert_eq!(model.streams[2].links.len(), 3);
        assert_eq!(model.streams[2].links[0].interferers, vec![0, 1]);
        // user 1 is decoded last, only by itself
        assert_eq!(model.streams[1].links.len(), 1);
        assert!(model.streams[1].links[0].interferers.is_empty());
        let own = StreamModel::noma(&g, 1.0, &[2, 0, 1], false);
        assert!(own.streams.iter().all(|s| s.links.len() == 1));
    }
}
