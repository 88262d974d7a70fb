//! One-hidden-layer network: ReLU hidden units, sigmoid output, binary
//! cross-entropy, trained with mini-batch Adam on standardised inputs.

use rand::seq::SliceRandom;
use rand::Rng as _;

use crate::data::Dataset;
use crate::models::{Classifier, Standardizer};
use crate::rng::rng_from_seed;

#[derive(Debug, Clone, Copy)]
pub(crate) struct TrainParams {
    pub hidden_units: usize,
    pub epochs: usize,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub l2: f64,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MlpModel {
    std: Standardizer,
    n_features: usize,
    hidden: usize,
    /// Row-major `hidden × n_features`.
    w1: Vec<f64>,
    b1: Vec<f64>,
    w2: Vec<f64>,
    b2: f64,
    /// Inference copy of the first layer with the standardisation folded
    /// in, stored feature-major so the hidden units accumulate together.
    w1_folded: Vec<f64>,
    b1_folded: Vec<f64>,
}

fn sigmoid(t: f64) -> f64 {
    if t >= 0.0 {
        1.0 / (1.0 + (-t).exp())
    } else {
        let e = t.exp();
        e / (1.0 + e)
    }
}

struct Adam {
    m: Vec<f64>,
    v: Vec<f64>,
    t: i32,
}

impl Adam {
    const B1: f64 = 0.9;
    const B2: f64 = 0.999;
    const EPS: f64 = 1e-8;

    fn new(n: usize) -> Self {
        Self {
            m: vec![0.0; n],
            v: vec![0.0; n],
            t: 0,
        }
    }

    fn step(&mut self, params: &mut [f64], grad: &[f64], lr: f64) {
        self.t += 1;
        let c1 = 1.0 - Self::B1.powi(self.t);
        let c2 = 1.0 - Self::B2.powi(self.t);
        for ((p, g), (m, v)) in params
            .iter_mut()
            .zip(grad)
            .zip(self.m.iter_mut().zip(self.v.iter_mut()))
        {
            *m = Self::B1 * *m + (1.0 - Self::B1) * g;
            *v = Self::B2 * *v + (1.0 - Self::B2) * g * g;
            *p -= lr * (*m / c1) / ((*v / c2).sqrt() + Self::EPS);
        }
    }
}

impl MlpModel {
    fn init(std: Standardizer, n_features: usize, hidden: usize, seed: u64) -> Self {
        let mut rng = rng_from_seed(seed);
        let b_in = (6.0 / (n_features + hidden) as f64).sqrt();
        let b_out = (6.0 / (hidden + 1) as f64).sqrt();
        Self {
            std,
            n_features,
            hidden,
            w1: (0..hidden * n_features)
                .map(|_| rng.random_range(-b_in..b_in))
                .collect(),
            b1: (0..hidden).map(|_| rng.random_range(-b_in..b_in)).collect(),
            w2: (0..hidden).map(|_| rng.random_range(-b_out..b_out)).collect(),
            b2: rng.random_range(-b_out..b_out),
            w1_folded: Vec::new(),
            b1_folded: Vec::new(),
        }
    }

    /// An untrained network with Glorot-uniform weights on unscaled inputs.
    /// Used to generate arbitrary smooth non-linear black boxes.
    pub fn random(n_features: usize, hidden: usize, seed: u64) -> Self {
        let std = Standardizer {
            mean: vec![0.0; n_features],
            scale: vec![1.0; n_features],
        };
        let mut m = Self::init(std, n_features, hidden, seed);
        // Larger output weights so the sigmoid leaves its linear regime.
        m.w2.iter_mut().for_each(|w| *w *= 3.0);
        m.fold();
        m
    }

    fn fold(&mut self) {
        let (f, h) = (self.n_features, self.hidden);
        self.w1_folded = vec![0.0; f * h];
        self.b1_folded = self.b1.clone();
        for u in 0..h {
            for j in 0..f {
                let w = self.w1[u * f + j] / self.std.scale[j];
                self.w1_folded[j * h + u] = w;
                self.b1_folded[u] -= w * self.std.mean[j];
            }
        }
    }

    pub fn hidden_units(&self) -> usize {
        self.hidden
    }

    pub(crate) fn fit(d: &Dataset, p: TrainParams) -> (Self, Option<String>) {
        let f = d.n_features();
        let h = p.hidden_units;
        let std = Standardizer::fit(d);
        let mut m = Self::init(std, f, h, p.seed);
        let z: Vec<f64> = d.rows().flat_map(|x| m.std.apply(x)).collect();
        let y: Vec<f64> = d.labels().iter().map(|&v| f64::from(v)).collect();
        let n = d.n_rows();

        let mut rng = rng_from_seed(p.seed ^ 0x5bd1_e995);
        let mut order: Vec<usize> = (0..n).collect();
        let mut opt_w1 = Adam::new(h * f);
        let mut opt_b1 = Adam::new(h);
        let mut opt_w2 = Adam::new(h);
        let mut opt_b2 = Adam::new(1);
        let mut g_w1 = vec![0.0; h * f];
        let mut g_b1 = vec![0.0; h];
        let mut g_w2 = vec![0.0; h];
        let mut act = vec![0.0; h];
        let mut losses = Vec::with_capacity(p.epochs);

        for _ in 0..p.epochs {
            order.shuffle(&mut rng);
            let mut epoch_loss = 0.0;
            for batch in order.chunks(p.batch_size) {
                g_w1.iter_mut().for_each(|g| *g = 0.0);
                g_b1.iter_mut().for_each(|g| *g = 0.0);
                g_w2.iter_mut().for_each(|g| *g = 0.0);
                let mut g_b2 = 0.0;
                for &i in batch {
                    let x = &z[i * f..(i + 1) * f];
                    let mut out = m.b2;
                    for u in 0..h {
                        let pre = m.b1[u]
                            + m.w1[u * f..(u + 1) * f]
                                .iter()
                                .zip(x)
                                .map(|(a, b)| a * b)
                                .sum::<f64>();
                        act[u] = pre.max(0.0);
                        out += m.w2[u] * act[u];
                    }
                    let prob = sigmoid(out);
                    let eps = 1e-12;
                    epoch_loss -= y[i] * (prob + eps).ln() + (1.0 - y[i]) * (1.0 - prob + eps).ln();
                    let delta = prob - y[i];
                    g_b2 += delta;
                    for u in 0..h {
                        g_w2[u] += delta * act[u];
                        if act[u] > 0.0 {
                            let back = delta * m.w2[u];
                            g_b1[u] += back;
                            for (g, v) in g_w1[u * f..(u + 1) * f].iter_mut().zip(x) {
                                *g += back * v;
                            }
                        }
                    }
                }
                let scale = 1.0 / batch.len() as f64;
                for (g, w) in g_w1.iter_mut().zip(&m.w1) {
                    *g = *g * scale + p.l2 * w;
                }
                for (g, w) in g_w2.iter_mut().zip(&m.w2) {
                    *g = *g * scale + p.l2 * w;
                }
                g_b1.iter_mut().for_each(|g| *g *= scale);
                g_b2 *= scale;
                opt_w1.step(&mut m.w1, &g_w1, p.learning_rate);
                opt_b1.step(&mut m.b1, &g_b1, p.learning_rate);
                opt_w2.step(&mut m.w2, &g_w2, p.learning_rate);
                opt_b2.step(std::slice::from_mut(&mut m.b2), &[g_b2], p.learning_rate);
            }
            losses.push(epoch_loss / n as f64);
        }
        // Same criterion as a tolerance-based early stop: still improving by
        // more than 1e-4 per epoch when the budget ran out.
        let warning = match losses.as_slice() {
            [.., a, b] if a - b > 1e-4 => Some(format!(
                "mlp still improving after {} epochs (loss {b:.4}, last change {:.1e})",
                p.epochs,
                a - b
            )),
            _ => None,
        };
        m.fold();
        (m, warning)
    }
}

impl Classifier for MlpModel {
    fn n_features(&self) -> usize {
        self.n_features
    }

    fn proba(&self, x: &[f64]) -> f64 {
        let h = self.hidden;
        let mut pre = self.b1_folded.clone();
        for (col, &v) in self.w1_folded.chunks_exact(h).zip(x) {
            for (p, w) in pre.iter_mut().zip(col) {
                *p += w * v;
            }
        }
        let out = self.b2 + pre.iter().zip(&self.w2).map(|(p, w)| p.max(0.0) * w).sum::<f64>();
        sigmoid(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn learns_xor_like_pattern() {
        let d = crate::data::drug_like(600, 8);
        let (m, _) = MlpModel::fit(
            &d,
            TrainParams {
                hidden_units: 32,
                epochs: 60,
                learning_rate: 0.01,
                batch_size: 32,
                l2: 1e-4,
                seed: 3,
            },
        );
        let acc = crate::models::accuracy(&m, &d);
        assert!(acc > 0.8, "training accuracy {acc}");
    }

    #[test]
    fn random_network_outputs_are_probabilities() {
        let m = MlpModel::random(4, 8, 1);
        for i in 0..100 {
            let t = i as f64 - 50.0;
            let p = m.proba(&[t, -t, 0.5 * t, 1.0]);
            assert!((0.0..=1.0).contains(&p));
        }
    }

    #[test]
    fn folded_inference_matches_layered_forward_pass() {
        let d = crate::data::drug_like(200, 2);
        let (m, _) = MlpModel::fit(
            &d,
            TrainParams {
                hidden_units: 16,
                epochs: 5,
                learning_rate: 0.01,
                batch_size: 32,
                l2: 1e-4,
                seed: 4,
            },
        );
        let f = m.n_features;
        for x in d.rows() {
            let z = m.std.apply(x);
            let mut out = m.b2;
            for u in 0..m.hidden {
                let pre = m.b1[u] + (0..f).map(|j| m.w1[u * f + j] * z[j]).sum::<f64>();
                out += m.w2[u] * pre.max(0.0);
            }
            assert!((sigmoid(out) - m.proba(x)).abs() < 1e-12);
        }
    }
}
