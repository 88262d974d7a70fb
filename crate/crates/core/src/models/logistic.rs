use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::models::{Classifier, Standardizer};

/// L2-regularised logistic regression fitted by damped Newton iterations on
/// standardised features.
#[derive(Debug, Clone, PartialEq)]
pub struct LogisticModel {
    std: Standardizer,
    bias: f64,
    weights: Vec<f64>,
}

fn sigmoid(t: f64) -> f64 {
    if t >= 0.0 {
        1.0 / (1.0 + (-t).exp())
    } else {
        let e = t.exp();
        e / (1.0 + e)
    }
}

impl LogisticModel {
    /// Returns the model and an optional non-convergence warning.
    pub fn fit(d: &Dataset, max_iter: usize, l2: f64, tol: f64) -> Result<(Self, Option<String>)> {
        let stats = crate::data::feature_stats(d);
        if let Some(j) = stats.stddev.iter().position(|&s| s == 0.0) {
            return Err(Error::Singular(format!(
                "feature {j} is constant, so the logistic design is degenerate"
            )));
        }
        let std = Standardizer::fit(d);
        let f = d.n_features();
        let n = d.n_rows();
        let z: Vec<f64> = d.rows().flat_map(|x| std.apply(x)).collect();
        let y: Vec<f64> = d.labels().iter().map(|&v| f64::from(v)).collect();

        let p = f + 1;
        let objective = |bias: f64, w: &[f64]| {
            let mut loss = 0.0;
            for (row, &yi) in z.chunks_exact(f).zip(&y) {
                let t = bias + row.iter().zip(w).map(|(a, b)| a * b).sum::<f64>();
                // log(1 + e^t) - y t, computed without overflow.
                loss += t.max(0.0) + (-t.abs()).exp().ln_1p() - yi * t;
            }
            loss / n as f64 + 0.5 * l2 * w.iter().map(|v| v * v).sum::<f64>()
        };

        let mut bias = 0.0;
        let mut w = vec![0.0; f];
        let mut current = objective(bias, &w);
        let mut grad_norm = f64::INFINITY;
        let mut iterations = 0;
        while iterations < max_iter {
            iterations += 1;
            // Gradient and Hessian over the augmented design [1 z].
            let mut grad = vec![0.0; p];
            let mut hess = vec![0.0; p * p];
            let mut aug = vec![1.0; p];
            for (row, &yi) in z.chunks_exact(f).zip(&y) {
                aug[1..].copy_from_slice(row);
                let t = bias + row.iter().zip(&w).map(|(a, b)| a * b).sum::<f64>();
                let s = sigmoid(t);
                let r = s - yi;
                let c = s * (1.0 - s);
                for a in 0..p {
                    grad[a] += r * aug[a];
                    let ca = c * aug[a];
                    for b in 0..=a {
                        hess[a * p + b] += ca * aug[b];
                    }
                }
            }
            for a in 0..p {
                grad[a] /= n as f64;
                for b in 0..=a {
                    hess[a * p + b] /= n as f64;
                    hess[b * p + a] = hess[a * p + b];
                }
            }
            hess[0] += 1e-12;
            for j in 1..p {
                grad[j] += l2 * w[j - 1];
                hess[j * p + j] += l2;
            }
            grad_norm = grad.iter().map(|g| g * g).sum::<f64>().sqrt();
            if grad_norm < tol {
                break;
            }
            let step = crate::linalg::solve_spd(hess, &grad)?;
            // Backtrack until the penalised loss decreases.
            let mut scale = 1.0;
            loop {
                let nb = bias - scale * step[0];
                let nw: Vec<f64> = w.iter().zip(&step[1..]).map(|(wi, s)| wi - scale * s).collect();
                let candidate = objective(nb, &nw);
                if candidate <= current || scale < 1e-10 {
                    bias = nb;
                    w = nw;
                    current = candidate;
                    break;
                }
                scale *= 0.5;
            }
        }
        let warning = (grad_norm >= tol).then(|| {
            format!(
                "logistic regression did not converge in {iterations} iterations \
                 (gradient norm {grad_norm:.2e} >= {tol:.0e})"
            )
        });
        Ok((
            Self {
                std,
                bias,
                weights: w,
            },
            warning,
        ))
    }
}

impl Classifier for LogisticModel {
    fn n_features(&self) -> usize {
        self.weights.len()
    }

    fn proba(&self, x: &[f64]) -> f64 {
        let mut t = self.bias;
        for (((v, m), s), w) in x
            .iter()
            .zip(&self.std.mean)
            .zip(&self.std.scale)
            .zip(&self.weights)
        {
            t += w * (v - m) / s;
        }
        sigmoid(t)
    }
}
