use rand::distr::{Distribution, Open01};
use rand::Rng;

use super::{Matrix, Params};

/// Half-width of the Xavier uniform range, factor type "in".
pub fn xavier_bound(fan_in: usize, magnitude: f64) -> f64 {
    (3.0 * magnitude / fan_in as f64).sqrt()
}

/// Uniform samples in `(−b, b)` with `b = sqrt(3 · magnitude / fan_in)`.
pub fn xavier_init(
    rows: usize,
    cols: usize,
    fan_in: usize,
    magnitude: f64,
    rng: &mut impl Rng,
) -> Matrix {
    assert!(fan_in >= 1, "fan_in must be positive");
    let b = xavier_bound(fan_in, magnitude);
    let data = (0..rows * cols)
        .map(|_| {
            let u: f64 = Open01.sample(rng);
            (2.0 * u - 1.0) * b
        })
        .collect();
    Matrix::from_vec(rows, cols, data).expect("length matches shape")
}

/// Scales every gradient, then clamps it into `[lo, hi]`.
pub fn clip_and_scale(grads: &mut Params, scale: f64, lo: f64, hi: f64) {
    assert!(lo < hi, "empty clip range");
    for m in grads.tensors_mut() {
        for g in m.data_mut() {
            *g = (*g * scale).clamp(lo, hi);
        }
    }
}

/// One AdaDelta update on flat buffers; returns the parameter deltas.
pub fn adadelta_update(
    sq_grad: &mut [f64],
    sq_delta: &mut [f64],
    grad: &[f64],
    rho: f64,
    eps: f64,
) -> Vec<f64> {
    let mut out = vec![0.0; grad.len()];
    for k in 0..grad.len() {
        let g = grad[k];
        sq_grad[k] = rho * sq_grad[k] + (1.0 - rho) * g * g;
        let d = -((sq_delta[k] + eps).sqrt() / (sq_grad[k] + eps).sqrt()) * g;
        sq_delta[k] = rho * sq_delta[k] + (1.0 - rho) * d * d;
        out[k] = d;
    }
    out
}

/// Running averages of squared gradients and squared updates.
#[derive(Debug, Clone, PartialEq)]
pub struct AdaDelta {
    pub rho: f64,
    pub epsilon: f64,
    sq_grad: Params,
    sq_delta: Params,
}

impl AdaDelta {
    pub fn new(shape: &Params, rho: f64, epsilon: f64) -> Self {
        AdaDelta {
            rho,
            epsilon,
            sq_grad: shape.zeros_like(),
            sq_delta: shape.zeros_like(),
        }
    }

    /// Applies one update to `params` in place.
    pub fn step(&mut self, params: &mut Params, grads: &Params) {
        let (rho, eps) = (self.rho, self.epsilon);
        let grads = grads.named();
        let sq_g = self.sq_grad.named_mut();
        let sq_d = self.sq_delta.named_mut();
        for ((((_, p), (_, g)), (_, eg)), (_, ed)) in params
            .named_mut()
            .into_iter()
            .zip(grads)
            .zip(sq_g)
            .zip(sq_d)
        {
            let p = p.data_mut();
            let (g, eg, ed) = (g.data(), eg.data_mut(), ed.data_mut());
            for k in 0..p.len() {
                let gk = g[k];
                eg[k] = rho * eg[k] + (1.0 - rho) * gk * gk;
                let d = -((ed[k] + eps).sqrt() / (eg[k] + eps).sqrt()) * gk;
                ed[k] = rho * ed[k] + (1.0 - rho) * d * d;
                p[k] += d;
            }
        }
    }

    pub fn accumulators(&self) -> (&Params, &Params) {
        (&self.sq_grad, &self.sq_delta)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tagger::TaggerConfig;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn xavier_bounds() {
        assert!((xavier_bound(512, 2.34) - (7.02f64 / 512.0).sqrt()).abs() < 1e-15);
        assert!((xavier_bound(512, 2.34) - 0.117_09).abs() < 1e-5);
        assert_eq!(xavier_bound(9, 3.0), 1.0);
    }

    #[test]
    fn xavier_moments() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let m = xavier_init(100, 1000, 512, 2.34, &mut rng);
        let b = xavier_bound(512, 2.34);
        let n = m.data().len() as f64;
        assert!(m.data().iter().all(|v| v.abs() < b));
        let mean = m.data().iter().sum::<f64>() / n;
        let var = m.data().iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
        assert!((var / (b * b / 3.0) - 1.0).abs() < 0.2);
    }

    #[test]
    fn adadelta_first_step() {
        let (mut eg, mut ed) = (vec![0.0], vec![0.0]);
        let d = adadelta_update(&mut eg, &mut ed, &[1.0], 0.9, 1e-5);
        let want = -(1e-5f64).sqrt() / (0.1f64 + 1e-5).sqrt();
        assert!((d[0] - want).abs() < 1e-15);
        assert!((d[0] + 0.009_999_5).abs() < 1e-7);
    }

    #[test]
    fn adadelta_zero_gradient_decays_state() {
        let (mut eg, mut ed) = (vec![0.5, 2.0], vec![0.25, 1.0]);
        let d = adadelta_update(&mut eg, &mut ed, &[0.0, 0.0], 0.9, 1e-5);
        assert_eq!(d, vec![0.0, 0.0]);
        assert!((eg[0] - 0.45).abs() < 1e-15 && (eg[1] - 1.8).abs() < 1e-15);
        assert!((ed[0] - 0.225).abs() < 1e-15 && (ed[1] - 0.9).abs() < 1e-15);
    }

    #[test]
    fn adadelta_descends() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let (mut eg, mut ed) = (vec![0.0; 50], vec![0.0; 50]);
        for _ in 0..5 {
            let g: Vec<f64> = (0..50).map(|_| rng.random_range(-3.0..3.0)).collect();
            let d = adadelta_update(&mut eg, &mut ed, &g, 0.9, 1e-5);
            for (gi, di) in g.iter().zip(&d) {
                if *gi != 0.0 {
                    assert_eq!(gi.signum(), -di.signum());
                }
            }
            assert!(eg.iter().chain(&ed).all(|v| *v >= 0.0));
        }
    }

    #[test]
    fn adadelta_struct_matches_flat_update() {
        let cfg = TaggerConfig::small(4, 2);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut params = crate::tagger::TaggerModel::new(cfg, 3, &mut rng)
            .unwrap()
            .params;
        let start = params.clone();
        let mut grads = params.zeros_like();
        for m in grads.tensors_mut() {
            for v in m.data_mut() {
                *v = rng.random_range(-1.0..1.0);
            }
        }
        let mut opt = AdaDelta::new(&params, 0.9, 1e-5);
        opt.step(&mut params, &grads);
        let g = grads.named()[3].1.data().to_vec();
        let (mut eg, mut ed) = (vec![0.0; g.len()], vec![0.0; g.len()]);
        let d = adadelta_update(&mut eg, &mut ed, &g, 0.9, 1e-5);
        let (before, after) = (start.named()[3].1.data(), params.named()[3].1.data());
        for k in 0..g.len() {
            assert_eq!(after[k], before[k] + d[k]);
        }
    }

    #[test]
    fn scale_then_clip() {
        let mut p = Params::zeros(&TaggerConfig::small(2, 2), 1);
        let data = p.b_out.data_mut();
        data[0] = 5.0;
        data[1] = 200.0;
        data[2] = -200.0;
        clip_and_scale(&mut p, 0.1, -1.0, 1.0);
        assert_eq!(&p.b_out.data()[..3], &[0.5, 1.0, -1.0]);
    }
}
