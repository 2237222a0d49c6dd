//! Neural subword tagger.
//!
//! Each subword is embedded together with its subword-feature embedding,
//! run through a stack of modified LSTM layers whose direction alternates
//! (forward first), and classified over the seven augmented labels. All
//! forward-running layers share one parameter set and all backward-running
//! layers share another.

mod io;
mod lstm;
mod optim;
mod train;

pub use io::load_pretrained_embeddings;
pub use lstm::{lstm_step, run_layer, Direction, LstmParams, Matrix, LSTM_TENSOR_NAMES};
pub use optim::{adadelta_update, clip_and_scale, xavier_bound, xavier_init, AdaDelta};
pub use train::{
    batch_gradients, chunk_example, encode, loss, predict_labels, train, train_model, EpochRecord,
    Example, TrainOutcome,
};

use rand::distr::Distribution;
use rand::Rng;

use crate::error::{Error, Result};
use crate::labeler::LabelTag;
use lstm::{backward_layer, run_layer_cached, StepCache};

pub const N_LABELS: usize = LabelTag::COUNT;

#[derive(Debug, Clone, PartialEq)]
pub struct TaggerConfig {
    pub n_layers: usize,
    pub hidden: usize,
    pub token_emb: usize,
    pub feat_emb: usize,
    pub n_labels: usize,
    pub dropout: f64,
    pub batch: usize,
    pub grad_scale: f64,
    pub grad_clip: (f64, f64),
    pub rho: f64,
    pub epsilon: f64,
    pub xavier_magnitude: f64,
    pub max_len: usize,
}

impl Default for TaggerConfig {
    fn default() -> Self {
        TaggerConfig {
            n_layers: 8,
            hidden: 512,
            token_emb: 256,
            feat_emb: 256,
            n_labels: N_LABELS,
            dropout: 0.1,
            batch: 150,
            grad_scale: 0.1,
            grad_clip: (-1.0, 1.0),
            rho: 0.9,
            epsilon: 1e-5,
            xavier_magnitude: 2.34,
            max_len: 120,
        }
    }
}

impl TaggerConfig {
    /// Same training settings with a smaller network.
    pub fn small(hidden: usize, n_layers: usize) -> Self {
        TaggerConfig {
            n_layers,
            hidden,
            token_emb: hidden / 2,
            feat_emb: hidden - hidden / 2,
            ..TaggerConfig::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |m: String| Err(Error::Config(m));
        if self.token_emb + self.feat_emb != self.hidden {
            return fail(format!(
                "token_emb ({}) + feat_emb ({}) must equal hidden ({}) for the residual path",
                self.token_emb, self.feat_emb, self.hidden
            ));
        }
        if self.n_layers == 0 || !self.n_layers.is_multiple_of(2) {
            return fail(format!(
                "n_layers must be even and positive, got {}",
                self.n_layers
            ));
        }
        if self.n_labels != N_LABELS {
            return fail(format!("n_labels must be {N_LABELS}"));
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return fail(format!("dropout must be in [0, 1), got {}", self.dropout));
        }
        if self.batch == 0 || self.max_len == 0 || self.hidden == 0 {
            return fail("batch, max_len and hidden must be positive".into());
        }
        if self.grad_clip.0 >= self.grad_clip.1 {
            return fail("gradient clip range is empty".into());
        }
        Ok(())
    }
}

/// All trainable tensors. Gradients and optimizer state use the same layout.
#[derive(Debug, Clone, PartialEq)]
pub struct Params {
    pub token_embeddings: Matrix,
    pub feature_embeddings: Matrix,
    pub fwd: LstmParams,
    pub bwd: LstmParams,
    pub w_out: Matrix,
    pub b_out: Matrix,
}

impl Params {
    pub fn zeros(cfg: &TaggerConfig, vocab_size: usize) -> Self {
        Params {
            token_embeddings: Matrix::zeros(vocab_size, cfg.token_emb),
            feature_embeddings: Matrix::zeros(2, cfg.feat_emb),
            fwd: LstmParams::zeros(cfg.hidden),
            bwd: LstmParams::zeros(cfg.hidden),
            w_out: Matrix::zeros(cfg.n_labels, cfg.hidden),
            b_out: Matrix::zeros(1, cfg.n_labels),
        }
    }

    pub fn zeros_like(&self) -> Self {
        let z = |m: &Matrix| Matrix::zeros(m.rows(), m.cols());
        let zl = |p: &LstmParams| LstmParams::zeros(p.hidden());
        Params {
            token_embeddings: z(&self.token_embeddings),
            feature_embeddings: z(&self.feature_embeddings),
            fwd: zl(&self.fwd),
            bwd: zl(&self.bwd),
            w_out: z(&self.w_out),
            b_out: z(&self.b_out),
        }
    }

    /// Tensors with their serialized names, in file order.
    pub fn named(&self) -> Vec<(String, &Matrix)> {
        let mut out = vec![
            ("token_embeddings".to_owned(), &self.token_embeddings),
            ("feature_embeddings".to_owned(), &self.feature_embeddings),
        ];
        for (prefix, p) in [("fwd", &self.fwd), ("bwd", &self.bwd)] {
            for (name, m) in LSTM_TENSOR_NAMES.iter().zip(p.matrices()) {
                out.push((format!("{prefix}.{name}"), m));
            }
        }
        out.push(("W_out".to_owned(), &self.w_out));
        out.push(("b_out".to_owned(), &self.b_out));
        out
    }

    pub fn named_mut(&mut self) -> Vec<(String, &mut Matrix)> {
        let mut out = vec![
            ("token_embeddings".to_owned(), &mut self.token_embeddings),
            (
                "feature_embeddings".to_owned(),
                &mut self.feature_embeddings,
            ),
        ];
        for (prefix, p) in [("fwd", &mut self.fwd), ("bwd", &mut self.bwd)] {
            for (name, m) in LSTM_TENSOR_NAMES.iter().zip(p.matrices_mut()) {
                out.push((format!("{prefix}.{name}"), m));
            }
        }
        out.push(("W_out".to_owned(), &mut self.w_out));
        out.push(("b_out".to_owned(), &mut self.b_out));
        out
    }

    pub fn tensors_mut(&mut self) -> impl Iterator<Item = &mut Matrix> {
        self.named_mut().into_iter().map(|(_, m)| m)
    }

    pub fn fill(&mut self, v: f64) {
        for m in self.tensors_mut() {
            m.fill(v);
        }
    }

    pub fn n_values(&self) -> usize {
        self.named().iter().map(|(_, m)| m.data().len()).sum()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TaggerModel {
    pub config: TaggerConfig,
    pub params: Params,
}

/// Activations of one sequence through the network.
pub(crate) struct ForwardCache {
    layers: Vec<Vec<StepCache>>,
    masks: Option<Vec<Vec<Vec<f64>>>>,
    top: Vec<Vec<f64>>,
    pub(crate) logits: Vec<[f64; N_LABELS]>,
}

pub(crate) fn softmax(logits: &[f64; N_LABELS]) -> [f64; N_LABELS] {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut out = [0.0; N_LABELS];
    let mut sum = 0.0;
    for (o, &z) in out.iter_mut().zip(logits) {
        *o = (z - max).exp();
        sum += *o;
    }
    for o in &mut out {
        *o /= sum;
    }
    out
}

pub(crate) fn log_softmax_at(logits: &[f64; N_LABELS], k: usize) -> f64 {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lse = max + logits.iter().map(|z| (z - max).exp()).sum::<f64>().ln();
    logits[k] - lse
}

impl TaggerModel {
    /// Xavier-initialized model (`"in"` factor); the output bias starts at zero.
    pub fn new(config: TaggerConfig, vocab_size: usize, rng: &mut impl Rng) -> Result<Self> {
        config.validate()?;
        if vocab_size == 0 {
            return Err(Error::Config("vocabulary is empty".into()));
        }
        let mag = config.xavier_magnitude;
        let mut params = Params::zeros(&config, vocab_size);
        for (name, m) in params.named_mut() {
            if name == "b_out" {
                continue;
            }
            let (rows, cols) = m.shape();
            *m = xavier_init(rows, cols, cols, mag, rng);
        }
        Ok(TaggerModel { config, params })
    }

    /// Rejects parameter sets that do not fit the configuration.
    pub fn from_parts(config: TaggerConfig, params: Params) -> Result<Self> {
        config.validate()?;
        let expect = Params::zeros(&config, params.token_embeddings.rows());
        for ((name, a), (_, b)) in params.named().iter().zip(expect.named()) {
            if a.shape() != b.shape() {
                return Err(Error::ShapeMismatch(format!(
                    "{name}: {:?}, expected {:?}",
                    a.shape(),
                    b.shape()
                )));
            }
            if a.data().iter().any(|v| !v.is_finite()) {
                return Err(Error::Format(format!("{name} holds non-finite values")));
            }
        }
        Ok(TaggerModel { config, params })
    }

    pub fn vocab_size(&self) -> usize {
        self.params.token_embeddings.rows()
    }

    fn layer_params(&self, k: usize) -> &LstmParams {
        match Direction::of_layer(k) {
            Direction::Forward => &self.params.fwd,
            Direction::Backward => &self.params.bwd,
        }
    }

    fn check_input(&self, tokens: &[usize], feats: &[usize]) -> Result<()> {
        if tokens.len() != feats.len() {
            return Err(Error::ShapeMismatch(format!(
                "{} tokens but {} features",
                tokens.len(),
                feats.len()
            )));
        }
        if tokens.len() > self.config.max_len {
            return Err(Error::LengthExceeded {
                len: tokens.len(),
                max: self.config.max_len,
            });
        }
        if let Some(&t) = tokens.iter().find(|&&t| t >= self.vocab_size()) {
            return Err(Error::ShapeMismatch(format!("token id {t} out of range")));
        }
        if let Some(&f) = feats.iter().find(|&&f| f >= 2) {
            return Err(Error::ShapeMismatch(format!("feature id {f} out of range")));
        }
        Ok(())
    }

    fn embed(&self, tokens: &[usize], feats: &[usize]) -> Vec<Vec<f64>> {
        tokens
            .iter()
            .zip(feats)
            .map(|(&t, &f)| {
                let mut x = Vec::with_capacity(self.config.hidden);
                x.extend_from_slice(self.params.token_embeddings.row(t));
                x.extend_from_slice(self.params.feature_embeddings.row(f));
                x
            })
            .collect()
    }

    /// Runs the network, keeping every activation. With an RNG, inverted
    /// dropout is applied to the input of every layer.
    pub(crate) fn forward_cached(
        &self,
        tokens: &[usize],
        feats: &[usize],
        dropout_rng: Option<&mut (dyn rand::RngCore + '_)>,
    ) -> Result<ForwardCache> {
        self.check_input(tokens, feats)?;
        let h = self.config.hidden;
        let p = self.config.dropout;
        let mut input = self.embed(tokens, feats);
        let mut layers = Vec::with_capacity(self.config.n_layers);
        let mut masks = match (&dropout_rng, p > 0.0) {
            (Some(_), true) => Some(Vec::with_capacity(self.config.n_layers)),
            _ => None,
        };
        let mut rng = dropout_rng;
        for k in 0..self.config.n_layers {
            if let (Some(ms), Some(rng)) = (masks.as_mut(), rng.as_mut()) {
                let keep = 1.0 / (1.0 - p);
                let bern = rand::distr::Bernoulli::new(1.0 - p).expect("rate checked in config");
                let layer_mask: Vec<Vec<f64>> = input
                    .iter_mut()
                    .map(|x| {
                        let m: Vec<f64> = (0..h)
                            .map(|_| if bern.sample(rng) { keep } else { 0.0 })
                            .collect();
                        for (xi, mi) in x.iter_mut().zip(&m) {
                            *xi *= mi;
                        }
                        m
                    })
                    .collect();
                ms.push(layer_mask);
            }
            let caches = run_layer_cached(self.layer_params(k), &input, Direction::of_layer(k));
            input = caches.iter().map(|s| s.h.clone()).collect();
            layers.push(caches);
        }
        let logits = input
            .iter()
            .map(|hv| {
                let mut z = [0.0; N_LABELS];
                self.params.w_out.matvec_acc(hv, &mut z);
                for (zi, b) in z.iter_mut().zip(self.params.b_out.row(0)) {
                    *zi += b;
                }
                z
            })
            .collect();
        Ok(ForwardCache {
            layers,
            masks,
            top: input,
            logits,
        })
    }

    /// Per-token label distributions (inference, no dropout).
    pub fn forward(&self, tokens: &[usize], feats: &[usize]) -> Result<Vec<[f64; N_LABELS]>> {
        Ok(self
            .forward_cached(tokens, feats, None)?
            .logits
            .iter()
            .map(softmax)
            .collect())
    }

    /// Hidden outputs of every layer, for inspection.
    pub fn layer_outputs(&self, tokens: &[usize], feats: &[usize]) -> Result<Vec<Vec<Vec<f64>>>> {
        let cache = self.forward_cached(tokens, feats, None)?;
        Ok(cache
            .layers
            .iter()
            .map(|l| l.iter().map(|s| s.h.clone()).collect())
            .collect())
    }

    /// Runs layer `k` alone (its shared parameters and direction) on `inputs`.
    pub fn layer_probe(&self, k: usize, inputs: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
        if k >= self.config.n_layers {
            return Err(Error::ShapeMismatch(format!("no layer {k}")));
        }
        run_layer(self.layer_params(k), inputs, Direction::of_layer(k))
    }

    /// Adds `scale · ∂(Σ −log p(gold))/∂θ` for one sequence into `grads`.
    pub(crate) fn backward(
        &self,
        cache: &ForwardCache,
        tokens: &[usize],
        feats: &[usize],
        labels: &[LabelTag],
        scale: f64,
        grads: &mut Params,
    ) {
        let len = tokens.len();
        let mut d_out: Vec<Vec<f64>> = Vec::with_capacity(len);
        for t in 0..len {
            let mut dz = softmax(&cache.logits[t]);
            dz[labels[t].index()] -= 1.0;
            for v in &mut dz {
                *v *= scale;
            }
            grads.w_out.rank1_acc(&dz, &cache.top[t]);
            for (g, d) in grads.b_out.row_mut(0).iter_mut().zip(&dz) {
                *g += d;
            }
            let mut dh = vec![0.0; self.config.hidden];
            self.params.w_out.matvec_t_acc(&dz, &mut dh);
            d_out.push(dh);
        }
        for k in (0..self.config.n_layers).rev() {
            let dir = Direction::of_layer(k);
            let g = match dir {
                Direction::Forward => &mut grads.fwd,
                Direction::Backward => &mut grads.bwd,
            };
            let mut d_in = backward_layer(self.layer_params(k), &cache.layers[k], &d_out, dir, g);
            if let Some(masks) = &cache.masks {
                for (d, m) in d_in.iter_mut().zip(&masks[k]) {
                    for (di, mi) in d.iter_mut().zip(m) {
                        *di *= mi;
                    }
                }
            }
            d_out = d_in;
        }
        let te = self.config.token_emb;
        for ((&tok, &feat), d) in tokens.iter().zip(feats).zip(&d_out) {
            lstm::axpy(grads.token_embeddings.row_mut(tok), 1.0, &d[..te]);
            lstm::axpy(grads.feature_embeddings.row_mut(feat), 1.0, &d[te..]);
        }
    }

    /// Argmax label per token; ties go to the earlier label in `B M E S -B -M -E`.
    pub fn predict_ids(&self, tokens: &[usize], feats: &[usize]) -> Result<Vec<LabelTag>> {
        let cache = self.forward_cached(tokens, feats, None)?;
        Ok(cache.logits.iter().map(argmax_label).collect())
    }
}

pub(crate) fn argmax_label(scores: &[f64; N_LABELS]) -> LabelTag {
    let mut best = 0;
    for k in 1..N_LABELS {
        if scores[k] > scores[best] {
            best = k;
        }
    }
    LabelTag::ALL[best]
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn tiny(seed: u64) -> TaggerModel {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        TaggerModel::new(TaggerConfig::small(8, 2), 20, &mut rng).unwrap()
    }

    #[test]
    fn rows_are_distributions() {
        let m = tiny(1);
        let probs = m.forward(&[1, 5, 19, 0, 3], &[0, 1, 1, 0, 0]).unwrap();
        assert_eq!(probs.len(), 5);
        for row in probs {
            assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-6);
        }
    }

    #[test]
    fn zero_output_layer_is_uniform() {
        let mut m = tiny(2);
        m.params.w_out.fill(0.0);
        m.params.b_out.fill(0.0);
        for row in m.forward(&[1, 2, 3], &[0, 0, 1]).unwrap() {
            for p in row {
                assert!((p - 1.0 / 7.0).abs() < 1e-15);
            }
        }
        assert_eq!(m.predict_ids(&[1, 2], &[0, 0]).unwrap(), [LabelTag::B; 2]);
    }

    #[test]
    fn deterministic_construction_and_output() {
        let (a, b) = (tiny(3), tiny(3));
        assert_eq!(a, b);
        let x = a.forward(&[4, 4, 7], &[1, 0, 1]).unwrap();
        let y = b.forward(&[4, 4, 7], &[1, 0, 1]).unwrap();
        assert_eq!(x, y);
    }

    #[test]
    fn residual_dimension_law() {
        let cfg = TaggerConfig {
            token_emb: 5,
            ..TaggerConfig::small(8, 2)
        };
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert!(matches!(
            TaggerModel::new(cfg, 10, &mut rng),
            Err(Error::Config(_))
        ));
        let odd = TaggerConfig::small(8, 3);
        assert!(TaggerModel::new(odd, 10, &mut rng).is_err());
    }

    #[test]
    fn default_hyperparameters() {
        let c = TaggerConfig::default();
        c.validate().unwrap();
        assert_eq!(
            (c.n_layers, c.hidden, c.token_emb, c.feat_emb),
            (8, 512, 256, 256)
        );
        assert_eq!((c.batch, c.max_len), (150, 120));
        assert_eq!(
            (c.rho, c.epsilon, c.dropout, c.grad_scale),
            (0.9, 1e-5, 0.1, 0.1)
        );
        assert_eq!(c.grad_clip, (-1.0, 1.0));
        assert_eq!(c.xavier_magnitude, 2.34);
    }

    #[test]
    fn input_errors() {
        let m = tiny(4);
        assert!(matches!(
            m.forward(&[1, 2], &[0]),
            Err(Error::ShapeMismatch(_))
        ));
        assert!(matches!(
            m.forward(&[20], &[0]),
            Err(Error::ShapeMismatch(_))
        ));
        assert!(matches!(
            m.forward(&[1], &[2]),
            Err(Error::ShapeMismatch(_))
        ));
        let long = vec![1; 121];
        assert!(matches!(
            m.forward(&long, &vec![0; 121]),
            Err(Error::LengthExceeded { len: 121, max: 120 })
        ));
    }

    #[test]
    fn shared_parameters_follow_direction() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut m = TaggerModel::new(TaggerConfig::small(8, 4), 20, &mut rng).unwrap();
        let inputs: Vec<Vec<f64>> = (0..4)
            .map(|t| (0..8).map(|k| ((t * 8 + k) as f64 * 0.37).sin()).collect())
            .collect();
        let probe = |m: &TaggerModel| -> Vec<Vec<Vec<f64>>> {
            (0..4).map(|k| m.layer_probe(k, &inputs).unwrap()).collect()
        };
        let before = probe(&m);
        m.params
            .fwd
            .w_hc
            .set(0, 0, m.params.fwd.w_hc.get(0, 0) + 0.5);
        let after = probe(&m);
        // layers 1 and 3 (1-based) run forward
        assert_ne!(before[0], after[0]);
        assert_ne!(before[2], after[2]);
        assert_eq!(before[1], after[1]);
        assert_eq!(before[3], after[3]);
    }
}
