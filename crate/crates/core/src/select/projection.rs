use ndarray::{s, Array1, Array2, Axis};
use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::cosine::{argmax, dot, norm, CodeEmbeddingSet};
use crate::error::{Error, Result};
use crate::features::Fingerprint;
use crate::nn::{glorot, relu_backward, relu_inplace, slice, slice_mut, softmax_rows, Adam, AdamConfig};
use crate::util::rng;

/// How a projected code vector is scored against the report vector.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScoreMode {
    /// Cosine times the normalized projection magnitude.
    #[default]
    Combined,
    Cosine,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProjectionInit {
    /// Glorot-uniform weights and biases.
    #[default]
    Random,
    /// Start from the pass-through network, so training begins at
    /// combined-similarity selection.
    Identity,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProjectionConfig {
    pub hidden_layers: usize,
    pub epochs: usize,
    pub batch_size: usize,
    pub adam: AdamConfig,
    pub score: ScoreMode,
    pub init: ProjectionInit,
    pub seed: u64,
}

impl Default for ProjectionConfig {
    fn default() -> Self {
        ProjectionConfig {
            hidden_layers: 1,
            epochs: 50,
            batch_size: 32,
            adam: AdamConfig::default(),
            score: ScoreMode::Combined,
            init: ProjectionInit::Random,
            seed: 0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
struct Layer {
    w: Array2<f64>,
    b: Array1<f64>,
}

/// Feed-forward network mapping `[v_act ; v_code]` to a projected code
/// vector of the code dimension. One set of parameters serves every code.
///
/// `layers[0]` takes the concatenated input, the next `hidden_layers - 1`
/// are square hidden layers, and the last one is the linear output.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProjectionModel {
    act_dim: usize,
    code_dim: usize,
    layers: Vec<Layer>,
    score: ScoreMode,
    codes_fingerprint: Fingerprint,
}

struct Forward {
    /// Hidden activations, one `(batch·codes) × code_dim` matrix per layer.
    hidden: Vec<Array2<f64>>,
    projected: Array2<f64>,
}

/// Score of one projected vector `p` against `a`, and optionally `∂s/∂p`.
fn score_and_grad(mode: ScoreMode, a: &[f64], p: &[f64], grad: Option<&mut [f64]>) -> f64 {
    let na = norm(a);
    let n = norm(p);
    if na == 0.0 || n == 0.0 {
        if let Some(g) = grad {
            g.fill(0.0);
        }
        return 0.0;
    }
    let d = dot(a, p);
    match mode {
        ScoreMode::Combined => {
            let n3 = n * n * n;
            let s = d * d.abs() / ((na * na * n * n).sqrt() * n * n);
            if let Some(g) = grad {
                let ca = 2.0 * d.abs() / (na * n3);
                let cp = 3.0 * d * d.abs() / (na * n3 * n * n);
                for ((gi, ai), pi) in g.iter_mut().zip(a).zip(p) {
                    *gi = ca * ai - cp * pi;
                }
            }
            s
        }
        ScoreMode::Cosine => {
            let s = d / (na * n);
            if let Some(g) = grad {
                let ca = 1.0 / (na * n);
                let cp = d / (na * n * n * n);
                for ((gi, ai), pi) in g.iter_mut().zip(a).zip(p) {
                    *gi = ca * ai - cp * pi;
                }
            }
            s
        }
    }
}

impl ProjectionModel {
    pub fn new(act_dim: usize, codes: &CodeEmbeddingSet, config: &ProjectionConfig) -> Result<Self> {
        if !(1..=10).contains(&config.hidden_layers) {
            return Err(Error::Config(format!(
                "projection hidden layers must be in 1..=10, got {}",
                config.hidden_layers
            )));
        }
        if act_dim != codes.dimension() {
            return Err(Error::Dimension {
                expected: codes.dimension(),
                actual: act_dim,
            });
        }
        let mut model = match config.init {
            ProjectionInit::Random => {
                let d = codes.dimension();
                let mut r = rng(config.seed);
                let mut layers = Vec::with_capacity(config.hidden_layers + 1);
                let (w, b) = glorot(act_dim + d, d, &mut r);
                layers.push(Layer { w, b });
                for _ in 0..config.hidden_layers {
                    let (w, b) = glorot(d, d, &mut r);
                    layers.push(Layer { w, b });
                }
                ProjectionModel {
                    act_dim,
                    code_dim: d,
                    layers,
                    score: config.score,
                    codes_fingerprint: codes.fingerprint(),
                }
            }
            ProjectionInit::Identity => {
                let shift = codes.vectors().iter().flatten().fold(0.0f64, |m, x| m.max(x.abs())) + 1.0;
                ProjectionModel::identity(act_dim, codes.dimension(), config.hidden_layers, shift)
            }
        };
        model.score = config.score;
        model.codes_fingerprint = codes.fingerprint();
        Ok(model)
    }

    /// The pass-through network: the report half of the input is ignored and
    /// code vectors with entries above `-shift` come out unchanged.
    pub fn identity(act_dim: usize, code_dim: usize, hidden_layers: usize, shift: f64) -> Self {
        let d = code_dim;
        let mut first = Array2::zeros((d, act_dim + d));
        first.slice_mut(s![.., act_dim..]).assign(&Array2::eye(d));
        let mut layers = vec![Layer {
            w: first,
            b: Array1::from_elem(d, shift),
        }];
        for _ in 1..hidden_layers {
            layers.push(Layer {
                w: Array2::eye(d),
                b: Array1::zeros(d),
            });
        }
        layers.push(Layer {
            w: Array2::eye(d),
            b: Array1::from_elem(d, -shift),
        });
        ProjectionModel {
            act_dim,
            code_dim,
            layers,
            score: ScoreMode::Combined,
            codes_fingerprint: Fingerprint::default(),
        }
    }

    pub fn act_dim(&self) -> usize {
        self.act_dim
    }

    pub fn code_dim(&self) -> usize {
        self.code_dim
    }

    pub fn hidden_layers(&self) -> usize {
        self.layers.len() - 1
    }

    pub fn score_mode(&self) -> ScoreMode {
        self.score
    }

    pub fn set_score_mode(&mut self, mode: ScoreMode) {
        self.score = mode;
    }

    pub fn codes_fingerprint(&self) -> Fingerprint {
        self.codes_fingerprint
    }

    fn check(&self, acts: &Array2<f64>, codes: &CodeEmbeddingSet) -> Result<()> {
        if acts.ncols() != self.act_dim {
            return Err(Error::Dimension {
                expected: self.act_dim,
                actual: acts.ncols(),
            });
        }
        if codes.dimension() != self.code_dim {
            return Err(Error::Dimension {
                expected: self.code_dim,
                actual: codes.dimension(),
            });
        }
        Ok(())
    }

    fn forward(&self, acts: &Array2<f64>, codes: &Array2<f64>) -> Forward {
        let (b, k, d) = (acts.nrows(), codes.nrows(), self.code_dim);
        let first = &self.layers[0];
        let from_act = acts.dot(&first.w.slice(s![.., ..self.act_dim]).t());
        let from_code = codes.dot(&first.w.slice(s![.., self.act_dim..]).t());
        let mut z = Array2::zeros((b * k, d));
        for n in 0..b {
            for i in 0..k {
                let mut row = z.row_mut(n * k + i);
                row.assign(&from_act.row(n));
                row += &from_code.row(i);
                row += &first.b;
            }
        }
        let mut hidden = Vec::with_capacity(self.layers.len() - 1);
        for layer in &self.layers[1..] {
            relu_inplace(&mut z);
            let next = z.dot(&layer.w.t()) + &layer.b;
            hidden.push(std::mem::replace(&mut z, next));
        }
        Forward { hidden, projected: z }
    }

    /// Projected code vectors for one report, one row per code.
    pub fn project(&self, v_act: &[f64], codes: &CodeEmbeddingSet) -> Result<Array2<f64>> {
        let acts = Array2::from_shape_vec((1, v_act.len()), v_act.to_vec()).expect("row shape");
        self.check(&acts, codes)?;
        Ok(self.forward(&acts, &code_matrix(codes)).projected)
    }

    /// Per-code similarity of the report to its projected code vectors, in
    /// the order of `codes`. Codes projected onto the zero vector score 0.
    pub fn forward_scores(&self, v_act: &[f64], codes: &CodeEmbeddingSet) -> Result<Vec<f64>> {
        let p = self.project(v_act, codes)?;
        let scores = p
            .rows()
            .into_iter()
            .map(|row| score_and_grad(self.score, v_act, row.as_slice().expect("row-major"), None))
            .collect::<Vec<_>>();
        if scores.iter().any(|s| !s.is_finite()) {
            return Err(Error::Model("projection produced a non-finite score".into()));
        }
        Ok(scores)
    }

    /// Label index of the best-scoring code; ties go to the earlier label.
    /// Only defined codes can be returned.
    pub fn select(&self, v_act: &[f64], codes: &CodeEmbeddingSet) -> Result<usize> {
        let scores = self.forward_scores(v_act, codes)?;
        Ok(codes.label_indices()[argmax(&scores)])
    }

    fn batch(acts: &[&[f64]]) -> Result<Array2<f64>> {
        let dim = acts.first().map_or(0, |a| a.len());
        let mut m = Array2::zeros((acts.len(), dim));
        for (n, a) in acts.iter().enumerate() {
            if a.len() != dim {
                return Err(Error::Dimension {
                    expected: dim,
                    actual: a.len(),
                });
            }
            m.row_mut(n).assign(&ndarray::ArrayView1::from(*a));
        }
        Ok(m)
    }

    /// Mean softmax cross-entropy of the gold code positions.
    pub fn loss(&self, acts: &[&[f64]], gold: &[usize], codes: &CodeEmbeddingSet) -> Result<f64> {
        Ok(self.loss_and_gradient(acts, gold, codes, false)?.0)
    }

    /// Mean loss over the batch and, with `want_grad`, its gradient with
    /// respect to [`parameters`](Self::parameters) in the same flat order.
    /// `gold` holds positions within `codes`.
    pub fn loss_and_gradient(
        &self,
        acts: &[&[f64]],
        gold: &[usize],
        codes: &CodeEmbeddingSet,
        want_grad: bool,
    ) -> Result<(f64, Vec<f64>)> {
        if acts.is_empty() || acts.len() != gold.len() {
            return Err(Error::Config("projection batch needs one gold code per report".into()));
        }
        if let Some(&g) = gold.iter().find(|&&g| g >= codes.len()) {
            return Err(Error::Config(format!("gold code position {g} outside the code set")));
        }
        let a = Self::batch(acts)?;
        self.check(&a, codes)?;
        let c = code_matrix(codes);
        let grads = self.backward(&a, gold, &c, want_grad);
        Ok((grads.0, grads.1.map(flatten).unwrap_or_default()))
    }

    fn backward(&self, a: &Array2<f64>, gold: &[usize], c: &Array2<f64>, want_grad: bool) -> (f64, Option<Vec<Layer>>) {
        let (b, k, d) = (a.nrows(), c.nrows(), self.code_dim);
        let fwd = self.forward(a, c);
        let mut scores = Array2::zeros((b, k));
        let mut dsdp = Array2::zeros((b * k, d));
        for n in 0..b {
            let an = a.row(n);
            let an = an.as_slice().expect("row-major");
            for i in 0..k {
                let p = fwd.projected.row(n * k + i);
                let mut g = dsdp.row_mut(n * k + i);
                scores[[n, i]] = score_and_grad(
                    self.score,
                    an,
                    p.as_slice().expect("row-major"),
                    Some(g.as_slice_mut().expect("row-major")),
                );
            }
        }
        let mut probs = scores;
        softmax_rows(&mut probs);
        let loss = gold
            .iter()
            .enumerate()
            .map(|(n, &g)| -probs[[n, g]].max(f64::MIN_POSITIVE).ln())
            .sum::<f64>()
            / b as f64;
        if !want_grad {
            return (loss, None);
        }
        for (n, &g) in gold.iter().enumerate() {
            probs[[n, g]] -= 1.0;
        }
        probs /= b as f64;
        let mut delta = dsdp;
        for (mut row, &w) in delta.rows_mut().into_iter().zip(probs.iter()) {
            row *= w;
        }
        let mut grads: Vec<Layer> = Vec::with_capacity(self.layers.len());
        for l in (1..self.layers.len()).rev() {
            let h = &fwd.hidden[l - 1];
            grads.push(Layer {
                w: delta.t().dot(h),
                b: delta.sum_axis(Axis(0)),
            });
            let mut back = delta.dot(&self.layers[l].w);
            relu_backward(&mut back, h);
            delta = back;
        }
        let mut per_act = Array2::<f64>::zeros((b, d));
        let mut per_code = Array2::<f64>::zeros((k, d));
        for n in 0..b {
            for i in 0..k {
                let row = delta.row(n * k + i);
                let mut pa = per_act.row_mut(n);
                pa += &row;
                let mut pc = per_code.row_mut(i);
                pc += &row;
            }
        }
        let mut w = Array2::zeros((d, self.act_dim + d));
        w.slice_mut(s![.., ..self.act_dim]).assign(&per_act.t().dot(a));
        w.slice_mut(s![.., self.act_dim..]).assign(&per_code.t().dot(c));
        grads.push(Layer {
            w,
            b: delta.sum_axis(Axis(0)),
        });
        grads.reverse();
        (loss, Some(grads))
    }

    /// All weights and biases, layer by layer, weights before biases.
    pub fn parameters(&self) -> Vec<f64> {
        flatten(self.layers.clone())
    }

    pub fn set_parameters(&mut self, values: &[f64]) -> Result<()> {
        let total: usize = self.layers.iter().map(|l| l.w.len() + l.b.len()).sum();
        if values.len() != total {
            return Err(Error::Dimension {
                expected: total,
                actual: values.len(),
            });
        }
        let mut at = 0;
        for layer in &mut self.layers {
            for x in layer.w.iter_mut().chain(layer.b.iter_mut()) {
                *x = values[at];
                at += 1;
            }
        }
        Ok(())
    }

    /// Train on `(v_act, gold label index)` pairs. Every gold label must be
    /// one of the candidate codes, so Other-labeled samples are rejected.
    pub fn fit(train: &[(&[f64], usize)], codes: &CodeEmbeddingSet, config: &ProjectionConfig) -> Result<Self> {
        let first = train
            .first()
            .ok_or_else(|| Error::Config("empty projection training set".into()))?;
        let positions = train
            .iter()
            .enumerate()
            .map(|(n, (_, label))| {
                codes.label_indices().iter().position(|l| l == label).ok_or_else(|| {
                    Error::Config(format!(
                        "training sample {n} has label index {label}, which is not a candidate code; \
                         Other-labeled samples must be excluded from projection training"
                    ))
                })
            })
            .collect::<Result<Vec<_>>>()?;
        if config.batch_size == 0 {
            return Err(Error::Config("batch size must be positive".into()));
        }
        let mut model = ProjectionModel::new(first.0.len(), codes, config)?;
        let acts: Vec<&[f64]> = train.iter().map(|(a, _)| *a).collect();
        let all = Self::batch(&acts)?;
        model.check(&all, codes)?;
        let c = code_matrix(codes);
        let sizes: Vec<usize> = model.layers.iter().flat_map(|l| [l.w.len(), l.b.len()]).collect();
        let mut adam = Adam::new(config.adam, &sizes);
        let mut r = rng(crate::util::derive_seed(config.seed, 1, 0));
        let mut order: Vec<usize> = (0..train.len()).collect();
        for _ in 0..config.epochs {
            order.shuffle(&mut r);
            for chunk in order.chunks(config.batch_size) {
                let a = all.select(Axis(0), chunk);
                let gold: Vec<usize> = chunk.iter().map(|&n| positions[n]).collect();
                let (_, grads) = model.backward(&a, &gold, &c, true);
                let grads = grads.expect("gradient requested");
                let params: Vec<&mut [f64]> = model
                    .layers
                    .iter_mut()
                    .flat_map(|l| [slice_mut(&mut l.w), slice_mut(&mut l.b)])
                    .collect();
                let g: Vec<&[f64]> = grads.iter().flat_map(|l| [slice(&l.w), slice(&l.b)]).collect();
                adam.step(params, g);
            }
        }
        if model.parameters().iter().any(|x| !x.is_finite()) {
            return Err(Error::Model("projection training diverged".into()));
        }
        Ok(model)
    }
}

fn code_matrix(codes: &CodeEmbeddingSet) -> Array2<f64> {
    let d = codes.dimension();
    Array2::from_shape_vec((codes.len(), d), codes.vectors().concat()).expect("uniform code dimension")
}

fn flatten(layers: Vec<Layer>) -> Vec<f64> {
    layers.into_iter().flat_map(|l| l.w.into_iter().chain(l.b)).collect()
}
