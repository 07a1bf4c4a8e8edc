//! From-scratch 2-layer GCN and SGC: forward pass, analytic gradients,
//! Adam with L2 weight decay, and full-batch training.
//!
//! The GCN computes `H = ReLU(S X T0)`, `logits = S H T1`, predictions
//! `softmax(logits)`. The SGC variant removes the activation so the logits
//! become `(S^2 X) T0 T1`. Everything runs in f64 and is deterministic per
//! seed; `S X` (and `S^2 X` for SGC) are fixed throughout training, so they
//! are computed once up front.

pub mod metrics;

use crate::graph::{Dataset, FeatureMatrix, GraphError, LabelVector, NodeSet, NormalizedAdjacency};
use ndarray::{Array2, Zip};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::fmt;
use std::path::Path;
use std::str::FromStr;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum GcnError {
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("non-finite model parameter detected")]
    NonFiniteParameter,
    #[error("non-finite gradient")]
    NonFiniteGradient,
    #[error("training diverged at epoch {epoch}")]
    TrainingDiverged { epoch: usize },
    #[error("training pool must not be empty")]
    EmptyPool,
    #[error("node index {index} out of range for {n_nodes} nodes")]
    IndexOutOfRange { index: usize, n_nodes: usize },
    #[error("invalid config: {0}")]
    InvalidConfig(String),
    #[error("checkpoint error: {0}")]
    Checkpoint(String),
    #[error("io error on {path}: {source}")]
    Io {
        path: std::path::PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Graph(#[from] GraphError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GcnVariant {
    Gcn,
    Sgc,
}

impl FromStr for GcnVariant {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "gcn" => Ok(GcnVariant::Gcn),
            "sgc" => Ok(GcnVariant::Sgc),
            other => Err(format!("unknown model variant '{other}' (expected gcn or sgc)")),
        }
    }
}

impl fmt::Display for GcnVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GcnVariant::Gcn => write!(f, "gcn"),
            GcnVariant::Sgc => write!(f, "sgc"),
        }
    }
}

/// Two parameter matrices: `theta0` (d x h) and `theta1` (h x C).
#[derive(Debug, Clone, PartialEq)]
pub struct GcnModel {
    theta0: Array2<f64>,
    theta1: Array2<f64>,
    variant: GcnVariant,
}

impl GcnModel {
    pub fn from_parameters(
        theta0: Array2<f64>,
        theta1: Array2<f64>,
        variant: GcnVariant,
    ) -> Result<Self, GcnError> {
        if theta0.ncols() != theta1.nrows() {
            return Err(GcnError::ShapeMismatch(format!(
                "theta0 is {}x{} but theta1 is {}x{}",
                theta0.nrows(),
                theta0.ncols(),
                theta1.nrows(),
                theta1.ncols()
            )));
        }
        let model = GcnModel { theta0, theta1, variant };
        model.check_finite()?;
        Ok(model)
    }

    /// Glorot-uniform initialization, seeded.
    pub fn glorot(
        in_dim: usize,
        hidden: usize,
        n_classes: usize,
        variant: GcnVariant,
        seed: u64,
    ) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut glorot_matrix = |rows: usize, cols: usize| {
            let limit = (6.0 / (rows + cols) as f64).sqrt();
            let mut m = Array2::<f64>::zeros((rows, cols));
            for v in m.iter_mut() {
                *v = rng.random::<f64>() * 2.0 * limit - limit;
            }
            m
        };
        let theta0 = glorot_matrix(in_dim, hidden);
        let theta1 = glorot_matrix(hidden, n_classes);
        GcnModel { theta0, theta1, variant }
    }

    pub fn variant(&self) -> GcnVariant {
        self.variant
    }

    pub fn in_dim(&self) -> usize {
        self.theta0.nrows()
    }

    pub fn hidden_size(&self) -> usize {
        self.theta0.ncols()
    }

    pub fn n_classes(&self) -> usize {
        self.theta1.ncols()
    }

    pub fn theta0(&self) -> &Array2<f64> {
        &self.theta0
    }

    pub fn theta1(&self) -> &Array2<f64> {
        &self.theta1
    }

    fn check_finite(&self) -> Result<(), GcnError> {
        if self.theta0.iter().chain(self.theta1.iter()).all(|v| v.is_finite()) {
            Ok(())
        } else {
            Err(GcnError::NonFiniteParameter)
        }
    }

    /// Writes the checkpoint format: a versioned JSON header plus row-major
    /// parameter values.
    pub fn save_json(&self, path: &Path) -> Result<(), GcnError> {
        let doc = CheckpointFile {
            format: CHECKPOINT_FORMAT.to_string(),
            version: CHECKPOINT_VERSION,
            variant: self.variant,
            theta0: MatrixJson::from_array(&self.theta0),
            theta1: MatrixJson::from_array(&self.theta1),
        };
        let text = serde_json::to_string(&doc).expect("checkpoint serialization cannot fail");
        std::fs::write(path, text).map_err(|source| GcnError::Io {
            path: path.to_path_buf(),
            source,
        })
    }

    pub fn load_json(path: &Path) -> Result<Self, GcnError> {
        let text = std::fs::read_to_string(path).map_err(|source| GcnError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let doc: CheckpointFile = serde_json::from_str(&text)
            .map_err(|e| GcnError::Checkpoint(format!("invalid checkpoint json: {e}")))?;
        if doc.format != CHECKPOINT_FORMAT {
            return Err(GcnError::Checkpoint(format!("unknown format '{}'", doc.format)));
        }
        if doc.version != CHECKPOINT_VERSION {
            return Err(GcnError::Checkpoint(format!("unsupported version {}", doc.version)));
        }
        GcnModel::from_parameters(doc.theta0.into_array()?, doc.theta1.into_array()?, doc.variant)
    }
}

const CHECKPOINT_FORMAT: &str = "featprop-model";
const CHECKPOINT_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct CheckpointFile {
    format: String,
    version: u32,
    variant: GcnVariant,
    theta0: MatrixJson,
    theta1: MatrixJson,
}

#[derive(Serialize, Deserialize)]
struct MatrixJson {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl MatrixJson {
    fn from_array(m: &Array2<f64>) -> Self {
        MatrixJson {
            rows: m.nrows(),
            cols: m.ncols(),
            data: m.iter().copied().collect(),
        }
    }

    fn into_array(self) -> Result<Array2<f64>, GcnError> {
        Array2::from_shape_vec((self.rows, self.cols), self.data)
            .map_err(|e| GcnError::Checkpoint(format!("bad matrix shape: {e}")))
    }
}

/// Training hyperparameters. Defaults: lr 0.01, weight decay 5e-4 (first
/// layer only), 200 epochs, Adam betas (0.9, 0.999), 16 hidden units.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub weight_decay: f64,
    pub epochs: usize,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub seed: u64,
    pub hidden_size: usize,
    /// Apply weight decay to both layers instead of only the first.
    pub decay_all_layers: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            learning_rate: 0.01,
            weight_decay: 5e-4,
            epochs: 200,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            seed: 0,
            hidden_size: 16,
            decay_all_layers: false,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), GcnError> {
        let bad = |msg: String| Err(GcnError::InvalidConfig(msg));
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return bad(format!("learning_rate {} must be positive", self.learning_rate));
        }
        if !(self.weight_decay >= 0.0 && self.weight_decay.is_finite()) {
            return bad(format!("weight_decay {} must be nonnegative", self.weight_decay));
        }
        for (name, beta) in [("beta1", self.beta1), ("beta2", self.beta2)] {
            if !(beta > 0.0 && beta < 1.0) {
                return bad(format!("{name} {beta} must be in (0, 1)"));
            }
        }
        if !(self.epsilon > 0.0 && self.epsilon.is_finite()) {
            return bad(format!("epsilon {} must be positive", self.epsilon));
        }
        if self.hidden_size == 0 {
            return bad("hidden_size must be at least 1".into());
        }
        Ok(())
    }
}

/// Adam moment accumulators for the two parameter matrices.
#[derive(Debug, Clone)]
pub struct AdamState {
    m0: Array2<f64>,
    v0: Array2<f64>,
    m1: Array2<f64>,
    v1: Array2<f64>,
    t: u64,
}

impl AdamState {
    pub fn new(model: &GcnModel) -> Self {
        AdamState {
            m0: Array2::zeros(model.theta0.raw_dim()),
            v0: Array2::zeros(model.theta0.raw_dim()),
            m1: Array2::zeros(model.theta1.raw_dim()),
            v1: Array2::zeros(model.theta1.raw_dim()),
            t: 0,
        }
    }

    pub fn step_count(&self) -> u64 {
        self.t
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub theta0: Array2<f64>,
    pub theta1: Array2<f64>,
}

/// One bias-corrected Adam update, applied in place.
pub fn adam_step(
    state: &mut AdamState,
    model: &mut GcnModel,
    grads: &Gradients,
    cfg: &TrainConfig,
) -> Result<(), GcnError> {
    if grads.theta0.raw_dim() != model.theta0.raw_dim()
        || grads.theta1.raw_dim() != model.theta1.raw_dim()
    {
        return Err(GcnError::ShapeMismatch("gradient shapes do not match parameters".into()));
    }
    if !grads.theta0.iter().chain(grads.theta1.iter()).all(|v| v.is_finite()) {
        return Err(GcnError::NonFiniteGradient);
    }
    state.t += 1;
    let bc1 = 1.0 - cfg.beta1.powi(state.t as i32);
    let bc2 = 1.0 - cfg.beta2.powi(state.t as i32);
    let update = |theta: &mut Array2<f64>, m: &mut Array2<f64>, v: &mut Array2<f64>, g: &Array2<f64>| {
        Zip::from(theta).and(m).and(v).and(g).for_each(|t, m, v, &g| {
            *m = cfg.beta1 * *m + (1.0 - cfg.beta1) * g;
            *v = cfg.beta2 * *v + (1.0 - cfg.beta2) * g * g;
            let m_hat = *m / bc1;
            let v_hat = *v / bc2;
            *t -= cfg.learning_rate * m_hat / (v_hat.sqrt() + cfg.epsilon);
        });
    };
    update(&mut model.theta0, &mut state.m0, &mut state.v0, &grads.theta0);
    update(&mut model.theta1, &mut state.m1, &mut state.v1, &grads.theta1);
    Ok(())
}

/// Fixed products that never change during training: `a0 = S X`, and for
/// SGC additionally `S^2 X`. Build once and share across trainings on the
/// same dataset.
#[derive(Debug, Clone)]
pub struct PreparedInputs {
    a0: Array2<f64>,
    sgc_base: Option<Array2<f64>>,
    variant: GcnVariant,
}

impl PreparedInputs {
    pub fn new(
        s: &NormalizedAdjacency,
        x: &FeatureMatrix,
        variant: GcnVariant,
    ) -> Result<Self, GcnError> {
        let a0 = s.matmul(&x.matrix().view())?;
        let sgc_base = match variant {
            GcnVariant::Gcn => None,
            GcnVariant::Sgc => Some(s.matmul(&a0.view())?),
        };
        Ok(PreparedInputs { a0, sgc_base, variant })
    }

    pub fn variant(&self) -> GcnVariant {
        self.variant
    }

    pub fn n_nodes(&self) -> usize {
        self.a0.nrows()
    }

    pub fn in_dim(&self) -> usize {
        self.a0.ncols()
    }
}

/// Predicted probabilities plus the intermediate representations.
#[derive(Debug, Clone)]
pub struct ForwardPass {
    /// Row-softmax of the logits; each row sums to 1.
    pub probabilities: Array2<f64>,
    /// GCN: post-ReLU first-layer output (n x h). SGC: `(S^2 X) T0`.
    pub hidden: Array2<f64>,
    /// Pre-softmax final-layer scores (n x C).
    pub logits: Array2<f64>,
}

fn row_softmax(logits: &Array2<f64>) -> Array2<f64> {
    let mut probs = logits.clone();
    for mut row in probs.rows_mut() {
        let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mut sum = 0.0;
        for v in row.iter_mut() {
            *v = (*v - max).exp();
            sum += *v;
        }
        for v in row.iter_mut() {
            *v /= sum;
        }
    }
    probs
}

fn forward_prepared_inner(
    model: &GcnModel,
    s: &NormalizedAdjacency,
    prep: &PreparedInputs,
) -> Result<ForwardPass, GcnError> {
    model.check_finite()?;
    if prep.variant != model.variant {
        return Err(GcnError::InvalidConfig(format!(
            "prepared inputs are for {} but model is {}",
            prep.variant, model.variant
        )));
    }
    if prep.in_dim() != model.in_dim() {
        return Err(GcnError::ShapeMismatch(format!(
            "features have {} columns but theta0 has {} rows",
            prep.in_dim(),
            model.in_dim()
        )));
    }
    match model.variant {
        GcnVariant::Gcn => {
            let pre_activation = prep.a0.dot(&model.theta0);
            let hidden = pre_activation.mapv(|v| v.max(0.0));
            let aggregated = s.matmul(&hidden.view())?;
            let logits = aggregated.dot(&model.theta1);
            let probabilities = row_softmax(&logits);
            Ok(ForwardPass { probabilities, hidden, logits })
        }
        GcnVariant::Sgc => {
            let base = prep.sgc_base.as_ref().expect("prepared for sgc");
            let hidden = base.dot(&model.theta0);
            let logits = hidden.dot(&model.theta1);
            let probabilities = row_softmax(&logits);
            Ok(ForwardPass { probabilities, hidden, logits })
        }
    }
}

/// Full forward pass from raw features.
pub fn forward(
    model: &GcnModel,
    s: &NormalizedAdjacency,
    x: &FeatureMatrix,
) -> Result<ForwardPass, GcnError> {
    let prep = PreparedInputs::new(s, x, model.variant)?;
    forward_prepared_inner(model, s, &prep)
}

/// Forward pass reusing precomputed `S X` / `S^2 X`.
pub fn forward_prepared(
    model: &GcnModel,
    s: &NormalizedAdjacency,
    prep: &PreparedInputs,
) -> Result<ForwardPass, GcnError> {
    forward_prepared_inner(model, s, prep)
}

fn validate_pool(pool: &NodeSet, n_nodes: usize) -> Result<(), GcnError> {
    if pool.is_empty() {
        return Err(GcnError::EmptyPool);
    }
    if let Some(&bad) = pool.iter().find(|&&i| i >= n_nodes) {
        return Err(GcnError::IndexOutOfRange { index: bad, n_nodes });
    }
    Ok(())
}

fn loss_grads_prepared(
    model: &GcnModel,
    s: &NormalizedAdjacency,
    prep: &PreparedInputs,
    labels: &LabelVector,
    train_idx: &NodeSet,
    weight_decay: f64,
    decay_all_layers: bool,
) -> Result<(f64, Gradients), GcnError> {
    let n = prep.n_nodes();
    validate_pool(train_idx, n)?;
    if labels.len() != n {
        return Err(GcnError::ShapeMismatch(format!(
            "{} labels for {n} nodes",
            labels.len()
        )));
    }
    if labels.n_classes() != model.n_classes() {
        return Err(GcnError::ShapeMismatch(format!(
            "model predicts {} classes but labels have {}",
            model.n_classes(),
            labels.n_classes()
        )));
    }
    let pass = forward_prepared_inner(model, s, prep)?;
    let m = train_idx.len() as f64;

    // Cross-entropy over the pool, via log-sum-exp for stability.
    let mut ce = 0.0;
    for &i in train_idx {
        let row = pass.logits.row(i);
        let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let lse = max + row.iter().map(|v| (v - max).exp()).sum::<f64>().ln();
        ce -= row[labels.label(i)] - lse;
    }
    let mut loss = ce / m;

    // dL/dlogits, nonzero only on pool rows.
    let mut g_logits = Array2::<f64>::zeros(pass.logits.raw_dim());
    for &i in train_idx {
        let mut row = g_logits.row_mut(i);
        row.assign(&pass.probabilities.row(i));
        row[labels.label(i)] -= 1.0;
        row.mapv_inplace(|v| v / m);
    }

    let (mut d_theta0, mut d_theta1) = match model.variant {
        GcnVariant::Gcn => {
            let aggregated = s.matmul(&pass.hidden.view())?;
            let d_theta1 = aggregated.t().dot(&g_logits);
            let d_aggregated = g_logits.dot(&model.theta1.t());
            let d_hidden = s.matmul(&d_aggregated.view())?;
            let mut d_pre = d_hidden;
            // hidden = max(u, 0), so hidden > 0 marks exactly the active units.
            Zip::from(&mut d_pre).and(&pass.hidden).for_each(|g, &h| {
                if h <= 0.0 {
                    *g = 0.0;
                }
            });
            let d_theta0 = prep.a0.t().dot(&d_pre);
            (d_theta0, d_theta1)
        }
        GcnVariant::Sgc => {
            let base = prep.sgc_base.as_ref().expect("prepared for sgc");
            let d_theta1 = pass.hidden.t().dot(&g_logits);
            let d_hidden = g_logits.dot(&model.theta1.t());
            let d_theta0 = base.t().dot(&d_hidden);
            (d_theta0, d_theta1)
        }
    };

    if weight_decay > 0.0 {
        loss += 0.5 * weight_decay * model.theta0.iter().map(|v| v * v).sum::<f64>();
        d_theta0.scaled_add(weight_decay, &model.theta0);
        if decay_all_layers {
            loss += 0.5 * weight_decay * model.theta1.iter().map(|v| v * v).sum::<f64>();
            d_theta1.scaled_add(weight_decay, &model.theta1);
        }
    }

    Ok((loss, Gradients { theta0: d_theta0, theta1: d_theta1 }))
}

/// Mean cross-entropy over `train_idx` plus `weight_decay/2 * |theta0|_F^2`,
/// with analytic gradients. Weight decay touches only the first layer here;
/// training can extend it to both via [`TrainConfig::decay_all_layers`].
pub fn loss_and_gradients(
    model: &GcnModel,
    s: &NormalizedAdjacency,
    x: &FeatureMatrix,
    labels: &LabelVector,
    train_idx: &NodeSet,
    weight_decay: f64,
) -> Result<(f64, Gradients), GcnError> {
    let prep = PreparedInputs::new(s, x, model.variant)?;
    loss_grads_prepared(model, s, &prep, labels, train_idx, weight_decay, false)
}

/// Full-batch training on the pool: Glorot init seeded by `cfg.seed`,
/// `cfg.epochs` Adam steps, no early stopping. Returns the final-epoch model.
pub fn train(
    ds: &Dataset,
    s: &NormalizedAdjacency,
    pool: &NodeSet,
    cfg: &TrainConfig,
    variant: GcnVariant,
) -> Result<GcnModel, GcnError> {
    let prep = PreparedInputs::new(s, &ds.features, variant)?;
    train_prepared(&prep, s, &ds.labels, pool, cfg)
}

/// [`train`] against prebuilt [`PreparedInputs`].
pub fn train_prepared(
    prep: &PreparedInputs,
    s: &NormalizedAdjacency,
    labels: &LabelVector,
    pool: &NodeSet,
    cfg: &TrainConfig,
) -> Result<GcnModel, GcnError> {
    cfg.validate()?;
    validate_pool(pool, prep.n_nodes())?;
    let mut model = GcnModel::glorot(
        prep.in_dim(),
        cfg.hidden_size,
        labels.n_classes(),
        prep.variant,
        cfg.seed,
    );
    let mut adam = AdamState::new(&model);
    for epoch in 0..cfg.epochs {
        let (loss, grads) = loss_grads_prepared(
            &model,
            s,
            prep,
            labels,
            pool,
            cfg.weight_decay,
            cfg.decay_all_layers,
        )?;
        if !loss.is_finite() {
            return Err(GcnError::TrainingDiverged { epoch });
        }
        match adam_step(&mut adam, &mut model, &grads, cfg) {
            Ok(()) => {}
            Err(GcnError::NonFiniteGradient) => return Err(GcnError::TrainingDiverged { epoch }),
            Err(e) => return Err(e),
        }
        if model.check_finite().is_err() {
            return Err(GcnError::TrainingDiverged { epoch });
        }
    }
    Ok(model)
}
