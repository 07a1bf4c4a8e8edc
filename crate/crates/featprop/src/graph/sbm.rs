//! Stochastic block model generator, used as a desk-scale test fixture.

use super::{Dataset, FeatureMatrix, Graph, GraphError, LabelVector};
use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SbmError {
    #[error("probability {0} is outside [0, 1]")]
    InvalidProbability(f64),
    #[error("need at least 2 blocks, got {0}")]
    TooFewBlocks(usize),
    #[error("block sizes must be positive")]
    EmptyBlock,
    #[error("feature noise stddev {0} must be finite and nonnegative")]
    InvalidNoise(f64),
    #[error(transparent)]
    Graph(#[from] GraphError),
}

#[derive(Debug, Clone)]
pub struct SbmConfig {
    pub blocks: Vec<usize>,
    pub p_in: f64,
    pub p_out: f64,
    /// Stddev of the gaussian noise added to the one-hot block features.
    pub feature_noise: f64,
    pub seed: u64,
}

/// Generates a stochastic block model dataset: node label = block id,
/// features = one-hot(block) + gaussian noise. Deterministic per seed.
pub fn generate_sbm(cfg: &SbmConfig) -> Result<Dataset, SbmError> {
    if cfg.blocks.len() < 2 {
        return Err(SbmError::TooFewBlocks(cfg.blocks.len()));
    }
    if cfg.blocks.iter().any(|&b| b == 0) {
        return Err(SbmError::EmptyBlock);
    }
    for p in [cfg.p_in, cfg.p_out] {
        if !(0.0..=1.0).contains(&p) || p.is_nan() {
            return Err(SbmError::InvalidProbability(p));
        }
    }
    if !cfg.feature_noise.is_finite() || cfg.feature_noise < 0.0 {
        return Err(SbmError::InvalidNoise(cfg.feature_noise));
    }

    let n: usize = cfg.blocks.iter().sum();
    let n_blocks = cfg.blocks.len();
    let mut block_of = Vec::with_capacity(n);
    for (b, &size) in cfg.blocks.iter().enumerate() {
        block_of.extend(std::iter::repeat(b).take(size));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut edges = Vec::new();
    for i in 0..n {
        for j in (i + 1)..n {
            let p = if block_of[i] == block_of[j] { cfg.p_in } else { cfg.p_out };
            let present = if p >= 1.0 {
                true
            } else if p <= 0.0 {
                false
            } else {
                rng.random::<f64>() < p
            };
            if present {
                edges.push((i, j));
            }
        }
    }
    let graph = Graph::from_edges(n, edges)?;

    let mut values = Array2::<f64>::zeros((n, n_blocks));
    for i in 0..n {
        values[(i, block_of[i])] = 1.0;
    }
    if cfg.feature_noise > 0.0 {
        let normal = Normal::new(0.0, cfg.feature_noise).expect("validated stddev");
        for i in 0..n {
            for j in 0..n_blocks {
                values[(i, j)] += normal.sample(&mut rng);
            }
        }
    }
    let features = FeatureMatrix::new(values)?;
    let labels = LabelVector::new(block_of, n_blocks)?;
    let name = format!("sbm-{}x{}-seed{}", cfg.blocks.len(), cfg.blocks[0], cfg.seed);
    Ok(Dataset::new(graph, features, labels, name)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn extreme_probabilities_force_cliques() {
        let cfg = SbmConfig {
            blocks: vec![50, 50],
            p_in: 1.0,
            p_out: 0.0,
            feature_noise: 0.0,
            seed: 7,
        };
        let ds = generate_sbm(&cfg).unwrap();
        // Two disjoint 50-cliques: 2 * C(50, 2) edges.
        assert_eq!(ds.graph.n_edges(), 2 * 50 * 49 / 2);
        assert!(ds
            .graph
            .edges()
            .iter()
            .all(|&(i, j)| ds.labels.label(i) == ds.labels.label(j)));
        assert_eq!(ds.features.row(0)[0], 1.0);
        assert_eq!(ds.features.row(99)[1], 1.0);
    }

    #[test]
    fn within_block_edge_count_near_binomial_mean() {
        let cfg = SbmConfig {
            blocks: vec![50, 50],
            p_in: 0.2,
            p_out: 0.02,
            feature_noise: 0.1,
            seed: 11,
        };
        let ds = generate_sbm(&cfg).unwrap();
        let within = ds
            .graph
            .edges()
            .iter()
            .filter(|&&(i, j)| ds.labels.label(i) == ds.labels.label(j))
            .count() as f64;
        // 2 blocks * C(50,2) trials at p = 0.2: mean 490, sigma = sqrt(392).
        let mean = 2.0 * 1225.0 * 0.2;
        let sigma = (2.0_f64 * 1225.0 * 0.2 * 0.8).sqrt();
        assert!(
            (within - mean).abs() <= 4.0 * sigma,
            "within-block edge count {within} outside {mean} +/- 4*{sigma:.1}"
        );
    }

    #[test]
    fn same_seed_is_deterministic() {
        let cfg = SbmConfig {
            blocks: vec![20, 30],
            p_in: 0.3,
            p_out: 0.05,
            feature_noise: 0.5,
            seed: 42,
        };
        let a = generate_sbm(&cfg).unwrap();
        let b = generate_sbm(&cfg).unwrap();
        assert_eq!(a, b);
        let c = generate_sbm(&SbmConfig { seed: 43, ..cfg }).unwrap();
        assert_ne!(a.graph.edges(), c.graph.edges());
    }

    #[test]
    fn rejects_bad_config() {
        let base = SbmConfig {
            blocks: vec![5, 5],
            p_in: 0.5,
            p_out: 0.1,
            feature_noise: 0.0,
            seed: 0,
        };
        assert!(generate_sbm(&SbmConfig { blocks: vec![10], ..base.clone() }).is_err());
        assert!(generate_sbm(&SbmConfig { p_in: 1.5, ..base.clone() }).is_err());
        assert!(generate_sbm(&SbmConfig { feature_noise: -1.0, ..base }).is_err());
    }
}
