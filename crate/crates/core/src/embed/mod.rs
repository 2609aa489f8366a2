//! Growable embedding storage and initialization of rows for symbols that
//! arrive online.
//!
//! Every new symbol is the merge of two components that already have rows,
//! so its row can be built from theirs: by averaging, by compressing their
//! concatenation through an autoencoder bottleneck, or by a seeded uniform
//! draw as the control. Extension appends; existing rows are never touched.

mod autoencoder;

pub mod io;

pub use autoencoder::{
    train_autoencoder, Autoencoder, AutoencoderConfig, AutoencoderGradients, ReconstructionLoss,
    TrainReport,
};

use indexmap::IndexMap;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::bpe::InventoryDelta;
use crate::error::{Error, Result};

/// Symbol → dense vector, in insertion order. Extension appends rows; the
/// index of an existing row never changes.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingMatrix {
    dim: usize,
    rows: IndexMap<String, Vec<f64>>,
}

impl EmbeddingMatrix {
    pub fn new(dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidInput("embedding dim must be positive".to_string()));
        }
        Ok(EmbeddingMatrix {
            dim,
            rows: IndexMap::new(),
        })
    }

    /// Builds a matrix from (symbol, row) pairs in order.
    pub fn from_rows(
        dim: usize,
        rows: impl IntoIterator<Item = (String, Vec<f64>)>,
    ) -> Result<Self> {
        let mut matrix = EmbeddingMatrix::new(dim)?;
        for (symbol, row) in rows {
            matrix.insert(symbol, row)?;
        }
        Ok(matrix)
    }

    fn insert(&mut self, symbol: String, row: Vec<f64>) -> Result<()> {
        if row.len() != self.dim {
            return Err(Error::InvalidInput(format!(
                "row for `{symbol}` has length {}, expected {}",
                row.len(),
                self.dim
            )));
        }
        if self.rows.contains_key(&symbol) {
            return Err(Error::InvalidInput(format!("duplicate symbol `{symbol}`")));
        }
        self.rows.insert(symbol, row);
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn row(&self, symbol: &str) -> Option<&[f64]> {
        self.rows.get(symbol).map(Vec::as_slice)
    }

    pub fn contains(&self, symbol: &str) -> bool {
        self.rows.contains_key(symbol)
    }

    /// Rows in insertion order.
    pub fn iter(&self) -> impl Iterator<Item = (&str, &[f64])> {
        self.rows.iter().map(|(s, v)| (s.as_str(), v.as_slice()))
    }
}

/// How rows for new symbols are produced.
#[derive(Debug, Clone, PartialEq)]
pub enum InitStrategy {
    /// Seeded uniform draw in [-scale, scale]; the control.
    Rand { seed: u64, scale: f64 },
    /// Component-wise mean of the two component rows.
    Avg,
    /// Autoencoder bottleneck over the concatenated component rows.
    Ae(AutoencoderConfig),
}

impl InitStrategy {
    pub fn validate(&self) -> Result<()> {
        match self {
            InitStrategy::Rand { scale, .. } => {
                if !(*scale > 0.0) || !scale.is_finite() {
                    return Err(Error::Configuration(format!(
                        "rand scale must be positive and finite, got {scale}"
                    )));
                }
            }
            InitStrategy::Avg => {}
            InitStrategy::Ae(config) => config.validate()?,
        }
        Ok(())
    }
}

/// Default uniform range for the random control.
pub const DEFAULT_RAND_SCALE: f64 = 0.08;

fn row_rng(seed: u64, symbol_index: u64) -> ChaCha8Rng {
    let mut key = [0u8; 32];
    key[..8].copy_from_slice(&seed.to_le_bytes());
    key[8..16].copy_from_slice(&symbol_index.to_le_bytes());
    ChaCha8Rng::from_seed(key)
}

fn uniform_values(rng: &mut ChaCha8Rng, n: usize, scale: f64) -> Vec<f64> {
    (0..n)
        .map(|_| (2.0 * rng.random::<f64>() - 1.0) * scale)
        .collect()
}

/// A vector of `dim` values drawn uniformly from [-scale, scale] by a
/// generator seeded with (seed, symbol_index). The same arguments always
/// produce the same vector.
pub fn init_random(dim: usize, seed: u64, scale: f64, symbol_index: u64) -> Result<Vec<f64>> {
    if dim == 0 {
        return Err(Error::InvalidInput("dim must be positive".to_string()));
    }
    if !(scale > 0.0) || !scale.is_finite() {
        return Err(Error::InvalidInput(format!(
            "scale must be positive and finite, got {scale}"
        )));
    }
    Ok(uniform_values(&mut row_rng(seed, symbol_index), dim, scale))
}

/// Component-wise mean of two equal-length vectors.
pub fn init_avg(left: &[f64], right: &[f64]) -> Result<Vec<f64>> {
    if left.len() != right.len() {
        return Err(Error::InvalidInput(format!(
            "component length mismatch: {} vs {}",
            left.len(),
            right.len()
        )));
    }
    Ok(left
        .iter()
        .zip(right.iter())
        .map(|(a, b)| (a + b) / 2.0)
        .collect())
}

/// Strategy plus the state it carries across increments. For the autoencoder
/// strategy the net persists here, so reusing one initializer warm-starts
/// training at each extension; a fresh initializer retrains from scratch.
#[derive(Debug, Clone)]
pub struct EmbedInitializer {
    strategy: InitStrategy,
    autoencoder: Option<Autoencoder>,
    last_report: Option<TrainReport>,
}

impl EmbedInitializer {
    pub fn new(strategy: InitStrategy) -> Result<Self> {
        strategy.validate()?;
        Ok(EmbedInitializer {
            strategy,
            autoencoder: None,
            last_report: None,
        })
    }

    /// Resumes with previously trained autoencoder parameters.
    pub fn with_autoencoder(strategy: InitStrategy, net: Autoencoder) -> Result<Self> {
        strategy.validate()?;
        Ok(EmbedInitializer {
            strategy,
            autoencoder: Some(net),
            last_report: None,
        })
    }

    pub fn strategy(&self) -> &InitStrategy {
        &self.strategy
    }

    /// The trained net, once an autoencoder extension has run.
    pub fn autoencoder(&self) -> Option<&Autoencoder> {
        self.autoencoder.as_ref()
    }

    /// Report of the most recent training round, if any.
    pub fn last_report(&self) -> Option<TrainReport> {
        self.last_report
    }
}

/// Appends one row per new symbol, in input order, initialized from the
/// component rows per the strategy. Existing rows are byte-identical in the
/// result. Components may be earlier entries of the same batch; the list from
/// [`crate::bpe::diff_inventory`] satisfies that by construction.
pub fn extend_matrix(
    matrix: &EmbeddingMatrix,
    new_symbols: &[InventoryDelta],
    init: &mut EmbedInitializer,
) -> Result<EmbeddingMatrix> {
    let mut out = matrix.clone();
    if new_symbols.is_empty() {
        return Ok(out);
    }

    let component = |m: &EmbeddingMatrix, delta: &InventoryDelta, which: &str| -> Result<Vec<f64>> {
        m.row(which)
            .map(<[f64]>::to_vec)
            .ok_or_else(|| Error::MissingComponent {
                symbol: delta.symbol.clone(),
                component: which.to_string(),
            })
    };

    match init.strategy.clone() {
        InitStrategy::Avg => {
            for delta in new_symbols {
                let left = component(&out, delta, &delta.left)?;
                let right = component(&out, delta, &delta.right)?;
                out.insert(delta.symbol.clone(), init_avg(&left, &right)?)?;
            }
        }
        InitStrategy::Rand { seed, scale } => {
            for delta in new_symbols {
                component(&out, delta, &delta.left)?;
                component(&out, delta, &delta.right)?;
                let index = out.len() as u64;
                out.insert(
                    delta.symbol.clone(),
                    init_random(out.dim, seed, scale, index)?,
                )?;
            }
        }
        InitStrategy::Ae(config) => {
            if init.autoencoder.is_none() {
                init.autoencoder =
                    Some(Autoencoder::new(out.dim, config.seed, config.loss)?);
            }
            // First pass resolves component rows in rank order (chained
            // symbols get the current net's code) and collects the training
            // pairs for this increment.
            let mut pairs = Vec::with_capacity(new_symbols.len());
            {
                let net = init.autoencoder.as_ref().expect("installed above");
                let mut staged = out.clone();
                for delta in new_symbols {
                    let left = component(&staged, delta, &delta.left)?;
                    let right = component(&staged, delta, &delta.right)?;
                    let provisional = net.encode(&left, &right)?;
                    staged.insert(delta.symbol.clone(), provisional)?;
                    pairs.push((left, right));
                }
            }
            let net = init.autoencoder.as_mut().expect("installed above");
            let report = net.train(&pairs, &config)?;
            init.last_report = Some(report);
            // Second pass writes final rows with the trained net, re-resolving
            // components so chains see trained values.
            let net = init.autoencoder.as_ref().expect("installed above");
            for delta in new_symbols {
                let left = component(&out, delta, &delta.left)?;
                let right = component(&out, delta, &delta.right)?;
                out.insert(delta.symbol.clone(), net.encode(&left, &right)?)?;
            }
        }
    }
    Ok(out)
}

/// Decoder output-layer parameters: one weight row and one bias per symbol.
#[derive(Debug, Clone, PartialEq)]
pub struct OutputLayerParams {
    weight: Vec<Vec<f64>>,
    bias: Vec<f64>,
    hidden_dim: usize,
}

impl OutputLayerParams {
    pub fn new(hidden_dim: usize) -> Result<Self> {
        if hidden_dim == 0 {
            return Err(Error::InvalidInput("hidden dim must be positive".to_string()));
        }
        Ok(OutputLayerParams {
            weight: Vec::new(),
            bias: Vec::new(),
            hidden_dim,
        })
    }

    pub fn from_rows(
        hidden_dim: usize,
        rows: impl IntoIterator<Item = (Vec<f64>, f64)>,
    ) -> Result<Self> {
        let mut params = OutputLayerParams::new(hidden_dim)?;
        for (row, bias) in rows {
            params.push_row(row, bias)?;
        }
        Ok(params)
    }

    fn push_row(&mut self, row: Vec<f64>, bias: f64) -> Result<()> {
        if row.len() != self.hidden_dim {
            return Err(Error::InvalidInput(format!(
                "weight row has length {}, expected {}",
                row.len(),
                self.hidden_dim
            )));
        }
        self.weight.push(row);
        self.bias.push(bias);
        Ok(())
    }

    pub fn hidden_dim(&self) -> usize {
        self.hidden_dim
    }

    /// Number of symbols the layer can produce.
    pub fn len(&self) -> usize {
        self.weight.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weight.is_empty()
    }

    pub fn weight_row(&self, index: usize) -> Option<&[f64]> {
        self.weight.get(index).map(Vec::as_slice)
    }

    pub fn bias_of(&self, index: usize) -> Option<f64> {
        self.bias.get(index).copied()
    }
}

/// Grows the output layer by one (row, bias) per entry of `component_rows`,
/// applying the strategy to the component weight rows. Bias handling: mean of
/// the component biases for Avg and Ae, a fresh draw for Rand.
pub fn extend_output_params(
    params: &OutputLayerParams,
    component_rows: &[(usize, usize)],
    init: &mut EmbedInitializer,
) -> Result<OutputLayerParams> {
    let mut out = params.clone();
    if component_rows.is_empty() {
        return Ok(out);
    }

    let fetch = |p: &OutputLayerParams, idx: usize| -> Result<(Vec<f64>, f64)> {
        match (p.weight_row(idx), p.bias_of(idx)) {
            (Some(row), Some(bias)) => Ok((row.to_vec(), bias)),
            _ => Err(Error::InvalidInput(format!(
                "component row index {idx} out of range ({} rows)",
                p.len()
            ))),
        }
    };

    match init.strategy.clone() {
        InitStrategy::Avg => {
            for &(li, ri) in component_rows {
                let (lrow, lbias) = fetch(&out, li)?;
                let (rrow, rbias) = fetch(&out, ri)?;
                out.push_row(init_avg(&lrow, &rrow)?, (lbias + rbias) / 2.0)?;
            }
        }
        InitStrategy::Rand { seed, scale } => {
            for &(li, ri) in component_rows {
                fetch(&out, li)?;
                fetch(&out, ri)?;
                let index = out.len() as u64;
                let mut rng = row_rng(seed, index);
                let mut values = uniform_values(&mut rng, out.hidden_dim + 1, scale);
                let bias = values.pop().expect("hidden_dim + 1 values");
                out.push_row(values, bias)?;
            }
        }
        InitStrategy::Ae(config) => {
            if init.autoencoder.is_none() {
                init.autoencoder =
                    Some(Autoencoder::new(out.hidden_dim, config.seed, config.loss)?);
            }
            let mut pairs = Vec::with_capacity(component_rows.len());
            let mut biases = Vec::with_capacity(component_rows.len());
            {
                let net = init.autoencoder.as_ref().expect("installed above");
                let mut staged = out.clone();
                for &(li, ri) in component_rows {
                    let (lrow, lbias) = fetch(&staged, li)?;
                    let (rrow, rbias) = fetch(&staged, ri)?;
                    let provisional = net.encode(&lrow, &rrow)?;
                    staged.push_row(provisional, (lbias + rbias) / 2.0)?;
                    pairs.push((lrow, rrow));
                    biases.push((lbias + rbias) / 2.0);
                }
            }
            let net = init.autoencoder.as_mut().expect("installed above");
            let report = net.train(&pairs, &config)?;
            init.last_report = Some(report);
            let net = init.autoencoder.as_ref().expect("installed above");
            for (&(li, ri), bias) in component_rows.iter().zip(biases) {
                let (lrow, _) = fetch(&out, li)?;
                let (rrow, _) = fetch(&out, ri)?;
                out.push_row(net.encode(&lrow, &rrow)?, bias)?;
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn delta(symbol: &str, left: &str, right: &str) -> InventoryDelta {
        InventoryDelta {
            symbol: symbol.to_string(),
            left: left.to_string(),
            right: right.to_string(),
        }
    }

    fn base_matrix() -> EmbeddingMatrix {
        EmbeddingMatrix::from_rows(
            2,
            [
                ("a".to_string(), vec![1.0, 2.0]),
                ("b".to_string(), vec![3.0, 4.0]),
            ],
        )
        .unwrap()
    }

    #[test]
    fn init_random_is_reproducible_and_bounded() {
        let v1 = init_random(16, 7, 0.1, 3).unwrap();
        let v2 = init_random(16, 7, 0.1, 3).unwrap();
        assert_eq!(v1, v2);
        assert!(v1.iter().all(|x| (-0.1..=0.1).contains(x)));
        let other_index = init_random(16, 7, 0.1, 4).unwrap();
        assert_ne!(v1, other_index);
        assert!(init_random(0, 7, 0.1, 0).is_err());
    }

    #[test]
    fn init_random_mean_is_near_zero() {
        // Uniform on [-s, s]: the mean of n draws has σ = s/sqrt(3n).
        let scale = 0.08;
        let n = 100_000;
        let values = init_random(n, 99, scale, 0).unwrap();
        let mean = values.iter().sum::<f64>() / n as f64;
        let sigma = scale / (3.0 * n as f64).sqrt();
        assert!(mean.abs() < 3.0 * sigma, "mean {mean} vs 3σ {}", 3.0 * sigma);
    }

    #[test]
    fn init_avg_is_mean_symmetric_idempotent() {
        assert_eq!(init_avg(&[1.0, 2.0], &[3.0, 4.0]).unwrap(), vec![2.0, 3.0]);
        let e = vec![0.5, -0.25, 7.0];
        assert_eq!(init_avg(&e, &e).unwrap(), e);
        assert_eq!(
            init_avg(&[1.0, 2.0], &[3.0, 4.0]).unwrap(),
            init_avg(&[3.0, 4.0], &[1.0, 2.0]).unwrap()
        );
        assert!(init_avg(&[1.0], &[1.0, 2.0]).is_err());
    }

    #[test]
    fn extend_avg_appends_mean_row() {
        let matrix = base_matrix();
        let mut init = EmbedInitializer::new(InitStrategy::Avg).unwrap();
        let extended = extend_matrix(&matrix, &[delta("ab", "a", "b")], &mut init).unwrap();
        assert_eq!(extended.row("ab").unwrap(), &[2.0, 3.0]);
        assert_eq!(extended.row("a").unwrap(), matrix.row("a").unwrap());
        assert_eq!(extended.len(), 3);
    }

    #[test]
    fn extend_empty_batch_is_identity() {
        let matrix = base_matrix();
        let mut init = EmbedInitializer::new(InitStrategy::Avg).unwrap();
        assert_eq!(extend_matrix(&matrix, &[], &mut init).unwrap(), matrix);
    }

    #[test]
    fn extend_reports_missing_component_by_name() {
        let matrix = base_matrix();
        let mut init = EmbedInitializer::new(InitStrategy::Avg).unwrap();
        let err = extend_matrix(&matrix, &[delta("xy", "x", "y")], &mut init).unwrap_err();
        match err {
            Error::MissingComponent { symbol, component } => {
                assert_eq!(symbol, "xy");
                assert_eq!(component, "x");
            }
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn extend_rejects_duplicate_new_symbol() {
        let matrix = base_matrix();
        let mut init = EmbedInitializer::new(InitStrategy::Avg).unwrap();
        let batch = [delta("ab", "a", "b"), delta("ab", "b", "a")];
        assert!(extend_matrix(&matrix, &batch, &mut init).is_err());
    }

    #[test]
    fn extend_resolves_chained_components() {
        let matrix = base_matrix();
        let mut init = EmbedInitializer::new(InitStrategy::Avg).unwrap();
        let batch = [delta("ab", "a", "b"), delta("abb", "ab", "b")];
        let extended = extend_matrix(&matrix, &batch, &mut init).unwrap();
        // ab = [2,3]; abb = avg(ab, b) = [2.5, 3.5].
        assert_eq!(extended.row("abb").unwrap(), &[2.5, 3.5]);
    }

    #[test]
    fn extend_rand_is_deterministic_per_seed() {
        let matrix = base_matrix();
        let strategy = InitStrategy::Rand {
            seed: 5,
            scale: 0.08,
        };
        let mut i1 = EmbedInitializer::new(strategy.clone()).unwrap();
        let mut i2 = EmbedInitializer::new(strategy).unwrap();
        let batch = [delta("ab", "a", "b")];
        let e1 = extend_matrix(&matrix, &batch, &mut i1).unwrap();
        let e2 = extend_matrix(&matrix, &batch, &mut i2).unwrap();
        assert_eq!(e1, e2);
    }

    #[test]
    fn extend_ae_trains_and_appends_bottleneck_rows() {
        let matrix = base_matrix();
        let mut init =
            EmbedInitializer::new(InitStrategy::Ae(AutoencoderConfig::default())).unwrap();
        let batch = [delta("ab", "a", "b"), delta("ba", "b", "a")];
        let extended = extend_matrix(&matrix, &batch, &mut init).unwrap();
        assert_eq!(extended.len(), 4);
        assert_eq!(extended.row("ab").unwrap().len(), 2);
        let report = init.last_report().unwrap();
        assert!(report.final_loss <= report.initial_loss);
        // The appended row is exactly the trained net's code for the pair.
        let net = init.autoencoder().unwrap();
        let expect = net
            .encode(matrix.row("a").unwrap(), matrix.row("b").unwrap())
            .unwrap();
        assert_eq!(extended.row("ab").unwrap(), expect.as_slice());
    }

    #[test]
    fn output_params_avg_extends_rows_and_biases() {
        let params = OutputLayerParams::from_rows(
            2,
            [(vec![1.0, 0.0], 0.2), (vec![0.0, 1.0], 0.4)],
        )
        .unwrap();
        let mut init = EmbedInitializer::new(InitStrategy::Avg).unwrap();
        let extended = extend_output_params(&params, &[(0, 1)], &mut init).unwrap();
        assert_eq!(extended.len(), 3);
        assert_eq!(extended.weight_row(2).unwrap(), &[0.5, 0.5]);
        assert!((extended.bias_of(2).unwrap() - 0.3).abs() < 1e-15);
    }

    #[test]
    fn output_params_reject_bad_index() {
        let params = OutputLayerParams::from_rows(2, [(vec![1.0, 0.0], 0.0)]).unwrap();
        let mut init = EmbedInitializer::new(InitStrategy::Avg).unwrap();
        assert!(extend_output_params(&params, &[(0, 7)], &mut init).is_err());
    }

    #[test]
    fn output_params_zero_new_is_identity() {
        let params = OutputLayerParams::from_rows(2, [(vec![1.0, 0.0], 0.0)]).unwrap();
        let mut init = EmbedInitializer::new(InitStrategy::Avg).unwrap();
        assert_eq!(extend_output_params(&params, &[], &mut init).unwrap(), params);
    }

    #[test]
    fn output_params_shapes_stay_consistent() {
        let params = OutputLayerParams::from_rows(
            3,
            [(vec![1.0, 0.0, 0.5], 0.1), (vec![0.0, 1.0, 0.5], 0.2)],
        )
        .unwrap();
        for strategy in [
            InitStrategy::Avg,
            InitStrategy::Rand { seed: 1, scale: 0.08 },
            InitStrategy::Ae(AutoencoderConfig {
                epochs: 2,
                ..AutoencoderConfig::default()
            }),
        ] {
            let mut init = EmbedInitializer::new(strategy).unwrap();
            let extended =
                extend_output_params(&params, &[(0, 1), (1, 2)], &mut init).unwrap();
            assert_eq!(extended.len(), 4);
            for i in 0..extended.len() {
                assert_eq!(extended.weight_row(i).unwrap().len(), 3);
                assert!(extended.bias_of(i).is_some());
            }
        }
    }
}
