//! Sum-pooled embeddings and the closed-form ridge readout.
//!
//! Pooling sums the vertex columns of each final-time state; the blocks
//! are concatenated in fixed group-major order. Training solves
//! `W_out = Y C^T (C C^T + gamma I)^{-1}` with a constant-1 row appended
//! to every embedding so the bias falls out of the same closed form.

use std::fs;
use std::path::Path;

use nalgebra::{Cholesky, DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::reservoir_encoder::VertexEmbedding;

/// Concatenated sum-pooled vector, length `N_R * N_G * N_L`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PooledEmbedding(pub DVector<f64>);

impl PooledEmbedding {
    pub fn dim(&self) -> usize {
        self.0.len()
    }
}

/// Trained linear readout.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReadoutModel {
    /// `num_classes x embedding_dim`.
    pub weights: DMatrix<f64>,
    pub bias: DVector<f64>,
    pub regularization: f64,
    pub num_classes: usize,
}

/// Sum the vertex columns of one state matrix.
pub fn sum_pool(state: &VertexEmbedding) -> DVector<f64> {
    let mut out = DVector::zeros(state.nrows());
    for col in state.column_iter() {
        out += col;
    }
    out
}

/// Pool every grid cell and concatenate in grid order.
pub fn build_embedding(final_states: &[VertexEmbedding]) -> Result<PooledEmbedding> {
    if final_states.is_empty() {
        return Err(Error::Parameter("empty state grid".into()));
    }
    let n_r = final_states[0].nrows();
    if final_states.iter().any(|s| s.nrows() != n_r) {
        return Err(Error::Parameter("state grid rows differ across cells".into()));
    }
    let mut c = DVector::zeros(n_r * final_states.len());
    for (idx, state) in final_states.iter().enumerate() {
        c.rows_mut(idx * n_r, n_r).copy_from(&sum_pool(state));
    }
    Ok(PooledEmbedding(c))
}

/// Ridge fit; `with_bias` controls the constant-1 augmentation row.
pub fn fit_with_options(
    embeddings: &[PooledEmbedding],
    labels: &[usize],
    gamma: f64,
    num_classes: usize,
    with_bias: bool,
) -> Result<ReadoutModel> {
    if embeddings.is_empty() || embeddings.len() != labels.len() {
        return Err(Error::Parameter(
            "embeddings and labels must be nonempty and equal length".into(),
        ));
    }
    if gamma < 0.0 {
        return Err(Error::Parameter("gamma must be >= 0".into()));
    }
    let dim = embeddings[0].dim();
    if embeddings.iter().any(|e| e.dim() != dim) {
        return Err(Error::Parameter("embedding dimensions differ".into()));
    }
    let mut class_seen = vec![false; num_classes];
    for &y in labels {
        if y >= num_classes {
            return Err(Error::Parameter(format!(
                "label {y} >= num_classes {num_classes}"
            )));
        }
        class_seen[y] = true;
    }
    if class_seen.iter().any(|&seen| !seen) {
        return Err(Error::Parameter("every class needs at least one sample".into()));
    }

    let n_s = embeddings.len();
    let rows = if with_bias { dim + 1 } else { dim };

    // C: columns are embeddings, optionally with a constant-1 bias row.
    let mut c = DMatrix::zeros(rows, n_s);
    for (s, e) in embeddings.iter().enumerate() {
        c.view_mut((0, s), (dim, 1)).copy_from(&e.0);
        if with_bias {
            c[(dim, s)] = 1.0;
        }
    }
    // One-hot targets.
    let mut y = DMatrix::zeros(num_classes, n_s);
    for (s, &label) in labels.iter().enumerate() {
        y[(label, s)] = 1.0;
    }

    let mut gram = &c * c.transpose();
    for i in 0..rows {
        gram[(i, i)] += gamma;
    }
    let chol = Cholesky::new(gram).ok_or_else(|| {
        Error::Singular(
            "C C^T + gamma I is not positive definite; use gamma > 0".into(),
        )
    })?;
    // Cholesky can numerically succeed on a semidefinite Gram matrix;
    // reject solves whose factor is effectively rank-deficient.
    let diag = chol.l_dirty().diagonal();
    let (dmin, dmax) = diag
        .iter()
        .fold((f64::INFINITY, 0.0f64), |(lo, hi), &d| (lo.min(d), hi.max(d)));
    // Pivot ratio ~ sqrt(condition number); 1e-7 flags condition beyond
    // ~1e14 while leaving any gamma-regularized system untouched.
    if dmin <= dmax * 1e-7 {
        return Err(Error::Singular(
            "C C^T + gamma I is numerically singular; use gamma > 0".into(),
        ));
    }
    // W (C C^T + gamma I) = Y C^T, solved through the symmetric factor.
    let rhs = &c * y.transpose();
    let w_full_t = chol.solve(&rhs);
    let w_full = w_full_t.transpose();

    let (weights, bias) = if with_bias {
        (
            w_full.columns(0, dim).into_owned(),
            w_full.column(dim).into_owned(),
        )
    } else {
        (w_full, DVector::zeros(num_classes))
    };
    Ok(ReadoutModel {
        weights,
        bias,
        regularization: gamma,
        num_classes,
    })
}

/// Ridge fit with the bias row (the standard path).
pub fn fit(
    embeddings: &[PooledEmbedding],
    labels: &[usize],
    gamma: f64,
    num_classes: usize,
) -> Result<ReadoutModel> {
    fit_with_options(embeddings, labels, gamma, num_classes, true)
}

/// Class scores plus the argmax decision (ties broken by lowest index).
pub fn predict(model: &ReadoutModel, embedding: &PooledEmbedding) -> (DVector<f64>, usize) {
    assert_eq!(
        embedding.dim(),
        model.weights.ncols(),
        "embedding dim != readout columns"
    );
    let scores = &model.weights * &embedding.0 + &model.bias;
    let mut best = 0usize;
    for i in 1..scores.len() {
        if scores[i] > scores[best] {
            best = i;
        }
    }
    (scores, best)
}

pub fn save_model(model: &ReadoutModel, path: &Path) -> Result<()> {
    let json = serde_json::to_string(model).expect("model serialization cannot fail");
    fs::write(path, json).map_err(|e| Error::io(path, e))
}

pub fn load_model(path: &Path) -> Result<ReadoutModel> {
    let raw = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&raw).map_err(|e| Error::parse(path, e.line(), e.to_string()))
}

/// Explicit-inverse evaluation of the ridge closed form. Test oracle;
/// kept independent of the factorized solve in [`fit_with_options`].
pub fn fit_explicit_inverse_oracle(
    embeddings: &[PooledEmbedding],
    labels: &[usize],
    gamma: f64,
    num_classes: usize,
    with_bias: bool,
) -> Option<DMatrix<f64>> {
    let dim = embeddings[0].dim();
    let n_s = embeddings.len();
    let rows = if with_bias { dim + 1 } else { dim };
    let mut c = DMatrix::zeros(rows, n_s);
    for (s, e) in embeddings.iter().enumerate() {
        c.view_mut((0, s), (dim, 1)).copy_from(&e.0);
        if with_bias {
            c[(dim, s)] = 1.0;
        }
    }
    let mut y = DMatrix::zeros(num_classes, n_s);
    for (s, &label) in labels.iter().enumerate() {
        y[(label, s)] = 1.0;
    }
    let gram = &c * c.transpose() + DMatrix::identity(rows, rows) * gamma;
    let inv = gram.try_inverse()?;
    Some(&y * c.transpose() * inv)
}
