//! Inner products used by the least-squares problems and the diagnostics.
//!
//! Every form is evaluated through its Riesz representer: `dot(x, y) = xᵀ R(y)`
//! with `R(y) = y` (Euclidean), `W y` (matrix-weighted) or `F⁻¹ y`
//! (operator-inverse). Representers are linear in `y`, which lets callers cache
//! one representer per stored vector and build Gram matrices of differences
//! without further solves.

use std::collections::HashMap;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;

use crate::error::{check_len, Error, Result};
use crate::kernel::vector::{dot as edot, max_abs};
use crate::kernel::{BandedMatrix, DenseMatrix, Factorization};

/// Values of `dot(x, x)` in `[-NEG_CLAMP·xᵀx, 0)` are treated as round-off.
pub const NEG_CLAMP: f64 = 1e-12;
/// Largest relative magnitude tolerated outside the block mask.
pub const MASK_TOL: f64 = 1e-12;

#[derive(Debug, Clone)]
pub enum WeightMatrix {
    Dense(DenseMatrix),
    Banded(BandedMatrix),
}

impl WeightMatrix {
    fn dim(&self) -> usize {
        match self {
            WeightMatrix::Dense(m) => m.rows(),
            WeightMatrix::Banded(m) => m.dim(),
        }
    }

    fn apply(&self, x: &[f64]) -> Result<Vec<f64>> {
        match self {
            WeightMatrix::Dense(m) => m.matvec(x),
            WeightMatrix::Banded(m) => m.matvec(x),
        }
    }
}

#[derive(Debug, Clone)]
pub enum InnerProductKind {
    Euclidean,
    MatrixWeighted(Arc<WeightMatrix>),
    OperatorInverse(Arc<Factorization>),
}

/// A symmetric positive (semi-)definite bilinear form.
#[derive(Debug, Clone)]
pub struct InnerProduct {
    kind: InnerProductKind,
    block_mask: Option<Arc<Vec<bool>>>,
    energy: Option<Arc<WeightMatrix>>,
    name: String,
    solves: Arc<AtomicUsize>,
}

impl InnerProduct {
    fn with_kind(kind: InnerProductKind, name: &str) -> Self {
        Self {
            kind,
            block_mask: None,
            energy: None,
            name: name.to_string(),
            solves: Arc::new(AtomicUsize::new(0)),
        }
    }

    pub fn euclidean() -> Self {
        Self::with_kind(InnerProductKind::Euclidean, "l2")
    }

    pub fn matrix_weighted(w: WeightMatrix) -> Self {
        Self::with_kind(InnerProductKind::MatrixWeighted(Arc::new(w)), "weighted")
    }

    pub fn operator_inverse(f: Arc<Factorization>) -> Self {
        Self::with_kind(InnerProductKind::OperatorInverse(f), "operator-inverse")
    }

    /// Restricts the form to the indices where `mask` is true.
    pub fn with_mask(mut self, mask: Vec<bool>) -> Self {
        self.block_mask = Some(Arc::new(mask));
        self
    }

    /// Evaluates the form as `R(x)ᵀ W R(y)` instead of `xᵀ R(y)`.
    ///
    /// Both agree when `W R(y)` reproduces `y` up to a component orthogonal
    /// to every representer, as for a saddle operator masked to its primal
    /// block with `W` its primal block. The energy form avoids the
    /// square-root cancellation floor when `y` is dominated by that
    /// orthogonal component.
    pub fn with_energy(mut self, w: WeightMatrix) -> Self {
        self.energy = Some(Arc::new(w));
        self
    }

    pub fn named(mut self, name: &str) -> Self {
        self.name = name.to_string();
        self
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn kind(&self) -> &InnerProductKind {
        &self.kind
    }

    pub fn block_mask(&self) -> Option<&[bool]> {
        self.block_mask.as_deref().map(Vec::as_slice)
    }

    /// True when evaluating a representer costs a linear solve.
    pub fn needs_solve(&self) -> bool {
        matches!(self.kind, InnerProductKind::OperatorInverse(_))
    }

    /// True when both handles are clones of one form.
    pub fn shares_counter(&self, other: &InnerProduct) -> bool {
        Arc::ptr_eq(&self.solves, &other.solves)
    }

    /// Number of Riesz solves performed through this form (shared by clones).
    pub fn solve_count(&self) -> usize {
        self.solves.load(Ordering::Relaxed)
    }

    fn expected_dim(&self) -> Option<usize> {
        match &self.kind {
            InnerProductKind::Euclidean => self.block_mask.as_ref().map(|m| m.len()),
            InnerProductKind::MatrixWeighted(w) => Some(w.dim()),
            InnerProductKind::OperatorInverse(f) => Some(f.dim()),
        }
    }

    fn check(&self, x: &[f64]) -> Result<()> {
        if let Some(n) = self.expected_dim() {
            check_len(n, x.len())?;
        }
        if let (Some(mask), InnerProductKind::OperatorInverse(_)) = (&self.block_mask, &self.kind) {
            let scale = max_abs(x);
            for (i, (&keep, &v)) in mask.iter().zip(x).enumerate() {
                if !keep && v.abs() > MASK_TOL * scale {
                    return Err(Error::NotAdmissible { index: i, value: v });
                }
            }
        }
        Ok(())
    }

    fn apply_mask(&self, v: &mut [f64]) {
        if let Some(mask) = &self.block_mask {
            for (x, &keep) in v.iter_mut().zip(mask.iter()) {
                if !keep {
                    *x = 0.0;
                }
            }
        }
    }

    /// Riesz representer `R(y)` with `dot(x, y) = xᵀ R(y)`.
    pub fn representer(&self, y: &[f64]) -> Result<Vec<f64>> {
        self.check(y)?;
        let mut ym = y.to_vec();
        self.apply_mask(&mut ym);
        let mut r = match &self.kind {
            InnerProductKind::Euclidean => ym,
            InnerProductKind::MatrixWeighted(w) => w.apply(&ym)?,
            InnerProductKind::OperatorInverse(f) => {
                self.solves.fetch_add(1, Ordering::Relaxed);
                f.solve(&ym).map_err(|e| Error::LinearSolveFailure(Box::new(e)))?
            }
        };
        self.apply_mask(&mut r);
        Ok(r)
    }

    /// Vector paired with representers: `W R(x)` in energy form, else `x`.
    pub fn dual(&self, x: &[f64], rep: &[f64]) -> Result<Vec<f64>> {
        match &self.energy {
            Some(w) => {
                let mut d = w.apply(rep)?;
                self.apply_mask(&mut d);
                Ok(d)
            }
            None => Ok(x.to_vec()),
        }
    }

    pub fn dot(&self, x: &[f64], y: &[f64]) -> Result<f64> {
        check_len(y.len(), x.len())?;
        self.check(x)?;
        let ry = self.representer(y)?;
        if self.energy.is_some() {
            let rx = self.representer(x)?;
            return Ok(edot(&self.dual(x, &rx)?, &ry));
        }
        Ok(edot(x, &ry))
    }

    /// `sqrt(max(dot(x, x), 0))`.
    pub fn norm(&self, x: &[f64]) -> Result<f64> {
        Ok(self.dot(x, x)?.max(0.0).sqrt())
    }

    /// Norm from a precomputed representer of `x`.
    pub fn norm_with(&self, x: &[f64], rep: &[f64]) -> f64 {
        let v = match self.dual(x, rep) {
            Ok(d) => edot(&d, rep),
            Err(_) => f64::NAN,
        };
        v.max(0.0).sqrt()
    }
}

/// Normal equations of `min ‖base + Σ c_i d_i‖`.
#[derive(Debug, Clone)]
pub struct GramSystem {
    pub g: DenseMatrix,
    pub b: Vec<f64>,
    pub base_sq: f64,
}

impl GramSystem {
    pub fn depth(&self) -> usize {
        self.b.len()
    }

    /// `duals` pair with `reps` (see [`InnerProduct::dual`]).
    fn from_parts(base: &[f64], base_rep: &[f64], diffs: &[Vec<f64>], reps: &[Vec<f64>]) -> Self {
        let m = diffs.len();
        let mut g = DenseMatrix::zeros(m, m);
        for i in 0..m {
            for j in 0..=i {
                let v = 0.5 * (edot(&diffs[i], &reps[j]) + edot(&diffs[j], &reps[i]));
                g[(i, j)] = v;
                g[(j, i)] = v;
            }
        }
        let b = (0..m)
            .map(|i| 0.5 * (edot(&diffs[i], base_rep) + edot(base, &reps[i])))
            .collect();
        GramSystem {
            g,
            b,
            base_sq: edot(base, base_rep).max(0.0),
        }
    }
}

/// Gram system for arbitrary difference vectors: one representer per vector.
pub fn gram(ip: &InnerProduct, base: &[f64], diffs: &[Vec<f64>]) -> Result<GramSystem> {
    for d in diffs {
        check_len(base.len(), d.len())?;
    }
    let base_rep = ip.representer(base)?;
    let reps = diffs
        .iter()
        .map(|d| ip.representer(d))
        .collect::<Result<Vec<_>>>()?;
    let base_dual = ip.dual(base, &base_rep)?;
    let duals = diffs
        .iter()
        .zip(&reps)
        .map(|(d, r)| ip.dual(d, r))
        .collect::<Result<Vec<_>>>()?;
    Ok(GramSystem::from_parts(&base_dual, &base_rep, &duals, &reps))
}

/// Cache key for stored representers: `(slot, iterate index)`.
pub type RepKey = (u8, usize);

/// Representers of stored vectors, keyed by the owner's indexing.
#[derive(Debug, Default, Clone)]
pub struct RepresenterCache {
    entries: HashMap<RepKey, Arc<Vec<f64>>>,
    solves: usize,
}

impl RepresenterCache {
    pub fn new() -> Self {
        Self::default()
    }

    /// Riesz solves triggered through this cache.
    pub fn solves(&self) -> usize {
        self.solves
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, key: RepKey) -> Option<Arc<Vec<f64>>> {
        self.entries.get(&key).cloned()
    }

    pub fn insert(&mut self, key: RepKey, rep: Vec<f64>) -> Arc<Vec<f64>> {
        let rep = Arc::new(rep);
        self.entries.insert(key, rep.clone());
        rep
    }

    pub fn get_or_compute(
        &mut self,
        ip: &InnerProduct,
        key: RepKey,
        v: &[f64],
    ) -> Result<Arc<Vec<f64>>> {
        if let Some(r) = self.entries.get(&key) {
            return Ok(r.clone());
        }
        if ip.needs_solve() {
            self.solves += 1;
        }
        let r = ip.representer(v)?;
        Ok(self.insert(key, r))
    }

    pub fn remove(&mut self, key: RepKey) {
        self.entries.remove(&key);
    }

    pub fn retain(&mut self, mut keep: impl FnMut(&RepKey) -> bool) {
        self.entries.retain(|k, _| keep(k));
    }
}

/// Gram system for `d_i = base − others_i`, reusing cached representers.
///
/// Returns the system together with the representers of every `d_i`
/// (for evaluating the optimal combination afterwards).
pub fn gram_cached(
    ip: &InnerProduct,
    cache: &mut RepresenterCache,
    base: (RepKey, &[f64]),
    others: &[(RepKey, &[f64])],
) -> Result<(GramSystem, Arc<Vec<f64>>, Vec<Vec<f64>>, Vec<Vec<f64>>)> {
    let n = base.1.len();
    let base_rep = cache.get_or_compute(ip, base.0, base.1)?;
    let mut diffs = Vec::with_capacity(others.len());
    let mut reps = Vec::with_capacity(others.len());
    for (key, v) in others {
        check_len(n, v.len())?;
        let r = cache.get_or_compute(ip, *key, v)?;
        diffs.push(base.1.iter().zip(v.iter()).map(|(a, b)| a - b).collect::<Vec<_>>());
        reps.push(base_rep.iter().zip(r.iter()).map(|(a, b)| a - b).collect::<Vec<_>>());
    }
    let base_dual = ip.dual(base.1, &base_rep)?;
    let duals = diffs
        .iter()
        .zip(&reps)
        .map(|(d, r)| ip.dual(d, r))
        .collect::<Result<Vec<_>>>()?;
    let sys = GramSystem::from_parts(&base_dual, &base_rep, &duals, &reps);
    Ok((sys, base_rep, diffs, reps))
}
