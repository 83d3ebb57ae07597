//! The invariant subspaces `H_n` spanned by the `g`/`e` states with `n`
//! quanta, and what can be measured on them.

use crate::fock::{compress, quanta_operator, EngineLevel, Factor, Operator, ProductSpace};
use crate::linalg::eigenvalues;
use crate::{CMatrix, CVector, Error, Result, C64};

/// Default leakage tolerance for invariance checks.
pub const LEAKAGE_TOLERANCE: f64 = 1e-10;

/// Ordered basis of `H_n`: `|m, g, n-m⟩` for `m = 0..=n`, then
/// `|m, e, n-m-1⟩` for `m = 0..n`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SectorBasis {
    pub n: usize,
    pub space: ProductSpace,
    /// Full-space indices of the basis vectors, in order.
    pub indices: Vec<usize>,
}

impl SectorBasis {
    pub fn dim(&self) -> usize {
        self.indices.len()
    }

    pub fn labels(&self) -> Vec<(usize, EngineLevel, usize)> {
        self.indices.iter().map(|&i| self.space.label(i)).collect()
    }

    /// Embeds sector coordinates into the full space.
    pub fn embed(&self, coords: &CVector) -> CVector {
        let mut v = CVector::zeros(self.space.dim());
        for (c, &i) in coords.iter().zip(&self.indices) {
            v[i] = *c;
        }
        v
    }

    /// Sector coordinates of a full-space vector (components outside dropped).
    pub fn restrict(&self, v: &CVector) -> CVector {
        CVector::from_iterator(self.dim(), self.indices.iter().map(|&i| v[i]))
    }
}

/// Builds `H_n` inside `space`. Membership is read off the diagonal of the
/// quanta operator; `f` states are kept out.
pub fn sector_basis(n: usize, space: &ProductSpace) -> Result<SectorBasis> {
    if n > space.cold.n_max() || n > space.warm.n_max() {
        return Err(Error::DimensionMismatch(format!(
            "sector {n} does not fit cutoffs ({}, {})",
            space.cold.n_max(),
            space.warm.n_max()
        )));
    }
    let quanta = quanta_operator(space);
    let q = quanta.matrix();
    let mut members: Vec<(EngineLevel, usize, usize)> = (0..space.dim())
        .filter(|&i| q[(i, i)].re.round() as usize == n)
        .filter_map(|i| {
            let (m, level, _) = space.label(i);
            (level != EngineLevel::F).then_some((level, m, i))
        })
        .collect();
    members.sort();
    Ok(SectorBasis {
        n,
        space: *space,
        indices: members.into_iter().map(|(_, _, i)| i).collect(),
    })
}

/// Full-space indices of the `f` states with at most `quanta_bound` quanta.
pub fn f_states(space: &ProductSpace, quanta_bound: usize) -> Vec<usize> {
    space
        .retained(quanta_bound)
        .into_iter()
        .filter(|&i| space.label(i).1 == EngineLevel::F)
        .collect()
}

/// Every basis state with exactly `n` quanta, `f` states included. The
/// contact phases preserve these eigenspaces of `N`; only the full cycle
/// also preserves the `g`/`e` part on its own.
pub fn quanta_eigenspace(n: usize, space: &ProductSpace) -> Vec<usize> {
    (0..space.dim()).filter(|&i| space.quanta(i) == n).collect()
}

/// Largest norm that `op` sends out of the sector from a sector basis vector.
pub fn leakage(op: &Operator, basis: &SectorBasis) -> f64 {
    leakage_from(op, &basis.indices)
}

/// Largest norm that `op` sends out of `span{indices}` from one of its
/// basis vectors.
pub fn leakage_from(op: &Operator, indices: &[usize]) -> f64 {
    let m = op.matrix();
    let mut inside = vec![false; m.nrows()];
    for &i in indices {
        inside[i] = true;
    }
    indices
        .iter()
        .map(|&j| {
            (0..m.nrows())
                .filter(|&i| !inside[i])
                .map(|i| m[(i, j)].norm_sqr())
                .sum::<f64>()
                .sqrt()
        })
        .fold(0.0, f64::max)
}

/// Compression of `op` onto the sector.
pub fn project(op: &Operator, basis: &SectorBasis) -> Operator {
    Operator::new(
        compress(op.matrix(), &basis.indices),
        vec![Factor::Subspace(basis.dim())],
    )
    .unwrap()
}

/// [`project`], failing when `op` does not leave the sector invariant.
pub fn project_invariant(op: &Operator, basis: &SectorBasis, tolerance: f64) -> Result<Operator> {
    let l = leakage(op, basis);
    if !(l <= tolerance) {
        return Err(Error::Leakage {
            leakage: l,
            tolerance,
        });
    }
    Ok(project(op, basis))
}

/// Eigenvalues of the sector block, ordered by phase then modulus.
pub fn sector_spectrum(op: &Operator, basis: &SectorBasis) -> Result<Vec<C64>> {
    let block = project_invariant(op, basis, LEAKAGE_TOLERANCE)?;
    let mut vals = eigenvalues(block.matrix());
    vals.sort_by(|a, b| {
        a.arg()
            .total_cmp(&b.arg())
            .then(a.norm().total_cmp(&b.norm()))
    });
    Ok(vals)
}

/// `|⟨ψ|opᵏ|ψ⟩|` for `k = 0..=horizon`.
pub fn quasi_periodicity(op: &Operator, state: &CVector, horizon: usize) -> Result<Vec<f64>> {
    if state.len() != op.dim() {
        return Err(Error::DimensionMismatch(format!(
            "state of length {} for operator of dimension {}",
            state.len(),
            op.dim()
        )));
    }
    if (state.norm() - 1.0).abs() > 1e-12 {
        return Err(Error::InitialState(format!(
            "norm {} is not 1",
            state.norm()
        )));
    }
    let mut out = Vec::with_capacity(horizon + 1);
    let mut v = state.clone();
    out.push(1.0);
    for _ in 0..horizon {
        v = op.apply(&v);
        out.push(state.dotc(&v).norm().min(1.0));
    }
    Ok(out)
}

/// Best return after at least one step: `(k, |⟨ψ|opᵏ|ψ⟩|)`.
pub fn best_return(amplitudes: &[f64]) -> Option<(usize, f64)> {
    amplitudes
        .iter()
        .copied()
        .enumerate()
        .skip(1)
        .max_by(|a, b| a.1.total_cmp(&b.1))
}

/// Rebuilds `op` on the span of sectors `0..=max_n` from the sector blocks
/// alone and returns the largest entrywise-norm deviation from `op` there.
pub fn block_reconstruction_defect(
    op: &Operator,
    space: &ProductSpace,
    max_n: usize,
) -> Result<f64> {
    let sectors: Vec<SectorBasis> = (0..=max_n)
        .map(|n| sector_basis(n, space))
        .collect::<Result<_>>()?;
    let dim = space.dim();
    let mut rebuilt = CMatrix::zeros(dim, dim);
    for s in &sectors {
        let block = project(op, s);
        for (a, &i) in s.indices.iter().enumerate() {
            for (b, &j) in s.indices.iter().enumerate() {
                rebuilt[(i, j)] = block.matrix()[(a, b)];
            }
        }
    }
    let span: Vec<usize> = sectors
        .iter()
        .flat_map(|s| s.indices.iter().copied())
        .collect();
    let defect = compress(&(op.matrix() - rebuilt), &span);
    Ok(crate::fock::norm_bound(&defect))
}
