//! Elementary operators: truncated bosonic ladders, the three-level engine
//! matrices, and Kronecker products on `cold ⊗ engine ⊗ warm`.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};
use std::str::FromStr;

use crate::{re, CMatrix, CVector, Error, Result, C64, I};

/// Highest Fock occupation kept for one oscillator.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct FockCutoff(usize);

impl FockCutoff {
    pub fn new(n_max: usize) -> Self {
        FockCutoff(n_max)
    }

    pub fn n_max(self) -> usize {
        self.0
    }

    pub fn dim(self) -> usize {
        self.0 + 1
    }
}

/// One tensor factor of an operator's domain.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Factor {
    /// Truncated Fock space of dimension `n_max + 1`.
    Oscillator(usize),
    /// The three engine levels `g, e, f`.
    Engine,
    /// A compressed subspace without tensor structure.
    Subspace(usize),
}

impl Factor {
    pub fn dim(self) -> usize {
        match self {
            Factor::Oscillator(d) | Factor::Subspace(d) => d,
            Factor::Engine => 3,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum EngineLevel {
    G,
    E,
    F,
}

impl EngineLevel {
    pub const ALL: [EngineLevel; 3] = [EngineLevel::G, EngineLevel::E, EngineLevel::F];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<Self> {
        Self::ALL.get(i).copied()
    }

    /// Bare energy: `-μ`, `μ`, `μ + 2δ`.
    pub fn energy(self, mu: f64, delta: f64) -> f64 {
        match self {
            EngineLevel::G => -mu,
            EngineLevel::E => mu,
            EngineLevel::F => mu + 2.0 * delta,
        }
    }

    /// Weight of the level in the conserved quanta count.
    pub fn quanta(self) -> usize {
        self.index()
    }
}

impl fmt::Display for EngineLevel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let c = match self {
            EngineLevel::G => "g",
            EngineLevel::E => "e",
            EngineLevel::F => "f",
        };
        f.write_str(c)
    }
}

impl FromStr for EngineLevel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "g" | "G" => Ok(EngineLevel::G),
            "e" | "E" => Ok(EngineLevel::E),
            "f" | "F" => Ok(EngineLevel::F),
            other => Err(Error::InvalidParameter(format!(
                "unknown engine level '{other}'"
            ))),
        }
    }
}

/// Product basis `|m, level, k⟩` of `cold ⊗ engine ⊗ warm`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ProductSpace {
    pub cold: FockCutoff,
    pub warm: FockCutoff,
}

impl ProductSpace {
    pub fn new(cold: FockCutoff, warm: FockCutoff) -> Self {
        ProductSpace { cold, warm }
    }

    /// Both oscillators truncated at the quanta bound, which is exact on
    /// every state with at most `quanta_bound` quanta.
    pub fn for_quanta_bound(quanta_bound: usize) -> Self {
        let c = FockCutoff::new(quanta_bound);
        ProductSpace::new(c, c)
    }

    pub fn dim(&self) -> usize {
        self.cold.dim() * 3 * self.warm.dim()
    }

    pub fn signature(&self) -> Vec<Factor> {
        vec![
            Factor::Oscillator(self.cold.dim()),
            Factor::Engine,
            Factor::Oscillator(self.warm.dim()),
        ]
    }

    pub fn index(&self, m: usize, level: EngineLevel, k: usize) -> usize {
        debug_assert!(m < self.cold.dim() && k < self.warm.dim());
        (m * 3 + level.index()) * self.warm.dim() + k
    }

    pub fn label(&self, idx: usize) -> (usize, EngineLevel, usize) {
        let wd = self.warm.dim();
        let k = idx % wd;
        let rest = idx / wd;
        (rest / 3, EngineLevel::from_index(rest % 3).unwrap(), k)
    }

    pub fn quanta(&self, idx: usize) -> usize {
        let (m, l, k) = self.label(idx);
        m + l.quanta() + k
    }

    /// Indices of basis states carrying at most `quanta_bound` quanta.
    pub fn retained(&self, quanta_bound: usize) -> Vec<usize> {
        (0..self.dim())
            .filter(|&i| self.quanta(i) <= quanta_bound)
            .collect()
    }

    pub fn basis_vector(&self, m: usize, level: EngineLevel, k: usize) -> CVector {
        let mut v = CVector::zeros(self.dim());
        v[self.index(m, level, k)] = re(1.0);
        v
    }

    pub fn contains(&self, m: usize, k: usize) -> bool {
        m < self.cold.dim() && k < self.warm.dim()
    }
}

/// Dense square matrix tagged with the tensor factors it acts on.
#[derive(Clone, Debug, PartialEq)]
pub struct Operator {
    matrix: CMatrix,
    signature: Vec<Factor>,
}

impl Operator {
    pub fn new(matrix: CMatrix, signature: Vec<Factor>) -> Result<Self> {
        let dim: usize = signature.iter().map(|f| f.dim()).product();
        if matrix.nrows() != matrix.ncols() || matrix.nrows() != dim {
            return Err(Error::DimensionMismatch(format!(
                "{}x{} matrix for signature {:?}",
                matrix.nrows(),
                matrix.ncols(),
                signature
            )));
        }
        Ok(Operator { matrix, signature })
    }

    pub(crate) fn from_parts(matrix: CMatrix, signature: Vec<Factor>) -> Self {
        debug_assert_eq!(
            matrix.nrows(),
            signature.iter().map(|f| f.dim()).product::<usize>()
        );
        Operator { matrix, signature }
    }

    pub fn identity(signature: Vec<Factor>) -> Self {
        let d = signature.iter().map(|f| f.dim()).product();
        Operator::from_parts(CMatrix::identity(d, d), signature)
    }

    pub fn zeros(signature: Vec<Factor>) -> Self {
        let d = signature.iter().map(|f| f.dim()).product();
        Operator::from_parts(CMatrix::zeros(d, d), signature)
    }

    pub fn diagonal(values: &[f64], factor: Factor) -> Self {
        let v = CVector::from_iterator(values.len(), values.iter().map(|&x| re(x)));
        Operator::from_parts(CMatrix::from_diagonal(&v), vec![factor])
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> CMatrix {
        self.matrix
    }

    pub fn signature(&self) -> &[Factor] {
        &self.signature
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn adjoint(&self) -> Self {
        Operator::from_parts(self.matrix.adjoint(), self.signature.clone())
    }

    /// `self ⊗ other`
    pub fn kron(&self, other: &Operator) -> Self {
        let mut sig = self.signature.clone();
        sig.extend_from_slice(&other.signature);
        Operator::from_parts(self.matrix.kronecker(&other.matrix), sig)
    }

    pub fn scale(&self, c: C64) -> Self {
        Operator::from_parts(&self.matrix * c, self.signature.clone())
    }

    pub fn commutator(&self, other: &Operator) -> Self {
        self * other - other * self
    }

    pub fn apply(&self, v: &CVector) -> CVector {
        &self.matrix * v
    }

    pub fn trace(&self) -> C64 {
        self.matrix.trace()
    }

    /// Upper bound on the spectral norm of `self - other`.
    pub fn distance(&self, other: &Operator) -> f64 {
        self.assert_same_space(other);
        norm_bound(&(&self.matrix - &other.matrix))
    }

    pub fn hermiticity_defect(&self) -> f64 {
        norm_bound(&(&self.matrix - self.matrix.adjoint()))
    }

    /// Compression onto a subset of basis states (rows and columns).
    pub fn compress(&self, indices: &[usize]) -> Operator {
        Operator::from_parts(
            compress(&self.matrix, indices),
            vec![Factor::Subspace(indices.len())],
        )
    }

    fn assert_same_space(&self, other: &Operator) {
        assert_eq!(
            self.signature, other.signature,
            "operator signatures differ"
        );
    }
}

impl<'a> Mul<&'a Operator> for &'a Operator {
    type Output = Operator;
    fn mul(self, rhs: &'a Operator) -> Operator {
        self.assert_same_space(rhs);
        Operator::from_parts(matmul(&self.matrix, &rhs.matrix), self.signature.clone())
    }
}

impl Mul for Operator {
    type Output = Operator;
    fn mul(self, rhs: Operator) -> Operator {
        &self * &rhs
    }
}

impl<'a> Add<&'a Operator> for &'a Operator {
    type Output = Operator;
    fn add(self, rhs: &'a Operator) -> Operator {
        self.assert_same_space(rhs);
        Operator::from_parts(&self.matrix + &rhs.matrix, self.signature.clone())
    }
}

impl Add for Operator {
    type Output = Operator;
    fn add(self, rhs: Operator) -> Operator {
        &self + &rhs
    }
}

impl<'a> Sub<&'a Operator> for &'a Operator {
    type Output = Operator;
    fn sub(self, rhs: &'a Operator) -> Operator {
        self.assert_same_space(rhs);
        Operator::from_parts(&self.matrix - &rhs.matrix, self.signature.clone())
    }
}

impl Sub for Operator {
    type Output = Operator;
    fn sub(self, rhs: Operator) -> Operator {
        &self - &rhs
    }
}

impl Neg for Operator {
    type Output = Operator;
    fn neg(self) -> Operator {
        Operator::from_parts(-self.matrix, self.signature)
    }
}

impl Mul<C64> for Operator {
    type Output = Operator;
    fn mul(self, rhs: C64) -> Operator {
        Operator::from_parts(self.matrix * rhs, self.signature)
    }
}

impl Mul<C64> for &Operator {
    type Output = Operator;
    fn mul(self, rhs: C64) -> Operator {
        self.scale(rhs)
    }
}

/// Complex product through four real GEMMs, which take the blocked
/// `matrixmultiply` path; nalgebra's generic complex kernel is several
/// times slower at the dimensions used here.
pub fn matmul(a: &CMatrix, b: &CMatrix) -> CMatrix {
    if a.nrows() * a.ncols() * b.ncols() < 32 * 32 * 32 {
        return a * b;
    }
    let (ar, ai) = (a.map(|z| z.re), a.map(|z| z.im));
    let (br, bi) = (b.map(|z| z.re), b.map(|z| z.im));
    let real = &ar * &br - &ai * &bi;
    let imag = &ar * &bi + &ai * &br;
    real.zip_map(&imag, C64::new)
}

/// `min(‖M‖_F, √(‖M‖₁‖M‖_∞))`, an upper bound on the spectral norm.
pub fn norm_bound(m: &CMatrix) -> f64 {
    let frob = m.norm();
    let col = m
        .column_iter()
        .map(|c| c.iter().map(|z| z.norm()).sum::<f64>())
        .fold(0.0, f64::max);
    let row = m
        .row_iter()
        .map(|r| r.iter().map(|z| z.norm()).sum::<f64>())
        .fold(0.0, f64::max);
    frob.min((col * row).sqrt())
}

pub fn compress(m: &CMatrix, indices: &[usize]) -> CMatrix {
    CMatrix::from_fn(indices.len(), indices.len(), |i, j| {
        m[(indices[i], indices[j])]
    })
}

/// Lowering operator with `⟨n-1|a|n⟩ = √n`.
pub fn annihilator(cutoff: FockCutoff) -> Operator {
    let d = cutoff.dim();
    let mut m = CMatrix::zeros(d, d);
    for n in 1..d {
        m[(n - 1, n)] = re((n as f64).sqrt());
    }
    Operator::from_parts(m, vec![Factor::Oscillator(d)])
}

pub fn creator(cutoff: FockCutoff) -> Operator {
    annihilator(cutoff).adjoint()
}

/// `a†a`, diagonal `0..=n_max`.
pub fn number_operator(cutoff: FockCutoff) -> Operator {
    let vals: Vec<f64> = (0..cutoff.dim()).map(|n| n as f64).collect();
    Operator::diagonal(&vals, Factor::Oscillator(cutoff.dim()))
}

/// `|0⟩⟨0|` on one oscillator.
pub fn vacuum_projector(cutoff: FockCutoff) -> Operator {
    let mut vals = vec![0.0; cutoff.dim()];
    vals[0] = 1.0;
    Operator::diagonal(&vals, Factor::Oscillator(cutoff.dim()))
}

pub fn oscillator_identity(cutoff: FockCutoff) -> Operator {
    Operator::identity(vec![Factor::Oscillator(cutoff.dim())])
}

fn engine_op(entries: [[C64; 3]; 3]) -> Operator {
    let m = CMatrix::from_fn(3, 3, |i, j| entries[i][j]);
    Operator::from_parts(m, vec![Factor::Engine])
}

/// Gell-Mann matrix `Λ_index`, `index ∈ 1..=8`.
pub fn gell_mann(index: usize) -> Result<Operator> {
    let o = re(0.0);
    let l = re(1.0);
    let p = I;
    let n = -I;
    let m = match index {
        1 => [[o, l, o], [l, o, o], [o, o, o]],
        2 => [[o, n, o], [p, o, o], [o, o, o]],
        3 => [[l, o, o], [o, -l, o], [o, o, o]],
        4 => [[o, o, l], [o, o, o], [l, o, o]],
        5 => [[o, o, n], [o, o, o], [p, o, o]],
        6 => [[o, o, o], [o, o, l], [o, l, o]],
        7 => [[o, o, o], [o, o, n], [o, p, o]],
        8 => {
            let s = re(1.0 / 3f64.sqrt());
            [[s, o, o], [o, s, o], [o, o, -(s + s)]]
        }
        _ => return Err(Error::GellMannIndex(index)),
    };
    Ok(engine_op(m))
}

/// Ladder and projector matrices of the engine.
#[derive(Clone, Debug)]
pub struct EngineMatrices {
    /// `|g⟩⟨e|`
    pub e_plus: Operator,
    /// `|e⟩⟨g|`
    pub e_minus: Operator,
    /// `|e⟩⟨f|`
    pub f_plus: Operator,
    /// `|f⟩⟨e|`
    pub f_minus: Operator,
    /// `|g⟩⟨g|`
    pub e1: Operator,
    /// `|e⟩⟨e|`
    pub e2: Operator,
    /// `|f⟩⟨f|`
    pub e3: Operator,
}

pub fn engine_matrices() -> EngineMatrices {
    let half = re(0.5);
    let l1 = gell_mann(1).unwrap();
    let l2 = gell_mann(2).unwrap();
    let l6 = gell_mann(6).unwrap();
    let l7 = gell_mann(7).unwrap();
    let e_plus = (&l1 + &l2.scale(I)) * half;
    let e_minus = (&l1 - &l2.scale(I)) * half;
    let f_plus = (&l6 + &l7.scale(I)) * half;
    let f_minus = (&l6 - &l7.scale(I)) * half;
    let e1 = &e_plus * &e_minus;
    let e2 = &e_minus * &e_plus;
    let e3 = Operator::diagonal(&[0.0, 0.0, 1.0], Factor::Engine);
    EngineMatrices {
        e_plus,
        e_minus,
        f_plus,
        f_minus,
        e1,
        e2,
        e3,
    }
}

/// `diag(-μ, μ, μ + 2δ)`
pub fn engine_hamiltonian(mu: f64, delta: f64) -> Operator {
    let e: Vec<f64> = EngineLevel::ALL
        .iter()
        .map(|l| l.energy(mu, delta))
        .collect();
    Operator::diagonal(&e, Factor::Engine)
}

pub fn engine_identity() -> Operator {
    Operator::identity(vec![Factor::Engine])
}

/// `cold ⊗ engine ⊗ warm`, checked factor by factor.
pub fn tensor3(cold: &Operator, engine: &Operator, warm: &Operator) -> Result<Operator> {
    let osc = |op: &Operator, which: &str| match op.signature() {
        [Factor::Oscillator(_)] => Ok(()),
        s => Err(Error::DimensionMismatch(format!(
            "{which} factor must be a single oscillator, got {s:?}"
        ))),
    };
    osc(cold, "cold")?;
    osc(warm, "warm")?;
    if engine.signature() != [Factor::Engine] {
        return Err(Error::DimensionMismatch(format!(
            "engine factor must be 3-dimensional, got {:?}",
            engine.signature()
        )));
    }
    Ok(cold.kron(engine).kron(warm))
}

/// Total quanta `a†a ⊗ I ⊗ I + I ⊗ diag(0,1,2) ⊗ I + I ⊗ I ⊗ c†c`.
pub fn quanta_operator(space: &ProductSpace) -> Operator {
    let vals: Vec<f64> = (0..space.dim()).map(|i| space.quanta(i) as f64).collect();
    let v = CVector::from_iterator(vals.len(), vals.into_iter().map(re));
    Operator::from_parts(CMatrix::from_diagonal(&v), space.signature())
}

/// `op ⊗ I_warm` for an operator on `cold ⊗ engine`.
pub fn lift_cold_engine(op: &Operator, space: &ProductSpace) -> Operator {
    op.kron(&oscillator_identity(space.warm))
}

/// `I_cold ⊗ op` for an operator on `engine ⊗ warm`.
pub fn lift_engine_warm(op: &Operator, space: &ProductSpace) -> Operator {
    oscillator_identity(space.cold).kron(op)
}

/// `I_cold ⊗ op ⊗ I_warm` for an engine operator.
pub fn lift_engine(op: &Operator, space: &ProductSpace) -> Operator {
    oscillator_identity(space.cold)
        .kron(op)
        .kron(&oscillator_identity(space.warm))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: C64, b: C64) -> bool {
        (a - b).norm() < 1e-14
    }

    #[test]
    fn ladder_action() {
        let a = annihilator(FockCutoff::new(1));
        let one = CVector::from_vec(vec![re(0.0), re(1.0)]);
        let zero = CVector::from_vec(vec![re(1.0), re(0.0)]);
        assert_eq!(a.apply(&one), zero);
        assert_eq!(a.apply(&zero).norm(), 0.0);

        let c = FockCutoff::new(3);
        let n = number_operator(c);
        let ad = creator(c);
        let a = annihilator(c);
        assert!((&ad * &a).distance(&n) < 1e-15);
        assert!(close(n.matrix()[(2, 2)], re(2.0)));
        assert!(close(ad.matrix()[(3, 2)], re(3f64.sqrt())));
        assert!((ad.matrix()[(3, 2)].re - 1.7320508).abs() < 1e-7);
    }

    #[test]
    fn truncated_commutator() {
        let c = FockCutoff::new(6);
        let a = annihilator(c);
        let ad = creator(c);
        let comm = &a * &ad - &ad * &a;
        let mut expected = vec![1.0; 7];
        expected[6] = 1.0 - 7.0;
        assert!(comm.distance(&Operator::diagonal(&expected, Factor::Oscillator(7))) < 1e-14);
    }

    #[test]
    fn gell_mann_entries_and_properties() {
        let l1 = gell_mann(1).unwrap();
        assert!(close(l1.matrix()[(0, 1)], re(1.0)) && close(l1.matrix()[(1, 0)], re(1.0)));
        let l7 = gell_mann(7).unwrap();
        assert!(close(l7.matrix()[(1, 2)], -I) && close(l7.matrix()[(2, 1)], I));
        for i in 1..=8 {
            let li = gell_mann(i).unwrap();
            assert!(li.trace().norm() < 1e-15);
            assert_eq!(li.hermiticity_defect(), 0.0);
            for j in 1..=8 {
                let t = (&li * &gell_mann(j).unwrap()).trace();
                let expect = if i == j { 2.0 } else { 0.0 };
                assert!((t - re(expect)).norm() < 1e-14, "Tr(Λ{i}Λ{j}) = {t}");
            }
        }
        assert!(matches!(gell_mann(0), Err(Error::GellMannIndex(0))));
        assert!(matches!(gell_mann(9), Err(Error::GellMannIndex(9))));
    }

    #[test]
    fn engine_algebra() {
        let m = engine_matrices();
        assert_eq!(m.e_plus.matrix()[(0, 1)], re(1.0));
        assert_eq!(m.e_minus.matrix()[(1, 0)], re(1.0));
        assert_eq!(m.f_plus.matrix()[(1, 2)], re(1.0));
        assert_eq!(m.f_minus.matrix()[(2, 1)], re(1.0));
        assert!((&m.f_minus * &m.f_plus).distance(&m.e3) < 1e-15);
        assert!((&m.f_plus * &m.f_minus).distance(&m.e2) < 1e-15);
        assert!((&m.e2 * &m.f_plus).distance(&m.f_plus) < 1e-15);
        let sum = &(&m.e1 + &m.e2) + &m.e3;
        assert!(sum.distance(&engine_identity()) < 1e-15);
        let h = engine_hamiltonian(0.7, 0.2);
        assert_eq!(h.matrix()[(2, 2)], re(0.7 + 0.4));
        assert!(EngineLevel::G.energy(1.0, 0.5) < EngineLevel::E.energy(1.0, 0.5));
        assert!(EngineLevel::E.energy(1.0, 0.5) < EngineLevel::F.energy(1.0, 0.5));
    }

    #[test]
    fn tensor_layout_and_mixed_product() {
        let c = FockCutoff::new(3);
        let w = FockCutoff::new(5);
        let space = ProductSpace::new(c, w);
        let id = tensor3(
            &oscillator_identity(c),
            &engine_identity(),
            &oscillator_identity(w),
        )
        .unwrap();
        assert_eq!(id, Operator::identity(space.signature()));

        let n = tensor3(
            &number_operator(c),
            &engine_identity(),
            &oscillator_identity(w),
        )
        .unwrap();
        let v = space.basis_vector(2, EngineLevel::G, 5);
        assert!((n.apply(&v) - v.scale(2.0)).norm() < 1e-15);
        assert_eq!(space.index(2, EngineLevel::G, 5), (2 * 3) * 6 + 5);
        for idx in 0..space.dim() {
            let (m, l, k) = space.label(idx);
            assert_eq!(space.index(m, l, k), idx);
        }

        let em = engine_matrices();
        let a = annihilator(c);
        let cw = creator(w);
        let left = tensor3(&a, &em.e_plus, &cw).unwrap();
        let right = tensor3(&creator(c), &em.f_minus, &number_operator(w)).unwrap();
        let prod = tensor3(
            &(&a * &creator(c)),
            &(&em.e_plus * &em.f_minus),
            &(&cw * &number_operator(w)),
        )
        .unwrap();
        assert!((&left * &right).distance(&prod) < 1e-13);

        assert!(tensor3(&em.e1, &em.e1, &a).is_err());
        assert!(tensor3(&a, &a, &a).is_err());
    }

    #[test]
    fn quanta_operator_diagonal() {
        let space = ProductSpace::for_quanta_bound(4);
        let n = quanta_operator(&space);
        let g = space.index(0, EngineLevel::G, 0);
        assert_eq!(n.matrix()[(g, g)], re(0.0));
        let e = space.index(2, EngineLevel::E, 1);
        assert_eq!(n.matrix()[(e, e)], re(4.0));
        assert_eq!(space.retained(0), vec![g]);
    }

    #[test]
    fn matmul_matches_naive() {
        let d = 70;
        let a = CMatrix::from_fn(d, d, |i, j| {
            C64::new((i * j % 7) as f64 - 3.0, (i + 2 * j) as f64 * 0.01)
        });
        let b = CMatrix::from_fn(d, d, |i, j| C64::new((i as f64).sin(), (j as f64).cos()));
        assert!((matmul(&a, &b) - &a * &b).norm() < 1e-10);
    }
}
