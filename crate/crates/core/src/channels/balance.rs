use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg::{
    default_rank_tol, eigenvalues_unchecked, partial_trace_matrix, ComplexMatrix, DensityOperator,
    HermitianOperator, C64,
};

/// How `R0` is built from `R` and `X`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BalanceMethod {
    /// `R0 = sqrt(R) (X (x) I) sqrt(R)`, `X` from the linear solve; keeps `supp R0` inside `supp R`.
    #[default]
    Sandwich,
    /// `R0 = (sqrt(X) (x) I) R (sqrt(X) (x) I)` with `X = (d Tr_Delta R)^{-1}`; `X` lies in
    /// `[1/(1+eta), 1/(1-eta)]` whenever the reduction lies in `[(1-eta)/d, (1+eta)/d]`.
    Congruence,
}

/// Output of [`balance_operator`].
#[derive(Debug, Clone)]
pub struct Balanced {
    pub x: HermitianOperator,
    /// `sqrt(R) (X (x) I) sqrt(R)`, with `Tr_Delta R0 = I/d`.
    pub r0: DensityOperator,
    /// Max-norm residual of the linear solve.
    pub residual: f64,
}

impl Balanced {
    pub fn x_eigenvalues(&self) -> Vec<f64> {
        self.x.eigenvalues()
    }
}

// Orthonormal real coordinates of a Hermitian d x d matrix:
// diagonal entries, then sqrt(2) Re and sqrt(2) Im of each upper entry.
fn herm_coords(m: &ComplexMatrix) -> Vec<f64> {
    let d = m.rows();
    let mut out = Vec::with_capacity(d * d);
    for i in 0..d {
        out.push(m[(i, i)].re);
    }
    let s = std::f64::consts::SQRT_2;
    for i in 0..d {
        for j in (i + 1)..d {
            out.push(s * m[(i, j)].re);
            out.push(s * m[(i, j)].im);
        }
    }
    out
}

fn herm_from_coords(c: &[f64], d: usize) -> ComplexMatrix {
    let mut m = ComplexMatrix::zeros(d, d);
    for i in 0..d {
        m[(i, i)] = C64::new(c[i], 0.0);
    }
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let mut k = d;
    for i in 0..d {
        for j in (i + 1)..d {
            let z = C64::new(c[k] * s, c[k + 1] * s);
            m[(i, j)] = z;
            m[(j, i)] = z.conj();
            k += 2;
        }
    }
    m
}

/// Finds `X` on `C^d` with `Tr_Delta(sqrt(R) (X (x) I) sqrt(R)) = I/d` for `R` on
/// `C^d (x) C^Delta` (dims `[d, Delta]`), by least squares on the `d^2`-dimensional real
/// space of Hermitian matrices.
pub fn balance_operator(r: &DensityOperator, tol: f64) -> Result<Balanced> {
    balance_operator_with(r, tol, BalanceMethod::Sandwich)
}

pub fn balance_operator_with(r: &DensityOperator, tol: f64, method: BalanceMethod) -> Result<Balanced> {
    let dims = r.dims();
    if dims.len() != 2 {
        return Err(Error::DimensionMismatch(format!(
            "balancing needs a bipartite state, got dims {dims:?}"
        )));
    }
    let (d, delta) = (dims[0], dims[1]);
    let (red, _) = partial_trace_matrix(r.matrix(), dims, &[0])?;
    let min = eigenvalues_unchecked(&red).last().copied().unwrap_or(0.0);
    if min <= tol {
        return Err(Error::SingularReduction { min_eigenvalue: min });
    }
    if method == BalanceMethod::Congruence {
        return congruence(r, &red, d, delta);
    }

    // clamp eigenvalues below the support cutoff so that sqrt(R) lives on supp R exactly
    let spec = r.spectrum();
    let low = spec.eigenvalues.last().copied().unwrap_or(0.0);
    if low < -tol.max(1e-6) {
        return Err(Error::StronglyNegative { eigenvalue: low });
    }
    let cutoff = default_rank_tol(&spec);
    let sqrt_r = spec.reconstruct_with(|l| if l > cutoff { l.sqrt() } else { 0.0 });
    let id_env = ComplexMatrix::identity(delta);
    let lift = |x: &ComplexMatrix| {
        let big = x.kron(&id_env);
        let full = sqrt_r.matmul(&big).matmul(&sqrt_r);
        partial_trace_matrix(&full, dims, &[0]).map(|(m, _)| m)
    };

    let n = d * d;
    let mut a = DMatrix::<f64>::zeros(n, n);
    let mut unit = vec![0.0; n];
    for col in 0..n {
        unit[col] = 1.0;
        let image = herm_coords(&lift(&herm_from_coords(&unit, d))?);
        unit[col] = 0.0;
        for (row, v) in image.into_iter().enumerate() {
            a[(row, col)] = v;
        }
    }
    let target = herm_coords(&ComplexMatrix::identity(d).scale(1.0 / d as f64));
    let b = DVector::from_vec(target.clone());
    let svd = a.clone().svd(true, true);
    let x = svd
        .solve(&b, 1e-13)
        .map_err(|e| Error::BalancingFailed(format!("least squares: {e}")))?;
    let residual = (&a * &x - &b).amax();
    if residual >= 1e-9 {
        return Err(Error::BalancingFailed(format!("linear residual {residual:.3e}")));
    }

    let xm = herm_from_coords(x.as_slice(), d);
    let r0 = sqrt_r.matmul(&xm.kron(&id_env)).matmul(&sqrt_r).hermitian_part();
    let low = eigenvalues_unchecked(&r0).last().copied().unwrap_or(0.0);
    if low < -1e-9 {
        return Err(Error::BalancingFailed(format!(
            "balanced operator is not positive (eigenvalue {low:.3e})"
        )));
    }
    let (red0, _) = partial_trace_matrix(&r0, dims, &[0])?;
    let deviation = red0.max_abs_diff(&ComplexMatrix::identity(d).scale(1.0 / d as f64));
    if deviation > 1e-9 {
        return Err(Error::ReductionNotMaximallyMixed { deviation });
    }
    let r0 = DensityOperator::normalized(r0, dims.to_vec())?;
    Ok(Balanced {
        x: HermitianOperator::new(xm, vec![d])?,
        r0,
        residual,
    })
}

fn congruence(r: &DensityOperator, red: &ComplexMatrix, d: usize, delta: usize) -> Result<Balanced> {
    let spec = crate::linalg::eig_herm(red)?;
    let x = spec.reconstruct_with(|l| 1.0 / (d as f64 * l));
    let sqrt_x = spec.reconstruct_with(|l| (d as f64 * l).powf(-0.5));
    let lift = sqrt_x.kron(&ComplexMatrix::identity(delta));
    let r0 = lift.matmul(r.matrix()).matmul(&lift).hermitian_part();
    let dims = r.dims();
    let (red0, _) = partial_trace_matrix(&r0, dims, &[0])?;
    let deviation = red0.max_abs_diff(&ComplexMatrix::identity(d).scale(1.0 / d as f64));
    if deviation > 1e-9 {
        return Err(Error::ReductionNotMaximallyMixed { deviation });
    }
    Ok(Balanced {
        x: HermitianOperator::new(x.hermitian_part(), vec![d])?,
        r0: DensityOperator::normalized(r0, dims.to_vec())?,
        residual: deviation,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{partial_trace, support_projector};
    use crate::sampling::{sample_random_channel, sample_random_state, RandomChannelSpec, Seed};

    fn reduction_deviation(r0: &DensityOperator, d: usize) -> f64 {
        partial_trace(r0, &[0])
            .unwrap()
            .matrix()
            .max_abs_diff(&ComplexMatrix::identity(d).scale(1.0 / d as f64))
    }

    #[test]
    fn coordinates_roundtrip() {
        let m = sample_random_state(3, 3, Seed::new(1, 0)).unwrap();
        let back = herm_from_coords(&herm_coords(m.matrix()), 3);
        assert!(back.max_abs_diff(m.matrix()) < 1e-15);
    }

    #[test]
    fn already_balanced_gives_identity() {
        let ch = sample_random_channel(RandomChannelSpec::new(2, 3, 6).unwrap(), Seed::new(2, 0)).unwrap();
        let j = ch.choi_state();
        let b = balance_operator(&j, 1e-12).unwrap();
        assert!(b.x.matrix().max_abs_diff(&ComplexMatrix::identity(2)) < 1e-9);
        assert!(b.r0.matrix().max_abs_diff(j.matrix()) < 1e-9);
    }

    #[test]
    fn product_input_has_closed_form() {
        let rho = sample_random_state(2, 2, Seed::new(3, 0)).unwrap();
        let sigma = sample_random_state(3, 3, Seed::new(4, 0)).unwrap();
        let r = rho.kron(&sigma);
        let b = balance_operator(&r, 1e-12).unwrap();
        // X = (d rho)^{-1}
        let expect = rho.spectrum().reconstruct_with(|l| 1.0 / (2.0 * l));
        assert!(b.x.matrix().max_abs_diff(&expect) < 1e-8);
        assert!(reduction_deviation(&b.r0, 2) < 1e-9);
    }

    fn random_bipartite(i: u64) -> DensityOperator {
        sample_random_state(16, 2, Seed::new(5, i)).unwrap().with_dims(vec![2, 8]).unwrap()
    }

    fn reduction_eta(r: &DensityOperator) -> f64 {
        let red = partial_trace(r, &[0]).unwrap();
        red.eigenvalues().iter().map(|l| (2.0 * l - 1.0).abs()).fold(0.0, f64::max)
    }

    #[test]
    fn sandwich_on_random_low_rank_states() {
        let mut balanced = 0;
        for i in 0..40 {
            let r = random_bipartite(i);
            match balance_operator(&r, 1e-12) {
                Ok(b) => {
                    balanced += 1;
                    assert!(reduction_deviation(&b.r0, 2) < 1e-9);
                    assert!((b.r0.matrix().trace().re - 1.0).abs() < 1e-9);
                    // support of R0 stays inside the support of R
                    let p = support_projector(&r, None);
                    let inside = p.matrix().matmul(b.r0.matrix()).matmul(p.matrix());
                    assert!(inside.max_abs_diff(b.r0.matrix()) < 1e-9);
                }
                Err(e) => assert!(matches!(e, Error::BalancingFailed(_)), "{e}"),
            }
        }
        assert!(balanced > 0);
    }

    #[test]
    fn congruence_on_random_low_rank_states() {
        for i in 0..40 {
            let r = random_bipartite(i);
            let eta = reduction_eta(&r);
            let b = balance_operator_with(&r, 1e-12, BalanceMethod::Congruence).unwrap();
            assert!(reduction_deviation(&b.r0, 2) < 1e-9);
            assert!((b.r0.matrix().trace().re - 1.0).abs() < 1e-9);
            let rank = b.r0.eigenvalues().iter().filter(|&&l| l > 1e-9).count();
            assert_eq!(rank, 2);
            let (lo, hi) = (1.0 / (1.0 + eta), 1.0 / (1.0 - eta));
            let ev = b.x_eigenvalues();
            assert!(ev.iter().all(|&l| l >= lo - 1e-9 && l <= hi + 1e-9), "{ev:?} vs [{lo}, {hi}]");
        }
    }

    #[test]
    fn methods_agree_on_product_inputs() {
        let rho = sample_random_state(2, 2, Seed::new(7, 0)).unwrap();
        let sigma = sample_random_state(4, 4, Seed::new(8, 0)).unwrap();
        let r = rho.kron(&sigma);
        let a = balance_operator(&r, 1e-12).unwrap();
        let b = balance_operator_with(&r, 1e-12, BalanceMethod::Congruence).unwrap();
        assert!(a.x.matrix().max_abs_diff(b.x.matrix()) < 1e-8);
        assert!(a.r0.matrix().max_abs_diff(b.r0.matrix()) < 1e-8);
    }

    #[test]
    fn singular_reduction_is_an_error() {
        let sigma = sample_random_state(3, 3, Seed::new(6, 0)).unwrap();
        let r = DensityOperator::basis_state(2, 0).kron(&sigma);
        assert!(matches!(balance_operator(&r, 1e-9), Err(Error::SingularReduction { .. })));
    }
}
