//! Seeded sampling of exact scalars, vectors, projections and unitaries.
//!
//! Callers pass their own generator; nothing here keeps state.

use rand::Rng;

use crate::lattice::Projection;
use crate::matrix::Matrix;
use crate::scalar::ExactField;

/// `a/b` with `|a| ≤ 9`, `1 ≤ b ≤ 4`.
pub fn small_rational<F: ExactField, R: Rng + ?Sized>(rng: &mut R) -> F {
    F::from_ratio(rng.gen_range(-9..=9), rng.gen_range(1..=4))
}

/// A small Gaussian rational when the field is complex, real otherwise.
pub fn small_scalar<F: ExactField, R: Rng + ?Sized>(rng: &mut R) -> F {
    let re: F = small_rational(rng);
    if F::IS_COMPLEX && rng.gen::<bool>() {
        let im: F = small_rational(rng);
        F::from_parts(re.re(), im.re()).expect("complex field")
    } else {
        re
    }
}

pub fn vector<F: ExactField, R: Rng + ?Sized>(rng: &mut R, n: usize) -> Vec<F> {
    (0..n).map(|_| small_scalar(rng)).collect()
}

pub fn matrix<F: ExactField, R: Rng + ?Sized>(rng: &mut R, rows: usize, cols: usize) -> Matrix<F> {
    Matrix::from_fn(rows, cols, |_, _| small_scalar(rng))
}

/// Projection onto the span of `rank` random vectors (its actual rank may be
/// smaller when they happen to be dependent).
pub fn projection<F: ExactField, R: Rng + ?Sized>(rng: &mut R, n: usize, rank: usize) -> Projection<F> {
    Projection::onto_range(&matrix(rng, n, rank))
}

/// Projection of uniformly chosen target rank `0..=n`.
pub fn any_projection<F: ExactField, R: Rng + ?Sized>(rng: &mut R, n: usize) -> Projection<F> {
    let rank = rng.gen_range(0..=n);
    projection(rng, n, rank)
}

/// Rational unitary `(I − K)(I + K)⁻¹` from a random skew-Hermitian `K`
/// (real skew-symmetric over a real field). `I + K` is always invertible
/// because the eigenvalues of `K` are imaginary.
pub fn cayley_unitary<F: ExactField, R: Rng + ?Sized>(rng: &mut R, n: usize) -> Matrix<F> {
    let mut k = Matrix::zeros(n, n);
    for i in 0..n {
        for j in i + 1..n {
            let x: F = small_scalar(rng);
            k[(i, j)] = x.clone();
            k[(j, i)] = -x.conj();
        }
        if F::IS_COMPLEX {
            let im: F = small_rational(rng);
            k[(i, i)] = F::from_parts(num_traits::Zero::zero(), im.re()).expect("complex field");
        }
    }
    let id = Matrix::identity(n);
    let inv = id.add(&k).inverse().expect("I + K is invertible for skew-Hermitian K");
    id.sub(&k).mul(&inv)
}

/// Product of `count` plane rotations through Pythagorean angles on random
/// coordinate pairs, then a random diagonal phase over a complex field.
/// Entries stay small, unlike a dense Cayley transform.
pub fn givens_unitary<F: ExactField, R: Rng + ?Sized>(rng: &mut R, n: usize, count: usize) -> Matrix<F> {
    const TRIPLES: [(i64, i64, i64); 4] = [(3, 4, 5), (5, 12, 13), (8, 15, 17), (7, 24, 25)];
    let mut u = Matrix::identity(n);
    if n < 2 {
        return u;
    }
    for _ in 0..count {
        let i = rng.gen_range(0..n);
        let j = (i + rng.gen_range(1..n)) % n;
        let (a, b, c) = TRIPLES[rng.gen_range(0..TRIPLES.len())];
        let (cos, sin) = (F::from_ratio(a, c), F::from_ratio(b, c));
        let mut g = Matrix::identity(n);
        g[(i, i)] = cos.clone();
        g[(j, j)] = cos;
        g[(i, j)] = -sin.clone();
        g[(j, i)] = sin;
        u = g.mul(&u);
    }
    if F::IS_COMPLEX {
        let phases: Vec<F> = (0..n)
            .map(|_| match rng.gen_range(0..3) {
                0 => F::one(),
                1 => F::from_parts(F::from_ratio(3, 5).re(), F::from_ratio(4, 5).re()).expect("complex field"),
                _ => -F::one(),
            })
            .collect();
        u = Matrix::diag(&phases).mul(&u);
    }
    u
}

/// Permutation matrix sending basis vector `i` to `perm[i]`.
pub fn permutation_matrix<F: ExactField>(perm: &[usize]) -> Matrix<F> {
    let n = perm.len();
    let mut m = Matrix::zeros(n, n);
    for (i, &j) in perm.iter().enumerate() {
        m[(j, i)] = F::one();
    }
    m
}

#[cfg(test)]
mod tests {
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    use super::*;
    use crate::scalar::{GaussianRational, Rational};

    #[test]
    fn cayley_transform_is_unitary() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for n in 1..5 {
            let u: Matrix<GaussianRational> = cayley_unitary(&mut rng, n);
            assert!(u.mul(&u.adjoint()).is_identity());
            let v: Matrix<Rational> = cayley_unitary(&mut rng, n);
            assert!(v.mul(&v.adjoint()).is_identity());
            let g: Matrix<GaussianRational> = givens_unitary(&mut rng, n, 3);
            assert!(g.mul(&g.adjoint()).is_identity());
        }
    }

    #[test]
    fn random_projections_are_projections() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..10 {
            let p: Projection<GaussianRational> = any_projection(&mut rng, 3);
            assert!(p.matrix().is_projection());
        }
    }
}
