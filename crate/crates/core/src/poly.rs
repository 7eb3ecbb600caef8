//! Sparse multivariate polynomials over an exact field and fraction-free
//! (Bareiss) elimination on matrices of them.

use std::collections::BTreeMap;

use crate::matrix::Matrix;
use crate::scalar::ExactField;

/// `Σ c_α x^α` with exponent vectors as keys.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Poly<F> {
    nvars: usize,
    terms: BTreeMap<Vec<u32>, F>,
}

impl<F: ExactField> Poly<F> {
    pub fn zero(nvars: usize) -> Self {
        Poly { nvars, terms: BTreeMap::new() }
    }

    pub fn constant(nvars: usize, c: F) -> Self {
        let mut p = Self::zero(nvars);
        if !c.is_zero() {
            p.terms.insert(vec![0; nvars], c);
        }
        p
    }

    /// `Σ coeffs[i] x_i`.
    pub fn linear(coeffs: &[F]) -> Self {
        let n = coeffs.len();
        let mut p = Self::zero(n);
        for (i, c) in coeffs.iter().enumerate() {
            if !c.is_zero() {
                let mut e = vec![0; n];
                e[i] = 1;
                p.terms.insert(e, c.clone());
            }
        }
        p
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn term_count(&self) -> usize {
        self.terms.len()
    }

    pub fn degree(&self) -> u32 {
        self.terms.keys().map(|e| e.iter().sum()).max().unwrap_or(0)
    }

    pub fn is_constant(&self) -> bool {
        self.terms.keys().all(|e| e.iter().all(|&d| d == 0))
    }

    fn add_term(&mut self, e: Vec<u32>, c: F) {
        if c.is_zero() {
            return;
        }
        match self.terms.entry(e) {
            std::collections::btree_map::Entry::Vacant(v) => {
                v.insert(c);
            }
            std::collections::btree_map::Entry::Occupied(mut o) => {
                *o.get_mut() += c;
                if o.get().is_zero() {
                    o.remove();
                }
            }
        }
    }

    pub fn add(&self, rhs: &Self) -> Self {
        let mut out = self.clone();
        for (e, c) in &rhs.terms {
            out.add_term(e.clone(), c.clone());
        }
        out
    }

    pub fn sub(&self, rhs: &Self) -> Self {
        let mut out = self.clone();
        for (e, c) in &rhs.terms {
            out.add_term(e.clone(), -c.clone());
        }
        out
    }

    pub fn mul(&self, rhs: &Self) -> Self {
        let mut out = Self::zero(self.nvars);
        for (e1, c1) in &self.terms {
            for (e2, c2) in &rhs.terms {
                let e: Vec<u32> = e1.iter().zip(e2).map(|(a, b)| a + b).collect();
                out.add_term(e, c1.mul_ref(c2));
            }
        }
        out
    }

    pub fn scale(&self, c: &F) -> Self {
        if c.is_zero() {
            return Self::zero(self.nvars);
        }
        Poly { nvars: self.nvars, terms: self.terms.iter().map(|(e, x)| (e.clone(), x.mul_ref(c))).collect() }
    }

    /// Exact quotient `self / d`; `None` if `d` does not divide `self`.
    pub fn div_exact(&self, d: &Self) -> Option<Self> {
        let (lead_e, lead_c) = d.terms.iter().next_back()?;
        let lead_inv = lead_c.inv()?;
        let mut rem = self.clone();
        let mut quot = Self::zero(self.nvars);
        while let Some((e, c)) = rem.terms.iter().next_back() {
            if e.iter().zip(lead_e).any(|(a, b)| a < b) {
                return None;
            }
            let qe: Vec<u32> = e.iter().zip(lead_e).map(|(a, b)| a - b).collect();
            let qc = c.mul_ref(&lead_inv);
            let mut t = Self::zero(self.nvars);
            t.terms.insert(qe.clone(), qc.clone());
            rem = rem.sub(&t.mul(d));
            quot.add_term(qe, qc);
        }
        Some(quot)
    }

    pub fn eval(&self, x: &[F]) -> F {
        let mut total = F::zero();
        for (e, c) in &self.terms {
            let mut v = c.clone();
            for (xi, &k) in x.iter().zip(e) {
                for _ in 0..k {
                    v = v.mul_ref(xi);
                }
            }
            total += v;
        }
        total
    }

    /// `∂/∂x_i`.
    pub fn derivative(&self, i: usize) -> Self {
        let mut out = Self::zero(self.nvars);
        for (e, c) in &self.terms {
            if e[i] == 0 {
                continue;
            }
            let mut f = e.clone();
            f[i] -= 1;
            out.add_term(f, c.mul_ref(&F::from_i64(e[i] as i64)));
        }
        out
    }

    pub fn gradient_at(&self, x: &[F]) -> Vec<F> {
        (0..self.nvars).map(|i| self.derivative(i).eval(x)).collect()
    }

    /// `p(B y)` for the `nvars × m` matrix `B`, a polynomial in `m` variables.
    pub fn substitute_linear(&self, b: &Matrix<F>) -> Self {
        let m = b.cols();
        let forms: Vec<Poly<F>> = (0..self.nvars).map(|i| Poly::linear(b.row(i))).collect();
        let mut out = Poly::zero(m);
        for (e, c) in &self.terms {
            let mut t = Poly::constant(m, c.clone());
            for (form, &k) in forms.iter().zip(e) {
                for _ in 0..k {
                    t = t.mul(form);
                }
            }
            out = out.add(&t);
        }
        out
    }
}

/// Result of symbolic elimination: the rank over the field of rational
/// functions and the last pivot, which is (up to sign) a nonzero maximal
/// minor.
#[derive(Clone, Debug)]
pub struct SymbolicRank<F> {
    pub rank: usize,
    pub last_pivot: Poly<F>,
}

/// Fraction-free Gaussian elimination with full pivoting. Every division is
/// exact by Sylvester's identity.
pub fn bareiss_rank<F: ExactField>(nvars: usize, mut a: Vec<Vec<Poly<F>>>) -> SymbolicRank<F> {
    let rows = a.len();
    let cols = a.first().map_or(0, Vec::len);
    let mut prev = Poly::constant(nvars, F::one());
    let mut rank = 0;
    for k in 0..rows.min(cols) {
        // sparsest nonzero pivot in the trailing block
        let mut best: Option<(usize, usize, usize)> = None;
        for (i, row) in a.iter().enumerate().skip(k) {
            for (j, p) in row.iter().enumerate().skip(k) {
                if !p.is_zero() && best.map_or(true, |b| p.term_count() < b.2) {
                    best = Some((i, j, p.term_count()));
                }
            }
        }
        let Some((pi, pj, _)) = best else { break };
        a.swap(k, pi);
        for row in a.iter_mut() {
            row.swap(k, pj);
        }
        let pivot = a[k][k].clone();
        for i in k + 1..rows {
            for j in k + 1..cols {
                let num = pivot.mul(&a[i][j]).sub(&a[i][k].mul(&a[k][j]));
                a[i][j] = num.div_exact(&prev).expect("Bareiss division is exact");
            }
            a[i][k] = Poly::zero(nvars);
        }
        prev = pivot;
        rank += 1;
    }
    SymbolicRank { rank, last_pivot: prev }
}
