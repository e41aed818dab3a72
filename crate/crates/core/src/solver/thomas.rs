/// LU factors of a tridiagonal matrix, reusable across right-hand sides.
///
/// `lower[0]` and `upper[n - 1]` are ignored.
pub(crate) struct Tridiagonal {
    lower: Vec<f64>,
    // modified upper diagonal and pivots from forward elimination
    c: Vec<f64>,
    pivot: Vec<f64>,
}

impl Tridiagonal {
    /// Factorises without pivoting; fine for the diagonally dominant
    /// matrices the implicit scheme produces.
    pub(crate) fn factor(lower: Vec<f64>, diag: &[f64], upper: &[f64]) -> Option<Self> {
        let n = diag.len();
        let mut c = vec![0.0; n];
        let mut pivot = vec![0.0; n];
        for i in 0..n {
            let p = if i == 0 { diag[0] } else { diag[i] - lower[i] * c[i - 1] };
            if p == 0.0 || !p.is_finite() {
                return None;
            }
            pivot[i] = p;
            c[i] = if i + 1 < n { upper[i] / p } else { 0.0 };
        }
        Some(Tridiagonal { lower, c, pivot })
    }

    pub(crate) fn solve_in_place(&self, rhs: &mut [f64]) {
        let n = rhs.len();
        for i in 0..n {
            let prev = if i == 0 { 0.0 } else { self.lower[i] * rhs[i - 1] };
            rhs[i] = (rhs[i] - prev) / self.pivot[i];
        }
        for i in (0..n.saturating_sub(1)).rev() {
            rhs[i] -= self.c[i] * rhs[i + 1];
        }
    }
}
