use super::Scalar;

/// Dense 3x3 matrix over any [`Scalar`], row-major.
#[derive(Clone, Debug)]
pub struct Mat3<T>(pub [[T; 3]; 3]);

impl<T: Scalar> Mat3<T> {
    pub fn from_fn(mut f: impl FnMut(usize, usize) -> T) -> Self {
        Mat3([
            [f(0, 0), f(0, 1), f(0, 2)],
            [f(1, 0), f(1, 1), f(1, 2)],
            [f(2, 0), f(2, 1), f(2, 2)],
        ])
    }

    pub fn from_f64(m: &[[f64; 3]; 3]) -> Self {
        Self::from_fn(|i, j| T::from(m[i][j]))
    }

    pub fn identity() -> Self {
        Self::from_fn(|i, j| T::from(if i == j { 1.0 } else { 0.0 }))
    }

    pub fn values(&self) -> [[f64; 3]; 3] {
        let mut out = [[0.0; 3]; 3];
        for i in 0..3 {
            for j in 0..3 {
                out[i][j] = self.0[i][j].value();
            }
        }
        out
    }

    #[inline]
    pub fn at(&self, i: usize, j: usize) -> &T {
        &self.0[i][j]
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(|i, j| self.0[j][i].clone())
    }

    pub fn matmul(&self, rhs: &Self) -> Self {
        Self::from_fn(|i, j| {
            self.0[i][0].clone() * rhs.0[0][j].clone()
                + self.0[i][1].clone() * rhs.0[1][j].clone()
                + self.0[i][2].clone() * rhs.0[2][j].clone()
        })
    }

    pub fn add(&self, rhs: &Self) -> Self {
        Self::from_fn(|i, j| self.0[i][j].clone() + rhs.0[i][j].clone())
    }

    pub fn sub(&self, rhs: &Self) -> Self {
        Self::from_fn(|i, j| self.0[i][j].clone() - rhs.0[i][j].clone())
    }

    pub fn scale(&self, s: f64) -> Self {
        Self::from_fn(|i, j| self.0[i][j].clone() * s)
    }

    pub fn scale_by(&self, s: &T) -> Self {
        Self::from_fn(|i, j| self.0[i][j].clone() * s.clone())
    }

    pub fn trace(&self) -> T {
        self.0[0][0].clone() + self.0[1][1].clone() + self.0[2][2].clone()
    }

    pub fn det(&self) -> T {
        let m = &self.0;
        m[0][0].clone() * (m[1][1].clone() * m[2][2].clone() - m[1][2].clone() * m[2][1].clone())
            - m[0][1].clone() * (m[1][0].clone() * m[2][2].clone() - m[1][2].clone() * m[2][0].clone())
            + m[0][2].clone() * (m[1][0].clone() * m[2][1].clone() - m[1][1].clone() * m[2][0].clone())
    }

    /// Cofactor matrix; `cofactor(A) = det(A) A^{-T}`.
    pub fn cofactor(&self) -> Self {
        let m = &self.0;
        let c = |r0: usize, r1: usize, c0: usize, c1: usize| {
            m[r0][c0].clone() * m[r1][c1].clone() - m[r0][c1].clone() * m[r1][c0].clone()
        };
        Mat3([
            [c(1, 2, 1, 2), -c(1, 2, 0, 2), c(1, 2, 0, 1)],
            [-c(0, 2, 1, 2), c(0, 2, 0, 2), -c(0, 2, 0, 1)],
            [c(0, 1, 1, 2), -c(0, 1, 0, 2), c(0, 1, 0, 1)],
        ])
    }

    pub fn inverse_transpose(&self) -> Self {
        let inv_det = self.det().recip();
        self.cofactor().scale_by(&inv_det)
    }

    /// Frobenius inner product `<A : B> = tr(A^T B)`.
    pub fn dot(&self, rhs: &Self) -> T {
        let mut acc = T::from(0.0);
        for i in 0..3 {
            for j in 0..3 {
                acc = acc + self.0[i][j].clone() * rhs.0[i][j].clone();
            }
        }
        acc
    }

    pub fn norm2(&self) -> T {
        self.dot(self)
    }
}

impl Mat3<f64> {
    pub fn zeros() -> Self {
        Mat3([[0.0; 3]; 3])
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cofactor_gives_inverse() {
        let a = Mat3::<f64>([[2.0, 0.3, -0.1], [0.2, 1.5, 0.4], [0.0, -0.7, 3.0]]);
        let it = a.inverse_transpose();
        let p = a.matmul(&it.transpose());
        for i in 0..3 {
            for j in 0..3 {
                let e = if i == j { 1.0 } else { 0.0 };
                assert!((p.0[i][j] - e).abs() < 1e-14);
            }
        }
    }
}
