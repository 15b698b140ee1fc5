use rand::Rng;

use super::Real;

/// Row-major dense matrix. Vectors are stored as `n x 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor2<T> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
}

impl<T: Real> Tensor2<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Tensor2 {
            rows,
            cols,
            data: vec![T::zero(); rows * cols],
        }
    }

    pub fn filled(rows: usize, cols: usize, value: T) -> Self {
        Tensor2 {
            rows,
            cols,
            data: vec![value; rows * cols],
        }
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<T>) -> Self {
        assert_eq!(rows * cols, data.len(), "tensor data length does not match {rows}x{cols}");
        Tensor2 { rows, cols, data }
    }

    pub fn column(values: Vec<T>) -> Self {
        let n = values.len();
        Self::from_vec(n, 1, values)
    }

    pub fn identity(n: usize) -> Self {
        let mut t = Self::zeros(n, n);
        for i in 0..n {
            t[(i, i)] = T::one();
        }
        t
    }

    pub fn uniform<R: Rng>(rows: usize, cols: usize, bound: f64, rng: &mut R) -> Self {
        let data = (0..rows * cols)
            .map(|_| T::lit(rng.gen_range(-bound..=bound)))
            .collect();
        Tensor2 { rows, cols, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn as_slice(&self) -> &[T] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [T] {
        &mut self.data
    }

    pub fn row(&self, r: usize) -> &[T] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn row_mut(&mut self, r: usize) -> &mut [T] {
        &mut self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn fill(&mut self, value: T) {
        self.data.iter_mut().for_each(|x| *x = value);
    }

    pub fn map<U: Real>(&self, f: impl Fn(T) -> U) -> Tensor2<U> {
        Tensor2 {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&x| f(x)).collect(),
        }
    }

    pub fn cast<U: Real>(&self) -> Tensor2<U> {
        self.map(|x| U::lit(x.to_f64().unwrap_or(f64::NAN)))
    }

    /// `out = self * x` for a column vector `x`.
    pub fn matvec_into(&self, x: &[T], out: &mut [T]) {
        debug_assert_eq!(x.len(), self.cols);
        debug_assert_eq!(out.len(), self.rows);
        for (o, row) in out.iter_mut().zip(self.data.chunks_exact(self.cols)) {
            *o = dot(row, x);
        }
    }

    /// `out += self * x`.
    pub fn matvec_add(&self, x: &[T], out: &mut [T]) {
        debug_assert_eq!(x.len(), self.cols);
        debug_assert_eq!(out.len(), self.rows);
        for (o, row) in out.iter_mut().zip(self.data.chunks_exact(self.cols)) {
            *o += dot(row, x);
        }
    }

    pub fn matvec(&self, x: &[T]) -> Vec<T> {
        let mut out = vec![T::zero(); self.rows];
        self.matvec_into(x, &mut out);
        out
    }

    /// `out += selfᵀ * y` for a column vector `y` of length `rows`.
    pub fn matvec_t_add(&self, y: &[T], out: &mut [T]) {
        debug_assert_eq!(y.len(), self.rows);
        debug_assert_eq!(out.len(), self.cols);
        for (&yi, row) in y.iter().zip(self.data.chunks_exact(self.cols)) {
            if yi == T::zero() {
                continue;
            }
            axpy(yi, row, out);
        }
    }

    /// `self += scale * a bᵀ`.
    pub fn add_outer(&mut self, a: &[T], b: &[T], scale: T) {
        debug_assert_eq!(a.len(), self.rows);
        debug_assert_eq!(b.len(), self.cols);
        let cols = self.cols;
        for (&ai, row) in a.iter().zip(self.data.chunks_exact_mut(cols)) {
            let s = ai * scale;
            if s == T::zero() {
                continue;
            }
            axpy(s, b, row);
        }
    }

    pub fn matmul(&self, other: &Tensor2<T>) -> Tensor2<T> {
        assert_eq!(self.cols, other.rows, "matmul shape mismatch");
        let mut out = Tensor2::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == T::zero() {
                    continue;
                }
                let src = other.row(k);
                axpy(a, src, out.row_mut(i));
            }
        }
        out
    }

    /// `self += scale * other`.
    pub fn axpy(&mut self, scale: T, other: &Tensor2<T>) {
        assert_eq!(self.shape(), other.shape());
        axpy(scale, &other.data, &mut self.data);
    }

    pub fn sum_squares(&self) -> T {
        self.data.iter().map(|&x| x * x).sum()
    }

    pub fn all_finite(&self) -> bool {
        self.data.iter().all(|x| x.is_finite())
    }
}

impl<T> std::ops::Index<(usize, usize)> for Tensor2<T> {
    type Output = T;

    fn index(&self, (r, c): (usize, usize)) -> &T {
        &self.data[r * self.cols + c]
    }
}

impl<T> std::ops::IndexMut<(usize, usize)> for Tensor2<T> {
    fn index_mut(&mut self, (r, c): (usize, usize)) -> &mut T {
        &mut self.data[r * self.cols + c]
    }
}

#[inline]
pub(crate) fn dot<T: Real>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).fold(T::zero(), |acc, (&x, &y)| acc + x * y)
}

#[inline]
pub(crate) fn axpy<T: Real>(scale: T, x: &[T], y: &mut [T]) {
    for (yi, &xi) in y.iter_mut().zip(x) {
        *yi += scale * xi;
    }
}

/// A named trainable tensor with its gradient accumulator.
#[derive(Debug, Clone, PartialEq)]
pub struct Parameter<T> {
    pub name: String,
    pub value: Tensor2<T>,
    pub grad: Tensor2<T>,
    /// Whether the L2 penalty applies (weight matrices yes, biases and
    /// normalization affine terms no).
    pub decay: bool,
}

impl<T: Real> Parameter<T> {
    pub fn new(name: impl Into<String>, value: Tensor2<T>, decay: bool) -> Self {
        let grad = Tensor2::zeros(value.rows(), value.cols());
        Parameter {
            name: name.into(),
            value,
            grad,
            decay,
        }
    }

    pub fn zero_grad(&mut self) {
        self.grad.fill(T::zero());
    }

    pub fn cast<U: Real>(&self) -> Parameter<U> {
        Parameter {
            name: self.name.clone(),
            value: self.value.cast(),
            grad: self.grad.cast(),
            decay: self.decay,
        }
    }
}
