use crate::scalar::Real;

/// Lower Cholesky factor of a symmetric positive definite matrix.
#[derive(Clone, Debug)]
pub struct Cholesky<T> {
    l: Vec<Vec<T>>,
}

/// Index and value of the first non-positive pivot.
#[derive(Clone, Debug)]
pub struct PivotFailure {
    pub pivot: usize,
    pub value: f64,
    /// `(max L_kk / min L_kk)²` over the pivots that succeeded.
    pub condition: f64,
}

pub fn cholesky<T: Real>(a: &[Vec<T>]) -> Result<Cholesky<T>, PivotFailure> {
    let n = a.len();
    let mut l: Vec<Vec<T>> = vec![Vec::new(); n];
    for i in 0..n {
        let mut row: Vec<T> = Vec::with_capacity(i + 1);
        for j in 0..=i {
            let mut s = a[i][j].clone();
            let lj: &[T] = if j == i { &row } else { &l[j] };
            for k in 0..j {
                s -= row[k].clone() * lj[k].clone();
            }
            if i == j {
                if !(s > T::zero()) || !s.is_finite() {
                    return Err(PivotFailure {
                        pivot: i,
                        value: s.to_f64_lossy(),
                        condition: pivot_ratio(&l[..i]),
                    });
                }
                row.push(s.sqrt());
            } else {
                row.push(s / l[j][j].clone());
            }
        }
        l[i] = row;
    }
    Ok(Cholesky { l })
}

fn pivot_ratio<T: Real>(rows: &[Vec<T>]) -> f64 {
    if rows.is_empty() {
        return 1.0;
    }
    let d: Vec<T> = rows.iter().enumerate().map(|(i, r)| r[i].clone()).collect();
    let max = d.iter().cloned().fold(T::zero(), T::max_of);
    let min = d.iter().cloned().fold(max.clone(), T::min_of);
    let r = max / min;
    (r.clone() * r).to_f64_lossy()
}

impl<T: Real> Cholesky<T> {
    pub fn dim(&self) -> usize {
        self.l.len()
    }

    pub fn solve(&self, b: &[T]) -> Vec<T> {
        let n = self.dim();
        let mut y: Vec<T> = Vec::with_capacity(n);
        for i in 0..n {
            let mut s = b[i].clone();
            for k in 0..i {
                s -= self.l[i][k].clone() * y[k].clone();
            }
            y.push(s / self.l[i][i].clone());
        }
        let mut x = vec![T::zero(); n];
        for i in (0..n).rev() {
            let mut s = y[i].clone();
            for k in i + 1..n {
                s -= self.l[k][i].clone() * x[k].clone();
            }
            x[i] = s / self.l[i][i].clone();
        }
        x
    }

    pub fn inverse(&self) -> Vec<Vec<T>> {
        let n = self.dim();
        let mut cols = Vec::with_capacity(n);
        for j in 0..n {
            let mut e = vec![T::zero(); n];
            e[j] = T::one();
            cols.push(self.solve(&e));
        }
        // symmetric: row i of the inverse equals column i
        cols
    }

    /// `(max_i L_ii / min_i L_ii)²`, a cheap lower estimate of the condition number.
    pub fn condition_estimate(&self) -> f64 {
        pivot_ratio(&self.l)
    }
}

pub fn mat_vec<T: Real>(a: &[Vec<T>], x: &[T]) -> Vec<T> {
    a.iter()
        .map(|row| {
            row.iter()
                .zip(x)
                .fold(T::zero(), |s, (a, b)| s + a.clone() * b.clone())
        })
        .collect()
}

pub fn mat_mul<T: Real>(a: &[Vec<T>], b: &[Vec<T>]) -> Vec<Vec<T>> {
    let m = b.first().map_or(0, Vec::len);
    a.iter()
        .map(|row| {
            (0..m)
                .map(|j| {
                    row.iter()
                        .zip(b)
                        .fold(T::zero(), |s, (x, brow)| s + x.clone() * brow[j].clone())
                })
                .collect()
        })
        .collect()
}
