//! Small dense helpers: incremental row reduction for rank and span tests.

/// Reduced row-echelon basis of a row space, grown one vector at a time.
#[derive(Debug, Clone)]
pub struct RowSpace {
    dim: usize,
    tol: f64,
    rows: Vec<Vec<f64>>,
    pivots: Vec<usize>,
}

impl RowSpace {
    pub fn new(dim: usize, tol: f64) -> Self {
        Self {
            dim,
            tol,
            rows: Vec::new(),
            pivots: Vec::new(),
        }
    }

    pub fn from_rows<'a>(dim: usize, tol: f64, rows: impl IntoIterator<Item = &'a [f64]>) -> Self {
        let mut space = Self::new(dim, tol);
        for r in rows {
            space.insert(r);
        }
        space
    }

    pub fn rank(&self) -> usize {
        self.rows.len()
    }

    fn reduce(&self, v: &[f64]) -> Vec<f64> {
        assert_eq!(v.len(), self.dim, "vector length differs from row space dimension");
        let mut r = v.to_vec();
        for (row, &p) in self.rows.iter().zip(&self.pivots) {
            let f = r[p];
            if f != 0.0 {
                for (a, b) in r.iter_mut().zip(row) {
                    *a -= f * b;
                }
            }
        }
        r
    }

    /// True iff `v` lies in the span within the tolerance.
    pub fn contains(&self, v: &[f64]) -> bool {
        self.reduce(v).iter().all(|x| x.abs() <= self.tol)
    }

    /// Adds `v`; returns whether the rank grew.
    pub fn insert(&mut self, v: &[f64]) -> bool {
        let r = self.reduce(v);
        let (p, &big) = match r
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.abs().total_cmp(&b.1.abs()))
        {
            Some(x) => x,
            None => return false,
        };
        if big.abs() <= self.tol {
            return false;
        }
        let r: Vec<f64> = r.iter().map(|x| x / big).collect();
        for (row, _) in self.rows.iter_mut().zip(&self.pivots) {
            let f = row[p];
            if f != 0.0 {
                for (a, b) in row.iter_mut().zip(&r) {
                    *a -= f * b;
                }
            }
        }
        self.rows.push(r);
        self.pivots.push(p);
        true
    }
}

/// Rank of a set of equal-length rows.
pub fn rank(rows: &[Vec<f64>], dim: usize, tol: f64) -> usize {
    RowSpace::from_rows(dim, tol, rows.iter().map(Vec::as_slice)).rank()
}

/// Indices of a maximal linearly independent subset, in input order.
pub fn independent_rows(rows: &[Vec<f64>], dim: usize, tol: f64) -> Vec<usize> {
    let mut space = RowSpace::new(dim, tol);
    rows.iter()
        .enumerate()
        .filter(|(_, r)| space.insert(r))
        .map(|(i, _)| i)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rank_of_dependent_rows() {
        let rows = vec![vec![1.0, 2.0, 3.0], vec![2.0, 4.0, 6.0], vec![0.0, 1.0, 1.0]];
        assert_eq!(rank(&rows, 3, 1e-10), 2);
        assert_eq!(independent_rows(&rows, 3, 1e-10), vec![0, 2]);
    }

    #[test]
    fn span_membership() {
        let rows = [vec![1.0, -1.0, 0.0], vec![0.0, 1.0, -1.0]];
        let s = RowSpace::from_rows(3, 1e-10, rows.iter().map(Vec::as_slice));
        assert!(s.contains(&[1.0, 0.0, -1.0]));
        assert!(!s.contains(&[1.0, 0.0, 0.0]));
    }
}
