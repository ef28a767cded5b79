use num_complex::Complex64;

pub type CMatrix = Vec<Vec<Complex64>>;

/// Determinant by Gaussian elimination with partial pivoting.
pub fn det(mut a: CMatrix) -> Complex64 {
    let n = a.len();
    if n == 0 {
        return Complex64::new(1.0, 0.0);
    }
    let mut d = Complex64::new(1.0, 0.0);
    for col in 0..n {
        let piv = (col..n).max_by(|&i, &j| a[i][col].norm().total_cmp(&a[j][col].norm())).unwrap();
        if a[piv][col].norm() == 0.0 {
            return Complex64::new(0.0, 0.0);
        }
        if piv != col {
            a.swap(piv, col);
            d = -d;
        }
        let p = a[col][col];
        d *= p;
        for row in col + 1..n {
            let f = a[row][col] / p;
            if f.norm() == 0.0 {
                continue;
            }
            for k in col..n {
                let t = a[col][k];
                a[row][k] -= f * t;
            }
        }
    }
    d
}

fn minor(a: &CMatrix, skip_row: usize, skip_col: usize) -> CMatrix {
    a.iter()
        .enumerate()
        .filter(|(i, _)| *i != skip_row)
        .map(|(_, row)| row.iter().enumerate().filter(|(j, _)| *j != skip_col).map(|(_, v)| *v).collect())
        .collect()
}

/// Adjugate matrix, `adj[i][j] = (-1)^(i+j) det(minor(a, j, i))`.
pub fn adjugate(a: &CMatrix) -> CMatrix {
    let n = a.len();
    if n == 1 {
        return vec![vec![Complex64::new(1.0, 0.0)]];
    }
    let mut adj = vec![vec![Complex64::new(0.0, 0.0); n]; n];
    for (i, row) in adj.iter_mut().enumerate() {
        for (j, v) in row.iter_mut().enumerate() {
            let sign = if (i + j) % 2 == 0 { 1.0 } else { -1.0 };
            *v = det(minor(a, j, i)) * sign;
        }
    }
    adj
}
