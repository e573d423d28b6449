//! Exact integer and rational linear algebra on small matrices.

use nalgebra::DMatrix;
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

fn to_rational(m: &DMatrix<i64>) -> Vec<Vec<BigRational>> {
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| BigRational::from_integer(BigInt::from(m[(i, j)]))).collect())
        .collect()
}

/// Reduced row echelon form in place; returns pivot columns.
pub fn rref(rows: &mut [Vec<BigRational>]) -> Vec<usize> {
    let nrows = rows.len();
    let ncols = if nrows == 0 { 0 } else { rows[0].len() };
    let mut pivots = Vec::new();
    let mut r = 0;
    for c in 0..ncols {
        if r == nrows {
            break;
        }
        let Some(p) = (r..nrows).find(|&i| !rows[i][c].is_zero()) else { continue };
        rows.swap(r, p);
        let inv = rows[r][c].recip();
        for x in rows[r].iter_mut() {
            *x = &*x * &inv;
        }
        for i in 0..nrows {
            if i != r && !rows[i][c].is_zero() {
                let f = rows[i][c].clone();
                for j in 0..ncols {
                    let delta = &f * &rows[r][j];
                    rows[i][j] -= delta;
                }
            }
        }
        pivots.push(c);
        r += 1;
    }
    pivots
}

pub fn integer_rank(m: &DMatrix<i64>) -> usize {
    rref(&mut to_rational(m)).len()
}

/// Solves `A x = b` over the rationals; `None` if inconsistent. Free variables are set to zero.
pub fn solve_rational(a: &[Vec<BigRational>], b: &[BigRational]) -> Option<Vec<BigRational>> {
    let n = a.first().map_or(0, |r| r.len());
    let mut aug: Vec<Vec<BigRational>> =
        a.iter().zip(b).map(|(row, bi)| row.iter().cloned().chain(std::iter::once(bi.clone())).collect()).collect();
    let pivots = rref(&mut aug);
    if pivots.last() == Some(&n) {
        return None;
    }
    let mut x = vec![BigRational::zero(); n];
    for (r, &c) in pivots.iter().enumerate() {
        x[c] = aug[r][n].clone();
    }
    Some(x)
}

/// Smith normal form `U M V = D` with unimodular `U`, `V`.
#[derive(Clone, Debug)]
pub struct Smith {
    pub u: DMatrix<i64>,
    pub v: DMatrix<i64>,
    pub diagonal: Vec<i64>,
    pub rank: usize,
}

pub fn smith_normal_form(m: &DMatrix<i64>) -> Smith {
    let (nr, nc) = m.shape();
    let mut d = m.clone();
    let mut u = DMatrix::<i64>::identity(nr, nr);
    let mut v = DMatrix::<i64>::identity(nc, nc);
    let mut t = 0;
    while t < nr.min(nc) {
        // Pivot: smallest nonzero magnitude in the trailing block.
        let mut best: Option<(usize, usize)> = None;
        for i in t..nr {
            for j in t..nc {
                if d[(i, j)] != 0 && best.is_none_or(|(bi, bj)| d[(i, j)].abs() < d[(bi, bj)].abs()) {
                    best = Some((i, j));
                }
            }
        }
        let Some((pi, pj)) = best else { break };
        d.swap_rows(t, pi);
        u.swap_rows(t, pi);
        d.swap_columns(t, pj);
        v.swap_columns(t, pj);
        let mut clean = true;
        for i in t + 1..nr {
            let q = d[(i, t)].div_euclid(d[(t, t)]);
            if q != 0 {
                for j in 0..nc {
                    d[(i, j)] -= q * d[(t, j)];
                }
                for j in 0..nr {
                    u[(i, j)] -= q * u[(t, j)];
                }
            }
            clean &= d[(i, t)] == 0;
        }
        for j in t + 1..nc {
            let q = d[(t, j)].div_euclid(d[(t, t)]);
            if q != 0 {
                for i in 0..nr {
                    d[(i, j)] -= q * d[(i, t)];
                }
                for i in 0..nc {
                    v[(i, j)] -= q * v[(i, t)];
                }
            }
            clean &= d[(t, j)] == 0;
        }
        if !clean {
            continue;
        }
        // Divisibility: fold any entry not divisible by the pivot into row t.
        let mut bad = None;
        'outer: for i in t + 1..nr {
            for j in t + 1..nc {
                if d[(i, j)] % d[(t, t)] != 0 {
                    bad = Some(i);
                    break 'outer;
                }
            }
        }
        if let Some(i) = bad {
            for j in 0..nc {
                d[(t, j)] += d[(i, j)];
            }
            for j in 0..nr {
                u[(t, j)] += u[(i, j)];
            }
            continue;
        }
        if d[(t, t)] < 0 {
            for j in 0..nc {
                d[(t, j)] = -d[(t, j)];
            }
            for j in 0..nr {
                u[(t, j)] = -u[(t, j)];
            }
        }
        t += 1;
    }
    let diagonal: Vec<i64> = (0..nr.min(nc)).map(|i| d[(i, i)]).collect();
    let rank = diagonal.iter().filter(|&&x| x != 0).count();
    Smith { u, v, diagonal, rank }
}

/// Inverse of a unimodular integer matrix.
pub fn unimodular_inverse(m: &DMatrix<i64>) -> DMatrix<i64> {
    let n = m.nrows();
    let mut rows = to_rational(m);
    for (i, row) in rows.iter_mut().enumerate() {
        for j in 0..n {
            row.push(if i == j { BigRational::one() } else { BigRational::zero() });
        }
    }
    let pivots = rref(&mut rows);
    assert_eq!(pivots.len(), n, "matrix is singular");
    DMatrix::from_fn(n, n, |i, j| {
        let x = &rows[i][n + j];
        assert!(x.is_integer(), "matrix is not unimodular");
        i64::try_from(x.to_integer()).expect("entry overflow")
    })
}

/// Integer basis (columns) of `ker M ∩ Z^n` for integer `M`.
pub fn integer_kernel(m: &DMatrix<i64>) -> DMatrix<i64> {
    let s = smith_normal_form(m);
    let n = m.ncols();
    s.v.columns(s.rank, n - s.rank).into_owned()
}

pub fn rational_to_f64(x: &BigRational) -> f64 {
    let (n, d) = (x.numer(), x.denom());
    let scale = n.bits().max(d.bits()).saturating_sub(900) as u32;
    let nf = shifted_f64(n, scale);
    let df = shifted_f64(d, scale);
    if d.is_negative() {
        -nf / df.abs()
    } else {
        nf / df
    }
}

fn shifted_f64(x: &BigInt, shift: u32) -> f64 {
    let y: BigInt = x >> shift;
    y.to_string().parse::<f64>().unwrap_or(f64::NAN)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn smith_recovers_diagonal() {
        let m = DMatrix::from_row_slice(3, 3, &[2, 4, 4, -6, 6, 12, 10, -4, -16]);
        let s = smith_normal_form(&m);
        assert_eq!(s.diagonal, vec![2, 6, 12]);
        let prod = &s.u * &m * &s.v;
        for i in 0..3 {
            for j in 0..3 {
                assert_eq!(prod[(i, j)], if i == j { s.diagonal[i] } else { 0 });
            }
        }
    }

    #[test]
    fn kernel_of_rank_two_form() {
        let m = DMatrix::from_row_slice(3, 3, &[0, 1, 1, -1, 0, 1, -1, -1, 0]);
        let k = integer_kernel(&m);
        assert_eq!(k.ncols(), 1);
        let prod = &m * &k;
        assert!(prod.iter().all(|&x| x == 0));
        assert_eq!(k.column(0).iter().map(|x| x.abs()).collect::<Vec<_>>(), vec![1, 1, 1]);
    }

    #[test]
    fn unimodular_inverse_roundtrip() {
        let m = DMatrix::from_row_slice(3, 3, &[1, 2, 2, 1, 4, 3, 1, 1, 2]);
        let inv = unimodular_inverse(&m);
        assert_eq!(&m * &inv, DMatrix::identity(3, 3));
    }
}
