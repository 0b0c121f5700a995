//! Small dense solves generic over the scalar type.

use crate::scalar::Real;

pub fn det2<T: Real>(m: [[T; 2]; 2]) -> T {
    m[0][0] * m[1][1] - m[0][1] * m[1][0]
}

pub fn solve2<T: Real>(m: [[T; 2]; 2], b: [T; 2]) -> Option<[T; 2]> {
    let d = det2(m);
    let s = m.iter().flatten().fold(T::zero(), |a, x| a.max(x.abs()));
    if !(d.abs() > T::epsilon() * s * s) {
        return None;
    }
    Some([(b[0] * m[1][1] - b[1] * m[0][1]) / d, (m[0][0] * b[1] - m[1][0] * b[0]) / d])
}

/// Gaussian elimination with partial pivoting.
pub fn solve3<T: Real>(mut m: [[T; 3]; 3], mut b: [T; 3]) -> Option<[T; 3]> {
    let s = m.iter().flatten().fold(T::zero(), |a, x| a.max(x.abs()));
    for c in 0..3 {
        let p = (c..3).max_by(|&i, &j| m[i][c].abs().partial_cmp(&m[j][c].abs()).unwrap())?;
        if !(m[p][c].abs() > T::epsilon() * s) {
            return None;
        }
        m.swap(c, p);
        b.swap(c, p);
        for r in c + 1..3 {
            let f = m[r][c] / m[c][c];
            let pivot = m[c];
            for (x, y) in m[r].iter_mut().zip(pivot).skip(c) {
                *x = *x - f * y;
            }
            b[r] = b[r] - f * b[c];
        }
    }
    let mut x = [T::zero(); 3];
    for c in (0..3).rev() {
        let mut acc = b[c];
        for k in c + 1..3 {
            acc = acc - m[c][k] * x[k];
        }
        x[c] = acc / m[c][c];
    }
    Some(x)
}

pub fn inverse3<T: Real>(m: [[T; 3]; 3]) -> Option<[[T; 3]; 3]> {
    let mut inv = [[T::zero(); 3]; 3];
    for c in 0..3 {
        let mut e = [T::zero(); 3];
        e[c] = T::one();
        let col = solve3(m, e)?;
        for r in 0..3 {
            inv[r][c] = col[r];
        }
    }
    Some(inv)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn solves_and_inverts() {
        let m = [[0.0, 2.0, 1.0], [1.0, -1.0, 0.5], [3.0, 0.0, 2.0]];
        let x = solve3(m, [1.0, 2.0, 3.0]).unwrap();
        for r in 0..3 {
            let y: f64 = (0..3).map(|k| m[r][k] * x[k]).sum();
            assert!((y - [1.0, 2.0, 3.0][r]).abs() < 1e-14);
        }
        let inv = inverse3(m).unwrap();
        let p: f64 = (0..3).map(|k| m[1][k] * inv[k][1]).sum();
        assert!((p - 1.0).abs() < 1e-14);
        assert!(solve2([[1.0, 2.0], [2.0, 4.0]], [1.0, 1.0]).is_none());
    }
}
