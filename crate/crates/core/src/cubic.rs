//! Real cubic polynomials: closed-form roots, Newton polishing, discriminant,
//! and roots of binary cubic forms lifted to jets.

use num_complex::Complex;

use crate::jet::Jet2;
use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RootClass {
    /// Three distinct real roots.
    ThreeReal,
    /// A repeated real root.
    Repeated,
    /// One real root and a complex pair.
    OneReal,
}

/// Discriminant of `a x^3 + b x^2 + c x + d`.
pub fn discriminant<T: Real>(a: T, b: T, c: T, d: T) -> T {
    let n = |x: f64| T::lit(x);
    b * b * c * c - n(4.0) * a * c * c * c - n(4.0) * b * b * b * d - n(27.0) * a * a * d * d + n(18.0) * a * b * c * d
}

/// Classifies a cubic by the sign of its discriminant relative to `tol`
/// (scaled by the coefficient magnitude).
pub fn classify<T: Real>(a: T, b: T, c: T, d: T, tol: T) -> RootClass {
    let disc = discriminant(a, b, c, d);
    let s = a.abs().max(b.abs()).max(c.abs()).max(d.abs());
    let scale = s * s * s * s;
    if disc > tol * scale {
        RootClass::ThreeReal
    } else if disc < -tol * scale {
        RootClass::OneReal
    } else {
        RootClass::Repeated
    }
}

fn eval<T: Real>(coef: [T; 4], x: Complex<T>) -> (Complex<T>, Complex<T>) {
    let [a, b, c, d] = coef;
    let p = ((x * a + b) * x + c) * x + d;
    let dp = (x * (a * T::lit(3.0)) + b * T::lit(2.0)) * x + c;
    (p, dp)
}

fn polish<T: Real>(coef: [T; 4], mut x: Complex<T>) -> Complex<T> {
    for _ in 0..4 {
        let (p, dp) = eval(coef, x);
        if dp.norm() == T::zero() {
            break;
        }
        let step = p / dp;
        let nx = x - step;
        if !(nx.re.is_finite() && nx.im.is_finite()) {
            break;
        }
        if eval(coef, nx).0.norm() > p.norm() {
            break;
        }
        x = nx;
    }
    x
}

/// Roots of `a x^3 + b x^2 + c x + d` with `a != 0`, sorted ascending by real
/// part then imaginary part. Real roots are returned with exactly zero imaginary part.
pub fn roots<T: Real>(a: T, b: T, c: T, d: T) -> [Complex<T>; 3] {
    let n = |x: f64| T::lit(x);
    let (b1, c1, d1) = (b / a, c / a, d / a);
    let shift = b1 / n(3.0);
    let p = c1 - b1 * b1 / n(3.0);
    let q = n(2.0) * b1 * b1 * b1 / n(27.0) - b1 * c1 / n(3.0) + d1;
    let disc = discriminant(a, b, c, d);
    let mut r: [Complex<T>; 3];
    let one_real = disc < T::zero();
    if !one_real && p < T::zero() {
        // trigonometric form: three real roots
        let m = n(2.0) * (-p / n(3.0)).sqrt();
        let arg = (n(3.0) * q / (p * m)).max(-T::one()).min(T::one());
        let theta = arg.acos() / n(3.0);
        let tau = n(2.0) * T::PI() / n(3.0);
        r = [0, 1, 2].map(|k| Complex::new(m * (theta - tau * T::from_usize(k).unwrap()).cos() - shift, T::zero()));
    } else if !one_real {
        // p == 0 and q == 0 up to rounding: triple root
        let x = -shift;
        r = [Complex::new(x, T::zero()); 3];
    } else {
        let half_q = q / n(2.0);
        let s = (half_q * half_q + p * p * p / n(27.0)).sqrt();
        let u = (-half_q + s).cbrt();
        let v = (-half_q - s).cbrt();
        let x1 = u + v - shift;
        let re = -(u + v) / n(2.0) - shift;
        let im = (u - v) * n(3.0).sqrt() / n(2.0);
        r = [Complex::new(x1, T::zero()), Complex::new(re, im.abs()), Complex::new(re, -im.abs())];
    }
    let coef = [a, b, c, d];
    for z in r.iter_mut() {
        let real = z.im == T::zero();
        *z = polish(coef, *z);
        if real {
            z.im = T::zero();
        }
    }
    r.sort_by(|x, y| {
        x.re.partial_cmp(&y.re)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(x.im.partial_cmp(&y.im).unwrap_or(std::cmp::Ordering::Equal))
    });
    r
}

/// Real roots of a cubic as a sorted vector (empty imaginary parts only).
pub fn real_roots<T: Real>(a: T, b: T, c: T, d: T) -> Vec<T> {
    roots(a, b, c, d).iter().filter(|z| z.im == T::zero()).map(|z| z.re).collect()
}

/// Lifts a real root `x0` of a cubic with jet coefficients to a jet root by
/// Newton iteration in jet arithmetic. Each step doubles the correct order.
pub fn lift_root<T: Real>(coef: [Jet2<T>; 4], x0: T) -> Jet2<T> {
    let [a, b, c, d] = coef;
    let three = T::lit(3.0);
    let two = T::lit(2.0);
    let mut x = Jet2::constant(x0);
    for _ in 0..3 {
        let p = ((a * x + b) * x + c) * x + d;
        let dp = (a * x * three + b * two) * x + c;
        x -= p / dp;
    }
    x
}

/// Projective roots `[p : q]` of the binary cubic
/// `k3 p^3 + k2 p^2 q + k1 p q^2 + k0 q^3` with jet coefficients, each returned
/// as a unit-normalized (at the base point) pair of jets.
pub fn binary_roots<T: Real>(k: [Jet2<T>; 4], tol: T) -> Result<[[Jet2<T>; 2]; 3], RootClass> {
    // Rotate (p, q) so the leading coefficient is as large as possible: no root at infinity.
    let mut best: Option<(T, T, [Jet2<T>; 4])> = None;
    for i in 0..12 {
        let th = T::PI() * T::from_usize(i).unwrap() / T::lit(12.0) + T::lit(0.1234);
        let (s, c) = th.sin_cos();
        let rot = rotate_binary(k, c, s);
        let lead = rot[0].re.abs();
        if best.as_ref().is_none_or(|b| lead > b.0) {
            best = Some((lead, th, rot));
        }
    }
    let (_, th, rk) = best.expect("candidates");
    let (s, c) = th.sin_cos();
    let re = [rk[0].re, rk[1].re, rk[2].re, rk[3].re];
    match classify(re[0], re[1], re[2], re[3], tol) {
        RootClass::ThreeReal => {}
        other => return Err(other),
    }
    let rr = real_roots(re[0], re[1], re[2], re[3]);
    if rr.len() != 3 {
        return Err(RootClass::OneReal);
    }
    let mut out = [[Jet2::constant(T::zero()); 2]; 3];
    for (slot, t0) in out.iter_mut().zip(rr) {
        let t = lift_root(rk, t0);
        // (p', q') = (t, 1), then rotate back: (p, q) = R(theta) (p', q')
        let one = Jet2::constant(T::one());
        let p = t * c - one * s;
        let q = t * s + one * c;
        let norm = (p.re * p.re + q.re * q.re).sqrt();
        *slot = [p / norm, q / norm];
    }
    Ok(out)
}

/// Coefficients of the binary cubic after substituting
/// `(p, q) = (c p' - s q', s p' + c q')`.
fn rotate_binary<T: Real>(k: [Jet2<T>; 4], c: T, s: T) -> [Jet2<T>; 4] {
    // product of three linear forms expanded coefficient-wise
    let [k3, k2, k1, k0] = k;
    let (c2, s2) = (c * c, s * s);
    let (c3, s3) = (c2 * c, s2 * s);
    let three = T::lit(3.0);
    let two = T::lit(2.0);
    // p^3 -> (c p' - s q')^3, p^2 q -> ..., etc.
    let p3 = [c3, -three * c2 * s, three * c * s2, -s3];
    let p2q = [c2 * s, c3 - two * c * s2, s3 - two * c2 * s, c * s2];
    let pq2 = [c * s2, two * c2 * s - s3, c3 - two * c * s2, -c2 * s];
    let q3 = [s3, three * s2 * c, three * s * c2, c3];
    let mut out = [Jet2::constant(T::zero()); 4];
    for i in 0..4 {
        out[i] = k3 * p3[i] + k2 * p2q[i] + k1 * pq2[i] + k0 * q3[i];
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn residual(a: f64, b: f64, c: f64, d: f64, z: Complex<f64>) -> f64 {
        (((z * a + b) * z + c) * z + d).norm()
    }

    #[test]
    fn three_real_roots_sorted() {
        // (x+1)(x^2-3x+1)
        let r = roots(1.0, -2.0, -2.0, 1.0);
        let s5 = 5f64.sqrt();
        let want = [-1.0, (3.0 - s5) / 2.0, (3.0 + s5) / 2.0];
        for (z, w) in r.iter().zip(want) {
            assert_eq!(z.im, 0.0);
            assert!((z.re - w).abs() < 1e-14);
        }
    }

    #[test]
    fn complex_pair() {
        let r = roots(1.0, 0.0, 0.0, 1.0);
        for z in r {
            assert!(residual(1.0, 0.0, 0.0, 1.0, z) < 1e-14);
        }
        assert_eq!(classify(1.0, 0.0, 0.0, 1.0, 1e-12), RootClass::OneReal);
        assert!(r[0].re < r[1].re);
    }

    #[test]
    fn triple_root() {
        let r = roots(1.0f64, -3.0, 3.0, -1.0);
        for z in r {
            assert!((z.re - 1.0).abs() < 1e-5);
        }
    }

    #[test]
    fn binary_roots_of_web_cubic() {
        // p q (p + q) = p^2 q + p q^2
        let k = [0.0f64, 1.0, 1.0, 0.0].map(Jet2::constant);
        let r = binary_roots(k, 1e-12).unwrap();
        let mut found = [false; 3];
        for [p, q] in r {
            if p.re.abs() < 1e-12 {
                found[0] = true;
            } else if q.re.abs() < 1e-12 {
                found[1] = true;
            } else if (p.re + q.re).abs() < 1e-12 {
                found[2] = true;
            }
        }
        assert_eq!(found, [true; 3]);
    }

    #[test]
    fn binary_one_real_root() {
        let k = [1.0, 0.0, 0.0, -1.0].map(Jet2::constant);
        assert_eq!(binary_roots(k, 1e-12).unwrap_err(), RootClass::OneReal);
    }

    #[test]
    fn lifted_roots_track_coefficients() {
        // x^3 - a x with a = 1 + x_var: roots 0, +-sqrt(a)
        let a = Jet2::var_x(1.0f64) + 3.0;
        let one = Jet2::constant(1.0);
        let zero = Jet2::constant(0.0);
        let r = lift_root([one, zero, -a, zero], 2.0);
        // d sqrt(a)/dx = 1/(2 sqrt a), d2 = -1/(4 a^{3/2})
        assert!((r.dx - 0.25).abs() < 1e-14);
        assert!((r.dxx + 1.0 / 32.0).abs() < 1e-14);
    }
}
