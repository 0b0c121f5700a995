//! Second-order forward-mode jets in two variables.
//!
//! A [`Jet2`] holds a value together with its first and second partial
//! derivatives with respect to two chart variables `x` and `y`. Arithmetic
//! propagates them exactly (truncated Taylor algebra), so any closed-form
//! expression evaluated on seeded jets returns its 2-jet.

use std::ops::{Add, AddAssign, Div, Mul, MulAssign, Neg, Sub, SubAssign};

use crate::scalar::{HasRe, Real, Scalar};

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Jet2<T> {
    pub re: T,
    pub dx: T,
    pub dy: T,
    pub dxx: T,
    pub dxy: T,
    pub dyy: T,
}

impl<T: Real> Jet2<T> {
    pub fn new(re: T, dx: T, dy: T, dxx: T, dxy: T, dyy: T) -> Self {
        Self { re, dx, dy, dxx, dxy, dyy }
    }

    pub fn constant(re: T) -> Self {
        let z = T::zero();
        Self::new(re, z, z, z, z, z)
    }

    /// The independent variable `x` evaluated at `x0`.
    pub fn var_x(x0: T) -> Self {
        let z = T::zero();
        Self::new(x0, T::one(), z, z, z, z)
    }

    /// The independent variable `y` evaluated at `y0`.
    pub fn var_y(y0: T) -> Self {
        let z = T::zero();
        Self::new(y0, z, T::one(), z, z, z)
    }

    /// Both seeded variables at a point.
    pub fn seed(x0: T, y0: T) -> (Self, Self) {
        (Self::var_x(x0), Self::var_y(y0))
    }

    /// Applies a scalar function with derivatives `f0, f1, f2` at `self.re`.
    #[inline]
    pub fn chain(self, f0: T, f1: T, f2: T) -> Self {
        Self {
            re: f0,
            dx: f1 * self.dx,
            dy: f1 * self.dy,
            dxx: f2 * self.dx * self.dx + f1 * self.dxx,
            dxy: f2 * self.dx * self.dy + f1 * self.dxy,
            dyy: f2 * self.dy * self.dy + f1 * self.dyy,
        }
    }

    /// Drops second-order information.
    pub fn first_order(self) -> Self {
        let z = T::zero();
        Self::new(self.re, self.dx, self.dy, z, z, z)
    }

    /// `∂/∂x` as a jet carrying only first-order information.
    pub fn diff_x(self) -> Self {
        let z = T::zero();
        Self::new(self.dx, self.dxx, self.dxy, z, z, z)
    }

    /// `∂/∂y` as a jet carrying only first-order information.
    pub fn diff_y(self) -> Self {
        let z = T::zero();
        Self::new(self.dy, self.dxy, self.dyy, z, z, z)
    }

    /// Exchange the roles of `x` and `y`.
    pub fn swap_xy(self) -> Self {
        Self::new(self.re, self.dy, self.dx, self.dyy, self.dxy, self.dxx)
    }

    pub fn is_finite(&self) -> bool {
        [self.re, self.dx, self.dy, self.dxx, self.dxy, self.dyy].iter().all(|v| v.is_finite())
    }

    /// Composes with a substitution `x = x(a, b)`, `y = y(a, b)` given as jets in `(a, b)`.
    pub fn compose(self, x: Jet2<T>, y: Jet2<T>) -> Self {
        Self {
            re: self.re,
            dx: self.dx * x.dx + self.dy * y.dx,
            dy: self.dx * x.dy + self.dy * y.dy,
            dxx: self.dxx * x.dx * x.dx
                + (self.dxy + self.dxy) * x.dx * y.dx
                + self.dyy * y.dx * y.dx
                + self.dx * x.dxx
                + self.dy * y.dxx,
            dxy: self.dxx * x.dx * x.dy
                + self.dxy * (x.dx * y.dy + x.dy * y.dx)
                + self.dyy * y.dx * y.dy
                + self.dx * x.dxy
                + self.dy * y.dxy,
            dyy: self.dxx * x.dy * x.dy
                + (self.dxy + self.dxy) * x.dy * y.dy
                + self.dyy * y.dy * y.dy
                + self.dx * x.dyy
                + self.dy * y.dyy,
        }
    }
}

impl<T: Real> Add for Jet2<T> {
    type Output = Self;
    #[inline]
    fn add(self, o: Self) -> Self {
        Self::new(self.re + o.re, self.dx + o.dx, self.dy + o.dy, self.dxx + o.dxx, self.dxy + o.dxy, self.dyy + o.dyy)
    }
}

impl<T: Real> Sub for Jet2<T> {
    type Output = Self;
    #[inline]
    fn sub(self, o: Self) -> Self {
        Self::new(self.re - o.re, self.dx - o.dx, self.dy - o.dy, self.dxx - o.dxx, self.dxy - o.dxy, self.dyy - o.dyy)
    }
}

impl<T: Real> Mul for Jet2<T> {
    type Output = Self;
    #[inline]
    fn mul(self, o: Self) -> Self {
        Self::new(
            self.re * o.re,
            self.dx * o.re + self.re * o.dx,
            self.dy * o.re + self.re * o.dy,
            self.dxx * o.re + (self.dx * o.dx + self.dx * o.dx) + self.re * o.dxx,
            self.dxy * o.re + self.dx * o.dy + self.dy * o.dx + self.re * o.dxy,
            self.dyy * o.re + (self.dy * o.dy + self.dy * o.dy) + self.re * o.dyy,
        )
    }
}

impl<T: Real> Div for Jet2<T> {
    type Output = Self;
    #[inline]
    #[allow(clippy::suspicious_arithmetic_impl)]
    fn div(self, o: Self) -> Self {
        self * o.recip_jet()
    }
}

impl<T: Real> Jet2<T> {
    #[inline]
    fn recip_jet(self) -> Self {
        let r = T::one() / self.re;
        self.chain(r, -r * r, (r * r * r) + (r * r * r))
    }
}

impl<T: Real> Neg for Jet2<T> {
    type Output = Self;
    #[inline]
    fn neg(self) -> Self {
        Self::new(-self.re, -self.dx, -self.dy, -self.dxx, -self.dxy, -self.dyy)
    }
}

impl<T: Real> Add<T> for Jet2<T> {
    type Output = Self;
    #[inline]
    fn add(mut self, o: T) -> Self {
        self.re = self.re + o;
        self
    }
}

impl<T: Real> Sub<T> for Jet2<T> {
    type Output = Self;
    #[inline]
    fn sub(mut self, o: T) -> Self {
        self.re = self.re - o;
        self
    }
}

impl<T: Real> Mul<T> for Jet2<T> {
    type Output = Self;
    #[inline]
    fn mul(self, o: T) -> Self {
        Self::new(self.re * o, self.dx * o, self.dy * o, self.dxx * o, self.dxy * o, self.dyy * o)
    }
}

impl<T: Real> Div<T> for Jet2<T> {
    type Output = Self;
    #[inline]
    fn div(self, o: T) -> Self {
        self * (T::one() / o)
    }
}

impl<T: Real> AddAssign for Jet2<T> {
    fn add_assign(&mut self, o: Self) {
        *self = *self + o;
    }
}

impl<T: Real> SubAssign for Jet2<T> {
    fn sub_assign(&mut self, o: Self) {
        *self = *self - o;
    }
}

impl<T: Real> MulAssign for Jet2<T> {
    fn mul_assign(&mut self, o: Self) {
        *self = *self * o;
    }
}

impl<T: Real> HasRe for Jet2<T> {
    type Re = T;
}

impl<T: Real> Scalar for Jet2<T> {
    #[inline]
    fn cst(x: T) -> Self {
        Self::constant(x)
    }
    #[inline]
    fn re(&self) -> T {
        self.re
    }
    fn sqrt(self) -> Self {
        let s = self.re.sqrt();
        let h = T::lit(0.5);
        self.chain(s, h / s, -h * h / (s * s * s))
    }
    fn exp(self) -> Self {
        let e = self.re.exp();
        self.chain(e, e, e)
    }
    fn ln(self) -> Self {
        let r = T::one() / self.re;
        self.chain(self.re.ln(), r, -r * r)
    }
    fn sin(self) -> Self {
        let (s, c) = self.re.sin_cos();
        self.chain(s, c, -s)
    }
    fn cos(self) -> Self {
        let (s, c) = self.re.sin_cos();
        self.chain(c, -s, -c)
    }
    fn powi(self, n: i32) -> Self {
        match n {
            0 => Self::constant(T::one()),
            1 => self,
            2 => self * self,
            _ => {
                let nf = T::from_i32(n).expect("small exponent");
                let p2 = self.re.powi(n - 2);
                let p1 = p2 * self.re;
                self.chain(p1 * self.re, nf * p1, nf * (nf - T::one()) * p2)
            }
        }
    }
    fn powf(self, a: T) -> Self {
        if a == T::zero() {
            return Self::constant(T::one());
        }
        let p2 = self.re.powf(a - T::one() - T::one());
        let p1 = p2 * self.re;
        self.chain(p1 * self.re, a * p1, a * (a - T::one()) * p2)
    }
    fn recip(self) -> Self {
        self.recip_jet()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fd2(f: impl Fn(f64, f64) -> f64, x: f64, y: f64) -> [f64; 6] {
        let h = 1e-4;
        let f0 = f(x, y);
        [
            f0,
            (f(x + h, y) - f(x - h, y)) / (2.0 * h),
            (f(x, y + h) - f(x, y - h)) / (2.0 * h),
            (f(x + h, y) - 2.0 * f0 + f(x - h, y)) / (h * h),
            (f(x + h, y + h) - f(x + h, y - h) - f(x - h, y + h) + f(x - h, y - h)) / (4.0 * h * h),
            (f(x, y + h) - 2.0 * f0 + f(x, y - h)) / (h * h),
        ]
    }

    fn expr<S: Scalar<Re = f64>>(x: S, y: S) -> S {
        (x * y).sin() + (x.sq() + 2.0).sqrt() / (y + 3.0) + (x - y * 0.5).exp() * x.powi(3)
            - (y + 2.0).ln() * (x + 1.5).powf(1.7)
    }

    #[test]
    fn jets_match_finite_differences() {
        let (x, y) = (0.3, -0.7);
        let (jx, jy) = Jet2::seed(x, y);
        let j = expr(jx, jy);
        let fd = fd2(expr, x, y);
        let got = [j.re, j.dx, j.dy, j.dxx, j.dxy, j.dyy];
        for (g, e) in got.iter().zip(fd.iter()) {
            assert!((g - e).abs() < 1e-6 * (1.0 + e.abs()), "{g} vs {e}");
        }
    }

    #[test]
    fn compose_is_chain_rule() {
        // f(x,y) = x^2 y, x = a + b^2, y = a b
        let (a, b) = Jet2::<f64>::seed(0.4, 1.3);
        let x = a + b * b;
        let y = a * b;
        let direct = x * x * y;
        let (sx, sy) = Jet2::seed(x.re, y.re);
        let f = sx * sx * sy;
        let composed = f.compose(x, y);
        for (g, e) in [
            (composed.dx, direct.dx),
            (composed.dy, direct.dy),
            (composed.dxx, direct.dxx),
            (composed.dxy, direct.dxy),
            (composed.dyy, direct.dyy),
        ] {
            assert!((g - e).abs() < 1e-12, "{g} vs {e}");
        }
    }

    #[test]
    fn f32_jets_work() {
        let (x, y) = Jet2::<f32>::seed(1.0, 2.0);
        let j = x * x * y;
        assert_eq!(j.dxy, 2.0);
        assert_eq!(j.dxx, 4.0);
    }
}
