//! Truncated Taylor series arithmetic.
//!
//! A [`Jet`] holds the normalized Taylor coefficients `c_j = g^{(j)}(x)/j!` of a
//! function around a fixed point. Every model in this crate is written once as a
//! function of a jet variable; derivatives of any order up to the jet length fall
//! out of the arithmetic exactly (up to rounding), so no model needs hand-written
//! derivative formulas.

use std::ops::{Add, Div, Mul, Neg, Sub};

#[derive(Clone, Debug, PartialEq)]
pub struct Jet {
    coeffs: Vec<f64>,
}

impl Jet {
    /// The identity function `t ↦ x + t`, truncated after `order` derivatives.
    pub fn variable(x: f64, order: usize) -> Self {
        let mut coeffs = vec![0.0; order + 1];
        coeffs[0] = x;
        if order >= 1 {
            coeffs[1] = 1.0;
        }
        Jet { coeffs }
    }

    pub fn constant(value: f64, order: usize) -> Self {
        let mut coeffs = vec![0.0; order + 1];
        coeffs[0] = value;
        Jet { coeffs }
    }

    pub fn from_coeffs(coeffs: Vec<f64>) -> Self {
        assert!(!coeffs.is_empty(), "a jet needs at least one coefficient");
        Jet { coeffs }
    }

    pub fn order(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn value(&self) -> f64 {
        self.coeffs[0]
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    /// `g^{(j)}(x)` for `j = 0..=order`.
    pub fn derivatives(&self) -> Vec<f64> {
        let mut factorial = 1.0;
        self.coeffs
            .iter()
            .enumerate()
            .map(|(j, c)| {
                if j > 0 {
                    factorial *= j as f64;
                }
                c * factorial
            })
            .collect()
    }

    pub fn derivative(&self, j: usize) -> f64 {
        let factorial: f64 = (1..=j).map(|i| i as f64).product();
        self.coeffs[j] * factorial
    }

    fn zeros_like(&self) -> Self {
        Jet {
            coeffs: vec![0.0; self.coeffs.len()],
        }
    }

    pub fn scale(&self, factor: f64) -> Self {
        Jet {
            coeffs: self.coeffs.iter().map(|c| c * factor).collect(),
        }
    }

    pub fn offset(&self, shift: f64) -> Self {
        let mut out = self.clone();
        out.coeffs[0] += shift;
        out
    }

    pub fn exp(&self) -> Self {
        let n = self.coeffs.len();
        let mut out = vec![0.0; n];
        out[0] = self.coeffs[0].exp();
        for k in 1..n {
            let mut acc = 0.0;
            for j in 1..=k {
                acc += j as f64 * self.coeffs[j] * out[k - j];
            }
            out[k] = acc / k as f64;
        }
        Jet { coeffs: out }
    }

    /// Returns `(sin u, cos u)`.
    pub fn sin_cos(&self) -> (Self, Self) {
        let n = self.coeffs.len();
        let mut s = vec![0.0; n];
        let mut c = vec![0.0; n];
        s[0] = self.coeffs[0].sin();
        c[0] = self.coeffs[0].cos();
        for k in 1..n {
            let mut acc_s = 0.0;
            let mut acc_c = 0.0;
            for j in 1..=k {
                let w = j as f64 * self.coeffs[j];
                acc_s += w * c[k - j];
                acc_c += w * s[k - j];
            }
            s[k] = acc_s / k as f64;
            c[k] = -acc_c / k as f64;
        }
        (Jet { coeffs: s }, Jet { coeffs: c })
    }

    pub fn sin(&self) -> Self {
        self.sin_cos().0
    }

    pub fn cos(&self) -> Self {
        self.sin_cos().1
    }

    pub fn recip(&self) -> Self {
        Jet::constant(1.0, self.order()) / self.clone()
    }

    pub fn powi(&self, mut exponent: u32) -> Self {
        let mut result = Jet::constant(1.0, self.order());
        let mut base = self.clone();
        while exponent > 0 {
            if exponent & 1 == 1 {
                result = &result * &base;
            }
            exponent >>= 1;
            if exponent > 0 {
                base = &base * &base;
            }
        }
        result
    }

    /// Sign of the germ: the sign of the first nonzero coefficient, or 0.
    ///
    /// At a simple zero this is the right-sided sign, which makes piecewise
    /// definitions such as `|u|` well defined in every derivative order.
    pub fn germ_sign(&self) -> f64 {
        self.coeffs
            .iter()
            .find(|c| **c != 0.0)
            .map(|c| c.signum())
            .unwrap_or(0.0)
    }

    pub fn abs(&self) -> Self {
        if self.germ_sign() < 0.0 {
            -self.clone()
        } else {
            self.clone()
        }
    }
}

impl Add for &Jet {
    type Output = Jet;
    fn add(self, rhs: &Jet) -> Jet {
        debug_assert_eq!(self.coeffs.len(), rhs.coeffs.len());
        Jet {
            coeffs: self.coeffs.iter().zip(&rhs.coeffs).map(|(a, b)| a + b).collect(),
        }
    }
}

impl Sub for &Jet {
    type Output = Jet;
    fn sub(self, rhs: &Jet) -> Jet {
        debug_assert_eq!(self.coeffs.len(), rhs.coeffs.len());
        Jet {
            coeffs: self.coeffs.iter().zip(&rhs.coeffs).map(|(a, b)| a - b).collect(),
        }
    }
}

impl Mul for &Jet {
    type Output = Jet;
    fn mul(self, rhs: &Jet) -> Jet {
        debug_assert_eq!(self.coeffs.len(), rhs.coeffs.len());
        let mut out = self.zeros_like();
        for (i, a) in self.coeffs.iter().enumerate() {
            if *a == 0.0 {
                continue;
            }
            for (j, b) in rhs.coeffs.iter().enumerate().take(out.coeffs.len() - i) {
                out.coeffs[i + j] += a * b;
            }
        }
        out
    }
}

impl Div for &Jet {
    type Output = Jet;
    fn div(self, rhs: &Jet) -> Jet {
        debug_assert_eq!(self.coeffs.len(), rhs.coeffs.len());
        let b0 = rhs.coeffs[0];
        let mut out = self.zeros_like();
        for k in 0..out.coeffs.len() {
            let mut acc = self.coeffs[k];
            for j in 1..=k {
                acc -= rhs.coeffs[j] * out.coeffs[k - j];
            }
            out.coeffs[k] = acc / b0;
        }
        out
    }
}

macro_rules! forward_owned {
    ($tr:ident, $method:ident) => {
        impl $tr for Jet {
            type Output = Jet;
            fn $method(self, rhs: Jet) -> Jet {
                (&self).$method(&rhs)
            }
        }
        impl $tr<&Jet> for Jet {
            type Output = Jet;
            fn $method(self, rhs: &Jet) -> Jet {
                (&self).$method(rhs)
            }
        }
        impl $tr<f64> for Jet {
            type Output = Jet;
            fn $method(self, rhs: f64) -> Jet {
                let rhs = Jet::constant(rhs, self.order());
                (&self).$method(&rhs)
            }
        }
        impl $tr<f64> for &Jet {
            type Output = Jet;
            fn $method(self, rhs: f64) -> Jet {
                let rhs = Jet::constant(rhs, self.order());
                self.$method(&rhs)
            }
        }
    };
}

forward_owned!(Add, add);
forward_owned!(Sub, sub);
forward_owned!(Mul, mul);
forward_owned!(Div, div);

impl Neg for Jet {
    type Output = Jet;
    fn neg(self) -> Jet {
        self.scale(-1.0)
    }
}

impl Neg for &Jet {
    type Output = Jet;
    fn neg(self) -> Jet {
        self.scale(-1.0)
    }
}
