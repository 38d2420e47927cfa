//! Second-order forward-mode value: a function value together with its
//! gradient and symmetric Hessian with respect to three seeded directions.

use std::ops::{Add, Div, Mul, Neg, Sub};

// (row, col) of each packed Hessian slot, upper triangle in (u, v, w) order:
// slots 0..6 hold (uu, uv, uw, vv, vw, ww).
const PAIRS: [(usize, usize); 6] = [(0, 0), (0, 1), (0, 2), (1, 1), (1, 2), (2, 2)];

#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct Jet2 {
    pub val: f64,
    pub grad: [f64; 3],
    pub hess: [f64; 6],
}

impl Jet2 {
    pub fn constant(c: f64) -> Jet2 {
        Jet2 { val: c, grad: [0.0; 3], hess: [0.0; 6] }
    }

    /// Seeds axis 0, 1, or 2 with unit first derivative.
    pub fn variable(value: f64, axis: usize) -> Jet2 {
        let mut grad = [0.0; 3];
        grad[axis] = 1.0;
        Jet2 { val: value, grad, hess: [0.0; 6] }
    }

    pub fn is_constant(&self) -> bool {
        self.grad == [0.0; 3] && self.hess == [0.0; 6]
    }

    /// Hessian unpacked to a full symmetric 3x3 matrix.
    pub fn hessian(&self) -> [[f64; 3]; 3] {
        let mut h = [[0.0; 3]; 3];
        for (slot, &(i, j)) in PAIRS.iter().enumerate() {
            h[i][j] = self.hess[slot];
            h[j][i] = self.hess[slot];
        }
        h
    }

    /// Composition with a scalar function given by its value and first two
    /// derivatives at self.val.
    fn chain(self, f: f64, df: f64, ddf: f64) -> Jet2 {
        if self.is_constant() {
            return Jet2::constant(f);
        }
        let mut grad = [0.0; 3];
        for i in 0..3 {
            grad[i] = df * self.grad[i];
        }
        let mut hess = [0.0; 6];
        for (slot, &(i, j)) in PAIRS.iter().enumerate() {
            hess[slot] = df * self.hess[slot] + ddf * self.grad[i] * self.grad[j];
        }
        Jet2 { val: f, grad, hess }
    }

    pub fn sin(self) -> Jet2 {
        let (s, c) = self.val.sin_cos();
        self.chain(s, c, -s)
    }

    pub fn cos(self) -> Jet2 {
        let (s, c) = self.val.sin_cos();
        self.chain(c, -s, -c)
    }

    pub fn exp(self) -> Jet2 {
        let e = self.val.exp();
        self.chain(e, e, e)
    }

    pub fn ln(self) -> Jet2 {
        let inv = 1.0 / self.val;
        self.chain(self.val.ln(), inv, -inv * inv)
    }

    pub fn sqrt(self) -> Jet2 {
        let r = self.val.sqrt();
        self.chain(r, 0.5 / r, -0.25 / (r * r * r))
    }

    /// Integer power by binary exponentiation on jets; n < 0 divides into 1,
    /// so the caller must rule out a zero base first.
    pub fn powi(self, n: i32) -> Jet2 {
        if n == 0 {
            return Jet2::constant(1.0);
        }
        let mut e = n.unsigned_abs();
        let mut base = self;
        let mut acc = Jet2::constant(1.0);
        while e > 0 {
            if e & 1 == 1 {
                acc = acc * base;
            }
            base = base * base;
            e >>= 1;
        }
        if n < 0 {
            Jet2::constant(1.0) / acc
        } else {
            acc
        }
    }
}

impl Add for Jet2 {
    type Output = Jet2;
    fn add(self, o: Jet2) -> Jet2 {
        let mut r = self;
        r.val += o.val;
        for i in 0..3 {
            r.grad[i] += o.grad[i];
        }
        for s in 0..6 {
            r.hess[s] += o.hess[s];
        }
        r
    }
}

impl Sub for Jet2 {
    type Output = Jet2;
    fn sub(self, o: Jet2) -> Jet2 {
        let mut r = self;
        r.val -= o.val;
        for i in 0..3 {
            r.grad[i] -= o.grad[i];
        }
        for s in 0..6 {
            r.hess[s] -= o.hess[s];
        }
        r
    }
}

impl Mul for Jet2 {
    type Output = Jet2;
    fn mul(self, o: Jet2) -> Jet2 {
        let val = self.val * o.val;
        let mut grad = [0.0; 3];
        for i in 0..3 {
            grad[i] = self.grad[i] * o.val + self.val * o.grad[i];
        }
        let mut hess = [0.0; 6];
        for (slot, &(i, j)) in PAIRS.iter().enumerate() {
            hess[slot] = self.hess[slot] * o.val
                + self.grad[i] * o.grad[j]
                + self.grad[j] * o.grad[i]
                + self.val * o.hess[slot];
        }
        Jet2 { val, grad, hess }
    }
}

impl Div for Jet2 {
    type Output = Jet2;
    fn div(self, o: Jet2) -> Jet2 {
        let val = self.val / o.val;
        let mut grad = [0.0; 3];
        for i in 0..3 {
            grad[i] = (self.grad[i] - val * o.grad[i]) / o.val;
        }
        let mut hess = [0.0; 6];
        for (slot, &(i, j)) in PAIRS.iter().enumerate() {
            hess[slot] = (self.hess[slot]
                - grad[i] * o.grad[j]
                - grad[j] * o.grad[i]
                - val * o.hess[slot])
                / o.val;
        }
        Jet2 { val, grad, hess }
    }
}

impl Neg for Jet2 {
    type Output = Jet2;
    fn neg(self) -> Jet2 {
        let mut r = self;
        r.val = -r.val;
        for i in 0..3 {
            r.grad[i] = -r.grad[i];
        }
        for s in 0..6 {
            r.hess[s] = -r.hess[s];
        }
        r
    }
}
