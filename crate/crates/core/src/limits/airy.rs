//! The Airy function Ai and its derivative on the real line, accurate to about
//! 1e-10 absolute over the supported range.
//!
//! Three regimes: the Maclaurin series with compensated summation on the middle
//! range [-9, 5.5], the decaying asymptotic expansion on the right, and the
//! oscillatory asymptotic expansion on the left. Arguments below -50 are rejected:
//! the oscillation there is so fast that an f64 argument no longer pins down the
//! phase to useful accuracy. Large positive arguments underflow smoothly to 0.

/// Ai(0).
const AIRY_AT_ZERO: f64 = 0.3550280538878172;
/// -Ai'(0).
const AIRY_SLOPE_AT_ZERO: f64 = 0.2588194037928068;

const MACLAURIN_LO: f64 = -9.0;
const MACLAURIN_HI: f64 = 5.5;

/// Neumaier compensated accumulator. The running compensation makes the sum
/// error independent of how violently the partial sums cancel, which the
/// oscillatory Maclaurin regime needs near the left end of its range.
struct Compensated {
    sum: f64,
    carry: f64,
}

impl Compensated {
    fn new() -> Self {
        Compensated {
            sum: 0.0,
            carry: 0.0,
        }
    }

    fn add(&mut self, v: f64) {
        let t = self.sum + v;
        if self.sum.abs() >= v.abs() {
            self.carry += (self.sum - t) + v;
        } else {
            self.carry += (v - t) + self.sum;
        }
        self.sum = t;
    }

    fn value(&self) -> f64 {
        self.sum + self.carry
    }
}

/// Unevaluated double-length product a*b = hi + lo.
fn two_prod(a: f64, b: f64) -> (f64, f64) {
    let hi = a * b;
    let lo = a.mul_add(b, -hi);
    (hi, lo)
}

/// Double-length value, kept normalized enough for the short product chains here.
#[derive(Clone, Copy)]
struct Dd {
    hi: f64,
    lo: f64,
}

impl Dd {
    fn from(v: f64) -> Self {
        Dd { hi: v, lo: 0.0 }
    }

    fn mul(self, o: Dd) -> Dd {
        let (hi, mut lo) = two_prod(self.hi, o.hi);
        lo += self.hi * o.lo + self.lo * o.hi;
        let s = hi + lo;
        Dd {
            hi: s,
            lo: (hi - s) + lo,
        }
    }

    /// Division by an exactly representable f64 (small integers here).
    fn div_exact(self, d: f64) -> Dd {
        let q = self.hi / d;
        let r = q.mul_add(-d, self.hi) + self.lo;
        let c = r / d;
        let s = q + c;
        Dd {
            hi: s,
            lo: (q - s) + c,
        }
    }

    fn abs_hi(self) -> f64 {
        self.hi.abs()
    }
}

/// Adds coeff * term into the accumulator without losing the term's low half.
fn add_scaled(acc: &mut Compensated, coeff: f64, term: Dd) {
    let (hi, lo) = two_prod(coeff, term.hi);
    acc.add(hi);
    acc.add(lo);
    acc.add(coeff * term.lo);
}

/// Maclaurin evaluation of (Ai, Ai'). The value uses the two classical series
/// with term ratios x³/((3k)(3k-1)) and x³/((3k)(3k+1)); the derivative series
/// get their own term recurrences so nothing ever divides by x. Terms are carried
/// in double length: near x = -9 they peak around 2e5 while the result is order
/// one, and plain f64 recurrences would lose four digits of the target accuracy.
fn maclaurin(x: f64) -> (f64, f64) {
    let x2 = {
        let (hi, lo) = two_prod(x, x);
        Dd { hi, lo }
    };
    let x3 = x2.mul(Dd::from(x));
    let mut ai = Compensated::new();
    let mut aip = Compensated::new();
    let mut tf = Dd::from(1.0); // x^{3k} terms of the value
    let mut tg = Dd::from(x); // x^{3k+1} terms of the value
    let mut df = Dd::from(0.0); // 3k x^{3k-1} terms of the derivative
    let mut dg = Dd::from(1.0); // (3k+1) x^{3k} terms of the derivative
    add_scaled(&mut ai, AIRY_AT_ZERO, tf);
    add_scaled(&mut ai, -AIRY_SLOPE_AT_ZERO, tg);
    add_scaled(&mut aip, -AIRY_SLOPE_AT_ZERO, dg);
    for k in 1..=60u32 {
        let kf = k as f64;
        tf = tf.mul(x3).div_exact((3.0 * kf) * (3.0 * kf - 1.0));
        tg = tg.mul(x3).div_exact((3.0 * kf) * (3.0 * kf + 1.0));
        df = if k == 1 {
            x2.div_exact(2.0)
        } else {
            df.mul(x3)
                .mul(Dd::from(kf))
                .div_exact((kf - 1.0) * (3.0 * kf) * (3.0 * kf - 1.0))
        };
        dg = dg.mul(x3).div_exact((3.0 * kf - 2.0) * (3.0 * kf));
        add_scaled(&mut ai, AIRY_AT_ZERO, tf);
        add_scaled(&mut ai, -AIRY_SLOPE_AT_ZERO, tg);
        add_scaled(&mut aip, AIRY_AT_ZERO, df);
        add_scaled(&mut aip, -AIRY_SLOPE_AT_ZERO, dg);
        if tf.abs_hi() < 1.0e-22
            && tg.abs_hi() < 1.0e-22
            && df.abs_hi() < 1.0e-22
            && dg.abs_hi() < 1.0e-22
        {
            break;
        }
    }
    (ai.value(), aip.value())
}

/// Asymptotic coefficients u_k via u_{k+1} = u_k (6k+1)(6k+5) / (72(k+1)).
fn next_u(u: f64, k: f64) -> f64 {
    u * (6.0 * k + 1.0) * (6.0 * k + 5.0) / (72.0 * (k + 1.0))
}

/// Right asymptotic branch: Ai and Ai' for x > MACLAURIN_HI.
fn asymptotic_pos(x: f64) -> (f64, f64) {
    let zeta = 2.0 / 3.0 * x.powf(1.5);
    let mut su = 0.0;
    let mut sv = 0.0;
    let mut u: f64 = 1.0;
    let mut sign = 1.0;
    let mut zp: f64 = 1.0;
    let mut prev = f64::INFINITY;
    let mut k = 0.0;
    loop {
        let term = u / zp;
        if term.abs() > prev {
            break;
        }
        su += sign * term;
        sv += sign * (6.0 * k + 1.0) / (1.0 - 6.0 * k) * term;
        prev = term.abs();
        if term.abs() < 1.0e-18 || k > 40.0 {
            break;
        }
        u = next_u(u, k);
        zp *= zeta;
        sign = -sign;
        k += 1.0;
    }
    let pref = (-zeta).exp() / (2.0 * std::f64::consts::PI.sqrt());
    let ai = pref * su / x.powf(0.25);
    let aip = -pref * sv * x.powf(0.25);
    (ai, aip)
}

/// Left asymptotic branch: Ai and Ai' for x < MACLAURIN_LO, written for -x > 0.
fn asymptotic_neg(x: f64) -> (f64, f64) {
    let ax = -x;
    let zeta = 2.0 / 3.0 * ax.powf(1.5);
    let phase = zeta + std::f64::consts::FRAC_PI_4;
    let (sin_p, cos_p) = phase.sin_cos();
    // Split the u_k and v_k tails into even (cosine-free) and odd parts.
    let mut p_even = 0.0;
    let mut q_odd = 0.0;
    let mut r_even = 0.0;
    let mut s_odd = 0.0;
    let mut u: f64 = 1.0;
    let mut k = 0usize;
    let mut zp: f64 = 1.0;
    let mut prev = f64::INFINITY;
    loop {
        let term = u / zp;
        if term.abs() > prev {
            break;
        }
        prev = term.abs();
        let v = (6.0 * k as f64 + 1.0) / (1.0 - 6.0 * k as f64) * u;
        let toggle = if (k / 2) % 2 == 0 { 1.0 } else { -1.0 };
        if k % 2 == 0 {
            p_even += toggle * term;
            r_even += toggle * v / zp;
        } else {
            q_odd += toggle * term;
            s_odd += toggle * v / zp;
        }
        if term.abs() < 1.0e-18 || k > 40 {
            break;
        }
        u = next_u(u, k as f64);
        zp *= zeta;
        k += 1;
    }
    let pref = 1.0 / std::f64::consts::PI.sqrt();
    let ai = pref / ax.powf(0.25) * (sin_p * p_even - cos_p * q_odd);
    let aip = -pref * ax.powf(0.25) * (cos_p * r_even + sin_p * s_odd);
    (ai, aip)
}

fn airy_pair(x: f64) -> (f64, f64) {
    assert!(
        x >= -50.0,
        "airy argument {x} below -50: oscillation outruns f64 phase resolution"
    );
    if x < MACLAURIN_LO {
        asymptotic_neg(x)
    } else if x <= MACLAURIN_HI {
        maclaurin(x)
    } else {
        asymptotic_pos(x)
    }
}

/// The Airy function Ai.
pub fn airy_ai(x: f64) -> f64 {
    airy_pair(x).0
}

/// The derivative Ai'.
pub fn airy_ai_prime(x: f64) -> f64 {
    airy_pair(x).1
}
