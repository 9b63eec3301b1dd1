//! The ordered coefficient field: rationals extended by the formal symbols
//! `log p` (p prime) and `e^q` (q rational), with exact field arithmetic and
//! a sign decision by interval arithmetic at escalating precision.
//!
//! A constant is a normalized fraction of polynomials over Q in the symbols
//! `Lam(p)` and a single multiplicative `X` family (`X_q1 * X_q2 = X_{q1+q2}`,
//! `X_0 = 1`). Equality is syntactic equality of canonical forms; canonical
//! forms are fully reduced (multivariate gcd), with a monic denominator and
//! the X-exponent content shifted to zero. The algebraic independence of
//! `{log p} ∪ {e^q}` over Q is assumed; it is what makes canonical-form
//! equality a field equality.

use crate::{config, ordinal::Ordinal, Error, Result};
use num::bigint::BigInt;
use num::rational::BigRational;
use num::{One, Signed, Zero};
use std::cell::RefCell;
use std::cmp::Ordering;
use std::collections::{BTreeMap, HashMap};
use std::fmt;

pub type Rat = BigRational;

pub fn rat(n: i64, d: i64) -> Rat {
    Rat::new(BigInt::from(n), BigInt::from(d))
}

/// A symbolic monomial `prod Lam(p)^k * X^q`.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
struct SymMono {
    /// `(prime, exponent)` sorted by prime, exponents >= 1.
    lambdas: Vec<(u64, u32)>,
    /// Exponent q of `X_q = e^q`; zero when absent.
    xexp: Rat,
}

impl SymMono {
    fn one() -> Self {
        SymMono {
            lambdas: Vec::new(),
            xexp: Rat::zero(),
        }
    }

    fn is_one(&self) -> bool {
        self.lambdas.is_empty() && self.xexp.is_zero()
    }

    fn mul(&self, other: &Self) -> Self {
        let mut lambdas = Vec::new();
        let (mut i, mut j) = (0, 0);
        while i < self.lambdas.len() || j < other.lambdas.len() {
            if j >= other.lambdas.len()
                || (i < self.lambdas.len() && self.lambdas[i].0 < other.lambdas[j].0)
            {
                lambdas.push(self.lambdas[i]);
                i += 1;
            } else if i >= self.lambdas.len() || other.lambdas[j].0 < self.lambdas[i].0 {
                lambdas.push(other.lambdas[j]);
                j += 1;
            } else {
                lambdas.push((self.lambdas[i].0, self.lambdas[i].1 + other.lambdas[j].1));
                i += 1;
                j += 1;
            }
        }
        SymMono {
            lambdas,
            xexp: &self.xexp + &other.xexp,
        }
    }

    /// Componentwise division; `None` when a Lam exponent would go negative.
    /// The X part is group-like and always divides.
    fn div(&self, other: &Self) -> Option<Self> {
        let mut lambdas = Vec::new();
        let mut j = 0;
        for &(p, e) in &self.lambdas {
            while j < other.lambdas.len() && other.lambdas[j].0 < p {
                return None; // divisor has a prime we lack
            }
            if j < other.lambdas.len() && other.lambdas[j].0 == p {
                let oe = other.lambdas[j].1;
                if oe > e {
                    return None;
                }
                if e > oe {
                    lambdas.push((p, e - oe));
                }
                j += 1;
            } else {
                lambdas.push((p, e));
            }
        }
        if j < other.lambdas.len() {
            return None;
        }
        Some(SymMono {
            lambdas,
            xexp: &self.xexp - &other.xexp,
        })
    }
}

/// Multiplication-compatible lexicographic term order: X exponent first,
/// then prime exponents in increasing prime order. Used for leading-term
/// selection in division and gcd; the BTreeMap key order is storage only.
fn term_cmp(a: &SymMono, b: &SymMono) -> Ordering {
    match a.xexp.cmp(&b.xexp) {
        Ordering::Equal => {}
        ord => return ord,
    }
    let (mut i, mut j) = (0, 0);
    loop {
        match (a.lambdas.get(i), b.lambdas.get(j)) {
            (None, None) => return Ordering::Equal,
            (Some(&(p, e)), Some(&(q, f))) => {
                if p == q {
                    match e.cmp(&f) {
                        Ordering::Equal => {
                            i += 1;
                            j += 1;
                        }
                        ord => return ord,
                    }
                } else if p < q {
                    // a has the smaller prime with a positive exponent
                    return Ordering::Greater;
                } else {
                    return Ordering::Less;
                }
            }
            (Some(_), None) => return Ordering::Greater,
            (None, Some(_)) => return Ordering::Less,
        }
    }
}

/// Sparse polynomial over Q in the symbolic monomials. No zero coefficients.
#[derive(Clone, PartialEq, Eq, Debug)]
struct Poly(BTreeMap<SymMono, Rat>);

impl Poly {
    fn zero() -> Self {
        Poly(BTreeMap::new())
    }

    fn constant(r: Rat) -> Self {
        let mut m = BTreeMap::new();
        if !r.is_zero() {
            m.insert(SymMono::one(), r);
        }
        Poly(m)
    }

    fn one() -> Self {
        Poly::constant(Rat::one())
    }

    fn monomial(m: SymMono, c: Rat) -> Self {
        let mut map = BTreeMap::new();
        if !c.is_zero() {
            map.insert(m, c);
        }
        Poly(map)
    }

    fn is_zero(&self) -> bool {
        self.0.is_empty()
    }

    fn add(&self, other: &Self) -> Self {
        let mut out = self.0.clone();
        for (m, c) in &other.0 {
            let entry = out.entry(m.clone()).or_insert_with(Rat::zero);
            *entry += c;
            if entry.is_zero() {
                out.remove(m);
            }
        }
        Poly(out)
    }

    fn neg(&self) -> Self {
        Poly(self.0.iter().map(|(m, c)| (m.clone(), -c)).collect())
    }

    fn mul(&self, other: &Self) -> Self {
        let mut out: BTreeMap<SymMono, Rat> = BTreeMap::new();
        for (m1, c1) in &self.0 {
            for (m2, c2) in &other.0 {
                let m = m1.mul(m2);
                let entry = out.entry(m).or_insert_with(Rat::zero);
                *entry += c1 * c2;
            }
        }
        out.retain(|_, c| !c.is_zero());
        Poly(out)
    }

    fn scale(&self, r: &Rat) -> Self {
        if r.is_zero() {
            return Poly::zero();
        }
        Poly(self.0.iter().map(|(m, c)| (m.clone(), c * r)).collect())
    }

    /// Leading term under the multiplication-compatible term order.
    fn lead(&self) -> Option<(&SymMono, &Rat)> {
        self.0
            .iter()
            .max_by(|(m1, _), (m2, _)| term_cmp(m1, m2))
    }

    /// Exact multivariate division (Laurent in X), or None.
    fn div_exact(&self, other: &Self) -> Option<Poly> {
        if other.is_zero() {
            return None;
        }
        let mut rem = self.clone();
        let mut quo = Poly::zero();
        let (lm, lc) = {
            let (m, c) = other.lead().unwrap();
            (m.clone(), c.clone())
        };
        let mut fuel = 10_000usize;
        while !rem.is_zero() {
            fuel = fuel.checked_sub(1)?;
            let (rm, rc) = {
                let (m, c) = rem.lead().unwrap();
                (m.clone(), c.clone())
            };
            let qm = rm.div(&lm)?;
            let qc = &rc / &lc;
            let t = Poly::monomial(qm, qc);
            quo = quo.add(&t);
            rem = rem.add(&t.mul(other).neg());
        }
        Some(quo)
    }

    /// Largest variable occurring (primes ordered below the X symbol).
    fn main_var(&self) -> Option<Var> {
        let mut best: Option<Var> = None;
        for m in self.0.keys() {
            if !m.xexp.is_zero() {
                return Some(Var::X);
            }
            if let Some(&(p, _)) = m.lambdas.last() {
                let v = Var::Lam(p);
                if best.as_ref().map(|b| v > *b).unwrap_or(true) {
                    best = Some(v);
                }
            }
        }
        best
    }

    /// Integer degree of `v` in a poly whose X exponents have been rescaled
    /// to integers (for Var::X) or which is polynomial in Lam(p).
    fn degree(&self, v: &Var) -> i64 {
        self.0
            .keys()
            .map(|m| var_exp(m, v))
            .max()
            .unwrap_or(0)
    }

    /// Coefficient of `v^k` viewed as a univariate polynomial in `v`.
    fn coeff_in(&self, v: &Var, k: i64) -> Poly {
        let mut out = BTreeMap::new();
        for (m, c) in &self.0 {
            if var_exp(m, v) == k {
                out.insert(strip_var(m, v), c.clone());
            }
        }
        Poly(out)
    }
}

#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Debug)]
enum Var {
    Lam(u64),
    X,
}

fn var_exp(m: &SymMono, v: &Var) -> i64 {
    match v {
        Var::Lam(p) => m
            .lambdas
            .iter()
            .find(|(q, _)| q == p)
            .map(|(_, e)| *e as i64)
            .unwrap_or(0),
        Var::X => {
            debug_assert!(m.xexp.is_integer());
            m.xexp.to_integer().try_into().unwrap_or(0)
        }
    }
}

fn strip_var(m: &SymMono, v: &Var) -> SymMono {
    match v {
        Var::Lam(p) => SymMono {
            lambdas: m.lambdas.iter().filter(|(q, _)| q != p).cloned().collect(),
            xexp: m.xexp.clone(),
        },
        Var::X => SymMono {
            lambdas: m.lambdas.clone(),
            xexp: Rat::zero(),
        },
    }
}

fn var_pow(v: &Var, k: i64) -> SymMono {
    debug_assert!(k >= 0);
    match v {
        Var::Lam(p) => SymMono {
            lambdas: if k == 0 {
                vec![]
            } else {
                vec![(*p, k as u32)]
            },
            xexp: Rat::zero(),
        },
        Var::X => SymMono {
            lambdas: vec![],
            xexp: Rat::from(BigInt::from(k)),
        },
    }
}

/// Rescale all X exponents by `d` so they become integers.
fn rescale_x(p: &Poly, d: &BigInt) -> Poly {
    Poly(
        p.0.iter()
            .map(|(m, c)| {
                let mut m2 = m.clone();
                m2.xexp = &m.xexp * Rat::from(d.clone());
                (m2, c.clone())
            })
            .collect(),
    )
}

/// Shift X exponents so the minimum is zero; returns the shifted poly.
fn shift_x_min(p: &Poly) -> Poly {
    let min = p
        .0
        .keys()
        .map(|m| m.xexp.clone())
        .min()
        .unwrap_or_else(Rat::zero);
    if min.is_zero() {
        return p.clone();
    }
    Poly(
        p.0.iter()
            .map(|(m, c)| {
                let mut m2 = m.clone();
                m2.xexp = &m.xexp - &min;
                (m2, c.clone())
            })
            .collect(),
    )
}

/// Multivariate gcd by primitive pseudo-remainder sequences. Inputs must
/// have integer X exponents. The result is primitive and monic-normalized.
fn poly_gcd(a: &Poly, b: &Poly) -> Poly {
    if a.is_zero() {
        return monic(b);
    }
    if b.is_zero() {
        return monic(a);
    }
    let a = shift_x_min(a);
    let b = shift_x_min(b);
    let v = match a.main_var().into_iter().chain(b.main_var()).max() {
        None => return Poly::one(), // both rational constants
        Some(v) => v,
    };
    let (mut f, mut g) = (a, b);
    if f.degree(&v) < g.degree(&v) {
        std::mem::swap(&mut f, &mut g);
    }
    let cont_f = content(&f, &v);
    let cont_g = content(&g, &v);
    let cont = poly_gcd(&cont_f, &cont_g);
    let mut f = f.div_exact(&cont_f).unwrap();
    let mut g = g.div_exact(&cont_g).unwrap();
    loop {
        if g.is_zero() {
            break;
        }
        let r = pseudo_rem(&f, &g, &v);
        f = g;
        g = if r.is_zero() {
            Poly::zero()
        } else {
            r.div_exact(&content(&r, &v)).unwrap()
        };
    }
    monic(&cont.mul(&f))
}

/// Content of `f` as a univariate polynomial in `v`.
fn content(f: &Poly, v: &Var) -> Poly {
    let mut g = Poly::zero();
    for k in 0..=f.degree(v) {
        let c = f.coeff_in(v, k);
        if !c.is_zero() {
            g = poly_gcd(&g, &c);
        }
    }
    if g.is_zero() {
        Poly::one()
    } else {
        g
    }
}

/// Pseudo-remainder of `f` by `g` in the variable `v`.
fn pseudo_rem(f: &Poly, g: &Poly, v: &Var) -> Poly {
    let dg = g.degree(v);
    let lg = g.coeff_in(v, dg);
    let mut r = f.clone();
    loop {
        let dr = r.degree(v);
        if r.is_zero() || dr < dg {
            return r;
        }
        let lr = r.coeff_in(v, dr);
        // r := lg*r - lr*v^(dr-dg)*g
        let shift = Poly::monomial(var_pow(v, dr - dg), Rat::one());
        r = lg.mul(&r).add(&lr.mul(&shift).mul(g).neg());
    }
}

/// Scale so the leading coefficient is 1.
fn monic(p: &Poly) -> Poly {
    match p.lead() {
        None => Poly::zero(),
        Some((_, c)) => {
            let inv = Rat::one() / c.clone();
            p.scale(&inv)
        }
    }
}

/// An exact constant of the coefficient field.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Constant {
    num: Poly,
    den: Poly,
}

impl Constant {
    fn normalized(num: Poly, den: Poly) -> Constant {
        assert!(!den.is_zero(), "zero denominator");
        if num.is_zero() {
            return Constant {
                num: Poly::zero(),
                den: Poly::one(),
            };
        }
        // gcd-reduce with integer X exponents
        let mut d = BigInt::one();
        for m in num.0.keys().chain(den.0.keys()) {
            d = num::integer::lcm(d, m.xexp.denom().clone());
        }
        let n_i = rescale_x(&num, &d);
        let d_i = rescale_x(&den, &d);
        let g = poly_gcd(&n_i, &d_i);
        let (num, den) = if g.lead().map(|(m, _)| m.is_one()).unwrap_or(true) {
            (num, den)
        } else {
            let n2 = n_i.div_exact(&g).expect("gcd division");
            let d2 = d_i.div_exact(&g).expect("gcd division");
            let inv = Rat::from(d.clone()).recip();
            (
                rescale_x(&n2, &BigInt::one()).0
                    .into_iter()
                    .map(|(mut m, c)| {
                        m.xexp = &m.xexp * &inv;
                        (m, c)
                    })
                    .collect::<BTreeMap<_, _>>()
                    .into(),
                rescale_x(&d2, &BigInt::one()).0
                    .into_iter()
                    .map(|(mut m, c)| {
                        m.xexp = &m.xexp * &inv;
                        (m, c)
                    })
                    .collect::<BTreeMap<_, _>>()
                    .into(),
            )
        };
        // shift the joint X content to zero
        let min_n = num.0.keys().map(|m| m.xexp.clone()).min().unwrap();
        let min_d = den.0.keys().map(|m| m.xexp.clone()).min().unwrap();
        let shift = std::cmp::min(min_n, min_d);
        let app = |p: &Poly| {
            Poly(
                p.0.iter()
                    .map(|(m, c)| {
                        let mut m2 = m.clone();
                        m2.xexp = &m.xexp - &shift;
                        (m2, c.clone())
                    })
                    .collect(),
            )
        };
        let (num, den) = (app(&num), app(&den));
        // monic denominator
        let lc = den.lead().unwrap().1.clone();
        let inv = Rat::one() / lc;
        Constant {
            num: num.scale(&inv),
            den: den.scale(&inv),
        }
    }

    pub fn zero() -> Constant {
        Constant {
            num: Poly::zero(),
            den: Poly::one(),
        }
    }

    pub fn one() -> Constant {
        Constant::from_rat(Rat::one())
    }

    pub fn from_rat(r: Rat) -> Constant {
        Constant {
            num: Poly::constant(r),
            den: Poly::one(),
        }
    }

    pub fn from_int(n: i64) -> Constant {
        Constant::from_rat(Rat::from(BigInt::from(n)))
    }

    pub fn rational(n: i64, d: i64) -> Constant {
        Constant::from_rat(rat(n, d))
    }

    /// `log q` for a positive rational `q`, as a Z-linear combination of the
    /// symbols `log p` over the prime factorization of `q`.
    pub fn log_of_rat(q: &Rat) -> Result<Constant> {
        if !q.is_positive() {
            return Err(Error::Domain(format!("log of non-positive rational {}", q)));
        }
        let mut poly = Poly::zero();
        for (p, e) in factorize(q.numer()) {
            poly = poly.add(&lam_term(p, e));
        }
        for (p, e) in factorize(q.denom()) {
            poly = poly.add(&lam_term(p, -e));
        }
        Ok(Constant {
            num: poly,
            den: Poly::one(),
        })
    }

    /// `e^q` for rational q.
    pub fn exp_of_rat(q: &Rat) -> Constant {
        if q.is_zero() {
            return Constant::one();
        }
        Constant {
            num: Poly::monomial(
                SymMono {
                    lambdas: vec![],
                    xexp: q.clone(),
                },
                Rat::one(),
            ),
            den: Poly::one(),
        }
    }

    pub fn is_zero(&self) -> bool {
        self.num.is_zero()
    }

    pub fn is_one(&self) -> bool {
        self == &Constant::one()
    }

    /// Rational value, if the constant is rational.
    pub fn as_rat(&self) -> Option<Rat> {
        let d = self.den.lead()?;
        if !d.0.is_one() || self.den.0.len() != 1 {
            return None;
        }
        if self.num.is_zero() {
            return Some(Rat::zero());
        }
        if self.num.0.len() == 1 {
            let (m, c) = self.num.lead().unwrap();
            if m.is_one() {
                return Some(c / d.1);
            }
        }
        None
    }

    pub fn as_int(&self) -> Option<BigInt> {
        let r = self.as_rat()?;
        if r.is_integer() {
            Some(r.to_integer())
        } else {
            None
        }
    }

    pub fn add(&self, other: &Constant) -> Constant {
        Constant::normalized(
            self.num
                .mul(&other.den)
                .add(&other.num.mul(&self.den)),
            self.den.mul(&other.den),
        )
    }

    pub fn sub(&self, other: &Constant) -> Constant {
        self.add(&other.neg())
    }

    pub fn neg(&self) -> Constant {
        Constant {
            num: self.num.neg(),
            den: self.den.clone(),
        }
    }

    pub fn mul(&self, other: &Constant) -> Constant {
        Constant::normalized(self.num.mul(&other.num), self.den.mul(&other.den))
    }

    pub fn div(&self, other: &Constant) -> Result<Constant> {
        if other.is_zero() {
            return Err(Error::Domain("division by zero constant".into()));
        }
        Ok(Constant::normalized(
            self.num.mul(&other.den),
            self.den.mul(&other.num),
        ))
    }

    pub fn inv(&self) -> Result<Constant> {
        Constant::one().div(self)
    }

    pub fn pow_i(&self, k: i64) -> Result<Constant> {
        if k < 0 {
            return self.pow_i(-k)?.inv();
        }
        let mut acc = Constant::one();
        for _ in 0..k {
            acc = acc.mul(self);
        }
        Ok(acc)
    }

    /// Exact rational power, when representable: rationals with exact roots
    /// and pure `X_q` constants admit any rational exponent.
    pub fn pow_rat(&self, q: &Rat) -> Result<Constant> {
        if q.is_integer() {
            let k: i64 = q.to_integer().try_into().map_err(|_| {
                Error::Budget("integer power exponent too large".into())
            })?;
            return self.pow_i(k);
        }
        if let Some(r) = self.as_rat() {
            if let Some(root) = rat_pow_exact(&r, q) {
                return Ok(Constant::from_rat(root));
            }
            return Err(Error::Exactness(format!(
                "{}^({}) is not in the constant field",
                self, q
            )));
        }
        // e^(a) ^ q = e^(a q) for pure X monomial constants
        if self.den.0.len() == 1 && self.num.0.len() == 1 {
            let (dm, _) = self.den.lead().unwrap();
            let (nm, nc) = self.num.lead().unwrap();
            if dm.is_one() && nm.lambdas.is_empty() && nc == &Rat::one() {
                return Ok(Constant::exp_of_rat(&(&nm.xexp * q)));
            }
        }
        Err(Error::Exactness(format!(
            "cannot take exact rational power of {}",
            self
        )))
    }

    /// Exact logarithm, defined for positive constants of the monomial form
    /// `r * e^q` with r rational.
    pub fn log(&self) -> Result<Constant> {
        if self.sign()? <= 0 {
            return Err(Error::Domain("log of non-positive constant".into()));
        }
        let rational_mono = |p: &Poly| -> Option<(Rat, Rat)> {
            if p.0.len() != 1 {
                return None;
            }
            let (m, c) = p.lead().unwrap();
            if m.lambdas.is_empty() {
                Some((c.clone(), m.xexp.clone()))
            } else {
                None
            }
        };
        match (rational_mono(&self.num), rational_mono(&self.den)) {
            (Some((cn, qn)), Some((cd, qd))) => {
                let r = cn / cd;
                let q = qn - qd;
                Ok(Constant::log_of_rat(&r)?.add(&Constant::from_rat(q)))
            }
            _ => Err(Error::Exactness(format!(
                "log of {} leaves the constant field",
                self
            ))),
        }
    }

    /// Exact exponential, defined for constants of the form
    /// `q + sum n_p log(p)` with q rational and the n_p integers.
    pub fn exp(&self) -> Result<Constant> {
        let err = || {
            Err(Error::Exactness(format!(
                "exp of {} leaves the constant field",
                self
            )))
        };
        if !self.den.lead().map(|(m, _)| m.is_one()).unwrap_or(false) || self.den.0.len() != 1 {
            return err();
        }
        let mut q = Rat::zero();
        let mut factor = Rat::one();
        for (m, c) in &self.num.0 {
            if !m.xexp.is_zero() {
                return err();
            }
            if m.lambdas.is_empty() {
                q = c.clone();
            } else if m.lambdas.len() == 1 && m.lambdas[0].1 == 1 {
                if !c.is_integer() {
                    return err();
                }
                let n: i64 = match c.to_integer().try_into() {
                    Ok(n) => n,
                    Err(_) => return err(),
                };
                let p = Rat::from(BigInt::from(m.lambdas[0].0));
                factor *= rat_ipow(&p, n);
            } else {
                return err();
            }
        }
        Ok(Constant::exp_of_rat(&q).mul(&Constant::from_rat(factor)))
    }

    /// Sign of the real value: 0 exactly when the canonical form is zero,
    /// otherwise decided by interval evaluation with escalating precision.
    pub fn sign(&self) -> Result<i8> {
        if self.is_zero() {
            return Ok(0);
        }
        let sn = poly_sign(&self.num)?;
        let sd = poly_sign(&self.den)?;
        Ok(sn * sd)
    }

    pub fn abs(&self) -> Result<Constant> {
        if self.sign()? < 0 {
            Ok(self.neg())
        } else {
            Ok(self.clone())
        }
    }

    pub fn cmp_const(&self, other: &Constant) -> Result<Ordering> {
        match self.sub(other).sign()? {
            -1 => Ok(Ordering::Less),
            0 => Ok(Ordering::Equal),
            _ => Ok(Ordering::Greater),
        }
    }
}

impl From<BTreeMap<SymMono, Rat>> for Poly {
    fn from(m: BTreeMap<SymMono, Rat>) -> Poly {
        Poly(m)
    }
}

fn lam_term(p: u64, e: i64) -> Poly {
    Poly::monomial(
        SymMono {
            lambdas: vec![(p, 1)],
            xexp: Rat::zero(),
        },
        Rat::from(BigInt::from(e)),
    )
}

fn rat_ipow(r: &Rat, k: i64) -> Rat {
    let mut acc = Rat::one();
    for _ in 0..k.abs() {
        acc *= r;
    }
    if k < 0 {
        acc.recip()
    } else {
        acc
    }
}

/// `r^q` when exactly representable as a rational.
fn rat_pow_exact(r: &Rat, q: &Rat) -> Option<Rat> {
    if r.is_zero() {
        return if q.is_positive() { Some(Rat::zero()) } else { None };
    }
    if !r.is_positive() {
        return None;
    }
    let d: u32 = q.denom().clone().try_into().ok()?;
    let n: i64 = q.numer().clone().try_into().ok()?;
    let rn = nth_root_exact(r.numer(), d)?;
    let rd = nth_root_exact(r.denom(), d)?;
    Some(rat_ipow(&Rat::new(rn, rd), n))
}

fn nth_root_exact(x: &BigInt, n: u32) -> Option<BigInt> {
    if x.is_negative() {
        return None;
    }
    let r = x.nth_root(n);
    if num::pow::pow(r.clone(), n as usize) == *x {
        Some(r)
    } else {
        None
    }
}

fn factorize(n: &BigInt) -> Vec<(u64, i64)> {
    let mut n: u64 = n
        .abs()
        .try_into()
        .expect("factorization limited to u64 rationals");
    let mut out = Vec::new();
    let mut p = 2u64;
    while p * p <= n {
        if n % p == 0 {
            let mut e = 0i64;
            while n % p == 0 {
                n /= p;
                e += 1;
            }
            out.push((p, e));
        }
        p += if p == 2 { 1 } else { 2 };
    }
    if n > 1 {
        out.push((n, 1));
    }
    out
}

// ---------------------------------------------------------------------------
// Interval arithmetic for the sign decision
// ---------------------------------------------------------------------------

#[derive(Clone, Debug)]
struct Iv {
    lo: Rat,
    hi: Rat,
}

impl Iv {
    fn point(r: Rat) -> Iv {
        Iv {
            lo: r.clone(),
            hi: r,
        }
    }

    fn add(&self, o: &Iv, bits: u32) -> Iv {
        Iv {
            lo: round_down(&(&self.lo + &o.lo), bits),
            hi: round_up(&(&self.hi + &o.hi), bits),
        }
    }

    fn mul(&self, o: &Iv, bits: u32) -> Iv {
        let cands = [
            &self.lo * &o.lo,
            &self.lo * &o.hi,
            &self.hi * &o.lo,
            &self.hi * &o.hi,
        ];
        let lo = cands.iter().min().unwrap().clone();
        let hi = cands.iter().max().unwrap().clone();
        Iv {
            lo: round_down(&lo, bits),
            hi: round_up(&hi, bits),
        }
    }

    fn recip(&self, bits: u32) -> Option<Iv> {
        if self.lo.is_positive() || self.hi.is_negative() {
            Some(Iv {
                lo: round_down(&self.hi.clone().recip(), bits),
                hi: round_up(&self.lo.clone().recip(), bits),
            })
        } else {
            None
        }
    }

    fn pow(&self, k: u32, bits: u32) -> Iv {
        let mut acc = Iv::point(Rat::one());
        for _ in 0..k {
            acc = acc.mul(self, bits);
        }
        acc
    }

    fn sign(&self) -> Option<i8> {
        if self.lo.is_positive() {
            Some(1)
        } else if self.hi.is_negative() {
            Some(-1)
        } else {
            None
        }
    }
}

fn round_down(x: &Rat, bits: u32) -> Rat {
    let scaled = x * Rat::from(BigInt::one() << bits);
    Rat::new(scaled.floor().to_integer(), BigInt::one() << bits)
}

fn round_up(x: &Rat, bits: u32) -> Rat {
    let scaled = x * Rat::from(BigInt::one() << bits);
    Rat::new(scaled.ceil().to_integer(), BigInt::one() << bits)
}

fn two_pow_neg(bits: u32) -> Rat {
    Rat::new(BigInt::one(), BigInt::one() << bits)
}

thread_local! {
    static LOG_CACHE: RefCell<HashMap<(u64, u32), Iv>> = RefCell::new(HashMap::new());
}

/// Enclosure of `log m` for a rational m in [1, 2), via the atanh series.
fn log_mantissa(m: &Rat, bits: u32) -> Iv {
    let t = (m - Rat::one()) / (m + Rat::one()); // in [0, 1/3)
    let t2 = round_up(&(&t * &t), bits + 8);
    let mut term = round_down(&t, bits + 8); // t^(2k+1) lower bound
    let mut term_hi = round_up(&t, bits + 8);
    let mut sum = Iv::point(Rat::zero());
    let eps = two_pow_neg(bits + 2);
    let mut k = 0u32;
    loop {
        let denom = Rat::from(BigInt::from(2 * k + 1));
        sum = sum.add(
            &Iv {
                lo: round_down(&(&term / &denom), bits + 8),
                hi: round_up(&(&term_hi / &denom), bits + 8),
            },
            bits + 8,
        );
        // remainder bound: sum_{j>k} t^(2j+1) <= t^(2k+3) / (1 - t^2)
        let rem = &term_hi * &t2 / (Rat::one() - &t2);
        if rem < eps {
            let two = Rat::from(BigInt::from(2));
            return Iv {
                lo: round_down(&(&sum.lo * &two), bits),
                hi: round_up(&(&(&sum.hi + &rem) * &two), bits),
            };
        }
        term = round_down(&(&term * &t2), bits + 8);
        term_hi = round_up(&(&term_hi * &t2), bits + 8);
        k += 1;
    }
}

/// Enclosure of `log p` for a prime p.
fn log_prime(p: u64, bits: u32) -> Iv {
    if let Some(iv) = LOG_CACHE.with(|c| c.borrow().get(&(p, bits)).cloned()) {
        return iv;
    }
    // p = m * 2^k with m in [1, 2)
    let mut k = 0u32;
    let mut m = Rat::from(BigInt::from(p));
    let two = Rat::from(BigInt::from(2));
    while m >= two {
        m /= &two;
        k += 1;
    }
    let iv = if k == 0 {
        log_mantissa(&m, bits)
    } else {
        let l2 = if p == 2 {
            Iv::point(Rat::zero()) // unused below when m == 1
        } else {
            log_prime(2, bits + 8)
        };
        let lm = log_mantissa(&m, bits + 8);
        if p == 2 {
            // log 2 directly: m == 1, so log p = k log 2 -> compute log 2 as
            // log of mantissa 2/... handle separately below.
            let base = log_mantissa(&rat(3, 2), bits + 8); // log(3/2)
            let third = log_mantissa(&rat(4, 3), bits + 8); // log(4/3)
            base.add(&third, bits) // log 2 = log(3/2) + log(4/3)
        } else {
            let kf = Iv::point(Rat::from(BigInt::from(k)));
            lm.add(&kf.mul(&l2, bits + 8), bits)
        }
    };
    LOG_CACHE.with(|c| c.borrow_mut().insert((p, bits), iv.clone()));
    iv
}

/// Enclosure of `e^q` for rational q.
fn exp_rat(q: &Rat, bits: u32) -> Iv {
    if q.is_zero() {
        return Iv::point(Rat::one());
    }
    if q.is_negative() {
        let pos = exp_rat(&-q.clone(), bits + 8);
        return pos.recip(bits).expect("e^q > 0");
    }
    // halve until q <= 1/2, then square back
    let half = rat(1, 2);
    let mut m = 0u32;
    let mut x = q.clone();
    while x > half {
        x /= Rat::from(BigInt::from(2));
        m += 1;
    }
    let guard = bits + 8 + 2 * m;
    // series sum x^k / k!
    let mut sum = Iv::point(Rat::one());
    let mut term = Iv::point(x.clone());
    let eps = two_pow_neg(guard);
    let mut k = 1u64;
    loop {
        sum = sum.add(&term, guard);
        // remainder <= term * x / (k+1) * 2  (ratio <= 1/2)
        let rem = &term.hi * &x / Rat::from(BigInt::from(k + 1)) * Rat::from(BigInt::from(2));
        if rem < eps {
            sum.hi = round_up(&(&sum.hi + &rem), guard);
            break;
        }
        k += 1;
        term = term.mul(
            &Iv::point(&x / Rat::from(BigInt::from(k))),
            guard,
        );
    }
    let mut acc = sum;
    for _ in 0..m {
        acc = acc.mul(&acc.clone(), guard);
    }
    Iv {
        lo: round_down(&acc.lo, bits),
        hi: round_up(&acc.hi, bits),
    }
}

fn eval_poly(p: &Poly, bits: u32) -> Iv {
    let mut acc = Iv::point(Rat::zero());
    for (m, c) in &p.0 {
        let mut term = Iv::point(c.clone());
        for &(prime, e) in &m.lambdas {
            term = term.mul(&log_prime(prime, bits).pow(e, bits), bits);
        }
        if !m.xexp.is_zero() {
            term = term.mul(&exp_rat(&m.xexp, bits), bits);
        }
        acc = acc.add(&term, bits);
    }
    acc
}

fn poly_sign(p: &Poly) -> Result<i8> {
    if p.is_zero() {
        return Ok(0);
    }
    // fast path: rational polynomial
    if p.0.len() == 1 {
        let (m, c) = p.lead().unwrap();
        if m.is_one() {
            return Ok(if c.is_positive() { 1 } else { -1 });
        }
    }
    let cap = config().precision_bits;
    let mut bits = 64u32;
    loop {
        let iv = eval_poly(p, bits);
        if let Some(s) = iv.sign() {
            return Ok(s);
        }
        if bits >= cap {
            return Err(Error::Exactness(format!(
                "sign undecided at {} bits",
                cap
            )));
        }
        bits = (bits * 2).min(cap);
    }
}

// ---------------------------------------------------------------------------
// Dyadic reals and sign-sequence lengths
// ---------------------------------------------------------------------------

/// A dyadic rational `num / 2^scale`, normalized (num odd or scale 0).
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct DyadicReal {
    pub num: BigInt,
    pub scale: u32,
}

impl DyadicReal {
    pub fn from_rat(r: &Rat) -> Option<DyadicReal> {
        let mut d = r.denom().clone();
        let mut scale = 0u32;
        let two = BigInt::from(2);
        while (&d % &two).is_zero() {
            d /= &two;
            scale += 1;
        }
        if d == BigInt::one() {
            Some(DyadicReal {
                num: r.numer().clone(),
                scale,
            })
        } else {
            None
        }
    }

    pub fn value(&self) -> Rat {
        Rat::new(self.num.clone(), BigInt::one() << self.scale)
    }
}

/// Length of `r` as a surreal sign sequence: finite for dyadics, `w` for
/// other rationals. Symbolic constants are a domain error.
pub fn sign_length(c: &Constant) -> Result<Ordinal> {
    let r = c.as_rat().ok_or_else(|| {
        Error::Domain(format!("sign length of non-rational constant {}", c))
    })?;
    match DyadicReal::from_rat(&r) {
        None => Ok(Ordinal::omega()),
        Some(_) => Ok(Ordinal::nat(simplicity_steps(&r))),
    }
}

/// Number of steps of the surreal simplicity search reaching a dyadic `r`.
pub fn simplicity_steps(r: &Rat) -> u64 {
    let mut lo: Option<Rat> = None;
    let mut hi: Option<Rat> = None;
    let mut cur = Rat::zero();
    let mut steps = 0u64;
    while &cur != r {
        if r > &cur {
            lo = Some(cur.clone());
        } else {
            hi = Some(cur.clone());
        }
        cur = match (&lo, &hi) {
            (Some(l), None) => l + Rat::one(),
            (None, Some(h)) => h - Rat::one(),
            (Some(l), Some(h)) => (l + h) / Rat::from(BigInt::from(2)),
            (None, None) => unreachable!(),
        };
        steps += 1;
    }
    steps
}

impl fmt::Display for Constant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fn mono(m: &SymMono, f: &mut fmt::Formatter<'_>) -> fmt::Result {
            let mut first = true;
            for &(p, e) in &m.lambdas {
                if !first {
                    write!(f, "*")?;
                }
                first = false;
                write!(f, "log({})", p)?;
                if e != 1 {
                    write!(f, "^{}", e)?;
                }
            }
            if !m.xexp.is_zero() {
                if !first {
                    write!(f, "*")?;
                }
                first = false;
                write!(f, "e^({})", m.xexp)?;
            }
            if first {
                write!(f, "1")?;
            }
            Ok(())
        }
        fn poly(p: &Poly, f: &mut fmt::Formatter<'_>) -> fmt::Result {
            if p.is_zero() {
                return write!(f, "0");
            }
            let mut first = true;
            for (m, c) in p.0.iter().rev() {
                if !first {
                    write!(f, "+")?;
                }
                first = false;
                if m.is_one() {
                    write!(f, "{}", c)?;
                } else if c.is_one() {
                    mono(m, f)?;
                } else {
                    write!(f, "{}*", c)?;
                    mono(m, f)?;
                }
            }
            Ok(())
        }
        if self.den == Poly::one() {
            if self.num.0.len() > 1 {
                write!(f, "(")?;
                poly(&self.num, f)?;
                write!(f, ")")
            } else {
                poly(&self.num, f)
            }
        } else {
            write!(f, "(")?;
            poly(&self.num, f)?;
            write!(f, ")/(")?;
            poly(&self.den, f)?;
            write!(f, ")")
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lam(p: u64) -> Constant {
        Constant::log_of_rat(&Rat::from(BigInt::from(p))).unwrap()
    }

    #[test]
    fn log_additivity() {
        // log 4 = 2 log 2
        let l4 = Constant::log_of_rat(&Rat::from(BigInt::from(4))).unwrap();
        let l2 = lam(2);
        assert_eq!(l4, l2.mul(&Constant::from_int(2)));
        assert!(l4.sub(&l2.add(&l2)).is_zero());
        // log(8/9) = 3 log 2 - 2 log 3
        let l = Constant::log_of_rat(&rat(8, 9)).unwrap();
        let expect = lam(2)
            .mul(&Constant::from_int(3))
            .sub(&lam(3).mul(&Constant::from_int(2)));
        assert_eq!(l, expect);
    }

    #[test]
    fn x_family_multiplicative() {
        let x1 = Constant::exp_of_rat(&Rat::one());
        let xm1 = Constant::exp_of_rat(&-Rat::one());
        assert!(x1.mul(&xm1).is_one());
        let x12 = Constant::exp_of_rat(&rat(1, 2));
        assert_eq!(x12.mul(&x12), x1);
    }

    #[test]
    fn polynomial_arith() {
        // (1 + L2)(1 - L2) = 1 - L2^2
        let a = Constant::one().add(&lam(2));
        let b = Constant::one().sub(&lam(2));
        let prod = a.mul(&b);
        let expect = Constant::one().sub(&lam(2).mul(&lam(2)));
        assert_eq!(prod, expect);
    }

    #[test]
    fn field_axioms_spot() {
        let xs = [
            Constant::rational(3, 4),
            lam(2),
            lam(3).sub(&Constant::one()),
            Constant::exp_of_rat(&rat(1, 3)).add(&Constant::from_int(2)),
        ];
        for a in &xs {
            for b in &xs {
                for c in &xs {
                    let l = a.mul(&b.add(c));
                    let r = a.mul(b).add(&a.mul(c));
                    assert_eq!(l, r, "distributivity");
                    assert_eq!(a.add(b).add(c), a.add(&b.add(c)), "assoc +");
                    assert_eq!(a.mul(b).mul(c), a.mul(&b.mul(c)), "assoc *");
                }
                if !b.is_zero() {
                    let q = a.div(b).unwrap();
                    assert_eq!(q.mul(b), *a, "division inverse");
                }
            }
        }
    }

    #[test]
    fn signs() {
        assert_eq!(lam(3).sub(&lam(2)).sign().unwrap(), 1);
        assert_eq!(Constant::zero().sign().unwrap(), 0);
        assert_eq!(lam(2).sub(&Constant::one()).sign().unwrap(), -1);
        // e < 3
        let e = Constant::exp_of_rat(&Rat::one());
        assert_eq!(e.sub(&Constant::from_int(3)).sign().unwrap(), -1);
        assert_eq!(e.sub(&Constant::from_int(2)).sign().unwrap(), 1);
        // sign is multiplicative
        let a = lam(2).sub(&Constant::one()); // negative
        let b = lam(3).sub(&Constant::one()); // positive
        assert_eq!(
            a.mul(&b).sign().unwrap(),
            a.sign().unwrap() * b.sign().unwrap()
        );
    }

    #[test]
    fn exp_log_exact() {
        // exp(log 2 + 1/2) = 2 e^(1/2)
        let c = lam(2).add(&Constant::rational(1, 2));
        let e = c.exp().unwrap();
        let expect = Constant::from_int(2).mul(&Constant::exp_of_rat(&rat(1, 2)));
        assert_eq!(e, expect);
        assert_eq!(e.log().unwrap(), c);
        // exp(log 2 / 2) leaves the field
        assert!(lam(2).mul(&Constant::rational(1, 2)).exp().is_err());
    }

    #[test]
    fn sign_lengths() {
        assert_eq!(sign_length(&Constant::zero()).unwrap(), Ordinal::zero());
        assert_eq!(
            sign_length(&Constant::rational(3, 4)).unwrap(),
            Ordinal::nat(3)
        );
        assert_eq!(
            sign_length(&Constant::rational(1, 3)).unwrap(),
            Ordinal::omega()
        );
        assert_eq!(
            sign_length(&Constant::from_int(-5)).unwrap(),
            Ordinal::nat(5)
        );
        assert!(sign_length(&lam(2)).is_err());
    }

    #[test]
    fn gcd_reduction() {
        // (L2^2 - 1) / (L2 - 1) = L2 + 1
        let l2 = lam(2);
        let num = l2.mul(&l2).sub(&Constant::one());
        let den = l2.sub(&Constant::one());
        let q = num.div(&den).unwrap();
        assert_eq!(q, l2.add(&Constant::one()));
    }
}
