//! Ordinal arithmetic in Cantor normal form below epsilon-zero.
//!
//! An ordinal is a finite sum `w^e1*c1 + w^e2*c2 + ...` with strictly
//! decreasing exponents (themselves ordinals) and positive integer
//! coefficients. The empty sum is 0. This covers everything the kernel
//! needs: indices of hyperlogarithms, strengths, and zeta values.

use crate::{config, Error, Result};
use std::cmp::Ordering;
use std::fmt;

/// Cantor-normal-form ordinal below epsilon-zero.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Ordinal {
    /// `(exponent, coefficient)` pairs, exponents strictly decreasing,
    /// coefficients >= 1.
    terms: Vec<(Ordinal, u64)>,
}

impl Ordinal {
    pub fn zero() -> Self {
        Ordinal { terms: Vec::new() }
    }

    pub fn one() -> Self {
        Ordinal::nat(1)
    }

    pub fn nat(n: u64) -> Self {
        if n == 0 {
            Ordinal::zero()
        } else {
            Ordinal {
                terms: vec![(Ordinal::zero(), n)],
            }
        }
    }

    pub fn omega() -> Self {
        Ordinal {
            terms: vec![(Ordinal::one(), 1)],
        }
    }

    /// `w^e * c + rest`, checking CNF ordering against `rest`.
    pub fn from_terms(terms: Vec<(Ordinal, u64)>) -> Self {
        debug_assert!(terms.windows(2).all(|p| p[0].0 > p[1].0));
        debug_assert!(terms.iter().all(|t| t.1 >= 1));
        Ordinal { terms }
    }

    pub fn terms(&self) -> &[(Ordinal, u64)] {
        &self.terms
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn is_one(&self) -> bool {
        self.terms.len() == 1 && self.terms[0].0.is_zero() && self.terms[0].1 == 1
    }

    /// Finite value if the ordinal is a natural number.
    pub fn as_nat(&self) -> Option<u64> {
        if self.is_zero() {
            Some(0)
        } else if self.terms.len() == 1 && self.terms[0].0.is_zero() {
            Some(self.terms[0].1)
        } else {
            None
        }
    }

    pub fn is_finite(&self) -> bool {
        self.as_nat().is_some()
    }

    /// Leading exponent, or None for 0.
    pub fn lead_exp(&self) -> Option<&Ordinal> {
        self.terms.first().map(|t| &t.0)
    }

    /// Smallest exponent appearing in the CNF, or None for 0.
    pub fn low_exp(&self) -> Option<&Ordinal> {
        self.terms.last().map(|t| &t.0)
    }

    /// Nesting depth of the CNF (0 for naturals).
    pub fn depth(&self) -> usize {
        self.terms
            .iter()
            .map(|(e, _)| 1 + e.depth())
            .max()
            .unwrap_or(0)
    }

    /// `w^a`, errors if the construction exceeds the configured depth cap.
    pub fn omega_pow(a: &Ordinal) -> Result<Ordinal> {
        if a.depth() + 1 > config().depth_cap {
            return Err(Error::Budget(format!(
                "ordinal depth cap {} exceeded by w^({})",
                config().depth_cap,
                a
            )));
        }
        Ok(Ordinal {
            terms: vec![(a.clone(), 1)],
        })
    }

    /// Additively indecomposable: of the form `w^g` (coefficient 1).
    /// Note 1 = w^0 counts; 0 does not.
    pub fn is_indecomposable(&self) -> bool {
        self.terms.len() == 1 && self.terms[0].1 == 1
    }

    /// Ordinal sum. Lower CNF terms of `self` are absorbed by the leading
    /// term of `other`.
    pub fn add(&self, other: &Ordinal) -> Ordinal {
        let Some(lead) = other.lead_exp() else {
            return self.clone();
        };
        let mut terms: Vec<(Ordinal, u64)> = Vec::new();
        for (e, c) in &self.terms {
            match e.cmp(lead) {
                Ordering::Greater => terms.push((e.clone(), *c)),
                Ordering::Equal | Ordering::Less => break,
            }
        }
        let mut rest = other.terms.clone();
        if let Some((e, c)) = self
            .terms
            .iter()
            .find(|(e, _)| e == lead)
        {
            rest[0] = (e.clone(), c + rest[0].1);
        }
        terms.extend(rest);
        Ordinal { terms }
    }

    /// Ordinal product, left-distributed over the CNF of `other`.
    pub fn mul(&self, other: &Ordinal) -> Ordinal {
        if self.is_zero() || other.is_zero() {
            return Ordinal::zero();
        }
        let lead = &self.terms[0];
        let mut acc = Ordinal::zero();
        for (f, c) in &other.terms {
            let part = if f.is_zero() {
                // self * c: multiply the leading coefficient, keep the tail.
                let mut t = self.terms.clone();
                t[0].1 = t[0].1.checked_mul(*c).expect("coefficient overflow");
                Ordinal { terms: t }
            } else {
                // self * w^f * c = w^(lead_exp + f) * c.
                Ordinal {
                    terms: vec![(lead.0.add(f), *c)],
                }
            };
            acc = acc.add(&part);
        }
        acc
    }

    /// The unique `(g', g'')` with `g = g' + g''`, every CNF exponent of `g'`
    /// greater than `mu`, and `g'' < w^(mu+1)`.
    pub fn split(&self, mu: &Ordinal) -> (Ordinal, Ordinal) {
        let hi: Vec<_> = self
            .terms
            .iter()
            .filter(|(e, _)| e > mu)
            .cloned()
            .collect();
        let lo: Vec<_> = self
            .terms
            .iter()
            .filter(|(e, _)| e <= mu)
            .cloned()
            .collect();
        (Ordinal { terms: hi }, Ordinal { terms: lo })
    }

    /// True iff the ordinal is a successor (CNF ends in a finite part).
    pub fn is_successor(&self) -> bool {
        self.terms
            .last()
            .map(|(e, _)| e.is_zero())
            .unwrap_or(false)
    }

    /// Predecessor data: `mu_minus` is `mu - 1` for successors and `mu`
    /// itself for limits (and for 0).
    pub fn mu_minus(&self) -> Ordinal {
        if !self.is_successor() {
            return self.clone();
        }
        let mut terms = self.terms.clone();
        let last = terms.last_mut().unwrap();
        if last.1 > 1 {
            last.1 -= 1;
        } else {
            terms.pop();
        }
        Ordinal { terms }
    }

    /// For `a = w^mu` (or 0), the ordinal `a_{/w} = w^(mu_minus)`.
    /// Errors when `a` is neither 0 nor an omega power.
    pub fn alpha_over_omega(&self) -> Result<Ordinal> {
        if self.is_zero() {
            return Ok(Ordinal::zero());
        }
        if !self.is_indecomposable() {
            return Err(Error::Domain(format!(
                "alpha_over_omega of {} which is not an omega power",
                self
            )));
        }
        let mu = &self.terms[0].0;
        Ordinal::omega_pow(&mu.mu_minus())
    }

    /// Left subtraction: the unique `c` with `self + c = other`, when
    /// `self <= other`.
    pub fn left_sub(&self, other: &Ordinal) -> Option<Ordinal> {
        match self.cmp(other) {
            Ordering::Greater => None,
            Ordering::Equal => Some(Ordinal::zero()),
            Ordering::Less => {
                // Find the first CNF position where they differ.
                let mut i = 0;
                while i < self.terms.len()
                    && i < other.terms.len()
                    && self.terms[i] == other.terms[i]
                {
                    i += 1;
                }
                if i == self.terms.len() {
                    return Some(Ordinal {
                        terms: other.terms[i..].to_vec(),
                    });
                }
                let (se, sc) = &self.terms[i];
                let (oe, oc) = &other.terms[i];
                match se.cmp(oe) {
                    Ordering::Less => Some(Ordinal {
                        terms: other.terms[i..].to_vec(),
                    }),
                    Ordering::Equal if sc < oc => {
                        // All remaining terms of self must be absorbed;
                        // they are, since self < other forces it.
                        let mut terms = vec![(oe.clone(), oc - sc)];
                        terms.extend_from_slice(&other.terms[i + 1..]);
                        Some(Ordinal { terms })
                    }
                    Ordering::Equal => {
                        // Same exponent, sc > oc contradicts self < other
                        // unless deeper terms decide; sc == oc was handled.
                        None
                    }
                    Ordering::Greater => None,
                }
            }
        }
    }

    /// Coefficient of `w^e` in the CNF.
    pub fn coeff_of(&self, e: &Ordinal) -> u64 {
        self.terms
            .iter()
            .find(|(x, _)| x == e)
            .map(|(_, c)| *c)
            .unwrap_or(0)
    }
}

impl PartialOrd for Ordinal {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Ordinal {
    /// Lexicographic comparison of CNF term lists agrees with ordinal order.
    fn cmp(&self, other: &Self) -> Ordering {
        for (a, b) in self.terms.iter().zip(other.terms.iter()) {
            match a.0.cmp(&b.0) {
                Ordering::Equal => {}
                ord => return ord,
            }
            match a.1.cmp(&b.1) {
                Ordering::Equal => {}
                ord => return ord,
            }
        }
        self.terms.len().cmp(&other.terms.len())
    }
}

/// Presentation of a transfinite-summable family of ordinals: a finite list,
/// optionally followed by a finite period repeated `w` times.
#[derive(Debug, Clone)]
pub struct SumPresentation {
    pub preperiod: Vec<Ordinal>,
    pub period: Vec<Ordinal>,
}

/// Ordered (non-commutative) sum of the presented family. For the periodic
/// case the value is the supremum of the partial sums, which equals
/// `sum(preperiod) + sum(period) * w`.
pub fn ordered_sum(p: &SumPresentation) -> Ordinal {
    let pre = p
        .preperiod
        .iter()
        .fold(Ordinal::zero(), |acc, x| acc.add(x));
    if p.period.is_empty() {
        return pre;
    }
    let block = p.period.iter().fold(Ordinal::zero(), |acc, x| acc.add(x));
    if block.is_zero() {
        return pre;
    }
    pre.add(&block.mul(&Ordinal::omega()))
}

impl fmt::Display for Ordinal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        let mut first = true;
        for (e, c) in &self.terms {
            if !first {
                write!(f, "+")?;
            }
            first = false;
            if e.is_zero() {
                write!(f, "{}", c)?;
            } else {
                if e.is_one() {
                    write!(f, "w")?;
                } else if e.is_finite() || e.is_indecomposable() {
                    write!(f, "w^{}", e)?;
                } else {
                    write!(f, "w^({})", e)?;
                }
                if *c != 1 {
                    write!(f, "*{}", c)?;
                }
            }
        }
        Ok(())
    }
}

impl fmt::Debug for Ordinal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self)
    }
}

/// Parse the CLI-wide ordinal grammar:
/// `ordinal := part ('+' part)*; part := 'w' ('^' factor)? ('*' nat)? | nat`
/// where `factor` is a nat, `w`, or a parenthesized ordinal.
pub fn parse_ordinal(s: &str) -> Result<Ordinal> {
    let mut p = OrdParser {
        src: s.as_bytes(),
        pos: 0,
    };
    let o = p.ordinal()?;
    p.skip_ws();
    if p.pos != p.src.len() {
        return Err(Error::Domain(format!(
            "trailing input in ordinal at byte {}: {:?}",
            p.pos, s
        )));
    }
    Ok(o)
}

struct OrdParser<'a> {
    src: &'a [u8],
    pos: usize,
}

impl<'a> OrdParser<'a> {
    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn eat(&mut self, b: u8) -> bool {
        self.skip_ws();
        if self.pos < self.src.len() && self.src[self.pos] == b {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn nat(&mut self) -> Result<u64> {
        self.skip_ws();
        let start = self.pos;
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        if start == self.pos {
            return Err(Error::Domain(format!(
                "expected number at byte {} in ordinal",
                start
            )));
        }
        std::str::from_utf8(&self.src[start..self.pos])
            .unwrap()
            .parse::<u64>()
            .map_err(|e| Error::Domain(format!("bad number in ordinal: {}", e)))
    }

    fn ordinal(&mut self) -> Result<Ordinal> {
        let mut acc = self.part()?;
        while self.eat(b'+') {
            let next = self.part()?;
            acc = acc.add(&next);
        }
        Ok(acc)
    }

    fn part(&mut self) -> Result<Ordinal> {
        self.skip_ws();
        if self.eat(b'w') {
            let exp = if self.eat(b'^') {
                self.exp_factor()?
            } else {
                Ordinal::one()
            };
            let coeff = if self.eat(b'*') { self.nat()? } else { 1 };
            if coeff == 0 {
                return Ok(Ordinal::zero());
            }
            let pow = Ordinal::omega_pow(&exp)?;
            Ok(pow.mul(&Ordinal::nat(coeff)))
        } else {
            Ok(Ordinal::nat(self.nat()?))
        }
    }

    fn exp_factor(&mut self) -> Result<Ordinal> {
        self.skip_ws();
        if self.eat(b'(') {
            let o = self.ordinal()?;
            if !self.eat(b')') {
                return Err(Error::Domain("unclosed '(' in ordinal".into()));
            }
            Ok(o)
        } else if self.pos < self.src.len() && self.src[self.pos] == b'w' {
            self.pos += 1;
            // allow w^w^... right-associatively
            if self.eat(b'^') {
                let e = self.exp_factor()?;
                Ordinal::omega_pow(&e)
            } else {
                Ok(Ordinal::omega())
            }
        } else {
            Ok(Ordinal::nat(self.nat()?))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn o(s: &str) -> Ordinal {
        parse_ordinal(s).unwrap()
    }

    #[test]
    fn parse_print_roundtrip() {
        for s in ["0", "1", "w", "w^2+w*2", "w^w+5", "w^(w+1)*3+w^2*2+7"] {
            let x = o(s);
            assert_eq!(o(&x.to_string()), x, "roundtrip {}", s);
        }
    }

    #[test]
    fn cmp_basics() {
        assert!(o("0") < o("1"));
        assert!(o("w^2") > o("w*5+3"));
        assert_eq!(o("w+1").cmp(&o("w+1")), Ordering::Equal);
        assert!(o("w^w") > o("w^5*9+w"));
    }

    #[test]
    fn add_examples() {
        // left absorption by a strictly larger leading exponent
        assert_eq!(o("w").add(&o("w^2")), o("w^2"));
        // concatenated well-order order type
        assert_eq!(o("w^2+w").add(&o("w+1")), o("w^2+w*2+1"));
        assert_eq!(o("w^2+w").add(&Ordinal::zero()), o("w^2+w"));
    }

    #[test]
    fn mul_examples() {
        assert_eq!(o("w+1").mul(&o("2")), o("w*2+1"));
        assert_eq!(o("w+1").mul(&Ordinal::one()), o("w+1"));
        assert_eq!(o("w").mul(&o("w")), o("w^2"));
        assert_eq!(o("2").mul(&o("w")), o("w"));
    }

    #[test]
    fn omega_pow_and_indecomposable() {
        assert_eq!(Ordinal::omega_pow(&Ordinal::zero()).unwrap(), o("1"));
        assert!(Ordinal::omega_pow(&o("w")).unwrap().is_indecomposable());
        for s in ["1", "w", "w^2", "w^w"] {
            assert!(o(s).is_indecomposable(), "{}", s);
        }
        assert!(!o("w+1").is_indecomposable());
    }

    #[test]
    fn split_examples() {
        // paper's worked example
        let (hi, lo) = o("w^2+w*2").split(&Ordinal::one());
        assert_eq!(hi, o("w^2"));
        assert_eq!(lo, o("w*2"));
        let (hi, lo) = o("5").split(&o("3"));
        assert_eq!(hi, Ordinal::zero());
        assert_eq!(lo, o("5"));
        let (hi, lo) = o("w^w+w*3+2").split(&Ordinal::one());
        assert_eq!(hi, o("w^w"));
        assert_eq!(lo, o("w*3+2"));
        assert_eq!(hi.add(&lo), o("w^w+w*3+2"));
    }

    #[test]
    fn pred_data() {
        assert_eq!(o("3").mu_minus(), o("2"));
        assert!(o("3").is_successor());
        assert_eq!(o("w").mu_minus(), o("w"));
        assert!(!o("w").is_successor());
        assert_eq!(o("w^3").alpha_over_omega().unwrap(), o("w^2"));
        assert_eq!(o("1").alpha_over_omega().unwrap(), o("1"));
        assert!(o("w+1").alpha_over_omega().is_err());
    }

    #[test]
    fn ordered_sum_examples() {
        let s = ordered_sum(&SumPresentation {
            preperiod: vec![o("w"), o("1")],
            period: vec![],
        });
        assert_eq!(s, o("w+1"));
        let s = ordered_sum(&SumPresentation {
            preperiod: vec![],
            period: vec![o("1")],
        });
        assert_eq!(s, o("w"));
        // preperiod [w^2], period [w+1]: w^2 + (w+1)*w = w^2*2
        let s = ordered_sum(&SumPresentation {
            preperiod: vec![o("w^2")],
            period: vec![o("w+1")],
        });
        assert_eq!(s, o("w^2*2"));
    }

    #[test]
    fn left_sub() {
        assert_eq!(o("w").left_sub(&o("w+3")).unwrap(), o("3"));
        assert_eq!(o("w*2").left_sub(&o("w^2+1")).unwrap(), o("w^2+1"));
        assert_eq!(o("w+1").left_sub(&o("w+1")).unwrap(), o("0"));
        assert_eq!(o("w*2").left_sub(&o("w*5")).unwrap(), o("w*3"));
        assert!(o("w^2").left_sub(&o("w")).is_none());
        // recomposition property on a few samples
        for (a, b) in [("w", "w^2+w*2"), ("w*3+1", "w^w"), ("2", "w")] {
            let (a, b) = (o(a), o(b));
            let c = a.left_sub(&b).unwrap();
            assert_eq!(a.add(&c), b);
        }
    }
}
