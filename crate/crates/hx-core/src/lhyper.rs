//! Logarithmic-hyperseries monomials: formal products `prod l_g^(e(g))`
//! over ordinal positions, presented as finitely many disjoint intervals
//! with constant exponents. Supplies the derivation `l_g' = 1/prod_{b<g} l_b`
//! and the shifted Taylor kernels used by the hyperlogarithm expansion.
//!
//! Positions are "hyperlogarithm indices over a fixed atomic base": the
//! monomial at position `g` stands for `L_g(a)` once evaluated at an atom
//! `a`. Lower positions dominate, so the ordering is lexicographic on the
//! first differing position.

use crate::constants::Constant;
use crate::ordinal::Ordinal;
use crate::series::{merge_countable, MonoOps, Series, Term};
use crate::{Error, Result};
use std::cmp::Ordering;
use std::fmt;

/// One maximal interval `[lo, hi)` of positions carrying a fixed nonzero
/// exponent. A single position `g` is the interval `[g, g+1)`.
#[derive(Clone, PartialEq, Debug)]
pub struct Piece {
    pub lo: Ordinal,
    pub hi: Ordinal,
    pub exp: Constant,
}

/// An L-monomial: a piecewise-constant, finitely-presented exponent map.
#[derive(Clone, PartialEq, Debug, Default)]
pub struct LMonomial {
    /// Disjoint, increasing, canonical (adjacent equal-exponent intervals
    /// merged, zero exponents absent).
    pieces: Vec<Piece>,
}

impl LMonomial {
    pub fn identity() -> Self {
        LMonomial { pieces: Vec::new() }
    }

    pub fn point(g: Ordinal, exp: Constant) -> Self {
        let hi = g.add(&Ordinal::one());
        LMonomial::interval(g, hi, exp)
    }

    pub fn interval(lo: Ordinal, hi: Ordinal, exp: Constant) -> Self {
        if exp.is_zero() || lo >= hi {
            return LMonomial::identity();
        }
        LMonomial {
            pieces: vec![Piece { lo, hi, exp }],
        }
    }

    pub fn pieces(&self) -> &[Piece] {
        &self.pieces
    }

    /// Exponent at a position.
    pub fn exp_at(&self, g: &Ordinal) -> Constant {
        for p in &self.pieces {
            if &p.lo <= g && g < &p.hi {
                return p.exp.clone();
            }
        }
        Constant::zero()
    }

    /// Lowest supported position with its exponent.
    pub fn min_pos(&self) -> Option<(&Ordinal, &Constant)> {
        self.pieces.first().map(|p| (&p.lo, &p.exp))
    }

    /// True when the support is a finite set of positions.
    pub fn finite_support(&self) -> bool {
        self.pieces
            .iter()
            .all(|p| p.lo.add(&Ordinal::nat(piece_len_nat(p).unwrap_or(u64::MAX))) == p.hi)
    }

    /// Exact support size when finite.
    pub fn support_size(&self) -> Option<u64> {
        let mut n = 0u64;
        for p in &self.pieces {
            n += piece_len_nat(p)?;
        }
        Some(n)
    }

    /// All `(position, exponent)` pairs in ascending position order. For
    /// limit-length intervals this enumerates an omega-prefix only.
    pub fn positions(&self) -> impl Iterator<Item = (Ordinal, Constant)> + '_ {
        self.pieces.iter().flat_map(|p| PieceIter {
            cur: p.lo.clone(),
            piece: p,
        })
    }

    /// Shift every position on the left by `rho` (rebase from positions over
    /// `L_rho(root)` to positions over `root`).
    pub fn shift_positions(&self, rho: &Ordinal) -> LMonomial {
        let pieces = self
            .pieces
            .iter()
            .map(|p| Piece {
                lo: rho.add(&p.lo),
                hi: rho.add(&p.hi),
                exp: p.exp.clone(),
            })
            .collect();
        canonical(pieces)
    }

    pub fn scale_exponents(&self, c: &Constant) -> LMonomial {
        if c.is_zero() {
            return LMonomial::identity();
        }
        LMonomial {
            pieces: self
                .pieces
                .iter()
                .map(|p| Piece {
                    lo: p.lo.clone(),
                    hi: p.hi.clone(),
                    exp: p.exp.mul(c),
                })
                .collect(),
        }
    }

    /// Order type of the support.
    pub fn support_order_type(&self) -> Ordinal {
        let mut acc = Ordinal::zero();
        for p in &self.pieces {
            if let Some(len) = p.lo.left_sub(&p.hi) {
                acc = acc.add(&len);
            }
        }
        acc
    }
}

fn piece_len_nat(p: &Piece) -> Option<u64> {
    p.lo.left_sub(&p.hi).and_then(|d| d.as_nat())
}

struct PieceIter<'a> {
    cur: Ordinal,
    piece: &'a Piece,
}

impl<'a> Iterator for PieceIter<'a> {
    type Item = (Ordinal, Constant);
    fn next(&mut self) -> Option<Self::Item> {
        if self.cur >= self.piece.hi {
            return None;
        }
        let g = self.cur.clone();
        self.cur = self.cur.add(&Ordinal::one());
        Some((g, self.piece.exp.clone()))
    }
}

/// Rebuild the canonical piece list: sorted, disjoint (inputs must already
/// be disjoint), zero exponents dropped, adjacent equal exponents merged.
fn canonical(mut pieces: Vec<Piece>) -> LMonomial {
    pieces.retain(|p| !p.exp.is_zero() && p.lo < p.hi);
    pieces.sort_by(|a, b| a.lo.cmp(&b.lo));
    let mut out: Vec<Piece> = Vec::with_capacity(pieces.len());
    for p in pieces {
        if let Some(last) = out.last_mut() {
            if last.hi == p.lo && last.exp == p.exp {
                last.hi = p.hi;
                continue;
            }
        }
        out.push(p);
    }
    LMonomial { pieces: out }
}

impl MonoOps for LMonomial {
    fn one() -> Self {
        LMonomial::identity()
    }

    fn is_one(&self) -> bool {
        self.pieces.is_empty()
    }

    /// Pointwise exponent addition via a boundary sweep.
    fn mul(&self, other: &Self) -> Result<Self> {
        if self.is_one() {
            return Ok(other.clone());
        }
        if other.is_one() {
            return Ok(self.clone());
        }
        let mut bounds: Vec<Ordinal> = Vec::new();
        for p in self.pieces.iter().chain(other.pieces.iter()) {
            bounds.push(p.lo.clone());
            bounds.push(p.hi.clone());
        }
        bounds.sort();
        bounds.dedup();
        let mut pieces = Vec::new();
        for w in bounds.windows(2) {
            let exp = self.exp_at(&w[0]).add(&other.exp_at(&w[0]));
            if !exp.is_zero() {
                pieces.push(Piece {
                    lo: w[0].clone(),
                    hi: w[1].clone(),
                    exp,
                });
            }
        }
        Ok(canonical(pieces))
    }

    fn inv(&self) -> Result<Self> {
        Ok(LMonomial {
            pieces: self
                .pieces
                .iter()
                .map(|p| Piece {
                    lo: p.lo.clone(),
                    hi: p.hi.clone(),
                    exp: p.exp.neg(),
                })
                .collect(),
        })
    }

    /// Lexicographic: the lowest position where the exponents differ
    /// decides, larger exponent there meaning larger monomial.
    fn cmp_mono(&self, other: &Self) -> Result<Ordering> {
        let diff = self.mul(&other.inv()?)?;
        match diff.min_pos() {
            None => Ok(Ordering::Equal),
            Some((_, e)) => match e.sign()? {
                1 => Ok(Ordering::Greater),
                -1 => Ok(Ordering::Less),
                _ => Ok(Ordering::Equal),
            },
        }
    }
}

/// `l_g' = 1 / prod_{b < g} l_b`: exponent -1 on `[0, g)`.
pub fn lmono_derive(g: &Ordinal) -> LMonomial {
    LMonomial::interval(Ordinal::zero(), g.clone(), Constant::from_int(-1))
}

/// Derivative of a single L-monomial term in the `x = L_gamma(a)` frame:
/// `(c M)' = c M * sum_{b in supp M} e(b) * prod_{r in [gamma, b]} l_r^-1`,
/// a stream of terms in strictly decreasing monomial order.
pub fn term_derivative(t: &Term<LMonomial>, gamma: &Ordinal) -> Series<LMonomial> {
    let positions: Vec<(Ordinal, Constant)> = Vec::new();
    let t = t.clone();
    let gamma = gamma.clone();
    let mut iter_state = (0usize, t.mono.pieces().first().map(|p| p.lo.clone()));
    let _ = positions;
    Series::from_source(Box::new(move || {
        let (piece_idx, cur) = &mut iter_state;
        loop {
            let Some(piece) = t.mono.pieces().get(*piece_idx) else {
                return Ok(None);
            };
            let pos = match cur {
                Some(c) if *c < piece.hi => c.clone(),
                _ => {
                    *piece_idx += 1;
                    *cur = t.mono.pieces().get(*piece_idx).map(|p| p.lo.clone());
                    continue;
                }
            };
            *cur = Some(pos.add(&Ordinal::one()));
            if pos < gamma {
                return Err(Error::Domain(
                    "taylor kernel support below its frame shift".into(),
                ));
            }
            let block = LMonomial::interval(
                gamma.clone(),
                pos.add(&Ordinal::one()),
                Constant::from_int(-1),
            );
            let mono = t.mono.mul(&block)?;
            let coef = t.coef.mul(&piece.exp);
            if coef.is_zero() {
                continue;
            }
            return Ok(Some(Term::new(coef, mono)));
        }
    }))
}

/// Derivative of a kernel stream: the merged sum of the term derivatives.
pub fn stream_derivative(s: &Series<LMonomial>, gamma: &Ordinal) -> Series<LMonomial> {
    let s = s.clone();
    let gamma = gamma.clone();
    let mut i = 0usize;
    merge_countable(Box::new(move || match s.term_at(i)? {
        None => Ok(None),
        Some(t) => {
            i += 1;
            Ok(Some(term_derivative(&t, &gamma)))
        }
    }))
}

/// The k-th derivative `(l_{w^eta}^{|gamma})^(k)` of the gamma-shifted
/// hyperlogarithm, as a well-based stream of L-monomial terms in the frame
/// of the atom: positions are absolute hyperlogarithm indices.
///
/// The first derivative is the single monomial with exponent -1 on
/// `[gamma, w^eta)`; higher derivatives follow by the product rule over the
/// derivation above.
pub fn taylor_kernel(eta: &Ordinal, gamma: &Ordinal, k: usize) -> Result<Series<LMonomial>> {
    if k == 0 {
        return Err(Error::Domain("taylor kernel order must be >= 1".into()));
    }
    let alpha = Ordinal::omega_pow(eta)?;
    if gamma >= &alpha {
        return Err(Error::Domain(format!(
            "taylor kernel shift {} must be below w^{}",
            gamma, eta
        )));
    }
    let base = LMonomial::interval(gamma.clone(), alpha, Constant::from_int(-1));
    let mut s = Series::monomial(base);
    for _ in 1..k {
        s = stream_derivative(&s, gamma);
    }
    Ok(s)
}

impl fmt::Display for LMonomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.pieces.is_empty() {
            return write!(f, "1");
        }
        let mut first = true;
        for p in &self.pieces {
            if !first {
                write!(f, ", ")?;
            }
            first = false;
            if p.lo.add(&Ordinal::one()) == p.hi {
                write!(f, "{}:{}", p.lo, p.exp)?;
            } else {
                write!(f, "[{},{}):{}", p.lo, p.hi, p.exp)?;
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ordinal::parse_ordinal;

    fn o(s: &str) -> Ordinal {
        parse_ordinal(s).unwrap()
    }

    fn c(n: i64) -> Constant {
        Constant::from_int(n)
    }

    #[test]
    fn group_and_order() {
        let l0 = LMonomial::point(o("0"), c(1));
        assert!(l0.mul(&l0.inv().unwrap()).unwrap().is_one());
        // l0 beats any power of l1: lexicographic at position 0
        let l1sq = LMonomial::point(o("1"), c(2));
        assert_eq!(l0.cmp_mono(&l1sq).unwrap(), Ordering::Greater);
        // inverse of an interval flips the exponent
        let iv = LMonomial::interval(o("0"), o("w"), c(-1));
        assert_eq!(
            iv.inv().unwrap(),
            LMonomial::interval(o("0"), o("w"), c(1))
        );
        // translation invariance of the group ordering (random spot)
        let a = LMonomial::point(o("2"), c(3));
        let b = LMonomial::interval(o("1"), o("5"), c(1));
        let g = LMonomial::point(o("0"), c(-2));
        let ord = a.cmp_mono(&b).unwrap();
        assert_eq!(
            a.mul(&g).unwrap().cmp_mono(&b.mul(&g).unwrap()).unwrap(),
            ord
        );
    }

    #[test]
    fn merge_adjacent() {
        let a = LMonomial::interval(o("0"), o("3"), c(1));
        let b = LMonomial::interval(o("3"), o("w"), c(1));
        let m = a.mul(&b).unwrap();
        assert_eq!(m.pieces().len(), 1);
        assert_eq!(m.pieces()[0].hi, o("w"));
    }

    #[test]
    fn derive_examples() {
        assert!(lmono_derive(&o("0")).is_one());
        assert_eq!(
            lmono_derive(&o("1")),
            LMonomial::point(o("0"), c(-1))
        );
        assert_eq!(
            lmono_derive(&o("w")),
            LMonomial::interval(o("0"), o("w"), c(-1))
        );
    }

    #[test]
    fn kernel_first_order() {
        // (eta=1, gamma=0, k=1): exponent -1 on [0, w)
        let k1 = taylor_kernel(&o("1"), &o("0"), 1).unwrap();
        let (terms, exhausted) = k1.take(3).unwrap();
        assert!(exhausted);
        assert_eq!(terms.len(), 1);
        assert!(terms[0].coef.is_one());
        assert_eq!(
            terms[0].mono,
            LMonomial::interval(o("0"), o("w"), c(-1))
        );
        // (eta=1, gamma=5, k=1): exponent -1 on [5, w)
        let k5 = taylor_kernel(&o("1"), &o("5"), 1).unwrap();
        assert_eq!(
            k5.term_at(0).unwrap().unwrap().mono,
            LMonomial::interval(o("5"), o("w"), c(-1))
        );
    }

    #[test]
    fn kernel_second_order_leading() {
        // (eta=1, gamma=0, k=2) leading term: -(exp -2 at 0, -1 on [1, w))
        let k2 = taylor_kernel(&o("1"), &o("0"), 2).unwrap();
        let t = k2.term_at(0).unwrap().unwrap();
        assert_eq!(t.coef, c(-1));
        let expect = LMonomial::point(o("0"), c(-2))
            .mul(&LMonomial::interval(o("1"), o("w"), c(-1)))
            .unwrap();
        assert_eq!(t.mono, expect);
        // stream strictly decreases
        let (terms, _) = k2.take(4).unwrap();
        for w in terms.windows(2) {
            assert_eq!(
                w[0].mono.cmp_mono(&w[1].mono).unwrap(),
                Ordering::Greater
            );
        }
    }

    #[test]
    fn kernel_exactness_smoke() {
        // k=1 kernel times its own inverse is 1
        let k1 = taylor_kernel(&o("1"), &o("3"), 1).unwrap();
        let m = k1.term_at(0).unwrap().unwrap().mono;
        assert!(m.mul(&m.inv().unwrap()).unwrap().is_one());
    }

    #[test]
    fn derivative_of_omega_squared_interval() {
        // eta=2 kernels live on [gamma, w^2); check the second derivative's
        // leading structure still begins at gamma
        let k2 = taylor_kernel(&o("2"), &o("w"), 2).unwrap();
        let t = k2.term_at(0).unwrap().unwrap();
        let (lo, _) = t.mono.min_pos().map(|(a, b)| (a.clone(), b.clone())).unwrap();
        assert_eq!(lo, o("w"));
        assert_eq!(t.coef, c(-1));
    }
}
