//! The hyperseries monomial grammar and its structural helpers.
//!
//! A monomial is one of:
//!  - `One` — the group identity;
//!  - `Omega` — the distinguished atom `w`;
//!  - `Expansion { psi, beta, alpha, u, iota }` — `e^psi (L_beta E_alpha^u)^iota`,
//!    the normal forms of types I (`alpha >= w`) and II (`alpha = 0`, `u` an
//!    atomic monomial);
//!  - `PureExp { psi }` — `e^psi` for `psi` purely large and not tail-atomic
//!    (this covers the `alpha = 1` exponentials, e.g. `w^2 = e^(2 L[1](w))`);
//!  - `Nested` — a nested number `Xi_Sigma z` for a positive coding sequence.
//!
//! Purely large exponents are `PsiSeries`: a finite head plus an optional
//! interval tail `sum_q lm(q) * L_q(root)` over an atomic root, which is the
//! finite presentation of the logarithms of infinite products
//! `prod_p L_p(root)^e` produced by hyperlogarithm expansions.

use crate::constants::{Constant, Rat};
use crate::lhyper::LMonomial;
use crate::nested::CodingSequence;
use crate::ordinal::Ordinal;
use crate::series::{MonoOps, Series, Term};
use crate::{Error, Result};
use std::fmt;
use std::rc::Rc;

pub type HSeries = Series<Monomial>;
pub type HTerm = Term<Monomial>;

/// Interval part of a purely large exponent: `sum_q lm(q) * L_q(root)`,
/// positions in log-index form over an atomic root.
#[derive(Clone, Debug)]
pub struct IntervalTail {
    pub root: Rc<Monomial>,
    pub lm: LMonomial,
}

impl PartialEq for IntervalTail {
    fn eq(&self, other: &Self) -> bool {
        self.lm == other.lm && self.root == other.root
    }
}

/// A purely large series: finite head terms (strictly decreasing) plus an
/// optional interval tail whose log-monomials all lie strictly below every
/// head term.
#[derive(Clone, Debug, Default)]
pub struct PsiSeries {
    pub head: Vec<HTerm>,
    pub tail: Option<IntervalTail>,
}

impl PartialEq for PsiSeries {
    fn eq(&self, other: &Self) -> bool {
        self.head == other.head && self.tail == other.tail
    }
}

impl PsiSeries {
    pub fn empty() -> Self {
        PsiSeries {
            head: Vec::new(),
            tail: None,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.head.is_empty() && self.tail.is_none()
    }

    pub fn from_finite(s: &HSeries) -> Result<Self> {
        Ok(PsiSeries {
            head: s.all_terms()?,
            tail: None,
        })
    }

    pub fn single(t: HTerm) -> Self {
        PsiSeries {
            head: vec![t],
            tail: None,
        }
    }

    /// Enumerated view: head terms, then the tail positions in ascending
    /// order (an omega-prefix when the tail extends past a limit).
    pub fn enumerate(&self) -> HSeries {
        let head = self.head.clone();
        let tail = self.tail.clone();
        let mut i = 0usize;
        let mut tail_iter: Option<Box<dyn Iterator<Item = (Ordinal, Constant)>>> = None;
        Series::from_source(Box::new(move || {
            if i < head.len() {
                let t = head[i].clone();
                i += 1;
                return Ok(Some(t));
            }
            let Some(tail) = &tail else {
                return Ok(None);
            };
            let it = tail_iter.get_or_insert_with(|| {
                let pieces: Vec<_> = tail.lm.pieces().to_vec();
                Box::new(pieces.into_iter().flat_map(|p| {
                    let mut cur = p.lo.clone();
                    std::iter::from_fn(move || {
                        if cur >= p.hi {
                            return None;
                        }
                        let q = cur.clone();
                        cur = cur.add(&Ordinal::one());
                        Some((q, p.exp.clone()))
                    })
                }))
            });
            match it.next() {
                None => Ok(None),
                Some((q, c)) => {
                    let mono = log_tower(&q, &tail.root);
                    Ok(Some(Term::new(c, mono)))
                }
            }
        }))
    }

    /// The largest log-monomial of the tail, when a tail exists.
    pub fn tail_top(&self) -> Option<Monomial> {
        let tail = self.tail.as_ref()?;
        let (lo, _) = tail.lm.min_pos()?;
        Some(log_tower(lo, &tail.root))
    }

    pub fn neg(&self) -> PsiSeries {
        PsiSeries {
            head: self
                .head
                .iter()
                .map(|t| Term::new(t.coef.neg(), t.mono.clone()))
                .collect(),
            tail: self.tail.as_ref().map(|t| IntervalTail {
                root: t.root.clone(),
                lm: t.lm.inv().expect("lmono inversion"),
            }),
        }
    }

    pub fn scale(&self, c: &Constant) -> PsiSeries {
        if c.is_zero() {
            return PsiSeries::empty();
        }
        PsiSeries {
            head: self
                .head
                .iter()
                .map(|t| Term::new(t.coef.mul(c), t.mono.clone()))
                .collect(),
            tail: self.tail.as_ref().map(|t| IntervalTail {
                root: t.root.clone(),
                lm: t.lm.scale_exponents(c),
            }),
        }
    }
}

/// A hyperseries monomial in normal form.
#[derive(Clone, Debug)]
pub enum Monomial {
    One,
    Omega,
    Expansion {
        psi: PsiSeries,
        beta: Ordinal,
        alpha: Ordinal,
        u: Rc<HSeries>,
        iota: i8,
    },
    PureExp {
        psi: PsiSeries,
    },
    Nested {
        sigma: Rc<CodingSequence>,
        index: Rc<HSeries>,
    },
}

/// The atomicity reach of a monomial: the largest `alpha = w^mu` such that
/// the monomial is `L_{<alpha}`-atomic, or `Infinite` for `w` itself.
#[derive(Clone, Debug, PartialEq)]
pub enum Reach {
    Finite(Ordinal),
    Infinite,
}

impl Reach {
    pub fn at_least(&self, alpha: &Ordinal) -> bool {
        match self {
            Reach::Infinite => true,
            Reach::Finite(r) => r >= alpha,
        }
    }
}

impl Monomial {
    /// Plain atom `L_beta(x)` over an atomic core (type II when `x` is an
    /// atom, or the bare core itself for `beta = 0`).
    pub fn log_tower(beta: &Ordinal, core: &Monomial) -> Monomial {
        log_tower(beta, core)
    }

    /// The `(beta, core)` view of an atomic monomial: `self = L_beta(core)`
    /// with `core` having no outer `L`-head. Returns `None` for
    /// non-atomic shapes.
    pub fn lhead(&self) -> Option<(Ordinal, Monomial)> {
        match self {
            Monomial::Omega | Monomial::Nested { .. } => {
                Some((Ordinal::zero(), self.clone()))
            }
            Monomial::Expansion {
                psi,
                beta,
                alpha,
                u,
                iota,
            } if psi.is_empty() && *iota == 1 => {
                if alpha.is_zero() {
                    // type II: u is a single atomic monomial
                    let core = u.term_at(0).ok().flatten()?;
                    if !core.coef.is_one() {
                        return None;
                    }
                    let (b2, c2) = core.mono.lhead()?;
                    Some((beta.add(&b2), c2))
                } else {
                    Some((
                        beta.clone(),
                        Monomial::Expansion {
                            psi: PsiSeries::empty(),
                            beta: Ordinal::zero(),
                            alpha: alpha.clone(),
                            u: u.clone(),
                            iota: 1,
                        },
                    ))
                }
            }
            _ => None,
        }
    }

    /// Atomicity reach.
    pub fn reach(&self) -> Reach {
        match self {
            Monomial::One => Reach::Finite(Ordinal::zero()),
            Monomial::Omega => Reach::Infinite,
            Monomial::PureExp { .. } => Reach::Finite(Ordinal::one()),
            Monomial::Nested { sigma, .. } => Reach::Finite(sigma.alpha0()),
            Monomial::Expansion {
                psi,
                beta,
                alpha,
                u,
                iota,
            } => {
                if !psi.is_empty() || *iota != 1 {
                    return Reach::Finite(Ordinal::one());
                }
                if beta.is_zero() {
                    if alpha.is_zero() {
                        // bare core stored in u (not canonical, but answer anyway)
                        match u.term_at(0) {
                            Ok(Some(t)) if t.coef.is_one() => t.mono.reach(),
                            _ => Reach::Finite(Ordinal::one()),
                        }
                    } else {
                        Reach::Finite(alpha.clone())
                    }
                } else {
                    let low = beta.low_exp().unwrap().clone();
                    let r = Ordinal::omega_pow(&low.add(&Ordinal::one()))
                        .unwrap_or_else(|_| Ordinal::omega());
                    match self.core_reach() {
                        Reach::Infinite => Reach::Finite(r),
                        Reach::Finite(cr) => Reach::Finite(std::cmp::min(r, cr)),
                    }
                }
            }
        }
    }

    fn core_reach(&self) -> Reach {
        match self.lhead() {
            Some((_, core)) => match core {
                Monomial::Omega => Reach::Infinite,
                Monomial::Nested { ref sigma, .. } => Reach::Finite(sigma.alpha0()),
                Monomial::Expansion { ref alpha, .. } => Reach::Finite(alpha.clone()),
                _ => Reach::Finite(Ordinal::one()),
            },
            None => Reach::Finite(Ordinal::one()),
        }
    }

    /// `L_{<alpha}`-atomicity of a positive monomial.
    pub fn is_atomic(&self, alpha: &Ordinal) -> bool {
        self.reach().at_least(alpha)
    }

    pub fn is_log_atomic(&self) -> bool {
        self.is_atomic(&Ordinal::omega())
    }

    /// `w^q` for rational q.
    pub fn omega_power(q: &Rat) -> Monomial {
        use num::One as _;
        if q.is_integer() && q.numer() == &num::BigInt::from(0) {
            return Monomial::One;
        }
        if q.is_one() {
            return Monomial::Omega;
        }
        let l1w = log_tower(&Ordinal::one(), &Monomial::Omega);
        Monomial::PureExp {
            psi: PsiSeries::single(Term::new(Constant::from_rat(q.clone()), l1w)),
        }
    }
}

/// Build the atom `L_beta(core)` directly (no rewrites; callers must ensure
/// the stack is reduced, which holds for `core = w` and for positions added
/// above an existing valid stack).
pub fn log_tower(beta: &Ordinal, core: &Monomial) -> Monomial {
    if beta.is_zero() {
        return core.clone();
    }
    match core {
        Monomial::Expansion {
            psi,
            beta: b2,
            alpha,
            u,
            iota,
        } if psi.is_empty() && *iota == 1 && !alpha.is_zero() && b2.is_zero() => {
            // L_beta(E_alpha^u)
            Monomial::Expansion {
                psi: PsiSeries::empty(),
                beta: beta.clone(),
                alpha: alpha.clone(),
                u: u.clone(),
                iota: 1,
            }
        }
        _ => Monomial::Expansion {
            psi: PsiSeries::empty(),
            beta: beta.clone(),
            alpha: Ordinal::zero(),
            u: Rc::new(Series::monomial(core.clone())),
            iota: 1,
        },
    }
}

/// Best-effort structural equality between finitely represented series.
pub fn series_eq(a: &HSeries, b: &HSeries) -> bool {
    let (Ok(ta), Ok(tb)) = (a.take(1024), b.take(1024)) else {
        return false;
    };
    ta.1 && tb.1 && ta.0 == tb.0
}

impl PartialEq for Monomial {
    fn eq(&self, other: &Self) -> bool {
        match (self, other) {
            (Monomial::One, Monomial::One) => true,
            (Monomial::Omega, Monomial::Omega) => true,
            (Monomial::PureExp { psi: a }, Monomial::PureExp { psi: b }) => a == b,
            (
                Monomial::Expansion {
                    psi: p1,
                    beta: b1,
                    alpha: a1,
                    u: u1,
                    iota: i1,
                },
                Monomial::Expansion {
                    psi: p2,
                    beta: b2,
                    alpha: a2,
                    u: u2,
                    iota: i2,
                },
            ) => i1 == i2 && b1 == b2 && a1 == a2 && p1 == p2 && series_eq(u1, u2),
            (
                Monomial::Nested {
                    sigma: s1,
                    index: z1,
                },
                Monomial::Nested {
                    sigma: s2,
                    index: z2,
                },
            ) => (Rc::ptr_eq(s1, s2) || s1 == s2) && series_eq(z1, z2),
            _ => false,
        }
    }
}

impl MonoOps for Monomial {
    fn one() -> Self {
        Monomial::One
    }

    fn is_one(&self) -> bool {
        matches!(self, Monomial::One)
    }

    fn mul(&self, other: &Self) -> Result<Self> {
        super::ops::mono_mul(self, other)
    }

    fn inv(&self) -> Result<Self> {
        super::ops::mono_inv(self)
    }

    fn cmp_mono(&self, other: &Self) -> Result<std::cmp::Ordering> {
        super::ops::mono_cmp(self, other)
    }
}

// --- printing ---------------------------------------------------------------

fn fmt_psi(psi: &PsiSeries, f: &mut fmt::Formatter<'_>) -> fmt::Result {
    let mut first = true;
    for t in &psi.head {
        if !first {
            write!(f, " + ")?;
        }
        first = false;
        if t.mono.is_one() {
            write!(f, "{}", t.coef)?;
        } else if t.coef.is_one() {
            write!(f, "{}", t.mono)?;
        } else {
            write!(f, "{}*{}", t.coef, t.mono)?;
        }
    }
    if let Some(tail) = &psi.tail {
        if !first {
            write!(f, " + ")?;
        }
        write!(f, "lsum({}; {})", tail.root, tail.lm)?;
    }
    Ok(())
}

impl fmt::Display for Monomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Monomial::One => write!(f, "1"),
            Monomial::Omega => write!(f, "w"),
            Monomial::PureExp { psi } => {
                // w^q prints compactly
                if psi.tail.is_none() && psi.head.len() == 1 {
                    let t = &psi.head[0];
                    if let Monomial::Expansion {
                        psi: p2,
                        beta,
                        alpha,
                        u,
                        iota,
                    } = &t.mono
                    {
                        if p2.is_empty()
                            && *iota == 1
                            && beta.is_one()
                            && alpha.is_zero()
                            && matches!(
                                u.term_at(0),
                                Ok(Some(Term {
                                    mono: Monomial::Omega,
                                    ..
                                }))
                            )
                        {
                            if let Some(q) = t.coef.as_rat() {
                                if q.is_integer() {
                                    return write!(f, "w^{}", q);
                                }
                                return write!(f, "w^({})", q);
                            }
                        }
                    }
                }
                write!(f, "exp(")?;
                fmt_psi(psi, f)?;
                write!(f, ")")
            }
            Monomial::Expansion {
                psi,
                beta,
                alpha,
                u,
                iota,
            } => {
                if !psi.is_empty() {
                    write!(f, "exp(")?;
                    fmt_psi(psi, f)?;
                    write!(f, ")*")?;
                }
                if *iota == -1 {
                    write!(f, "(")?;
                }
                if !beta.is_zero() {
                    write!(f, "L[{}](", beta)?;
                }
                if alpha.is_zero() {
                    match u.term_at(0) {
                        Ok(Some(t)) => write!(f, "{}", t.mono)?,
                        _ => write!(f, "?")?,
                    }
                } else {
                    write!(f, "E[{}]({})", alpha, u)?;
                }
                if !beta.is_zero() {
                    write!(f, ")")?;
                }
                if *iota == -1 {
                    write!(f, ")^-1")?;
                }
                Ok(())
            }
            Monomial::Nested { sigma, index } => {
                write!(f, "nest({}; z={})", sigma, index)
            }
        }
    }
}
