//! Well-based series over an ordered monomial group: exact arithmetic,
//! ordering, dominance, truncation, and lazy term streams in strictly
//! decreasing monomial order.
//!
//! Monomial comparison is fallible (it may hit an undecided constant sign
//! or a depth cap), so every series operation returns `Result`.

use crate::constants::Constant;
use crate::{config, Error, Result};
use std::cell::RefCell;
use std::cmp::Ordering;
use std::collections::HashSet;
use std::fmt;
use std::rc::Rc;

/// Group operations and ordering required of a monomial type.
pub trait MonoOps: Clone + PartialEq + fmt::Debug + 'static {
    fn one() -> Self;
    fn is_one(&self) -> bool;
    fn mul(&self, other: &Self) -> Result<Self>;
    fn inv(&self) -> Result<Self>;
    fn cmp_mono(&self, other: &Self) -> Result<Ordering>;

    fn is_infinite(&self) -> Result<bool> {
        Ok(self.cmp_mono(&Self::one())? == Ordering::Greater)
    }
    fn is_infinitesimal(&self) -> Result<bool> {
        Ok(self.cmp_mono(&Self::one())? == Ordering::Less)
    }
}

/// A nonzero coefficient times a monomial.
#[derive(Clone, PartialEq, Debug)]
pub struct Term<M> {
    pub coef: Constant,
    pub mono: M,
}

impl<M: MonoOps> Term<M> {
    pub fn new(coef: Constant, mono: M) -> Self {
        debug_assert!(!coef.is_zero());
        Term { coef, mono }
    }

    pub fn mul(&self, other: &Term<M>) -> Result<Term<M>> {
        Ok(Term {
            coef: self.coef.mul(&other.coef),
            mono: self.mono.mul(&other.mono)?,
        })
    }

    pub fn inv(&self) -> Result<Term<M>> {
        Ok(Term {
            coef: self.coef.inv()?,
            mono: self.mono.inv()?,
        })
    }
}

type Source<M> = Box<dyn FnMut() -> Result<Option<Term<M>>>>;

struct LazyTerms<M> {
    cache: RefCell<Vec<Term<M>>>,
    state: RefCell<LazyState<M>>,
}

enum LazyState<M> {
    Active(Source<M>),
    Done,
    Failed(Error),
}

/// A well-based series: a finite term list or a shared lazy stream, always
/// in strictly decreasing monomial order. A lazy view never loses terms:
/// pulls are cached and shared between clones.
#[derive(Clone)]
pub struct Series<M> {
    repr: Repr<M>,
    offset: usize,
}

#[derive(Clone)]
enum Repr<M> {
    Finite(Rc<Vec<Term<M>>>),
    Lazy(Rc<LazyTerms<M>>),
}

impl<M: MonoOps> Series<M> {
    pub fn zero() -> Self {
        Series {
            repr: Repr::Finite(Rc::new(Vec::new())),
            offset: 0,
        }
    }

    pub fn constant(c: Constant) -> Self {
        if c.is_zero() {
            Series::zero()
        } else {
            Series::from_sorted(vec![Term::new(c, M::one())])
        }
    }

    pub fn monomial(m: M) -> Self {
        Series::from_sorted(vec![Term::new(Constant::one(), m)])
    }

    pub fn term(t: Term<M>) -> Self {
        Series::from_sorted(vec![t])
    }

    /// Build from terms already in strictly decreasing order.
    pub fn from_sorted(terms: Vec<Term<M>>) -> Self {
        Series {
            repr: Repr::Finite(Rc::new(terms)),
            offset: 0,
        }
    }

    /// Build from arbitrary terms: sort, merge equal monomials, drop zeros.
    pub fn from_terms(terms: Vec<Term<M>>) -> Result<Self> {
        Ok(Series::from_sorted(sort_terms(terms)?))
    }

    /// Build from a pull source promising strictly decreasing emission.
    pub fn from_source(source: Source<M>) -> Self {
        Series {
            repr: Repr::Lazy(Rc::new(LazyTerms {
                cache: RefCell::new(Vec::new()),
                state: RefCell::new(LazyState::Active(source)),
            })),
            offset: 0,
        }
    }

    /// The term at position `idx` (0 = dominant), forcing the stream.
    pub fn term_at(&self, idx: usize) -> Result<Option<Term<M>>> {
        let idx = idx + self.offset;
        match &self.repr {
            Repr::Finite(v) => Ok(v.get(idx).cloned()),
            Repr::Lazy(lazy) => loop {
                if let Some(t) = lazy.cache.borrow().get(idx) {
                    return Ok(Some(t.clone()));
                }
                let mut state = lazy.state.borrow_mut();
                match &mut *state {
                    LazyState::Done => return Ok(None),
                    LazyState::Failed(e) => return Err(e.clone()),
                    LazyState::Active(src) => {
                        if lazy.cache.borrow().len() >= config().stream_budget {
                            let e = Error::Budget(
                                "stream materialization budget exhausted".into(),
                            );
                            *state = LazyState::Failed(e.clone());
                            return Err(e);
                        }
                        match src() {
                            Err(e) => {
                                *state = LazyState::Failed(e.clone());
                                return Err(e);
                            }
                            Ok(None) => {
                                *state = LazyState::Done;
                                return Ok(None);
                            }
                            Ok(Some(t)) => {
                                let mut cache = lazy.cache.borrow_mut();
                                if let Some(prev) = cache.last() {
                                    // every emission must strictly decrease
                                    if prev.mono.cmp_mono(&t.mono)? != Ordering::Greater {
                                        let e = Error::Domain(
                                            "stream emitted non-decreasing monomials"
                                                .into(),
                                        );
                                        drop(cache);
                                        *state = LazyState::Failed(e.clone());
                                        return Err(e);
                                    }
                                }
                                cache.push(t);
                            }
                        }
                    }
                }
            },
        }
    }

    /// View of this series starting at term `n`.
    pub fn suffix(&self, n: usize) -> Series<M> {
        Series {
            repr: self.repr.clone(),
            offset: self.offset + n,
        }
    }

    pub fn is_zero(&self) -> Result<bool> {
        Ok(self.term_at(0)?.is_none())
    }

    /// Finite list of all terms; errors if the stream does not exhaust
    /// within the budget.
    pub fn all_terms(&self) -> Result<Vec<Term<M>>> {
        let mut out = Vec::new();
        let mut i = 0;
        while let Some(t) = self.term_at(i)? {
            out.push(t);
            i += 1;
        }
        Ok(out)
    }

    /// First `n` terms plus an exhaustion flag.
    pub fn take(&self, n: usize) -> Result<(Vec<Term<M>>, bool)> {
        let mut out = Vec::new();
        for i in 0..n {
            match self.term_at(i)? {
                Some(t) => out.push(t),
                None => return Ok((out, true)),
            }
        }
        Ok((out, self.term_at(n)?.is_none()))
    }

    /// Dominant term; error on the zero series.
    pub fn dominant(&self) -> Result<Term<M>> {
        self.term_at(0)?
            .ok_or_else(|| Error::Domain("dominant monomial of 0".into()))
    }

    /// Sign of the series: sign of the dominant coefficient.
    pub fn sign(&self) -> Result<i8> {
        match self.term_at(0)? {
            None => Ok(0),
            Some(t) => t.coef.sign(),
        }
    }

    pub fn is_positive(&self) -> Result<bool> {
        Ok(self.sign()? > 0)
    }

    /// `> R`: positive with infinite dominant monomial.
    pub fn is_positive_infinite(&self) -> Result<bool> {
        match self.term_at(0)? {
            None => Ok(false),
            Some(t) => Ok(t.coef.sign()? > 0 && t.mono.is_infinite()?),
        }
    }

    /// Every term's monomial infinite; forces the whole series.
    pub fn is_purely_large(&self) -> Result<bool> {
        let mut i = 0;
        while let Some(t) = self.term_at(i)? {
            if !t.mono.is_infinite()? {
                return Ok(false);
            }
            i += 1;
        }
        Ok(true)
    }

    fn finite_len(&self) -> Option<usize> {
        match &self.repr {
            Repr::Finite(v) => Some(v.len().saturating_sub(self.offset)),
            Repr::Lazy(l) => match &*l.state.borrow() {
                LazyState::Done => Some(l.cache.borrow().len().saturating_sub(self.offset)),
                _ => None,
            },
        }
    }

    pub fn is_finite_repr(&self) -> bool {
        self.finite_len().is_some()
    }

    /// Collapse to an eager vector when the length is already known.
    fn materialize_if(self, len: Option<usize>) -> Series<M> {
        match len {
            None => self,
            Some(n) => {
                let mut out = Vec::with_capacity(n);
                for i in 0..n {
                    match self.term_at(i) {
                        Ok(Some(t)) => out.push(t),
                        _ => return self,
                    }
                }
                Series::from_sorted(out)
            }
        }
    }

    pub fn neg(&self) -> Series<M> {
        let s = self.clone();
        let len = self.finite_len();
        let mut i = 0;
        Series::from_source(Box::new(move || {
            let t = s.term_at(i)?;
            i += 1;
            Ok(t.map(|t| Term::new(t.coef.neg(), t.mono)))
        }))
        .materialize_if(len)
    }

    pub fn add(&self, other: &Series<M>) -> Result<Series<M>> {
        let (a, b) = (self.clone(), other.clone());
        let len = match (self.finite_len(), other.finite_len()) {
            (Some(_), Some(_)) => Some(usize::MAX), // finite, exact length found below
            _ => None,
        };
        let (mut i, mut j) = (0usize, 0usize);
        let merged = Series::from_source(Box::new(move || loop {
            match (a.term_at(i)?, b.term_at(j)?) {
                (None, None) => return Ok(None),
                (Some(t), None) => {
                    i += 1;
                    return Ok(Some(t));
                }
                (None, Some(t)) => {
                    j += 1;
                    return Ok(Some(t));
                }
                (Some(ta), Some(tb)) => match ta.mono.cmp_mono(&tb.mono)? {
                    Ordering::Greater => {
                        i += 1;
                        return Ok(Some(ta));
                    }
                    Ordering::Less => {
                        j += 1;
                        return Ok(Some(tb));
                    }
                    Ordering::Equal => {
                        i += 1;
                        j += 1;
                        let c = ta.coef.add(&tb.coef);
                        if !c.is_zero() {
                            return Ok(Some(Term::new(c, ta.mono)));
                        }
                    }
                },
            }
        }));
        if len.is_some() {
            Ok(Series::from_sorted(merged.all_terms()?))
        } else {
            Ok(merged)
        }
    }

    pub fn sub(&self, other: &Series<M>) -> Result<Series<M>> {
        self.add(&other.neg())
    }

    /// Multiply by a single term (order-preserving).
    pub fn mul_term(&self, t: &Term<M>) -> Result<Series<M>> {
        if t.coef.is_zero() {
            return Ok(Series::zero());
        }
        let s = self.clone();
        let t = t.clone();
        let len = self.finite_len();
        let mut i = 0usize;
        Ok(Series::from_source(Box::new(move || match s.term_at(i)? {
            None => Ok(None),
            Some(u) => {
                i += 1;
                Ok(Some(u.mul(&t)?))
            }
        }))
        .materialize_if(len))
    }

    pub fn scale(&self, c: &Constant) -> Result<Series<M>> {
        if c.is_zero() {
            return Ok(Series::zero());
        }
        self.mul_term(&Term::new(c.clone(), M::one()))
    }

    /// Cauchy product. Finite inputs stay finite; otherwise a lazy stream
    /// merged over the product grid by a frontier search.
    pub fn mul(&self, other: &Series<M>) -> Result<Series<M>> {
        if let (Some(na), Some(_)) = (self.finite_len(), other.finite_len()) {
            let mut acc = Series::zero();
            for i in 0..na {
                let t = self.term_at(i)?.unwrap();
                acc = acc.add(&other.mul_term(&t)?)?;
            }
            return Ok(acc);
        }
        let a = self.clone();
        let b = other.clone();
        let mut frontier: Vec<(usize, usize, Term<M>)> = Vec::new();
        let mut seen: HashSet<(usize, usize)> = HashSet::new();
        let mut init = false;
        Ok(Series::from_source(Box::new(move || {
            if !init {
                init = true;
                if let (Some(ta), Some(tb)) = (a.term_at(0)?, b.term_at(0)?) {
                    frontier.push((0, 0, ta.mul(&tb)?));
                    seen.insert((0, 0));
                }
            }
            loop {
                if frontier.is_empty() {
                    return Ok(None);
                }
                let mut best = 0usize;
                for k in 1..frontier.len() {
                    if frontier[k].2.mono.cmp_mono(&frontier[best].2.mono)?
                        == Ordering::Greater
                    {
                        best = k;
                    }
                }
                let best_mono = frontier[best].2.mono.clone();
                let mut coef = Constant::zero();
                let mut popped: Vec<(usize, usize)> = Vec::new();
                let mut k = 0;
                while k < frontier.len() {
                    if frontier[k].2.mono.cmp_mono(&best_mono)? == Ordering::Equal {
                        let (i, j, t) = frontier.remove(k);
                        coef = coef.add(&t.coef);
                        popped.push((i, j));
                    } else {
                        k += 1;
                    }
                }
                for (i, j) in popped {
                    for (ni, nj) in [(i + 1, j), (i, j + 1)] {
                        if seen.contains(&(ni, nj)) {
                            continue;
                        }
                        if let (Some(ta), Some(tb)) = (a.term_at(ni)?, b.term_at(nj)?) {
                            frontier.push((ni, nj, ta.mul(&tb)?));
                            seen.insert((ni, nj));
                        }
                    }
                }
                if !coef.is_zero() {
                    return Ok(Some(Term::new(coef, best_mono)));
                }
            }
        })))
    }

    /// Integer power by repeated multiplication.
    pub fn pow_usize(&self, k: usize) -> Result<Series<M>> {
        let mut acc = Series::constant(Constant::one());
        for _ in 0..k {
            acc = acc.mul(self)?;
        }
        Ok(acc)
    }

    /// Field comparison, examining at most the configured number of leading
    /// terms before reporting "undecided".
    pub fn cmp_series(&self, other: &Series<M>) -> Result<Ordering> {
        let cap = config().cmp_terms;
        for i in 0..cap {
            match (self.term_at(i)?, other.term_at(i)?) {
                (None, None) => return Ok(Ordering::Equal),
                (Some(t), None) => {
                    return Ok(if t.coef.sign()? > 0 {
                        Ordering::Greater
                    } else {
                        Ordering::Less
                    })
                }
                (None, Some(t)) => {
                    return Ok(if t.coef.sign()? > 0 {
                        Ordering::Less
                    } else {
                        Ordering::Greater
                    })
                }
                (Some(ta), Some(tb)) => match ta.mono.cmp_mono(&tb.mono)? {
                    Ordering::Greater => {
                        return Ok(if ta.coef.sign()? > 0 {
                            Ordering::Greater
                        } else {
                            Ordering::Less
                        })
                    }
                    Ordering::Less => {
                        return Ok(if tb.coef.sign()? > 0 {
                            Ordering::Less
                        } else {
                            Ordering::Greater
                        })
                    }
                    Ordering::Equal => match ta.coef.cmp_const(&tb.coef)? {
                        Ordering::Equal => {}
                        ord => return Ok(ord),
                    },
                },
            }
        }
        Err(Error::Budget(format!(
            "series comparison undecided after {} terms",
            cap
        )))
    }

    /// Structural equality of the first `n` terms (both exhausting earlier
    /// counts as equal).
    pub fn eq_prefix(&self, other: &Series<M>, n: usize) -> Result<bool> {
        for i in 0..n {
            match (self.term_at(i)?, other.term_at(i)?) {
                (None, None) => return Ok(true),
                (Some(ta), Some(tb)) => {
                    if ta.coef != tb.coef || ta.mono.cmp_mono(&tb.mono)? != Ordering::Equal
                    {
                        return Ok(false);
                    }
                }
                _ => return Ok(false),
            }
        }
        Ok(true)
    }

    /// Asymptotic comparison of nonzero series by dominant monomials:
    /// `Less` means `self ≺ other`, `Equal` means `self ≍ other`.
    pub fn cmp_asymptotic(&self, other: &Series<M>) -> Result<Ordering> {
        let da = self.dominant()?;
        let db = other.dominant()?;
        da.mono.cmp_mono(&db.mono)
    }

    /// Terms with monomial strictly above `m` (the truncation `f_{>m}`).
    pub fn truncate_above(&self, m: &M) -> Result<Series<M>> {
        let mut out = Vec::new();
        let mut i = 0;
        while let Some(t) = self.term_at(i)? {
            if t.mono.cmp_mono(m)? == Ordering::Greater {
                out.push(t);
                i += 1;
            } else {
                break;
            }
        }
        Ok(Series::from_sorted(out))
    }

    /// Initial-segment test: `self ⊴ f`. The receiver must exhaust.
    pub fn is_truncation_of(&self, f: &Series<M>) -> Result<bool> {
        let mut i = 0;
        loop {
            match self.term_at(i)? {
                None => return Ok(true),
                Some(tg) => match f.term_at(i)? {
                    None => return Ok(false),
                    Some(tf) => {
                        if tg.coef != tf.coef
                            || tg.mono.cmp_mono(&tf.mono)? != Ordering::Equal
                        {
                            return Ok(false);
                        }
                    }
                },
            }
            i += 1;
        }
    }

    /// Split into (purely large part, constant coefficient, infinitesimal
    /// part). The purely large part must be finitely supported.
    pub fn decompose(&self) -> Result<(Series<M>, Constant, Series<M>)> {
        let mut large = Vec::new();
        let mut i = 0;
        loop {
            match self.term_at(i)? {
                None => {
                    return Ok((
                        Series::from_sorted(large),
                        Constant::zero(),
                        Series::zero(),
                    ))
                }
                Some(t) => match t.mono.cmp_mono(&M::one())? {
                    Ordering::Greater => {
                        large.push(t);
                        i += 1;
                    }
                    Ordering::Equal => {
                        return Ok((Series::from_sorted(large), t.coef, self.suffix(i + 1)))
                    }
                    Ordering::Less => {
                        return Ok((
                            Series::from_sorted(large),
                            Constant::zero(),
                            self.suffix(i),
                        ))
                    }
                },
            }
        }
    }

    /// Apply the formal power series `sum_{k>=1} coef(k) x^k` at an
    /// infinitesimal argument, as a lazy stream in decreasing order.
    pub fn apply_power_series(
        &self,
        coef: Rc<dyn Fn(usize) -> Result<Constant>>,
    ) -> Result<Series<M>> {
        if self.is_zero()? {
            return Ok(Series::zero());
        }
        let d0 = self.dominant()?.mono;
        if !d0.is_infinitesimal()? {
            return Err(Error::Domain(
                "power series argument must be infinitesimal".into(),
            ));
        }
        let eps = self.clone();
        struct Src<M> {
            series: Series<M>,
            idx: usize,
        }
        let mut powers: Vec<Src<M>> = Vec::new();
        let mut cur_pow: Series<M> = Series::constant(Constant::one());
        let mut next_k = 1usize;
        let mut next_bound: Option<M> = Some(d0.clone());
        Ok(Series::from_source(Box::new(move || {
            let mut fuel = config().stream_budget;
            loop {
                // best head among activated powers
                let mut best: Option<Term<M>> = None;
                for s in powers.iter() {
                    if let Some(t) = s.series.term_at(s.idx)? {
                        match &best {
                            None => best = Some(t),
                            Some(bt) => {
                                if t.mono.cmp_mono(&bt.mono)? == Ordering::Greater {
                                    best = Some(t);
                                }
                            }
                        }
                    }
                }
                // activate the next power if it could contribute at or above
                // the best head (the bound d(eps)^(k) strictly decreases, so
                // this loop exits after finitely many activations)
                let need = match (&best, &next_bound) {
                    (_, None) => false,
                    (None, Some(_)) => true,
                    (Some(bt), Some(b)) => bt.mono.cmp_mono(b)? != Ordering::Greater,
                };
                if need {
                    fuel = fuel.checked_sub(1).ok_or_else(|| {
                        Error::Budget("power series activation budget exhausted".into())
                    })?;
                    cur_pow = cur_pow.mul(&eps)?;
                    let c = coef(next_k)?;
                    powers.push(Src {
                        series: cur_pow.scale(&c)?,
                        idx: 0,
                    });
                    next_k += 1;
                    next_bound = match cur_pow.term_at(0)? {
                        Some(t) => Some(t.mono.mul(&d0)?),
                        None => None,
                    };
                    continue;
                }
                let Some(bt) = best else {
                    return Ok(None);
                };
                // merge all heads with the emitting monomial
                let mut coef_sum = Constant::zero();
                for s in powers.iter_mut() {
                    if let Some(t) = s.series.term_at(s.idx)? {
                        if t.mono.cmp_mono(&bt.mono)? == Ordering::Equal {
                            coef_sum = coef_sum.add(&t.coef);
                            s.idx += 1;
                        }
                    }
                }
                if !coef_sum.is_zero() {
                    return Ok(Some(Term::new(coef_sum, bt.mono)));
                }
            }
        })))
    }
}

/// Merge a countable family of series whose dominant monomials strictly
/// decrease from source to source. `next_source` yields the sources in that
/// order; `None` ends the family. The result is a single lazy stream.
pub fn merge_countable<M: MonoOps>(
    mut next_source: Box<dyn FnMut() -> Result<Option<Series<M>>>>,
) -> Series<M> {
    struct Cur<M> {
        series: Series<M>,
        idx: usize,
    }
    let mut active: Vec<Cur<M>> = Vec::new();
    let mut pending: Option<Series<M>> = None;
    let mut done = false;
    Series::from_source(Box::new(move || {
        let mut fuel = config().stream_budget;
        loop {
            fuel = fuel
                .checked_sub(1)
                .ok_or_else(|| Error::Budget("countable merge budget exhausted".into()))?;
            if pending.is_none() && !done {
                match next_source()? {
                    None => done = true,
                    Some(s) => pending = Some(s),
                }
            }
            let mut best: Option<Term<M>> = None;
            for c in active.iter() {
                if let Some(t) = c.series.term_at(c.idx)? {
                    match &best {
                        None => best = Some(t),
                        Some(bt) => {
                            if t.mono.cmp_mono(&bt.mono)? == Ordering::Greater {
                                best = Some(t);
                            }
                        }
                    }
                }
            }
            if let Some(p) = &pending {
                match p.term_at(0)? {
                    None => {
                        pending = None;
                        continue;
                    }
                    Some(ph) => {
                        let activate = match &best {
                            None => true,
                            Some(bt) => ph.mono.cmp_mono(&bt.mono)? != Ordering::Less,
                        };
                        if activate {
                            active.push(Cur {
                                series: pending.take().unwrap(),
                                idx: 0,
                            });
                            continue;
                        }
                    }
                }
            }
            let Some(bt) = best else {
                return Ok(None);
            };
            let mut coef = Constant::zero();
            for c in active.iter_mut() {
                if let Some(t) = c.series.term_at(c.idx)? {
                    if t.mono.cmp_mono(&bt.mono)? == Ordering::Equal {
                        coef = coef.add(&t.coef);
                        c.idx += 1;
                    }
                }
            }
            if !coef.is_zero() {
                return Ok(Some(Term::new(coef, bt.mono)));
            }
        }
    }))
}

/// Sort arbitrary terms into strictly decreasing canonical order, merging
/// duplicates and dropping zero coefficients (merge sort with a fallible
/// comparator).
pub fn sort_terms<M: MonoOps>(terms: Vec<Term<M>>) -> Result<Vec<Term<M>>> {
    if terms.len() <= 1 {
        return Ok(terms.into_iter().filter(|t| !t.coef.is_zero()).collect());
    }
    let mid = terms.len() / 2;
    let mut right = terms;
    let left = right.drain(..mid).collect::<Vec<_>>();
    let a = sort_terms(left)?;
    let b = sort_terms(right)?;
    let mut out = Vec::with_capacity(a.len() + b.len());
    let (mut i, mut j) = (0, 0);
    while i < a.len() || j < b.len() {
        if i == a.len() {
            out.push(b[j].clone());
            j += 1;
        } else if j == b.len() {
            out.push(a[i].clone());
            i += 1;
        } else {
            match a[i].mono.cmp_mono(&b[j].mono)? {
                Ordering::Greater => {
                    out.push(a[i].clone());
                    i += 1;
                }
                Ordering::Less => {
                    out.push(b[j].clone());
                    j += 1;
                }
                Ordering::Equal => {
                    let c = a[i].coef.add(&b[j].coef);
                    if !c.is_zero() {
                        out.push(Term::new(c, a[i].mono.clone()));
                    }
                    i += 1;
                    j += 1;
                }
            }
        }
    }
    Ok(out)
}

impl<M: MonoOps + fmt::Display> fmt::Display for Series<M> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let (terms, exhausted) = match self.take(config().taylor_order) {
            Ok(x) => x,
            Err(_) => return write!(f, "<error>"),
        };
        if terms.is_empty() {
            return write!(f, "0");
        }
        for (i, t) in terms.iter().enumerate() {
            let neg = t.coef.sign().unwrap_or(1) < 0;
            let coef = if neg { t.coef.neg() } else { t.coef.clone() };
            if i == 0 {
                if neg {
                    write!(f, "-")?;
                }
            } else if neg {
                write!(f, " - ")?;
            } else {
                write!(f, " + ")?;
            }
            if t.mono.is_one() {
                write!(f, "{}", coef)?;
            } else if coef.is_one() {
                write!(f, "{}", t.mono)?;
            } else {
                write!(f, "{}*{}", coef, t.mono)?;
            }
        }
        if !exhausted {
            write!(f, " + ...")?;
        }
        Ok(())
    }
}

impl<M: MonoOps + fmt::Display> fmt::Debug for Series<M> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constants::rat;

    /// Toy monomial group for tests: powers of a single variable x.
    #[derive(Clone, PartialEq, Debug)]
    struct XPow(i64);

    impl fmt::Display for XPow {
        fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
            write!(f, "x^{}", self.0)
        }
    }

    impl MonoOps for XPow {
        fn one() -> Self {
            XPow(0)
        }
        fn is_one(&self) -> bool {
            self.0 == 0
        }
        fn mul(&self, other: &Self) -> Result<Self> {
            Ok(XPow(self.0 + other.0))
        }
        fn inv(&self) -> Result<Self> {
            Ok(XPow(-self.0))
        }
        fn cmp_mono(&self, other: &Self) -> Result<Ordering> {
            Ok(self.0.cmp(&other.0))
        }
    }

    fn s(pairs: &[(i64, i64)]) -> Series<XPow> {
        Series::from_terms(
            pairs
                .iter()
                .map(|&(c, e)| Term::new(Constant::from_int(c), XPow(e)))
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn product_difference_of_squares() {
        // (x+1)(x-1) = x^2 - 1
        let a = s(&[(1, 1), (1, 0)]);
        let b = s(&[(1, 1), (-1, 0)]);
        let p = a.mul(&b).unwrap();
        assert!(p.eq_prefix(&s(&[(1, 2), (-1, 0)]), 10).unwrap());
    }

    #[test]
    fn add_zero_identity() {
        let f = s(&[(3, 2), (1, 0), (5, -1)]);
        let g = f.add(&Series::zero()).unwrap();
        assert!(g.eq_prefix(&f, 10).unwrap());
    }

    #[test]
    fn cmp_and_decompose() {
        let f = s(&[(1, 1), (2, 0), (1, -1)]);
        let (large, c, small) = f.decompose().unwrap();
        assert!(large.eq_prefix(&s(&[(1, 1)]), 5).unwrap());
        assert_eq!(c, Constant::from_int(2));
        assert!(small.eq_prefix(&s(&[(1, -1)]), 5).unwrap());
        assert_eq!(
            s(&[(1, 0)]).cmp_series(&s(&[(1, 1)])).unwrap(),
            Ordering::Less
        );
        // f and 2f are asymptotically equivalent
        let g = f.scale(&Constant::from_int(2)).unwrap();
        assert_eq!(f.cmp_asymptotic(&g).unwrap(), Ordering::Equal);
    }

    #[test]
    fn truncation_partial_order() {
        let f = s(&[(1, 2), (1, 1), (1, 0)]);
        assert!(Series::zero().is_truncation_of(&f).unwrap());
        assert!(s(&[(1, 2)]).is_truncation_of(&f).unwrap());
        assert!(!s(&[(1, 1)]).is_truncation_of(&f).unwrap());
        assert!(f.is_truncation_of(&f).unwrap());
        let above = f.truncate_above(&XPow(1)).unwrap();
        assert!(above.eq_prefix(&s(&[(1, 2)]), 5).unwrap());
    }

    #[test]
    fn geometric_series_stream() {
        // 1/(1-x^-1) - 1 = sum_{k>=1} x^-k via power series application
        let eps = s(&[(1, -1)]);
        let geo = eps
            .apply_power_series(Rc::new(|_k| Ok(Constant::one())))
            .unwrap();
        let (terms, exhausted) = geo.take(5).unwrap();
        assert!(!exhausted);
        for (k, t) in terms.iter().enumerate() {
            assert_eq!(t.mono, XPow(-(k as i64 + 1)));
            assert!(t.coef.is_one());
        }
    }

    #[test]
    fn mercator_two_term_argument() {
        // log(1+eps) with eps = x^-1 + x^-2:
        // eps - eps^2/2 + eps^3/3 ... = x^-1 + x^-2/2 - ... check 3 terms
        let eps = s(&[(1, -1), (1, -2)]);
        let m = eps
            .apply_power_series(Rc::new(|k| {
                let sign = if k % 2 == 1 { 1 } else { -1 };
                Ok(Constant::from_rat(rat(sign, k as i64)))
            }))
            .unwrap();
        let (terms, _) = m.take(3).unwrap();
        assert_eq!(terms[0].mono, XPow(-1));
        assert!(terms[0].coef.is_one());
        assert_eq!(terms[1].mono, XPow(-2));
        assert_eq!(terms[1].coef, Constant::rational(1, 2));
        assert_eq!(terms[2].mono, XPow(-3));
        // x^-3: from eps^2 (-1/2 * 2*x^-3) and eps^3 (+1/3 x^-3): -1 + 1/3
        assert_eq!(terms[2].coef, Constant::rational(-2, 3));
    }

    #[test]
    fn lazy_product_of_streams() {
        let geo = |start: i64| {
            let mut k = start;
            Series::from_source(Box::new(move || {
                let t = Term::new(Constant::one(), XPow(-k));
                k += 1;
                Ok(Some(t))
            }))
        };
        // (sum x^-k)^2 = sum (k-1) x^-k for k >= 2
        let p = geo(1).mul(&geo(1)).unwrap();
        let (terms, _) = p.take(4).unwrap();
        for (i, t) in terms.iter().enumerate() {
            let k = i as i64 + 2;
            assert_eq!(t.mono, XPow(-k));
            assert_eq!(t.coef, Constant::from_int(k - 1));
        }
    }
}
