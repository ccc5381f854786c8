//! Shift spaces: sofic presentations, orbit closures of eventually periodic
//! points, and products.
//!
//! Everything downstream touches a space through its language (via
//! `contains_word` / `words`) and through exact point membership. Word
//! enumeration is capped; blowing the cap is a resource error, never a wrong
//! answer.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::sync::Arc;

use crate::alphabet::{Alphabet, SymbolId, Word};
use crate::error::{Error, Result};
use crate::point::{Point, RawPoint};

/// Enumeration budget. `max_len` bounds word length, `max_words` the number
/// of distinct words a single enumeration may hold.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnumLimits {
    pub max_len: usize,
    pub max_words: usize,
}

impl Default for EnumLimits {
    fn default() -> Self {
        // Long enough for radius-64 windows (length 129); the word-count cap
        // is what actually protects against exponential languages.
        EnumLimits { max_len: 192, max_words: 2_000_000 }
    }
}

/// A labeled transition system presenting a sofic shift. States are kept
/// essential (every state has both an incoming and an outgoing edge), so
/// every finite path extends to a bi-infinite one.
#[derive(Debug, Clone, PartialEq)]
pub struct SoficAutomaton {
    state_names: Vec<String>,
    edges: Vec<(usize, SymbolId, usize)>,
}

impl SoficAutomaton {
    pub fn new(state_names: Vec<String>, edges: Vec<(usize, SymbolId, usize)>) -> Result<Self> {
        if state_names.is_empty() {
            return Err(Error::input("automaton needs at least one state"));
        }
        if state_names.len() > 64 {
            return Err(Error::ResourceCap("more than 64 automaton states".into()));
        }
        for (a, _, b) in &edges {
            if *a >= state_names.len() || *b >= state_names.len() {
                return Err(Error::input("edge endpoint out of range"));
            }
        }
        let mut aut = SoficAutomaton { state_names, edges };
        aut.trim();
        if aut.edges.is_empty() {
            return Err(Error::input("automaton presents the empty shift"));
        }
        aut.edges.sort();
        aut.edges.dedup();
        Ok(aut)
    }

    /// Drops states that cannot sit on a bi-infinite path.
    fn trim(&mut self) {
        loop {
            let n = self.state_names.len();
            let mut has_out = vec![false; n];
            let mut has_in = vec![false; n];
            for (a, _, b) in &self.edges {
                has_out[*a] = true;
                has_in[*b] = true;
            }
            let keep: Vec<usize> = (0..n).filter(|&q| has_out[q] && has_in[q]).collect();
            if keep.len() == n {
                return;
            }
            let mut renum = vec![usize::MAX; n];
            for (new, old) in keep.iter().enumerate() {
                renum[*old] = new;
            }
            self.state_names = keep.iter().map(|&q| self.state_names[q].clone()).collect();
            self.edges = self
                .edges
                .iter()
                .filter(|(a, _, b)| renum[*a] != usize::MAX && renum[*b] != usize::MAX)
                .map(|&(a, s, b)| (renum[a], s, renum[b]))
                .collect();
            if self.state_names.is_empty() {
                return;
            }
        }
    }

    pub fn state_names(&self) -> &[String] {
        &self.state_names
    }

    pub fn edges(&self) -> &[(usize, SymbolId, usize)] {
        &self.edges
    }

    fn full_mask(&self) -> u64 {
        if self.state_names.len() == 64 {
            u64::MAX
        } else {
            (1u64 << self.state_names.len()) - 1
        }
    }

    /// States reachable by one `s`-step from any state in `from`.
    fn step(&self, from: u64, s: SymbolId) -> u64 {
        let mut out = 0;
        for (a, sym, b) in &self.edges {
            if *sym == s && from & (1 << a) != 0 {
                out |= 1 << b;
            }
        }
        out
    }

    fn step_back(&self, to: u64, s: SymbolId) -> u64 {
        let mut out = 0;
        for (a, sym, b) in &self.edges {
            if *sym == s && to & (1 << b) != 0 {
                out |= 1 << a;
            }
        }
        out
    }

    fn accepts(&self, w: &Word) -> bool {
        let mut mask = self.full_mask();
        for s in &w.0 {
            mask = self.step(mask, *s);
            if mask == 0 {
                return false;
            }
        }
        true
    }

    /// States admitting a left-infinite run labeled `...www`, block-aligned.
    fn left_limit(&self, w: &Word) -> u64 {
        let mut mask = self.full_mask();
        loop {
            let mut next = mask;
            for s in &w.0 {
                next = self.step(next, *s);
            }
            let next = next & mask;
            if next == mask {
                return mask;
            }
            mask = next;
            if mask == 0 {
                return 0;
            }
        }
    }

    /// States admitting a right-infinite run labeled `www...`, block-aligned.
    fn right_limit(&self, w: &Word) -> u64 {
        let mut mask = self.full_mask();
        loop {
            let mut next = mask;
            for s in w.0.iter().rev() {
                next = self.step_back(next, *s);
            }
            let next = next & mask;
            if next == mask {
                return mask;
            }
            mask = next;
            if mask == 0 {
                return 0;
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Presentation {
    Sofic(SoficAutomaton),
    /// Closure of the union of the shift orbits of finitely many points.
    Orbit(Vec<Point>),
    Product(Arc<ShiftSpace>, Arc<ShiftSpace>),
}

/// Word-complexity counts `n -> P(n)` with the matching entropy estimates
/// `ln(P(n)) / n`.
#[derive(Debug, Clone)]
pub struct ComplexityReport {
    pub counts: BTreeMap<usize, u64>,
    pub entropy: BTreeMap<usize, f64>,
}

/// Why a space was accepted as zero-entropy by the drift pipeline.
#[derive(Debug, Clone, PartialEq)]
pub enum ZeroEntropyCertificate {
    /// Orbit closures of eventually periodic points have linearly bounded
    /// complexity, hence entropy zero.
    OrbitClosure,
    Product(Box<ZeroEntropyCertificate>, Box<ZeroEntropyCertificate>),
    Empirical { n: usize, estimate: f64, threshold: f64 },
}

impl fmt::Display for ZeroEntropyCertificate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ZeroEntropyCertificate::OrbitClosure => {
                write!(f, "structural (orbit closure of eventually periodic points)")
            }
            ZeroEntropyCertificate::Product(a, b) => write!(f, "product of [{a}] and [{b}]"),
            ZeroEntropyCertificate::Empirical { n, estimate, threshold } => {
                write!(f, "empirical (estimate {estimate:.6} at n = {n}, threshold {threshold})")
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ShiftSpace {
    name: String,
    alphabet: Arc<Alphabet>,
    presentation: Presentation,
    limits: EnumLimits,
}

impl ShiftSpace {
    pub fn sofic(name: impl Into<String>, alphabet: Arc<Alphabet>, automaton: SoficAutomaton) -> Result<Arc<Self>> {
        for (_, s, _) in automaton.edges() {
            if !alphabet.contains(*s) {
                return Err(Error::input("automaton edge label outside alphabet"));
            }
        }
        Ok(Arc::new(ShiftSpace {
            name: name.into(),
            alphabet,
            presentation: Presentation::Sofic(automaton),
            limits: EnumLimits::default(),
        }))
    }

    pub fn orbit_closure(
        name: impl Into<String>,
        alphabet: Arc<Alphabet>,
        generators: Vec<Point>,
    ) -> Result<Arc<Self>> {
        if generators.is_empty() {
            return Err(Error::input("orbit closure needs at least one generator"));
        }
        for g in &generators {
            if *g.alphabet() != alphabet {
                return Err(Error::input("generator alphabet mismatch"));
            }
        }
        Ok(Arc::new(ShiftSpace {
            name: name.into(),
            alphabet,
            presentation: Presentation::Orbit(generators),
            limits: EnumLimits::default(),
        }))
    }

    pub fn product(name: impl Into<String>, left: Arc<ShiftSpace>, right: Arc<ShiftSpace>) -> Arc<Self> {
        let alphabet = Alphabet::product(&left.alphabet, &right.alphabet);
        Arc::new(ShiftSpace {
            name: name.into(),
            alphabet,
            presentation: Presentation::Product(left, right),
            limits: EnumLimits::default(),
        })
    }

    pub fn with_limits(self: &Arc<Self>, limits: EnumLimits) -> Arc<Self> {
        let mut s = (**self).clone();
        s.limits = limits;
        Arc::new(s)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn alphabet(&self) -> &Arc<Alphabet> {
        &self.alphabet
    }

    pub fn presentation(&self) -> &Presentation {
        &self.presentation
    }

    pub fn limits(&self) -> EnumLimits {
        self.limits
    }

    pub fn components(&self) -> Option<(&Arc<ShiftSpace>, &Arc<ShiftSpace>)> {
        match &self.presentation {
            Presentation::Product(l, r) => Some((l, r)),
            _ => None,
        }
    }

    /// Is `w` in the language of the shift?
    pub fn contains_word(&self, w: &Word) -> Result<bool> {
        self.alphabet.check_word(w)?;
        if w.is_empty() {
            return Ok(true);
        }
        match &self.presentation {
            Presentation::Sofic(aut) => Ok(aut.accepts(w)),
            Presentation::Orbit(_) => Ok(self.words(w.len())?.contains(w)),
            Presentation::Product(l, r) => {
                let (wl, wr) = self.unzip_word(w);
                Ok(l.contains_word(&wl)? && r.contains_word(&wr)?)
            }
        }
    }

    /// All length-`n` words of the language, sorted and deduplicated.
    pub fn words(&self, n: usize) -> Result<BTreeSet<Word>> {
        if n == 0 {
            return Err(Error::input("word length must be at least 1"));
        }
        if n > self.limits.max_len {
            return Err(Error::ResourceCap(format!(
                "word length {n} exceeds cap {}",
                self.limits.max_len
            )));
        }
        match &self.presentation {
            Presentation::Sofic(aut) => {
                let mut out = BTreeSet::new();
                // Depth-first over (prefix, live state set).
                let mut stack: Vec<(Word, u64)> = vec![(Word::default(), aut.full_mask())];
                while let Some((prefix, mask)) = stack.pop() {
                    if prefix.len() == n {
                        out.insert(prefix);
                        if out.len() > self.limits.max_words {
                            return Err(Error::ResourceCap(format!(
                                "more than {} words of length {n}",
                                self.limits.max_words
                            )));
                        }
                        continue;
                    }
                    for s in self.alphabet.ids() {
                        let next = aut.step(mask, s);
                        if next != 0 {
                            let mut w = prefix.clone();
                            w.0.push(s);
                            stack.push((w, next));
                        }
                    }
                }
                Ok(out)
            }
            Presentation::Orbit(generators) => {
                let mut out = BTreeSet::new();
                for g in generators {
                    for p in orbit_limit_points(g) {
                        let cycle = p.periodic_cycle().expect("limit points are periodic");
                        let plen = cycle.len() as i64;
                        for start in 0..plen {
                            out.insert(p.window(start, start + n as i64 - 1)?);
                        }
                    }
                    if let (Some(end), Some(start)) = (g.left_pure_end(), g.right_pure_start()) {
                        let lo = end - g.left_period_len() - n as i64;
                        let hi = start + g.right_period_len();
                        for i in lo..=hi {
                            out.insert(g.window(i, i + n as i64 - 1)?);
                        }
                    }
                    if out.len() > self.limits.max_words {
                        return Err(Error::ResourceCap(format!(
                            "more than {} words of length {n}",
                            self.limits.max_words
                        )));
                    }
                }
                Ok(out)
            }
            Presentation::Product(l, r) => {
                let wl = l.words(n)?;
                let wr = r.words(n)?;
                if wl.len().saturating_mul(wr.len()) > self.limits.max_words {
                    return Err(Error::ResourceCap(format!(
                        "product language of length {n} exceeds {} words",
                        self.limits.max_words
                    )));
                }
                let mut out = BTreeSet::new();
                for a in &wl {
                    for b in &wr {
                        out.insert(self.zip_word(a, b));
                    }
                }
                Ok(out)
            }
        }
    }

    /// `P(n)` without materializing product languages.
    pub fn count_words(&self, n: usize) -> Result<u64> {
        match &self.presentation {
            Presentation::Product(l, r) => {
                let a = l.count_words(n)? as u128;
                let b = r.count_words(n)? as u128;
                Ok(u64::try_from(a * b).unwrap_or(u64::MAX))
            }
            _ => Ok(self.words(n)?.len() as u64),
        }
    }

    /// `ln P(n) / n`, the empirical entropy at block length `n`.
    pub fn entropy_estimate(&self, n: usize) -> Result<f64> {
        let count = self.count_words(n)?;
        Ok((count as f64).ln() / n as f64)
    }

    pub fn complexity_report(&self, n_max: usize) -> Result<ComplexityReport> {
        let mut counts = BTreeMap::new();
        let mut entropy = BTreeMap::new();
        for n in 1..=n_max {
            let c = self.count_words(n)?;
            counts.insert(n, c);
            entropy.insert(n, (c as f64).ln() / n as f64);
        }
        Ok(ComplexityReport { counts, entropy })
    }

    /// A plateau `P(n) = P(n+1)` certifies the shift is finite; the drift
    /// pipeline must refuse such spaces.
    pub fn check_infinite(&self, up_to: usize) -> Result<()> {
        let mut prev = self.count_words(1)?;
        for n in 2..=up_to.max(2) {
            let c = self.count_words(n)?;
            if c == prev {
                return Err(Error::Refused(format!(
                    "shift is finite: P({}) = P({}) = {}",
                    n - 1,
                    n,
                    c
                )));
            }
            prev = c;
        }
        Ok(())
    }

    /// Certifies zero entropy, structurally where the presentation allows it
    /// and by an empirical threshold test otherwise.
    pub fn certify_zero_entropy(&self, threshold: f64, n_emp: usize) -> Result<ZeroEntropyCertificate> {
        match &self.presentation {
            Presentation::Orbit(_) => Ok(ZeroEntropyCertificate::OrbitClosure),
            Presentation::Product(l, r) => {
                let cl = l.certify_zero_entropy(threshold, n_emp)?;
                let cr = r.certify_zero_entropy(threshold, n_emp)?;
                Ok(ZeroEntropyCertificate::Product(Box::new(cl), Box::new(cr)))
            }
            Presentation::Sofic(_) => {
                let estimate = self.entropy_estimate(n_emp)?;
                if estimate <= threshold {
                    Ok(ZeroEntropyCertificate::Empirical { n: n_emp, estimate, threshold })
                } else {
                    Err(Error::Refused(format!(
                        "entropy estimate {estimate:.9} at n = {n_emp} exceeds threshold {threshold}"
                    )))
                }
            }
        }
    }

    /// Exact membership test for eventually periodic points.
    pub fn is_point_in(&self, p: &Point) -> Result<bool> {
        if p.alphabet() != &self.alphabet {
            return Err(Error::input("point alphabet does not match space"));
        }
        match &self.presentation {
            Presentation::Sofic(aut) => Ok(sofic_contains_point(aut, p)),
            Presentation::Orbit(generators) => {
                for g in generators {
                    if p.is_periodic() {
                        if orbit_limit_points(g).iter().any(|q| q == p) {
                            return Ok(true);
                        }
                    } else if let (Some(po), Some(go)) = (p.core_origin(), g.core_origin()) {
                        if g.shift(po - go) == *p {
                            return Ok(true);
                        }
                    }
                }
                Ok(false)
            }
            Presentation::Product(l, r) => {
                Ok(l.is_point_in(&self.project_point(p, true)?)?
                    && r.is_point_in(&self.project_point(p, false)?)?)
            }
        }
    }

    /// Deterministic pool of points covering every centered window of radius
    /// `h` that the language admits. Used for realizations and diagnostics.
    pub fn sample_points(&self, h: i64) -> Result<Vec<Point>> {
        let mut out: BTreeSet<Point> = BTreeSet::new();
        match &self.presentation {
            Presentation::Orbit(generators) => {
                for g in generators {
                    for p in orbit_limit_points(g) {
                        let cycle_len = p.periodic_cycle().unwrap().len() as i64;
                        for k in 0..cycle_len {
                            out.insert(p.shift(k));
                        }
                    }
                    if let (Some(end), Some(start)) = (g.left_pure_end(), g.right_pure_start()) {
                        let span = end.abs().max(start.abs())
                            + g.left_period_len()
                            + g.right_period_len();
                        for k in -(h + span)..=(h + span) {
                            out.insert(g.shift(k));
                        }
                    }
                }
            }
            Presentation::Sofic(_) => {
                // Realizations for sofic spaces are built per word; a global
                // pool would not be finite in any useful sense.
                return Err(Error::input("sample_points is not defined for sofic presentations"));
            }
            Presentation::Product(l, r) => {
                let pl = l.sample_points(h)?;
                let pr = r.sample_points(h)?;
                if pl.len().saturating_mul(pr.len()) > self.limits.max_words {
                    return Err(Error::ResourceCap("product sample pool too large".into()));
                }
                for a in &pl {
                    for b in &pr {
                        out.insert(self.zip_points(a, b)?);
                    }
                }
            }
        }
        Ok(out.into_iter().collect())
    }

    /// A point of the space whose centered window of radius `(|w|-1)/2`
    /// equals `w`. Among the deterministic candidate pool the structurally
    /// least point is returned, so repeated runs agree.
    pub fn realize_centered(&self, w: &Word) -> Result<Point> {
        if w.len().is_multiple_of(2) {
            return Err(Error::input("centered realization needs an odd-length word"));
        }
        let n = (w.len() / 2) as i64;
        match &self.presentation {
            Presentation::Orbit(_) => {
                let mut best: Option<Point> = None;
                for p in self.sample_points(n)? {
                    if p.window(-n, n)? == *w && best.as_ref().is_none_or(|b| p < *b) {
                        best = Some(p);
                    }
                }
                best.ok_or_else(|| {
                    Error::FamilyIncomplete(format!(
                        "word {} has no centered realization in {}",
                        self.alphabet.render_word(w),
                        self.name
                    ))
                })
            }
            Presentation::Sofic(aut) => realize_sofic(self, aut, w, n),
            Presentation::Product(l, r) => {
                let (wl, wr) = self.unzip_word(w);
                let a = l.realize_centered(&wl)?;
                let b = r.realize_centered(&wr)?;
                self.zip_points(&a, &b)
            }
        }
    }

    /// Interleaves two component points into a point of this product space.
    pub fn zip_points(&self, a: &Point, b: &Point) -> Result<Point> {
        let (l, r) = self
            .components()
            .ok_or_else(|| Error::input("zip_points on a non-product space"))?;
        if a.alphabet() != l.alphabet() || b.alphabet() != r.alphabet() {
            return Err(Error::input("component alphabets do not match product"));
        }
        let pair = |n: i64| self.alphabet.pair(a.symbol_at(n), b.symbol_at(n));
        if a.is_periodic() && b.is_periodic() {
            let n = num_integer::lcm(a.left_period_len(), b.left_period_len());
            let cycle: Word = (0..n).map(pair).collect();
            return Point::periodic(Arc::clone(&self.alphabet), cycle);
        }
        let lo = a
            .left_pure_end()
            .unwrap_or(i64::MAX)
            .min(b.left_pure_end().unwrap_or(i64::MAX))
            + 1;
        let hi = a
            .right_pure_start()
            .unwrap_or(lo)
            .max(b.right_pure_start().unwrap_or(lo));
        let pl = num_integer::lcm(a.left_period_len(), b.left_period_len());
        let pr = num_integer::lcm(a.right_period_len(), b.right_period_len());
        Point::from_raw(
            Arc::clone(&self.alphabet),
            RawPoint {
                origin: lo,
                pre_left: Word::default(),
                per_left: (0..pl).map(|i| pair(lo - 1 - i)).collect(),
                core: (lo..hi).map(pair).collect(),
                pre_right: Word::default(),
                per_right: (0..pr).map(|i| pair(hi + i)).collect(),
            },
        )
    }

    /// Component of a product-space point (`true` = left).
    pub fn project_point(&self, p: &Point, left: bool) -> Result<Point> {
        let (l, r) = self
            .components()
            .ok_or_else(|| Error::input("project_point on a non-product space"))?;
        let target = if left { l } else { r };
        p.map_symbols(Arc::clone(target.alphabet()), |s| {
            let (a, b) = self.alphabet.unpair(s);
            if left {
                a
            } else {
                b
            }
        })
    }

    pub fn zip_word(&self, a: &Word, b: &Word) -> Word {
        debug_assert_eq!(a.len(), b.len());
        a.0.iter().zip(&b.0).map(|(x, y)| self.alphabet.pair(*x, *y)).collect()
    }

    pub fn unzip_word(&self, w: &Word) -> (Word, Word) {
        let mut a = Vec::with_capacity(w.len());
        let mut b = Vec::with_capacity(w.len());
        for s in &w.0 {
            let (x, y) = self.alphabet.unpair(*s);
            a.push(x);
            b.push(y);
        }
        (Word(a), Word(b))
    }
}

/// Shift limits of a single orbit: the periodic points carrying the tail
/// patterns (every phase), which are exactly the extra points the closure
/// adds. A periodic generator is its own limit set.
pub fn orbit_limit_points(g: &Point) -> Vec<Point> {
    let alphabet = Arc::clone(g.alphabet());
    if g.is_periodic() {
        let cycle = g.periodic_cycle().unwrap();
        let plen = cycle.len() as i64;
        return (0..plen).map(|k| g.shift(k)).collect();
    }
    let mut out = BTreeSet::new();
    let pl = g.left_period_len();
    let left_cycle: Word = (0..pl).map(|i| g.symbol_at(g.left_pure_end().unwrap() - i)).collect();
    let pr = g.right_period_len();
    let start = g.right_pure_start().unwrap();
    let right_cycle: Word = (0..pr).map(|i| g.symbol_at(start + i)).collect();
    for cycle in [left_cycle, right_cycle] {
        let base = Point::periodic(Arc::clone(&alphabet), cycle).expect("valid cycle");
        let plen = base.periodic_cycle().unwrap().len() as i64;
        for k in 0..plen {
            out.insert(base.shift(k));
        }
    }
    out.into_iter().collect()
}

fn sofic_contains_point(aut: &SoficAutomaton, p: &Point) -> bool {
    if let Some(cycle) = p.periodic_cycle() {
        let a = aut.left_limit(&cycle);
        let b = aut.right_limit(&cycle);
        return a & b != 0;
    }
    let origin = p.core_origin().unwrap();
    let start = p.right_pure_start().unwrap();
    let pl = p.left_period_len();
    // Left-to-right reading of one left period ending just before `origin`.
    let left_block: Word = (origin - pl..origin).map(|n| p.symbol_at(n)).collect();
    let right_block: Word = (start..start + p.right_period_len()).map(|n| p.symbol_at(n)).collect();
    let core: Word = (origin..start).map(|n| p.symbol_at(n)).collect();

    let mut mask = aut.left_limit(&left_block);
    for s in &core.0 {
        mask = aut.step(mask, *s);
    }
    mask & aut.right_limit(&right_block) != 0
}

/// Builds an eventually periodic point of a sofic shift realizing `w`
/// centered: a path labeled `w` extended by deterministic backward and
/// forward lassos.
fn realize_sofic(space: &ShiftSpace, aut: &SoficAutomaton, w: &Word, n: i64) -> Result<Point> {
    // Pick the least state pair (q0, q1) connected by a w-labeled path.
    let full = aut.full_mask();
    let mut q_start = None;
    'outer: for q0 in 0..aut.state_names.len() {
        let mut mask = 1u64 << q0;
        for s in &w.0 {
            mask = aut.step(mask, *s);
            if mask == 0 {
                continue 'outer;
            }
        }
        q_start = Some((q0, mask.trailing_zeros() as usize));
        break;
    }
    let Some((q0, _)) = q_start else {
        return Err(Error::FamilyIncomplete(format!(
            "word {} is not in the language of {}",
            space.alphabet.render_word(w),
            space.name
        )));
    };
    // Recover a concrete state sequence along w by walking backward from the
    // reachable end states.
    let mut masks = vec![1u64 << q0];
    for s in &w.0 {
        let m = aut.step(*masks.last().unwrap(), *s);
        masks.push(m);
    }
    let mut states = vec![masks[w.len()].trailing_zeros() as usize];
    for i in (0..w.len()).rev() {
        let next = *states.last().unwrap();
        let prev = aut.step_back(1u64 << next, w.0[i]) & masks[i];
        debug_assert_ne!(prev, 0);
        states.push(prev.trailing_zeros() as usize);
    }
    states.reverse();
    let q1 = *states.last().unwrap();
    let _ = full;

    // Greedy backward lasso into q0: always follow the least incoming edge.
    let (back_tail, back_cycle) = {
        let mut path_states = vec![q0];
        let mut labels: Vec<SymbolId> = Vec::new();
        loop {
            let cur = *path_states.last().unwrap();
            let edge = aut
                .edges
                .iter()
                .filter(|(_, _, b)| *b == cur)
                .min()
                .expect("essential automaton state has an incoming edge");
            labels.push(edge.1);
            path_states.push(edge.0);
            if let Some(pos) = path_states[..path_states.len() - 1]
                .iter()
                .position(|&q| q == edge.0)
            {
                // path_states: q0, ..., cycle entry ... repeat.
                let cycle_len = path_states.len() - 1 - pos;
                let tail: Vec<SymbolId> = labels[..pos].to_vec();
                let cycle: Vec<SymbolId> = labels[pos..pos + cycle_len].to_vec();
                break (tail, cycle);
            }
        }
    };
    // Greedy forward lasso out of q1.
    let (fwd_tail, fwd_cycle) = {
        let mut path_states = vec![q1];
        let mut labels: Vec<SymbolId> = Vec::new();
        loop {
            let cur = *path_states.last().unwrap();
            let edge = aut
                .edges
                .iter()
                .filter(|(a, _, _)| *a == cur)
                .min()
                .expect("essential automaton state has an outgoing edge");
            labels.push(edge.1);
            path_states.push(edge.2);
            if let Some(pos) = path_states[..path_states.len() - 1]
                .iter()
                .position(|&q| q == edge.2)
            {
                let cycle_len = path_states.len() - 1 - pos;
                let tail: Vec<SymbolId> = labels[..pos].to_vec();
                let cycle: Vec<SymbolId> = labels[pos..pos + cycle_len].to_vec();
                break (tail, cycle);
            }
        }
    };

    Point::from_raw(
        Arc::clone(&space.alphabet),
        RawPoint {
            origin: -n,
            // Backward labels already read away from the core.
            pre_left: Word(back_tail),
            per_left: Word(back_cycle),
            core: w.clone(),
            pre_right: Word(fwd_tail),
            per_right: Word(fwd_cycle),
        },
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::point::parse_point;

    fn binary() -> Arc<Alphabet> {
        Alphabet::binary()
    }

    fn full_shift() -> Arc<ShiftSpace> {
        let a = binary();
        let edges = vec![(0, SymbolId(0), 0), (0, SymbolId(1), 0)];
        let aut = SoficAutomaton::new(vec!["q".into()], edges).unwrap();
        ShiftSpace::sofic("full", a, aut).unwrap()
    }

    fn sunny() -> Arc<ShiftSpace> {
        let a = binary();
        let x = parse_point(&a, "|0^omega <1@0> |0^omega").unwrap();
        ShiftSpace::orbit_closure("S", a, vec![x]).unwrap()
    }

    /// Oracle: every binary word with at most one 1.
    fn at_most_one_one(n: usize) -> BTreeSet<Word> {
        let mut out = BTreeSet::new();
        out.insert(Word(vec![SymbolId(0); n]));
        for i in 0..n {
            let mut w = vec![SymbolId(0); n];
            w[i] = SymbolId(1);
            out.insert(Word(w));
        }
        out
    }

    #[test]
    fn full_shift_counts_powers_of_two() {
        let s = full_shift();
        for n in 1..=10 {
            assert_eq!(s.count_words(n).unwrap(), 1u64 << n);
        }
        let est = s.entropy_estimate(10).unwrap();
        assert!((est - 2f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn sunny_language_matches_oracle() {
        let s = sunny();
        for n in 1..=20 {
            assert_eq!(s.words(n).unwrap(), at_most_one_one(n), "length {n}");
            assert_eq!(s.count_words(n).unwrap(), n as u64 + 1);
        }
    }

    #[test]
    fn sunny_membership() {
        let s = sunny();
        let a = binary();
        let x = parse_point(&a, "|0^omega <1@0> |0^omega").unwrap();
        let z = parse_point(&a, "|0^omega <0@0> |0^omega").unwrap();
        assert!(s.is_point_in(&x).unwrap());
        assert!(s.is_point_in(&x.shift(25)).unwrap());
        assert!(s.is_point_in(&z).unwrap());
        let two_ones = parse_point(&a, "|0^omega <1,0,1@0> |0^omega").unwrap();
        assert!(!s.is_point_in(&two_ones).unwrap());
        let p01 = parse_point(&a, "|1,0^omega <@0> |0,1^omega").unwrap();
        assert!(!s.is_point_in(&p01).unwrap());
    }

    #[test]
    fn sofic_membership_uses_bi_infinite_runs() {
        // Golden mean shift: no two consecutive 1s.
        let a = binary();
        let edges = vec![
            (0, SymbolId(0), 0),
            (0, SymbolId(1), 1),
            (1, SymbolId(0), 0),
        ];
        let aut = SoficAutomaton::new(vec!["z".into(), "o".into()], edges).unwrap();
        let s = ShiftSpace::sofic("golden", a.clone(), aut).unwrap();
        assert!(s.contains_word(&a.parse_word("0,1,0,1,0").unwrap()).unwrap());
        assert!(!s.contains_word(&a.parse_word("0,1,1").unwrap()).unwrap());

        let x = parse_point(&a, "|0^omega <1@0> |0^omega").unwrap();
        assert!(s.is_point_in(&x).unwrap());
        let p01 = parse_point(&a, "|1,0^omega <@0> |0,1^omega").unwrap();
        assert!(s.is_point_in(&p01).unwrap());
        let ones = parse_point(&a, "|1^omega <@0> |1^omega").unwrap();
        assert!(!s.is_point_in(&ones).unwrap());
    }

    #[test]
    fn product_language_is_componentwise() {
        let s = sunny();
        let prod = ShiftSpace::product("SxS", s.clone(), s.clone());
        for n in 1..=6 {
            assert_eq!(prod.count_words(n).unwrap(), ((n as u64) + 1).pow(2));
        }
        let w2 = prod.words(2).unwrap();
        assert_eq!(w2.len(), 9);
        for w in &w2 {
            let (a, b) = prod.unzip_word(w);
            assert!(s.contains_word(&a).unwrap() && s.contains_word(&b).unwrap());
        }
    }

    #[test]
    fn finiteness_guard_trips_on_plateau() {
        let a = binary();
        let p01 = parse_point(&a, "|1,0^omega <@0> |0,1^omega").unwrap();
        let s = ShiftSpace::orbit_closure("P2", a, vec![p01]).unwrap();
        assert_eq!(s.count_words(1).unwrap(), 2);
        assert_eq!(s.count_words(2).unwrap(), 2);
        assert!(s.check_infinite(8).is_err());
        assert!(sunny().check_infinite(8).is_ok());
    }

    #[test]
    fn entropy_certificates() {
        let s = sunny();
        assert_eq!(
            s.certify_zero_entropy(0.05, 10).unwrap(),
            ZeroEntropyCertificate::OrbitClosure
        );
        let f = full_shift();
        assert!(f.certify_zero_entropy(0.05, 10).is_err());
        let prod = ShiftSpace::product("SxS", s.clone(), s);
        assert!(matches!(
            prod.certify_zero_entropy(0.05, 10),
            Ok(ZeroEntropyCertificate::Product(..))
        ));
    }

    #[test]
    fn realize_centered_picks_least_candidate() {
        let s = sunny();
        let a = binary();
        // All-zero window: the all-zero periodic point is the least realizer.
        let w = a.parse_word("0,0,0,0,0").unwrap();
        let p = s.realize_centered(&w).unwrap();
        assert!(p.is_periodic());
        // A window pinning the 1 has exactly one realizer.
        let w = a.parse_word("0,0,0,1,0").unwrap();
        let p = s.realize_centered(&w).unwrap();
        assert_eq!(p.symbol_at(1), SymbolId(1));
        assert!(s.is_point_in(&p).unwrap());
        let bad = a.parse_word("1,0,1,0,0").unwrap();
        assert!(s.realize_centered(&bad).is_err());
    }

    #[test]
    fn realize_centered_sofic_produces_member_points() {
        let a = binary();
        let edges = vec![
            (0, SymbolId(0), 0),
            (0, SymbolId(1), 1),
            (1, SymbolId(0), 0),
        ];
        let aut = SoficAutomaton::new(vec!["z".into(), "o".into()], edges).unwrap();
        let s = ShiftSpace::sofic("golden", a.clone(), aut).unwrap();
        for w in s.words(5).unwrap() {
            let p = s.realize_centered(&w).unwrap();
            assert_eq!(p.window(-2, 2).unwrap(), w);
            assert!(s.is_point_in(&p).unwrap());
        }
    }

    #[test]
    fn zip_project_round_trip() {
        let s = sunny();
        let prod = ShiftSpace::product("SxS", s.clone(), s.clone());
        let a = binary();
        let x = parse_point(&a, "|0^omega <1@0> |0^omega").unwrap();
        let z = parse_point(&a, "|0^omega <0@0> |0^omega").unwrap();
        let p = prod.zip_points(&x.shift(2), &z).unwrap();
        assert_eq!(prod.project_point(&p, true).unwrap(), x.shift(2));
        assert_eq!(prod.project_point(&p, false).unwrap(), z);
        assert!(prod.is_point_in(&p).unwrap());
    }
}
